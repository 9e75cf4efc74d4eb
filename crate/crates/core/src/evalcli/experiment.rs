use std::io::Write;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dcesp::{solve_dcesp, AdmmConfig};
use crate::exact::{build_esp, solve_exact, ExactConfig};
use crate::model::{validate_solution, ResourceType, SlicingSolution, ValueMode};
use crate::scenario::{generate, Scenario, ScenarioError, ScenarioParams};
use crate::vesp::{prepare, solve_prepared, VespConfig};

use super::baseline::baseline_coupling_blind;

/// Fixed CSV header; `wall_time_s` is appended only when enabled.
pub const CSV_COLUMNS: [&str; 21] = [
    "study",
    "D_c",
    "K",
    "R",
    "epsilon",
    "replication",
    "seed",
    "solver",
    "status",
    "objective",
    "admitted",
    "admitted_pct",
    "func_evals",
    "bnb_nodes",
    "lp_pivots",
    "admm_iters",
    "converged",
    "repairs",
    "max_violation",
    "opt_ratio",
    "max_ratio",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Study {
    /// Networking and compute requests only; counts admitted slices.
    OverProvisioning,
    AdmittedCount,
    Profit,
    EpsilonSweep,
}

impl Study {
    pub fn name(self) -> &'static str {
        match self {
            Study::OverProvisioning => "over_provisioning",
            Study::AdmittedCount => "admitted_count",
            Study::Profit => "profit",
            Study::EpsilonSweep => "epsilon_sweep",
        }
    }

    pub fn default_mode(self) -> ValueMode {
        match self {
            Study::OverProvisioning | Study::AdmittedCount => ValueMode::Count,
            Study::Profit | Study::EpsilonSweep => ValueMode::Profit,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Oesp,
    Vesp,
    Dcesp,
    Baseline,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Oesp => "oesp",
            SolverKind::Vesp => "vesp",
            SolverKind::Dcesp => "dcesp",
            SolverKind::Baseline => "baseline",
        }
    }
}

fn default_solvers() -> Vec<SolverKind> {
    vec![SolverKind::Oesp, SolverKind::Vesp, SolverKind::Dcesp]
}
fn default_clusters() -> usize {
    5
}
fn default_epsilon() -> Vec<f64> {
    vec![0.1]
}
fn default_replications() -> u32 {
    1
}
fn default_penalty() -> f64 {
    1.0
}
fn default_max_iterations() -> u64 {
    500
}
fn default_escalation_after() -> u64 {
    AdmmConfig::default().escalation_after.unwrap_or(0)
}
fn default_escalation_factor() -> f64 {
    AdmmConfig::default().escalation_factor
}

/// One experiment, as read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub study: Study,
    #[serde(default = "default_solvers")]
    pub solvers: Vec<SolverKind>,
    #[serde(default = "default_clusters")]
    pub clusters: usize,
    /// Total node counts `D_c`; each must be a multiple of `clusters`.
    pub nodes: Vec<usize>,
    /// Request batch sizes `R`.
    pub requests: Vec<usize>,
    /// Similarity thresholds; one V-ESP row per value.
    #[serde(default = "default_epsilon")]
    pub epsilon: Vec<f64>,
    #[serde(default = "default_replications")]
    pub replications: u32,
    /// Replication `i` uses scenario seed `seed + i` at every grid point.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Defaults to the study's own mode.
    #[serde(default)]
    pub value_mode: Option<ValueMode>,
    /// Initial consensus penalty.
    #[serde(default = "default_penalty")]
    pub penalty: f64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: u64,
    /// Iteration after which the penalty grows by `escalation_factor`
    /// each iteration; a factor of 1 disables escalation.
    #[serde(default = "default_escalation_after")]
    pub escalation_after: u64,
    #[serde(default = "default_escalation_factor")]
    pub escalation_factor: f64,
    /// Appends a `wall_time_s` column, which breaks byte-level determinism.
    #[serde(default)]
    pub wall_time: bool,
    /// Generator settings; grid axes and seeds override their fields.
    #[serde(default)]
    pub scenario: ScenarioParams,
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment: {0}")]
    Spec(String),
    #[error("cannot parse experiment config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self, ExperimentError> {
        let spec: ExperimentSpec = toml::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |msg: String| Err(ExperimentError::Spec(msg));
        if self.solvers.is_empty() {
            return bad("solvers must not be empty".into());
        }
        if self.nodes.is_empty() || self.requests.is_empty() || self.epsilon.is_empty() {
            return bad("nodes, requests and epsilon must not be empty".into());
        }
        if self.replications == 0 {
            return bad("replications must be at least 1".into());
        }
        if self.clusters == 0 {
            return bad("clusters must be at least 1".into());
        }
        for &d in &self.nodes {
            if d == 0 || d % self.clusters != 0 {
                return bad(format!("D_c = {d} is not a positive multiple of K = {}", self.clusters));
            }
        }
        if let Some(e) = self.epsilon.iter().find(|e| !(e.is_finite() && **e >= 0.0)) {
            return bad(format!("epsilon {e} must be finite and non-negative"));
        }
        if !(self.penalty.is_finite() && self.penalty > 0.0) {
            return bad(format!("penalty {} must be positive", self.penalty));
        }
        if !(self.escalation_factor.is_finite() && self.escalation_factor >= 1.0) {
            return bad(format!("escalation_factor {} must be at least 1", self.escalation_factor));
        }
        Ok(())
    }

    pub fn mode(&self) -> ValueMode {
        self.value_mode.unwrap_or(self.study.default_mode())
    }

    /// Solvers in canonical order, without duplicates.
    pub fn solver_order(&self) -> Vec<SolverKind> {
        let mut s = self.solvers.clone();
        s.sort();
        s.dedup();
        s
    }

    fn scenario_params(&self, d_c: usize, r: usize, replication: u32) -> ScenarioParams {
        let mut p = self.scenario.clone();
        p.clusters = self.clusters;
        p.nodes_per_cluster = d_c / self.clusters;
        p.request_count = r;
        p.seed = self.seed.wrapping_add(u64::from(replication));
        if self.study == Study::OverProvisioning {
            p.request_types = vec![ResourceType::Networking, ResourceType::Compute];
        }
        p
    }
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    pub study: Study,
    pub d_c: usize,
    pub k: usize,
    pub r: usize,
    pub epsilon: Option<f64>,
    pub replication: u32,
    pub seed: u64,
    pub solver: SolverKind,
    /// `ok`, `not_converged`, or `error: ...`.
    pub status: String,
    pub objective: f64,
    pub admitted: usize,
    pub admitted_pct: f64,
    pub func_evals: u64,
    pub bnb_nodes: u64,
    pub lp_pivots: u64,
    pub admm_iters: u64,
    pub converged: Option<bool>,
    pub repairs: u64,
    pub max_violation: f64,
    pub opt_ratio: Option<f64>,
    /// Largest consumption/capacity ratio under the true collateral.
    pub max_ratio: f64,
    pub wall_time_s: f64,
}

impl ExperimentRow {
    fn record(&self, wall_time: bool) -> Vec<String> {
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        let mut rec = vec![
            self.study.name().to_string(),
            self.d_c.to_string(),
            self.k.to_string(),
            self.r.to_string(),
            opt(self.epsilon),
            self.replication.to_string(),
            self.seed.to_string(),
            self.solver.name().to_string(),
            self.status.clone(),
            self.objective.to_string(),
            self.admitted.to_string(),
            self.admitted_pct.to_string(),
            self.func_evals.to_string(),
            self.bnb_nodes.to_string(),
            self.lp_pivots.to_string(),
            self.admm_iters.to_string(),
            self.converged.map_or(String::new(), |c| c.to_string()),
            self.repairs.to_string(),
            self.max_violation.to_string(),
            opt(self.opt_ratio),
            self.max_ratio.to_string(),
        ];
        if wall_time {
            rec.push(self.wall_time_s.to_string());
        }
        rec
    }
}

struct RunContext<'a> {
    spec: &'a ExperimentSpec,
    scenario: &'a Scenario,
    d_c: usize,
    replication: u32,
    seed: u64,
}

impl RunContext<'_> {
    fn row(&self, solver: SolverKind, epsilon: Option<f64>, outcome: Result<SlicingSolution, String>) -> ExperimentRow {
        let r = self.scenario.requests.len();
        let mut row = ExperimentRow {
            study: self.spec.study,
            d_c: self.d_c,
            k: self.spec.clusters,
            r,
            epsilon,
            replication: self.replication,
            seed: self.seed,
            solver,
            status: String::new(),
            objective: 0.0,
            admitted: 0,
            admitted_pct: 0.0,
            func_evals: 0,
            bnb_nodes: 0,
            lp_pivots: 0,
            admm_iters: 0,
            converged: None,
            repairs: 0,
            max_violation: 0.0,
            opt_ratio: None,
            max_ratio: 0.0,
            wall_time_s: 0.0,
        };
        let sol = match outcome {
            Ok(sol) => sol,
            Err(e) => {
                row.status = format!("error: {e}");
                return row;
            }
        };
        row.status = match sol.stats.converged {
            Some(false) => "not_converged".into(),
            _ => "ok".into(),
        };
        row.objective = sol.objective;
        row.admitted = sol.admitted_count();
        row.admitted_pct = if r > 0 { 100.0 * row.admitted as f64 / r as f64 } else { 0.0 };
        row.func_evals = sol.stats.function_evaluations();
        row.bnb_nodes = sol.stats.bnb_nodes;
        row.lp_pivots = sol.stats.lp_pivots;
        row.admm_iters = sol.stats.admm_iterations;
        row.converged = sol.stats.converged;
        row.repairs = sol.stats.repairs;
        row.wall_time_s = sol.stats.wall_time.as_secs_f64();
        match validate_solution(&self.scenario.infra, &self.scenario.requests, &sol) {
            Ok(report) => {
                row.max_violation = report.max_violation();
                row.max_ratio = report.max_ratio();
            }
            Err(e) => row.status = format!("error: {e}"),
        }
        row
    }

    fn run(&self) -> Vec<ExperimentRow> {
        let infra = &self.scenario.infra;
        let requests = &self.scenario.requests;
        let mode = self.spec.mode();
        let exact = ExactConfig::default();
        let mut rows = Vec::new();
        for solver in self.spec.solver_order() {
            match solver {
                SolverKind::Oesp => {
                    let out = build_esp(infra, requests, mode)
                        .and_then(|inst| solve_exact(&inst, &exact))
                        .map_err(|e| e.to_string());
                    rows.push(self.row(solver, None, out));
                }
                SolverKind::Vesp => {
                    for &eps in &self.spec.epsilon {
                        let out = prepare(infra, eps)
                            .and_then(|p| solve_prepared(&p, infra, requests, mode, &VespConfig::default()))
                            .map_err(|e| e.to_string());
                        rows.push(self.row(solver, Some(eps), out));
                    }
                }
                SolverKind::Dcesp => {
                    let cfg = AdmmConfig {
                        initial_penalty: self.spec.penalty,
                        max_iterations: self.spec.max_iterations,
                        escalation_after: Some(self.spec.escalation_after),
                        escalation_factor: self.spec.escalation_factor,
                        ..Default::default()
                    };
                    let out = solve_dcesp(infra, requests, mode, &cfg)
                        .map(|(sol, _)| sol)
                        .map_err(|e| e.to_string());
                    rows.push(self.row(solver, None, out));
                }
                SolverKind::Baseline => {
                    let out = baseline_coupling_blind(infra, requests, mode, &exact)
                        .map(|(sol, _)| sol)
                        .map_err(|e| e.to_string());
                    rows.push(self.row(solver, None, out));
                }
            }
        }
        let optimum = rows
            .iter()
            .find(|r| r.solver == SolverKind::Oesp && r.status == "ok")
            .map(|r| r.objective);
        if let Some(opt) = optimum.filter(|o| *o > 0.0) {
            for row in rows.iter_mut().filter(|r| !r.status.starts_with("error")) {
                row.opt_ratio = Some(row.objective / opt);
            }
        }
        rows
    }
}

/// Runs every grid point and replication. Runs execute in parallel; the
/// returned rows are ordered by (D_c, R, replication, solver, epsilon).
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<ExperimentRow>, ExperimentError> {
    spec.validate()?;
    let mut jobs = Vec::new();
    for &d_c in &spec.nodes {
        for &r in &spec.requests {
            for rep in 0..spec.replications {
                jobs.push((d_c, r, rep));
            }
        }
    }
    let batches: Vec<Result<Vec<ExperimentRow>, ExperimentError>> = jobs
        .par_iter()
        .map(|&(d_c, r, replication)| {
            let params = spec.scenario_params(d_c, r, replication);
            let scenario = generate(&params)?;
            let ctx = RunContext {
                spec,
                scenario: &scenario,
                d_c,
                replication,
                seed: params.seed,
            };
            Ok(ctx.run())
        })
        .collect();
    let mut rows = Vec::new();
    for b in batches {
        rows.extend(b?);
    }
    Ok(rows)
}

pub fn write_csv<W: Write>(out: W, rows: &[ExperimentRow], wall_time: bool) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = CSV_COLUMNS.to_vec();
    if wall_time {
        header.push("wall_time_s");
    }
    w.write_record(&header)?;
    for row in rows {
        w.write_record(row.record(wall_time))?;
    }
    w.flush()?;
    Ok(())
}
