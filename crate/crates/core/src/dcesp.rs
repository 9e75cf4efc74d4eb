//! Distributed consensus solver.
//!
//! Every cluster keeps its own copy of the admission vector and solves a
//! local problem over its own nodes only. Copies are driven to agreement by
//! dual variables on each ordered cluster pair and an adaptive penalty.
//! Clusters update sequentially in ascending order within one iteration.
//! A request is finally admitted iff every cluster admits it.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use thiserror::Error;

use crate::exact::{solve_exact, EspInstance, ExactConfig, ExactError};
use crate::model::{
    ClusterId, EdgeNode, Infrastructure, ModelError, NodeId, RequestId, SliceRequest, SlicingSolution, SolverStats,
    ValueMode,
};

/// Threshold on the primal residual at consensus.
pub const CONSENSUS_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DcespError {
    #[error("penalty must be finite and positive, got {0}")]
    Penalty(f64),
    #[error(transparent)]
    Exact(#[from] ExactError),
    #[error("escalation factor must be finite and at least 1, got {0}")]
    Escalation(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmmConfig {
    pub initial_penalty: f64,
    pub max_iterations: u64,
    /// Enables the residual-balancing penalty update.
    pub adaptive_penalty: bool,
    /// Iteration after which the penalty is also multiplied by
    /// `escalation_factor` every iteration; `None` disables escalation.
    pub escalation_after: Option<u64>,
    pub escalation_factor: f64,
    pub exact: ExactConfig,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        AdmmConfig {
            initial_penalty: 1.0,
            max_iterations: 500,
            adaptive_penalty: true,
            escalation_after: Some(30),
            escalation_factor: 1.2,
            exact: ExactConfig::default(),
        }
    }
}

/// `lambda[r][k][m]` for every request and ordered cluster pair `k != m`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualVariables {
    clusters: usize,
    values: Vec<f64>,
}

impl DualVariables {
    pub fn zeros(requests: usize, clusters: usize) -> Self {
        DualVariables {
            clusters,
            values: vec![0.0; requests * clusters * clusters],
        }
    }

    pub fn num_clusters(&self) -> usize {
        self.clusters
    }

    fn index(&self, r: usize, k: ClusterId, m: ClusterId) -> usize {
        (r * self.clusters + k) * self.clusters + m
    }

    pub fn get(&self, r: usize, k: ClusterId, m: ClusterId) -> f64 {
        self.values[self.index(r, k, m)]
    }

    pub fn set(&mut self, r: usize, k: ClusterId, m: ClusterId, value: f64) {
        let i = self.index(r, k, m);
        self.values[i] = value;
    }
}

/// Number of clusters other than `k` whose copy admits request `r`.
pub fn phi(y: &[Vec<bool>], r: usize, k: ClusterId) -> usize {
    y.iter().enumerate().filter(|&(m, ym)| m != k && ym[r]).count()
}

/// `v - sum_{m != k} (lambda[r][k][m] - lambda[r][m][k]) + penalty * phi`.
pub fn adjusted_value(value: f64, r: usize, k: ClusterId, phi: usize, duals: &DualVariables, penalty: f64) -> f64 {
    let coupling: f64 = (0..duals.num_clusters())
        .filter(|&m| m != k)
        .map(|m| duals.get(r, k, m) - duals.get(r, m, k))
        .sum();
    value - coupling + penalty * phi as f64
}

/// Everything one cluster may see: its own nodes and the local demand of
/// each request. Built by the driver; the subproblem never sees other
/// clusters.
#[derive(Debug, Clone)]
pub struct ClusterView {
    pub cluster: ClusterId,
    infra: Infrastructure,
    /// Requests with their demand reduced to this cluster.
    requests: Vec<SliceRequest>,
}

impl ClusterView {
    pub fn extract(infra: &Infrastructure, requests: &[SliceRequest], k: ClusterId) -> Result<Self, ModelError> {
        let nodes: Vec<EdgeNode> = infra.cluster_nodes(k).cloned().collect();
        let local = requests
            .iter()
            .map(|r| {
                let mut lr = r.clone();
                lr.demand = vec![r.demand[k]];
                lr
            })
            .collect();
        Ok(ClusterView {
            cluster: k,
            infra: Infrastructure::new(vec![nodes])?,
            requests: local,
        })
    }

    pub fn local_demand(&self, r: usize) -> f64 {
        self.requests[r].demand[0]
    }

    pub fn num_requests(&self) -> usize {
        self.requests.len()
    }
}

/// Local admission copy and allocation of one cluster.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LocalSolution {
    pub admission: Vec<bool>,
    pub allocation: BTreeMap<(RequestId, NodeId), f64>,
    pub stats: SolverStats,
}

/// Maximizes `sum (v_adj - 2 penalty) y` over the cluster's local
/// constraints. Requests without local demand are admitted iff their
/// effective value is positive.
pub fn solve_cluster_subproblem(
    view: &ClusterView,
    adjusted: &[f64],
    penalty: f64,
    cfg: &ExactConfig,
) -> Result<LocalSolution, DcespError> {
    let effective: Vec<f64> = adjusted.iter().map(|v| v - 2.0 * penalty).collect();
    let mut admission = vec![false; view.num_requests()];
    let mut picked = Vec::new();
    for (ri, &e) in effective.iter().enumerate() {
        if e > 0.0 {
            if view.local_demand(ri) > 0.0 {
                picked.push(ri);
            } else {
                admission[ri] = true;
            }
        }
    }
    let mut out = LocalSolution::default();
    if !picked.is_empty() {
        let reqs: Vec<SliceRequest> = picked.iter().map(|&ri| view.requests[ri].clone()).collect();
        let values = picked.iter().map(|&ri| effective[ri]).collect();
        let inst = EspInstance::with_values(&view.infra, &reqs, values)?;
        let sol = solve_exact(&inst, cfg)?;
        for &ri in &picked {
            admission[ri] = sol.is_admitted(view.requests[ri].id);
        }
        out.allocation = sol.allocation;
        out.stats = sol.stats;
    }
    out.admission = admission;
    Ok(out)
}

/// `lambda[r][k][m] += penalty * (y[k][r] - y[m][r])` for all ordered pairs.
pub fn update_duals(duals: &mut DualVariables, y: &[Vec<bool>], penalty: f64) {
    let clusters = duals.num_clusters();
    let requests = y.first().map_or(0, Vec::len);
    for r in 0..requests {
        for k in 0..clusters {
            for m in 0..clusters {
                if k != m {
                    let step = penalty * (f64::from(u8::from(y[k][r])) - f64::from(u8::from(y[m][r])));
                    duals.set(r, k, m, duals.get(r, k, m) + step);
                }
            }
        }
    }
}

/// Residual balancing: double when the primal residual dominates by more
/// than 10x, halve when the dual residual does.
pub fn update_penalty(penalty: f64, primal: f64, dual: f64) -> f64 {
    if primal > 10.0 * dual {
        penalty * 2.0
    } else if dual > 10.0 * primal {
        penalty / 2.0
    } else {
        penalty
    }
}

/// `sqrt(sum over requests and ordered pairs of (y_k - y_m)^2)`.
pub fn primal_residual(y: &[Vec<bool>]) -> f64 {
    let mut total = 0usize;
    for (k, yk) in y.iter().enumerate() {
        for (m, ym) in y.iter().enumerate() {
            if k != m {
                total += yk.iter().zip(ym).filter(|(a, b)| a != b).count();
            }
        }
    }
    (total as f64).sqrt()
}

/// `penalty * ||y(t) - y(t-1)||` over all cluster copies.
pub fn dual_residual(y: &[Vec<bool>], previous: &[Vec<bool>], penalty: f64) -> f64 {
    let changed: usize = y
        .iter()
        .zip(previous)
        .map(|(a, b)| a.iter().zip(b).filter(|(x, y)| x != y).count())
        .sum();
    penalty * (changed as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iteration: u64,
    /// Objective of the unanimous-AND rounding of this iterate.
    pub objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// Penalty used during this iteration.
    pub penalty: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConvergenceTrace {
    pub rows: Vec<TraceRow>,
}

impl ConvergenceTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,objective,r_p,r_d,penalty\n");
        for row in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{}",
                row.iteration, row.objective, row.primal_residual, row.dual_residual, row.penalty
            )
            .expect("writing to a String cannot fail");
        }
        out
    }
}

/// Driver-owned state of the consensus iteration.
#[derive(Debug, Clone)]
pub struct AdmmState {
    /// `y[k][r]`: cluster `k`'s copy of the admission vector.
    pub y: Vec<Vec<bool>>,
    pub allocations: Vec<BTreeMap<(RequestId, NodeId), f64>>,
    pub duals: DualVariables,
    pub penalty: f64,
    pub iteration: u64,
    pub primal_residual: f64,
    pub dual_residuals: Vec<f64>,
}

impl AdmmState {
    pub fn new(requests: usize, clusters: usize, penalty: f64) -> Self {
        AdmmState {
            y: vec![vec![false; requests]; clusters],
            allocations: vec![BTreeMap::new(); clusters],
            duals: DualVariables::zeros(requests, clusters),
            penalty,
            iteration: 0,
            primal_residual: 0.0,
            dual_residuals: Vec::new(),
        }
    }

    pub fn at_consensus(&self) -> bool {
        self.y.windows(2).all(|w| w[0] == w[1])
    }

    /// Unanimous-AND rounding with each cluster's own allocation.
    pub fn rounded(&self, requests: &[SliceRequest], mode: ValueMode) -> SlicingSolution {
        let admitted: Vec<bool> = (0..requests.len()).map(|r| self.y.iter().all(|yk| yk[r])).collect();
        let mut sol = SlicingSolution {
            admission: requests.iter().zip(&admitted).map(|(r, &a)| (r.id, a)).collect(),
            ..Default::default()
        };
        for alloc in &self.allocations {
            for (&(rid, nid), &x) in alloc {
                if sol.is_admitted(rid) {
                    sol.allocation.insert((rid, nid), x);
                }
            }
        }
        sol.recompute_objective(requests, mode);
        sol
    }
}

pub fn solve_dcesp(
    infra: &Infrastructure,
    requests: &[SliceRequest],
    mode: ValueMode,
    cfg: &AdmmConfig,
) -> Result<(SlicingSolution, ConvergenceTrace), DcespError> {
    let start = Instant::now();
    if !(cfg.initial_penalty.is_finite() && cfg.initial_penalty > 0.0) {
        return Err(DcespError::Penalty(cfg.initial_penalty));
    }
    if !(cfg.escalation_factor.is_finite() && cfg.escalation_factor >= 1.0) {
        return Err(DcespError::Escalation(cfg.escalation_factor));
    }
    infra.check_requests(requests)?;
    let clusters = infra.num_clusters();
    let views: Vec<ClusterView> = (0..clusters)
        .map(|k| ClusterView::extract(infra, requests, k))
        .collect::<Result<_, _>>()?;
    let values: Vec<f64> = requests.iter().map(|r| mode.value_of(r)).collect();

    let mut state = AdmmState::new(requests.len(), clusters, cfg.initial_penalty);
    let mut stats = SolverStats::default();
    let mut trace = ConvergenceTrace::default();
    let mut best = state.rounded(requests, mode);
    let mut converged = false;

    while state.iteration < cfg.max_iterations {
        state.iteration += 1;
        let previous = state.y.clone();
        for (k, view) in views.iter().enumerate() {
            let adjusted: Vec<f64> = (0..requests.len())
                .map(|r| adjusted_value(values[r], r, k, phi(&state.y, r, k), &state.duals, state.penalty))
                .collect();
            let local = solve_cluster_subproblem(view, &adjusted, state.penalty, &cfg.exact)?;
            stats.absorb(&local.stats);
            state.y[k] = local.admission;
            state.allocations[k] = local.allocation;
        }
        update_duals(&mut state.duals, &state.y, state.penalty);
        state.primal_residual = primal_residual(&state.y);
        let rd = dual_residual(&state.y, &previous, state.penalty);
        state.dual_residuals.push(rd);

        let rounded = state.rounded(requests, mode);
        trace.rows.push(TraceRow {
            iteration: state.iteration,
            objective: rounded.objective,
            primal_residual: state.primal_residual,
            dual_residual: rd,
            penalty: state.penalty,
        });
        if state.at_consensus() && state.primal_residual <= CONSENSUS_TOL {
            best = rounded;
            converged = true;
            break;
        }
        if rounded.objective > best.objective {
            best = rounded;
        }
        if cfg.adaptive_penalty {
            state.penalty = update_penalty(state.penalty, state.primal_residual, rd);
        }
        if cfg.escalation_after.is_some_and(|after| state.iteration > after) {
            state.penalty *= cfg.escalation_factor;
        }
    }

    best.stats = stats;
    best.stats.admm_iterations = state.iteration;
    best.stats.converged = Some(converged);
    best.stats.wall_time = start.elapsed();
    Ok((best, trace))
}
