use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::dcesp::{solve_dcesp, AdmmConfig};
use crate::exact::{build_esp, solve_exact, ExactConfig};
use crate::model::{validate_solution, SlicingSolution, ValueMode};
use crate::scenario::{generate, Scenario, ScenarioParams};
use crate::vesp::{solve_vesp, VespConfig};

use super::baseline::baseline_coupling_blind;
use super::experiment::{run_experiment, write_csv, ExperimentSpec, SolverKind};

const EXIT_OK: i32 = 0;
const EXIT_USAGE: i32 = 1;
const EXIT_INFEASIBLE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "edge-slicing", version, about = "Coupling-aware edge slicing solvers and experiments")]
struct Cli {
    /// Seed for every random draw.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a scenario file.
    Generate {
        /// Scenario parameters as TOML; flags below override it.
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long)]
        clusters: Option<usize>,
        #[arg(long)]
        nodes_per_cluster: Option<usize>,
        #[arg(long)]
        requests: Option<usize>,
    },
    /// Solve one scenario and print the solution as JSON.
    Solve {
        /// Scenario file; a default scenario drawn from --seed when omitted.
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "oesp")]
        solver: SolverArg,
        #[arg(long, value_enum, default_value = "profit")]
        mode: ModeArg,
        /// Similarity threshold for vesp.
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        /// Initial penalty for dcesp.
        #[arg(long, default_value_t = 1.0)]
        penalty: f64,
        /// Iteration after which the dcesp penalty also grows by --escalation-factor.
        #[arg(long, default_value_t = 30)]
        escalation_after: u64,
        /// Per-iteration dcesp penalty growth after warm-up; 1 disables it.
        #[arg(long, default_value_t = 1.2)]
        escalation_factor: f64,
        /// Writes the dcesp convergence trace as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Run an experiment described by a TOML config and write CSV.
    Experiment {
        #[arg(long)]
        config: PathBuf,
    },
    /// Check a solution file against a scenario.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        solution: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SolverArg {
    Oesp,
    Vesp,
    Dcesp,
    Baseline,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Profit,
    Count,
}

impl From<ModeArg> for ValueMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Profit => ValueMode::Profit,
            ModeArg::Count => ValueMode::Count,
        }
    }
}

impl From<SolverArg> for SolverKind {
    fn from(s: SolverArg) -> Self {
        match s {
            SolverArg::Oesp => SolverKind::Oesp,
            SolverArg::Vesp => SolverKind::Vesp,
            SolverArg::Dcesp => SolverKind::Dcesp,
            SolverArg::Baseline => SolverKind::Baseline,
        }
    }
}

/// Failure with its exit code.
struct Failure {
    code: i32,
    message: String,
}

fn usage(message: impl std::fmt::Display) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.to_string(),
    }
}

fn emit(out: &Option<PathBuf>, stdout: &mut dyn Write, text: &[u8]) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| usage(format!("cannot write {}: {e}", path.display()))),
        None => stdout.write_all(text).map_err(|e| usage(format!("cannot write output: {e}"))),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn load_scenario(path: &Path) -> Result<Scenario, Failure> {
    Scenario::from_json(&read(path)?).map_err(|e| usage(format!("{}: {e}", path.display())))
}

/// Runs the command line `argv` (program name first) and returns the exit
/// code: 0 on success, 1 on usage or input errors, 2 when a solution is
/// infeasible or fails validation.
pub fn cli_main<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = sink.write_all(rendered.as_bytes());
            return code;
        }
    };
    match run(cli, stdout, stderr) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

fn run(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), Failure> {
    match cli.command {
        Command::Generate {
            params,
            clusters,
            nodes_per_cluster,
            requests,
        } => {
            let mut p: ScenarioParams = match params {
                Some(path) => toml::from_str(&read(&path)?).map_err(|e| usage(format!("{}: {e}", path.display())))?,
                None => ScenarioParams::default(),
            };
            p.clusters = clusters.unwrap_or(p.clusters);
            p.nodes_per_cluster = nodes_per_cluster.unwrap_or(p.nodes_per_cluster);
            p.request_count = requests.unwrap_or(p.request_count);
            p.seed = cli.seed.unwrap_or(p.seed);
            let scenario = generate(&p).map_err(usage)?;
            emit(&cli.out, stdout, scenario.to_json().as_bytes())
        }
        Command::Solve {
            scenario,
            solver,
            mode,
            epsilon,
            penalty,
            escalation_after,
            escalation_factor,
            trace,
        } => {
            let sc = match scenario {
                Some(path) => load_scenario(&path)?,
                None => generate(&ScenarioParams {
                    seed: cli.seed.unwrap_or(0),
                    ..Default::default()
                })
                .map_err(usage)?,
            };
            let mode = ValueMode::from(mode);
            let (infra, requests) = (&sc.infra, &sc.requests[..]);
            let exact = ExactConfig::default();
            let sol: SlicingSolution = match SolverKind::from(solver) {
                SolverKind::Oesp => build_esp(infra, requests, mode)
                    .and_then(|inst| solve_exact(&inst, &exact))
                    .map_err(usage)?,
                SolverKind::Vesp => solve_vesp(infra, requests, epsilon, mode, &VespConfig::default()).map_err(usage)?,
                SolverKind::Dcesp => {
                    let cfg = AdmmConfig {
                        initial_penalty: penalty,
                        escalation_after: Some(escalation_after),
                        escalation_factor,
                        ..Default::default()
                    };
                    let (sol, tr) = solve_dcesp(infra, requests, mode, &cfg).map_err(usage)?;
                    if let Some(path) = trace {
                        fs::write(&path, tr.to_csv())
                            .map_err(|e| usage(format!("cannot write {}: {e}", path.display())))?;
                    }
                    sol
                }
                SolverKind::Baseline => baseline_coupling_blind(infra, requests, mode, &exact).map_err(usage)?.0,
            };
            let json = serde_json::to_string_pretty(&sol).expect("solutions serialize");
            emit(&cli.out, stdout, format!("{json}\n").as_bytes())?;
            let report = validate_solution(infra, requests, &sol).map_err(usage)?;
            if !report.feasible {
                for v in report.violations() {
                    let _ = writeln!(
                        stderr,
                        "node {} type {}: consumption {} exceeds capacity {}",
                        v.node,
                        v.rtype.symbol(),
                        v.consumption,
                        v.capacity
                    );
                }
                return Err(Failure {
                    code: EXIT_INFEASIBLE,
                    message: format!("solution violates capacity by up to {}", report.max_violation()),
                });
            }
            Ok(())
        }
        Command::Experiment { config } => {
            let mut spec = ExperimentSpec::from_toml(&read(&config)?).map_err(usage)?;
            if let Some(seed) = cli.seed {
                spec.seed = seed;
            }
            let rows = run_experiment(&spec).map_err(usage)?;
            let mut buf = Vec::new();
            write_csv(&mut buf, &rows, spec.wall_time).map_err(usage)?;
            let out = cli.out.or(spec.output.clone());
            emit(&out, stdout, &buf)
        }
        Command::Validate { scenario, solution } => {
            let sc = load_scenario(&scenario)?;
            let sol: SlicingSolution = serde_json::from_str(&read(&solution)?)
                .map_err(|e| usage(format!("{}: {e}", solution.display())))?;
            let report = validate_solution(&sc.infra, &sc.requests, &sol).map_err(usage)?;
            let mut text = String::new();
            for v in report.violations() {
                text.push_str(&format!(
                    "violation node {} type {}: consumption {} capacity {} excess {}\n",
                    v.node,
                    v.rtype.symbol(),
                    v.consumption,
                    v.capacity,
                    v.excess
                ));
            }
            for d in report.demand_residuals.iter().filter(|d| d.residual > crate::model::TOL_FEAS) {
                text.push_str(&format!(
                    "demand request {} cluster {}: residual {}\n",
                    d.request, d.cluster, d.residual
                ));
            }
            for (r, n, x) in &report.negative_allocations {
                text.push_str(&format!("negative allocation request {r} node {n}: {x}\n"));
            }
            text.push_str(if report.feasible { "feasible\n" } else { "infeasible\n" });
            emit(&cli.out, stdout, text.as_bytes())?;
            if report.feasible {
                Ok(())
            } else {
                Err(Failure {
                    code: EXIT_INFEASIBLE,
                    message: "solution failed validation".into(),
                })
            }
        }
    }
}
