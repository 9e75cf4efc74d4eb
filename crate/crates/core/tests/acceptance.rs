//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use edge_slicing::dcesp::{solve_dcesp, AdmmConfig};
use edge_slicing::evalcli::{baseline_coupling_blind, run_experiment, write_csv, ExperimentSpec};
use edge_slicing::exact::{brute_force, build_esp, solve_exact, ExactConfig};
use edge_slicing::linprog::{solve_lp, LpStatus};
use edge_slicing::scenario::{generate, Scenario, ScenarioParams};
use edge_slicing::vesp::{partition, prepare, solve_prepared, VespConfig};
use edge_slicing::{validate_solution, ResourceType, SlicingSolution, ValueMode};

type Outcome = Result<String, String>;

fn scenario(clusters: usize, npc: usize, requests: usize, seed: u64) -> Scenario {
    generate(&ScenarioParams {
        clusters,
        nodes_per_cluster: npc,
        request_count: requests,
        seed,
        ..Default::default()
    })
    .expect("valid parameters")
}

fn oesp(sc: &Scenario, mode: ValueMode) -> SlicingSolution {
    solve_exact(&build_esp(&sc.infra, &sc.requests, mode).unwrap(), &ExactConfig::default()).unwrap()
}

fn vesp(sc: &Scenario, eps: f64, mode: ValueMode) -> SlicingSolution {
    let prepared = prepare(&sc.infra, eps).unwrap();
    solve_prepared(&prepared, &sc.infra, &sc.requests, mode, &VespConfig::default()).unwrap()
}

fn max_violation(sc: &Scenario, sol: &SlicingSolution) -> f64 {
    validate_solution(&sc.infra, &sc.requests, sol).unwrap().max_violation()
}

fn feasible(sc: &Scenario, sol: &SlicingSolution) -> bool {
    validate_solution(&sc.infra, &sc.requests, sol).unwrap().feasible
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Branch and bound against exhaustive enumeration on tiny instances.
fn oracle_equivalence() -> Outcome {
    let mut worst = 0.0f64;
    let mut runs = 0;
    for seed in 0..60u64 {
        let clusters = 1 + (seed % 2) as usize;
        let npc = if clusters == 1 { 4 } else { 2 };
        let sc = scenario(clusters, npc, 6, seed);
        for mode in [ValueMode::Profit, ValueMode::Count] {
            let inst = build_esp(&sc.infra, &sc.requests, mode).unwrap();
            let bb = solve_exact(&inst, &ExactConfig::default()).unwrap();
            let bf = brute_force(&inst).unwrap();
            if !feasible(&sc, &bb) || !feasible(&sc, &bf) {
                return Err(format!("seed {seed} {mode:?}: infeasible solution"));
            }
            worst = worst.max((bb.objective - bf.objective).abs());
            runs += 1;
        }
    }
    check(worst <= 1e-6, format!("{runs} instances, max |B&B - brute force| = {worst:.2e}"))
}

/// O-ESP, V-ESP and DC-ESP never exceed any capacity.
fn zero_over_provisioning() -> Outcome {
    let mut worst = 0.0f64;
    let mut not_converged = 0;
    for seed in 0..100u64 {
        let requests = if seed % 2 == 0 { 8 } else { 12 };
        let sc = scenario(5, 5, requests, 1000 + seed);
        let o = oesp(&sc, ValueMode::Profit);
        let v = vesp(&sc, 0.1, ValueMode::Profit);
        let (d, _) = solve_dcesp(&sc.infra, &sc.requests, ValueMode::Profit, &AdmmConfig::default()).unwrap();
        if d.stats.converged != Some(true) {
            not_converged += 1;
        }
        for sol in [&o, &v, &d] {
            worst = worst.max(max_violation(&sc, sol));
        }
    }
    check(
        worst <= 1e-6,
        format!("100 scenarios x 3 solvers, max violation {worst:.2e} ({not_converged} DC-ESP runs not converged)"),
    )
}

/// The coupling-blind baseline overloads nodes under the true collateral.
fn baseline_over_provisioning() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for requests in [10, 15] {
        let mut over = 0;
        let mut peak = 0.0f64;
        let runs = 20;
        for seed in 0..runs {
            let sc = generate(&ScenarioParams {
                nodes_per_cluster: 5,
                request_count: requests,
                demand_intensity: 1.0,
                request_types: vec![ResourceType::Networking, ResourceType::Compute],
                seed: 2000 + seed,
                ..Default::default()
            })
            .unwrap();
            let (_, report) =
                baseline_coupling_blind(&sc.infra, &sc.requests, ValueMode::Count, &ExactConfig::default()).unwrap();
            let ratio = report.max_ratio();
            if ratio > 1.0 {
                over += 1;
            }
            peak = peak.max(ratio);
        }
        ok &= over as f64 >= 0.9 * runs as f64 && peak >= 1.5;
        lines.push(format!("R={requests}: ratio > 1 in {over}/{runs}, peak {peak:.2}"));
    }
    check(ok, lines.join("; "))
}

/// V-ESP at epsilon 0.1 stays close to the optimum.
fn vesp_optimality() -> Outcome {
    let mut ratios = Vec::new();
    for npc in [5, 10, 15] {
        for seed in 0..6u64 {
            let sc = scenario(5, npc, 15, 3000 + seed);
            let o = oesp(&sc, ValueMode::Profit);
            let v = vesp(&sc, 0.1, ValueMode::Profit);
            if o.objective > 0.0 {
                ratios.push(v.objective / o.objective);
            }
        }
    }
    let m = mean(&ratios);
    check(m >= 0.80, format!("{} runs, mean ratio {m:.3}", ratios.len()))
}

/// Function evaluations fall as epsilon grows.
fn vesp_complexity() -> Outcome {
    let eps = [0.0, 0.3, 0.6, 0.9];
    let mut fe = [0.0; 4];
    let seeds = 5;
    for seed in 0..seeds {
        let sc = scenario(5, 10, 15, 4000 + seed);
        for (i, e) in eps.iter().enumerate() {
            fe[i] += vesp(&sc, *e, ValueMode::Profit).stats.function_evaluations() as f64 / seeds as f64;
        }
    }
    let monotone = fe.windows(2).all(|w| w[1] <= w[0]);
    let ratio = fe[0] / fe[3];
    check(
        monotone && fe[3] < fe[0] && ratio >= 2.0,
        format!("mean FE {fe:.0?}, FE(0)/FE(0.9) = {ratio:.2}"),
    )
}

/// DC-ESP converges and lands near the optimum.
fn dcesp_quality() -> Outcome {
    let mut ratios = Vec::new();
    let mut converged = 0;
    let mut runs = 0;
    let mut infeasible = 0;
    for (npc, requests, seeds) in [(5, 12, 20u64), (10, 15, 10)] {
        for seed in 0..seeds {
            let sc = scenario(5, npc, requests, 5000 + seed);
            let o = oesp(&sc, ValueMode::Profit);
            let (d, _) = solve_dcesp(&sc.infra, &sc.requests, ValueMode::Profit, &AdmmConfig::default()).unwrap();
            runs += 1;
            if !feasible(&sc, &d) {
                infeasible += 1;
            }
            if d.stats.converged == Some(true) {
                converged += 1;
                if o.objective > 0.0 {
                    ratios.push(d.objective / o.objective);
                }
            }
        }
    }
    let m = mean(&ratios);
    let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    check(
        converged as f64 >= 0.8 * runs as f64 && m >= 0.75 && infeasible == 0,
        format!("converged {converged}/{runs}, mean ratio {m:.3} (min {min:.3}), infeasible {infeasible}"),
    )
}

/// epsilon = 0 and K = 1 reduce to the exact solver.
fn reduction_identities() -> Outcome {
    for seed in 0..20u64 {
        let sc = scenario(3, 4, 8, 6000 + seed);
        let p = partition(&sc.infra, 0.0).unwrap();
        if p.total_groups() != sc.infra.num_nodes() {
            return Err(format!("seed {seed}: duplicate nodes at epsilon 0"));
        }
        let o = oesp(&sc, ValueMode::Profit);
        let v = vesp(&sc, 0.0, ValueMode::Profit);
        if v.admission != o.admission {
            return Err(format!("seed {seed}: V-ESP at epsilon 0 differs from O-ESP"));
        }

        let single = scenario(1, 6, 8, 6500 + seed);
        let o = oesp(&single, ValueMode::Profit);
        let cfg = AdmmConfig {
            initial_penalty: 1e-9,
            ..Default::default()
        };
        let (d, _) = solve_dcesp(&single.infra, &single.requests, ValueMode::Profit, &cfg).unwrap();
        if d.admission != o.admission || d.stats.admm_iterations != 1 {
            return Err(format!(
                "seed {seed}: K = 1 DC-ESP differs from O-ESP after {} iterations",
                d.stats.admm_iterations
            ));
        }
    }
    Ok("20 seeds each: V-ESP(0) = O-ESP, DC-ESP(K=1) = O-ESP in one iteration".into())
}

/// The simplex engine agrees with vertex enumeration.
fn lp_engine() -> Outcome {
    let mut counts = [0usize; 3];
    for seed in 0..250u64 {
        let lp = common::random_lp(seed);
        let (status, best) = lp.oracle();
        let r = solve_lp(&lp.to_problem()).unwrap();
        if r.status != status {
            return Err(format!("seed {seed}: {:?} vs oracle {status:?}", r.status));
        }
        if status == LpStatus::Optimal && (r.objective - best).abs() > 1e-6 {
            return Err(format!("seed {seed}: objective {} vs oracle {best}", r.objective));
        }
        counts[match status {
            LpStatus::Optimal => 0,
            LpStatus::Infeasible => 1,
            LpStatus::Unbounded => 2,
        }] += 1;
    }
    Ok(format!("250 instances, optimal/infeasible/unbounded = {counts:?}"))
}

/// Identical configs give byte-identical CSV.
fn determinism() -> Outcome {
    let spec = ExperimentSpec::from_toml(
        r#"
study = "profit"
solvers = ["oesp", "vesp", "dcesp", "baseline"]
nodes = [15]
requests = [6, 8]
epsilon = [0.0, 0.1]
replications = 3
seed = 11
"#,
    )
    .unwrap();
    let csv = |spec: &ExperimentSpec| {
        let mut buf = Vec::new();
        write_csv(&mut buf, &run_experiment(spec).unwrap(), false).unwrap();
        buf
    };
    let a = csv(&spec);
    let b = csv(&spec);
    let lines = a.iter().filter(|&&c| c == b'\n').count();
    check(a == b && lines > 1, format!("{lines} CSV lines, {} bytes, identical: {}", a.len(), a == b))
}

/// Admission saturates with load and grows with density.
fn admission_saturation() -> Outcome {
    let reps = 20u64;
    // demand is sized against a 5-node cluster at every density
    let admitted = |npc: usize, requests: usize| -> f64 {
        let counts: Vec<f64> = (0..reps)
            .map(|i| {
                let sc = generate(&ScenarioParams {
                    nodes_per_cluster: npc,
                    request_count: requests,
                    demand_reference_nodes: Some(5),
                    seed: 7000 + i,
                    ..Default::default()
                })
                .unwrap();
                oesp(&sc, ValueMode::Count).admitted_count() as f64
            })
            .collect();
        mean(&counts)
    };
    let by_r: Vec<f64> = [5, 10, 15, 20].iter().map(|&r| 100.0 * admitted(5, r) / r as f64).collect();
    let by_d: Vec<f64> = [3, 5, 10].iter().map(|&npc| admitted(npc, 15)).collect();
    let ok = by_r.windows(2).all(|w| w[1] <= w[0] + 1e-9) && by_d.windows(2).all(|w| w[1] >= w[0] - 1e-9);
    check(
        ok,
        format!("admitted % at D_c=25, R=5..20: {by_r:.1?}; admitted at R=15, D_c=15/25/50: {by_d:.2?}"),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("oracle equivalence", oracle_equivalence),
        ("zero over-provisioning", zero_over_provisioning),
        ("baseline over-provisioning", baseline_over_provisioning),
        ("V-ESP optimality", vesp_optimality),
        ("V-ESP complexity trend", vesp_complexity),
        ("DC-ESP quality and convergence", dcesp_quality),
        ("reduction identities", reduction_identities),
        ("LP engine correctness", lp_engine),
        ("determinism", determinism),
        ("admission saturation", admission_saturation),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{secs:.1}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail} [{secs:.1}s]", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
