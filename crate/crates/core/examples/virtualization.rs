// Node virtualization: the partition is prepared once and reused for
// several request batches and thresholds.

use edge_slicing::exact::{build_esp, solve_exact, ExactConfig};
use edge_slicing::scenario::{generate, ScenarioParams};
use edge_slicing::vesp::{prepare, solve_prepared, VespConfig};
use edge_slicing::{validate_solution, ValueMode};

fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let params = ScenarioParams {
        nodes_per_cluster: 6,
        request_count: 10,
        seed: 3,
        ..Default::default()
    };
    let scenario = generate(&params)?;
    let (infra, requests) = (&scenario.infra, &scenario.requests);
    let optimum = solve_exact(&build_esp(infra, requests, ValueMode::Profit)?, &ExactConfig::default())?;
    println!("exact: objective {:.3}, {} evaluations", optimum.objective, optimum.stats.function_evaluations());

    for eps in [0.0, 0.02, 0.1] {
        let prepared = prepare(infra, eps)?;
        let sol = solve_prepared(&prepared, infra, requests, ValueMode::Profit, &VespConfig::default())?;
        assert!(validate_solution(infra, requests, &sol)?.feasible);
        assert!(sol.objective <= optimum.objective + 1e-9);
        println!(
            "epsilon {eps}: {} virtual nodes of {}, objective {:.3}, ratio {:.3}, {} evaluations, {} repairs",
            prepared.partitioning.total_groups(),
            infra.num_nodes(),
            sol.objective,
            sol.objective / optimum.objective,
            sol.stats.function_evaluations(),
            sol.stats.repairs
        );
    }

    // Same infrastructure, new batch: the prepared partition is reused.
    let prepared = prepare(infra, 0.1)?;
    let next = generate(&ScenarioParams {
        request_count: 6,
        ..params
    })?;
    let sol = solve_prepared(&prepared, infra, &next.requests, ValueMode::Count, &VespConfig::default())?;
    println!("second batch: {} of {} admitted", sol.admitted_count(), next.requests.len());
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
