// Optimal admission and allocation with branch-and-bound, cross-checked
// against exhaustive enumeration.

use edge_slicing::exact::{brute_force, build_esp, solve_exact, ExactConfig};
use edge_slicing::scenario::{generate, ScenarioParams};
use edge_slicing::{validate_solution, ValueMode};

fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let scenario = generate(&ScenarioParams {
        clusters: 2,
        nodes_per_cluster: 3,
        request_count: 8,
        seed: 11,
        ..Default::default()
    })?;
    let inst = build_esp(&scenario.infra, &scenario.requests, ValueMode::Profit)?;
    println!(
        "{} requests, {} columns, {} demand rows, {} capacity rows",
        inst.num_requests(),
        inst.num_columns(),
        inst.num_demand_rows(),
        inst.num_capacity_rows()
    );
    let sol = solve_exact(&inst, &ExactConfig::default())?;
    let oracle = brute_force(&inst)?;
    println!(
        "objective {:.3} (enumeration {:.3}), admitted {:?}, {} B&B nodes, {} pivots",
        sol.objective,
        oracle.objective,
        sol.admitted().collect::<Vec<_>>(),
        sol.stats.bnb_nodes,
        sol.stats.lp_pivots
    );
    assert!((sol.objective - oracle.objective).abs() < 1e-6);
    assert!(validate_solution(&scenario.infra, &scenario.requests, &sol)?.feasible);
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
