// Distributed consensus solve: clusters agree on one admission vector
// while each sees only its own nodes. Prints the convergence trace.

use edge_slicing::dcesp::{solve_dcesp, AdmmConfig};
use edge_slicing::exact::{build_esp, solve_exact, ExactConfig};
use edge_slicing::scenario::{generate, ScenarioParams};
use edge_slicing::{validate_solution, ValueMode};

fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let scenario = generate(&ScenarioParams {
        nodes_per_cluster: 4,
        request_count: 8,
        seed: 5,
        ..Default::default()
    })?;
    let (infra, requests) = (&scenario.infra, &scenario.requests);
    let (sol, trace) = solve_dcesp(infra, requests, ValueMode::Profit, &AdmmConfig::default())?;
    print!("{}", trace.to_csv());
    let optimum = solve_exact(&build_esp(infra, requests, ValueMode::Profit)?, &ExactConfig::default())?;
    println!(
        "converged {:?} after {} iterations: objective {:.3} vs optimum {:.3}",
        sol.stats.converged, sol.stats.admm_iterations, sol.objective, optimum.objective
    );
    assert!(validate_solution(infra, requests, &sol)?.feasible);
    assert!(sol.objective <= optimum.objective + 1e-9);
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
