// What ignoring collateral coupling costs: a coupling-blind optimum
// measured under the true collateral matrices.

use edge_slicing::evalcli::baseline_coupling_blind;
use edge_slicing::exact::{build_esp, solve_exact, ExactConfig};
use edge_slicing::scenario::{generate, ScenarioParams};
use edge_slicing::{validate_solution, ResourceType, ValueMode};

fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let scenario = generate(&ScenarioParams {
        nodes_per_cluster: 3,
        request_count: 12,
        demand_intensity: 1.0,
        request_types: vec![ResourceType::Networking, ResourceType::Compute],
        seed: 2,
        ..Default::default()
    })?;
    let (infra, requests) = (&scenario.infra, &scenario.requests);
    let cfg = ExactConfig::default();
    let (blind, report) = baseline_coupling_blind(infra, requests, ValueMode::Count, &cfg)?;
    let aware = solve_exact(&build_esp(infra, requests, ValueMode::Count)?, &cfg)?;
    println!(
        "coupling-blind admits {}, max consumption/capacity {:.3}",
        blind.admitted_count(),
        report.max_ratio()
    );
    for e in report.over_provisioned(1e-6) {
        println!("  node {} {}: ratio {:.3}", e.node, e.rtype.symbol(), e.ratio);
    }
    let aware_ratio = validate_solution(infra, requests, &aware)?.max_ratio();
    println!("coupling-aware admits {}, max ratio {:.3}", aware.admitted_count(), aware_ratio);
    assert!(aware_ratio <= 1.0 + 1e-6);
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
