// Seeded scenario generation and the JSON round trip.

use edge_slicing::scenario::{generate, load_scenario, save_scenario, ScenarioParams};

fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let params = ScenarioParams {
        clusters: 2,
        nodes_per_cluster: 2,
        request_count: 3,
        seed: 42,
        ..Default::default()
    };
    let scenario = generate(&params)?;
    assert_eq!(scenario, generate(&params)?);
    for node in scenario.infra.nodes() {
        println!(
            "node {} in cluster {}: {:.0} RB, {:.0} MB, {:.1} GIPS",
            node.id, node.cluster, node.capacity.n, node.capacity.s, node.capacity.c
        );
    }
    for r in &scenario.requests {
        println!("request {} ({}), value {:.2}, demand {:?}", r.id, r.rtype.symbol(), r.value, r.demand);
    }

    let dir = std::env::temp_dir().join(format!("edge-slicing-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("scenario.json");
    save_scenario(&path, &scenario.infra, &scenario.requests)?;
    let loaded = load_scenario(&path)?;
    assert_eq!(loaded.infra, scenario.infra);
    assert_eq!(loaded.requests, scenario.requests);
    println!("round trip through {} is lossless", path.display());
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
