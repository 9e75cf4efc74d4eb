// Collateral coupling on a single edge node.
//
// A networking slice of 50 RBs also needs 24.5 GIPS of compute and about
// 1.9 MB of storage on a node with the reference collateral matrix.

use edge_slicing::scenario::base_collateral;
use edge_slicing::{
    collateral_consumption, validate_solution, EdgeNode, Infrastructure, ResourceType, ResourceVector, SliceRequest,
    SlicingSolution, ValueMode,
};

fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let node = EdgeNode::new(1, 0, ResourceVector::new(50.0, 1e6, 20.0), base_collateral());
    let used = collateral_consumption(&node, [(ResourceType::Networking, 50.0)]);
    println!("50 RB of networking consumes {:.2} RB, {:.3} MB, {:.2} GIPS", used.n, used.s, used.c);
    assert!((used.c - 24.5).abs() < 1e-9);

    // The node has 20 GIPS, so the same slice fails validation.
    let infra = Infrastructure::new(vec![vec![node]])?;
    let requests = vec![SliceRequest::new(1, ResourceType::Networking, 1.0, vec![50.0])?];
    let mut sol = SlicingSolution::empty(&requests);
    sol.admission.insert(1, true);
    sol.allocation.insert((1, 1), 50.0);
    sol.recompute_objective(&requests, ValueMode::Count);
    let report = validate_solution(&infra, &requests, &sol)?;
    for v in report.violations() {
        println!("node {} {}: {:.2} > {:.2}", v.node, v.rtype.symbol(), v.consumption, v.capacity);
    }
    assert!(!report.feasible);
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
