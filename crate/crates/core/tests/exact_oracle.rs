use edge_slicing::exact::{brute_force, build_esp, solve_exact, ExactConfig};
use edge_slicing::scenario::{generate, ScenarioParams};
use edge_slicing::{validate_solution, Infrastructure, ResourceType, SliceRequest, ValueMode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small(seed: u64, clusters: usize, nodes: usize, requests: usize) -> edge_slicing::scenario::Scenario {
    generate(&ScenarioParams {
        clusters,
        nodes_per_cluster: nodes,
        request_count: requests,
        seed,
        ..Default::default()
    })
    .unwrap()
}

#[test]
fn branch_and_bound_matches_enumeration() {
    for seed in 0..60u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = rng.gen_range(1..=2);
        let sc = small(seed, k, rng.gen_range(1..=2), rng.gen_range(1..=6));
        for mode in [ValueMode::Profit, ValueMode::Count] {
            let inst = build_esp(&sc.infra, &sc.requests, mode).unwrap();
            let bb = solve_exact(&inst, &ExactConfig::default()).unwrap();
            let bf = brute_force(&inst).unwrap();
            assert!((bb.objective - bf.objective).abs() <= 1e-6, "seed {seed}: {} vs {}", bb.objective, bf.objective);
            assert!(validate_solution(&sc.infra, &sc.requests, &bb).unwrap().feasible, "seed {seed}");
            assert!(validate_solution(&sc.infra, &sc.requests, &bf).unwrap().feasible, "seed {seed}");
        }
    }
}

/// With one node per cluster every admitted request's allocation is forced,
/// so feasibility of a subset is a direct capacity check.
fn single_node_optimum(infra: &Infrastructure, requests: &[SliceRequest]) -> f64 {
    let mut best: f64 = 0.0;
    for mask in 0u32..(1 << requests.len()) {
        let mut fits = true;
        for k in 0..infra.num_clusters() {
            let node = infra.cluster_nodes(k).next().unwrap();
            for z in ResourceType::ALL {
                let used: f64 = requests
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask & (1 << i) != 0)
                    .map(|(_, r)| node.collateral.coeff(r.rtype, z) * r.demand[k])
                    .sum();
                fits &= used <= node.capacity[z] * (1.0 - 1e-9);
            }
        }
        if fits {
            let v: f64 = requests
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, r)| r.value)
                .sum();
            best = best.max(v);
        }
    }
    best
}

#[test]
fn single_node_clusters_match_closed_form() {
    for seed in 100..160u64 {
        let sc = small(seed, 2, 1, 7);
        let sol = solve_exact(
            &build_esp(&sc.infra, &sc.requests, ValueMode::Profit).unwrap(),
            &ExactConfig::default(),
        )
        .unwrap();
        let oracle = single_node_optimum(&sc.infra, &sc.requests);
        assert!((sol.objective - oracle).abs() <= 1e-6, "seed {seed}: {} vs {oracle}", sol.objective);
    }
}

#[test]
fn more_requests_never_lower_the_optimum() {
    for seed in 0..15u64 {
        let sc = small(seed, 2, 2, 7);
        let cfg = ExactConfig::default();
        let mut last = 0.0;
        for r in 0..=sc.requests.len() {
            let batch = &sc.requests[..r];
            let obj = solve_exact(&build_esp(&sc.infra, batch, ValueMode::Profit).unwrap(), &cfg)
                .unwrap()
                .objective;
            assert!(obj >= last - 1e-9, "seed {seed} r {r}: {obj} < {last}");
            last = obj;
        }
    }
}

#[test]
fn more_capacity_never_lowers_the_optimum() {
    for seed in 0..15u64 {
        let sc = small(seed, 2, 2, 6);
        let cfg = ExactConfig::default();
        let base = solve_exact(&build_esp(&sc.infra, &sc.requests, ValueMode::Profit).unwrap(), &cfg).unwrap();
        let bigger = Infrastructure::new(
            (0..sc.infra.num_clusters())
                .map(|k| {
                    sc.infra
                        .cluster_nodes(k)
                        .map(|n| {
                            let mut n = n.clone();
                            n.capacity = n.capacity * 1.5;
                            n
                        })
                        .collect()
                })
                .collect(),
        )
        .unwrap();
        let more = solve_exact(&build_esp(&bigger, &sc.requests, ValueMode::Profit).unwrap(), &cfg).unwrap();
        assert!(more.objective >= base.objective - 1e-9, "seed {seed}");
    }
}

#[test]
fn count_objective_is_an_integer() {
    for seed in 0..20u64 {
        let sc = small(seed, 3, 2, 8);
        let sol = solve_exact(
            &build_esp(&sc.infra, &sc.requests, ValueMode::Count).unwrap(),
            &ExactConfig::default(),
        )
        .unwrap();
        assert_eq!(sol.objective, sol.admitted_count() as f64);
        assert_eq!(sol.objective.fract(), 0.0);
    }
}
