//! Seeded scenario generation and JSON persistence.
//!
//! Randomness comes from ChaCha8 with one stream per node and one per
//! request: node `i` (0-based, in cluster order) draws from stream
//! `NODE_STREAM + i`, request `j` from `REQUEST_STREAM + j`, all keyed by the
//! same 64-bit seed. Adding nodes therefore never shifts the draws of a
//! request, and vice versa.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    CollateralMatrix, EdgeNode, Infrastructure, ModelError, NodeId, ResourceType, ResourceVector, SliceRequest,
};

pub const SCHEMA_VERSION: u32 = 1;
pub const NODE_STREAM: u64 = 1 << 32;
pub const REQUEST_STREAM: u64 = 2 << 32;

/// Reference coupling matrix for video transmission, storage and
/// transcoding workloads, in the consumption layout (row = consumed type,
/// column = allocated type, both ordered N, S, C).
pub const BASE_COLLATERAL_ROWS: [[f64; 3]; 3] = [
    [1.0, 0.0382, 0.1636],
    [26.178, 1.0, 0.0063],
    [0.49, 0.15, 1.0],
];

pub fn base_collateral() -> CollateralMatrix {
    CollateralMatrix::from_consumption_rows(BASE_COLLATERAL_ROWS).expect("reference matrix is valid")
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid scenario parameter {field}: {reason}")]
    Param { field: &'static str, reason: String },
    #[error("unsupported schema_version {0} (expected {SCHEMA_VERSION})")]
    Version(u32),
    #[error("scenario schema error: {0}")]
    Schema(#[from] serde_json::Error),
    #[error("scenario content error: {0}")]
    Model(#[from] ModelError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn param(field: &'static str, reason: impl Into<String>) -> ScenarioError {
    ScenarioError::Param {
        field,
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioParams {
    pub clusters: usize,
    pub nodes_per_cluster: usize,
    pub rb_capacity: f64,
    pub storage_max_mb: f64,
    pub gips_max: f64,
    /// Storage and compute are drawn from `[floor * max, max]`.
    pub capacity_floor_fraction: f64,
    pub base_collateral: CollateralMatrix,
    /// Relative perturbation of every off-diagonal collateral entry.
    pub perturbation: f64,
    pub request_count: usize,
    pub value_range: (f64, f64),
    /// Probability that a request asks for resources in a given cluster.
    pub demand_intensity: f64,
    /// Upper end of a cluster demand, as a fraction of what the cluster can
    /// serve of that type.
    pub cap_fraction: f64,
    /// When set, demand bounds use a cluster of this many average nodes
    /// instead of the actual cluster, so batches keep their size as the
    /// deployment grows.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub demand_reference_nodes: Option<usize>,
    pub request_types: Vec<ResourceType>,
    pub seed: u64,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        ScenarioParams {
            clusters: 5,
            nodes_per_cluster: 15,
            rb_capacity: 50.0,
            storage_max_mb: 1_000_000.0,
            gips_max: 200.0,
            capacity_floor_fraction: 0.1,
            base_collateral: base_collateral(),
            perturbation: 0.1,
            request_count: 20,
            value_range: (1.0, 10.0),
            demand_intensity: 0.5,
            cap_fraction: 0.5,
            demand_reference_nodes: None,
            request_types: ResourceType::ALL.to_vec(),
            seed: 0,
        }
    }
}

impl ScenarioParams {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.clusters == 0 {
            return Err(param("clusters", "must be at least 1"));
        }
        if self.nodes_per_cluster == 0 {
            return Err(param("nodes_per_cluster", "must be at least 1"));
        }
        for (field, v) in [
            ("rb_capacity", self.rb_capacity),
            ("storage_max_mb", self.storage_max_mb),
            ("gips_max", self.gips_max),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(param(field, format!("{v} is not positive")));
            }
        }
        let unit = |field, v: f64| {
            if v > 0.0 && v <= 1.0 {
                Ok(())
            } else {
                Err(param(field, format!("{v} is outside (0, 1]")))
            }
        };
        unit("capacity_floor_fraction", self.capacity_floor_fraction)?;
        unit("demand_intensity", self.demand_intensity)?;
        unit("cap_fraction", self.cap_fraction)?;
        if !(0.0..1.0).contains(&self.perturbation) {
            return Err(param("perturbation", format!("{} is outside [0, 1)", self.perturbation)));
        }
        let (lo, hi) = self.value_range;
        if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && hi >= lo) {
            return Err(param("value_range", format!("[{lo}, {hi}] is not a positive range")));
        }
        if self.demand_reference_nodes == Some(0) {
            return Err(param("demand_reference_nodes", "must be at least 1"));
        }
        if self.request_types.is_empty() {
            return Err(param("request_types", "at least one type is required"));
        }
        self.base_collateral.validate()?;
        Ok(())
    }
}

/// An infrastructure plus one batch of requests, optionally with the
/// parameters that generated them.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub params: Option<ScenarioParams>,
    pub infra: Infrastructure,
    pub requests: Vec<SliceRequest>,
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Amount of `t` a node can host before any of its resources runs out.
fn serviceable(node: &EdgeNode, t: ResourceType) -> f64 {
    ResourceType::ALL
        .into_iter()
        .filter_map(|z| {
            let a = node.collateral.coeff(t, z);
            (a > 0.0).then(|| node.capacity[z] / a)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Draws one infrastructure and request batch from `params`.
pub fn generate(params: &ScenarioParams) -> Result<Scenario, ScenarioError> {
    params.validate()?;
    let mut clusters = Vec::with_capacity(params.clusters);
    let mut index = 0u64;
    for k in 0..params.clusters {
        let mut nodes = Vec::with_capacity(params.nodes_per_cluster);
        for _ in 0..params.nodes_per_cluster {
            let mut rng = stream_rng(params.seed, NODE_STREAM + index);
            let floor = params.capacity_floor_fraction;
            let s = rng.gen_range(floor * params.storage_max_mb..=params.storage_max_mb);
            let c = rng.gen_range(floor * params.gips_max..=params.gips_max);
            let mut collateral = params.base_collateral;
            for (t, z) in CollateralMatrix::off_diagonal_pairs() {
                let factor = if params.perturbation > 0.0 {
                    1.0 + rng.gen_range(-params.perturbation..=params.perturbation)
                } else {
                    1.0
                };
                collateral.set_coeff(t, z, params.base_collateral.coeff(t, z) * factor)?;
            }
            let id = NodeId::try_from(index + 1).map_err(|_| param("nodes_per_cluster", "too many nodes"))?;
            nodes.push(EdgeNode::new(
                id,
                k,
                ResourceVector::new(params.rb_capacity, s, c),
                collateral,
            ));
            index += 1;
        }
        clusters.push(nodes);
    }
    let infra = Infrastructure::new(clusters)?;

    let serviceable_by_cluster: Vec<[f64; 3]> = (0..infra.num_clusters())
        .map(|k| {
            let mut per_type = [0.0; 3];
            for node in infra.cluster_nodes(k) {
                for t in ResourceType::ALL {
                    per_type[t.index()] += serviceable(node, t);
                }
            }
            if let Some(reference) = params.demand_reference_nodes {
                let scale = reference as f64 / params.nodes_per_cluster as f64;
                per_type.iter_mut().for_each(|x| *x *= scale);
            }
            per_type
        })
        .collect();

    let mut requests = Vec::with_capacity(params.request_count);
    for j in 0..params.request_count {
        let mut rng = stream_rng(params.seed, REQUEST_STREAM + j as u64);
        let rtype = params.request_types[rng.gen_range(0..params.request_types.len())];
        let (lo, hi) = params.value_range;
        let value = if hi > lo { rng.gen_range(lo..=hi) } else { lo };
        let included = loop {
            let inc: Vec<bool> = (0..params.clusters)
                .map(|_| rng.gen_bool(params.demand_intensity))
                .collect();
            if inc.iter().any(|&b| b) {
                break inc;
            }
        };
        let demand = included
            .iter()
            .enumerate()
            .map(|(k, &inc)| {
                if inc {
                    // (0, 1] so that an included cluster always has positive demand
                    let u = 1.0 - rng.gen::<f64>();
                    u * params.cap_fraction * serviceable_by_cluster[k][rtype.index()]
                } else {
                    0.0
                }
            })
            .collect();
        requests.push(SliceRequest::new(j as u32 + 1, rtype, value, demand)?);
    }
    Ok(Scenario {
        params: Some(params.clone()),
        infra,
        requests,
    })
}

#[derive(Serialize, Deserialize)]
struct NodeRepr {
    id: NodeId,
    capacity: ResourceVector,
    collateral: CollateralMatrix,
}

#[derive(Serialize, Deserialize)]
struct ClusterRepr {
    id: usize,
    nodes: Vec<NodeRepr>,
}

#[derive(Serialize, Deserialize)]
struct ScenarioRepr {
    schema_version: u32,
    #[serde(default)]
    params: Option<ScenarioParams>,
    clusters: Vec<ClusterRepr>,
    requests: Vec<SliceRequest>,
}

impl Scenario {
    pub fn new(infra: Infrastructure, requests: Vec<SliceRequest>) -> Result<Self, ScenarioError> {
        infra.check_requests(&requests)?;
        Ok(Scenario {
            params: None,
            infra,
            requests,
        })
    }

    pub fn to_json(&self) -> String {
        let repr = ScenarioRepr {
            schema_version: SCHEMA_VERSION,
            params: self.params.clone(),
            clusters: self
                .infra
                .clusters()
                .iter()
                .enumerate()
                .map(|(k, ids)| ClusterRepr {
                    id: k,
                    nodes: ids
                        .iter()
                        .map(|id| {
                            let n = self.infra.node(*id).expect("clustered node exists");
                            NodeRepr {
                                id: n.id,
                                capacity: n.capacity,
                                collateral: n.collateral,
                            }
                        })
                        .collect(),
                })
                .collect(),
            requests: self.requests.clone(),
        };
        serde_json::to_string_pretty(&repr).expect("scenario serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let repr: ScenarioRepr = serde_json::from_str(text)?;
        if repr.schema_version != SCHEMA_VERSION {
            return Err(ScenarioError::Version(repr.schema_version));
        }
        let mut clusters = repr.clusters;
        clusters.sort_by_key(|c| c.id);
        let infra = Infrastructure::new(
            clusters
                .into_iter()
                .enumerate()
                .map(|(k, c)| {
                    c.nodes
                        .into_iter()
                        .map(|n| EdgeNode::new(n.id, k, n.capacity, n.collateral))
                        .collect()
                })
                .collect(),
        )?;
        for r in &repr.requests {
            r.validate()?;
        }
        infra.check_requests(&repr.requests)?;
        Ok(Scenario {
            params: repr.params,
            infra,
            requests: repr.requests,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ScenarioError> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Scenario::from_json(&text)
    }
}

/// Writes `infra` and `requests` as a scenario file.
pub fn save_scenario(
    path: impl AsRef<Path>,
    infra: &Infrastructure,
    requests: &[SliceRequest],
) -> Result<(), ScenarioError> {
    Scenario::new(infra.clone(), requests.to_vec())?.save(path)
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    Scenario::load(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unperturbed_nodes_carry_the_reference_matrix() {
        let p = ScenarioParams {
            perturbation: 0.0,
            clusters: 2,
            nodes_per_cluster: 3,
            ..Default::default()
        };
        let sc = generate(&p).unwrap();
        use ResourceType::*;
        for n in sc.infra.nodes() {
            assert_eq!(n.collateral, base_collateral());
            assert_eq!(n.collateral.coeff(Networking, Compute), 0.49);
            assert_eq!(n.collateral.coeff(Compute, Storage), 0.0063);
            assert_eq!(n.collateral.coeff(Storage, Networking), 0.0382);
            assert_eq!(n.capacity.n, 50.0);
        }
    }

    #[test]
    fn perturbation_stays_in_band() {
        let sc = generate(&ScenarioParams::default()).unwrap();
        let base = base_collateral();
        for n in sc.infra.nodes() {
            for (t, z) in CollateralMatrix::off_diagonal_pairs() {
                let ratio = n.collateral.coeff(t, z) / base.coeff(t, z);
                assert!((0.9 - 1e-12..=1.1 + 1e-12).contains(&ratio));
            }
        }
    }

    #[test]
    fn same_seed_same_scenario() {
        let p = ScenarioParams {
            seed: 42,
            ..Default::default()
        };
        assert_eq!(generate(&p).unwrap().to_json(), generate(&p).unwrap().to_json());
        let q = ScenarioParams { seed: 43, ..p };
        assert_ne!(generate(&q).unwrap().to_json(), generate(&ScenarioParams { seed: 42, ..q.clone() }).unwrap().to_json());
    }

    #[test]
    fn request_draws_do_not_depend_on_node_count() {
        let small = ScenarioParams {
            nodes_per_cluster: 3,
            seed: 9,
            ..Default::default()
        };
        let large = ScenarioParams {
            nodes_per_cluster: 8,
            ..small.clone()
        };
        let a = generate(&small).unwrap();
        let b = generate(&large).unwrap();
        for (x, y) in a.requests.iter().zip(&b.requests) {
            assert_eq!(x.rtype, y.rtype);
            assert_eq!(x.value, y.value);
            let pattern = |r: &SliceRequest| r.demand.iter().map(|d| *d > 0.0).collect::<Vec<_>>();
            assert_eq!(pattern(x), pattern(y));
        }
    }

    #[test]
    fn reference_nodes_rescale_demand_bounds() {
        let p = ScenarioParams {
            nodes_per_cluster: 4,
            seed: 3,
            ..Default::default()
        };
        let actual = generate(&p).unwrap();
        let same = generate(&ScenarioParams {
            demand_reference_nodes: Some(4),
            ..p.clone()
        })
        .unwrap();
        let double = generate(&ScenarioParams {
            demand_reference_nodes: Some(8),
            ..p.clone()
        })
        .unwrap();
        for ((a, b), c) in actual.requests.iter().zip(&same.requests).zip(&double.requests) {
            assert_eq!(a.demand, b.demand);
            for (x, y) in a.demand.iter().zip(&c.demand) {
                assert!((2.0 * x - y).abs() <= 1e-9 * y.max(1.0));
            }
        }
        assert_eq!(actual.infra, double.infra);
        assert!(generate(&ScenarioParams {
            demand_reference_nodes: Some(0),
            ..p
        })
        .is_err());
    }

    #[test]
    fn capacity_ranges_at_scale() {
        let p = ScenarioParams {
            clusters: 1,
            nodes_per_cluster: 10_000,
            request_count: 0,
            seed: 5,
            ..Default::default()
        };
        let sc = generate(&p).unwrap();
        let (mut smin, mut smax, mut cmin, mut cmax) = (f64::MAX, 0.0f64, f64::MAX, 0.0f64);
        for n in sc.infra.nodes() {
            smin = smin.min(n.capacity.s);
            smax = smax.max(n.capacity.s);
            cmin = cmin.min(n.capacity.c);
            cmax = cmax.max(n.capacity.c);
        }
        assert!(smin >= 100_000.0 && smax <= 1_000_000.0);
        assert!(cmin >= 20.0 && cmax <= 200.0);
        // the draws actually cover the range
        assert!(smin < 110_000.0 && smax > 990_000.0);
        assert!(cmin < 22.0 && cmax > 198.0);
    }

    #[test]
    fn every_request_has_demand_and_allowed_type() {
        let p = ScenarioParams {
            request_count: 200,
            demand_intensity: 0.05,
            request_types: vec![ResourceType::Networking, ResourceType::Compute],
            ..Default::default()
        };
        let sc = generate(&p).unwrap();
        for r in &sc.requests {
            assert!(r.total_demand() > 0.0);
            assert_ne!(r.rtype, ResourceType::Storage);
            assert!((1.0..=10.0).contains(&r.value));
        }
    }

    #[test]
    fn invalid_params() {
        for p in [
            ScenarioParams { clusters: 0, ..Default::default() },
            ScenarioParams { perturbation: 1.0, ..Default::default() },
            ScenarioParams { value_range: (0.0, 1.0), ..Default::default() },
            ScenarioParams { demand_intensity: 0.0, ..Default::default() },
            ScenarioParams { request_types: vec![], ..Default::default() },
        ] {
            assert!(matches!(generate(&p), Err(ScenarioError::Param { .. })));
        }
    }

    #[test]
    fn json_round_trip() {
        let p = ScenarioParams {
            clusters: 2,
            nodes_per_cluster: 2,
            request_count: 4,
            seed: 1,
            ..Default::default()
        };
        let sc = generate(&p).unwrap();
        let back = Scenario::from_json(&sc.to_json()).unwrap();
        assert_eq!(back, sc);
    }

    #[test]
    fn missing_clusters_key_is_named() {
        let err = Scenario::from_json(r#"{"schema_version": 1, "requests": []}"#).unwrap_err();
        assert!(matches!(err, ScenarioError::Schema(_)));
        assert!(err.to_string().contains("clusters"), "{err}");
    }

    #[test]
    fn wrong_version_is_rejected() {
        let err = Scenario::from_json(r#"{"schema_version": 2, "clusters": [], "requests": []}"#).unwrap_err();
        assert!(matches!(err, ScenarioError::Version(2)));
    }
}
