//! Virtualization-based approximation.
//!
//! Similar nodes of a cluster are pooled into one virtual node (summed
//! capacity, entry-wise maximum collateral). The exact solver runs on the
//! smaller virtual infrastructure, and each virtual node then splits its
//! allocation across its members with a feasibility LP. When a split is
//! impossible the lowest-value request on that virtual node is dropped and
//! the virtual allocation recomputed.
//!
//! Partitioning depends only on the infrastructure and `epsilon`, so it is
//! computed once by [`prepare`] and reused for any number of request batches.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::exact::{build_esp, solve_exact, EspInstance, ExactConfig, ExactError};
use crate::linprog::{find_feasible_with, LpError, LpProblem, LpStatus};
use crate::model::{
    ClusterId, CollateralMatrix, EdgeNode, Infrastructure, ModelError, NodeId, RequestId, ResourceType,
    ResourceVector, SliceRequest, SlicingSolution, SolverStats, ValueMode,
};

const CAPACITY_MARGIN: f64 = 1e-9;
/// Number of similarity features per node.
pub const FEATURES: usize = 9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VespError {
    #[error("node {0} has an all-zero feature vector")]
    DegenerateFeature(NodeId),
    #[error("cannot virtualize an empty partition")]
    EmptyPartition,
    #[error("epsilon must be finite and non-negative, got {0}")]
    Epsilon(f64),
    #[error(transparent)]
    Exact(#[from] ExactError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// Cluster-wide maxima used to normalize node features.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureScale {
    capacity: [f64; 3],
    collateral: [f64; 6],
}

impl FeatureScale {
    pub fn of<'n>(nodes: impl IntoIterator<Item = &'n EdgeNode>) -> Self {
        let mut scale = FeatureScale {
            capacity: [0.0; 3],
            collateral: [0.0; 6],
        };
        for node in nodes {
            for (m, x) in scale.capacity.iter_mut().zip(node.capacity.to_array()) {
                *m = m.max(x);
            }
            for (m, (t, z)) in scale.collateral.iter_mut().zip(CollateralMatrix::off_diagonal_pairs()) {
                *m = m.max(node.collateral.coeff(t, z));
            }
        }
        scale
    }

    /// Capacities followed by the six off-diagonal collateral entries, each
    /// divided by its cluster-wide maximum (zero when the maximum is zero).
    pub fn features(&self, node: &EdgeNode) -> [f64; FEATURES] {
        let ratio = |x: f64, m: f64| if m > 0.0 { x / m } else { 0.0 };
        let mut f = [0.0; FEATURES];
        for (i, x) in node.capacity.to_array().into_iter().enumerate() {
            f[i] = ratio(x, self.capacity[i]);
        }
        for (i, (t, z)) in CollateralMatrix::off_diagonal_pairs().enumerate() {
            f[3 + i] = ratio(node.collateral.coeff(t, z), self.collateral[i]);
        }
        f
    }
}

/// `1 - cos(u, v)`, or `None` when either vector is zero.
pub fn cosine_distance(u: &[f64], v: &[f64]) -> Option<f64> {
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return None;
    }
    Some((1.0 - dot / (nu * nv)).clamp(0.0, 2.0))
}

/// Dissimilarity of two nodes of the same cluster, in `[0, 2]`.
pub fn similarity(a: &EdgeNode, b: &EdgeNode, scale: &FeatureScale) -> Result<f64, VespError> {
    if a == b {
        return Ok(0.0);
    }
    let fa = scale.features(a);
    let fb = scale.features(b);
    match cosine_distance(&fa, &fb) {
        Some(d) => Ok(d),
        None if fa.iter().all(|x| *x == 0.0) => Err(VespError::DegenerateFeature(a.id)),
        None => Err(VespError::DegenerateFeature(b.id)),
    }
}

/// Disjoint groups of similar nodes, per cluster. Every group lists its
/// node ids in ascending order; the first one is the group's leader.
#[derive(Debug, Clone, PartialEq)]
pub struct Partitioning {
    pub clusters: Vec<Vec<Vec<NodeId>>>,
}

impl Partitioning {
    /// Number of groups in cluster `k`.
    pub fn group_count(&self, k: ClusterId) -> usize {
        self.clusters[k].len()
    }

    pub fn total_groups(&self) -> usize {
        self.clusters.iter().map(Vec::len).sum()
    }
}

/// Leader clustering of one cluster: nodes are scanned in ascending id and
/// join the first group whose leader is within `epsilon`, otherwise they
/// start a new group.
pub fn partition_cluster(infra: &Infrastructure, k: ClusterId, epsilon: f64) -> Result<Vec<Vec<NodeId>>, VespError> {
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(VespError::Epsilon(epsilon));
    }
    let scale = FeatureScale::of(infra.cluster_nodes(k));
    let mut ids: Vec<NodeId> = infra.cluster_ids(k).to_vec();
    ids.sort_unstable();
    let mut groups: Vec<Vec<NodeId>> = Vec::new();
    for id in ids {
        let node = infra.node(id).expect("cluster member exists");
        let mut placed = false;
        for g in groups.iter_mut() {
            let leader = infra.node(g[0]).expect("leader exists");
            if similarity(leader, node, &scale)? <= epsilon {
                g.push(id);
                placed = true;
                break;
            }
        }
        if !placed {
            groups.push(vec![id]);
        }
    }
    Ok(groups)
}

pub fn partition(infra: &Infrastructure, epsilon: f64) -> Result<Partitioning, VespError> {
    Ok(Partitioning {
        clusters: (0..infra.num_clusters())
            .map(|k| partition_cluster(infra, k, epsilon))
            .collect::<Result<_, _>>()?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VirtualEdgeNode {
    /// Id of the group leader, so virtual ids never collide.
    pub id: NodeId,
    pub cluster: ClusterId,
    pub members: Vec<NodeId>,
    pub capacity: ResourceVector,
    pub collateral: CollateralMatrix,
}

impl VirtualEdgeNode {
    pub fn as_edge_node(&self) -> EdgeNode {
        EdgeNode::new(self.id, self.cluster, self.capacity, self.collateral)
    }
}

/// Pools a group: capacities add up, collateral takes the entry-wise max.
pub fn virtualize(group: &[NodeId], infra: &Infrastructure) -> Result<VirtualEdgeNode, VespError> {
    let nodes: Vec<&EdgeNode> = group
        .iter()
        .map(|id| infra.node(*id).ok_or(ModelError::UnknownNode(*id)))
        .collect::<Result<_, _>>()?;
    let first = nodes.first().ok_or(VespError::EmptyPartition)?;
    let mut members: Vec<NodeId> = group.to_vec();
    members.sort_unstable();
    Ok(VirtualEdgeNode {
        id: members[0],
        cluster: first.cluster,
        members,
        capacity: nodes.iter().fold(ResourceVector::ZERO, |acc, n| acc + n.capacity),
        collateral: nodes
            .iter()
            .skip(1)
            .fold(first.collateral, |acc, n| acc.max(&n.collateral)),
    })
}

/// Cached output of partitioning and virtualization for one infrastructure.
#[derive(Debug, Clone)]
pub struct PreparedVirtualization {
    pub epsilon: f64,
    pub partitioning: Partitioning,
    pub virtual_nodes: Vec<VirtualEdgeNode>,
    pub virtual_infra: Infrastructure,
}

impl PreparedVirtualization {
    pub fn virtual_node(&self, id: NodeId) -> Option<&VirtualEdgeNode> {
        self.virtual_nodes.iter().find(|v| v.id == id)
    }
}

pub fn prepare(infra: &Infrastructure, epsilon: f64) -> Result<PreparedVirtualization, VespError> {
    let partitioning = partition(infra, epsilon)?;
    let mut virtual_nodes = Vec::new();
    let mut clusters = Vec::new();
    for groups in &partitioning.clusters {
        let mut cluster = Vec::new();
        for g in groups {
            let v = virtualize(g, infra)?;
            cluster.push(v.as_edge_node());
            virtual_nodes.push(v);
        }
        clusters.push(cluster);
    }
    Ok(PreparedVirtualization {
        epsilon,
        partitioning,
        virtual_nodes,
        virtual_infra: Infrastructure::new(clusters)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VespConfig {
    pub exact: ExactConfig,
}

/// Splits the allocations `(request position, amount)` placed on a virtual
/// node across its members, or returns `None` if no split fits.
fn disaggregate(
    vnode: &VirtualEdgeNode,
    infra: &Infrastructure,
    requests: &[SliceRequest],
    load: &[(usize, f64)],
    cfg: &VespConfig,
    stats: &mut SolverStats,
) -> Result<Option<Vec<(usize, NodeId, f64)>>, VespError> {
    let m = vnode.members.len();
    // column = load index * m + member index; value = fraction of the load
    let mut lp = LpProblem::new(load.len() * m);
    for li in 0..load.len() {
        let terms: Vec<(usize, f64)> = (0..m).map(|mi| (li * m + mi, 1.0)).collect();
        lp.add_eq_sparse(&terms, 1.0)?;
    }
    for (mi, &nid) in vnode.members.iter().enumerate() {
        let node = infra.node(nid).expect("member exists");
        for z in ResourceType::ALL {
            let cap = node.capacity[z];
            let scale = if cap > 0.0 { cap } else { 1.0 };
            let terms: Vec<(usize, f64)> = load
                .iter()
                .enumerate()
                .map(|(li, &(ri, x))| (li * m + mi, node.collateral.coeff(requests[ri].rtype, z) * x / scale))
                .filter(|(_, a)| *a != 0.0)
                .collect();
            if !terms.is_empty() {
                let rhs = if cap > 0.0 { 1.0 - CAPACITY_MARGIN } else { 0.0 };
                lp.add_le_sparse(&terms, rhs)?;
            }
        }
    }
    let res = find_feasible_with(&lp, cfg.exact.simplex)?;
    stats.lp_pivots += res.pivots;
    if res.status != LpStatus::Optimal {
        return Ok(None);
    }
    let mut out = Vec::new();
    for (li, &(ri, x)) in load.iter().enumerate() {
        let fracs: Vec<f64> = (0..m).map(|mi| res.x[li * m + mi].max(0.0)).collect();
        let total: f64 = fracs.iter().sum();
        for (mi, f) in fracs.into_iter().enumerate() {
            let amount = x * f / total;
            if amount > 0.0 {
                out.push((ri, vnode.members[mi], amount));
            }
        }
    }
    Ok(Some(out))
}

enum Split {
    Done(BTreeMap<(RequestId, NodeId), f64>),
    /// Virtual node that could not be split.
    Failed(NodeId),
}

fn split_all(
    prepared: &PreparedVirtualization,
    infra: &Infrastructure,
    requests: &[SliceRequest],
    virtual_allocation: &BTreeMap<(RequestId, NodeId), f64>,
    cfg: &VespConfig,
    stats: &mut SolverStats,
) -> Result<Split, VespError> {
    let position: BTreeMap<RequestId, usize> = requests.iter().enumerate().map(|(i, r)| (r.id, i)).collect();
    let mut loads: BTreeMap<NodeId, Vec<(usize, f64)>> = BTreeMap::new();
    for (&(rid, vid), &x) in virtual_allocation {
        loads.entry(vid).or_default().push((position[&rid], x));
    }
    let jobs: Vec<(&VirtualEdgeNode, Vec<(usize, f64)>)> = prepared
        .virtual_nodes
        .iter()
        .filter_map(|v| loads.remove(&v.id).map(|l| (v, l)))
        .collect();
    // Independent per virtual node; results are folded in virtual-node order.
    let results: Vec<(NodeId, Result<Option<Vec<(usize, NodeId, f64)>>, VespError>, SolverStats)> = jobs
        .par_iter()
        .map(|(v, load)| {
            let mut local = SolverStats::default();
            if v.members.len() == 1 {
                let direct = load.iter().map(|&(ri, x)| (ri, v.members[0], x)).collect();
                return (v.id, Ok(Some(direct)), local);
            }
            let r = disaggregate(v, infra, requests, load, cfg, &mut local);
            (v.id, r, local)
        })
        .collect();
    let mut out = BTreeMap::new();
    let mut failed = None;
    for (vid, r, local) in results {
        stats.absorb(&local);
        match r? {
            Some(parts) => {
                for (ri, nid, x) in parts {
                    out.insert((requests[ri].id, nid), x);
                }
            }
            None => {
                failed.get_or_insert(vid);
            }
        }
    }
    Ok(match failed {
        Some(vid) => Split::Failed(vid),
        None => Split::Done(out),
    })
}

/// Runs the virtualized solve on an already prepared infrastructure.
pub fn solve_prepared(
    prepared: &PreparedVirtualization,
    infra: &Infrastructure,
    requests: &[SliceRequest],
    mode: ValueMode,
    cfg: &VespConfig,
) -> Result<SlicingSolution, VespError> {
    let start = Instant::now();
    infra.check_requests(requests)?;
    let inst: EspInstance<'_> = build_esp(&prepared.virtual_infra, requests, mode)?;
    let virtual_solution = solve_exact(&inst, &cfg.exact)?;
    let mut stats = virtual_solution.stats.clone();
    let mut admitted = virtual_solution.admission_vector(requests);
    let mut virtual_allocation = virtual_solution.allocation;

    let allocation = loop {
        match split_all(prepared, infra, requests, &virtual_allocation, cfg, &mut stats)? {
            Split::Done(a) => break a,
            Split::Failed(vid) => {
                stats.repairs += 1;
                let on_node: BTreeSet<RequestId> = virtual_allocation
                    .iter()
                    .filter(|(&(_, v), &x)| v == vid && x > 0.0)
                    .map(|(&(rid, _), _)| rid)
                    .collect();
                let victim = requests
                    .iter()
                    .enumerate()
                    .filter(|(_, r)| on_node.contains(&r.id))
                    .min_by(|(_, a), (_, b)| {
                        mode.value_of(a)
                            .total_cmp(&mode.value_of(b))
                            .then(b.id.cmp(&a.id))
                    })
                    .map(|(i, _)| i)
                    .expect("failed split has at least one request");
                admitted[victim] = false;
                let alloc = inst
                    .allocate(&admitted, &cfg.exact, &mut stats)?
                    .expect("subset of a feasible virtual admission stays feasible");
                virtual_allocation = alloc
                    .into_iter()
                    .map(|((ri, v), x)| ((requests[ri].id, v), x))
                    .collect();
            }
        }
    };

    let mut sol = SlicingSolution {
        admission: requests.iter().zip(&admitted).map(|(r, &a)| (r.id, a)).collect(),
        allocation,
        objective: 0.0,
        stats,
    };
    sol.recompute_objective(requests, mode);
    sol.stats.wall_time = start.elapsed();
    Ok(sol)
}

pub fn solve_vesp(
    infra: &Infrastructure,
    requests: &[SliceRequest],
    epsilon: f64,
    mode: ValueMode,
    cfg: &VespConfig,
) -> Result<SlicingSolution, VespError> {
    let prepared = prepare(infra, epsilon)?;
    solve_prepared(&prepared, infra, requests, mode, cfg)
}
