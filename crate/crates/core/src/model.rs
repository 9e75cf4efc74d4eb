//! Infrastructure, requests and solutions, plus the consumption accounting
//! every solver is checked against.
//!
//! A request of type `t` is allocated `sigma[r][d]` units of its own type on
//! node `d`. Through the node's collateral matrix that allocation consumes
//! `A[t -> z] * sigma[r][d]` units of every type `z` (the diagonal is 1, so
//! the primary amount is included).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute tolerance used by every feasibility check in the crate.
pub const TOL_FEAS: f64 = 1e-6;

pub type NodeId = u32;
pub type RequestId = u32;
/// Position of a cluster in [`Infrastructure::clusters`].
pub type ClusterId = usize;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid {what}: {reason}")]
    Invalid { what: String, reason: String },
    #[error("duplicate node id {0}")]
    DuplicateNode(NodeId),
    #[error("duplicate request id {0}")]
    DuplicateRequest(RequestId),
    #[error("unknown node id {0}")]
    UnknownNode(NodeId),
    #[error("unknown request id {0}")]
    UnknownRequest(RequestId),
    #[error("request {request} has {got} demand entries but the infrastructure has {expected} clusters")]
    DemandLength {
        request: RequestId,
        expected: usize,
        got: usize,
    },
}

fn invalid(what: impl Into<String>, reason: impl Into<String>) -> ModelError {
    ModelError::Invalid {
        what: what.into(),
        reason: reason.into(),
    }
}

/// Networking (resource blocks), storage (MB) and compute (GIPS).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ResourceType {
    #[serde(rename = "N")]
    Networking,
    #[serde(rename = "S")]
    Storage,
    #[serde(rename = "C")]
    Compute,
}

impl ResourceType {
    /// Canonical order used for every matrix index.
    pub const ALL: [ResourceType; 3] = [
        ResourceType::Networking,
        ResourceType::Storage,
        ResourceType::Compute,
    ];

    pub fn index(self) -> usize {
        match self {
            ResourceType::Networking => 0,
            ResourceType::Storage => 1,
            ResourceType::Compute => 2,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            ResourceType::Networking => "N",
            ResourceType::Storage => "S",
            ResourceType::Compute => "C",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            ResourceType::Networking => "RB",
            ResourceType::Storage => "MB",
            ResourceType::Compute => "GIPS",
        }
    }
}

impl fmt::Display for ResourceType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Quantities of the three resource types.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ResourceVector {
    pub n: f64,
    pub s: f64,
    pub c: f64,
}

impl ResourceVector {
    pub const ZERO: ResourceVector = ResourceVector {
        n: 0.0,
        s: 0.0,
        c: 0.0,
    };

    pub fn new(n: f64, s: f64, c: f64) -> Self {
        ResourceVector { n, s, c }
    }

    /// A vector with `amount` in `rtype` and zero elsewhere.
    pub fn single(rtype: ResourceType, amount: f64) -> Self {
        let mut v = ResourceVector::ZERO;
        v[rtype] = amount;
        v
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for z in ResourceType::ALL {
            let x = self[z];
            if !x.is_finite() || x < 0.0 {
                return Err(invalid("resource vector", format!("{z} component is {x}")));
            }
        }
        Ok(())
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.n, self.s, self.c]
    }
}

impl Index<ResourceType> for ResourceVector {
    type Output = f64;
    fn index(&self, z: ResourceType) -> &f64 {
        match z {
            ResourceType::Networking => &self.n,
            ResourceType::Storage => &self.s,
            ResourceType::Compute => &self.c,
        }
    }
}

impl IndexMut<ResourceType> for ResourceVector {
    fn index_mut(&mut self, z: ResourceType) -> &mut f64 {
        match z {
            ResourceType::Networking => &mut self.n,
            ResourceType::Storage => &mut self.s,
            ResourceType::Compute => &mut self.c,
        }
    }
}

impl Add for ResourceVector {
    type Output = ResourceVector;
    fn add(self, o: ResourceVector) -> ResourceVector {
        ResourceVector::new(self.n + o.n, self.s + o.s, self.c + o.c)
    }
}

impl AddAssign for ResourceVector {
    fn add_assign(&mut self, o: ResourceVector) {
        *self = *self + o;
    }
}

impl Mul<f64> for ResourceVector {
    type Output = ResourceVector;
    fn mul(self, k: f64) -> ResourceVector {
        ResourceVector::new(self.n * k, self.s * k, self.c * k)
    }
}

/// Linear coupling coefficients of one edge node.
///
/// Stored as `from_to[t][z] = A^{t->z}`: units of type `z` consumed per unit
/// of type `t` allocated. This is also the JSON layout. The column-oriented
/// layout of the usual written form (row = consumed type) is accepted by
/// [`CollateralMatrix::from_consumption_rows`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[[f64; 3]; 3]", into = "[[f64; 3]; 3]")]
pub struct CollateralMatrix {
    from_to: [[f64; 3]; 3],
}

impl CollateralMatrix {
    pub fn identity() -> Self {
        CollateralMatrix {
            from_to: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    /// Builds from rows indexed by the allocated type: `rows[t][z] = A^{t->z}`.
    pub fn from_rows(rows: [[f64; 3]; 3]) -> Result<Self, ModelError> {
        let m = CollateralMatrix { from_to: rows };
        m.validate()?;
        Ok(m)
    }

    /// Builds from rows indexed by the consumed type: `rows[z][t] = A^{t->z}`.
    pub fn from_consumption_rows(rows: [[f64; 3]; 3]) -> Result<Self, ModelError> {
        let mut from_to = [[0.0; 3]; 3];
        for (z, row) in rows.iter().enumerate() {
            for (t, &a) in row.iter().enumerate() {
                from_to[t][z] = a;
            }
        }
        Self::from_rows(from_to)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for t in 0..3 {
            for z in 0..3 {
                let a = self.from_to[t][z];
                if !a.is_finite() || a < 0.0 {
                    return Err(invalid("collateral matrix", format!("entry [{t}][{z}] is {a}")));
                }
                if t == z && a != 1.0 {
                    return Err(invalid(
                        "collateral matrix",
                        format!("diagonal entry [{t}][{t}] is {a}, expected 1"),
                    ));
                }
            }
        }
        Ok(())
    }

    /// `A^{from -> to}`.
    pub fn coeff(&self, from: ResourceType, to: ResourceType) -> f64 {
        self.from_to[from.index()][to.index()]
    }

    /// Sets an off-diagonal coefficient. Diagonal entries stay 1.
    pub fn set_coeff(&mut self, from: ResourceType, to: ResourceType, value: f64) -> Result<(), ModelError> {
        if from == to {
            if value != 1.0 {
                return Err(invalid("collateral matrix", "diagonal entries are fixed at 1"));
            }
            return Ok(());
        }
        if !value.is_finite() || value < 0.0 {
            return Err(invalid("collateral matrix", format!("coefficient {value}")));
        }
        self.from_to[from.index()][to.index()] = value;
        Ok(())
    }

    pub fn rows(&self) -> [[f64; 3]; 3] {
        self.from_to
    }

    /// Resources of every type consumed by allocating `amount` of `from`.
    pub fn consumption_of(&self, from: ResourceType, amount: f64) -> ResourceVector {
        let row = self.from_to[from.index()];
        ResourceVector::new(row[0] * amount, row[1] * amount, row[2] * amount)
    }

    /// The six `(from, to)` pairs with `from != to`, in canonical order.
    pub fn off_diagonal_pairs() -> impl Iterator<Item = (ResourceType, ResourceType)> {
        ResourceType::ALL
            .into_iter()
            .flat_map(|t| ResourceType::ALL.into_iter().map(move |z| (t, z)))
            .filter(|(t, z)| t != z)
    }

    /// Entry-wise maximum.
    pub fn max(&self, other: &CollateralMatrix) -> CollateralMatrix {
        let mut out = self.from_to;
        for (t, row) in out.iter_mut().enumerate() {
            for (z, a) in row.iter_mut().enumerate() {
                *a = a.max(other.from_to[t][z]);
            }
        }
        CollateralMatrix { from_to: out }
    }

    pub fn is_identity(&self) -> bool {
        *self == CollateralMatrix::identity()
    }
}

impl TryFrom<[[f64; 3]; 3]> for CollateralMatrix {
    type Error = ModelError;
    fn try_from(rows: [[f64; 3]; 3]) -> Result<Self, ModelError> {
        CollateralMatrix::from_rows(rows)
    }
}

impl From<CollateralMatrix> for [[f64; 3]; 3] {
    fn from(m: CollateralMatrix) -> Self {
        m.from_to
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeNode {
    pub id: NodeId,
    pub cluster: ClusterId,
    pub capacity: ResourceVector,
    pub collateral: CollateralMatrix,
}

impl EdgeNode {
    pub fn new(id: NodeId, cluster: ClusterId, capacity: ResourceVector, collateral: CollateralMatrix) -> Self {
        EdgeNode {
            id,
            cluster,
            capacity,
            collateral,
        }
    }
}

/// Edge nodes grouped into `K >= 1` non-empty, disjoint clusters.
#[derive(Debug, Clone, PartialEq)]
pub struct Infrastructure {
    clusters: Vec<Vec<NodeId>>,
    nodes: BTreeMap<NodeId, EdgeNode>,
}

impl Infrastructure {
    /// Builds from per-cluster node lists. Each node's `cluster` field is
    /// overwritten with the position of the list it appears in.
    pub fn new(clusters: Vec<Vec<EdgeNode>>) -> Result<Self, ModelError> {
        if clusters.is_empty() {
            return Err(invalid("infrastructure", "at least one cluster is required"));
        }
        let mut ids = Vec::with_capacity(clusters.len());
        let mut nodes = BTreeMap::new();
        for (k, members) in clusters.into_iter().enumerate() {
            if members.is_empty() {
                return Err(invalid("infrastructure", format!("cluster {k} is empty")));
            }
            let mut cluster_ids = Vec::with_capacity(members.len());
            for mut node in members {
                node.capacity.validate()?;
                node.collateral.validate()?;
                node.cluster = k;
                cluster_ids.push(node.id);
                if nodes.insert(node.id, node.clone()).is_some() {
                    return Err(ModelError::DuplicateNode(node.id));
                }
            }
            ids.push(cluster_ids);
        }
        Ok(Infrastructure { clusters: ids, nodes })
    }

    pub fn num_clusters(&self) -> usize {
        self.clusters.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn cluster_ids(&self, k: ClusterId) -> &[NodeId] {
        &self.clusters[k]
    }

    pub fn cluster_nodes(&self, k: ClusterId) -> impl Iterator<Item = &EdgeNode> + '_ {
        self.clusters[k].iter().map(move |id| &self.nodes[id])
    }

    pub fn clusters(&self) -> &[Vec<NodeId>] {
        &self.clusters
    }

    pub fn node(&self, id: NodeId) -> Option<&EdgeNode> {
        self.nodes.get(&id)
    }

    /// Nodes in ascending id order.
    pub fn nodes(&self) -> impl Iterator<Item = &EdgeNode> + '_ {
        self.nodes.values()
    }

    /// Copy with every node's collateral replaced by `f(node)`.
    pub fn map_collateral(&self, f: impl Fn(&EdgeNode) -> CollateralMatrix) -> Infrastructure {
        let mut out = self.clone();
        for node in out.nodes.values_mut() {
            node.collateral = f(node);
        }
        out
    }

    /// Total capacity of cluster `k`.
    pub fn cluster_capacity(&self, k: ClusterId) -> ResourceVector {
        self.cluster_nodes(k)
            .fold(ResourceVector::ZERO, |acc, n| acc + n.capacity)
    }

    /// Checks that every request's demand array matches the cluster count.
    pub fn check_requests(&self, requests: &[SliceRequest]) -> Result<(), ModelError> {
        let mut seen = BTreeSet::new();
        for r in requests {
            if r.demand.len() != self.num_clusters() {
                return Err(ModelError::DemandLength {
                    request: r.id,
                    expected: self.num_clusters(),
                    got: r.demand.len(),
                });
            }
            if !seen.insert(r.id) {
                return Err(ModelError::DuplicateRequest(r.id));
            }
        }
        Ok(())
    }
}

/// A tenant's request for resources of one type in some of the clusters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceRequest {
    pub id: RequestId,
    #[serde(rename = "type")]
    pub rtype: ResourceType,
    pub value: f64,
    /// Amount of `rtype` demanded in each cluster.
    pub demand: Vec<f64>,
}

impl SliceRequest {
    pub fn new(id: RequestId, rtype: ResourceType, value: f64, demand: Vec<f64>) -> Result<Self, ModelError> {
        let r = SliceRequest {
            id,
            rtype,
            value,
            demand,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.value.is_finite() && self.value > 0.0) {
            return Err(invalid(format!("request {}", self.id), format!("value {} must be positive", self.value)));
        }
        if self.demand.iter().any(|d| !d.is_finite() || *d < 0.0) {
            return Err(invalid(format!("request {}", self.id), "demands must be finite and non-negative"));
        }
        if self.demand.iter().sum::<f64>() <= 0.0 {
            return Err(invalid(format!("request {}", self.id), "total demand must be positive"));
        }
        Ok(())
    }

    pub fn total_demand(&self) -> f64 {
        self.demand.iter().sum()
    }
}

/// Which value each admitted request contributes to the objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueMode {
    /// The request's own value.
    #[default]
    Profit,
    /// Every request is worth 1, so the objective counts admitted slices.
    Count,
}

impl ValueMode {
    pub fn value_of(self, r: &SliceRequest) -> f64 {
        match self {
            ValueMode::Profit => r.value,
            ValueMode::Count => 1.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolverStats {
    pub lp_pivots: u64,
    pub bnb_nodes: u64,
    pub admm_iterations: u64,
    pub wall_time: Duration,
    /// Step-4 repair events performed by the virtualization solver.
    pub repairs: u64,
    /// Set by the consensus solver only.
    pub converged: Option<bool>,
}

impl SolverStats {
    /// The single complexity counter shared by all solvers.
    pub fn function_evaluations(&self) -> u64 {
        self.lp_pivots + self.bnb_nodes + self.admm_iterations
    }

    pub fn absorb(&mut self, other: &SolverStats) {
        self.lp_pivots += other.lp_pivots;
        self.bnb_nodes += other.bnb_nodes;
        self.admm_iterations += other.admm_iterations;
        self.repairs += other.repairs;
    }
}

/// Admission vector `y` and allocation `sigma` for one batch of requests.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "SolutionRepr", into = "SolutionRepr")]
pub struct SlicingSolution {
    pub admission: BTreeMap<RequestId, bool>,
    /// `(request, node) -> amount` of the request's own type.
    pub allocation: BTreeMap<(RequestId, NodeId), f64>,
    pub objective: f64,
    pub stats: SolverStats,
}

impl SlicingSolution {
    /// Everything rejected.
    pub fn empty(requests: &[SliceRequest]) -> Self {
        SlicingSolution {
            admission: requests.iter().map(|r| (r.id, false)).collect(),
            ..Default::default()
        }
    }

    pub fn is_admitted(&self, id: RequestId) -> bool {
        self.admission.get(&id).copied().unwrap_or(false)
    }

    pub fn admitted(&self) -> impl Iterator<Item = RequestId> + '_ {
        self.admission.iter().filter(|(_, &a)| a).map(|(&id, _)| id)
    }

    pub fn admitted_count(&self) -> usize {
        self.admitted().count()
    }

    /// Admission vector in the order of `requests`.
    pub fn admission_vector(&self, requests: &[SliceRequest]) -> Vec<bool> {
        requests.iter().map(|r| self.is_admitted(r.id)).collect()
    }

    /// Recomputes `objective` from the admission vector.
    pub fn recompute_objective(&mut self, requests: &[SliceRequest], mode: ValueMode) {
        self.objective = requests
            .iter()
            .filter(|r| self.is_admitted(r.id))
            .map(|r| mode.value_of(r))
            .sum();
    }
}

#[derive(Serialize, Deserialize)]
struct AllocationEntry {
    request: RequestId,
    node: NodeId,
    amount: f64,
}

#[derive(Serialize, Deserialize)]
struct StatsRepr {
    lp_pivots: u64,
    bnb_nodes: u64,
    admm_iterations: u64,
    function_evaluations: u64,
    wall_time_s: f64,
    #[serde(default)]
    repairs: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    converged: Option<bool>,
}

#[derive(Serialize, Deserialize)]
struct SolutionRepr {
    objective: f64,
    admitted: Vec<RequestId>,
    rejected: Vec<RequestId>,
    allocation: Vec<AllocationEntry>,
    stats: StatsRepr,
}

impl From<SlicingSolution> for SolutionRepr {
    fn from(s: SlicingSolution) -> Self {
        SolutionRepr {
            objective: s.objective,
            admitted: s.admission.iter().filter(|(_, &a)| a).map(|(&id, _)| id).collect(),
            rejected: s.admission.iter().filter(|(_, &a)| !a).map(|(&id, _)| id).collect(),
            allocation: s
                .allocation
                .iter()
                .map(|(&(request, node), &amount)| AllocationEntry { request, node, amount })
                .collect(),
            stats: StatsRepr {
                lp_pivots: s.stats.lp_pivots,
                bnb_nodes: s.stats.bnb_nodes,
                admm_iterations: s.stats.admm_iterations,
                function_evaluations: s.stats.function_evaluations(),
                wall_time_s: s.stats.wall_time.as_secs_f64(),
                repairs: s.stats.repairs,
                converged: s.stats.converged,
            },
        }
    }
}

impl From<SolutionRepr> for SlicingSolution {
    fn from(r: SolutionRepr) -> Self {
        let mut admission: BTreeMap<_, _> = r.rejected.into_iter().map(|id| (id, false)).collect();
        admission.extend(r.admitted.into_iter().map(|id| (id, true)));
        SlicingSolution {
            admission,
            allocation: r
                .allocation
                .into_iter()
                .map(|e| ((e.request, e.node), e.amount))
                .collect(),
            objective: r.objective,
            stats: SolverStats {
                lp_pivots: r.stats.lp_pivots,
                bnb_nodes: r.stats.bnb_nodes,
                admm_iterations: r.stats.admm_iterations,
                wall_time: Duration::from_secs_f64(r.stats.wall_time_s.max(0.0)),
                repairs: r.stats.repairs,
                converged: r.stats.converged,
            },
        }
    }
}

/// Resources of every type consumed on `node` by a set of primary
/// allocations `(type, amount)`.
pub fn collateral_consumption<I>(node: &EdgeNode, allocations: I) -> ResourceVector
where
    I: IntoIterator<Item = (ResourceType, f64)>,
{
    allocations
        .into_iter()
        .fold(ResourceVector::ZERO, |acc, (t, x)| acc + node.collateral.consumption_of(t, x))
}

/// Per-node consumption implied by `sol`, under each node's own collateral.
pub fn node_consumption(
    infra: &Infrastructure,
    requests: &[SliceRequest],
    sol: &SlicingSolution,
) -> Result<BTreeMap<NodeId, ResourceVector>, ModelError> {
    let by_id: BTreeMap<RequestId, &SliceRequest> = requests.iter().map(|r| (r.id, r)).collect();
    let mut per_node: BTreeMap<NodeId, Vec<(ResourceType, f64)>> =
        infra.nodes().map(|n| (n.id, Vec::new())).collect();
    for (&(rid, nid), &amount) in &sol.allocation {
        let r = by_id.get(&rid).ok_or(ModelError::UnknownRequest(rid))?;
        per_node
            .get_mut(&nid)
            .ok_or(ModelError::UnknownNode(nid))?
            .push((r.rtype, amount));
    }
    Ok(per_node
        .into_iter()
        .map(|(nid, allocs)| {
            let node = infra.node(nid).expect("node listed above");
            (nid, collateral_consumption(node, allocs))
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemandResidual {
    pub request: RequestId,
    pub cluster: ClusterId,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapacityViolation {
    pub node: NodeId,
    pub rtype: ResourceType,
    pub consumption: f64,
    pub capacity: f64,
    /// `max(0, consumption - capacity)`.
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    /// One entry per (request, cluster), admitted or not.
    pub demand_residuals: Vec<DemandResidual>,
    /// One entry per (node, type).
    pub capacity: Vec<CapacityViolation>,
    /// Allocations that are negative or non-finite.
    pub negative_allocations: Vec<(RequestId, NodeId, f64)>,
    pub feasible: bool,
}

impl ValidationReport {
    pub fn max_residual(&self) -> f64 {
        self.demand_residuals.iter().map(|d| d.residual).fold(0.0, f64::max)
    }

    pub fn max_violation(&self) -> f64 {
        self.capacity.iter().map(|c| c.excess).fold(0.0, f64::max)
    }

    /// Largest consumption/capacity ratio over all nodes and types. Types
    /// with zero capacity count as infinite when anything is consumed.
    pub fn max_ratio(&self) -> f64 {
        self.capacity
            .iter()
            .map(|c| {
                if c.capacity > 0.0 {
                    c.consumption / c.capacity
                } else if c.consumption > TOL_FEAS {
                    f64::INFINITY
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max)
    }

    /// Capacity entries whose excess is above tolerance.
    pub fn violations(&self) -> impl Iterator<Item = &CapacityViolation> + '_ {
        self.capacity.iter().filter(|c| c.excess > TOL_FEAS)
    }
}

/// Checks demand satisfaction and per-node capacity for `sol`.
pub fn validate_solution(
    infra: &Infrastructure,
    requests: &[SliceRequest],
    sol: &SlicingSolution,
) -> Result<ValidationReport, ModelError> {
    infra.check_requests(requests)?;
    let known: BTreeSet<RequestId> = requests.iter().map(|r| r.id).collect();
    for id in sol.admission.keys() {
        if !known.contains(id) {
            return Err(ModelError::UnknownRequest(*id));
        }
    }
    let consumption = node_consumption(infra, requests, sol)?;

    let mut negative_allocations = Vec::new();
    for (&(rid, nid), &amount) in &sol.allocation {
        if !amount.is_finite() || amount < -TOL_FEAS {
            negative_allocations.push((rid, nid, amount));
        }
    }

    let mut demand_residuals = Vec::with_capacity(requests.len() * infra.num_clusters());
    for r in requests {
        let y = if sol.is_admitted(r.id) { 1.0 } else { 0.0 };
        for k in 0..infra.num_clusters() {
            let allocated: f64 = infra
                .cluster_ids(k)
                .iter()
                .filter_map(|nid| sol.allocation.get(&(r.id, *nid)))
                .sum();
            demand_residuals.push(DemandResidual {
                request: r.id,
                cluster: k,
                residual: (allocated - r.demand[k] * y).abs(),
            });
        }
    }

    let mut capacity = Vec::with_capacity(infra.num_nodes() * 3);
    for node in infra.nodes() {
        let used = consumption[&node.id];
        for z in ResourceType::ALL {
            capacity.push(CapacityViolation {
                node: node.id,
                rtype: z,
                consumption: used[z],
                capacity: node.capacity[z],
                excess: (used[z] - node.capacity[z]).max(0.0),
            });
        }
    }

    let mut report = ValidationReport {
        demand_residuals,
        capacity,
        negative_allocations,
        feasible: false,
    };
    report.feasible = report.negative_allocations.is_empty()
        && report.max_residual() <= TOL_FEAS
        && report.max_violation() <= TOL_FEAS;
    Ok(report)
}
