//! The edge slicing MILP and its exact solution by branch-and-bound.
//!
//! Allocation columns are expressed as the fraction of a request's cluster
//! demand served by a node (`sigma / tau`), and every capacity row is
//! divided by the node capacity. Demand rows then read
//! `sum_d frac[r][d] - y[r] = 0` and capacity rows
//! `sum_r A[t_r -> z] * tau[r][k] / rho[d][z] * frac[r][d] <= 1`, which keeps
//! the tableau well scaled when megabytes and resource blocks meet in the
//! same row.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::time::Instant;

use thiserror::Error;

use crate::linprog::{find_feasible_with, solve_lp_with, LpError, LpProblem, LpStatus, SimplexOptions};
use crate::model::{
    ClusterId, Infrastructure, ModelError, NodeId, ResourceType, SliceRequest, SlicingSolution, SolverStats,
    ValueMode,
};

/// Largest request count accepted by [`brute_force`].
pub const BRUTE_FORCE_MAX_REQUESTS: usize = 15;
/// Distance from 0 or 1 under which an admission variable is integral.
pub const INTEGRALITY_TOL: f64 = 1e-6;
/// Relative capacity held back in every LP so that rounding in the simplex
/// never shows up as an over-provisioned node.
const CAPACITY_MARGIN: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExactError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("brute force supports at most {max} requests, got {got}")]
    TooLarge { got: usize, max: usize },
    #[error("{0} values given for {1} requests")]
    ValueCount(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ExactConfig {
    pub simplex: SimplexOptions,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct SigmaColumn {
    request: usize,
    node: NodeId,
    cluster: ClusterId,
    /// `tau[r][k]`, the scale between fraction and physical amount.
    demand: f64,
}

/// One instance of the slicing MILP.
#[derive(Debug, Clone)]
pub struct EspInstance<'a> {
    infra: &'a Infrastructure,
    requests: &'a [SliceRequest],
    values: Vec<f64>,
    integral_values: bool,
    sigma: Vec<SigmaColumn>,
    /// Per `(request, cluster)` with positive demand, its sigma columns.
    demand_rows: Vec<(usize, ClusterId, Vec<usize>)>,
    /// Per `(node, type)`, `(sigma column, scaled coefficient)` and rhs.
    capacity_rows: Vec<(NodeId, ResourceType, Vec<(usize, f64)>, f64)>,
}

/// Builds the MILP for `requests` on `infra` under `mode`.
pub fn build_esp<'a>(
    infra: &'a Infrastructure,
    requests: &'a [SliceRequest],
    mode: ValueMode,
) -> Result<EspInstance<'a>, ExactError> {
    let values = requests.iter().map(|r| mode.value_of(r)).collect();
    EspInstance::with_values(infra, requests, values)
}

impl<'a> EspInstance<'a> {
    /// Builds the MILP with explicit per-request objective coefficients.
    pub fn with_values(
        infra: &'a Infrastructure,
        requests: &'a [SliceRequest],
        values: Vec<f64>,
    ) -> Result<Self, ExactError> {
        infra.check_requests(requests)?;
        if values.len() != requests.len() {
            return Err(ExactError::ValueCount(values.len(), requests.len()));
        }
        let mut sigma = Vec::new();
        let mut demand_rows = Vec::new();
        for (ri, r) in requests.iter().enumerate() {
            for (k, &tau) in r.demand.iter().enumerate() {
                if tau <= 0.0 {
                    continue;
                }
                let mut cols = Vec::new();
                for &node in infra.cluster_ids(k) {
                    cols.push(sigma.len());
                    sigma.push(SigmaColumn {
                        request: ri,
                        node,
                        cluster: k,
                        demand: tau,
                    });
                }
                demand_rows.push((ri, k, cols));
            }
        }

        let mut by_node: BTreeMap<NodeId, Vec<usize>> = infra.nodes().map(|n| (n.id, Vec::new())).collect();
        for (j, col) in sigma.iter().enumerate() {
            by_node.get_mut(&col.node).expect("node exists").push(j);
        }
        let mut capacity_rows = Vec::with_capacity(3 * infra.num_nodes());
        for node in infra.nodes() {
            for z in ResourceType::ALL {
                let cap = node.capacity[z];
                let scale = if cap > 0.0 { cap } else { 1.0 };
                let terms: Vec<(usize, f64)> = by_node[&node.id]
                    .iter()
                    .map(|&j| {
                        let col = &sigma[j];
                        let t = requests[col.request].rtype;
                        (j, node.collateral.coeff(t, z) * col.demand / scale)
                    })
                    .filter(|(_, a)| *a != 0.0)
                    .collect();
                let rhs = if cap > 0.0 { 1.0 - CAPACITY_MARGIN } else { 0.0 };
                capacity_rows.push((node.id, z, terms, rhs));
            }
        }
        let integral_values = values.iter().all(|v| v.fract() == 0.0);
        Ok(EspInstance {
            infra,
            requests,
            values,
            integral_values,
            sigma,
            demand_rows,
            capacity_rows,
        })
    }

    pub fn infrastructure(&self) -> &'a Infrastructure {
        self.infra
    }

    pub fn requests(&self) -> &'a [SliceRequest] {
        self.requests
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn num_requests(&self) -> usize {
        self.requests.len()
    }

    /// Admission plus allocation columns.
    pub fn num_columns(&self) -> usize {
        self.requests.len() + self.sigma.len()
    }

    pub fn num_sigma_columns(&self) -> usize {
        self.sigma.len()
    }

    pub fn num_demand_rows(&self) -> usize {
        self.demand_rows.len()
    }

    /// One per node and resource type.
    pub fn num_capacity_rows(&self) -> usize {
        self.capacity_rows.len()
    }

    /// Nodes that carry allocation columns for request `ri` (by position).
    pub fn sigma_nodes_of(&self, ri: usize) -> Vec<NodeId> {
        self.sigma.iter().filter(|c| c.request == ri).map(|c| c.node).collect()
    }

    /// LP over the free admission variables and the allocation columns of
    /// every request not fixed to 0. Requests fixed to 1 keep their demand
    /// rows with right-hand side 1.
    fn node_lp(&self, fixing: &[Option<bool>]) -> Result<NodeLp, ExactError> {
        let mut y_col = vec![None; self.requests.len()];
        let mut n = 0;
        for (ri, f) in fixing.iter().enumerate() {
            if f.is_none() {
                y_col[ri] = Some(n);
                n += 1;
            }
        }
        let mut sigma_col = vec![None; self.sigma.len()];
        for (j, col) in self.sigma.iter().enumerate() {
            if fixing[col.request] != Some(false) {
                sigma_col[j] = Some(n);
                n += 1;
            }
        }
        let mut lp = LpProblem::new(n);
        for (ri, c) in y_col.iter().enumerate() {
            if let Some(c) = c {
                lp.set_objective_coeff(*c, self.values[ri]);
                lp.set_upper(*c, 1.0);
            }
        }
        for (ri, _, cols) in &self.demand_rows {
            if fixing[*ri] == Some(false) {
                continue;
            }
            let mut terms: Vec<(usize, f64)> = cols.iter().map(|&j| (sigma_col[j].expect("kept"), 1.0)).collect();
            let rhs = match y_col[*ri] {
                Some(c) => {
                    terms.push((c, -1.0));
                    0.0
                }
                None => 1.0,
            };
            lp.add_eq_sparse(&terms, rhs)?;
        }
        for (_, _, terms, rhs) in &self.capacity_rows {
            let kept: Vec<(usize, f64)> = terms
                .iter()
                .filter_map(|&(j, a)| sigma_col[j].map(|c| (c, a)))
                .collect();
            if !kept.is_empty() {
                lp.add_le_sparse(&kept, *rhs)?;
            }
        }
        Ok(NodeLp { lp, y_col, sigma_col })
    }

    /// Finds an allocation serving exactly the admitted requests, or `None`.
    pub fn allocate(
        &self,
        admitted: &[bool],
        cfg: &ExactConfig,
        stats: &mut SolverStats,
    ) -> Result<Option<BTreeMap<(usize, NodeId), f64>>, ExactError> {
        let fixing: Vec<Option<bool>> = admitted.iter().map(|&a| Some(a)).collect();
        let node = self.node_lp(&fixing)?;
        let res = find_feasible_with(&node.lp, cfg.simplex)?;
        stats.lp_pivots += res.pivots;
        if res.status != LpStatus::Optimal {
            return Ok(None);
        }
        Ok(Some(self.physical_allocation(&node, &res.x, admitted)))
    }

    /// Maps an LP point back to physical amounts, renormalizing so that
    /// every admitted request receives exactly its demand in each cluster.
    fn physical_allocation(&self, node: &NodeLp, x: &[f64], admitted: &[bool]) -> BTreeMap<(usize, NodeId), f64> {
        let mut out = BTreeMap::new();
        for (ri, _, cols) in &self.demand_rows {
            if !admitted[*ri] {
                continue;
            }
            let fracs: Vec<f64> = cols
                .iter()
                .map(|&j| node.sigma_col[j].map_or(0.0, |c| x[c].max(0.0)))
                .collect();
            let total: f64 = fracs.iter().sum();
            if total <= 0.0 {
                continue;
            }
            for (&j, f) in cols.iter().zip(fracs) {
                let col = &self.sigma[j];
                let amount = col.demand * f / total;
                if amount > 0.0 {
                    out.insert((col.request, col.node), amount);
                }
            }
        }
        out
    }

    fn solution_from(
        &self,
        admitted: &[bool],
        allocation: BTreeMap<(usize, NodeId), f64>,
        stats: SolverStats,
    ) -> SlicingSolution {
        SlicingSolution {
            admission: self
                .requests
                .iter()
                .zip(admitted)
                .map(|(r, &a)| (r.id, a))
                .collect(),
            allocation: allocation
                .into_iter()
                .map(|((ri, nid), x)| ((self.requests[ri].id, nid), x))
                .collect(),
            objective: self.objective_of(admitted),
            stats,
        }
    }

    pub fn objective_of(&self, admitted: &[bool]) -> f64 {
        self.values
            .iter()
            .zip(admitted)
            .filter(|(_, &a)| a)
            .map(|(v, _)| v)
            .sum()
    }

    /// Admits requests in decreasing value-per-demand order whenever the
    /// enlarged set still has a feasible allocation.
    fn greedy(
        &self,
        cfg: &ExactConfig,
        stats: &mut SolverStats,
    ) -> Result<(Vec<bool>, BTreeMap<(usize, NodeId), f64>), ExactError> {
        let mut order: Vec<usize> = (0..self.requests.len()).filter(|&ri| self.values[ri] > 0.0).collect();
        let density = |ri: usize| self.values[ri] / self.requests[ri].total_demand();
        order.sort_by(|&a, &b| {
            density(b)
                .total_cmp(&density(a))
                .then(self.requests[a].id.cmp(&self.requests[b].id))
        });
        let mut admitted = vec![false; self.requests.len()];
        let mut best_alloc = BTreeMap::new();
        for ri in order {
            admitted[ri] = true;
            match self.allocate(&admitted, cfg, stats)? {
                Some(a) => best_alloc = a,
                None => admitted[ri] = false,
            }
        }
        Ok((admitted, best_alloc))
    }
}

struct NodeLp {
    lp: LpProblem,
    y_col: Vec<Option<usize>>,
    sigma_col: Vec<Option<usize>>,
}

struct OpenNode {
    bound: f64,
    seq: u64,
    fixing: Vec<Option<bool>>,
    /// Admission values of the node's LP solution.
    y: Vec<f64>,
}

impl PartialEq for OpenNode {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for OpenNode {}

impl PartialOrd for OpenNode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OpenNode {
    // Best bound first; older nodes first among equal bounds.
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound
            .total_cmp(&other.bound)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

enum NodeOutcome {
    Infeasible,
    Integral(Vec<bool>, BTreeMap<(usize, NodeId), f64>, f64),
    Fractional(f64, Vec<f64>),
}

struct BranchAndBound<'i, 'a> {
    inst: &'i EspInstance<'a>,
    cfg: ExactConfig,
    stats: SolverStats,
}

impl BranchAndBound<'_, '_> {
    fn evaluate(&mut self, fixing: &[Option<bool>]) -> Result<NodeOutcome, ExactError> {
        self.stats.bnb_nodes += 1;
        let node = self.inst.node_lp(fixing)?;
        let res = solve_lp_with(&node.lp, self.cfg.simplex)?;
        self.stats.lp_pivots += res.pivots;
        match res.status {
            LpStatus::Infeasible => return Ok(NodeOutcome::Infeasible),
            LpStatus::Unbounded => unreachable!("admission variables are bounded"),
            LpStatus::Optimal => {}
        }
        let y: Vec<f64> = fixing
            .iter()
            .zip(&node.y_col)
            .map(|(f, c)| match (f, c) {
                (Some(true), _) => 1.0,
                (Some(false), _) => 0.0,
                (None, Some(c)) => res.x[*c],
                (None, None) => unreachable!(),
            })
            .collect();
        let fixed_value: f64 = fixing
            .iter()
            .zip(&self.inst.values)
            .filter(|(f, _)| **f == Some(true))
            .map(|(_, v)| v)
            .sum();
        let bound = res.objective + fixed_value;
        let worst = y.iter().map(|v| v.min(1.0 - v).max(0.0)).fold(0.0, f64::max);
        if worst > INTEGRALITY_TOL {
            return Ok(NodeOutcome::Fractional(bound, y));
        }
        let admitted: Vec<bool> = y.iter().map(|&v| v > 0.5).collect();
        let alloc = if worst <= 1e-9 {
            self.inst.physical_allocation(&node, &res.x, &admitted)
        } else {
            // Nearly integral: recompute a clean allocation for the rounded set.
            match self.inst.allocate(&admitted, &self.cfg, &mut self.stats)? {
                Some(a) => a,
                None => return Ok(NodeOutcome::Infeasible),
            }
        };
        let value = self.inst.objective_of(&admitted);
        Ok(NodeOutcome::Integral(admitted, alloc, value))
    }

    /// Whether a node with LP bound `bound` can still beat `incumbent`.
    fn promising(&self, bound: f64, incumbent: f64) -> bool {
        if self.inst.integral_values {
            (bound + 1e-6).floor() > incumbent + 0.5
        } else {
            bound > incumbent + 1e-9 * (1.0 + incumbent.abs())
        }
    }

    fn branch_variable(&self, y: &[f64]) -> usize {
        let reqs = self.inst.requests;
        (0..y.len())
            .filter(|&ri| y[ri].min(1.0 - y[ri]) > INTEGRALITY_TOL)
            .min_by(|&a, &b| {
                let fa = (y[a] - 0.5).abs();
                let fb = (y[b] - 0.5).abs();
                fa.total_cmp(&fb)
                    .then(self.inst.values[b].total_cmp(&self.inst.values[a]))
                    .then(reqs[a].id.cmp(&reqs[b].id))
            })
            .expect("fractional node has a fractional variable")
    }

    fn run(mut self) -> Result<SlicingSolution, ExactError> {
        let start = Instant::now();
        let inst = self.inst;
        let r = inst.requests.len();
        let (mut best, mut best_alloc) = inst.greedy(&self.cfg, &mut self.stats)?;
        let mut incumbent = inst.objective_of(&best);

        let mut heap = BinaryHeap::new();
        let mut seq = 0u64;
        let mut pending = vec![vec![None; r]];
        loop {
            for fixing in pending.drain(..) {
                match self.evaluate(&fixing)? {
                    NodeOutcome::Infeasible => {}
                    NodeOutcome::Integral(adm, alloc, value) => {
                        if value > incumbent + 1e-12 {
                            best = adm;
                            best_alloc = alloc;
                            incumbent = value;
                        }
                    }
                    NodeOutcome::Fractional(bound, y) => {
                        if self.promising(bound, incumbent) {
                            heap.push(OpenNode { bound, seq, fixing, y });
                            seq += 1;
                        }
                    }
                }
            }
            let Some(node) = heap.pop() else { break };
            if !self.promising(node.bound, incumbent) {
                // Best-bound order: nothing left can improve.
                break;
            }
            let v = self.branch_variable(&node.y);
            for choice in [true, false] {
                let mut fixing = node.fixing.clone();
                fixing[v] = Some(choice);
                pending.push(fixing);
            }
        }

        let mut stats = self.stats;
        stats.wall_time = start.elapsed();
        Ok(inst.solution_from(&best, best_alloc, stats))
    }
}

/// Solves the instance to proven optimality.
pub fn solve_exact(inst: &EspInstance<'_>, cfg: &ExactConfig) -> Result<SlicingSolution, ExactError> {
    BranchAndBound {
        inst,
        cfg: *cfg,
        stats: SolverStats::default(),
    }
    .run()
}

/// Enumerates every admission vector (in decreasing objective order) and
/// returns the first one with a feasible allocation.
pub fn brute_force(inst: &EspInstance<'_>) -> Result<SlicingSolution, ExactError> {
    let r = inst.num_requests();
    if r > BRUTE_FORCE_MAX_REQUESTS {
        return Err(ExactError::TooLarge {
            got: r,
            max: BRUTE_FORCE_MAX_REQUESTS,
        });
    }
    let start = Instant::now();
    let cfg = ExactConfig::default();
    let mut stats = SolverStats::default();
    let to_vec = |mask: u32| -> Vec<bool> { (0..r).map(|i| mask >> i & 1 == 1).collect() };
    let mut masks: Vec<(f64, u32)> = (0..1u32 << r).map(|m| (inst.objective_of(&to_vec(m)), m)).collect();
    masks.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    for (value, mask) in masks {
        if value <= 0.0 && mask != 0 {
            continue;
        }
        let admitted = to_vec(mask);
        if let Some(alloc) = inst.allocate(&admitted, &cfg, &mut stats)? {
            stats.wall_time = start.elapsed();
            return Ok(inst.solution_from(&admitted, alloc, stats));
        }
    }
    // The empty admission always has the empty allocation.
    stats.wall_time = start.elapsed();
    Ok(inst.solution_from(&vec![false; r], BTreeMap::new(), stats))
}
