//! Dense two-phase primal simplex.
//!
//! Solves `maximize c.x` subject to `E x = f`, `A x <= b`, `0 <= x <= u`.
//! Upper bounds are turned into ordinary `<=` rows. Phase 1 minimizes the
//! sum of artificial variables; phase 2 optimizes the real objective from
//! the feasible basis phase 1 leaves behind.

use thiserror::Error;

/// Smallest magnitude accepted as a pivot element.
pub const PIVOT_TOL: f64 = 1e-9;
/// Reduced-cost threshold for an improving column.
pub const OPT_TOL: f64 = 1e-9;
/// Constraint satisfaction tolerance for returned points.
pub const FEAS_TOL: f64 = 1e-7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite coefficient in {0}")]
    NonFinite(&'static str),
    #[error("simplex iteration limit ({0}) reached")]
    IterationLimit(u64),
}

/// Entering-variable selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PivotRule {
    /// Lowest-index improving column; never cycles.
    Bland,
    /// Largest reduced cost, falling back to Bland's rule after a run of
    /// degenerate pivots and returning once the objective moves again.
    #[default]
    DantzigBland,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    n: usize,
    objective: Vec<f64>,
    eq_rows: Vec<Vec<f64>>,
    eq_rhs: Vec<f64>,
    le_rows: Vec<Vec<f64>>,
    le_rhs: Vec<f64>,
    upper: Vec<Option<f64>>,
}

impl LpProblem {
    /// A problem over `n` non-negative variables with a zero objective.
    pub fn new(n: usize) -> Self {
        LpProblem {
            n,
            objective: vec![0.0; n],
            eq_rows: Vec::new(),
            eq_rhs: Vec::new(),
            le_rows: Vec::new(),
            le_rhs: Vec::new(),
            upper: vec![None; n],
        }
    }

    /// Builds from dense matrices; checks every dimension.
    pub fn from_dense(
        objective: Vec<f64>,
        eq: (Vec<Vec<f64>>, Vec<f64>),
        le: (Vec<Vec<f64>>, Vec<f64>),
        upper: Option<Vec<f64>>,
    ) -> Result<Self, LpError> {
        let n = objective.len();
        let p = LpProblem {
            n,
            objective,
            eq_rows: eq.0,
            eq_rhs: eq.1,
            le_rows: le.0,
            le_rhs: le.1,
            upper: match upper {
                Some(u) => u.into_iter().map(|x| if x.is_infinite() { None } else { Some(x) }).collect(),
                None => vec![None; n],
            },
        };
        p.validate()?;
        Ok(p)
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub fn num_constraints(&self) -> usize {
        self.eq_rows.len() + self.le_rows.len() + self.upper.iter().flatten().count()
    }

    pub fn set_objective(&mut self, c: Vec<f64>) -> Result<(), LpError> {
        if c.len() != self.n {
            return Err(LpError::Dimension(format!("objective has {} entries, expected {}", c.len(), self.n)));
        }
        self.objective = c;
        Ok(())
    }

    pub fn set_objective_coeff(&mut self, j: usize, c: f64) {
        self.objective[j] = c;
    }

    pub fn add_eq(&mut self, row: Vec<f64>, rhs: f64) -> Result<(), LpError> {
        self.check_row(&row)?;
        self.eq_rows.push(row);
        self.eq_rhs.push(rhs);
        Ok(())
    }

    pub fn add_le(&mut self, row: Vec<f64>, rhs: f64) -> Result<(), LpError> {
        self.check_row(&row)?;
        self.le_rows.push(row);
        self.le_rhs.push(rhs);
        Ok(())
    }

    /// Adds `sum coef * x[col] = rhs` from `(col, coef)` pairs.
    pub fn add_eq_sparse(&mut self, terms: &[(usize, f64)], rhs: f64) -> Result<(), LpError> {
        let row = self.densify(terms)?;
        self.add_eq(row, rhs)
    }

    /// Adds `sum coef * x[col] <= rhs` from `(col, coef)` pairs.
    pub fn add_le_sparse(&mut self, terms: &[(usize, f64)], rhs: f64) -> Result<(), LpError> {
        let row = self.densify(terms)?;
        self.add_le(row, rhs)
    }

    pub fn set_upper(&mut self, j: usize, u: f64) {
        self.upper[j] = Some(u);
    }

    fn densify(&self, terms: &[(usize, f64)]) -> Result<Vec<f64>, LpError> {
        let mut row = vec![0.0; self.n];
        for &(j, a) in terms {
            if j >= self.n {
                return Err(LpError::Dimension(format!("column {j} out of range {}", self.n)));
            }
            row[j] += a;
        }
        Ok(row)
    }

    fn check_row(&self, row: &[f64]) -> Result<(), LpError> {
        if row.len() != self.n {
            return Err(LpError::Dimension(format!("row has {} entries, expected {}", row.len(), self.n)));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), LpError> {
        if self.objective.len() != self.n || self.upper.len() != self.n {
            return Err(LpError::Dimension("objective/bounds length".into()));
        }
        if self.eq_rows.len() != self.eq_rhs.len() || self.le_rows.len() != self.le_rhs.len() {
            return Err(LpError::Dimension("row count differs from rhs length".into()));
        }
        for row in self.eq_rows.iter().chain(&self.le_rows) {
            self.check_row(row)?;
            if row.iter().any(|a| !a.is_finite()) {
                return Err(LpError::NonFinite("constraint matrix"));
            }
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(LpError::NonFinite("objective"));
        }
        if self.eq_rhs.iter().chain(&self.le_rhs).any(|b| !b.is_finite()) {
            return Err(LpError::NonFinite("right-hand side"));
        }
        if self.upper.iter().flatten().any(|u| u.is_nan()) {
            return Err(LpError::NonFinite("upper bounds"));
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, x)| c * x).sum()
    }

    /// Largest constraint violation of `x` (equalities, inequalities, bounds
    /// and non-negativity).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let dot = |row: &[f64]| row.iter().zip(x).map(|(a, x)| a * x).sum::<f64>();
        let mut worst = 0.0f64;
        for (row, f) in self.eq_rows.iter().zip(&self.eq_rhs) {
            worst = worst.max((dot(row) - f).abs());
        }
        for (row, b) in self.le_rows.iter().zip(&self.le_rhs) {
            worst = worst.max(dot(row) - b);
        }
        for (xj, u) in x.iter().zip(&self.upper) {
            worst = worst.max(-xj);
            if let Some(u) = u {
                worst = worst.max(xj - u);
            }
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpResult {
    pub status: LpStatus,
    /// Optimal vertex, or the phase-1 point for feasibility solves. Empty
    /// when infeasible.
    pub x: Vec<f64>,
    pub objective: f64,
    pub pivots: u64,
}

impl LpResult {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SimplexOptions {
    pub rule: PivotRule,
}

/// Maximizes the objective.
pub fn solve_lp(p: &LpProblem) -> Result<LpResult, LpError> {
    solve_lp_with(p, SimplexOptions::default())
}

/// Returns any feasible point (the objective is ignored).
pub fn find_feasible(p: &LpProblem) -> Result<LpResult, LpError> {
    find_feasible_with(p, SimplexOptions::default())
}

pub fn solve_lp_with(p: &LpProblem, opts: SimplexOptions) -> Result<LpResult, LpError> {
    p.validate()?;
    let mut t = Tableau::build(p, opts.rule);
    if !t.phase_one()? {
        return Ok(t.infeasible());
    }
    let unbounded = !t.phase_two(&p.objective)?;
    let x = t.primal(p.n);
    let status = if unbounded { LpStatus::Unbounded } else { LpStatus::Optimal };
    Ok(LpResult {
        status,
        objective: if unbounded { f64::INFINITY } else { p.objective_value(&x) },
        x,
        pivots: t.pivots,
    })
}

pub fn find_feasible_with(p: &LpProblem, opts: SimplexOptions) -> Result<LpResult, LpError> {
    p.validate()?;
    let mut t = Tableau::build(p, opts.rule);
    if !t.phase_one()? {
        return Ok(t.infeasible());
    }
    let x = t.primal(p.n);
    Ok(LpResult {
        status: LpStatus::Optimal,
        objective: p.objective_value(&x),
        x,
        pivots: t.pivots,
    })
}

/// Consecutive degenerate pivots tolerated before switching to Bland.
const DEGENERATE_RUN: u32 = 50;

struct Tableau {
    rows: usize,
    /// Structural + slack + artificial columns (rhs excluded).
    cols: usize,
    width: usize,
    /// `(rows + 1) x (cols + 1)`, objective row last, rhs column last.
    data: Vec<f64>,
    basis: Vec<usize>,
    first_artificial: usize,
    /// Rows found redundant after phase 1.
    dead: Vec<bool>,
    rule: PivotRule,
    pivots: u64,
    limit: u64,
    scale: f64,
}

impl Tableau {
    fn build(p: &LpProblem, rule: PivotRule) -> Tableau {
        let n = p.n;
        // (coefficients, rhs, is_le)
        let mut rows: Vec<(&[f64], f64, bool)> = Vec::new();
        let bound_rows: Vec<(Vec<f64>, f64)> = p
            .upper
            .iter()
            .enumerate()
            .filter_map(|(j, u)| {
                u.map(|u| {
                    let mut r = vec![0.0; n];
                    r[j] = 1.0;
                    (r, u)
                })
            })
            .collect();
        for (r, &f) in p.eq_rows.iter().zip(&p.eq_rhs) {
            rows.push((r, f, false));
        }
        for (r, &b) in p.le_rows.iter().zip(&p.le_rhs) {
            rows.push((r, b, true));
        }
        for (r, u) in &bound_rows {
            rows.push((r, *u, true));
        }

        let m = rows.len();
        let num_slack = rows.iter().filter(|r| r.2).count();
        let num_art = rows.iter().filter(|r| !r.2 || r.1 < 0.0).count();
        let first_slack = n;
        let first_artificial = n + num_slack;
        let cols = n + num_slack + num_art;
        let width = cols + 1;
        let mut data = vec![0.0; (m + 1) * width];
        let mut basis = vec![0; m];
        let mut slack = first_slack;
        let mut art = first_artificial;
        let mut scale = 1.0f64;
        for (i, &(coef, rhs, is_le)) in rows.iter().enumerate() {
            let sign = if rhs < 0.0 { -1.0 } else { 1.0 };
            let row = &mut data[i * width..(i + 1) * width];
            for (dst, &a) in row[..n].iter_mut().zip(coef) {
                *dst = sign * a;
            }
            row[cols] = sign * rhs;
            scale = scale.max(rhs.abs());
            if is_le {
                row[slack] = sign;
                if sign > 0.0 {
                    basis[i] = slack;
                }
                slack += 1;
            }
            if !is_le || sign < 0.0 {
                row[art] = 1.0;
                basis[i] = art;
                art += 1;
            }
        }
        Tableau {
            rows: m,
            cols,
            width,
            data,
            basis,
            first_artificial,
            dead: vec![false; m],
            rule,
            pivots: 0,
            limit: 200 * (m as u64 + cols as u64) + 10_000,
            scale,
        }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.width + j]
    }

    fn obj_row(&self) -> usize {
        self.rows
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.cols)
    }

    /// Loads reduced costs for `cost` (indexed over all tableau columns).
    fn load_objective(&mut self, cost: &[f64]) {
        let o = self.obj_row() * self.width;
        for j in 0..self.width {
            self.data[o + j] = if j < self.cols { cost[j] } else { 0.0 };
        }
        for i in 0..self.rows {
            if self.dead[i] {
                continue;
            }
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                let (head, tail) = self.data.split_at_mut(o);
                let src = &head[i * self.width..(i + 1) * self.width];
                for (dst, &a) in tail[..self.width].iter_mut().zip(src) {
                    *dst -= cb * a;
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, e: usize) {
        let w = self.width;
        let inv = 1.0 / self.at(r, e);
        let nz: Vec<usize> = {
            let row = &mut self.data[r * w..(r + 1) * w];
            for a in row.iter_mut() {
                *a *= inv;
            }
            row[e] = 1.0;
            row.iter()
                .enumerate()
                .filter(|(_, a)| **a != 0.0)
                .map(|(j, _)| j)
                .collect()
        };
        let pivot_row: Vec<f64> = self.data[r * w..(r + 1) * w].to_vec();
        for i in 0..=self.rows {
            if i == r {
                continue;
            }
            let f = self.data[i * w + e];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.data[i * w..(i + 1) * w];
            for &j in &nz {
                row[j] -= f * pivot_row[j];
            }
            row[e] = 0.0;
        }
        self.basis[r] = e;
        self.pivots += 1;
    }

    fn entering(&self, allowed: usize, bland: bool) -> Option<usize> {
        let o = self.obj_row() * self.width;
        let reduced = &self.data[o..o + allowed];
        if bland {
            reduced.iter().position(|&d| d > OPT_TOL)
        } else {
            let mut best: Option<(usize, f64)> = None;
            for (j, &d) in reduced.iter().enumerate() {
                if d > OPT_TOL && best.map_or(true, |(_, bd)| d > bd) {
                    best = Some((j, d));
                }
            }
            best.map(|(j, _)| j)
        }
    }

    fn leaving(&self, e: usize) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..self.rows {
            if self.dead[i] {
                continue;
            }
            let a = self.at(i, e);
            if a > PIVOT_TOL {
                let ratio = self.rhs(i).max(0.0) / a;
                match best {
                    None => best = Some((i, ratio)),
                    Some((bi, br)) => {
                        if ratio < br - 1e-12 * (1.0 + br.abs())
                            || (ratio <= br + 1e-12 * (1.0 + br.abs()) && self.basis[i] < self.basis[bi])
                        {
                            best = Some((i, ratio));
                        }
                    }
                }
            }
        }
        best.map(|(i, _)| i)
    }

    /// Runs simplex iterations over columns `< allowed`. Returns `false`
    /// when the objective is unbounded.
    fn iterate(&mut self, allowed: usize) -> Result<bool, LpError> {
        let mut degenerate_run = 0u32;
        loop {
            if self.pivots >= self.limit {
                return Err(LpError::IterationLimit(self.limit));
            }
            let bland = match self.rule {
                PivotRule::Bland => true,
                PivotRule::DantzigBland => degenerate_run >= DEGENERATE_RUN,
            };
            let Some(e) = self.entering(allowed, bland) else {
                return Ok(true);
            };
            let Some(r) = self.leaving(e) else {
                return Ok(false);
            };
            let step = self.rhs(r).max(0.0) / self.at(r, e);
            if step <= PIVOT_TOL {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.pivot(r, e);
        }
    }

    /// Returns whether a feasible basis was found.
    fn phase_one(&mut self) -> Result<bool, LpError> {
        if self.first_artificial == self.cols {
            return Ok(true);
        }
        let mut cost = vec![0.0; self.cols];
        for c in cost.iter_mut().skip(self.first_artificial) {
            *c = -1.0;
        }
        self.load_objective(&cost);
        self.iterate(self.cols)?;
        let infeasibility: f64 = (0..self.rows)
            .filter(|&i| self.basis[i] >= self.first_artificial)
            .map(|i| self.rhs(i).max(0.0))
            .sum();
        if infeasibility > FEAS_TOL * self.scale {
            return Ok(false);
        }
        // Drive remaining (zero-level) artificials out of the basis.
        for i in 0..self.rows {
            if self.basis[i] < self.first_artificial {
                continue;
            }
            let col = (0..self.first_artificial)
                .filter(|&j| self.at(i, j).abs() > PIVOT_TOL)
                .max_by(|&a, &b| self.at(i, a).abs().total_cmp(&self.at(i, b).abs()));
            match col {
                Some(j) => self.pivot(i, j),
                None => self.dead[i] = true,
            }
        }
        Ok(true)
    }

    /// Returns `false` when unbounded.
    fn phase_two(&mut self, objective: &[f64]) -> Result<bool, LpError> {
        let mut cost = vec![0.0; self.cols];
        cost[..objective.len()].copy_from_slice(objective);
        self.load_objective(&cost);
        self.iterate(self.first_artificial)
    }

    fn primal(&self, n: usize) -> Vec<f64> {
        let mut x = vec![0.0; n];
        for i in 0..self.rows {
            if !self.dead[i] && self.basis[i] < n {
                x[self.basis[i]] = self.rhs(i).max(0.0);
            }
        }
        x
    }

    fn infeasible(&self) -> LpResult {
        LpResult {
            status: LpStatus::Infeasible,
            x: Vec::new(),
            objective: f64::NEG_INFINITY,
            pivots: self.pivots,
        }
    }
}
