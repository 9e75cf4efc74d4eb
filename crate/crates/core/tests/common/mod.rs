#![allow(dead_code)]

use edge_slicing::linprog::{LpProblem, LpStatus};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Solves a square system by Gaussian elimination with partial pivoting.
pub fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for i in 0..n {
            if i != col {
                let f = a[i][col] / a[col][col];
                if f != 0.0 {
                    for j in col..n {
                        a[i][j] -= f * a[col][j];
                    }
                    b[i] -= f * b[col];
                }
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

fn combinations(n: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, f);
            cur.pop();
        }
    }
    rec(0, n, k, &mut Vec::new(), f);
}

/// A small LP in plain matrix form, used to build both the engine input and
/// the oracle input.
#[derive(Debug, Clone)]
pub struct DenseLp {
    pub c: Vec<f64>,
    pub eq: Vec<(Vec<f64>, f64)>,
    pub le: Vec<(Vec<f64>, f64)>,
}

impl DenseLp {
    pub fn to_problem(&self) -> LpProblem {
        let mut p = LpProblem::new(self.c.len());
        p.set_objective(self.c.clone()).unwrap();
        for (r, f) in &self.eq {
            p.add_eq(r.clone(), *f).unwrap();
        }
        for (r, b) in &self.le {
            p.add_le(r.clone(), *b).unwrap();
        }
        p
    }

    /// Best objective over all basic feasible solutions of the problem with
    /// an extra `sum x <= cap` row, or `None` when there is none.
    fn best_vertex(&self, cap: f64) -> Option<f64> {
        let n = self.c.len();
        let mut ineq: Vec<(Vec<f64>, f64)> = self.le.clone();
        ineq.push((vec![1.0; n], cap));
        for j in 0..n {
            let mut r = vec![0.0; n];
            r[j] = -1.0;
            ineq.push((r, 0.0));
        }
        let n_eq = self.eq.len();
        if n_eq > n {
            return None;
        }
        let feasible = |x: &[f64]| {
            let dot = |r: &[f64]| r.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
            self.eq.iter().all(|(r, f)| (dot(r) - f).abs() <= 1e-7)
                && ineq.iter().all(|(r, b)| dot(r) <= b + 1e-7)
        };
        let mut best: Option<f64> = None;
        combinations(ineq.len(), n - n_eq, &mut |active| {
            let mut a: Vec<Vec<f64>> = self.eq.iter().map(|(r, _)| r.clone()).collect();
            let mut b: Vec<f64> = self.eq.iter().map(|(_, f)| *f).collect();
            for &i in active {
                a.push(ineq[i].0.clone());
                b.push(ineq[i].1);
            }
            if let Some(x) = solve_square(a, b) {
                if feasible(&x) {
                    let v: f64 = self.c.iter().zip(&x).map(|(c, x)| c * x).sum();
                    best = Some(best.map_or(v, |b: f64| b.max(v)));
                }
            }
        });
        best
    }

    /// Oracle classification and optimum by vertex enumeration.
    pub fn oracle(&self) -> (LpStatus, f64) {
        match (self.best_vertex(1e4), self.best_vertex(1e6)) {
            (None, None) => (LpStatus::Infeasible, f64::NEG_INFINITY),
            (Some(small), Some(large)) if large > small + 1e-3 => (LpStatus::Unbounded, f64::INFINITY),
            (Some(small), _) => (LpStatus::Optimal, small),
            (None, Some(_)) => (LpStatus::Infeasible, f64::NEG_INFINITY),
        }
    }
}

/// Random instance with small integer data: up to 8 variables, up to 8
/// constraints (some of them equalities), right-hand sides of both signs.
pub fn random_lp(seed: u64) -> DenseLp {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=8usize);
    let m = rng.gen_range(1..=8usize);
    let n_eq = rng.gen_range(0..=m.min(n).min(2));
    let row = |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..n).map(|_| rng.gen_range(-3..=5) as f64).collect() };
    let mut eq = Vec::new();
    let mut le = Vec::new();
    for i in 0..m {
        let r = row(&mut rng);
        let rhs = rng.gen_range(-4..=12) as f64;
        if i < n_eq {
            eq.push((r, rhs));
        } else {
            le.push((r, rhs));
        }
    }
    let c = (0..n).map(|_| rng.gen_range(-4..=6) as f64).collect();
    DenseLp { c, eq, le }
}
