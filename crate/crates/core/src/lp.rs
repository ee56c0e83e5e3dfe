//! Dense two-phase simplex for the minimax (Chebyshev) fit
//! `min_mu max_r |T_r - <v_r, mu>|`, plus a subgradient fallback.
//!
//! The primal `min t s.t. +-(<v, mu> - T_v) <= t` is solved through its dual
//! `min b^T y s.t. sum_r y_r a_r = 0, sum_r y_r = 1, y >= 0` with rows
//! `a = +-v`, `b = +-T_v`. The primal solution is read off the simplex
//! multipliers: `(mu, -t) = c_B^T B^{-1}`.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverStatus {
    Optimal,
    IterLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpOutcome {
    pub mu: Vec<f64>,
    pub t: f64,
    /// Dual weights on the `2m` rows `(+v_1, -v_1, +v_2, ...)`; empty for the fallback.
    pub dual: Vec<f64>,
    pub status: SolverStatus,
    pub iterations: usize,
    /// Some row of the dual system was redundant: the minimizer is not unique.
    pub rank_deficient: bool,
}

const PIVOT_TOL: f64 = 1e-11;
const MAX_PIVOTS: usize = 100_000;
const SUBGRADIENT_ITERS: usize = 100_000;

struct Tableau {
    rows: usize,
    cols: usize,
    /// `rows x (cols + 1)`, last column is the right-hand side.
    a: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * (self.cols + 1) + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.cols)
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.cols + 1;
        let p = self.a[r * w + c];
        for j in 0..w {
            self.a[r * w + j] /= p;
        }
        let pivot_row: Vec<f64> = self.a[r * w..(r + 1) * w].to_vec();
        for i in 0..self.rows {
            if i == r {
                continue;
            }
            let f = self.a[i * w + c];
            if f != 0.0 {
                for (a, p) in self.a[i * w..(i + 1) * w].iter_mut().zip(&pivot_row) {
                    *a -= f * p;
                }
                self.a[i * w + c] = 0.0;
            }
        }
        self.basis[r] = c;
    }

    /// Minimize `cost` over columns `0..allowed` with Bland's rule.
    /// Returns `false` on hitting the pivot cap.
    fn optimize(&mut self, cost: &[f64], allowed: usize, pivots: &mut usize) -> bool {
        let scale = cost.iter().fold(1.0f64, |a, c| a.max(c.abs()));
        loop {
            let entering = (0..allowed).find(|&j| {
                if self.basis.contains(&j) {
                    return false;
                }
                let z: f64 = cost[j] - (0..self.rows).map(|i| cost[self.basis[i]] * self.at(i, j)).sum::<f64>();
                z < -1e-12 * scale
            });
            let Some(c) = entering else { return true };
            let mut best: Option<(usize, f64)> = None;
            for i in 0..self.rows {
                let aij = self.at(i, c);
                if aij > PIVOT_TOL {
                    let ratio = self.rhs(i) / aij;
                    best = match best {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            if ratio < br - 1e-15 || (ratio <= br + 1e-15 && self.basis[i] < self.basis[bi]) {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    }
                }
            }
            // The dual is bounded below (by -max |T|), so an unbounded ray is a numerical failure.
            let Some((r, _)) = best else { return false };
            self.pivot(r, c);
            *pivots += 1;
            if *pivots >= MAX_PIVOTS {
                return false;
            }
        }
    }
}

/// Solve `min_mu max_r |tvals[r] - <vectors[r], mu>|`.
pub fn solve_minimax(tvals: &[f64], vectors: &[Vec<f64>]) -> LpOutcome {
    let d = vectors[0].len();
    let m = vectors.len();
    let n_cols = 2 * m;
    let rows = d + 1;
    let cols = n_cols + rows;
    let mut a = vec![0.0; rows * (cols + 1)];
    let mut cost = vec![0.0; cols];
    for (r, v) in vectors.iter().enumerate() {
        for (sign, col) in [(1.0, 2 * r), (-1.0, 2 * r + 1)] {
            for (i, x) in v.iter().enumerate() {
                a[i * (cols + 1) + col] = sign * x;
            }
            a[d * (cols + 1) + col] = 1.0;
            cost[col] = sign * tvals[r];
        }
    }
    for i in 0..rows {
        a[i * (cols + 1) + n_cols + i] = 1.0;
    }
    a[d * (cols + 1) + cols] = 1.0;
    let mut tab = Tableau { rows, cols, a, basis: (n_cols..cols).collect() };

    let mut pivots = 0;
    let phase1: Vec<f64> = (0..cols).map(|j| if j >= n_cols { 1.0 } else { 0.0 }).collect();
    let ok1 = tab.optimize(&phase1, n_cols, &mut pivots);
    let infeas: f64 = (0..rows).filter(|&i| tab.basis[i] >= n_cols).map(|i| tab.rhs(i)).sum();
    if !ok1 || infeas > 1e-9 {
        return subgradient(tvals, vectors, pivots);
    }
    // Drive zero-level artificials out of the basis where possible.
    let mut rank_deficient = false;
    for i in 0..rows {
        if tab.basis[i] >= n_cols {
            match (0..n_cols).find(|&j| !tab.basis.contains(&j) && tab.at(i, j).abs() > 1e-9) {
                Some(j) => tab.pivot(i, j),
                None => rank_deficient = true,
            }
        }
    }
    if !tab.optimize(&cost, n_cols, &mut pivots) {
        return subgradient(tvals, vectors, pivots);
    }
    // Multipliers pi = c_B^T B^{-1}; B^{-1} sits in the artificial columns.
    let pi: Vec<f64> = (0..rows).map(|k| (0..rows).map(|i| cost[tab.basis[i]] * tab.at(i, n_cols + k)).sum()).collect();
    let mut dual = vec![0.0; n_cols];
    for i in 0..rows {
        if tab.basis[i] < n_cols {
            dual[tab.basis[i]] = tab.rhs(i).max(0.0);
        }
    }
    LpOutcome { mu: pi[..d].to_vec(), t: -pi[d], dual, status: SolverStatus::Optimal, iterations: pivots, rank_deficient }
}

/// Chebyshev residual `max_r |T_r - <v_r, mu>|`.
pub fn max_residual(tvals: &[f64], vectors: &[Vec<f64>], mu: &[f64]) -> f64 {
    tvals
        .iter()
        .zip(vectors)
        .map(|(t, v)| (t - v.iter().zip(mu).map(|(a, b)| a * b).sum::<f64>()).abs())
        .fold(0.0, f64::max)
}

/// Dual objective `-b^T y` for weights on `(+v_1, -v_1, ...)`.
pub fn dual_objective(tvals: &[f64], dual: &[f64]) -> f64 {
    -tvals.iter().enumerate().map(|(r, t)| t * (dual[2 * r] - dual[2 * r + 1])).sum::<f64>()
}

/// Subgradient descent with step `c / sqrt(k)`, keeping the best iterate.
pub fn subgradient(tvals: &[f64], vectors: &[Vec<f64>], pivots: usize) -> LpOutcome {
    let d = vectors[0].len();
    let mut mu = vec![0.0; d];
    let mut best = mu.clone();
    let mut best_val = max_residual(tvals, vectors, &mu);
    let scale = tvals.iter().fold(1.0f64, |a, t| a.max(t.abs()));
    for it in 1..=SUBGRADIENT_ITERS {
        let (r, res) = tvals
            .iter()
            .zip(vectors)
            .map(|(t, v)| t - v.iter().zip(&mu).map(|(a, b)| a * b).sum::<f64>())
            .enumerate()
            .fold((0, 0.0f64), |acc, (r, x)| if x.abs() > acc.1.abs() { (r, x) } else { acc });
        if res == 0.0 {
            break;
        }
        // d/dmu |T - <v, mu>| = -sign(res) v.
        let v = &vectors[r];
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let step = scale / (it as f64).sqrt() / norm.max(1e-300);
        for (m, x) in mu.iter_mut().zip(v) {
            *m += step * res.signum() * x;
        }
        let val = max_residual(tvals, vectors, &mu);
        if val < best_val {
            best_val = val;
            best.clone_from(&mu);
        }
    }
    LpOutcome { mu: best, t: best_val, dual: Vec::new(), status: SolverStatus::IterLimit, iterations: pivots, rank_deficient: false }
}
