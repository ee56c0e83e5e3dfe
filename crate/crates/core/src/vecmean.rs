//! Mean estimation under a norm `||x|| = max_{v in S} <x, v>`: trimmed means
//! along the dual directions, then the minimax fit of a single vector.

use serde::{Deserialize, Serialize};

use crate::contamination::{check_epsilon, contamination_budget, ContaminatedSample};
use crate::error::{invalid, Error, Result};
use crate::estimators::trimmed_mean;
use crate::gaussian::{dot, NormSpecFinite};
use crate::lp::{dual_objective, max_residual, solve_minimax, SolverStatus};

/// Trim level for the vector mean: `k = floor(eps n) + ceil(C n^{(p-2)/(4p-2)} K_n)`
/// with `K_n = (2d + 4) max(ln n, ln 8e)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VecMeanPlan {
    pub n: usize,
    pub d: usize,
    pub epsilon: f64,
    pub p: f64,
    pub k_n: f64,
    pub k: usize,
    /// The unspecified absolute constant `C`; 1 by default.
    pub c_knob: f64,
}

pub const DEFAULT_C_KNOB: f64 = 1.0;

pub fn vecmean_plan(n: usize, d: usize, epsilon: f64, p: f64, c_knob: f64) -> Result<VecMeanPlan> {
    check_epsilon(epsilon)?;
    if n < 3 {
        return Err(invalid(format!("n = {n}; need n >= 3")));
    }
    if !(p > 2.0) || !(c_knob > 0.0) || d == 0 {
        return Err(invalid("need p > 2, C > 0 and d >= 1"));
    }
    let nf = n as f64;
    let ln8e = 8f64.ln() + 1.0;
    let k_n = (2.0 * d as f64 + 4.0) * nf.ln().max(ln8e);
    let k = contamination_budget(epsilon, n) + (c_knob * nf.powf((p - 2.0) / (4.0 * p - 2.0)) * k_n).ceil() as usize;
    if 2 * k >= n {
        return Err(Error::InfeasibleTrim { k, n });
    }
    Ok(VecMeanPlan { n, d, epsilon, p, k_n, k, c_knob })
}

/// `T_v` = trimmed mean of `<v, X_i>` for each `v` in `S`, in the order of `S`.
pub fn directional_trimmed_means(data: &ContaminatedSample, s: &NormSpecFinite, k: usize) -> Result<Vec<f64>> {
    let n = data.n();
    if 2 * k >= n {
        return Err(Error::TrimTooLarge { k, n });
    }
    if s.dim() != data.d() {
        return Err(invalid("dual set dimension does not match the data"));
    }
    s.vectors()
        .iter()
        .map(|v| {
            let proj: Vec<f64> = (0..n).map(|i| dot(v, data.values.row(i))).collect();
            trimmed_mean(&proj, k)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinimaxSolution {
    pub mu_hat: Vec<f64>,
    /// `max_{v in S} |T_v - <v, mu_hat>|`.
    pub objective: f64,
    pub status: SolverStatus,
    pub duality_gap: f64,
    /// `false` when `S` does not pin down every coordinate.
    pub unique: bool,
}

/// Solve `min_mu max_{v in S} |T_v - <v, mu>|`.
///
/// When every `v` has a single nonzero coordinate the problem splits by
/// coordinate and each piece is solved exactly; otherwise a dense simplex is
/// used, falling back to subgradient descent.
pub fn minimax_mean(tvals: &[f64], s: &NormSpecFinite) -> Result<MinimaxSolution> {
    if s.is_empty() {
        return Err(Error::Degenerate("empty dual set".into()));
    }
    if tvals.len() != s.len() {
        return Err(invalid("one trimmed mean per dual vector is required"));
    }
    let vs = s.vectors();
    if let Some(sol) = axis_aligned(tvals, vs) {
        return Ok(sol);
    }
    let out = solve_minimax(tvals, vs);
    let objective = max_residual(tvals, vs, &out.mu);
    let (status, duality_gap) = match out.status {
        SolverStatus::Optimal => {
            let gap = (objective - dual_objective(tvals, &out.dual)).abs();
            if gap <= 1e-8 * (1.0 + objective) {
                (SolverStatus::Optimal, gap)
            } else {
                log::warn!("simplex duality gap {gap:e}; falling back to subgradient");
                let sub = crate::lp::subgradient(tvals, vs, out.iterations);
                let obj = max_residual(tvals, vs, &sub.mu);
                return Ok(MinimaxSolution { mu_hat: sub.mu, objective: obj, status: SolverStatus::IterLimit, duality_gap: f64::NAN, unique: false });
            }
        }
        SolverStatus::IterLimit => (SolverStatus::IterLimit, f64::NAN),
    };
    let unique = !out.rank_deficient && spans(vs);
    Ok(MinimaxSolution { mu_hat: out.mu, objective, status, duality_gap, unique })
}

fn spans(vs: &[Vec<f64>]) -> bool {
    // Gaussian elimination rank of the dual vectors.
    let d = vs[0].len();
    let mut rows: Vec<Vec<f64>> = vs.to_vec();
    let mut rank = 0;
    for col in 0..d {
        let Some(p) = (rank..rows.len()).max_by(|&a, &b| rows[a][col].abs().total_cmp(&rows[b][col].abs())) else { break };
        if rows[p][col].abs() < 1e-12 {
            continue;
        }
        rows.swap(rank, p);
        for i in 0..rows.len() {
            if i != rank {
                let f = rows[i][col] / rows[rank][col];
                for j in 0..d {
                    rows[i][j] -= f * rows[rank][j];
                }
            }
        }
        rank += 1;
    }
    rank == d
}

/// Exact solution when each dual vector is `c e_j`: coordinate `j` minimizes
/// `max |c| |T/c - mu_j|`, a weighted one-dimensional Chebyshev center.
fn axis_aligned(tvals: &[f64], vs: &[Vec<f64>]) -> Option<MinimaxSolution> {
    let d = vs[0].len();
    let mut per_coord: Vec<Vec<(f64, f64)>> = vec![Vec::new(); d];
    for (t, v) in tvals.iter().zip(vs) {
        let mut nz = v.iter().enumerate().filter(|(_, x)| **x != 0.0);
        let (j, &c) = nz.next()?;
        if nz.next().is_some() {
            return None;
        }
        per_coord[j].push((t / c, c.abs()));
    }
    let mut mu = vec![0.0; d];
    let mut unique = true;
    for (j, pts) in per_coord.iter().enumerate() {
        if pts.is_empty() {
            unique = false;
            continue;
        }
        let obj = |m: f64| pts.iter().map(|(a, w)| w * (a - m).abs()).fold(0.0, f64::max);
        let mut candidates: Vec<f64> = pts.iter().map(|p| p.0).collect();
        for (i, &(a, w)) in pts.iter().enumerate() {
            for &(b, u) in &pts[i + 1..] {
                candidates.push((w * a + u * b) / (w + u));
            }
        }
        mu[j] = candidates.into_iter().fold((f64::NAN, f64::INFINITY), |best, m| {
            let o = obj(m);
            if o < best.1 {
                (m, o)
            } else {
                best
            }
        }).0;
    }
    let objective = max_residual(tvals, vs, &mu);
    Some(MinimaxSolution { mu_hat: mu, objective, status: SolverStatus::Optimal, duality_gap: 0.0, unique })
}

/// `||x||_S = max_{v in S} <x, v>`.
pub fn s_norm(x: &[f64], s: &NormSpecFinite) -> f64 {
    s.norm(x)
}

/// `||mu_hat - mu_true||_S <= 2 max_v |T_v - <v, mu_true>| + tol`.
pub fn check_minimax_error_bound(mu_hat: &[f64], tvals: &[f64], mu_true: &[f64], s: &NormSpecFinite, tol: f64) -> bool {
    let diff: Vec<f64> = mu_hat.iter().zip(mu_true).map(|(a, b)| a - b).collect();
    let lhs = s.norm(&diff);
    let rhs = 2.0 * max_residual(tvals, s.vectors(), mu_true);
    lhs <= rhs + tol
}
