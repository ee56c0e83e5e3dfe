//! The Gaussian side of every comparison: Cholesky sampling of `G_P`,
//! Gaussian width, the modulus `Xi(delta)` and an anti-concentration check.

use nalgebra::{Cholesky, DMatrix};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numeric::{mean, pairwise_sum};
use crate::rng::Stream;

/// Jitter ladder, as multiples of the largest diagonal entry.
pub const JITTER_LADDER: [f64; 7] = [0.0, 1e-12, 1e-11, 1e-10, 1e-9, 1e-8, 1e-7];
const JITTER_MAX: f64 = 1e-6;

/// A covariance matrix with a lower Cholesky factor of `sigma + jitter I`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CovarianceModel {
    pub d: usize,
    /// Row-major `d x d`.
    pub sigma: Vec<f64>,
    /// Row-major lower-triangular factor.
    pub chol: Vec<f64>,
    pub jitter: f64,
    /// Diagonal `sigma`: the factor is the vector of standard deviations.
    pub diagonal: bool,
}

fn check_symmetric(sigma: &[f64], d: usize) -> Result<()> {
    if sigma.len() != d * d {
        return Err(invalid(format!("covariance has {} entries, expected {}", sigma.len(), d * d)));
    }
    let scale = sigma.iter().fold(0.0f64, |a, x| a.max(x.abs())).max(1e-300);
    for j in 0..d {
        for l in 0..j {
            if (sigma[j * d + l] - sigma[l * d + j]).abs() > 1e-12 * scale {
                return Err(invalid(format!("covariance not symmetric at ({j}, {l})")));
            }
        }
    }
    Ok(())
}

/// Cholesky factorization, retrying with jitter `1e-12 * maxdiag` escalating by
/// a factor 10 up to `1e-6 * maxdiag`.
pub fn cholesky_with_jitter(sigma: &[f64], d: usize) -> Result<CovarianceModel> {
    check_symmetric(sigma, d)?;
    let maxdiag = (0..d).map(|j| sigma[j * d + j]).fold(0.0, f64::max);
    if (0..d).any(|j| !(sigma[j * d + j] > 0.0)) {
        return Err(invalid("covariance diagonal must be positive"));
    }
    let diagonal = (0..d).all(|j| (0..d).all(|l| j == l || sigma[j * d + l] == 0.0));
    if diagonal {
        let mut chol = vec![0.0; d * d];
        for j in 0..d {
            chol[j * d + j] = sigma[j * d + j].sqrt();
        }
        return Ok(CovarianceModel { d, sigma: sigma.to_vec(), chol, jitter: 0.0, diagonal });
    }
    let ladder = JITTER_LADDER.iter().copied().chain(std::iter::once(JITTER_MAX));
    for rel in ladder {
        let jitter = rel * maxdiag;
        let m = DMatrix::from_fn(d, d, |i, j| sigma[i * d + j] + if i == j { jitter } else { 0.0 });
        if let Some(c) = Cholesky::new(m) {
            let l = c.l();
            let chol = (0..d * d).map(|idx| l[(idx / d, idx % d)]).collect();
            return Ok(CovarianceModel { d, sigma: sigma.to_vec(), chol, jitter, diagonal });
        }
    }
    Err(Error::NotPsd { jitter: JITTER_MAX * maxdiag })
}

impl CovarianceModel {
    pub fn new(sigma: &[f64], d: usize) -> Result<Self> {
        cholesky_with_jitter(sigma, d)
    }

    pub fn identity(d: usize) -> Self {
        let mut sigma = vec![0.0; d * d];
        for j in 0..d {
            sigma[j * d + j] = 1.0;
        }
        cholesky_with_jitter(&sigma, d).expect("identity is positive definite")
    }

    /// Smallest standard deviation.
    pub fn sigma_lower(&self) -> f64 {
        (0..self.d).map(|j| self.sigma[j * self.d + j]).fold(f64::INFINITY, f64::min).sqrt()
    }

    /// Write `L w` into `out` for a standard normal vector `w` drawn from `rng`.
    pub fn draw_into(&self, rng: &mut impl Rng, w: &mut [f64], out: &mut [f64]) {
        let d = self.d;
        for x in w.iter_mut() {
            *x = rng.sample(StandardNormal);
        }
        if self.diagonal {
            for j in 0..d {
                out[j] = self.chol[j * d + j] * w[j];
            }
            return;
        }
        for j in 0..d {
            let row = &self.chol[j * d..j * d + j + 1];
            out[j] = row.iter().zip(&w[..=j]).map(|(a, b)| a * b).sum();
        }
    }

    /// `R` draws of the full Gaussian vector, row-major `R x d`.
    pub fn vector_draws(&self, r: usize, stream: Stream) -> Vec<f64> {
        let d = self.d;
        let rows: Vec<Vec<f64>> = (0..r)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream.substream(i as u64).rng();
                let mut w = vec![0.0; d];
                let mut out = vec![0.0; d];
                self.draw_into(&mut rng, &mut w, &mut out);
                out
            })
            .collect();
        rows.concat()
    }
}

/// `R` i.i.d. draws of `max_j (L W)_j`; draw `r` uses substream `r`.
pub fn gaussian_sup_draws(model: &CovarianceModel, r: usize, stream: Stream) -> Vec<f64> {
    let d = model.d;
    (0..r)
        .into_par_iter()
        .map_init(
            || (vec![0.0; d], vec![0.0; d]),
            |(w, out), i| {
                let mut rng = stream.substream(i as u64).rng();
                model.draw_into(&mut rng, w, out);
                out.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            },
        )
        .collect()
}

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn from_draws(xs: &[f64]) -> Self {
        let m = mean(xs);
        let n = xs.len() as f64;
        let dev: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
        let var = if xs.len() > 1 { pairwise_sum(&dev) / (n - 1.0) } else { 0.0 };
        Estimate { value: m, stderr: (var / n).sqrt() }
    }
}

/// A finite symmetric dual set `S`; the norm is `||x|| = max_{v in S} <x, v>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormSpecFinite {
    vectors: Vec<Vec<f64>>,
}

impl NormSpecFinite {
    /// Validate an explicit list: equal dimensions, no zero vector, closed under negation.
    pub fn new(vectors: Vec<Vec<f64>>) -> Result<Self> {
        let d = vectors.first().map(Vec::len).ok_or_else(|| Error::Degenerate("empty dual set".into()))?;
        if d == 0 {
            return Err(Error::Degenerate("zero-dimensional dual set".into()));
        }
        for v in &vectors {
            if v.len() != d {
                return Err(invalid("dual vectors have different dimensions"));
            }
            if v.iter().all(|x| *x == 0.0) {
                return Err(invalid("dual set contains the zero vector"));
            }
            if !v.iter().all(|x| x.is_finite()) {
                return Err(invalid("dual set contains a non-finite entry"));
            }
            let neg: Vec<f64> = v.iter().map(|x| -x).collect();
            if !vectors.contains(&neg) {
                return Err(invalid(format!("dual set is not symmetric: missing -{v:?}")));
            }
        }
        Ok(NormSpecFinite { vectors })
    }

    /// Close `half` under negation, keeping the order `v_1, -v_1, v_2, -v_2, ...`.
    pub fn symmetrized(half: Vec<Vec<f64>>) -> Result<Self> {
        let mut all: Vec<Vec<f64>> = Vec::with_capacity(2 * half.len());
        for v in half {
            let neg: Vec<f64> = v.iter().map(|x| -x).collect();
            if !all.contains(&v) {
                all.push(v);
            }
            if !all.contains(&neg) {
                all.push(neg);
            }
        }
        Self::new(all)
    }

    /// `{+-e_1, ..., +-e_d}`: the sup-norm.
    pub fn linf(d: usize) -> Self {
        let half = (0..d)
            .map(|j| {
                let mut e = vec![0.0; d];
                e[j] = 1.0;
                e
            })
            .collect();
        Self::symmetrized(half).expect("unit vectors form a valid dual set")
    }

    /// Parse one vector per line (whitespace or comma separated, `#` comments)
    /// and close the list under negation.
    pub fn parse(text: &str) -> Result<Self> {
        let mut half = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let v = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<f64>().map_err(|e| invalid(format!("line {}: {e}", lineno + 1))))
                .collect::<Result<Vec<f64>>>()?;
            half.push(v);
        }
        Self::symmetrized(half)
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].len()
    }

    /// `max_{v in S} <x, v>`.
    pub fn norm(&self, x: &[f64]) -> f64 {
        self.vectors.iter().map(|v| dot(v, x)).fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Covariance of `{<v, X>: v in S}` when `X` has covariance `gamma`.
pub fn family_covariance(gamma: &[f64], d: usize, s: &NormSpecFinite) -> Vec<f64> {
    let m = s.len();
    let gv: Vec<Vec<f64>> =
        s.vectors().iter().map(|v| (0..d).map(|j| dot(&gamma[j * d..(j + 1) * d], v)).collect()).collect();
    let mut out = vec![0.0; m * m];
    for a in 0..m {
        for b in 0..m {
            out[a * m + b] = dot(&s.vectors()[a], &gv[b]);
        }
    }
    out
}

/// Monte Carlo estimate of `E sup_{v in S} <v, L W>` where `L L^T = gamma`.
pub fn gaussian_width(gamma: &[f64], d: usize, s: &NormSpecFinite, r: usize, stream: Stream) -> Result<Estimate> {
    if r < 2 {
        return Err(invalid("gaussian_width needs R >= 2"));
    }
    if s.dim() != d {
        return Err(invalid("dual set dimension does not match the covariance"));
    }
    if gamma.iter().all(|x| *x == 0.0) {
        return Ok(Estimate { value: 0.0, stderr: 0.0 });
    }
    check_symmetric(gamma, d)?;
    // Zero-variance coordinates carry no randomness; factor the rest.
    let live: Vec<usize> = (0..d).filter(|&j| gamma[j * d + j] > 0.0).collect();
    let dl = live.len();
    let sub: Vec<f64> = live.iter().flat_map(|&a| live.iter().map(move |&b| gamma[a * d + b])).collect();
    let model = cholesky_with_jitter(&sub, dl)?;
    let proj: Vec<Vec<f64>> = s.vectors().iter().map(|v| live.iter().map(|&j| v[j]).collect()).collect();
    let draws: Vec<f64> = (0..r)
        .into_par_iter()
        .map_init(
            || (vec![0.0; dl], vec![0.0; dl]),
            |(w, g), i| {
                let mut rng = stream.substream(i as u64).rng();
                model.draw_into(&mut rng, w, g);
                proj.iter().map(|v| dot(v, g)).fold(f64::NEG_INFINITY, f64::max)
            },
        )
        .collect();
    Ok(Estimate::from_draws(&draws))
}

/// Monte Carlo estimate of `Xi(delta) = E max_{(j,l): d_P(j,l) < delta} (G_j - G_l)`,
/// with `d_P(j,l)^2 = Sigma_jj + Sigma_ll - 2 Sigma_jl`. Pairs `j = l` count.
pub fn xi_estimate(model: &CovarianceModel, delta: f64, r: usize, stream: Stream) -> Result<Estimate> {
    let d = model.d;
    if d > 2000 {
        return Err(invalid(format!("xi_estimate scans all pairs; d = {d} exceeds 2000")));
    }
    let s = &model.sigma;
    let mut pairs = Vec::new();
    for j in 0..d {
        for l in 0..d {
            let dist2 = (s[j * d + j] + s[l * d + l] - 2.0 * s[j * d + l]).max(0.0);
            if j != l && dist2.sqrt() < delta {
                pairs.push((j, l));
            }
        }
    }
    // Only diagonal pairs (or none): every term is G_j - G_j = 0.
    if pairs.is_empty() {
        return Ok(Estimate { value: 0.0, stderr: 0.0 });
    }
    let draws: Vec<f64> = (0..r)
        .into_par_iter()
        .map_init(
            || (vec![0.0; d], vec![0.0; d]),
            |(w, g), i| {
                let mut rng = stream.substream(i as u64).rng();
                model.draw_into(&mut rng, w, g);
                let best = pairs.iter().map(|&(j, l)| g[j] - g[l]).fold(f64::NEG_INFINITY, f64::max);
                if delta > 0.0 {
                    best.max(0.0)
                } else {
                    best
                }
            },
        )
        .collect();
    Ok(Estimate::from_draws(&draws))
}

/// Band probabilities `P(lambda <= Z <= lambda + delta)` against the
/// anti-concentration bound `(delta / sigma_lower) (2 + sqrt(2 ln d))`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NazarovReport {
    pub bound: f64,
    pub lambdas: Vec<f64>,
    pub probabilities: Vec<f64>,
    /// `max over the grid of (probability - bound)`.
    pub worst_excess: f64,
    pub stderr: f64,
    pub pass: bool,
}

pub fn nazarov_bound(delta: f64, sigma_lower: f64, d: usize) -> f64 {
    delta / sigma_lower * (2.0 + (2.0 * (d as f64).ln()).sqrt())
}

pub fn nazarov_diagnostic(
    model: &CovarianceModel,
    delta: f64,
    lambdas: &[f64],
    r: usize,
    stream: Stream,
) -> Result<NazarovReport> {
    let sl = model.sigma_lower();
    if !(sl > 0.0) {
        return Err(invalid("nazarov diagnostic needs a positive smallest variance"));
    }
    let mut draws = gaussian_sup_draws(model, r, stream);
    draws.sort_by(f64::total_cmp);
    let bound = nazarov_bound(delta, sl, model.d);
    let rf = r as f64;
    let probabilities: Vec<f64> = lambdas
        .iter()
        .map(|&lam| {
            let lo = draws.partition_point(|&z| z < lam);
            let hi = draws.partition_point(|&z| z <= lam + delta);
            if delta <= 0.0 {
                // A continuous law puts no mass on a point.
                0.0
            } else {
                (hi - lo) as f64 / rf
            }
        })
        .collect();
    let worst_excess = probabilities.iter().map(|q| q - bound).fold(f64::NEG_INFINITY, f64::max);
    let stderr = probabilities.iter().map(|q| (q * (1.0 - q) / rf).sqrt()).fold(0.0, f64::max);
    Ok(NazarovReport { bound, lambdas: lambdas.to_vec(), probabilities, worst_excess, stderr, pass: worst_excess <= 3.0 * stderr })
}
