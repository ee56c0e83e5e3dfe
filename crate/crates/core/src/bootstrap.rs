//! Empirical and Gaussian-multiplier bootstrap of the trimmed sup-statistic.
//!
//! One draw is `max_j sqrt(n)/(n-2k) * sum_{middle} xi_(i) (x~_(i)j - T_j)`
//! where `T_j` is the trimmed mean of the observed (contaminated) column and
//! the middle is taken after sorting the `n` products of that column.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contamination::ContaminatedSample;
use crate::error::{invalid, Error, Result};
use crate::estimators::{trimmed_mean, TrimPlan};
use crate::numeric::{pairwise_sum, trimmed_sum_unstable};
use crate::rng::Stream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BootstrapKind {
    /// Rows resampled with replacement, unit weights.
    Empirical,
    /// Original rows, i.i.d. standard normal weights.
    GaussianMultiplier,
}

/// Explicit randomness for one draw, for tests and reproductions.
#[derive(Debug, Clone, PartialEq)]
pub enum Resample {
    /// Row indices of the resample (empirical kind).
    Indices(Vec<usize>),
    /// Multipliers `xi_1..xi_n` (multiplier kind).
    Multipliers(Vec<f64>),
}

/// `R` conditionally independent draws given one data set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapDraws {
    pub draws: Vec<f64>,
    pub kind: BootstrapKind,
    pub plan: TrimPlan,
    /// Stream of the data sample the draws condition on.
    pub conditioning_seed: Stream,
    /// Fraction of contaminated rows in each resample.
    pub eps_tilde: Vec<f64>,
}

/// Data prepared once for many bootstrap draws.
pub struct BootstrapEngine<'a> {
    data: &'a ContaminatedSample,
    k: usize,
    /// Column-major copy of the data.
    cols: Vec<Vec<f64>>,
    centers: Vec<f64>,
    /// Per column: row order sorting the column (stable) and centered sorted values.
    sorted: Vec<(Vec<u32>, Vec<f64>)>,
}

impl<'a> BootstrapEngine<'a> {
    pub fn new(data: &'a ContaminatedSample, k: usize) -> Result<Self> {
        let n = data.n();
        if 2 * k >= n {
            return Err(Error::TrimTooLarge { k, n });
        }
        let cols = data.values.columns();
        let centers = cols.iter().map(|c| trimmed_mean(c, k)).collect::<Result<Vec<_>>>()?;
        let sorted = cols
            .iter()
            .zip(&centers)
            .map(|(c, &t)| {
                let mut order: Vec<u32> = (0..n as u32).collect();
                order.sort_by(|&a, &b| c[a as usize].total_cmp(&c[b as usize]));
                let vals = order.iter().map(|&i| c[i as usize] - t).collect();
                (order, vals)
            })
            .collect();
        Ok(BootstrapEngine { data, k, cols, centers, sorted })
    }

    /// Trimmed means of the observed columns (the bootstrap centers).
    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    fn scale(&self) -> f64 {
        let n = self.data.n();
        (n as f64).sqrt() / (n - 2 * self.k) as f64
    }

    /// Empirical draw from multiplicities `counts` (summing to `n`).
    fn empirical_from_counts(&self, counts: &[u32]) -> f64 {
        let n = self.data.n();
        let (lo, hi) = (self.k, n - self.k);
        let mut best = f64::NEG_INFINITY;
        let mut terms = Vec::with_capacity(n);
        for (order, vals) in &self.sorted {
            terms.clear();
            let mut pos = 0usize;
            for (&i, &v) in order.iter().zip(vals) {
                let c = counts[i as usize] as usize;
                if c == 0 {
                    continue;
                }
                let start = pos.max(lo);
                let end = (pos + c).min(hi);
                if end > start {
                    terms.push((end - start) as f64 * v);
                }
                pos += c;
                if pos >= hi {
                    break;
                }
            }
            best = best.max(pairwise_sum(&terms));
        }
        best * self.scale()
    }

    fn multiplier_from_weights(&self, xi: &[f64], buf: &mut Vec<f64>) -> f64 {
        let mut best = f64::NEG_INFINITY;
        for (col, &t) in self.cols.iter().zip(&self.centers) {
            buf.clear();
            buf.extend(col.iter().zip(xi).map(|(x, w)| w * (x - t)));
            best = best.max(trimmed_sum_unstable(buf, self.k));
        }
        best * self.scale()
    }

    /// Multiplier statistic of column `j` alone.
    pub fn column_multiplier_statistic(&self, j: usize, xi: &[f64]) -> f64 {
        let t = self.centers[j];
        let mut buf: Vec<f64> = self.cols[j].iter().zip(xi).map(|(x, w)| w * (x - t)).collect();
        trimmed_sum_unstable(&mut buf, self.k) * self.scale()
    }

    fn eps_tilde(&self, counts: &[u32]) -> f64 {
        let hits: u64 = counts.iter().zip(&self.data.mask).filter(|(_, &m)| m).map(|(&c, _)| c as u64).sum();
        hits as f64 / self.data.n() as f64
    }

    /// One draw with explicit randomness. Returns the statistic and `eps_tilde`.
    pub fn statistic_with(&self, resample: &Resample) -> Result<(f64, f64)> {
        let n = self.data.n();
        match resample {
            Resample::Indices(idx) => {
                if idx.len() != n || idx.iter().any(|&i| i >= n) {
                    return Err(invalid("resample must hold n indices in 0..n"));
                }
                let mut counts = vec![0u32; n];
                for &i in idx {
                    counts[i] += 1;
                }
                Ok((self.empirical_from_counts(&counts), self.eps_tilde(&counts)))
            }
            Resample::Multipliers(xi) => {
                if xi.len() != n {
                    return Err(invalid("need one multiplier per row"));
                }
                let mut buf = Vec::with_capacity(n);
                Ok((self.multiplier_from_weights(xi, &mut buf), self.data.replaced() as f64 / n as f64))
            }
        }
    }

    /// One random draw; the randomness comes from `stream` alone.
    pub fn statistic(&self, kind: BootstrapKind, stream: Stream) -> (f64, f64) {
        let n = self.data.n();
        let mut rng = stream.rng();
        match kind {
            BootstrapKind::Empirical => {
                let mut counts = vec![0u32; n];
                for _ in 0..n {
                    counts[rng.random_range(0..n)] += 1;
                }
                (self.empirical_from_counts(&counts), self.eps_tilde(&counts))
            }
            BootstrapKind::GaussianMultiplier => {
                let xi: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
                let mut buf = Vec::with_capacity(n);
                (self.multiplier_from_weights(&xi, &mut buf), self.data.replaced() as f64 / n as f64)
            }
        }
    }

    /// `R` draws; draw `r` uses `stream.substream(r)`.
    pub fn draws(&self, kind: BootstrapKind, r: usize, stream: Stream) -> (Vec<f64>, Vec<f64>) {
        (0..r).into_par_iter().map(|i| self.statistic(kind, stream.substream(i as u64))).unzip()
    }
}

/// `n` row indices drawn uniformly with replacement.
pub fn resample_indices(n: usize, rng: &mut impl Rng) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// One draw of the bootstrap sup-statistic.
pub fn bootstrap_statistic(data: &ContaminatedSample, plan: &TrimPlan, kind: BootstrapKind, stream: Stream) -> Result<f64> {
    Ok(BootstrapEngine::new(data, plan.k)?.statistic(kind, stream).0)
}

/// `R` draws conditional on `data`.
pub fn bootstrap_draws(data: &ContaminatedSample, plan: &TrimPlan, kind: BootstrapKind, r: usize, stream: Stream) -> Result<BootstrapDraws> {
    if r == 0 {
        return Err(invalid("need at least one bootstrap draw"));
    }
    let engine = BootstrapEngine::new(data, plan.k)?;
    let (draws, eps_tilde) = engine.draws(kind, r, stream);
    Ok(BootstrapDraws { draws, kind, plan: *plan, conditioning_seed: data.values.seed, eps_tilde })
}

/// Type-1 quantile: the order statistic of rank `ceil(level * R)`.
pub fn quantile_type1(values: &[f64], level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(invalid(format!("quantile level {level} outside (0, 1)")));
    }
    if values.is_empty() {
        return Err(invalid("no values"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let x = level * values.len() as f64;
    let r = x.round();
    let rank = if (x - r).abs() <= 1e-9 * r.max(1.0) { r } else { x.ceil() } as usize;
    Ok(sorted[rank.clamp(1, values.len()) - 1])
}

pub fn bootstrap_quantile(draws: &BootstrapDraws, level: f64) -> Result<f64> {
    quantile_type1(&draws.draws, level)
}
