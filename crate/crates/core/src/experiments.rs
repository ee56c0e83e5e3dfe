//! Monte Carlo harness: Kolmogorov distances between sup-statistics and their
//! Gaussian reference, bootstrap coverage, the threshold table and the
//! vector-mean error curve.
//!
//! Replication `r` of every loop draws from `stream.named(part).substream(r)`
//! and results are collected in index order, so outputs do not depend on the
//! number of worker threads.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bootstrap::{quantile_type1, BootstrapEngine, BootstrapKind};
use crate::contamination::{contaminate, AdversaryPolicy, ContaminatedSample};
use crate::distributions::{DistributionSpec, Family};
use crate::error::{invalid, Error, Result};
use crate::estimators::{plan_gaussian, trimmed_mean_select, TrimPlan};
use crate::gaussian::{gaussian_sup_draws, gaussian_width, CovarianceModel, NormSpecFinite};
use crate::numeric::{mean, pairwise_sum};
use crate::rng::Stream;
use crate::vecmean::{check_minimax_error_bound, directional_trimmed_means, minimax_mean};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StatLabel {
    TrimmedZ,
    EmpiricalZ,
    GaussianZ,
    BootstrapZ,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupStatMeta {
    pub n: usize,
    pub d: usize,
    pub p: f64,
    pub epsilon: f64,
    pub k: usize,
    #[serde(rename = "M")]
    pub m: f64,
    pub seed: Stream,
}

/// Replications of one sup-statistic.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupStatSample {
    pub values: Vec<f64>,
    pub label: StatLabel,
    pub meta: SupStatMeta,
}

impl SupStatSample {
    fn new(values: Vec<f64>, label: StatLabel, plan: &TrimPlan, seed: Stream) -> Self {
        let meta = SupStatMeta { n: plan.n, d: plan.d, p: plan.p, epsilon: plan.epsilon, k: plan.k, m: plan.m, seed };
        SupStatSample { values, label, meta }
    }
}

/// Two-sample Kolmogorov-Smirnov statistic `sup_x |F_a(x) - F_b(x)|`,
/// computed exactly by merging the sorted samples.
pub fn two_sample_ks(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut best: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = if a[i].total_cmp(&b[j]).is_le() { a[i] } else { b[j] };
        while i < a.len() && a[i] == x {
            i += 1;
        }
        while j < b.len() && b[j] == x {
            j += 1;
        }
        best = best.max((i as f64 / na - j as f64 / nb).abs());
    }
    best
}

/// Dvoretzky-Kiefer-Wolfowitz 95% band `sqrt(ln(2/0.05) / (2 min(R1, R2)))`.
pub fn dkw_band(r1: usize, r2: usize) -> f64 {
    ((2.0f64 / 0.05).ln() / (2.0 * r1.min(r2) as f64)).sqrt()
}

/// Standard error of the KS statistic from 10 contiguous batch pairs.
pub fn batch_stderr(a: &[f64], b: &[f64]) -> f64 {
    const BATCHES: usize = 10;
    if a.len() < BATCHES || b.len() < BATCHES {
        return f64::NAN;
    }
    let (sa, sb) = (a.len() / BATCHES, b.len() / BATCHES);
    let ks: Vec<f64> = (0..BATCHES).map(|g| two_sample_ks(&a[g * sa..(g + 1) * sa], &b[g * sb..(g + 1) * sb])).collect();
    let m = mean(&ks);
    let var = ks.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (BATCHES - 1) as f64;
    (var / BATCHES as f64).sqrt()
}

/// Estimated Kolmogorov distance with its error bars.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KolmogorovReport {
    pub rho_hat: f64,
    pub stderr: f64,
    pub dkw_band: f64,
    pub r1: usize,
    pub r2: usize,
    pub label: StatLabel,
    pub meta: SupStatMeta,
    /// Jitter used to factor the reference covariance.
    pub jitter: f64,
    pub config: serde_json::Value,
    pub runtime_ms: u64,
}

impl KolmogorovReport {
    fn build(a: &SupStatSample, b: &[f64], jitter: f64, config: serde_json::Value, started: Instant) -> Self {
        KolmogorovReport {
            rho_hat: two_sample_ks(&a.values, b),
            stderr: batch_stderr(&a.values, b),
            dkw_band: dkw_band(a.values.len(), b.len()),
            r1: a.values.len(),
            r2: b.len(),
            label: a.label,
            meta: a.meta,
            jitter,
            config,
            runtime_ms: started.elapsed().as_millis() as u64,
        }
    }
}

/// `max_j sqrt(n) (T_{n,k}(col_j) - mu_j)`.
pub fn trimmed_sup_statistic(data: &ContaminatedSample, k: usize, true_means: &[f64]) -> Result<f64> {
    let n = data.n();
    if 2 * k >= n {
        return Err(Error::TrimTooLarge { k, n });
    }
    let mut buf = Vec::with_capacity(n);
    Ok(sup_statistic_with(data, k, true_means, &mut buf))
}

fn sup_statistic_with(data: &ContaminatedSample, k: usize, true_means: &[f64], buf: &mut Vec<f64>) -> f64 {
    let rn = (data.n() as f64).sqrt();
    (0..data.d())
        .map(|j| {
            data.values.column_into(j, buf);
            let t = if k == 0 { pairwise_sum(buf) / buf.len() as f64 } else { trimmed_mean_select(buf, k) };
            rn * (t - true_means[j])
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Reference model `N(0, Sigma)` for the coordinate family of `spec`.
pub fn reference_model(spec: &DistributionSpec) -> Result<CovarianceModel> {
    CovarianceModel::new(&spec.covariance(), spec.d)
}

fn draw_contaminated(spec: &DistributionSpec, n: usize, epsilon: f64, policy: &AdversaryPolicy, stream: Stream, r: usize) -> Result<ContaminatedSample> {
    let clean = spec.sample(n, stream.named("data").substream(r as u64))?;
    contaminate(clean, epsilon, policy, stream.named("adversary").substream(r as u64))
}

fn echo(spec: &DistributionSpec, epsilon: f64, policy: &AdversaryPolicy, plan: &TrimPlan, stream: Stream) -> serde_json::Value {
    serde_json::json!({ "distribution": spec, "epsilon": epsilon, "adversary": policy, "plan": plan, "seed": stream.0 })
}

/// `rho = sup_x |P(Z_{n,k} <= x) - P(Z <= x)|` for each plan, sharing data and
/// Gaussian draws across plans. All plans must have the same `n`.
pub fn estimate_rho_many(
    spec: &DistributionSpec,
    epsilon: f64,
    policy: &AdversaryPolicy,
    plans: &[TrimPlan],
    r1: usize,
    r2: usize,
    stream: Stream,
) -> Result<Vec<KolmogorovReport>> {
    let started = Instant::now();
    let Some(first) = plans.first() else { return Ok(Vec::new()) };
    let n = first.n;
    if plans.iter().any(|p| p.n != n || 2 * p.k >= n) {
        return Err(invalid("plans must share n and satisfy 2k < n"));
    }
    if r1 < 2 || r2 < 2 {
        return Err(invalid("need at least two replications on each side"));
    }
    let means = spec.mean();
    let stats: Vec<Vec<f64>> = (0..r1)
        .into_par_iter()
        .map(|r| {
            let data = draw_contaminated(spec, n, epsilon, policy, stream, r)?;
            let mut buf = Vec::with_capacity(n);
            Ok(plans.iter().map(|p| sup_statistic_with(&data, p.k, &means, &mut buf)).collect())
        })
        .collect::<Result<_>>()?;
    let model = reference_model(spec)?;
    let gauss = gaussian_sup_draws(&model, r2, stream.named("gaussian"));
    Ok(plans
        .iter()
        .enumerate()
        .map(|(idx, plan)| {
            let label = if plan.k == 0 { StatLabel::EmpiricalZ } else { StatLabel::TrimmedZ };
            let sample = SupStatSample::new(stats.iter().map(|s| s[idx]).collect(), label, plan, stream);
            let mut cfg = echo(spec, epsilon, policy, plan, stream);
            cfg["r1"] = r1.into();
            cfg["r2"] = r2.into();
            KolmogorovReport::build(&sample, &gauss, model.jitter, cfg, started)
        })
        .collect())
}

pub fn estimate_rho(
    spec: &DistributionSpec,
    epsilon: f64,
    policy: &AdversaryPolicy,
    plan: &TrimPlan,
    r1: usize,
    r2: usize,
    stream: Stream,
) -> Result<KolmogorovReport> {
    Ok(estimate_rho_many(spec, epsilon, policy, std::slice::from_ref(plan), r1, r2, stream)?.remove(0))
}

/// `rho~` for one fixed data set: bootstrap law given the data against `Z`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_rho_tilde(
    spec: &DistributionSpec,
    epsilon: f64,
    policy: &AdversaryPolicy,
    plan: &TrimPlan,
    kind: BootstrapKind,
    r_boot: usize,
    r_gauss: usize,
    stream: Stream,
) -> Result<KolmogorovReport> {
    let started = Instant::now();
    let model = reference_model(spec)?;
    let gauss = gaussian_sup_draws(&model, r_gauss, stream.named("gaussian"));
    rho_tilde_one(spec, epsilon, policy, plan, kind, r_boot, &gauss, model.jitter, stream, 0, started)
}

#[allow(clippy::too_many_arguments)]
fn rho_tilde_one(
    spec: &DistributionSpec,
    epsilon: f64,
    policy: &AdversaryPolicy,
    plan: &TrimPlan,
    kind: BootstrapKind,
    r_boot: usize,
    gauss: &[f64],
    jitter: f64,
    stream: Stream,
    sample_index: usize,
    started: Instant,
) -> Result<KolmogorovReport> {
    let data = draw_contaminated(spec, plan.n, epsilon, policy, stream, sample_index)?;
    let engine = BootstrapEngine::new(&data, plan.k)?;
    let (draws, _) = engine.draws(kind, r_boot, stream.named("bootstrap").substream(sample_index as u64));
    let sample = SupStatSample::new(draws, StatLabel::BootstrapZ, plan, data.values.seed);
    let mut cfg = echo(spec, epsilon, policy, plan, stream);
    cfg["kind"] = serde_json::to_value(kind).expect("serializable");
    cfg["sample_index"] = sample_index.into();
    Ok(KolmogorovReport::build(&sample, gauss, jitter, cfg, started))
}

/// `rho~` over many independent data sets.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RhoTildeSweep {
    pub kind: BootstrapKind,
    pub values: Vec<f64>,
    pub median: f64,
    pub dkw_band: f64,
    pub runtime_ms: u64,
}

#[allow(clippy::too_many_arguments)]
pub fn rho_tilde_sweep(
    spec: &DistributionSpec,
    epsilon: f64,
    policy: &AdversaryPolicy,
    plan: &TrimPlan,
    kind: BootstrapKind,
    r_boot: usize,
    r_gauss: usize,
    samples: usize,
    stream: Stream,
) -> Result<RhoTildeSweep> {
    let started = Instant::now();
    let model = reference_model(spec)?;
    let gauss = gaussian_sup_draws(&model, r_gauss, stream.named("gaussian"));
    let values: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|s| rho_tilde_one(spec, epsilon, policy, plan, kind, r_boot, &gauss, model.jitter, stream, s, started).map(|r| r.rho_hat))
        .collect::<Result<_>>()?;
    let median = median(&values);
    Ok(RhoTildeSweep { kind, values, median, dkw_band: dkw_band(r_boot, r_gauss), runtime_ms: started.elapsed().as_millis() as u64 })
}

pub fn median(xs: &[f64]) -> f64 {
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len();
    if m == 0 {
        f64::NAN
    } else if m % 2 == 1 {
        s[m / 2]
    } else {
        0.5 * (s[m / 2 - 1] + s[m / 2])
    }
}

/// Frequency with which the bootstrap quantile covers the true sup-statistic.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageReport {
    pub kind: BootstrapKind,
    pub level: f64,
    pub k: usize,
    pub epsilon: f64,
    pub coverage: f64,
    pub stderr: f64,
    pub r_outer: usize,
    pub r_boot: usize,
    pub runtime_ms: u64,
}

/// For each of `r_outer` data sets: the bootstrap quantile `q` at `level`
/// and whether `max_j sqrt(n)(T_j - mu_j) <= q`.
#[allow(clippy::too_many_arguments)]
pub fn coverage_experiment(
    spec: &DistributionSpec,
    epsilon: f64,
    policy: &AdversaryPolicy,
    plan: &TrimPlan,
    kind: BootstrapKind,
    level: f64,
    r_outer: usize,
    r_boot: usize,
    stream: Stream,
) -> Result<CoverageReport> {
    let started = Instant::now();
    if !(level > 0.0 && level < 1.0) {
        return Err(invalid(format!("level {level} outside (0, 1)")));
    }
    let means = spec.mean();
    let covered: Vec<bool> = (0..r_outer)
        .into_par_iter()
        .map(|o| {
            let data = draw_contaminated(spec, plan.n, epsilon, policy, stream, o)?;
            let engine = BootstrapEngine::new(&data, plan.k)?;
            let boot_stream = stream.named("bootstrap").substream(o as u64);
            let draws: Vec<f64> = (0..r_boot).map(|b| engine.statistic(kind, boot_stream.substream(b as u64)).0).collect();
            let q = quantile_type1(&draws, level)?;
            Ok(trimmed_sup_statistic(&data, plan.k, &means)? <= q)
        })
        .collect::<Result<_>>()?;
    let hits = covered.iter().filter(|c| **c).count() as f64;
    let cov = hits / r_outer as f64;
    Ok(CoverageReport {
        kind,
        level,
        k: plan.k,
        epsilon,
        coverage: cov,
        stderr: (cov * (1.0 - cov) / r_outer as f64).sqrt(),
        r_outer,
        r_boot,
        runtime_ms: started.elapsed().as_millis() as u64,
    })
}

/// One cell of the threshold table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdRow {
    pub n: usize,
    pub delta: f64,
    pub d: usize,
    /// `d` before the cap at `10^4` and the floor at 2.
    pub d_raw: f64,
    pub estimator: String,
    pub k: usize,
    #[serde(rename = "M")]
    pub m: f64,
    pub rho_hat: f64,
    pub stderr: f64,
    pub dkw_band: f64,
    pub runtime_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdTable {
    pub p: f64,
    pub tail_index: f64,
    pub rows: Vec<ThresholdRow>,
    /// Cells where `d` was capped or floored, and infeasible trimmed plans.
    pub notes: Vec<String>,
}

pub const THRESHOLD_D_CAP: usize = 10_000;

/// `d = round(n^{p/2 - 1 + delta})` clamped to `[2, 10^4]`.
pub fn threshold_dimension(n: usize, p: f64, delta: f64) -> (usize, f64) {
    let raw = (n as f64).powf(p / 2.0 - 1.0 + delta).round();
    (raw.clamp(2.0, THRESHOLD_D_CAP as f64) as usize, raw)
}

/// Empirical mean (`k = 0`) and trimmed mean on `SymmetricPareto(p + 0.01)`
/// for every `(n, delta)`, without contamination.
pub fn threshold_experiment(p: f64, delta_grid: &[f64], n_grid: &[usize], r: usize, stream: Stream) -> Result<ThresholdTable> {
    let tail_index = p + 0.01;
    let mut rows = Vec::new();
    let mut notes = Vec::new();
    for &n in n_grid {
        for &delta in delta_grid {
            let (d, raw) = threshold_dimension(n, p, delta);
            if d as f64 != raw {
                notes.push(format!("n = {n}, delta = {delta}: d = {raw} clamped to {d}"));
            }
            let spec = DistributionSpec::new(Family::SymmetricPareto { tail_index }, d)?;
            let nu = spec.analytic_moments(p)?.nu_p;
            let cell = stream.named(&format!("threshold/{n}/{delta}"));
            let mut plans = Vec::new();
            let trimmed = plan_gaussian(n, d, 0.0, p, nu);
            let base = match &trimmed {
                Ok(plan) => *plan,
                Err(e) => {
                    notes.push(format!("n = {n}, delta = {delta}: trimmed plan unavailable ({e})"));
                    TrimPlan::manual(n, d, 0.0, p, 0, crate::estimators::truncation_level(n, d, p, nu), nu)?
                }
            };
            plans.push(base.with_k(0)?);
            if let Ok(plan) = trimmed {
                plans.push(plan);
            }
            let reports = estimate_rho_many(&spec, 0.0, &AdversaryPolicy::none(), &plans, r, r, cell)?;
            for (plan, rep) in plans.iter().zip(reports) {
                rows.push(ThresholdRow {
                    n,
                    delta,
                    d,
                    d_raw: raw,
                    estimator: if plan.k == 0 { "empirical".into() } else { "trimmed".into() },
                    k: plan.k,
                    m: plan.m,
                    rho_hat: rep.rho_hat,
                    stderr: rep.stderr,
                    dkw_band: rep.dkw_band,
                    runtime_ms: rep.runtime_ms,
                });
            }
        }
    }
    Ok(ThresholdTable { p, tail_index, rows, notes })
}

/// Error of the minimax vector mean at one sample size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VecMeanReport {
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub epsilon: f64,
    /// `||mu_hat - mu||_S` per replication.
    pub errors: Vec<f64>,
    pub median_error: f64,
    pub q90_error: f64,
    /// `w(Gamma^{1/2} S) / sqrt(n)`, a constant-free reference curve.
    pub width_reference: f64,
    pub lemma_violations: usize,
    /// Replications where a dual set `{+-e_j}` gave exactly the coordinate trimmed means.
    pub coordinatewise_exact: usize,
    pub non_optimal: usize,
    pub runtime_ms: u64,
}

/// Replicated `||mu_hat - mu_P||_S` with trim level `k` at sample size `n`.
#[allow(clippy::too_many_arguments)]
pub fn vecmean_experiment(
    spec: &DistributionSpec,
    s: &NormSpecFinite,
    epsilon: f64,
    policy: &AdversaryPolicy,
    n: usize,
    k: usize,
    r: usize,
    stream: Stream,
) -> Result<VecMeanReport> {
    let started = Instant::now();
    let mu = spec.mean();
    let is_linf = *s == NormSpecFinite::linf(spec.d);
    let outcomes: Vec<(f64, bool, bool, bool)> = (0..r)
        .into_par_iter()
        .map(|i| {
            let data = draw_contaminated(spec, n, epsilon, policy, stream, i)?;
            let tvals = directional_trimmed_means(&data, s, k)?;
            let sol = minimax_mean(&tvals, s)?;
            let diff: Vec<f64> = sol.mu_hat.iter().zip(&mu).map(|(a, b)| a - b).collect();
            let lemma_ok = check_minimax_error_bound(&sol.mu_hat, &tvals, &mu, s, 1e-9);
            let exact = is_linf && crate::estimators::trimmed_mean_matrix(&data.values, k)? == sol.mu_hat;
            Ok((s.norm(&diff), lemma_ok, exact, sol.status == crate::lp::SolverStatus::Optimal))
        })
        .collect::<Result<_>>()?;
    let errors: Vec<f64> = outcomes.iter().map(|o| o.0).collect();
    let mut sorted = errors.clone();
    sorted.sort_by(f64::total_cmp);
    let width = gaussian_width(&spec.covariance(), spec.d, s, 20_000, stream.named("width"))?;
    Ok(VecMeanReport {
        n,
        d: spec.d,
        k,
        epsilon,
        median_error: median(&errors),
        q90_error: quantile_type1(&errors, 0.9)?,
        errors,
        width_reference: width.value / (n as f64).sqrt(),
        lemma_violations: outcomes.iter().filter(|o| !o.1).count(),
        coordinatewise_exact: outcomes.iter().filter(|o| o.2).count(),
        non_optimal: outcomes.iter().filter(|o| !o.3).count(),
        runtime_ms: started.elapsed().as_millis() as u64,
    })
}
