//! Executable versions of the counting, bounding and covariance lemmas.
//!
//! Deterministic lemmas are checked instance by instance with a `1e-10`
//! relative float slack. Probabilistic lemmas compare an empirical frequency
//! with the stated bound plus three binomial standard errors.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::bootstrap::{resample_indices, BootstrapEngine};
use crate::contamination::{contamination_budget, ContaminatedSample};
use crate::distributions::{DistributionSpec, Family};
use crate::error::{Error, Result};
use crate::estimators::{trimmed_mean, truncate, TrimPlan};
use crate::experiments::two_sample_ks;
use crate::gaussian::{gaussian_sup_draws, CovarianceModel};
use crate::matrix::SampleMatrix;
use crate::numeric::{integrate_pieces, integrate_to_inf, mean};
use crate::rng::Stream;

/// Outcome of one lemma check over many instances.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaReport {
    pub lemma_id: String,
    pub instances_checked: usize,
    /// Instances whose preconditions failed.
    pub skipped: usize,
    pub violations: usize,
    /// Smallest `bound - observed` over the checked instances.
    pub worst_slack: f64,
    /// Empirical exceedance frequency, for probabilistic lemmas.
    pub frequency: Option<f64>,
    /// Stated probability bound, for probabilistic lemmas.
    pub probability_bound: Option<f64>,
    pub stderr: Option<f64>,
    pub pass: bool,
    pub note: String,
}

impl LemmaReport {
    fn deterministic(lemma_id: &str) -> Self {
        LemmaReport {
            lemma_id: lemma_id.to_string(),
            instances_checked: 0,
            skipped: 0,
            violations: 0,
            worst_slack: f64::INFINITY,
            frequency: None,
            probability_bound: None,
            stderr: None,
            pass: true,
            note: String::new(),
        }
    }

    fn probabilistic(lemma_id: &str, exceed: usize, r: usize, bound: f64, worst_slack: f64) -> Self {
        let freq = exceed as f64 / r as f64;
        let q = bound.min(1.0);
        let se = (q * (1.0 - q) / r as f64).sqrt();
        LemmaReport {
            lemma_id: lemma_id.to_string(),
            instances_checked: r,
            skipped: 0,
            violations: exceed,
            worst_slack,
            frequency: Some(freq),
            probability_bound: Some(bound),
            stderr: Some(se),
            pass: freq <= bound + 3.0 * se,
            note: if bound >= 1.0 { "bound >= 1: vacuous".into() } else { String::new() },
        }
    }

    /// Combine reports of the same deterministic lemma.
    pub fn merge(mut self, other: &LemmaReport) -> Self {
        self.instances_checked += other.instances_checked;
        self.skipped += other.skipped;
        self.violations += other.violations;
        self.worst_slack = self.worst_slack.min(other.worst_slack);
        self.pass &= other.pass;
        if self.note.is_empty() {
            self.note = other.note.clone();
        }
        self
    }

    pub fn empty(lemma_id: &str) -> Self {
        Self::deterministic(lemma_id)
    }
}

fn column_exceedances(sample: &SampleMatrix, m: f64) -> Vec<usize> {
    let d = sample.d();
    let mut counts = vec![0usize; d];
    for row in sample.values().chunks(d) {
        for (c, x) in counts.iter_mut().zip(row) {
            if x.abs() > m {
                *c += 1;
            }
        }
    }
    counts
}

/// `V_M = max_j #{i : |x_ij| > M}`.
pub fn count_exceedances(sample: &SampleMatrix, m: f64) -> usize {
    column_exceedances(sample, m).into_iter().max().unwrap_or(0)
}

fn within(observed: f64, bound: f64, scale: f64) -> bool {
    observed <= bound + 1e-10 * scale.max(1.0)
}

/// `sup_j |T^eps_{n, phi n}(col_j) - mean(tau_M(clean col_j))| <= 6 phi M`,
/// provided `V_M(clean) <= t` and `floor(eps n) + t <= phi n < n / 2`.
pub fn check_bounding_lemma(data: &ContaminatedSample, plan: &TrimPlan) -> LemmaReport {
    let mut rep = LemmaReport::deterministic("bounding");
    let n = data.n();
    let k = plan.k;
    let budget = contamination_budget(data.epsilon, n);
    let v = count_exceedances(&data.clean, plan.m);
    if v > plan.t || budget + plan.t > k || 2 * k >= n {
        rep.skipped = 1;
        rep.note = format!("precondition failed: V_M = {v}, t = {}, floor(eps n) = {budget}, k = {k}, n = {n}", plan.t);
        log::debug!("bounding lemma instance skipped: {}", rep.note);
        return rep;
    }
    let phi = k as f64 / n as f64;
    let bound = 6.0 * phi * plan.m;
    let mut worst = f64::INFINITY;
    let mut violated = false;
    for j in 0..data.d() {
        let t_hat = trimmed_mean(&data.values.column(j), k).expect("2k < n checked");
        let clean = data.clean.column(j);
        let trunc: Vec<f64> = clean.iter().map(|x| truncate(*x, plan.m)).collect();
        let p_tau = mean(&trunc);
        let lhs = (t_hat - p_tau).abs();
        worst = worst.min(bound - lhs);
        violated |= !within(lhs, bound, bound.max(t_hat.abs()).max(p_tau.abs()));
    }
    rep.instances_checked = 1;
    rep.violations = violated as usize;
    rep.worst_slack = worst;
    rep.pass = !violated;
    rep
}

/// Gaussian bounding lemma: over `r` multiplier draws, the frequency of
/// `sup_j |T~_j - G~_n(tau_M col_j)| > 28 phi M sqrt(2n ln 2n) + 6 phi M sqrt(2 ln n)`
/// stays below `2/n` (plus three standard errors). `G~_n` is the multiplier
/// process of the truncated clean sample.
pub fn check_gaussian_bounding_lemma(data: &ContaminatedSample, plan: &TrimPlan, stream: Stream, r: usize) -> LemmaReport {
    let n = data.n();
    let k = plan.k;
    let budget = contamination_budget(data.epsilon, n);
    let v = count_exceedances(&data.clean, plan.m);
    if v > plan.t || budget + plan.t > k || 2 * k >= n {
        let mut rep = LemmaReport::deterministic("gaussian-bounding");
        rep.skipped = 1;
        rep.note = format!("precondition failed: V_M = {v}, t = {}, k = {k}", plan.t);
        return rep;
    }
    check_gaussian_bounding_with(data, plan, r, |i| {
        let mut rng = stream.substream(i as u64).rng();
        (0..n).map(|_| rng.sample(StandardNormal)).collect()
    })
}

/// As [`check_gaussian_bounding_lemma`] with multipliers supplied by `weights(draw)`.
pub fn check_gaussian_bounding_with<W>(data: &ContaminatedSample, plan: &TrimPlan, r: usize, weights: W) -> LemmaReport
where
    W: Fn(usize) -> Vec<f64> + Sync,
{
    let n = data.n();
    let nf = n as f64;
    let phi = plan.k as f64 / nf;
    let m = plan.m;
    let bound = 28.0 * phi * m * (2.0 * nf * (2.0 * nf).ln()).sqrt() + 6.0 * phi * m * (2.0 * nf.ln()).sqrt();
    let engine = match BootstrapEngine::new(data, plan.k) {
        Ok(e) => e,
        Err(e) => {
            let mut rep = LemmaReport::deterministic("gaussian-bounding");
            rep.skipped = 1;
            rep.note = e.to_string();
            return rep;
        }
    };
    let truncated: Vec<Vec<f64>> = (0..data.d())
        .map(|j| {
            let t: Vec<f64> = data.clean.column(j).iter().map(|x| truncate(*x, m)).collect();
            let c = mean(&t);
            t.iter().map(|x| x - c).collect()
        })
        .collect();
    let outcomes: Vec<f64> = (0..r)
        .into_par_iter()
        .map(|i| {
            let xi = weights(i);
            let mut lhs: f64 = 0.0;
            for (j, tc) in truncated.iter().enumerate() {
                let t_tilde = engine.column_multiplier_statistic(j, &xi);
                let g: f64 = xi.iter().zip(tc).map(|(w, x)| w * x).sum::<f64>() / nf.sqrt();
                lhs = lhs.max((t_tilde - g).abs());
            }
            bound - lhs
        })
        .collect();
    let exceed = outcomes.iter().filter(|s| **s < -1e-10 * bound.max(1.0)).count();
    let worst = outcomes.iter().copied().fold(f64::INFINITY, f64::min);
    let mut rep = LemmaReport::probabilistic("gaussian-bounding", exceed, r, 2.0 / nf, worst);
    // The binomial error is taken at the stated probability 2/n.
    rep.note = format!("bound on the statistic {bound:.4}");
    rep
}

/// Finite-dimensional counting lemma:
/// `P(V_M >= 3 ln(1+d) + 7 n nu_p^p / M^p) <= 2 exp(-n nu_p^p / M^p)`.
pub fn check_counting_lemma(spec: &DistributionSpec, p: f64, n: usize, m: f64, r: usize, stream: Stream) -> Result<LemmaReport> {
    let mom = spec.analytic_moments(p)?;
    let rate = n as f64 * (mom.nu_p / m).powf(p);
    let threshold = 3.0 * (1.0 + spec.d as f64).ln() + 7.0 * rate;
    let counts: Vec<usize> = (0..r)
        .into_par_iter()
        .map(|i| spec.sample(n, stream.substream(i as u64)).map(|x| count_exceedances(&x, m)))
        .collect::<Result<Vec<_>>>()?;
    let exceed = counts.iter().filter(|&&v| v as f64 >= threshold).count();
    let worst = counts.iter().map(|&v| threshold - v as f64).fold(f64::INFINITY, f64::min);
    let mut rep = LemmaReport::probabilistic("counting", exceed, r, 2.0 * (-rate).exp(), worst);
    rep.note = format!("threshold {threshold:.3}; max V_M observed {}", counts.iter().max().unwrap_or(&0));
    Ok(rep)
}

/// Independent Bernoulli vectors with success probabilities `probs[i * d + j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BooleanSampler {
    pub n: usize,
    pub d: usize,
    pub probs: Vec<f64>,
}

impl BooleanSampler {
    pub fn uniform(n: usize, d: usize, p: f64) -> Self {
        BooleanSampler { n, d, probs: vec![p; n * d] }
    }

    /// `rho = max_j (1/n) sum_i E X_ij`.
    pub fn rho(&self) -> f64 {
        (0..self.d).map(|j| (0..self.n).map(|i| self.probs[i * self.d + j]).sum::<f64>() / self.n as f64).fold(0.0, f64::max)
    }

    /// `max_j (1/n) sum_i X_ij` for one draw.
    pub fn max_mean(&self, rng: &mut impl Rng) -> f64 {
        let mut counts = vec![0usize; self.d];
        for (idx, &q) in self.probs.iter().enumerate() {
            if q > 0.0 && rng.random::<f64>() < q {
                counts[idx % self.d] += 1;
            }
        }
        counts.into_iter().max().unwrap_or(0) as f64 / self.n as f64
    }
}

/// Counting lemma for Boolean vectors:
/// `P(max_j mean_i X_ij >= 3 ln(1+d)/n + 7 rho) <= 2 exp(-n rho)`.
pub fn check_boolean_counting(sampler: &BooleanSampler, r: usize, stream: Stream) -> LemmaReport {
    let rho = sampler.rho();
    let threshold = 3.0 * (1.0 + sampler.d as f64).ln() / sampler.n as f64 + 7.0 * rho;
    let vals: Vec<f64> = (0..r).into_par_iter().map(|i| sampler.max_mean(&mut stream.substream(i as u64).rng())).collect();
    let exceed = vals.iter().filter(|&&v| v >= threshold).count();
    let worst = vals.iter().map(|v| threshold - v).fold(f64::INFINITY, f64::min);
    LemmaReport::probabilistic("boolean-counting", exceed, r, 2.0 * (-(sampler.n as f64) * rho).exp(), worst)
}

/// Conditional counting lemma, run as the Boolean lemma on resampled exceedance
/// indicators: given `V_M(sample) <= t`, the resampled count satisfies
/// `P(V~_M >= 3 ln(1+d) + 7t) <= 2 exp(-t)`.
pub fn check_conditional_counting(sample: &SampleMatrix, m: f64, t: usize, r: usize, stream: Stream) -> LemmaReport {
    let n = sample.n();
    let d = sample.d();
    let v = count_exceedances(sample, m);
    if v > t {
        let mut rep = LemmaReport::deterministic("conditional-counting");
        rep.skipped = 1;
        rep.note = format!("precondition failed: V_M = {v} > t = {t}");
        return rep;
    }
    let large: Vec<bool> = sample.values().iter().map(|x| x.abs() > m).collect();
    let threshold = 3.0 * (1.0 + d as f64).ln() + 7.0 * t as f64;
    let vals: Vec<usize> = (0..r)
        .into_par_iter()
        .map(|i| {
            let idx = resample_indices(n, &mut stream.substream(i as u64).rng());
            let mut counts = vec![0usize; d];
            for &row in &idx {
                for (c, &b) in counts.iter_mut().zip(&large[row * d..(row + 1) * d]) {
                    *c += b as usize;
                }
            }
            counts.into_iter().max().unwrap_or(0)
        })
        .collect();
    let exceed = vals.iter().filter(|&&v| v as f64 >= threshold).count();
    let worst = vals.iter().map(|&v| threshold - v as f64).fold(f64::INFINITY, f64::min);
    let mut rep = LemmaReport::probabilistic("conditional-counting", exceed, r, 2.0 * (-(t as f64)).exp(), worst);
    rep.note = format!("V_M(sample) = {v}, t = {t}");
    rep
}

/// Expectation of `g(X)` under the unscaled marginal of `family`, by quadrature
/// split at the density breakpoints and `extra` knots.
pub fn marginal_expectation<G: Fn(f64) -> f64>(family: &Family, g: G, extra: &[f64], rel_tol: f64) -> f64 {
    let mut knots = family.breakpoints();
    knots.extend_from_slice(extra);
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    let h = |x: f64| g(x) * family.density(x);
    let lo = knots[0];
    let hi = *knots.last().expect("at least one knot");
    let left = integrate_to_inf(&|u: f64| h(lo - u), 0.0, rel_tol);
    let right = integrate_to_inf(&|u: f64| h(hi + u), 0.0, rel_tol);
    let mid = if knots.len() > 1 { integrate_pieces(&h, &knots, rel_tol) } else { 0.0 };
    left + mid + right
}

/// `Var(tau_c(Y))` for the unscaled marginal `Y`.
pub fn truncated_variance(family: &Family, c: f64) -> f64 {
    let e1 = marginal_expectation(family, |x| x.clamp(-c, c), &[-c, c], 1e-12);
    let e2 = marginal_expectation(family, |x| x.clamp(-c, c).powi(2), &[-c, c], 1e-12);
    e2 - e1 * e1
}

/// `Delta_pi = max_{j,l} |Sigma_jl - Cov(tau_M X_j, tau_M X_l)|` for families
/// with independent coordinates.
pub fn covariance_discrepancy(spec: &DistributionSpec, m: f64) -> Result<f64> {
    if !spec.is_diagonal() {
        return Err(Error::Unsupported("truncated covariance needs independent coordinates".into()));
    }
    let var = spec.family.variance();
    let mut worst: f64 = 0.0;
    let mut seen: Vec<(f64, f64)> = Vec::new();
    for j in 0..spec.d {
        let s = spec.scale_at(j);
        let delta = match seen.iter().find(|(sc, _)| *sc == s) {
            Some(&(_, v)) => v,
            None => {
                // tau_M(s Y) = s tau_{M/s}(Y).
                let v = s * s * (var - truncated_variance(&spec.family, m / s)).abs();
                seen.push((s, v));
                v
            }
        };
        worst = worst.max(delta);
    }
    // Off-diagonal entries vanish on both sides for independent coordinates.
    Ok(worst)
}

/// Covariance lemma: `Delta_pi <= 4 nu_p^p M^{2-p}` at every `M` in the grid.
pub fn check_covariance_bound(spec: &DistributionSpec, p: f64, m_grid: &[f64]) -> Result<LemmaReport> {
    let mom = spec.analytic_moments(p)?;
    let mut rep = LemmaReport::deterministic("covariance");
    let mut tightest: f64 = 0.0;
    for &m in m_grid {
        let delta = covariance_discrepancy(spec, m)?;
        let bound = 4.0 * mom.nu_p_pow() * m.powf(2.0 - p);
        let proof_bound = 3.0 * mom.nu_p_pow() * m.powf(2.0 - p);
        rep.instances_checked += 1;
        rep.worst_slack = rep.worst_slack.min(bound - delta);
        if !within(delta, bound, bound) {
            rep.violations += 1;
        }
        tightest = tightest.max(delta / proof_bound);
    }
    rep.pass = rep.violations == 0;
    rep.note = format!("max Delta / (3 nu^p M^(2-p)) = {tightest:.4}");
    Ok(rep)
}

/// Gaussian comparison trend diagnostic.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub delta_pi: f64,
    /// `(ln d) sqrt(Delta_pi)`, the shape of the comparison bound.
    pub rate: f64,
    pub distance: f64,
    /// Distance after moving `sigma2` halfway toward `sigma1`.
    pub distance_half: f64,
    pub noise: f64,
    pub pass: bool,
}

/// Kolmogorov distance between `sup` of `N(0, sigma1)` and `N(0, sigma2)`,
/// plus the same after halving `Delta_pi`; passes when halving does not
/// increase the distance beyond Monte Carlo noise.
pub fn check_gaussian_comparison(sigma1: &[f64], sigma2: &[f64], d: usize, r: usize, stream: Stream) -> Result<ComparisonReport> {
    let half: Vec<f64> = sigma1.iter().zip(sigma2).map(|(a, b)| 0.5 * (a + b)).collect();
    let m1 = CovarianceModel::new(sigma1, d)?;
    let m2 = CovarianceModel::new(sigma2, d)?;
    let mh = CovarianceModel::new(&half, d)?;
    let a = gaussian_sup_draws(&m1, r, stream.substream(0));
    let b = gaussian_sup_draws(&m2, r, stream.substream(1));
    let bh = gaussian_sup_draws(&mh, r, stream.substream(1));
    let delta_pi = sigma1.iter().zip(sigma2).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let distance = two_sample_ks(&a, &b);
    let distance_half = two_sample_ks(&a, &bh);
    let noise = 2.0 * crate::experiments::dkw_band(r, r);
    Ok(ComparisonReport {
        delta_pi,
        rate: (d as f64).ln() * delta_pi.sqrt(),
        distance,
        distance_half,
        noise,
        pass: distance_half <= distance + noise,
    })
}

/// Lemma checks runnable as a suite, in execution order.
pub const SUITE_IDS: [&str; 8] = [
    "bounding",
    "counting",
    "boolean-counting",
    "conditional-counting",
    "gaussian-bounding",
    "covariance",
    "comparison",
    "nazarov",
];

/// Sizes of the default suite scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SuiteSizes {
    /// Randomized instances per bounding-lemma scenario.
    pub bounding_instances: usize,
    /// Replications for each probabilistic lemma.
    pub replications: usize,
}

impl Default for SuiteSizes {
    fn default() -> Self {
        SuiteSizes { bounding_instances: 500, replications: 10_000 }
    }
}

/// Resolve a comma separated scope (`all`, lemma ids, optional `-lemma` suffix).
pub fn parse_scope(scope: &str) -> Result<Vec<&'static str>> {
    let mut out = Vec::new();
    for part in scope.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if part == "all" {
            return Ok(SUITE_IDS.to_vec());
        }
        let id = part.strip_suffix("-lemma").unwrap_or(part);
        match SUITE_IDS.iter().find(|s| **s == id) {
            Some(s) if !out.contains(s) => out.push(*s),
            Some(_) => {}
            None => return Err(Error::InvalidArgument(format!("unknown scope `{part}`; known: all, {}", SUITE_IDS.join(", ")))),
        }
    }
    Ok(out)
}

/// One bounding-lemma scenario: family, moment order, epsilon, n, d.
pub fn bounding_scenarios() -> Vec<(Family, f64, f64, usize, usize)> {
    let families = [
        (Family::GaussianEquicorrelated { rho: 0.0 }, 4.0),
        (Family::StudentT { dof: 5.0 }, 4.0),
        (Family::SymmetricPareto { tail_index: 3.5 }, 3.0),
    ];
    let mut out = Vec::new();
    for (family, p) in families {
        for eps in [0.0, 0.05] {
            for n in [200, 1000] {
                for d in [5, 50] {
                    out.push((family, p, eps, n, d));
                }
            }
        }
    }
    out
}

/// Bounding lemma on randomized instances: `M` is the planned truncation level
/// times a log-uniform factor in `[1/2, 2]`, `t = V_M(clean)` plus a random
/// margin, `k = floor(eps n) + t` plus a random margin; `M` is doubled until
/// `2k < n`.
pub fn bounding_scenario(family: Family, p: f64, epsilon: f64, n: usize, d: usize, instances: usize, stream: Stream) -> Result<LemmaReport> {
    use crate::contamination::{contaminate, AdversaryKind, AdversaryPolicy};
    let spec = DistributionSpec::new(family, d)?;
    let nu = spec.analytic_moments(p)?.nu_p;
    let base = crate::estimators::truncation_level(n, d, p, nu);
    let policy = AdversaryPolicy::new(AdversaryKind::LargeOutlier { magnitude: 1e6 });
    let budget = contamination_budget(epsilon, n);
    let reports: Vec<LemmaReport> = (0..instances)
        .into_par_iter()
        .map(|i| {
            let s = stream.substream(i as u64);
            let clean = spec.sample(n, s.named("data"))?;
            let data = contaminate(clean, epsilon, &policy, s.named("adversary"))?;
            let mut rng = s.named("plan").rng();
            let mut m = base * 2f64.powf(rng.random_range(-1.0..=1.0));
            let (extra_t, extra_k) = (rng.random_range(0..3usize), rng.random_range(0..3usize));
            loop {
                let t = count_exceedances(&data.clean, m) + extra_t;
                let k = budget + t + extra_k;
                if 2 * k < n {
                    let mut plan = TrimPlan::manual(n, d, epsilon, p, k, m, nu)?;
                    plan.t = t;
                    return Ok(check_bounding_lemma(&data, &plan));
                }
                m *= 2.0;
            }
        })
        .collect::<Result<_>>()?;
    let mut rep = reports.iter().fold(LemmaReport::empty("bounding"), |acc, r| acc.merge(r));
    rep.note = format!("{family:?}, p = {p}, eps = {epsilon}, n = {n}, d = {d}");
    Ok(rep)
}

fn comparison_as_lemma(c: &ComparisonReport) -> LemmaReport {
    let mut rep = LemmaReport::deterministic("comparison");
    rep.instances_checked = 1;
    rep.worst_slack = c.distance + c.noise - c.distance_half;
    rep.violations = (!c.pass) as usize;
    rep.pass = c.pass;
    rep.note = format!("Delta_pi = {:.4}, distance = {:.4}, after halving = {:.4}, noise = {:.4}", c.delta_pi, c.distance, c.distance_half, c.noise);
    rep
}

fn nazarov_as_lemma(z: &crate::gaussian::NazarovReport) -> LemmaReport {
    let mut rep = LemmaReport::deterministic("nazarov");
    rep.instances_checked = z.lambdas.len();
    rep.worst_slack = -z.worst_excess;
    rep.violations = z.probabilities.iter().filter(|q| **q > z.bound + 3.0 * z.stderr).count();
    rep.pass = z.pass;
    rep.note = format!("band bound {:.4}", z.bound);
    rep
}

/// Run the default scenario of one suite entry. Bounding scenarios are
/// returned one report each.
pub fn run_suite_entry(id: &str, sizes: SuiteSizes, stream: Stream) -> Result<Vec<LemmaReport>> {
    let stream = stream.named(id);
    let r = sizes.replications;
    let one = |rep: LemmaReport| Ok(vec![rep]);
    match id {
        "bounding" => bounding_scenarios()
            .into_iter()
            .enumerate()
            .map(|(i, (f, p, eps, n, d))| bounding_scenario(f, p, eps, n, d, sizes.bounding_instances, stream.substream(i as u64)))
            .collect(),
        "counting" => {
            let spec = DistributionSpec::new(Family::SymmetricPareto { tail_index: 3.5 }, 50)?;
            let (n, p) = (1000usize, 3.0);
            // Rate n nu^p / M^p = 2.
            let m = spec.analytic_moments(p)?.nu_p * (n as f64 / 2.0).powf(1.0 / p);
            one(check_counting_lemma(&spec, p, n, m, r, stream)?)
        }
        "boolean-counting" => one(check_boolean_counting(&BooleanSampler::uniform(1000, 50, 0.005), r, stream)),
        "conditional-counting" => {
            let spec = DistributionSpec::new(Family::SymmetricPareto { tail_index: 3.5 }, 20)?;
            let sample = spec.sample(1000, stream.named("data"))?;
            let m = spec.analytic_moments(3.0)?.nu_p * 500f64.powf(1.0 / 3.0);
            let t = count_exceedances(&sample, m).max(3);
            one(check_conditional_counting(&sample, m, t, r, stream.named("resample")))
        }
        "gaussian-bounding" => {
            use crate::contamination::{contaminate, AdversaryKind, AdversaryPolicy};
            let spec = DistributionSpec::new(Family::StudentT { dof: 5.0 }, 10)?;
            let nu = spec.analytic_moments(4.0)?.nu_p;
            let plan = crate::estimators::plan_gaussian(2000, 10, 0.02, 4.0, nu)?;
            let policy = AdversaryPolicy::new(AdversaryKind::LargeOutlier { magnitude: 1e6 });
            let data = contaminate(spec.sample(2000, stream.named("data"))?, 0.02, &policy, stream.named("adversary"))?;
            one(check_gaussian_bounding_lemma(&data, &plan, stream.named("multipliers"), r))
        }
        "covariance" => {
            let grid: Vec<f64> = (0..10).map(|i| 1.5 * 1.5f64.powi(i)).collect();
            let a = check_covariance_bound(&DistributionSpec::new(Family::SymmetricPareto { tail_index: 4.0 }, 3)?, 3.0, &grid)?;
            let b = check_covariance_bound(&DistributionSpec::new(Family::StudentT { dof: 6.0 }, 3)?, 3.0, &grid)?;
            Ok(vec![a, b])
        }
        "comparison" => {
            let d = 20;
            let sigma1: Vec<f64> = (0..d * d).map(|i| if i / d == i % d { 1.0 } else { 0.0 }).collect();
            let sigma2: Vec<f64> = (0..d * d).map(|i| if i / d == i % d { 1.0 } else { 0.4 }).collect();
            one(comparison_as_lemma(&check_gaussian_comparison(&sigma1, &sigma2, d, r.max(2000), stream)?))
        }
        "nazarov" => {
            let model = CovarianceModel::identity(50);
            let lambdas: Vec<f64> = (0..13).map(|i| 1.0 + 0.25 * i as f64).collect();
            one(nazarov_as_lemma(&crate::gaussian::nazarov_diagnostic(&model, 0.1, &lambdas, r.max(2000), stream)?))
        }
        other => Err(Error::InvalidArgument(format!("unknown suite entry `{other}`"))),
    }
}
