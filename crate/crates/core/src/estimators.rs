//! Trimmed, truncated and empirical means, and the closed-form tuning of the
//! trim level `k` and truncation level `M`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contamination::{check_epsilon, contamination_budget};
use crate::error::{invalid, Error, Result};
use crate::matrix::SampleMatrix;
use crate::numeric::{mean, mirrored_sum, trimmed_sum_unstable};

/// Where a plan came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlanKind {
    Gaussian,
    Bootstrap,
    Manual,
}

/// Where `nu_p` came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum NuSource {
    #[default]
    Analytic,
    /// Estimated from the data; the tuning formulas assume a known value.
    Plugin,
}

/// Trim level, truncation level and counting budget for one `(n, d, eps, p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrimPlan {
    pub kind: PlanKind,
    pub epsilon: f64,
    pub p: f64,
    pub n: usize,
    pub d: usize,
    pub k: usize,
    #[serde(rename = "M")]
    pub m: f64,
    pub t: usize,
    pub phi: f64,
    pub nu_p: f64,
    #[serde(default)]
    pub nu_source: NuSource,
}

impl TrimPlan {
    /// A plan with explicit `k` and `M`; `t` is whatever budget remains after
    /// covering the contamination.
    pub fn manual(n: usize, d: usize, epsilon: f64, p: f64, k: usize, m: f64, nu_p: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        if 2 * k >= n {
            return Err(Error::TrimTooLarge { k, n });
        }
        Ok(TrimPlan {
            kind: PlanKind::Manual,
            epsilon,
            p,
            n,
            d,
            k,
            m,
            t: k.saturating_sub(contamination_budget(epsilon, n)),
            phi: k as f64 / n as f64,
            nu_p,
            nu_source: NuSource::Analytic,
        })
    }

    /// Same plan with the trim level replaced (e.g. `k = 0` for the empirical mean).
    pub fn with_k(mut self, k: usize) -> Result<Self> {
        if 2 * k >= self.n {
            return Err(Error::TrimTooLarge { k, n: self.n });
        }
        self.k = k;
        self.phi = k as f64 / self.n as f64;
        self.t = k.saturating_sub(contamination_budget(self.epsilon, self.n));
        self.kind = PlanKind::Manual;
        Ok(self)
    }

    pub fn with_m(mut self, m: f64) -> Self {
        self.m = m;
        self.kind = PlanKind::Manual;
        self
    }
}

fn check_plan_inputs(n: usize, d: usize, epsilon: f64, p: f64, nu_p: f64) -> Result<()> {
    check_epsilon(epsilon)?;
    if n < 3 {
        return Err(invalid(format!("n = {n}; the tuning formulas need n >= 3")));
    }
    if d < 2 {
        return Err(invalid(format!("d = {d}; the tuning formulas need d >= 2")));
    }
    if !(p > 2.0) {
        return Err(invalid(format!("p = {p} must exceed 2")));
    }
    if !(nu_p > 0.0 && nu_p.is_finite()) {
        return Err(invalid(format!("nu_p = {nu_p} must be positive and finite")));
    }
    Ok(())
}

/// `M = n^{3/(4p-2)} nu_p ln^{-1/p}(nd)`.
pub fn truncation_level(n: usize, d: usize, p: f64, nu_p: f64) -> f64 {
    let nd = (n as f64) * (d as f64);
    (n as f64).powf(3.0 / (4.0 * p - 2.0)) * nu_p * nd.ln().powf(-1.0 / p)
}

/// Counting budget `t = ceil(3 ln(1+d) + 7 n^{(p-2)/(4p-2)} ln(nd))`.
pub fn gaussian_budget(n: usize, d: usize, p: f64) -> usize {
    let nf = n as f64;
    let nd = nf * d as f64;
    (3.0 * (1.0 + d as f64).ln() + 7.0 * nf.powf((p - 2.0) / (4.0 * p - 2.0)) * nd.ln()).ceil() as usize
}

/// Plan for the Gaussian approximation of the trimmed sup-statistic:
/// `k = floor(eps n) + t`, `phi = k / n`.
pub fn plan_gaussian(n: usize, d: usize, epsilon: f64, p: f64, nu_p: f64) -> Result<TrimPlan> {
    check_plan_inputs(n, d, epsilon, p, nu_p)?;
    let t = gaussian_budget(n, d, p);
    let k = contamination_budget(epsilon, n) + t;
    if 2 * k >= n {
        return Err(Error::InfeasibleTrim { k, n });
    }
    Ok(TrimPlan {
        kind: PlanKind::Gaussian,
        epsilon,
        p,
        n,
        d,
        k,
        m: truncation_level(n, d, p, nu_p),
        t,
        phi: k as f64 / n as f64,
        nu_p,
        nu_source: NuSource::Analytic,
    })
}

/// Plan for the empirical bootstrap: `t = ceil(24 ln(1+d) + 49 n nu_p^p / M^p)`
/// and `phi n = floor(eps n + max(eps n, t)) + t`.
pub fn plan_bootstrap(n: usize, d: usize, epsilon: f64, p: f64, nu_p: f64) -> Result<TrimPlan> {
    check_plan_inputs(n, d, epsilon, p, nu_p)?;
    let nf = n as f64;
    let m = truncation_level(n, d, p, nu_p);
    let t = (24.0 * (1.0 + d as f64).ln() + 49.0 * nf * (nu_p / m).powf(p)).ceil() as usize;
    let en = epsilon * nf;
    let k = robust_floor(en + en.max(t as f64)) + t;
    if 2 * k >= n {
        return Err(Error::InfeasibleTrim { k, n });
    }
    Ok(TrimPlan { kind: PlanKind::Bootstrap, epsilon, p, n, d, k, m, t, phi: k as f64 / nf, nu_p, nu_source: NuSource::Analytic })
}

/// [`plan_gaussian`] with `nu_p` estimated from the sample; the plan is flagged.
pub fn plan_gaussian_plugin(sample: &SampleMatrix, epsilon: f64, p: f64) -> Result<TrimPlan> {
    let nu = crate::distributions::plugin_nu_p(sample, p);
    let mut plan = plan_gaussian(sample.n(), sample.d(), epsilon, p, nu)?;
    plan.nu_source = NuSource::Plugin;
    Ok(plan)
}

fn robust_floor(x: f64) -> usize {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.max(1.0) {
        r as usize
    } else {
        x.floor() as usize
    }
}

/// Left-hand side of the feasibility condition,
/// `nu_p^2 n^{-(3p-6)/(4p-2)} (ln nd)^{1-2/p}`.
pub fn feasibility_lhs(n: usize, d: usize, p: f64, nu_p: f64) -> f64 {
    let nf = n as f64;
    nu_p * nu_p * nf.powf(-(3.0 * p - 6.0) / (4.0 * p - 2.0)) * (nf * d as f64).ln().powf(1.0 - 2.0 / p)
}

/// Whether `feasibility_lhs <= (3/8) sigma_lower` (`sigma_lower` is a standard deviation).
pub fn check_feasibility(plan: &TrimPlan, sigma_lower: f64) -> bool {
    feasibility_lhs(plan.n, plan.d, plan.p, plan.nu_p) <= 0.375 * sigma_lower
}

/// Two-sided trimmed mean: stable sort, drop the `k` smallest and `k` largest
/// values, average the rest. The middle is summed in mirrored pairs so that
/// negating the column negates the result exactly.
///
/// With `k = 0` this is [`mean`] of `col` in its given order.
pub fn trimmed_mean(col: &[f64], k: usize) -> Result<f64> {
    let n = col.len();
    if 2 * k >= n {
        return Err(Error::TrimTooLarge { k, n });
    }
    if k == 0 {
        return Ok(mean(col));
    }
    let mut sorted = col.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(mirrored_sum(&sorted[k..n - k]) / (n - 2 * k) as f64)
}

/// Selection-based trimmed mean for hot loops; equal to [`trimmed_mean`] up to rounding.
pub fn trimmed_mean_select(buf: &mut [f64], k: usize) -> f64 {
    let n = buf.len();
    trimmed_sum_unstable(buf, k) / (n - 2 * k) as f64
}

/// Column-wise [`trimmed_mean`]; every column has its own sorting permutation.
pub fn trimmed_mean_matrix(sample: &SampleMatrix, k: usize) -> Result<Vec<f64>> {
    let n = sample.n();
    if 2 * k >= n {
        return Err(Error::TrimTooLarge { k, n });
    }
    let d = sample.d();
    let col_mean = |j: usize| trimmed_mean(&sample.column(j), k).expect("k checked above");
    Ok(if n * d >= 1 << 16 { (0..d).into_par_iter().map(col_mean).collect() } else { (0..d).map(col_mean).collect() })
}

/// Column-wise means with selection; used by the Monte Carlo loops.
pub fn trimmed_mean_matrix_select(sample: &SampleMatrix, k: usize, buf: &mut Vec<f64>) -> Vec<f64> {
    (0..sample.d())
        .map(|j| {
            sample.column_into(j, buf);
            trimmed_mean_select(buf, k)
        })
        .collect()
}

/// Mean of `tau_M(x) = clamp(x, -M, M)`.
pub fn truncated_mean(col: &[f64], m: f64) -> f64 {
    let clamped: Vec<f64> = col.iter().map(|x| truncate(*x, m)).collect();
    mean(&clamped)
}

pub fn truncate(x: f64, m: f64) -> f64 {
    x.clamp(-m, m)
}

pub fn empirical_mean_matrix(sample: &SampleMatrix) -> Vec<f64> {
    (0..sample.d()).map(|j| mean(&sample.column(j))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn trimmed_mean_examples() {
        assert_eq!(trimmed_mean(&[5.0, 1.0, 4.0, 2.0, 3.0], 1).unwrap(), 3.0);
        assert_eq!(trimmed_mean(&[1.0, 2.0, 3.0, 4.0, 1000.0], 1).unwrap(), 3.0);
        let col = [0.1, 0.7, -3.2, 9.9, 1e-3];
        assert_eq!(trimmed_mean(&col, 0).unwrap(), mean(&col));
        assert_eq!(trimmed_mean(&[1.0, 2.0], 1), Err(Error::TrimTooLarge { k: 1, n: 2 }));
    }

    #[test]
    fn truncated_mean_examples() {
        assert!((truncated_mean(&[3.0, -3.0, 1.0], 2.0) - 1.0 / 3.0).abs() < 1e-15);
        let col = [0.5, -0.25, 1.0];
        assert_eq!(truncated_mean(&col, 1.0), mean(&col));
        assert_eq!(truncated_mean(&[1e10, -4.0, 2.5], 1e300), mean(&[1e10, -4.0, 2.5]));
    }

    #[test]
    fn matrix_antisymmetric_columns() {
        let a = [3.1, -0.2, 7.7, 1.0, 1.0, -5.5, 0.3];
        let neg: Vec<f64> = a.iter().map(|x| -x).collect();
        let m = SampleMatrix::from_columns(&[a.to_vec(), neg, a.to_vec()]);
        for k in 0..3 {
            let out = trimmed_mean_matrix(&m, k).unwrap();
            assert_eq!(out[1], -out[0]);
            assert_eq!(out[2], out[0]);
        }
    }

    // Values below come from evaluating the closed formulas in 50-digit arithmetic.
    #[test]
    fn plan_gaussian_reference_values() {
        let plan = plan_gaussian(1000, 10, 0.0, 4.0, 1.0).unwrap();
        assert_eq!(plan.k, 181);
        assert_eq!(plan.t, 181);
        assert!((plan.m - 2.5222505351440423).abs() < 1e-12);
        assert!((plan.phi - 0.181).abs() < 1e-15);
        assert_eq!(plan_gaussian(1000, 10, 0.1, 4.0, 1.0).unwrap().k, 281);
        assert_eq!(plan_gaussian(10, 1000, 0.0, 3.0, 1.0), Err(Error::InfeasibleTrim { k: 102, n: 10 }));
    }

    #[test]
    fn plan_bootstrap_reference_values() {
        assert_eq!(plan_bootstrap(1000, 10, 0.0, 4.0, 1.0), Err(Error::InfeasibleTrim { k: 2538, n: 1000 }));
        let big = plan_bootstrap(1_000_000, 10, 0.0, 4.0, 1.0).unwrap();
        assert_eq!(big.t, 5742);
        assert_eq!(big.k, 2 * big.t);
        assert!((big.m - 9.635757318533936).abs() < 1e-11);
        let contaminated = plan_bootstrap(10_000_000, 10, 0.001, 4.0, 1.0).unwrap();
        assert_eq!(contaminated.t, 9084);
        assert_eq!(contaminated.k, 20_000 + 9084);
        assert!((contaminated.m - 15.264183597308047).abs() < 1e-10);
    }

    #[test]
    fn feasibility_reference_values() {
        assert!((feasibility_lhs(1000, 10, 4.0, 1.0) - 0.15718950788457737).abs() < 1e-14);
        let plan = plan_gaussian(1000, 10, 0.0, 4.0, 1.0).unwrap();
        assert!(check_feasibility(&plan, 1.0));
        let mut heavy = plan;
        heavy.nu_p = 1e150;
        assert!(!check_feasibility(&heavy, 1.0));
        let mut prev = f64::INFINITY;
        for e in 3..12 {
            let lhs = feasibility_lhs(10usize.pow(e), 10, 4.0, 1.0);
            assert!(lhs < prev);
            prev = lhs;
        }
    }

    #[test]
    fn plan_input_validation() {
        assert!(plan_gaussian(2, 10, 0.0, 4.0, 1.0).is_err());
        assert!(plan_gaussian(100, 1, 0.0, 4.0, 1.0).is_err());
        assert!(plan_gaussian(100, 10, 0.0, 2.0, 1.0).is_err());
        assert!(plan_gaussian(100, 10, 0.0, 4.0, 0.0).is_err());
        assert_eq!(plan_gaussian(100, 10, 0.6, 4.0, 1.0), Err(Error::EpsilonOutOfRange(0.6)));
    }

    fn col_strategy() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-1e6f64..1e6, 1..60)
    }

    proptest! {
        #[test]
        fn bounded_by_extremes(col in col_strategy(), kf in 0.0f64..0.5) {
            let k = ((col.len() as f64) * kf) as usize;
            prop_assume!(2 * k < col.len());
            let t = trimmed_mean(&col, k).unwrap();
            let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(lo - 1e-9 * lo.abs() <= t && t <= hi + 1e-9 * hi.abs());
        }

        #[test]
        fn negation_antisymmetric(col in col_strategy(), kf in 0.0f64..0.5) {
            let k = ((col.len() as f64) * kf) as usize;
            prop_assume!(2 * k < col.len());
            let neg: Vec<f64> = col.iter().map(|x| -x).collect();
            prop_assert_eq!(trimmed_mean(&neg, k).unwrap(), -trimmed_mean(&col, k).unwrap());
        }

        #[test]
        fn affine_equivariant(col in col_strategy(), kf in 0.0f64..0.5, c in -10.0f64..10.0, b in -100.0f64..100.0) {
            let k = ((col.len() as f64) * kf) as usize;
            prop_assume!(2 * k < col.len() && c.abs() > 1e-3);
            let moved: Vec<f64> = col.iter().map(|x| c * x + b).collect();
            let lhs = trimmed_mean(&moved, k).unwrap();
            let rhs = c * trimmed_mean(&col, k).unwrap() + b;
            let scale = col.iter().fold(1.0f64, |a, x| a.max(x.abs())) * c.abs() + b.abs();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * scale, "{} vs {}", lhs, rhs);
        }

        #[test]
        fn permutation_invariant(col in col_strategy(), kf in 0.0f64..0.5, seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            let k = ((col.len() as f64) * kf) as usize;
            prop_assume!(2 * k < col.len());
            let mut shuffled = col.clone();
            shuffled.shuffle(&mut crate::rng::Stream(seed).rng());
            let a = trimmed_mean(&col, k).unwrap();
            let b = trimmed_mean(&shuffled, k).unwrap();
            if k > 0 {
                prop_assert_eq!(a, b);
            } else {
                // The plain mean keeps the input order, so only rounding may differ.
                let scale = col.iter().fold(1.0f64, |s, x| s.max(x.abs()));
                prop_assert!((a - b).abs() <= 1e-13 * scale);
            }
        }

        #[test]
        fn select_matches_sort(col in col_strategy(), kf in 0.0f64..0.5) {
            let k = ((col.len() as f64) * kf) as usize;
            prop_assume!(2 * k < col.len());
            let mut buf = col.clone();
            let fast = trimmed_mean_select(&mut buf, k);
            let scale = col.iter().fold(1.0f64, |s, x| s.max(x.abs()));
            prop_assert!((fast - trimmed_mean(&col, k).unwrap()).abs() <= 1e-12 * scale);
        }

        #[test]
        fn plans_cover_contamination(n in 3usize..200_000, d in 2usize..500, eps in 0.0f64..0.49, p in 2.05f64..10.0) {
            if let Ok(plan) = plan_gaussian(n, d, eps, p, 1.0) {
                prop_assert!(plan.k >= contamination_budget(eps, n));
                prop_assert!(2 * plan.k < n);
                prop_assert!(plan.phi * n as f64 >= (contamination_budget(eps, n) + plan.t) as f64 - 1e-9);
            }
        }
    }
}
