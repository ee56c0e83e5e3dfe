//! Synthetic generators with exact moment functionals.
//!
//! The function family is always the `d` coordinate projections, so the
//! population mean, covariance, `nu_p` and the smallest standard deviation
//! are known in closed form (or by quadrature) for every experiment.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::matrix::SampleMatrix;
use crate::numeric::{gamma, integrate_to_inf};
use crate::rng::Stream;

/// Marginal family. Heavy-tailed families have independent coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Family {
    /// `X_j = sqrt(rho) Z_0 + sqrt(1 - rho) Z_j`.
    GaussianEquicorrelated { rho: f64 },
    /// Student t with `dof` degrees of freedom (variance `dof / (dof - 2)`).
    StudentT { dof: f64 },
    /// `X = S * R` with `R ~ Pareto(x_m = 1, tail_index)` and a fair sign `S`.
    SymmetricPareto { tail_index: f64 },
    /// `exp(s Z) - exp(s^2 / 2)`.
    LogNormalCentered { s: f64 },
}

impl Family {
    /// Supremum of the orders `p` for which `E|X|^p` is finite.
    pub fn moment_bound(&self) -> f64 {
        match *self {
            Family::StudentT { dof } => dof,
            Family::SymmetricPareto { tail_index } => tail_index,
            Family::GaussianEquicorrelated { .. } | Family::LogNormalCentered { .. } => f64::INFINITY,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Family::GaussianEquicorrelated { rho } if !(0.0..1.0).contains(&rho) => {
                Err(invalid(format!("equicorrelation rho = {rho} must lie in [0, 1)")))
            }
            Family::StudentT { dof } if dof.is_nan() || dof <= 2.0 => {
                Err(invalid(format!("student-t dof = {dof} must exceed 2 for a finite variance")))
            }
            Family::SymmetricPareto { tail_index } if tail_index.is_nan() || tail_index <= 2.0 => Err(invalid(format!(
                "pareto tail index {tail_index} must exceed 2 for a finite variance"
            ))),
            Family::LogNormalCentered { s } if s.is_nan() || s <= 0.0 => {
                Err(invalid(format!("log-normal shape s = {s} must be positive")))
            }
            _ => Ok(()),
        }
    }

    /// `E|X - EX|^p` of the unscaled marginal.
    fn central_abs_moment(&self, p: f64) -> Result<f64> {
        let bound = self.moment_bound();
        if p >= bound {
            return Err(Error::MomentDoesNotExist { p, bound });
        }
        Ok(match *self {
            Family::GaussianEquicorrelated { .. } => gaussian_abs_moment(p),
            Family::StudentT { dof } => {
                dof.powf(p / 2.0) * gamma((p + 1.0) / 2.0) * gamma((dof - p) / 2.0)
                    / (std::f64::consts::PI.sqrt() * gamma(dof / 2.0))
            }
            Family::SymmetricPareto { tail_index } => tail_index / (tail_index - p),
            Family::LogNormalCentered { s } => lognormal_central_abs_moment(s, p),
        })
    }

    /// Variance of the unscaled marginal.
    pub fn variance(&self) -> f64 {
        match *self {
            Family::GaussianEquicorrelated { .. } => 1.0,
            Family::StudentT { dof } => dof / (dof - 2.0),
            Family::SymmetricPareto { tail_index } => tail_index / (tail_index - 2.0),
            Family::LogNormalCentered { s } => ((s * s).exp() - 1.0) * (s * s).exp(),
        }
    }

    /// Density of the unscaled marginal, used by quadrature-based checks.
    pub fn density(&self, x: f64) -> f64 {
        match *self {
            Family::GaussianEquicorrelated { .. } => (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt(),
            Family::StudentT { dof } => {
                gamma((dof + 1.0) / 2.0) / ((dof * std::f64::consts::PI).sqrt() * gamma(dof / 2.0))
                    * (1.0 + x * x / dof).powf(-(dof + 1.0) / 2.0)
            }
            Family::SymmetricPareto { tail_index } => {
                let r = x.abs();
                if r < 1.0 {
                    0.0
                } else {
                    0.5 * tail_index * r.powf(-tail_index - 1.0)
                }
            }
            Family::LogNormalCentered { s } => {
                let y = x + (0.5 * s * s).exp();
                if y <= 0.0 {
                    0.0
                } else {
                    let z = y.ln() / s;
                    (-0.5 * z * z).exp() / ((2.0 * std::f64::consts::PI).sqrt() * s * y)
                }
            }
        }
    }

    /// Points where the density is non-smooth or its support begins.
    pub fn breakpoints(&self) -> Vec<f64> {
        match *self {
            Family::SymmetricPareto { .. } => vec![-1.0, 1.0],
            Family::LogNormalCentered { s } => vec![-(0.5 * s * s).exp()],
            _ => vec![0.0],
        }
    }
}

/// `E|Z|^p = 2^{p/2} Gamma((p+1)/2) / sqrt(pi)`.
pub fn gaussian_abs_moment(p: f64) -> f64 {
    2f64.powf(p / 2.0) * gamma((p + 1.0) / 2.0) / std::f64::consts::PI.sqrt()
}

fn lognormal_central_abs_moment(s: f64, p: f64) -> f64 {
    // Integrate over z with X = exp(sz) - m; the kink sits at z0 = s / 2.
    let m = (0.5 * s * s).exp();
    let z0 = 0.5 * s;
    let phi = |z: f64| (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let upper = |u: f64| ((s * (z0 + u)).exp() - m).abs().powf(p) * phi(z0 + u);
    let lower = |u: f64| ((s * (z0 - u)).exp() - m).abs().powf(p) * phi(z0 - u);
    integrate_to_inf(&upper, 0.0, 1e-12) + integrate_to_inf(&lower, 0.0, 1e-12)
}

/// Per-coordinate scale factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scale {
    Uniform(f64),
    PerCoordinate(Vec<f64>),
}

impl Default for Scale {
    fn default() -> Self {
        Scale::Uniform(1.0)
    }
}

/// A synthetic distribution over `R^d`, evaluated on the coordinate projections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionSpec {
    pub family: Family,
    #[serde(default = "default_dim")]
    pub d: usize,
    #[serde(default)]
    pub scale: Scale,
}

fn default_dim() -> usize {
    1
}

/// Population quantities for the coordinate-projection family.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Moments {
    pub mean: Vec<f64>,
    /// Row-major `d x d` covariance.
    pub cov: Vec<f64>,
    pub d: usize,
    pub p: f64,
    /// `sup_j (E|X_j - EX_j|^p)^{1/p}`.
    pub nu_p: f64,
    /// Smallest coordinate standard deviation.
    pub sigma_lower: f64,
}

impl Moments {
    pub fn cov_at(&self, j: usize, l: usize) -> f64 {
        self.cov[j * self.d + l]
    }

    pub fn sigma_lower_sq(&self) -> f64 {
        self.sigma_lower * self.sigma_lower
    }

    pub fn nu_p_pow(&self) -> f64 {
        self.nu_p.powf(self.p)
    }
}

impl DistributionSpec {
    pub fn new(family: Family, d: usize) -> Result<Self> {
        let spec = DistributionSpec { family, d, scale: Scale::Uniform(1.0) };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_scale(mut self, scale: Scale) -> Result<Self> {
        self.scale = scale;
        self.validate()?;
        Ok(self)
    }

    /// Same family at another dimension. Per-coordinate scales must match `d`.
    pub fn with_dim(&self, d: usize) -> Result<Self> {
        let spec = DistributionSpec { family: self.family, d, scale: self.scale.clone() };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        self.family.validate()?;
        if self.d == 0 {
            return Err(invalid("dimension d must be positive"));
        }
        match &self.scale {
            Scale::Uniform(s) if !(s.is_finite() && *s > 0.0) => Err(invalid(format!("scale {s} must be positive"))),
            Scale::PerCoordinate(v) if v.len() != self.d => {
                Err(invalid(format!("{} scale entries for dimension {}", v.len(), self.d)))
            }
            Scale::PerCoordinate(v) if v.iter().any(|s| !(s.is_finite() && *s > 0.0)) => {
                Err(invalid("every scale entry must be positive"))
            }
            _ => Ok(()),
        }
    }

    pub fn scale_at(&self, j: usize) -> f64 {
        match &self.scale {
            Scale::Uniform(s) => *s,
            Scale::PerCoordinate(v) => v[j],
        }
    }

    /// Whether the coordinates are independent (diagonal covariance).
    pub fn is_diagonal(&self) -> bool {
        !matches!(self.family, Family::GaussianEquicorrelated { rho } if rho != 0.0)
    }

    /// The population mean vector. Every family is centered.
    pub fn mean(&self) -> Vec<f64> {
        vec![0.0; self.d]
    }

    /// Row-major covariance matrix.
    pub fn covariance(&self) -> Vec<f64> {
        let d = self.d;
        let var = self.family.variance();
        let rho = match self.family {
            Family::GaussianEquicorrelated { rho } => rho,
            _ => 0.0,
        };
        let mut cov = vec![0.0; d * d];
        for j in 0..d {
            for l in 0..d {
                let c = if j == l { var } else { rho * var };
                cov[j * d + l] = c * self.scale_at(j) * self.scale_at(l);
            }
        }
        cov
    }

    /// Draw `n` i.i.d. rows. Deterministic given `(self, n, stream)`.
    pub fn sample(&self, n: usize, stream: Stream) -> Result<SampleMatrix> {
        self.validate()?;
        if n == 0 {
            return Err(invalid("sample size n must be at least 1"));
        }
        let d = self.d;
        let mut rng = stream.rng();
        let mut values = vec![0.0; n * d];
        match self.family {
            Family::GaussianEquicorrelated { rho } => {
                let (a, b) = (rho.sqrt(), (1.0 - rho).sqrt());
                for row in values.chunks_mut(d) {
                    let common: f64 = if rho > 0.0 { rng.sample(StandardNormal) } else { 0.0 };
                    for (j, x) in row.iter_mut().enumerate() {
                        let z: f64 = rng.sample(StandardNormal);
                        *x = self.scale_at(j) * (a * common + b * z);
                    }
                }
            }
            Family::StudentT { dof } => {
                let t = StudentT::new(dof).map_err(|e| invalid(e.to_string()))?;
                for row in values.chunks_mut(d) {
                    for (j, x) in row.iter_mut().enumerate() {
                        *x = self.scale_at(j) * t.sample(&mut rng);
                    }
                }
            }
            Family::SymmetricPareto { tail_index } => {
                let inv = -1.0 / tail_index;
                for row in values.chunks_mut(d) {
                    for (j, x) in row.iter_mut().enumerate() {
                        let bits: u64 = rng.random();
                        // 53 high bits give u in (0, 1]; the low bit is the sign.
                        let u = ((bits >> 11) as f64 + 1.0) * (1.0 / (1u64 << 53) as f64);
                        let r = u.powf(inv);
                        let sign = if bits & 1 == 0 { 1.0 } else { -1.0 };
                        *x = self.scale_at(j) * sign * r;
                    }
                }
            }
            Family::LogNormalCentered { s } => {
                let shift = (0.5 * s * s).exp();
                for row in values.chunks_mut(d) {
                    for (j, x) in row.iter_mut().enumerate() {
                        let z: f64 = rng.sample(StandardNormal);
                        *x = self.scale_at(j) * ((s * z).exp() - shift);
                    }
                }
            }
        }
        Ok(SampleMatrix::from_rows(n, d, values, stream))
    }

    /// Mean, covariance, `nu_p` and `sigma_lower` at order `p`.
    pub fn analytic_moments(&self, p: f64) -> Result<Moments> {
        self.validate()?;
        if !(p > 0.0) {
            return Err(invalid(format!("moment order p = {p} must be positive")));
        }
        let base = self.family.central_abs_moment(p)?.powf(1.0 / p);
        let max_scale = (0..self.d).map(|j| self.scale_at(j)).fold(0.0, f64::max);
        let min_scale = (0..self.d).map(|j| self.scale_at(j)).fold(f64::INFINITY, f64::min);
        Ok(Moments {
            mean: self.mean(),
            cov: self.covariance(),
            d: self.d,
            p,
            nu_p: max_scale * base,
            sigma_lower: min_scale * self.family.variance().sqrt(),
        })
    }
}

/// Plug-in estimate of `nu_p` from data: `max_j (mean_i |x_ij - mean_j|^p)^{1/p}`.
///
/// Experiments use analytic moments; this is offered for data of unknown law
/// and is flagged as such in any plan built from it.
pub fn plugin_nu_p(sample: &SampleMatrix, p: f64) -> f64 {
    (0..sample.d())
        .map(|j| {
            let col = sample.column(j);
            let m = crate::numeric::mean(&col);
            let dev: Vec<f64> = col.iter().map(|x| (x - m).abs().powf(p)).collect();
            crate::numeric::mean(&dev).powf(1.0 / p)
        })
        .fold(0.0, f64::max)
}
