//! Gaussian maxima: Cholesky with jitter, the width of a dual set, the
//! off-diagonal discrepancy and an anti-concentration check.
//!
//! `cargo run --release --example gaussian_tools`

use trimboot::gaussian::{gaussian_width, nazarov_diagnostic, xi_estimate, CovarianceModel, NormSpecFinite};
use trimboot::Stream;

fn main() -> trimboot::Result<()> {
    let d = 30;
    let rho = 0.3;
    let sigma: Vec<f64> = (0..d * d).map(|i| if i / d == i % d { 1.0 } else { rho }).collect();
    let model = CovarianceModel::new(&sigma, d)?;
    println!("jitter used: {}", model.jitter);

    let w = gaussian_width(&sigma, d, &NormSpecFinite::linf(d), 20_000, Stream::new(1))?;
    println!("E max_j |Z_j| = {:.4} +- {:.4}", w.value, w.stderr);

    let xi = xi_estimate(&model, 0.1, 20_000, Stream::new(2))?;
    println!("Xi(0.1) = {:.4} (bound 0.1 sqrt(d) = {:.4})", xi.value, 0.1 * (d as f64).sqrt());

    let lambdas: Vec<f64> = (0..8).map(|i| 1.0 + 0.25 * i as f64).collect();
    let nz = nazarov_diagnostic(&model, 0.05, &lambdas, 20_000, Stream::new(3))?;
    println!("largest band probability {:.4} vs bound {:.4}", nz.probabilities.iter().fold(0.0f64, |a, b| a.max(*b)), nz.bound);
    Ok(())
}
