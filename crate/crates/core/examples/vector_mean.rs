//! Minimax mean estimation under a norm given by a finite dual set.
//!
//! `cargo run --release --example vector_mean`

use trimboot::gaussian::{gaussian_width, NormSpecFinite};
use trimboot::vecmean::{directional_trimmed_means, minimax_mean, vecmean_plan};
use trimboot::{contaminate, AdversaryKind, AdversaryPolicy, DistributionSpec, Family, Stream};

fn main() -> trimboot::Result<()> {
    let (n, d, eps) = (5000, 3, 0.05);
    let spec = DistributionSpec::new(Family::StudentT { dof: 5.0 }, d)?;
    let s = NormSpecFinite::parse("1 0 0\n0 1 0\n0 0 1\n1 1 1\n1 -1 0\n")?;
    let plan = vecmean_plan(n, d, eps, 4.0, 1.0)?;
    let policy = AdversaryPolicy::new(AdversaryKind::OppositeShift { magnitude: 30.0 });
    let data = contaminate(spec.sample(n, Stream::new(1))?, eps, &policy, Stream::new(2))?;

    let tvals = directional_trimmed_means(&data, &s, plan.k)?;
    let sol = minimax_mean(&tvals, &s)?;
    println!("k = {}, |S| = {}", plan.k, s.len());
    println!("mu_hat = {:?}", sol.mu_hat);
    println!("objective = {:.5}, status = {:?}, gap = {:.2e}", sol.objective, sol.status, sol.duality_gap);
    println!("||mu_hat - mu||_S = {:.5}", s.norm(&sol.mu_hat));
    let w = gaussian_width(&spec.covariance(), d, &s, 20_000, Stream::new(3))?;
    println!("reference w / sqrt(n) = {:.5}", w.value / (n as f64).sqrt());
    Ok(())
}
