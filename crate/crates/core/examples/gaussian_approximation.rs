//! Kolmogorov distance between `max_j sqrt(n)(T_j - mu_j)` and the Gaussian
//! limit, for the trimmed and the empirical mean.
//!
//! `cargo run --release --example gaussian_approximation`

use trimboot::experiments::estimate_rho_many;
use trimboot::{plan_gaussian, AdversaryKind, AdversaryPolicy, DistributionSpec, Family, Stream};

fn main() -> trimboot::Result<()> {
    let (d, eps, p) = (20, 0.02, 3.0);
    let spec = DistributionSpec::new(Family::SymmetricPareto { tail_index: 3.01 }, d)?;
    let nu = spec.analytic_moments(p)?.nu_p;
    let policy = AdversaryPolicy::new(AdversaryKind::LargeOutlier { magnitude: 1e4 });
    println!("{:>6} {:>10} {:>10} {:>8}", "n", "trimmed", "empirical", "band");
    for n in [1000, 2000, 4000] {
        let plan = plan_gaussian(n, d, eps, p, nu)?;
        let plans = [plan, plan.with_k(0)?];
        let reps = estimate_rho_many(&spec, eps, &policy, &plans, 500, 500, Stream::new(9).substream(n as u64))?;
        println!("{:>6} {:>10.3} {:>10.3} {:>8.3}", n, reps[0].rho_hat, reps[1].rho_hat, reps[0].dkw_band);
    }
    Ok(())
}
