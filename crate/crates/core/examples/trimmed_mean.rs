//! Trim plans and the trimmed mean against an adversary.
//!
//! `cargo run --example trimmed_mean`

use trimboot::{
    contaminate, plan_bootstrap, plan_gaussian, trimmed_mean_matrix, AdversaryKind, AdversaryPolicy, DistributionSpec, Family, Stream,
};
use trimboot::estimators::empirical_mean_matrix;

fn main() -> trimboot::Result<()> {
    let (n, d, eps, p) = (4000, 10, 0.05, 3.0);
    let spec = DistributionSpec::new(Family::SymmetricPareto { tail_index: 3.5 }, d)?;
    let nu = spec.analytic_moments(p)?.nu_p;

    let plan = plan_gaussian(n, d, eps, p, nu)?;
    println!("gaussian plan: k = {}, M = {:.3}, t = {}, phi = {:.4}", plan.k, plan.m, plan.t, plan.phi);
    match plan_bootstrap(n, d, eps, p, nu) {
        Ok(b) => println!("bootstrap plan: k = {}", b.k),
        Err(e) => println!("bootstrap plan: {e}"),
    }

    let clean = spec.sample(n, Stream::new(1))?;
    let policy = AdversaryPolicy::new(AdversaryKind::OppositeShift { magnitude: 1e3 });
    let data = contaminate(clean, eps, &policy, Stream::new(2))?;
    println!("replaced {} of {} rows", data.replaced(), n);

    let trimmed = trimmed_mean_matrix(&data.values, plan.k)?;
    let naive = empirical_mean_matrix(&data.values);
    let sup = |v: &[f64]| v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    println!("sup error, trimmed mean:   {:.4}", sup(&trimmed));
    println!("sup error, empirical mean: {:.4}", sup(&naive));
    Ok(())
}
