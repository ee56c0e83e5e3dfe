//! Empirical vs trimmed mean as the dimension crosses `n^{p/2 - 1}`.
//!
//! `cargo run --release --example threshold_phenomenon`

use trimboot::experiments::threshold_experiment;
use trimboot::Stream;

fn main() -> trimboot::Result<()> {
    let table = threshold_experiment(3.0, &[-0.5, 0.0, 0.5], &[400], 400, Stream::new(7))?;
    println!("{:>6} {:>6} {:>6} {:>10} {:>5} {:>8}", "n", "delta", "d", "estimator", "k", "rho");
    for r in &table.rows {
        println!("{:>6} {:>6} {:>6} {:>10} {:>5} {:>8.3}", r.n, r.delta, r.d, r.estimator, r.k, r.rho_hat);
    }
    for note in &table.notes {
        println!("note: {note}");
    }
    Ok(())
}
