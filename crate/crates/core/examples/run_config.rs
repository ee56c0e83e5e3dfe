//! Run an experiment config from code instead of through the binary.
//!
//! `cargo run --release --example run_config -- examples/configs/smoke.toml`

use std::path::PathBuf;

use trimboot::cli::{execute, ExperimentConfig};

fn main() {
    let path = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs/smoke.toml")));
    let cfg = match ExperimentConfig::load(&path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(e.exit_code());
        }
    };
    let base = path.parent().unwrap_or(std::path::Path::new("."));
    match execute(&cfg, base, false) {
        Ok(out) => {
            for r in &out.rows {
                println!("{:<10} n={:<6} d={:<4} {:<10} k={:<5} rho_hat={:.3}", r.experiment, r.n, r.d, r.estimator, r.k, r.rho_hat);
            }
            for n in &out.notes {
                println!("note: {n}");
            }
        }
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(e.exit_code());
        }
    }
}
