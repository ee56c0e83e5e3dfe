//! The deterministic and probabilistic lemma checks on small scenarios.
//!
//! `cargo run --release --example lemma_checks`

use trimboot::diagnostics::{run_suite_entry, SuiteSizes, SUITE_IDS};
use trimboot::Stream;

fn main() -> trimboot::Result<()> {
    let sizes = SuiteSizes { bounding_instances: 20, replications: 2000 };
    for id in SUITE_IDS {
        for r in run_suite_entry(id, sizes, Stream::new(1))? {
            println!(
                "{:<22} {} checked={:<5} violations={:<3} worst_slack={:.4e} {}",
                r.lemma_id,
                if r.pass { "ok  " } else { "FAIL" },
                r.instances_checked,
                r.violations,
                r.worst_slack,
                r.note
            );
        }
    }
    Ok(())
}
