//! Laplacian estimate at a fixed torus point from the first-order plan, as
//! the bandwidth exponent varies.
//!
//! `cargo run --release --example torus_laplacian`

use bistochastic::experiments::{pooled_z, run_torus, TorusConfig};

fn main() -> bistochastic::Result<()> {
    let report = run_torus(&TorusConfig {
        ns: vec![1000, 2500],
        ..TorusConfig::default()
    })?;
    println!(
        "{:>6} {:>6} {:>12} {:>10} {:>10}",
        "N", "alpha", "N·mean", "N·se", "z vs α=2"
    );
    for s in &report.summary {
        let last = report
            .summary_for(s.n, 2.0)
            .expect("α = 2 is in the default grid");
        let n = s.n as f64;
        println!(
            "{:>6} {:>6} {:>12.4} {:>10.4} {:>10.2}",
            s.n,
            s.alpha,
            n * s.mean,
            n * s.standard_error,
            pooled_z(s, last)
        );
    }
    Ok(())
}
