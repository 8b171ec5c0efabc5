//! Eigenspace angle to the clean reference for every affinity construction
//! on a smaller noisy spiral. Pass an output directory to write the tables.
//!
//! `cargo run --release --example spiral_robustness -- [out_dir]`

use bistochastic::experiments::{run_spiral, SpiralConfig};

fn main() -> bistochastic::Result<()> {
    let cfg = SpiralConfig {
        n: 250,
        d: 50,
        per_decade: 5,
        k_grid: (5..=60).step_by(5).collect(),
        ..SpiralConfig::default()
    };
    let report = run_spiral(&cfg)?;
    println!(
        "{:<14} {:>10} {:>12} {:>14}",
        "method", "min angle", "at", "decades ≤ 2×"
    );
    for s in &report.summary {
        println!(
            "{:<14} {:>10.4} {:>12.4} {:>14.2}",
            s.method.name(),
            s.min_angle,
            s.best_parameter,
            s.run_decades
        );
    }
    if let Some(dir) = std::env::args().nth(1) {
        for p in report.write(dir.as_ref())? {
            println!("wrote {}", p.display());
        }
    }
    Ok(())
}
