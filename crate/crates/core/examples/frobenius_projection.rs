//! Frobenius projection of a random symmetric matrix onto the hollow
//! bistochastic matrices, compared with alternating projections.
//!
//! `cargo run --release --example frobenius_projection`

use bistochastic::experiments::{run_bench_newton, NewtonBenchConfig};

fn count(iters: Option<usize>) -> String {
    iters.map_or("no".into(), |k| k.to_string())
}

fn main() -> bistochastic::Result<()> {
    let cfg = NewtonBenchConfig {
        ns: vec![250],
        ..NewtonBenchConfig::default()
    };
    let report = run_bench_newton(&cfg)?;
    let row = &report.rows[0];
    println!("Newton ‖π1 − 1‖₂ per iteration:");
    for (k, v) in row.newton_history.iter().enumerate() {
        println!("  {k:>3}  {v:.3e}");
    }
    println!(
        "Newton reaches {:.0e} after {} iterations ({:.1} ms)",
        cfg.newton_target,
        count(row.newton_iters),
        row.newton_ms
    );
    println!(
        "alternating projections reach {:.0e} after {} iterations ({:.1} ms)",
        cfg.alternating_target,
        count(row.alternating_iters),
        row.alternating_ms
    );
    Ok(())
}
