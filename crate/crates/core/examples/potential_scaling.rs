//! Mean optimal potential against `ε` on spheres, with the fitted power law.
//!
//! `cargo run --release --example potential_scaling`

use bistochastic::experiments::{run_sphere_scaling, SphereConfig};

fn main() -> bistochastic::Result<()> {
    let report = run_sphere_scaling(&SphereConfig::default())?;
    for dim in &report.dims {
        println!(
            "S^{}: slope {:.3} (first-order theory {:.3}), r² = {:.4}",
            dim.d, dim.fit.slope, dim.expected_slope, dim.fit.r2
        );
        for row in dim.rows.iter().step_by(4) {
            println!(
                "    eps {:>9.1e}  mean u {:.4e}  ({} Newton steps)",
                row.epsilon, row.mean_potential, row.newton_iters
            );
        }
    }
    Ok(())
}
