//! Adding `η_i + η_j` to the cost leaves the plan unchanged and shifts the
//! potential by `η`. This is why bistochastic projection cancels noise whose
//! only effect on squared distances is a per-point offset.
//!
//! `cargo run --release --example noise_invariance`

use bistochastic::datasets::spiral;
use bistochastic::qot::solve_dense;
use bistochastic::{normalize_mean, pairwise_cost, rank_one_shift, SolverConfig};

fn main() -> bistochastic::Result<()> {
    let (c, _) = normalize_mean(&pairwise_cost(&spiral(300)?.points, false)?)?;
    let eta: Vec<f64> = (0..c.n())
        .map(|i| 0.3 * (i as f64 * 0.1).sin().abs())
        .collect();
    let shifted = rank_one_shift(&c, &eta)?;
    let cfg = SolverConfig::with_epsilon(0.5);
    let a = solve_dense(&c, &cfg, None)?;
    let b = solve_dense(&shifted, &cfg, None)?;
    let drift = a
        .potential
        .values()
        .iter()
        .zip(b.potential.values())
        .zip(&eta)
        .map(|((u, v), e)| (v - u - e).abs())
        .fold(0.0, f64::max);
    println!(
        "plan change under the shift:   {:.2e}",
        a.plan.frobenius_distance(&b.plan)
    );
    println!("max |u' − u − η|:              {drift:.2e}");
    // the kernel alone is not invariant
    let ka: f64 = c
        .as_slice()
        .iter()
        .zip(shifted.as_slice())
        .map(|(x, y)| ((-x / 0.5f64).exp() - (-y / 0.5f64).exp()).powi(2))
        .sum();
    println!("Gaussian kernel change:        {:.2e}", ka.sqrt());
    Ok(())
}
