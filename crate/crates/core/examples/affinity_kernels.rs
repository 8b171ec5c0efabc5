//! Classical kernel affinities next to the QOT plan: degree spread before
//! and after symmetric normalisation.
//!
//! `cargo run --release --example affinity_kernels`

use bistochastic::baselines::{epanechnikov_kernel, gaussian_kernel, knn_affinity};
use bistochastic::datasets::{embed_with_noise, spiral};
use bistochastic::qot::solve_dense;
use bistochastic::spectral::{mean_perplexity, Affinity};
use bistochastic::{normalize_mean, pairwise_cost, SolverConfig};

fn spread<A: Affinity>(name: &str, w: &A) -> bistochastic::Result<()> {
    let d = w.row_sums();
    let (lo, hi) = d
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(*v), b.max(*v)));
    println!(
        "{name:<14} degree range [{lo:>9.3}, {hi:>9.3}]  perplexity {:>7.2}",
        mean_perplexity(w)?
    );
    Ok(())
}

fn main() -> bistochastic::Result<()> {
    let noisy = embed_with_noise(&spiral(400)?, 100, 2)?;
    let (c, _) = normalize_mean(&pairwise_cost(&noisy.points, false)?)?;
    spread("knn k=15", &knn_affinity(&c, 15)?)?;
    spread("gaussian", &gaussian_kernel(&c, 0.3, false)?)?;
    spread("epanechnikov", &epanechnikov_kernel(&c, 1.0)?)?;
    spread(
        "qot",
        &solve_dense(&c, &SolverConfig::with_epsilon(0.3), None)?.plan,
    )?;
    Ok(())
}
