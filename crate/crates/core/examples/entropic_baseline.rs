//! Quadratic against entropic regularisation on the same cost: sparsity and
//! effective neighbourhood size.
//!
//! `cargo run --release --example entropic_baseline`

use bistochastic::baselines::sinkhorn_symmetric_hollow;
use bistochastic::experiments::gaussian_cloud;
use bistochastic::qot::solve_dense;
use bistochastic::spectral::mean_perplexity;
use bistochastic::{normalize_mean, pairwise_cost, SolverConfig};

fn main() -> bistochastic::Result<()> {
    let (c, _) = normalize_mean(&pairwise_cost(&gaussian_cloud(400, 10, 3), false)?)?;
    let n = c.n();
    println!(
        "{:>8} {:>12} {:>12} {:>12} {:>12}",
        "eps", "qot nnz", "qot perp", "eot nnz", "eot perp"
    );
    for eps in [0.05, 0.2, 1.0, 5.0] {
        let q = solve_dense(&c, &SolverConfig::with_epsilon(eps), None)?;
        let e = sinkhorn_symmetric_hollow(&c, eps, 1e-9, 100_000)?;
        let eot_nnz = e.affinity.as_slice().iter().filter(|v| **v > 0.0).count() / 2;
        println!(
            "{eps:>8} {:>12} {:>12.2} {:>12} {:>12.2}",
            q.plan.nnz(),
            mean_perplexity(&q.plan)?,
            eot_nnz,
            mean_perplexity(&e.affinity)?
        );
    }
    println!("(out of {} pairs)", n * (n - 1) / 2);
    Ok(())
}
