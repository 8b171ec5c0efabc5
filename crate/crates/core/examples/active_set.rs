//! Active-set solve started from a k-nearest-neighbour support, checked
//! against the dense solver.
//!
//! `cargo run --release --example active_set`

use std::time::Instant;

use bistochastic::experiments::gaussian_cloud;
use bistochastic::qot::{knn_support, solve_active_set, solve_dense};
use bistochastic::{normalize_mean, pairwise_cost, SolverConfig};

fn main() -> bistochastic::Result<()> {
    let (c, _) = normalize_mean(&pairwise_cost(&gaussian_cloud(1500, 50, 7), false)?)?;
    let cfg = SolverConfig::with_epsilon(1.0);

    let t = Instant::now();
    let s0 = knn_support(&c, 50)?;
    let active = solve_active_set(&c, &cfg, &s0)?;
    let active_time = t.elapsed();

    let t = Instant::now();
    let dense = solve_dense(&c, &cfg, None)?;
    let dense_time = t.elapsed();

    println!("initial support   {} edges", s0.edge_count());
    println!(
        "final support     {} edges after {} outer iterations",
        active.diagnostics.support_size, active.diagnostics.outer_iters
    );
    println!("active set        {active_time:?}");
    println!("dense             {dense_time:?}");
    println!(
        "plan difference   {:.2e} (Frobenius)",
        dense.plan.frobenius_distance(&active.plan)
    );
    Ok(())
}
