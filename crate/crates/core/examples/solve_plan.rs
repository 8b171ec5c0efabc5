//! Hollow QOT plan of a small Gaussian cloud with the dense Newton solver.
//!
//! `cargo run --release --example solve_plan`

use bistochastic::experiments::gaussian_cloud;
use bistochastic::qot::solve_dense;
use bistochastic::{mean_offdiag, pairwise_cost, SolverConfig};

fn main() -> bistochastic::Result<()> {
    let points = gaussian_cloud(300, 5, 1);
    let c = pairwise_cost(&points, false)?;
    // ε equal to the mean cost is a reasonable default
    let eps = mean_offdiag(&c);
    let out = solve_dense(&c, &SolverConfig::with_epsilon(eps), None)?;

    let n = c.n();
    let degrees: Vec<usize> = out.plan.adjacency().iter().map(Vec::len).collect();
    let mean_degree = degrees.iter().sum::<usize>() as f64 / n as f64;
    println!("n = {n}, eps = {eps:.3}");
    println!("newton iterations  {}", out.diagnostics.newton_iters);
    println!(
        "row violation      {:.2e}",
        out.diagnostics.final_row_violation
    );
    println!(
        "stored nonzeros    {} of {}",
        out.plan.nnz(),
        n * (n - 1) / 2
    );
    println!(
        "mean degree        {mean_degree:.1} (min {}, max {})",
        degrees.iter().min().unwrap(),
        degrees.iter().max().unwrap()
    );
    println!("mean potential     {:.4}", out.potential.mean());
    Ok(())
}
