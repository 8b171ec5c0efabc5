//! Tune the entropic regularisation so that the mean perplexity hits a
//! target, and compare with the QOT plan at `ε = C̄`.
//!
//! `cargo run --release --example perplexity`

use bistochastic::datasets::gmm_sample;
use bistochastic::qot::solve_dense;
use bistochastic::spectral::{mean_perplexity, tune_epsilon_to_perplexity, PerplexityModel};
use bistochastic::{normalize_mean, pairwise_cost, SolverConfig};

fn main() -> bistochastic::Result<()> {
    let (c, _) = normalize_mean(&pairwise_cost(&gmm_sample(70, 10, 2)?.points, false)?)?;
    let tuned =
        tune_epsilon_to_perplexity(&c, 30.0, &PerplexityModel::default(), 0.1, (1e-2, 10.0))?;
    println!(
        "entropic: eps = {:.5} gives mean perplexity {:.3} after {} evaluations",
        tuned.epsilon,
        tuned.perplexity,
        tuned.trace.len()
    );
    let plan = solve_dense(&c, &SolverConfig::with_epsilon(1.0), None)?.plan;
    println!(
        "quadratic: eps = 1 gives mean perplexity {:.3}",
        mean_perplexity(&plan)?
    );
    Ok(())
}
