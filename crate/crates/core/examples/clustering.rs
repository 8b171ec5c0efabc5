//! Spectral clustering of a Gaussian mixture with QOT and kNN affinities.
//!
//! `cargo run --release --example clustering`

use bistochastic::baselines::knn_affinity;
use bistochastic::datasets::gmm_sample;
use bistochastic::qot::solve_dense;
use bistochastic::spectral::{laplacian, nmi, spectral_clustering, symmetric_normalize};
use bistochastic::{mean_offdiag, pairwise_cost, SolverConfig};

fn main() -> bistochastic::Result<()> {
    let cloud = gmm_sample(150, 30, 4)?;
    let truth = cloud.labels.clone().expect("mixture samples are labelled");
    let c = pairwise_cost(&cloud.points, false)?;

    let plan = solve_dense(&c, &SolverConfig::with_epsilon(mean_offdiag(&c)), None)?.plan;
    let qot = spectral_clustering(&laplacian(&symmetric_normalize(&plan)?), 3, 0, 10, false)?;
    println!("qot   nmi = {:.3}", nmi(&qot.labels, &truth)?);

    for k in [10, 30, 90] {
        let w = knn_affinity(&c, k)?;
        let knn = spectral_clustering(&laplacian(&symmetric_normalize(&w)?), 3, 0, 10, false)?;
        println!("knn{k:<3}nmi = {:.3}", nmi(&knn.labels, &truth)?);
    }
    Ok(())
}
