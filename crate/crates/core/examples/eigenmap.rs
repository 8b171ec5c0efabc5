//! Two-dimensional eigenmap of the clean spiral from its QOT plan; writes the
//! coordinates to `spiral_eigenmap.csv` in the system temp directory.
//!
//! `cargo run --release --example eigenmap`

use bistochastic::datasets::spiral;
use bistochastic::io::write_matrix_csv;
use bistochastic::qot::solve_dense;
use bistochastic::spectral::{eigenmap_embed, eigenpairs_smallest, laplacian, symmetric_normalize};
use bistochastic::{normalize_mean, pairwise_cost, SolverConfig};

fn main() -> bistochastic::Result<()> {
    let cloud = spiral(400)?;
    let (c, _) = normalize_mean(&pairwise_cost(&cloud.points, false)?)?;
    let plan = solve_dense(&c, &SolverConfig::with_epsilon(0.1), None)?.plan;
    let l = laplacian(&symmetric_normalize(&plan)?);
    let es = eigenpairs_smallest(&l, 6)?;
    println!("smallest Laplacian eigenvalues: {:.5?}", es.eigenvalues);

    let coords = eigenmap_embed(&es, 2)?;
    // an evenly sampled closed curve maps onto a circle
    let radii: Vec<f64> = coords.row_iter().map(|r| r.norm()).collect();
    let mean = radii.iter().sum::<f64>() / radii.len() as f64;
    let spread = radii.iter().map(|r| (r - mean).abs()).fold(0.0, f64::max);
    println!("embedding radius {mean:.4} ± {spread:.1e}");

    let path = std::env::temp_dir().join("spiral_eigenmap.csv");
    write_matrix_csv(&path, &["v2".into(), "v3".into()], &coords)?;
    println!("wrote {}", path.display());
    Ok(())
}
