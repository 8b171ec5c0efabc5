//! Round trip of points, plans and potentials through the on-disk formats.
//!
//! `cargo run --release --example file_formats`

use bistochastic::datasets::gmm_sample;
use bistochastic::io::{
    read_cloud, read_plan_coo, read_potential_csv, write_cloud, write_plan_coo, write_potential_csv,
};
use bistochastic::qot::solve_dense;
use bistochastic::{pairwise_cost, SolverConfig};

fn main() -> bistochastic::Result<()> {
    let dir = std::env::temp_dir().join("bistochastic-formats");
    let cloud = gmm_sample(20, 3, 9)?;
    write_cloud(dir.join("points.csv"), &cloud)?;
    let back = read_cloud(dir.join("points.csv"))?;
    assert_eq!(back.points, cloud.points);

    let out = solve_dense(
        &pairwise_cost(&back.points, false)?,
        &SolverConfig::with_epsilon(2.0),
        None,
    )?;
    write_plan_coo(dir.join("plan.coo"), &out.plan, Some(2.0))?;
    write_potential_csv(dir.join("potential.csv"), &out.potential)?;
    let (plan, header) = read_plan_coo(dir.join("plan.coo"))?;
    let u = read_potential_csv(dir.join("potential.csv"))?;
    assert_eq!(plan.triplets(), out.plan.triplets());
    assert_eq!(u.values(), out.potential.values());
    println!(
        "n = {}, eps = {:?}, {} stored entries, files in {}",
        header.n,
        header.epsilon,
        plan.nnz(),
        dir.display()
    );
    print!(
        "{}",
        std::fs::read_to_string(dir.join("plan.coo"))?
            .lines()
            .take(4)
            .collect::<Vec<_>>()
            .join("\n")
    );
    println!();
    Ok(())
}
