//! End-to-end experiments at desk scale.
//!
//! Each experiment has a `*Config` with sensible defaults, a `run_*`
//! function returning a serialisable report, and a `write` method on the
//! report that emits plot-ready CSV tables and a JSON [`ExperimentRecord`]
//! into a directory. Grid cells run on a rayon pool whose size is taken from
//! the `BISTOCHASTIC_WORKERS` environment variable when set.
//!
//! [`ExperimentRecord`]: crate::io::ExperimentRecord

mod bench;
mod gmm;
mod sphere;
mod spiral;
mod torus;

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::{write_record_json, ExperimentRecord};

pub use bench::{
    gaussian_cloud, run_bench_activeset, run_bench_newton, symmetrised_gaussian,
    ActiveSetBenchConfig, ActiveSetBenchReport, ActiveSetRow, NewtonBenchConfig, NewtonBenchReport,
    NewtonBenchRow,
};
pub use gmm::{run_gmm, GmmConfig, GmmMethodRow, GmmReport};
pub use sphere::{run_sphere_scaling, SphereConfig, SphereDimReport, SphereReport, SphereRow};
pub use spiral::{
    longest_run_decades, run_spiral, SpiralConfig, SpiralMethod, SpiralReport, SpiralRow,
    SpiralSummary,
};
pub use torus::{
    pooled_z, run_torus, torus_test_function, TorusConfig, TorusReport, TorusRow, TorusSummary,
    TORUS_X0,
};

/// Environment variable holding the worker-pool size.
pub const WORKERS_ENV: &str = "BISTOCHASTIC_WORKERS";

/// `per_decade` log-spaced points per decade from `lo` to `hi`, both ends
/// included.
pub fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) || per_decade == 0 {
        return Err(Error::invalid(format!(
            "bad grid [{lo}, {hi}] with {per_decade} points per decade"
        )));
    }
    let decades = (hi / lo).log10();
    let steps = (decades * per_decade as f64).round() as usize;
    if steps == 0 {
        return Ok(vec![lo]);
    }
    let (a, b) = (lo.log10(), hi.log10());
    Ok((0..=steps)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / steps as f64))
        .collect())
}

/// Seed of grid cell `index` derived from the run's base seed.
pub fn cell_seed(base: u64, index: usize) -> u64 {
    // splitmix64 finaliser
    let mut z = base.wrapping_add((index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Pool size from `BISTOCHASTIC_WORKERS`, or rayon's default.
pub fn worker_count() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&w| w > 0)
        .unwrap_or_else(rayon::current_num_threads)
}

/// Evaluates `f` on every item in parallel, preserving order.
pub(crate) fn run_cells<T, R, F>(items: &[T], f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count())
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| items.par_iter().enumerate().map(|(i, t)| f(i, t)).collect()))
}

pub(crate) fn finish_record(
    dir: &Path,
    mut record: ExperimentRecord,
    artifacts: &[PathBuf],
) -> Result<PathBuf> {
    record.artifact_paths = artifacts
        .iter()
        .map(|p| {
            p.file_name()
                .map(|f| f.to_string_lossy().into_owned())
                .unwrap_or_default()
        })
        .collect();
    let path = dir.join(format!("{}.json", record.experiment));
    write_record_json(&path, &record)?;
    Ok(path)
}

pub(crate) fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
