//! Laplacian estimate from the first-order plan at a fixed torus point, for
//! `ε = c · N^α` over a range of exponents.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::asymptotics::{ot_laplacian_estimate, LaplacianScaling, ManifoldSpec};
use crate::datasets::torus_sample;
use crate::error::{Error, Result};
use crate::io::{write_table_csv, Cell, ExperimentRecord};

use super::{cell_seed, finish_record, mean_and_se, run_cells};

/// Test function `½(3x² + 5y² + 7z²)`.
pub fn torus_test_function(p: &[f64]) -> f64 {
    0.5 * (3.0 * p[0] * p[0] + 5.0 * p[1] * p[1] + 7.0 * p[2] * p[2])
}

/// The fixed evaluation point, at angles `u = v = π/2` of the `R = 1`,
/// `r = 1/2` torus.
pub const TORUS_X0: [f64; 3] = [0.0, 1.0, 0.5];

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TorusConfig {
    pub ns: Vec<usize>,
    pub alphas: Vec<f64>,
    pub repeats: usize,
    /// Prefactor `c` in `ε = c · N^α`.
    pub scale: f64,
    pub major: f64,
    pub minor: f64,
    pub doubled: bool,
    pub seed: u64,
}

impl Default for TorusConfig {
    fn default() -> Self {
        Self {
            ns: vec![2500],
            alphas: vec![1.25, 1.5, 1.75, 2.0],
            repeats: 10,
            scale: 1.0,
            major: 1.0,
            minor: 0.5,
            doubled: false,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TorusRow {
    pub n: usize,
    pub alpha: f64,
    pub epsilon: f64,
    pub k: f64,
    /// `K⁻¹ Δ^OT f(x₀)`
    pub estimate: f64,
    /// `−2(N+1) K⁻¹ Δ^OT f(x₀)`
    pub theorem_estimate: f64,
    pub neighbors: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TorusSummary {
    pub n: usize,
    pub alpha: f64,
    pub mean: f64,
    pub standard_error: f64,
    pub repeats: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct TorusReport {
    pub config: TorusConfig,
    pub rows: Vec<TorusRow>,
    pub summary: Vec<TorusSummary>,
    pub runtime_ms: f64,
}

impl TorusReport {
    pub fn summary_for(&self, n: usize, alpha: f64) -> Option<&TorusSummary> {
        self.summary.iter().find(|s| s.n == n && s.alpha == alpha)
    }
}

/// Difference of two means in units of their pooled standard error.
pub fn pooled_z(a: &TorusSummary, b: &TorusSummary) -> f64 {
    (a.mean - b.mean).abs() / (a.standard_error.powi(2) + b.standard_error.powi(2)).sqrt()
}

fn cell(cfg: &TorusConfig, spec: &ManifoldSpec, n: usize, seed: u64) -> Result<Vec<TorusRow>> {
    let cloud = torus_sample(n, cfg.major, cfg.minor, seed)?;
    let mut points = Vec::with_capacity(n + 1);
    points.push(TORUS_X0.to_vec());
    points.extend(cloud.points);
    cfg.alphas
        .iter()
        .map(|&alpha| {
            let epsilon = cfg.scale * (n as f64).powf(alpha);
            let est = ot_laplacian_estimate(
                &points,
                0,
                torus_test_function,
                spec,
                epsilon,
                LaplacianScaling::Appendix,
                cfg.doubled,
            )?;
            Ok(TorusRow {
                n,
                alpha,
                epsilon,
                k: est.k,
                estimate: est.value,
                theorem_estimate: -2.0 * (n as f64 + 1.0) * est.value,
                neighbors: est.neighbors,
                seed,
            })
        })
        .collect()
}

pub fn run_torus(cfg: &TorusConfig) -> Result<TorusReport> {
    if cfg.repeats == 0 || cfg.ns.iter().any(|&n| n < 2) || cfg.alphas.is_empty() {
        return Err(Error::invalid(
            "torus needs repeats >= 1, N >= 2 and at least one exponent",
        ));
    }
    if !(cfg.scale > 0.0) {
        return Err(Error::invalid(format!(
            "scale must be positive, got {}",
            cfg.scale
        )));
    }
    let spec = ManifoldSpec::torus(cfg.major, cfg.minor)?;
    let start = Instant::now();
    let cells: Vec<(usize, u64)> = cfg
        .ns
        .iter()
        .flat_map(|&n| (0..cfg.repeats).map(move |r| (n, r as u64)))
        .collect();
    let rows: Vec<TorusRow> = run_cells(&cells, |_, &(n, r)| {
        cell(cfg, &spec, n, cell_seed(cfg.seed, r as usize))
    })?
    .into_iter()
    .collect::<Result<Vec<_>>>()?
    .into_iter()
    .flatten()
    .collect();
    let mut summary = Vec::new();
    for &n in &cfg.ns {
        for &alpha in &cfg.alphas {
            let values: Vec<f64> = rows
                .iter()
                .filter(|r| r.n == n && r.alpha == alpha)
                .map(|r| r.estimate)
                .collect();
            let (mean, standard_error) = mean_and_se(&values);
            summary.push(TorusSummary {
                n,
                alpha,
                mean,
                standard_error,
                repeats: values.len(),
            });
        }
    }
    Ok(TorusReport {
        config: cfg.clone(),
        rows,
        summary,
        runtime_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

impl TorusReport {
    /// Writes `torus_estimates.csv`, `torus_summary.csv` and `torus.json`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let table = dir.join("torus_estimates.csv");
        let rows: Vec<Vec<Cell>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.n.into(),
                    r.alpha.into(),
                    r.epsilon.into(),
                    r.k.into(),
                    r.estimate.into(),
                    r.theorem_estimate.into(),
                    r.neighbors.into(),
                    r.seed.into(),
                ]
            })
            .collect();
        write_table_csv(
            &table,
            &[
                "N",
                "alpha",
                "epsilon",
                "K",
                "estimate",
                "theorem_estimate",
                "neighbors",
                "seed",
            ],
            &rows,
        )?;
        let summary = dir.join("torus_summary.csv");
        let rows: Vec<Vec<Cell>> = self
            .summary
            .iter()
            .map(|s| {
                vec![
                    s.n.into(),
                    s.alpha.into(),
                    s.mean.into(),
                    s.standard_error.into(),
                    s.repeats.into(),
                ]
            })
            .collect();
        write_table_csv(
            &summary,
            &["N", "alpha", "mean", "standard_error", "repeats"],
            &rows,
        )?;

        let cfg = &self.config;
        let mut record = ExperimentRecord::new("torus", cfg.seed)
            .param("ns", cfg.ns.clone())
            .param("alphas", cfg.alphas.clone())
            .param("repeats", cfg.repeats)
            .param("scale", cfg.scale)
            .param("doubled", cfg.doubled)
            .param("estimate_scaling", "K^-1 Delta f(x0)");
        for s in &self.summary {
            if s.mean.is_finite() {
                record.metric(&format!("mean_n{}_alpha{}", s.n, s.alpha), s.mean);
            }
            if s.standard_error.is_finite() {
                record.metric(&format!("se_n{}_alpha{}", s.n, s.alpha), s.standard_error);
            }
        }
        record.runtime_ms = self.runtime_ms;
        let artifacts = vec![table, summary];
        let json = finish_record(dir, record, &artifacts)?;
        Ok(artifacts.into_iter().chain([json]).collect())
    }
}
