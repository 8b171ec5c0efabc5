//! Noisy spiral: eigenspace agreement with the clean reference graph across
//! affinity constructions and their bandwidths.

use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::baselines::{
    epanechnikov_kernel, gaussian_kernel, knn_affinity, sinkhorn_symmetric_hollow,
};
use crate::config::SolverConfig;
use crate::cost::{normalize_mean, pairwise_cost, CostMatrix};
use crate::datasets::{embed_with_noise, spiral};
use crate::error::{Error, Result};
use crate::io::{write_table_csv, Cell, ExperimentRecord};
use crate::qot::{frobenius_project, solve_dense};
use crate::spectral::{eigenpairs_smallest, laplacian, mean_angle, symmetric_normalize, Affinity};

use super::{finish_record, log_grid, run_cells};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpiralMethod {
    Qot,
    Eot,
    Knn,
    Gaussian,
    Epanechnikov,
    GaussianL2,
}

impl SpiralMethod {
    pub const ALL: [SpiralMethod; 6] = [
        SpiralMethod::Qot,
        SpiralMethod::Eot,
        SpiralMethod::Knn,
        SpiralMethod::Gaussian,
        SpiralMethod::Epanechnikov,
        SpiralMethod::GaussianL2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SpiralMethod::Qot => "qot",
            SpiralMethod::Eot => "eot",
            SpiralMethod::Knn => "knn",
            SpiralMethod::Gaussian => "gaussian",
            SpiralMethod::Epanechnikov => "epanechnikov",
            SpiralMethod::GaussianL2 => "gaussian-l2",
        }
    }

    fn parameter_name(self) -> &'static str {
        if self == SpiralMethod::Knn {
            "k"
        } else {
            "epsilon"
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpiralConfig {
    pub n: usize,
    pub d: usize,
    pub seed: u64,
    pub eps_lo: f64,
    pub eps_hi: f64,
    pub per_decade: usize,
    pub k_grid: Vec<usize>,
    /// Leading Laplacian eigenvectors compared (the trivial one included).
    pub eigvecs: usize,
    pub reference_k: usize,
    pub methods: Vec<SpiralMethod>,
    pub sinkhorn_tol: f64,
    pub sinkhorn_max_iters: usize,
}

impl Default for SpiralConfig {
    fn default() -> Self {
        Self {
            n: 500,
            d: 100,
            seed: 0,
            eps_lo: 1e-2,
            eps_hi: 1e2,
            per_decade: 20,
            k_grid: (5..=125).step_by(5).collect(),
            eigvecs: 10,
            reference_k: 3,
            methods: SpiralMethod::ALL.to_vec(),
            sinkhorn_tol: 1e-9,
            sinkhorn_max_iters: 20_000,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SpiralRow {
    pub method: SpiralMethod,
    pub parameter: f64,
    /// Mean principal angle to the reference eigenspace; NaN when the
    /// construction failed.
    pub angle: f64,
    pub status: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpiralSummary {
    pub method: SpiralMethod,
    pub min_angle: f64,
    pub best_parameter: f64,
    /// Width in decades of the longest contiguous parameter run with angle
    /// within twice the minimum.
    pub run_decades: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpiralReport {
    pub config: SpiralConfig,
    pub rows: Vec<SpiralRow>,
    pub summary: Vec<SpiralSummary>,
    pub runtime_ms: f64,
}

/// Leading `k` eigenvectors of the symmetrically normalised Laplacian.
pub(crate) fn laplacian_eigvecs<A: Affinity>(w: &A, k: usize) -> Result<DMatrix<f64>> {
    let wbar = symmetric_normalize(w)?;
    let es = eigenpairs_smallest(&laplacian(&wbar), k)?;
    Ok(es.eigenvectors)
}

/// Longest run of consecutive grid points whose value is at most
/// `factor · min`, measured as `log10(last / first)` of the parameters.
/// NaN values break runs.
pub fn longest_run_decades(params: &[f64], values: &[f64], factor: f64) -> f64 {
    let min = values
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .fold(f64::INFINITY, f64::min);
    if !min.is_finite() {
        return 0.0;
    }
    let mut best = 0.0f64;
    let mut start: Option<usize> = None;
    for (i, v) in values.iter().enumerate() {
        if v.is_finite() && *v <= factor * min {
            let s = *start.get_or_insert(i);
            // grid points are exact powers of ten up to rounding
            let width = ((params[i].log10() - params[s].log10()) * 1e12).round() / 1e12;
            best = best.max(width);
        } else {
            start = None;
        }
    }
    best
}

fn cell(
    method: SpiralMethod,
    param: f64,
    c: &CostMatrix,
    cfg: &SpiralConfig,
    reference: &DMatrix<f64>,
) -> Result<f64> {
    let k = cfg.eigvecs;
    let vecs = match method {
        SpiralMethod::Qot => {
            let out = solve_dense(c, &SolverConfig::with_epsilon(param), None)?;
            laplacian_eigvecs(&out.plan, k)?
        }
        SpiralMethod::Eot => {
            let out =
                sinkhorn_symmetric_hollow(c, param, cfg.sinkhorn_tol, cfg.sinkhorn_max_iters)?;
            laplacian_eigvecs(&out.affinity, k)?
        }
        SpiralMethod::Knn => laplacian_eigvecs(&knn_affinity(c, param as usize)?, k)?,
        SpiralMethod::Gaussian => laplacian_eigvecs(&gaussian_kernel(c, param, false)?, k)?,
        SpiralMethod::Epanechnikov => {
            laplacian_eigvecs(&epanechnikov_kernel(c, param.powf(2.0 / 3.0))?, k)?
        }
        SpiralMethod::GaussianL2 => {
            let g = gaussian_kernel(c, param, true)?;
            let out = frobenius_project(c.n(), g.as_slice(), &SolverConfig::default())?;
            laplacian_eigvecs(&out.plan, k)?
        }
    };
    mean_angle(&vecs, reference)
}

pub fn run_spiral(cfg: &SpiralConfig) -> Result<SpiralReport> {
    if cfg.n < cfg.eigvecs + 1 || cfg.d < 3 {
        return Err(Error::invalid(format!(
            "spiral needs n > {} and d >= 3, got n = {}, d = {}",
            cfg.eigvecs, cfg.n, cfg.d
        )));
    }
    if let Some(k) = cfg.k_grid.iter().find(|&&k| k == 0 || k >= cfg.n) {
        return Err(Error::invalid(format!(
            "kNN grid value {k} out of range for n = {}",
            cfg.n
        )));
    }
    let start = Instant::now();
    let clean = spiral(cfg.n)?;
    let noisy = embed_with_noise(&clean, cfg.d, cfg.seed)?;
    let reference_cost = pairwise_cost(&clean.points, false)?;
    let reference = laplacian_eigvecs(
        &knn_affinity(&reference_cost, cfg.reference_k)?,
        cfg.eigvecs,
    )?;
    let (c, _) = normalize_mean(&pairwise_cost(&noisy.points, false)?)?;

    let eps_grid = log_grid(cfg.eps_lo, cfg.eps_hi, cfg.per_decade)?;
    let mut cells: Vec<(SpiralMethod, f64)> = Vec::new();
    for &m in &cfg.methods {
        if m == SpiralMethod::Knn {
            cells.extend(cfg.k_grid.iter().map(|&k| (m, k as f64)));
        } else {
            cells.extend(eps_grid.iter().map(|&e| (m, e)));
        }
    }
    let rows = run_cells(&cells, |_, &(method, parameter)| {
        match cell(method, parameter, &c, cfg, &reference) {
            Ok(angle) => SpiralRow {
                method,
                parameter,
                angle,
                status: "ok".into(),
            },
            Err(e) => SpiralRow {
                method,
                parameter,
                angle: f64::NAN,
                status: e.to_string(),
            },
        }
    })?;

    let summary = cfg
        .methods
        .iter()
        .map(|&method| {
            let mine: Vec<&SpiralRow> = rows.iter().filter(|r| r.method == method).collect();
            let params: Vec<f64> = mine.iter().map(|r| r.parameter).collect();
            let angles: Vec<f64> = mine.iter().map(|r| r.angle).collect();
            let best = mine
                .iter()
                .filter(|r| r.angle.is_finite())
                .min_by(|a, b| a.angle.total_cmp(&b.angle));
            SpiralSummary {
                method,
                min_angle: best.map_or(f64::NAN, |r| r.angle),
                best_parameter: best.map_or(f64::NAN, |r| r.parameter),
                run_decades: longest_run_decades(&params, &angles, 2.0),
            }
        })
        .collect();
    Ok(SpiralReport {
        config: cfg.clone(),
        rows,
        summary,
        runtime_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

impl SpiralReport {
    pub fn summary_for(&self, method: SpiralMethod) -> Option<&SpiralSummary> {
        self.summary.iter().find(|s| s.method == method)
    }

    /// Writes `spiral_angles.csv`, `spiral_summary.csv` and `spiral.json`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let angles = dir.join("spiral_angles.csv");
        let rows: Vec<Vec<Cell>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.method.name().into(),
                    r.method.parameter_name().into(),
                    r.parameter.into(),
                    r.angle.into(),
                    r.status.clone().into(),
                ]
            })
            .collect();
        write_table_csv(
            &angles,
            &[
                "method",
                "parameter_name",
                "parameter",
                "mean_angle",
                "status",
            ],
            &rows,
        )?;
        let summary = dir.join("spiral_summary.csv");
        let rows: Vec<Vec<Cell>> = self
            .summary
            .iter()
            .map(|s| {
                vec![
                    s.method.name().into(),
                    s.min_angle.into(),
                    s.best_parameter.into(),
                    s.run_decades.into(),
                ]
            })
            .collect();
        write_table_csv(
            &summary,
            &[
                "method",
                "min_mean_angle",
                "best_parameter",
                "run_decades_within_2x",
            ],
            &rows,
        )?;

        let cfg = &self.config;
        let mut record = ExperimentRecord::new("spiral", cfg.seed)
            .param("n", cfg.n)
            .param("d", cfg.d)
            .param("eps_lo", cfg.eps_lo)
            .param("eps_hi", cfg.eps_hi)
            .param("per_decade", cfg.per_decade)
            .param("eigvecs", cfg.eigvecs)
            .param("reference_k", cfg.reference_k)
            .param("angle_statistic", "mean principal angle");
        for s in &self.summary {
            if s.min_angle.is_finite() {
                record.metric(&format!("{}_min_angle", s.method.name()), s.min_angle);
                record.metric(&format!("{}_run_decades", s.method.name()), s.run_decades);
            }
        }
        record.runtime_ms = self.runtime_ms;
        let artifacts = vec![angles, summary];
        let json = finish_record(dir, record, &artifacts)?;
        Ok(artifacts.into_iter().chain([json]).collect())
    }
}
