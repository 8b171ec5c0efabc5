//! Growth of the mean optimal potential with `ε` on uniform sphere samples.
//!
//! The potential is compared against `K_{ε,N} ∝ ε^{2/(d+2)}`, which is stated
//! for marginals of mass `1/N`. With unit row sums the same plan is obtained
//! at regularisation `ε/N`, so each grid value is solved at `ε/N`.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::asymptotics::{fit_loglog_slope, LogLogFit};
use crate::config::SolverConfig;
use crate::cost::pairwise_cost;
use crate::datasets::sphere_sample;
use crate::error::{Error, Result};
use crate::io::{write_table_csv, Cell, ExperimentRecord};
use crate::plan::DualPotential;
use crate::qot::solve_dense;

use super::{cell_seed, finish_record, log_grid, run_cells};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SphereConfig {
    pub n: usize,
    pub dims: Vec<usize>,
    pub seed: u64,
    pub eps_lo: f64,
    pub eps_hi: f64,
    pub per_decade: usize,
}

impl Default for SphereConfig {
    fn default() -> Self {
        Self {
            n: 1000,
            dims: vec![1, 2, 3],
            seed: 0,
            eps_lo: 1e2,
            eps_hi: 1e6,
            per_decade: 4,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SphereRow {
    pub epsilon: f64,
    pub solver_epsilon: f64,
    pub mean_potential: f64,
    pub newton_iters: usize,
    pub support_size: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct SphereDimReport {
    pub d: usize,
    pub rows: Vec<SphereRow>,
    /// Fit over the upper half of the grid.
    pub fit: LogLogFit,
    pub expected_slope: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SphereReport {
    pub config: SphereConfig,
    pub dims: Vec<SphereDimReport>,
    pub runtime_ms: f64,
}

fn run_dim(cfg: &SphereConfig, d: usize, seed: u64, grid: &[f64]) -> Result<SphereDimReport> {
    let cloud = sphere_sample(cfg.n, d, seed)?;
    let c = pairwise_cost(&cloud.points, false)?;
    let mut rows = Vec::with_capacity(grid.len());
    let mut warm: Option<DualPotential> = None;
    for &eps in grid {
        let solver_eps = eps / cfg.n as f64;
        let out = solve_dense(&c, &SolverConfig::with_epsilon(solver_eps), warm.as_ref())?;
        rows.push(SphereRow {
            epsilon: eps,
            solver_epsilon: solver_eps,
            mean_potential: out.potential.mean(),
            newton_iters: out.diagnostics.newton_iters,
            support_size: out.diagnostics.support_size,
        });
        warm = Some(out.potential);
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.epsilon).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.mean_potential).collect();
    let fit = fit_loglog_slope(&xs, &ys, grid.len() / 2..grid.len())?;
    Ok(SphereDimReport {
        d,
        rows,
        fit,
        expected_slope: 2.0 / (d as f64 + 2.0),
    })
}

pub fn run_sphere_scaling(cfg: &SphereConfig) -> Result<SphereReport> {
    if cfg.n < 3 || cfg.dims.contains(&0) {
        return Err(Error::invalid(
            "sphere scaling needs n >= 3 and positive dimensions",
        ));
    }
    let grid = log_grid(cfg.eps_lo, cfg.eps_hi, cfg.per_decade)?;
    if grid.len() < 4 {
        return Err(Error::invalid("epsilon grid needs at least four points"));
    }
    let start = Instant::now();
    let dims = run_cells(&cfg.dims, |i, &d| {
        run_dim(cfg, d, cell_seed(cfg.seed, i), &grid)
    })?
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(SphereReport {
        config: cfg.clone(),
        dims,
        runtime_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

impl SphereReport {
    /// Writes `sphere_potential.csv`, `sphere_slopes.csv` and
    /// `sphere-scaling.json`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let table = dir.join("sphere_potential.csv");
        let rows: Vec<Vec<Cell>> = self
            .dims
            .iter()
            .flat_map(|dr| {
                dr.rows.iter().map(move |r| {
                    vec![
                        dr.d.into(),
                        r.epsilon.into(),
                        r.solver_epsilon.into(),
                        r.mean_potential.into(),
                        r.newton_iters.into(),
                        r.support_size.into(),
                    ]
                })
            })
            .collect();
        write_table_csv(
            &table,
            &[
                "d",
                "epsilon",
                "solver_epsilon",
                "mean_potential",
                "newton_iters",
                "support_size",
            ],
            &rows,
        )?;
        let slopes = dir.join("sphere_slopes.csv");
        let rows: Vec<Vec<Cell>> = self
            .dims
            .iter()
            .map(|dr| {
                vec![
                    dr.d.into(),
                    dr.fit.slope.into(),
                    dr.expected_slope.into(),
                    dr.fit.intercept.into(),
                    dr.fit.r2.into(),
                ]
            })
            .collect();
        write_table_csv(
            &slopes,
            &["d", "slope", "expected_slope", "intercept", "r2"],
            &rows,
        )?;

        let cfg = &self.config;
        let mut record = ExperimentRecord::new("sphere-scaling", cfg.seed)
            .param("n", cfg.n)
            .param("dims", cfg.dims.clone())
            .param("eps_lo", cfg.eps_lo)
            .param("eps_hi", cfg.eps_hi)
            .param("per_decade", cfg.per_decade)
            .param("fit_window", "upper half of the grid");
        for dr in &self.dims {
            record.metric(&format!("slope_d{}", dr.d), dr.fit.slope);
            record.metric(&format!("r2_d{}", dr.d), dr.fit.r2);
        }
        record.runtime_ms = self.runtime_ms;
        let artifacts = vec![table, slopes];
        let json = finish_record(dir, record, &artifacts)?;
        Ok(artifacts.into_iter().chain([json]).collect())
    }
}
