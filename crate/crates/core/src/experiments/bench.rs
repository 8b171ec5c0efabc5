//! Solver benchmarks: Newton against alternating projections on random
//! symmetric matrices, and the active-set method against the dense solver on
//! Gaussian clouds.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::baselines::alternating_projection_bistochastic;
use crate::config::SolverConfig;
use crate::cost::{normalize_mean, pairwise_cost};
use crate::error::{Error, Result};
use crate::io::{write_table_csv, Cell, ExperimentRecord};
use crate::qot::{
    add_random_permutations, frobenius_project, knn_support, solve_active_set, solve_dense,
};

use super::{cell_seed, finish_record};

/// `(G + Gᵀ)/2` for an `n × n` matrix `G` of standard normals.
pub fn symmetrised_gaussian(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g: Vec<f64> = (0..n * n)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            m[i * n + j] = 0.5 * (g[i * n + j] + g[j * n + i]);
        }
    }
    m
}

fn first_below(history: &[f64], tol: f64) -> Option<usize> {
    history.iter().position(|v| *v <= tol)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NewtonBenchConfig {
    pub ns: Vec<usize>,
    pub seed: u64,
    /// Euclidean row violation Newton has to reach.
    pub newton_target: f64,
    /// Euclidean row violation alternating projections have to reach.
    pub alternating_target: f64,
    pub alternating_max_iters: usize,
}

impl Default for NewtonBenchConfig {
    fn default() -> Self {
        Self {
            ns: vec![250, 1000],
            seed: 0,
            newton_target: 1e-8,
            alternating_target: 1e-6,
            alternating_max_iters: 100_000,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct NewtonBenchRow {
    pub n: usize,
    /// Newton iterations until `‖π1 − 1‖₂ ≤ newton_target`.
    pub newton_iters: Option<usize>,
    pub newton_ms: f64,
    /// Iterations until `‖A1 − 1‖₂ ≤ alternating_target`; `None` if the cap
    /// was hit first.
    pub alternating_iters: Option<usize>,
    pub alternating_ms: f64,
    pub newton_history: Vec<f64>,
    pub alternating_history: Vec<f64>,
}

impl NewtonBenchRow {
    /// Alternating iterations over Newton iterations; when alternating
    /// projections hit their cap this is a lower bound computed with the cap.
    pub fn iteration_ratio(&self, cap: usize) -> f64 {
        let ap = self.alternating_iters.unwrap_or(cap) as f64;
        match self.newton_iters {
            Some(k) => ap / k.max(1) as f64,
            None => f64::NAN,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct NewtonBenchReport {
    pub config: NewtonBenchConfig,
    pub rows: Vec<NewtonBenchRow>,
    pub runtime_ms: f64,
}

pub fn run_bench_newton(cfg: &NewtonBenchConfig) -> Result<NewtonBenchReport> {
    if cfg.ns.iter().any(|&n| n < 2) || cfg.alternating_max_iters == 0 {
        return Err(Error::invalid(
            "bench-newton needs N >= 2 and a positive iteration cap",
        ));
    }
    let start = Instant::now();
    let mut rows = Vec::new();
    // sequential on purpose: the rows carry wall times
    for (i, &n) in cfg.ns.iter().enumerate() {
        let m = symmetrised_gaussian(n, cell_seed(cfg.seed, i));
        let solver = SolverConfig {
            // the stop rule is on the max norm; this keeps iterating until
            // the Euclidean target is met as well
            newton_tol: cfg.newton_target / (n as f64).sqrt(),
            ..SolverConfig::default()
        };
        let t = Instant::now();
        let (history, newton_ms) = match frobenius_project(n, &m, &solver) {
            Ok(out) => (
                out.diagnostics.violation_history_l2,
                t.elapsed().as_secs_f64() * 1e3,
            ),
            Err(Error::NotConverged(f)) => (
                f.diagnostics.violation_history_l2,
                t.elapsed().as_secs_f64() * 1e3,
            ),
            Err(e) => return Err(e),
        };
        let t = Instant::now();
        let ap = alternating_projection_bistochastic(
            n,
            &m,
            cfg.alternating_target,
            cfg.alternating_max_iters,
        )?;
        let alternating_ms = t.elapsed().as_secs_f64() * 1e3;
        rows.push(NewtonBenchRow {
            n,
            newton_iters: first_below(&history, cfg.newton_target),
            newton_ms,
            alternating_iters: first_below(&ap.history, cfg.alternating_target).map(|k| k + 1),
            alternating_ms,
            newton_history: history,
            alternating_history: ap.history,
        });
    }
    Ok(NewtonBenchReport {
        config: cfg.clone(),
        rows,
        runtime_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// Every iteration up to 100, then roughly 100 per decade.
fn keep_iteration(i: usize) -> bool {
    if i <= 100 {
        return true;
    }
    let step = 10usize.pow((i as f64).log10().floor() as u32 - 1);
    i.is_multiple_of(step)
}

fn opt(v: Option<usize>) -> Cell {
    match v {
        Some(k) => k.into(),
        None => "".into(),
    }
}

impl NewtonBenchReport {
    /// Writes `bench_newton_summary.csv`, `bench_newton_trace.csv` and
    /// `bench-newton.json`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let cap = self.config.alternating_max_iters;
        let summary = dir.join("bench_newton_summary.csv");
        let rows: Vec<Vec<Cell>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.n.into(),
                    opt(r.newton_iters),
                    r.newton_ms.into(),
                    opt(r.alternating_iters),
                    r.alternating_ms.into(),
                    r.iteration_ratio(cap).into(),
                ]
            })
            .collect();
        write_table_csv(
            &summary,
            &[
                "N",
                "newton_iters",
                "newton_ms",
                "alternating_iters",
                "alternating_ms",
                "iteration_ratio",
            ],
            &rows,
        )?;
        let trace = dir.join("bench_newton_trace.csv");
        let mut rows: Vec<Vec<Cell>> = Vec::new();
        for r in &self.rows {
            for (k, v) in r.newton_history.iter().enumerate() {
                rows.push(vec![r.n.into(), "newton".into(), k.into(), (*v).into()]);
            }
            let last = r.alternating_history.len();
            for (k, v) in r.alternating_history.iter().enumerate() {
                let iter = k + 1;
                if keep_iteration(iter) || iter == last {
                    rows.push(vec![
                        r.n.into(),
                        "alternating".into(),
                        iter.into(),
                        (*v).into(),
                    ]);
                }
            }
        }
        write_table_csv(&trace, &["N", "method", "iteration", "violation_l2"], &rows)?;

        let cfg = &self.config;
        let mut record = ExperimentRecord::new("bench-newton", cfg.seed)
            .param("ns", cfg.ns.clone())
            .param("newton_target", cfg.newton_target)
            .param("alternating_target", cfg.alternating_target)
            .param("alternating_max_iters", cap);
        for r in &self.rows {
            if let Some(k) = r.newton_iters {
                record.metric(&format!("newton_iters_n{}", r.n), k as f64);
            }
            record.metric(
                &format!("alternating_iters_n{}", r.n),
                r.alternating_iters.unwrap_or(cap) as f64,
            );
            let ratio = r.iteration_ratio(cap);
            if ratio.is_finite() {
                record.metric(&format!("iteration_ratio_n{}", r.n), ratio);
            }
        }
        record.runtime_ms = self.runtime_ms;
        let artifacts = vec![summary, trace];
        let json = finish_record(dir, record, &artifacts)?;
        Ok(artifacts.into_iter().chain([json]).collect())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ActiveSetBenchConfig {
    pub ns: Vec<usize>,
    pub d: usize,
    pub repeats: usize,
    /// `ε` as a multiple of the mean cost.
    pub eps_mean_scale: f64,
    pub knn_k: usize,
    pub permutations: usize,
    pub seed: u64,
    /// Also run the dense solver for timing and agreement.
    pub compare_dense: bool,
}

impl Default for ActiveSetBenchConfig {
    fn default() -> Self {
        Self {
            ns: vec![500, 1000, 2000],
            d: 50,
            repeats: 3,
            eps_mean_scale: 1.0,
            knn_k: 50,
            permutations: 0,
            seed: 0,
            compare_dense: true,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ActiveSetRow {
    pub n: usize,
    pub repeat: usize,
    /// Includes building the initial support.
    pub active_ms: f64,
    pub dense_ms: Option<f64>,
    pub outer_iters: usize,
    pub newton_iters: usize,
    pub initial_support: usize,
    pub final_support: usize,
    /// Frobenius distance between the two plans.
    pub plan_distance: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ActiveSetBenchReport {
    pub config: ActiveSetBenchConfig,
    pub rows: Vec<ActiveSetRow>,
    pub runtime_ms: f64,
}

/// Standard Gaussian cloud in `d` dimensions.
pub fn gaussian_cloud(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| (0..d).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect()
}

pub fn run_bench_activeset(cfg: &ActiveSetBenchConfig) -> Result<ActiveSetBenchReport> {
    if cfg.ns.iter().any(|&n| n <= cfg.knn_k) || cfg.d == 0 || cfg.repeats == 0 || cfg.knn_k == 0 {
        return Err(Error::invalid(
            "bench-activeset needs N > k, d >= 1, k >= 1 and repeats >= 1",
        ));
    }
    let start = Instant::now();
    let mut rows = Vec::new();
    let mut cell = 0;
    for &n in &cfg.ns {
        for repeat in 0..cfg.repeats {
            let seed = cell_seed(cfg.seed, cell);
            cell += 1;
            let (c, _) = normalize_mean(&pairwise_cost(&gaussian_cloud(n, cfg.d, seed), false)?)?;
            let solver = SolverConfig::with_epsilon(cfg.eps_mean_scale);

            let t = Instant::now();
            let mut s0 = knn_support(&c, cfg.knn_k)?;
            if cfg.permutations > 0 {
                s0 = add_random_permutations(&s0, cfg.permutations, seed);
            }
            let active = solve_active_set(&c, &solver, &s0)?;
            let active_ms = t.elapsed().as_secs_f64() * 1e3;

            let (dense_ms, plan_distance) = if cfg.compare_dense {
                let t = Instant::now();
                let dense = solve_dense(&c, &solver, None)?;
                let ms = t.elapsed().as_secs_f64() * 1e3;
                (Some(ms), Some(dense.plan.frobenius_distance(&active.plan)))
            } else {
                (None, None)
            };
            rows.push(ActiveSetRow {
                n,
                repeat,
                active_ms,
                dense_ms,
                outer_iters: active.diagnostics.outer_iters,
                newton_iters: active.diagnostics.newton_iters,
                initial_support: s0.edge_count(),
                final_support: active.diagnostics.support_size,
                plan_distance,
            });
        }
    }
    Ok(ActiveSetBenchReport {
        config: cfg.clone(),
        rows,
        runtime_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

impl ActiveSetBenchReport {
    /// Mean active-set and dense wall times at size `n`.
    pub fn mean_times(&self, n: usize) -> (f64, Option<f64>) {
        let mine: Vec<&ActiveSetRow> = self.rows.iter().filter(|r| r.n == n).collect();
        let k = mine.len() as f64;
        let active = mine.iter().map(|r| r.active_ms).sum::<f64>() / k;
        let dense = mine
            .iter()
            .map(|r| r.dense_ms)
            .sum::<Option<f64>>()
            .map(|s| s / k);
        (active, dense)
    }

    /// Writes `bench_activeset.csv` and `bench-activeset.json`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let table = dir.join("bench_activeset.csv");
        let f = |v: Option<f64>| -> Cell { v.map_or_else(|| "".into(), Cell::from) };
        let rows: Vec<Vec<Cell>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.n.into(),
                    r.repeat.into(),
                    r.active_ms.into(),
                    f(r.dense_ms),
                    r.outer_iters.into(),
                    r.newton_iters.into(),
                    r.initial_support.into(),
                    r.final_support.into(),
                    f(r.plan_distance),
                ]
            })
            .collect();
        write_table_csv(
            &table,
            &[
                "N",
                "repeat",
                "active_ms",
                "dense_ms",
                "outer_iters",
                "newton_iters",
                "initial_support",
                "final_support",
                "plan_distance",
            ],
            &rows,
        )?;
        let cfg = &self.config;
        let mut record = ExperimentRecord::new("bench-activeset", cfg.seed)
            .param("ns", cfg.ns.clone())
            .param("d", cfg.d)
            .param("repeats", cfg.repeats)
            .param("eps_mean_scale", cfg.eps_mean_scale)
            .param("knn_k", cfg.knn_k)
            .param("permutations", cfg.permutations);
        for &n in &cfg.ns {
            let (active, dense) = self.mean_times(n);
            record.metric(&format!("active_ms_n{n}"), active);
            if let Some(d) = dense {
                record.metric(&format!("dense_ms_n{n}"), d);
            }
        }
        record.runtime_ms = self.runtime_ms;
        let artifacts = vec![table];
        let json = finish_record(dir, record, &artifacts)?;
        Ok(artifacts.into_iter().chain([json]).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_matrix_is_symmetric() {
        let m = symmetrised_gaussian(7, 3);
        for i in 0..7 {
            for j in 0..7 {
                assert_eq!(m[i * 7 + j], m[j * 7 + i]);
            }
        }
        assert_eq!(m, symmetrised_gaussian(7, 3));
    }

    #[test]
    fn trace_thinning() {
        assert!(keep_iteration(57));
        assert!(keep_iteration(150));
        assert!(!keep_iteration(151));
        assert!(keep_iteration(12_000));
        assert!(!keep_iteration(12_300));
        assert_eq!((1_000..10_000).filter(|&i| keep_iteration(i)).count(), 90);
    }
}
