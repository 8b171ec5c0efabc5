use crate::baselines::sinkhorn_symmetric_hollow;
use crate::config::SolverConfig;
use crate::cost::CostMatrix;
use crate::error::{Error, Result};
use crate::qot::solve_dense;

use super::Affinity;

/// `exp(−Σ p log p)`, with `0 log 0 = 0`.
pub fn perplexity(p: &[f64]) -> Result<f64> {
    if let Some(i) = p.iter().position(|x| *x < 0.0 || !x.is_finite()) {
        return Err(Error::invalid(format!("probability entry {i} is {}", p[i])));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-8 {
        return Err(Error::invalid(format!(
            "probabilities sum to {total}, not 1"
        )));
    }
    Ok(entropy_exp(p))
}

fn entropy_exp(p: &[f64]) -> f64 {
    let h: f64 = p.iter().filter(|x| **x > 0.0).map(|x| -x * x.ln()).sum();
    h.exp()
}

/// Mean over rows of the perplexity of the row-normalised affinity.
pub fn mean_perplexity<A: Affinity>(w: &A) -> Result<f64> {
    let rows = w.row_values();
    let n = rows.len();
    let mut acc = 0.0;
    for (row, values) in rows.iter().enumerate() {
        let s: f64 = values.iter().sum();
        if !(s > 0.0) {
            return Err(Error::ZeroRow { row });
        }
        let p: Vec<f64> = values.iter().map(|v| v / s).collect();
        acc += entropy_exp(&p);
    }
    Ok(acc / n as f64)
}

/// Which regularised transport plan the perplexity is measured on.
#[derive(Clone, Debug)]
pub enum PerplexityModel {
    /// Symmetric hollow Sinkhorn with the given tolerance and iteration cap.
    Entropic { tol: f64, max_iters: usize },
    /// Quadratic regularisation; `epsilon` in the config is overwritten.
    Quadratic(SolverConfig),
}

impl Default for PerplexityModel {
    fn default() -> Self {
        PerplexityModel::Entropic {
            tol: 1e-9,
            max_iters: 100_000,
        }
    }
}

impl PerplexityModel {
    pub fn mean_perplexity(&self, c: &CostMatrix, epsilon: f64) -> Result<f64> {
        match self {
            PerplexityModel::Entropic { tol, max_iters } => {
                let out = sinkhorn_symmetric_hollow(c, epsilon, *tol, *max_iters)?;
                mean_perplexity(&out.affinity)
            }
            PerplexityModel::Quadratic(cfg) => {
                let cfg = SolverConfig {
                    epsilon,
                    ..cfg.clone()
                };
                let out = solve_dense(c, &cfg, None)?;
                mean_perplexity(&out.plan)
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct TunedEpsilon {
    pub epsilon: f64,
    pub perplexity: f64,
    /// Every `(ε, perplexity)` evaluated, in evaluation order.
    pub trace: Vec<(f64, f64)>,
}

/// Bisection on `log ε` inside `bracket` until the mean perplexity is within
/// `tol` of `target`. Perplexity is assumed to increase with `ε`; any
/// evaluation contradicting that aborts with the trace so far. If the bracket
/// collapses first, the closest evaluation is returned.
pub fn tune_epsilon_to_perplexity(
    c: &CostMatrix,
    target: f64,
    model: &PerplexityModel,
    tol: f64,
    bracket: (f64, f64),
) -> Result<TunedEpsilon> {
    let (mut lo, mut hi) = bracket;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::invalid(format!("bad bracket [{lo}, {hi}]")));
    }
    if !(tol > 0.0) || !target.is_finite() {
        return Err(Error::invalid(
            "tolerance must be positive and target finite",
        ));
    }
    let mut trace: Vec<(f64, f64)> = Vec::new();
    let eval = |eps: f64, trace: &mut Vec<(f64, f64)>| -> Result<f64> {
        let p = model.mean_perplexity(c, eps)?;
        trace.push((eps, p));
        let mut sorted = trace.clone();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let slack = 1e-9 * (1.0 + p.abs());
        if sorted.windows(2).any(|w| w[1].1 < w[0].1 - slack) {
            return Err(Error::NonMonotone(sorted));
        }
        Ok(p)
    };
    let at_lo = eval(lo, &mut trace)?;
    let at_hi = eval(hi, &mut trace)?;
    if !(at_lo - tol <= target && target <= at_hi + tol) {
        return Err(Error::BracketMismatch {
            lo,
            hi,
            target,
            at_lo,
            at_hi,
        });
    }
    for &(eps, p) in &trace {
        if (p - target).abs() <= tol {
            return Ok(TunedEpsilon {
                epsilon: eps,
                perplexity: p,
                trace,
            });
        }
    }
    for _ in 0..200 {
        let mid = (lo.ln() + 0.5 * (hi.ln() - lo.ln())).exp();
        if !(mid > lo && mid < hi) {
            break;
        }
        let p = eval(mid, &mut trace)?;
        if (p - target).abs() <= tol {
            return Ok(TunedEpsilon {
                epsilon: mid,
                perplexity: p,
                trace,
            });
        }
        if p < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let &(epsilon, perplexity) = trace
        .iter()
        .min_by(|a, b| (a.1 - target).abs().total_cmp(&(b.1 - target).abs()))
        .expect("trace holds the bracket ends");
    Ok(TunedEpsilon {
        epsilon,
        perplexity,
        trace,
    })
}
