//! Symmetric semi-smooth Newton iteration on the dual of the hollow
//! quadratically regularised transport problem.
//!
//! The dual objective is
//!
//! ```text
//! Φ(u) = −Σ_i u_i + (1/4ε) Σ_{i≠j} [u_i + u_j − C_ij]_+²
//! ```
//!
//! whose gradient is `π1 − 1` with `π_ij = [u_i + u_j − C_ij]_+ / ε`, and
//! whose generalised Hessian is `(σ + diag(σ1)) / ε` where `σ` marks the
//! pairs with `u_i + u_j − C_ij ≥ 0`. The same iteration serves the dense
//! problem (every off-diagonal pair is a candidate) and the support-restricted
//! problem of the active-set method (only pairs of a fixed pattern are
//! candidates, i.e. `C_ij = +∞` elsewhere).

use crate::config::SolverConfig;
use crate::plan::{SparsePlan, SupportMask};

use super::cg;

/// Source of candidate pairs `(i, j, C_ij)` with `i < j`.
pub(crate) trait PairCosts {
    fn n(&self) -> usize;
    fn for_each_pair<F: FnMut(usize, usize, f64)>(&self, f: F);
}

/// Every off-diagonal pair of a row-major matrix.
pub(crate) struct DenseCosts<'a> {
    pub n: usize,
    pub entries: &'a [f64],
}

impl PairCosts for DenseCosts<'_> {
    fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn for_each_pair<F: FnMut(usize, usize, f64)>(&self, mut f: F) {
        let n = self.n;
        for i in 0..n {
            let row = &self.entries[i * n..(i + 1) * n];
            for (j, &c) in row.iter().enumerate().skip(i + 1) {
                f(i, j, c);
            }
        }
    }
}

/// A fixed list of candidate pairs.
pub(crate) struct EdgeCosts {
    pub n: usize,
    pub edges: Vec<(usize, usize, f64)>,
}

impl PairCosts for EdgeCosts {
    fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn for_each_pair<F: FnMut(usize, usize, f64)>(&self, mut f: F) {
        for &(i, j, c) in &self.edges {
            f(i, j, c);
        }
    }
}

pub(crate) fn dual_objective<P: PairCosts>(costs: &P, u: &[f64], epsilon: f64) -> f64 {
    let mut quad = 0.0;
    costs.for_each_pair(|i, j, c| {
        let p = u[i] + u[j] - c;
        if p > 0.0 {
            quad += p * p;
        }
    });
    // each unordered pair appears twice in the full sum
    -u.iter().sum::<f64>() + quad / (2.0 * epsilon)
}

/// Objective value and row sums of the induced plan.
fn evaluate<P: PairCosts>(costs: &P, u: &[f64], epsilon: f64) -> (f64, Vec<f64>) {
    let mut quad = 0.0;
    let mut rows = vec![0.0; costs.n()];
    costs.for_each_pair(|i, j, c| {
        let p = u[i] + u[j] - c;
        if p > 0.0 {
            quad += p * p;
            rows[i] += p;
            rows[j] += p;
        }
    });
    for r in &mut rows {
        *r /= epsilon;
    }
    (-u.iter().sum::<f64>() + quad / (2.0 * epsilon), rows)
}

fn active_pattern<P: PairCosts>(costs: &P, u: &[f64]) -> SupportMask {
    let mut edges = Vec::new();
    costs.for_each_pair(|i, j, c| {
        if u[i] + u[j] - c >= 0.0 {
            edges.push((i, j));
        }
    });
    SupportMask::from_edges(costs.n(), edges)
}

pub(crate) fn plan_from_pairs<P: PairCosts>(costs: &P, u: &[f64], epsilon: f64) -> SparsePlan {
    let mut triplets = Vec::new();
    costs.for_each_pair(|i, j, c| {
        let p = u[i] + u[j] - c;
        if p > 0.0 {
            triplets.push((i, j, p / epsilon));
        }
    });
    triplets.sort_by_key(|t| (t.0, t.1));
    SparsePlan::from_sorted_unchecked(costs.n(), triplets)
}

fn max_violation(rows: &[f64]) -> f64 {
    rows.iter().fold(0.0, |m, r| m.max((r - 1.0).abs()))
}

fn l2_violation(rows: &[f64]) -> f64 {
    rows.iter()
        .map(|r| (r - 1.0) * (r - 1.0))
        .sum::<f64>()
        .sqrt()
}

#[derive(Clone, Debug, Default)]
pub(crate) struct NewtonTrace {
    pub iterations: usize,
    pub backtracks: Vec<usize>,
    pub objective: Vec<f64>,
    pub max_violation: Vec<f64>,
    pub l2_violation: Vec<f64>,
    pub cg_iterations: usize,
    pub cg_failures: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum StopReason {
    Converged,
    MaxIterations,
    LineSearch,
    Unbounded,
}

pub(crate) struct NewtonResult {
    pub u: Vec<f64>,
    pub trace: NewtonTrace,
    pub stop: StopReason,
}

/// Runs the Newton iteration from `u`. `unbounded_cap` aborts once
/// `‖u‖_∞` exceeds it, which is how an infeasible restricted support shows
/// up (the dual is unbounded below).
pub(crate) fn run<P: PairCosts>(
    costs: &P,
    cfg: &SolverConfig,
    mut u: Vec<f64>,
    unbounded_cap: Option<f64>,
) -> NewtonResult {
    let n = costs.n();
    let eps = cfg.epsilon;
    let cg_cap = cfg.cg_cap(n);
    let mut trace = NewtonTrace::default();
    let (mut phi, mut rows) = evaluate(costs, &u, eps);
    let mut viol = max_violation(&rows);
    trace.objective.push(phi);
    trace.max_violation.push(viol);
    trace.l2_violation.push(l2_violation(&rows));

    let stop = loop {
        if viol <= cfg.newton_tol {
            break StopReason::Converged;
        }
        if trace.iterations >= cfg.max_newton_iters {
            break StopReason::MaxIterations;
        }
        let sigma = active_pattern(costs, &u);
        let rhs: Vec<f64> = rows.iter().map(|r| -eps * (r - 1.0)).collect();
        let sol = cg::solve(&sigma, &rhs, cfg.delta, cfg.cg_tol, cg_cap);
        trace.cg_iterations += sol.iterations;
        if !sol.converged {
            trace.cg_failures += 1;
        }
        let mut step = sol.solution;
        // directional derivative of Φ along the step
        let mut slope: f64 = step.iter().zip(&rows).map(|(s, r)| s * (r - 1.0)).sum();
        if !(slope < 0.0) {
            step = rhs.clone();
            slope = step.iter().zip(&rows).map(|(s, r)| s * (r - 1.0)).sum();
        }

        let mut t = 1.0;
        let mut backtracks = 0;
        let mut trial = vec![0.0; n];
        let accepted = loop {
            for k in 0..n {
                trial[k] = u[k] + t * step[k];
            }
            let (phi_t, rows_t) = evaluate(costs, &trial, eps);
            let armijo = phi_t < phi + t * cfg.theta * slope;
            // near the optimum the decrease drops below the rounding floor of Φ
            let flat =
                (phi_t - phi).abs() <= 1e-12 * (1.0 + phi.abs()) && max_violation(&rows_t) < viol;
            if armijo || flat {
                break Some((phi_t, rows_t));
            }
            if backtracks >= cfg.max_backtracks {
                break None;
            }
            t *= cfg.kappa;
            backtracks += 1;
        };
        trace.backtracks.push(backtracks);
        let Some((phi_t, rows_t)) = accepted else {
            break StopReason::LineSearch;
        };
        std::mem::swap(&mut u, &mut trial);
        phi = phi_t;
        rows = rows_t;
        viol = max_violation(&rows);
        trace.iterations += 1;
        trace.objective.push(phi);
        trace.max_violation.push(viol);
        trace.l2_violation.push(l2_violation(&rows));
        if let Some(cap) = unbounded_cap {
            if u.iter().any(|v| v.abs() > cap) {
                break StopReason::Unbounded;
            }
        }
    };
    NewtonResult { u, trace, stop }
}
