//! Hollow quadratically regularised optimal transport.
//!
//! Given a cost matrix `C` and a regularisation `ε`, the plan solves
//!
//! ```text
//! min ⟨A, C⟩ + (ε/2)‖A‖_F²   over symmetric hollow A ≥ 0 with A1 = 1
//! ```
//!
//! which is the Frobenius projection of `−C/ε` onto the hollow bistochastic
//! matrices. The solution is recovered from a single dual potential `u` as
//! `π_ij = [u_i + u_j − C_ij]_+ / ε` and is typically very sparse.
//!
//! [`solve_dense`] runs the semi-smooth Newton method over all pairs;
//! [`solve_active_set`] runs it on a growing support and is much cheaper
//! when the plan is sparse.

mod active_set;
mod cg;
mod newton;
mod support;

use serde::Serialize;

use crate::config::SolverConfig;
use crate::cost::CostMatrix;
use crate::error::{Error, Result};
use crate::plan::{DualPotential, SparsePlan};

pub use active_set::solve_active_set;
pub use cg::{newton_system_solve, CgSolution};
pub use support::{add_random_permutations, knn_support, supports_feasible_plan};

use newton::{DenseCosts, NewtonResult, NewtonTrace, StopReason};

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SolveDiagnostics {
    pub newton_iters: usize,
    /// `max_i |Σ_j π_ij − 1|` of the returned plan.
    pub final_row_violation: f64,
    /// `‖π1 − 1‖₂` of the returned plan.
    pub final_row_violation_l2: f64,
    pub dual_objective: f64,
    pub line_search_backtracks: Vec<usize>,
    /// Stored (upper-triangle) nonzeros of the plan.
    pub support_size: usize,
    /// Active-set outer iterations; zero for the dense solver.
    pub outer_iters: usize,
    pub cg_iterations: usize,
    /// Inner solves that hit their iteration cap.
    pub cg_failures: usize,
    /// Row-sum violations (max norm) after each accepted step, starting with
    /// the initial point.
    pub violation_history: Vec<f64>,
    /// Same as `violation_history`, in the Euclidean norm.
    pub violation_history_l2: Vec<f64>,
    pub objective_history: Vec<f64>,
}

impl SolveDiagnostics {
    fn absorb(&mut self, trace: NewtonTrace) {
        self.newton_iters += trace.iterations;
        self.line_search_backtracks.extend(trace.backtracks);
        self.cg_iterations += trace.cg_iterations;
        self.cg_failures += trace.cg_failures;
        self.violation_history.extend(trace.max_violation);
        self.violation_history_l2.extend(trace.l2_violation);
        self.objective_history.extend(trace.objective);
    }
}

#[derive(Clone, Debug)]
pub struct SolveOutput {
    pub potential: DualPotential,
    pub plan: SparsePlan,
    pub diagnostics: SolveDiagnostics,
}

/// Best iterate of a solve that stopped short of the tolerance.
#[derive(Clone, Debug)]
pub struct SolveFailure {
    pub reason: String,
    pub potential: DualPotential,
    pub plan: SparsePlan,
    pub diagnostics: SolveDiagnostics,
}

/// `−Σ_i u_i + (1/4ε) Σ_{i≠j} [u_i + u_j − C_ij]_+²`
pub fn dual_objective(u: &DualPotential, c: &CostMatrix, epsilon: f64) -> Result<f64> {
    check_dims(u, c)?;
    check_epsilon(epsilon)?;
    Ok(newton::dual_objective(&dense(c), u.values(), epsilon))
}

/// `π_ij = [u_i + u_j − C_ij]_+ / ε` off the diagonal. The feasibility flag
/// is left unset; see [`SparsePlan::check_feasible`].
pub fn plan_from_potential(u: &DualPotential, c: &CostMatrix, epsilon: f64) -> Result<SparsePlan> {
    check_dims(u, c)?;
    check_epsilon(epsilon)?;
    Ok(newton::plan_from_pairs(&dense(c), u.values(), epsilon))
}

/// Dense semi-smooth Newton solve, started from `u0` or from the all-ones
/// potential.
pub fn solve_dense(
    c: &CostMatrix,
    cfg: &SolverConfig,
    u0: Option<&DualPotential>,
) -> Result<SolveOutput> {
    solve_dense_entries(c.n(), c.as_slice(), cfg, u0)
}

/// Frobenius projection of a symmetric matrix onto the hollow bistochastic
/// matrices: `argmin ‖A − M‖_F` over symmetric hollow `A ≥ 0` with `A1 = 1`.
///
/// This is the transport problem with cost `−M` and `ε = 1`; the other
/// fields of `cfg` are honoured. The diagonal of `M` is ignored.
pub fn frobenius_project(n: usize, m: &[f64], cfg: &SolverConfig) -> Result<SolveOutput> {
    if m.len() != n * n {
        return Err(Error::DimensionMismatch {
            expected: n * n,
            found: m.len(),
        });
    }
    let scale = m.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    for i in 0..n {
        for j in (i + 1)..n {
            if (m[i * n + j] - m[j * n + i]).abs() > 1e-12 * scale {
                return Err(Error::invalid(format!(
                    "matrix not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    let neg: Vec<f64> = m.iter().map(|v| -v).collect();
    let cfg = SolverConfig {
        epsilon: 1.0,
        ..cfg.clone()
    };
    solve_dense_entries(n, &neg, &cfg, None)
}

fn solve_dense_entries(
    n: usize,
    entries: &[f64],
    cfg: &SolverConfig,
    u0: Option<&DualPotential>,
) -> Result<SolveOutput> {
    cfg.validate()?;
    if n < 2 {
        return Err(Error::TooFewPoints {
            required: 2,
            found: n,
        });
    }
    if entries.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("cost matrix"));
    }
    let u = start(n, u0)?;
    let costs = DenseCosts { n, entries };
    let result = newton::run(&costs, cfg, u, None);
    finish(&costs, cfg, result, SolveDiagnostics::default())
}

fn start(n: usize, u0: Option<&DualPotential>) -> Result<Vec<f64>> {
    match u0 {
        Some(u) if u.len() != n => Err(Error::DimensionMismatch {
            expected: n,
            found: u.len(),
        }),
        Some(u) => Ok(u.values().to_vec()),
        None => Ok(vec![1.0; n]),
    }
}

fn finish<P: newton::PairCosts>(
    costs: &P,
    cfg: &SolverConfig,
    result: NewtonResult,
    mut diagnostics: SolveDiagnostics,
) -> Result<SolveOutput> {
    let NewtonResult { u, trace, stop } = result;
    diagnostics.absorb(trace);
    let mut plan = newton::plan_from_pairs(costs, &u, cfg.epsilon);
    plan.check_feasible(cfg.newton_tol);
    diagnostics.final_row_violation = plan.max_row_violation();
    diagnostics.final_row_violation_l2 = plan.row_violation_l2();
    diagnostics.dual_objective = newton::dual_objective(costs, &u, cfg.epsilon);
    diagnostics.support_size = plan.nnz();
    let potential = DualPotential::new(u)?;
    let reason = match stop {
        StopReason::Converged => {
            return Ok(SolveOutput {
                potential,
                plan,
                diagnostics,
            })
        }
        StopReason::MaxIterations => format!(
            "reached {} newton iterations with row violation {:e}",
            cfg.max_newton_iters, diagnostics.final_row_violation
        ),
        StopReason::LineSearch => format!(
            "line search failed after {} backtracks at row violation {:e}",
            cfg.max_backtracks, diagnostics.final_row_violation
        ),
        StopReason::Unbounded => "dual potential diverged".to_string(),
    };
    Err(Error::NotConverged(Box::new(SolveFailure {
        reason,
        potential,
        plan,
        diagnostics,
    })))
}

fn dense(c: &CostMatrix) -> DenseCosts<'_> {
    DenseCosts {
        n: c.n(),
        entries: c.as_slice(),
    }
}

fn check_dims(u: &DualPotential, c: &CostMatrix) -> Result<()> {
    if u.len() != c.n() {
        return Err(Error::DimensionMismatch {
            expected: c.n(),
            found: u.len(),
        });
    }
    Ok(())
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "epsilon must be positive, got {epsilon}"
        )))
    }
}
