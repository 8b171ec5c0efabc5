use crate::config::SolverConfig;
use crate::cost::CostMatrix;
use crate::error::{Error, Result};
use crate::plan::SupportMask;

use super::newton::{self, DenseCosts, EdgeCosts, StopReason};
use super::{finish, SolveDiagnostics, SolveOutput};

/// Active-set solve: the Newton iteration runs on the support `S` only,
/// then the plan induced by the potential is evaluated on every pair. The
/// support grows by the pairs that turned out positive until that
/// unrestricted plan is bistochastic. Pairs are never removed from `S`.
///
/// Every row of `s0` must be nonempty. A support that admits no feasible
/// plan makes the restricted dual unbounded; the restricted solve is cut
/// short once `‖u‖_∞ > 1e8 (1 + max C)` (or at the Newton iteration cap)
/// and the support is grown from the diverging potential. If it cannot grow
/// any further, [`Error::InfeasibleSupport`] is returned.
pub fn solve_active_set(
    c: &CostMatrix,
    cfg: &SolverConfig,
    s0: &SupportMask,
) -> Result<SolveOutput> {
    cfg.validate()?;
    let n = c.n();
    if n < 2 {
        return Err(Error::TooFewPoints {
            required: 2,
            found: n,
        });
    }
    if s0.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: s0.n(),
        });
    }
    if let Some(i) = (0..n).find(|&i| s0.degree(i) == 0) {
        return Err(Error::InfeasibleSupport(format!(
            "row {i} of the initial support is empty"
        )));
    }
    let cap = 1e8 * (1.0 + c.max());
    let all_pairs = DenseCosts {
        n,
        entries: c.as_slice(),
    };
    let mut support = s0.clone();
    let mut u = vec![1.0; n];
    let mut diagnostics = SolveDiagnostics::default();

    for outer in 1..=cfg.max_outer_iters {
        diagnostics.outer_iters = outer;
        let restricted = EdgeCosts {
            n,
            edges: support.edges().map(|(i, j)| (i, j, c.get(i, j))).collect(),
        };
        let result = newton::run(&restricted, cfg, u, Some(cap));
        let stop = result.stop;
        diagnostics.absorb(result.trace);
        u = result.u;

        let full = newton::plan_from_pairs(&all_pairs, &u, cfg.epsilon);
        if stop == StopReason::Converged && full.max_row_violation() <= cfg.newton_tol {
            let done = newton::NewtonResult {
                u,
                trace: Default::default(),
                stop,
            };
            return finish(&all_pairs, cfg, done, diagnostics);
        }
        // an infeasible support shows up as a diverging restricted potential;
        // the pairs it turns on are exactly what the support is missing
        let grown = support.union(&full.support());
        if grown.edge_count() == support.edge_count() {
            if stop != StopReason::Converged && !super::supports_feasible_plan(&support) {
                return Err(Error::InfeasibleSupport(format!(
                    "restricted dual diverged at outer iteration {outer} and the support stopped growing"
                )));
            }
            let done = newton::NewtonResult {
                u,
                trace: Default::default(),
                stop: if stop == StopReason::Converged {
                    StopReason::MaxIterations
                } else {
                    stop
                },
            };
            return finish(&all_pairs, cfg, done, diagnostics);
        }
        support = grown;
    }
    let last = newton::NewtonResult {
        u,
        trace: Default::default(),
        stop: StopReason::MaxIterations,
    };
    finish(&all_pairs, cfg, last, diagnostics).map_err(|e| match e {
        Error::NotConverged(mut f) => {
            f.reason = format!(
                "active set did not settle within {} outer iterations",
                cfg.max_outer_iters
            );
            Error::NotConverged(f)
        }
        other => other,
    })
}
