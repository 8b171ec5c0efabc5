use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of the semi-smooth Newton solver and its active-set driver.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Regularisation strength.
    pub epsilon: f64,
    /// Armijo sufficient-decrease fraction.
    pub theta: f64,
    /// Armijo backtracking factor.
    pub kappa: f64,
    /// Tikhonov shift added to the generalised Hessian.
    pub delta: f64,
    /// Stop once `max_i |Σ_j π_ij − 1|` falls below this.
    pub newton_tol: f64,
    pub max_newton_iters: usize,
    /// Relative residual target for the inner conjugate-gradient solve.
    pub cg_tol: f64,
    /// Inner iteration cap; `None` means `10 n`.
    pub cg_max_iters: Option<usize>,
    pub max_backtracks: usize,
    /// Outer iteration cap of the active-set method.
    pub max_outer_iters: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            epsilon: 1.0,
            theta: 0.1,
            kappa: 0.5,
            delta: 1e-5,
            newton_tol: 1e-8,
            max_newton_iters: 100,
            cg_tol: 1e-10,
            cg_max_iters: None,
            max_backtracks: 60,
            max_outer_iters: 50,
        }
    }
}

impl SolverConfig {
    pub fn with_epsilon(epsilon: f64) -> Self {
        Self {
            epsilon,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!(
                    "{name} must be positive and finite, got {v}"
                )))
            }
        };
        positive("epsilon", self.epsilon)?;
        positive("delta", self.delta)?;
        positive("newton_tol", self.newton_tol)?;
        positive("cg_tol", self.cg_tol)?;
        for (name, v) in [("theta", self.theta), ("kappa", self.kappa)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::invalid(format!(
                    "{name} must lie in (0, 1), got {v}"
                )));
            }
        }
        if self.max_newton_iters == 0 || self.max_outer_iters == 0 {
            return Err(Error::invalid("iteration caps must be at least 1"));
        }
        Ok(())
    }

    pub(crate) fn cg_cap(&self, n: usize) -> usize {
        self.cg_max_iters.unwrap_or(10 * n).max(1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let cfg = SolverConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.delta, 1e-5);
        assert_eq!(cfg.cg_cap(7), 70);
    }

    #[test]
    fn rejects_out_of_range() {
        for cfg in [
            SolverConfig {
                epsilon: 0.0,
                ..Default::default()
            },
            SolverConfig {
                theta: 1.0,
                ..Default::default()
            },
            SolverConfig {
                kappa: 0.0,
                ..Default::default()
            },
            SolverConfig {
                delta: -1.0,
                ..Default::default()
            },
            SolverConfig {
                newton_tol: f64::NAN,
                ..Default::default()
            },
        ] {
            assert!(cfg.validate().is_err());
        }
    }
}
