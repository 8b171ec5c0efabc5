//! Sparse bistochastic affinity matrices from hollow quadratically
//! regularised optimal transport, with the spectral tooling needed to use
//! them for manifold learning and clustering.

// `!(x > 0.0)` is deliberate throughout: it rejects NaN along with the
// out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod baselines;
pub mod config;
pub mod cost;
pub mod datasets;
pub mod error;
pub mod experiments;
pub mod io;
pub mod plan;
pub mod qot;
pub mod spectral;

pub use config::SolverConfig;
pub use cost::{mean_offdiag, normalize_mean, pairwise_cost, rank_one_shift, CostMatrix};
pub use error::{Error, Result};
pub use plan::{DualPotential, SparsePlan, SupportMask};
