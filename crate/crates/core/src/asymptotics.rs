//! Large-sample behaviour of the quadratically regularised plan: the
//! constant `C_d`, the potential level `K_{ε,N}`, the first-order plan and
//! the graph-Laplacian estimate built from it, plus log–log slope fitting.
//!
//! Here `ε` follows the empirical-measure convention (marginals `1/N`), so
//! `K_{ε,N} = C_d ε^{2/(d+2)} N^{−4/(d+2)}`. A solver with unit row sums
//! sees the same problem at `ε / N`.

use std::f64::consts::PI;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::cost::CostMatrix;
use crate::error::{Error, Result};
use crate::plan::SparsePlan;

/// A closed manifold described by what the asymptotics need.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifoldSpec {
    pub dim: usize,
    pub volume: f64,
    /// `|S^{d−1}| = 2π^{d/2} / Γ(d/2)`
    pub sphere_area: f64,
}

/// Surface area of the unit sphere `S^{m−1}` in `R^m`.
pub fn unit_sphere_area(m: usize) -> f64 {
    let h = m as f64 / 2.0;
    2.0 * PI.powf(h) / gamma(h)
}

impl ManifoldSpec {
    pub fn new(dim: usize, volume: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("intrinsic dimension must be at least 1"));
        }
        if !(volume > 0.0 && volume.is_finite()) {
            return Err(Error::invalid(format!(
                "volume must be positive, got {volume}"
            )));
        }
        Ok(Self {
            dim,
            volume,
            sphere_area: unit_sphere_area(dim),
        })
    }

    /// The unit circle, volume `2π`.
    pub fn circle() -> Self {
        Self::sphere(1)
    }

    /// The unit sphere `S^d ⊂ R^{d+1}`.
    pub fn sphere(d: usize) -> Self {
        Self::new(d, unit_sphere_area(d + 1)).expect("positive dimension")
    }

    /// Torus of revolution with radii `R > r > 0`, volume `4π²Rr`.
    pub fn torus(major: f64, minor: f64) -> Result<Self> {
        if !(minor > 0.0 && major > minor) {
            return Err(Error::invalid(format!(
                "need 0 < r < R, got R = {major}, r = {minor}"
            )));
        }
        Self::new(2, 4.0 * PI * PI * major * minor)
    }
}

/// `C_d = (vol / |S^{d−1}| · d(d+2)/2)^{2/(d+2)}`
pub fn c_d(spec: &ManifoldSpec) -> f64 {
    let d = spec.dim as f64;
    (spec.volume / spec.sphere_area * d * (d + 2.0) / 2.0).powf(2.0 / (d + 2.0))
}

/// `K_{ε,N} = C_d ε^{2/(d+2)} N^{−4/(d+2)}`
pub fn k_eps_n(spec: &ManifoldSpec, epsilon: f64, n: usize) -> f64 {
    let d = spec.dim as f64;
    c_d(spec) * epsilon.powf(2.0 / (d + 2.0)) * (n as f64).powf(-4.0 / (d + 2.0))
}

fn check_plain(c: &CostMatrix) -> Result<()> {
    if c.half_factor() {
        return Err(Error::invalid(
            "first-order plan expects plain squared distances (half_factor = false)",
        ));
    }
    Ok(())
}

/// First-order plan `[K' − C_ij]_+ / ε` off the diagonal, with `K' = 2K`
/// when `doubled` (sum of two first-order potentials) and `K' = K`
/// otherwise. Rows are not normalised, so the plan is never flagged
/// feasible.
pub fn approx_plan(c: &CostMatrix, k: f64, epsilon: f64, doubled: bool) -> Result<SparsePlan> {
    check_plain(c)?;
    if !(epsilon > 0.0) {
        return Err(Error::invalid(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let level = if doubled { 2.0 * k } else { k };
    let n = c.n();
    let mut triplets = Vec::new();
    for i in 0..n {
        let row = c.row(i);
        for (j, cij) in row.iter().enumerate().skip(i + 1) {
            let v = (level - cij) / epsilon;
            if v > 0.0 {
                triplets.push((i, j, v));
            }
        }
    }
    Ok(SparsePlan::from_sorted_unchecked(n, triplets))
}

/// Normalisation applied to `Δ^OT f(x₀) = Σ_j W̄_{0j}(f(x₀) − f(x_j))`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LaplacianScaling {
    /// `−2(N+1) K⁻¹ Δ^OT f(x₀)`
    Theorem,
    /// `K⁻¹ Δ^OT f(x₀)`
    Appendix,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LaplacianEstimate {
    pub value: f64,
    pub k: f64,
    /// Points with a positive first-order weight.
    pub neighbors: usize,
    /// Set when no point falls inside the kernel support; `value` is then 0.
    pub empty_neighborhood: bool,
}

/// Graph-Laplacian estimate at `points[x0]` from row `x0` of the first-order
/// plan. `N` is the number of other points.
pub fn ot_laplacian_estimate(
    points: &[Vec<f64>],
    x0: usize,
    f: impl Fn(&[f64]) -> f64,
    spec: &ManifoldSpec,
    epsilon: f64,
    scaling: LaplacianScaling,
    doubled: bool,
) -> Result<LaplacianEstimate> {
    if x0 >= points.len() {
        return Err(Error::invalid(format!("x0 index {x0} out of range")));
    }
    if points.len() < 2 {
        return Err(Error::TooFewPoints {
            required: 2,
            found: points.len(),
        });
    }
    if !(epsilon > 0.0) {
        return Err(Error::invalid(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let n_other = points.len() - 1;
    let k = k_eps_n(spec, epsilon, n_other);
    let level = if doubled { 2.0 * k } else { k };
    let p0 = &points[x0];
    let f0 = f(p0);
    let mut acc = 0.0;
    let mut neighbors = 0;
    for (j, p) in points.iter().enumerate() {
        if j == x0 {
            continue;
        }
        if p.len() != p0.len() {
            return Err(Error::DimensionMismatch {
                expected: p0.len(),
                found: p.len(),
            });
        }
        let c: f64 = p.iter().zip(p0).map(|(a, b)| (a - b) * (a - b)).sum();
        let w = (level - c) / epsilon;
        if w > 0.0 {
            neighbors += 1;
            acc += w * (f0 - f(p));
        }
    }
    let value = match scaling {
        LaplacianScaling::Theorem => -2.0 * (n_other as f64 + 1.0) / k * acc,
        LaplacianScaling::Appendix => acc / k,
    };
    Ok(LaplacianEstimate {
        value: if neighbors == 0 { 0.0 } else { value },
        k,
        neighbors,
        empty_neighborhood: neighbors == 0,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Least squares fit of `log y = slope · log x + intercept` over `window`.
pub fn fit_loglog_slope(xs: &[f64], ys: &[f64], window: Range<usize>) -> Result<LogLogFit> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            found: ys.len(),
        });
    }
    if window.end > xs.len() || window.len() < 2 {
        return Err(Error::invalid(format!(
            "window {window:?} must hold at least two of {} points",
            xs.len()
        )));
    }
    let mut lx = Vec::with_capacity(window.len());
    let mut ly = Vec::with_capacity(window.len());
    for i in window {
        if !(xs[i] > 0.0 && ys[i] > 0.0) {
            return Err(Error::invalid(format!(
                "log-log fit needs positive values, got ({}, {}) at {i}",
                xs[i], ys[i]
            )));
        }
        lx.push(xs[i].ln());
        ly.push(ys[i].ln());
    }
    let m = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / m;
    let my = ly.iter().sum::<f64>() / m;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid(
            "log-log fit needs at least two distinct x values",
        ));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r2 = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        1.0
    };
    Ok(LogLogFit {
        slope,
        intercept,
        r2,
    })
}
