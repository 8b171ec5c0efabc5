//! Seeded point-cloud generators. All randomness comes from `ChaCha8Rng`
//! seeded with the given `u64`, so every generator is reproducible bit for
//! bit.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{orthonormalize, Labels};

/// Generator name, numeric parameters and seed of a cloud.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CloudParams {
    pub generator: String,
    pub seed: Option<u64>,
    pub values: BTreeMap<String, f64>,
}

impl CloudParams {
    fn new(generator: &str, seed: Option<u64>, values: &[(&str, f64)]) -> Self {
        Self {
            generator: generator.to_string(),
            seed,
            values: values.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledCloud {
    pub points: Vec<Vec<f64>>,
    pub labels: Option<Labels>,
    /// Per-point curve parameter, when the cloud samples a parametrised curve.
    pub parameter: Option<Vec<f64>>,
    pub params: CloudParams,
}

impl LabeledCloud {
    pub fn new(points: Vec<Vec<f64>>, labels: Option<Labels>, params: CloudParams) -> Result<Self> {
        if let Some(l) = &labels {
            if l.len() != points.len() {
                return Err(Error::DimensionMismatch {
                    expected: points.len(),
                    found: l.len(),
                });
            }
        }
        if let Some(p) = points.first() {
            if let Some(bad) = points.iter().find(|q| q.len() != p.len()) {
                return Err(Error::DimensionMismatch {
                    expected: p.len(),
                    found: bad.len(),
                });
            }
        }
        Ok(Self {
            points,
            labels,
            parameter: None,
            params,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }
}

/// Point on the closed spiral at parameter `t`.
pub fn spiral_point(t: f64) -> [f64; 3] {
    let c6 = (6.0 * t).cos();
    [
        t.cos() * (0.5 * c6 + 1.0),
        t.sin() * (0.4 * c6 + 1.0),
        0.4 * (6.0 * t).sin(),
    ]
}

/// `N` points at `t_i = 2πi/N` along the closed spiral curve in `R³`.
pub fn spiral(n: usize) -> Result<LabeledCloud> {
    if n == 0 {
        return Err(Error::TooFewPoints {
            required: 1,
            found: 0,
        });
    }
    let ts: Vec<f64> = (0..n).map(|i| TAU * i as f64 / n as f64).collect();
    let points = ts.iter().map(|&t| spiral_point(t).to_vec()).collect();
    let mut cloud = LabeledCloud::new(
        points,
        None,
        CloudParams::new("spiral", None, &[("n", n as f64)]),
    )?;
    cloud.parameter = Some(ts);
    Ok(cloud)
}

/// Noise radius `0.05 + 0.95 (1 + cos 6θ)/2`.
pub fn noise_radius(theta: f64) -> f64 {
    0.05 + 0.95 * (1.0 + (6.0 * theta).cos()) / 2.0
}

/// Random `d × 3` matrix with orthonormal columns.
pub fn random_orthonormal(d: usize, k: usize, rng: &mut ChaCha8Rng) -> Result<DMatrix<f64>> {
    let g = DMatrix::from_fn(d, k, |_, _| rng.sample::<f64, _>(StandardNormal));
    orthonormalize(&g)
}

/// Maps a 3-D curve sample isometrically into `R^d` and adds heteroskedastic
/// noise `η_i = ρ(θ_i) Z_i/‖Z_i‖` with Gaussian `Z_i`.
pub fn embed_with_noise(cloud: &LabeledCloud, d_ambient: usize, seed: u64) -> Result<LabeledCloud> {
    let (clean, mut rng) = embed_clean_with_rng(cloud, d_ambient, seed)?;
    let theta = cloud
        .parameter
        .as_ref()
        .expect("checked by embed_clean_with_rng");
    let mut points = clean.points;
    for (p, &t) in points.iter_mut().zip(theta) {
        let z: Vec<f64> = (0..d_ambient)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let nz = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        let rho = noise_radius(t);
        for (x, zi) in p.iter_mut().zip(&z) {
            *x += rho * zi / nz;
        }
    }
    let mut params = cloud.params.clone();
    params.generator = format!("{}+noise", cloud.params.generator);
    params.seed = Some(seed);
    params.values.insert("d_ambient".into(), d_ambient as f64);
    Ok(LabeledCloud {
        points,
        labels: cloud.labels.clone(),
        parameter: cloud.parameter.clone(),
        params,
    })
}

/// The noiseless counterpart of [`embed_with_noise`]: the same rotation
/// (same seed), no noise.
pub fn embed_clean(cloud: &LabeledCloud, d_ambient: usize, seed: u64) -> Result<LabeledCloud> {
    embed_clean_with_rng(cloud, d_ambient, seed).map(|(c, _)| c)
}

fn embed_clean_with_rng(
    cloud: &LabeledCloud,
    d_ambient: usize,
    seed: u64,
) -> Result<(LabeledCloud, ChaCha8Rng)> {
    if d_ambient < 3 {
        return Err(Error::invalid(format!(
            "ambient dimension must be ≥ 3, got {d_ambient}"
        )));
    }
    if cloud.dim() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            found: cloud.dim(),
        });
    }
    if cloud.parameter.as_ref().map(Vec::len) != Some(cloud.len()) {
        return Err(Error::invalid(
            "noise model needs the per-point curve parameter",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = random_orthonormal(d_ambient, 3, &mut rng)?;
    let points = cloud
        .points
        .iter()
        .map(|p| {
            (0..d_ambient)
                .map(|a| (0..3).map(|b| r[(a, b)] * p[b]).sum())
                .collect()
        })
        .collect();
    let mut params = cloud.params.clone();
    params.seed = Some(seed);
    params.values.insert("d_ambient".into(), d_ambient as f64);
    Ok((
        LabeledCloud {
            points,
            labels: cloud.labels.clone(),
            parameter: cloud.parameter.clone(),
            params,
        },
        rng,
    ))
}

/// Standard deviations of the three mixture components.
pub const GMM_SIGMAS: [f64; 3] = [0.3, 0.6, 1.0];

/// Component means: unit vectors at angles `0, 2π/3, −2π/3` in the first
/// two coordinates, measured from the second axis.
pub fn gmm_means(d: usize) -> [Vec<f64>; 3] {
    let angle = |a: f64| {
        let mut m = vec![0.0; d];
        m[0] = a.sin();
        m[1] = a.cos();
        m
    };
    [angle(0.0), angle(2.0 * PI / 3.0), angle(-2.0 * PI / 3.0)]
}

/// `per_cluster` isotropic Gaussian draws from each of three components in
/// `R^d`, labelled 0, 1, 2 in blocks.
pub fn gmm_sample(per_cluster: usize, d: usize, seed: u64) -> Result<LabeledCloud> {
    if d < 2 {
        return Err(Error::invalid(format!("dimension must be ≥ 2, got {d}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let means = gmm_means(d);
    let mut points = Vec::with_capacity(3 * per_cluster);
    let mut labels = Vec::with_capacity(3 * per_cluster);
    for (c, (mu, sigma)) in means.iter().zip(GMM_SIGMAS).enumerate() {
        for _ in 0..per_cluster {
            points.push(
                mu.iter()
                    .map(|m| m + sigma * rng.sample::<f64, _>(StandardNormal))
                    .collect(),
            );
            labels.push(c);
        }
    }
    LabeledCloud::new(
        points,
        Some(Labels(labels)),
        CloudParams::new(
            "gmm",
            Some(seed),
            &[("per_cluster", per_cluster as f64), ("d", d as f64)],
        ),
    )
}

/// `N` uniform points on the unit sphere `S^d ⊂ R^{d+1}` (normalised
/// Gaussians).
pub fn sphere_sample(n: usize, d: usize, seed: u64) -> Result<LabeledCloud> {
    if d == 0 {
        return Err(Error::invalid("sphere dimension must be ≥ 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n);
    while points.len() < n {
        let z: Vec<f64> = (0..=d)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let nz = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        if nz > 1e-12 {
            points.push(z.iter().map(|v| v / nz).collect());
        }
    }
    LabeledCloud::new(
        points,
        None,
        CloudParams::new("sphere", Some(seed), &[("n", n as f64), ("d", d as f64)]),
    )
}

/// Point of the torus of revolution at angles `(u, v)`.
pub fn torus_point(u: f64, v: f64, major: f64, minor: f64) -> [f64; 3] {
    let ring = major + minor * v.cos();
    [ring * u.cos(), ring * u.sin(), minor * v.sin()]
}

/// `N` points uniform in surface area on the torus with radii `R > r`. The
/// tube angle is drawn by rejection with acceptance `(R + r cos v)/(R + r)`.
pub fn torus_sample(n: usize, major: f64, minor: f64, seed: u64) -> Result<LabeledCloud> {
    let (cloud, _) = torus_sample_counted(n, major, minor, seed)?;
    Ok(cloud)
}

/// Same as [`torus_sample`], also returning the number of proposals drawn.
pub fn torus_sample_counted(
    n: usize,
    major: f64,
    minor: f64,
    seed: u64,
) -> Result<(LabeledCloud, usize)> {
    if !(minor > 0.0 && major > minor) {
        return Err(Error::invalid(format!(
            "need 0 < r < R, got R = {major}, r = {minor}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n);
    let mut proposals = 0;
    while points.len() < n {
        let u = rng.random::<f64>() * TAU;
        let v = rng.random::<f64>() * TAU;
        proposals += 1;
        if rng.random::<f64>() * (major + minor) <= major + minor * v.cos() {
            points.push(torus_point(u, v, major, minor).to_vec());
        }
    }
    let cloud = LabeledCloud::new(
        points,
        None,
        CloudParams::new(
            "torus",
            Some(seed),
            &[("n", n as f64), ("R", major), ("r", minor)],
        ),
    )?;
    Ok((cloud, proposals))
}
