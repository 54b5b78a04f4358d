//! Estimator checks on conditionally independent Gaussian data, where the
//! true ACMI is exactly zero and every estimate is pure error.

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::hash::derive_seed;
use crate::estimator::{estimate_acmi, EdgeRule, EstimatorConfig, PhiSpec, PhiVariant};
use crate::exec::Executor;
use crate::matrix::Matrix;
use crate::stats::{mean, quantile};

pub const SAMPLE_GRID: [usize; 7] = [500, 1000, 5000, 10_000, 15_000, 20_000, 25_000];
pub const DIM_GRID: [usize; 5] = [3, 10, 20, 30, 50];
pub const DIM_SAMPLES: usize = 5000;
pub const EPSILON_SWEEP: [f64; 3] = [0.1, 0.25, 0.5];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ValidationConfig {
    /// Bucket width on standardized data; `None` uses the sample-size rule.
    pub epsilon: Option<f64>,
    pub c_h: u32,
    pub trials: usize,
    pub seed: u64,
    pub phi: PhiSpec,
    pub edges: EdgeRule,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        ValidationConfig {
            epsilon: Some(0.5),
            c_h: 4,
            trials: 10,
            seed: 0,
            phi: PhiSpec::constant(),
            edges: EdgeRule::Completed,
        }
    }
}

impl ValidationConfig {
    /// exp(-||act||^2 / 2) instead of the constant scaling.
    pub fn with_gauss_act_phi(mut self) -> Self {
        self.phi = PhiSpec::new(PhiVariant::GaussWeightActNorm).with_weight(1.0);
        self
    }
}

/// One grid point: per-trial estimates and summaries of their squares.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub x: f64,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
    pub mse: f64,
    pub estimates: Vec<f64>,
}

impl CurvePoint {
    pub fn from_estimates(x: f64, estimates: Vec<f64>) -> Self {
        let sq: Vec<f64> = estimates.iter().map(|e| e * e).collect();
        CurvePoint {
            x,
            median: quantile(&sq, 0.5),
            q25: quantile(&sq, 0.25),
            q75: quantile(&sq, 0.75),
            mse: mean(&sq),
            estimates,
        }
    }

    pub fn median_abs(&self) -> f64 {
        let a: Vec<f64> = self.estimates.iter().map(|e| e.abs()).collect();
        quantile(&a, 0.5)
    }
}

fn normal_matrix(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Matrix {
    let data = (0..n * d).map(|_| StandardNormal.sample(rng)).collect();
    Matrix::new(n, d, data).expect("size matches")
}

/// Independent standard-normal X (n x dx), Y (n x dy), Z (n x dz).
pub fn null_sample(n: usize, dx: usize, dy: usize, dz: usize, seed: u64) -> (Matrix, Matrix, Matrix) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = normal_matrix(&mut rng, n, dx);
    let y = normal_matrix(&mut rng, n, dy);
    let z = normal_matrix(&mut rng, n, dz);
    (x, y, z)
}

fn run_point<E: Executor>(
    cfg: &ValidationConfig,
    tag: u64,
    n: usize,
    dims: (usize, usize, usize),
    exec: &E,
) -> Result<CurvePoint> {
    if cfg.trials == 0 {
        return Err(Error::config("trials must be at least 1"));
    }
    let results = exec.map(cfg.trials, |trial| {
        let base = derive_seed(cfg.seed, &[tag, n as u64, dims.0 as u64, trial as u64]);
        let (x, y, z) = null_sample(n, dims.0, dims.1, dims.2, derive_seed(base, &[0]));
        let est = EstimatorConfig {
            epsilon: cfg.epsilon,
            c_h: cfg.c_h,
            seed: derive_seed(base, &[1]),
            edges: cfg.edges,
            ..EstimatorConfig::default()
        };
        estimate_acmi(&x, &y, &z, &cfg.phi, &est).map(|e| e.value)
    });
    let estimates = results.into_iter().collect::<Result<Vec<f64>>>()?;
    Ok(CurvePoint::from_estimates(n as f64, estimates))
}

/// One-dimensional X and Y, two-dimensional Z, N over `grid`.
pub fn mse_vs_samples<E: Executor>(cfg: &ValidationConfig, grid: &[usize], exec: &E) -> Result<Vec<CurvePoint>> {
    grid.iter().map(|&n| run_point(cfg, 1, n, (1, 1, 2), exec)).collect()
}

/// X, Y and Z all d-dimensional with `n` samples, d over `grid`.
pub fn mse_vs_dimension<E: Executor>(
    cfg: &ValidationConfig,
    n: usize,
    grid: &[usize],
    exec: &E,
) -> Result<Vec<CurvePoint>> {
    grid.iter()
        .map(|&d| {
            let mut p = run_point(cfg, 2, n, (d, d, d), exec)?;
            p.x = d as f64;
            Ok(p)
        })
        .collect()
}
