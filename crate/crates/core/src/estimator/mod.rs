//! Hash-based estimation of adaptive mutual information (AMI) and adaptive
//! conditional mutual information (ACMI).
//!
//! Each sample of X, Y and Z is quantized coordinate-wise with a shared
//! bucket width `epsilon` and offset `b`, then hashed into `c_h * N`
//! buckets. Collision counts N_ijk, N_ik, N_jk and N_k enter the plug-in sum
//!
//! ```text
//! sum_{ijk} phi(i,j,k) * (r_ik r_jk / r_k) * g(r_ijk r_k / (r_ik r_jk)),  g(t) = (t-1)^2 / (2(t+1))
//! ```
//!
//! The sum factorizes over conditioning buckets k, so the estimator sorts
//! samples by their Z bucket once and then only visits buckets holding two
//! or more samples: a lone sample always has ratio 1 and contributes zero.
//!
//! With [`EdgeRule::Completed`] (the default) the (i, j) pairs of a Z bucket
//! whose marginals are populated but whose joint count is zero also enter the
//! sum, at g(0) = 1/2. Their combined weight is computed in closed form from
//! `N_k^2 - sum N_ik N_jk`, so no empty cell is ever enumerated.

pub mod hash;
pub mod oracle;
pub mod table;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use hash::{derive_seed, quantize, BucketHasher};

pub use hash::{h1_quantize, h2_bucket};
pub use oracle::{exact_ami_bounds_discrete, exact_cmi_discrete, AmiBounds, JointPmf, PairPmf};
pub use table::{build_collision_table, CollisionTable};

/// Convex generator with g(1) = 0. Values of `t` arbitrarily close to zero are fine; g(0) = 1/2.
pub fn g_fn(t: f64) -> Result<f64> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("g is defined on [0, inf), got {t}")));
    }
    Ok(g(t))
}

#[inline]
pub(crate) fn g(t: f64) -> f64 {
    let d = t - 1.0;
    d * d / (2.0 * (t + 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhiVariant {
    ConstantOne,
    Weight,
    WeightSquared,
    /// exp(-w^2 / 2)
    GaussWeight,
    /// mean l2 norm of the raw (x, y) samples in a bucket
    ActNorm,
    WeightTimesActNorm,
    /// exp(-w^2 * ||act||^2 / 2)
    GaussWeightActNorm,
}

impl PhiVariant {
    pub const ALL: [PhiVariant; 7] = [
        PhiVariant::ConstantOne,
        PhiVariant::Weight,
        PhiVariant::WeightSquared,
        PhiVariant::GaussWeight,
        PhiVariant::ActNorm,
        PhiVariant::WeightTimesActNorm,
        PhiVariant::GaussWeightActNorm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PhiVariant::ConstantOne => "constant_one",
            PhiVariant::Weight => "weight",
            PhiVariant::WeightSquared => "weight_squared",
            PhiVariant::GaussWeight => "gauss_weight",
            PhiVariant::ActNorm => "act_norm",
            PhiVariant::WeightTimesActNorm => "weight_times_act_norm",
            PhiVariant::GaussWeightActNorm => "gauss_weight_act_norm",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        PhiVariant::ALL.into_iter().find(|v| v.name() == name)
    }

    pub fn uses_weight(self) -> bool {
        matches!(
            self,
            PhiVariant::Weight
                | PhiVariant::WeightSquared
                | PhiVariant::GaussWeight
                | PhiVariant::WeightTimesActNorm
                | PhiVariant::GaussWeightActNorm
        )
    }

    pub fn uses_activations(self) -> bool {
        matches!(
            self,
            PhiVariant::ActNorm | PhiVariant::WeightTimesActNorm | PhiVariant::GaussWeightActNorm
        )
    }
}

/// Scaling function phi, with the pair weight it is evaluated at and an
/// overall non-negative multiplier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiSpec {
    pub variant: PhiVariant,
    pub pair_weight: Option<f64>,
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

impl PhiSpec {
    pub fn new(variant: PhiVariant) -> Self {
        PhiSpec {
            variant,
            pair_weight: None,
            scale: 1.0,
        }
    }

    pub fn constant() -> Self {
        PhiSpec::new(PhiVariant::ConstantOne)
    }

    pub fn with_weight(mut self, w: f64) -> Self {
        self.pair_weight = Some(w);
        self
    }

    pub fn scaled(mut self, k: f64) -> Self {
        self.scale *= k;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale >= 0.0) || !self.scale.is_finite() {
            return Err(Error::config("phi scale must be finite and non-negative"));
        }
        if self.variant.uses_weight() {
            match self.pair_weight {
                Some(w) if (0.0..=1.0).contains(&w) => {}
                Some(w) => {
                    return Err(Error::config(format!("pair weight {w} outside [0, 1]")))
                }
                None => {
                    return Err(Error::config(format!(
                        "phi variant {} needs a pair weight",
                        self.variant.name()
                    )))
                }
            }
        }
        Ok(())
    }

    fn w(&self) -> f64 {
        self.pair_weight.unwrap_or(1.0)
    }

    /// Value of phi for variants that do not depend on activations.
    pub fn constant_value(&self) -> Option<f64> {
        let w = self.w();
        let base = match self.variant {
            PhiVariant::ConstantOne => 1.0,
            PhiVariant::Weight => w,
            PhiVariant::WeightSquared => w * w,
            PhiVariant::GaussWeight => libm::exp(-w * w / 2.0),
            _ => return None,
        };
        Some(self.scale * base)
    }

    /// phi evaluated with `act_norm` as the bucket's activation norm.
    pub fn eval(&self, act_norm: f64) -> f64 {
        let w = self.w();
        let base = match self.variant {
            PhiVariant::ActNorm => act_norm,
            PhiVariant::WeightTimesActNorm => w * act_norm,
            PhiVariant::GaussWeightActNorm => libm::exp(-w * w * act_norm * act_norm / 2.0),
            _ => return self.constant_value().unwrap_or(0.0),
        };
        self.scale * base
    }
}

/// Which (i, j, k) triples enter the plug-in sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeRule {
    /// Every (i, j) pair with populated marginals inside a populated Z bucket;
    /// pairs with no joint collision contribute at g(0).
    #[default]
    Completed,
    /// Only triples with N_ijk > 0.
    Observed,
}

/// Fully resolved hashing parameters of one estimation call.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HashConfig {
    pub epsilon: f64,
    pub b_offset: f64,
    pub c_h: u32,
    pub seed: u64,
}

impl HashConfig {
    pub fn new(epsilon: f64, b_offset: f64, c_h: u32, seed: u64) -> Result<Self> {
        let cfg = HashConfig {
            epsilon,
            b_offset,
            c_h,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if !(0.0..=self.epsilon).contains(&self.b_offset) {
            return Err(Error::config(format!(
                "offset b = {} outside [0, epsilon]",
                self.b_offset
            )));
        }
        if self.c_h < 1 {
            return Err(Error::config("c_h must be at least 1"));
        }
        Ok(())
    }

    /// F = c_h * N.
    pub fn n_buckets(&self, n: usize) -> u64 {
        (self.c_h as u64).saturating_mul(n as u64).max(1)
    }

    pub(crate) fn hasher(&self, n: usize) -> BucketHasher {
        BucketHasher::new(self.seed, self.n_buckets(n))
    }
}

/// User-facing estimator settings; `None` fields are resolved per call.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimatorConfig {
    /// Bucket width in standardized units. `None` picks N^(-1/(2d)).
    pub epsilon: Option<f64>,
    /// Quantization offset. `None` draws it uniformly from [0, epsilon) using the seed.
    pub b_offset: Option<f64>,
    pub c_h: u32,
    pub seed: u64,
    /// Rescale every input column to zero mean, unit variance before quantizing.
    pub standardize: bool,
    pub edges: EdgeRule,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            epsilon: None,
            b_offset: None,
            c_h: 4,
            seed: 0,
            standardize: true,
            edges: EdgeRule::Completed,
        }
    }
}

impl EstimatorConfig {
    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = Some(epsilon);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_c_h(mut self, c_h: u32) -> Self {
        self.c_h = c_h;
        self
    }

    pub fn with_edges(mut self, edges: EdgeRule) -> Self {
        self.edges = edges;
        self
    }

    /// Resolves epsilon and the offset for `n` samples of total dimension `dims`.
    pub fn resolve(&self, n: usize, dims: usize) -> Result<HashConfig> {
        let epsilon = self.epsilon.unwrap_or_else(|| default_epsilon(n, dims));
        let b_offset = match self.b_offset {
            Some(b) => b,
            None => {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.seed, &[0x0FF5E7]));
                rng.random::<f64>() * epsilon
            }
        };
        HashConfig::new(epsilon, b_offset, self.c_h, self.seed)
    }
}

/// N^(-1/(2d)) for N samples of total dimension d.
pub fn default_epsilon(n: usize, dims: usize) -> f64 {
    if dims == 0 || n < 2 {
        return 1.0;
    }
    libm::pow(n as f64, -1.0 / (2.0 * dims as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub n_samples: usize,
    pub config: HashConfig,
    pub phi: PhiSpec,
}

/// Zero mean, unit variance. The sums run over a sorted copy so the result
/// does not depend on sample order. Constant columns are only centered.
pub(crate) fn standardize_in_place(col: &mut [f64]) {
    if col.is_empty() {
        return;
    }
    let mut sorted = col.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    let mut dev: Vec<f64> = sorted.iter().map(|v| (v - mean) * (v - mean)).collect();
    dev.sort_unstable_by(f64::total_cmp);
    let sd = libm::sqrt(dev.iter().sum::<f64>() / n);
    let scale = if sd > 0.0 { sd } else { 1.0 };
    for v in col.iter_mut() {
        *v = (*v - mean) / scale;
    }
}

pub(crate) fn prepared_columns(m: &Matrix, standardize: bool) -> Vec<Vec<f64>> {
    let mut cols = m.columns();
    if standardize {
        cols.iter_mut().for_each(|c| standardize_in_place(c));
    }
    cols
}

/// Bucket keys of every row of the column set.
pub(crate) fn row_keys(cols: &[&[f64]], n: usize, cfg: &HashConfig, hasher: &BucketHasher) -> Vec<u64> {
    let mut state = vec![hasher.start(); n];
    for col in cols {
        for (s, &v) in state.iter_mut().zip(col.iter()) {
            *s = BucketHasher::absorb(*s, quantize(v, cfg.epsilon, cfg.b_offset));
        }
    }
    state.into_iter().map(|s| hasher.finish(s)).collect()
}

#[inline]
fn row_key(cols: &[&[f64]], t: usize, cfg: &HashConfig, hasher: &BucketHasher) -> u64 {
    hasher.finish(cols.iter().fold(hasher.start(), |s, col| {
        BucketHasher::absorb(s, quantize(col[t], cfg.epsilon, cfg.b_offset))
    }))
}

#[derive(Default)]
pub(crate) struct Scratch {
    cell: Vec<(u64, u64, f64)>,
    ys: Vec<u64>,
}

/// X and Z hashed and grouped by Z bucket; any number of Y variables can
/// then be scored against it.
pub(crate) struct Conditioning {
    cfg: HashConfig,
    hasher: BucketHasher,
    n: usize,
    hx: Vec<u64>,
    members: Vec<u32>,
    runs: Vec<(u32, u32)>,
}

impl Conditioning {
    pub(crate) fn new(x_cols: &[&[f64]], z_cols: &[&[f64]], n: usize, cfg: HashConfig) -> Self {
        let hasher = cfg.hasher(n);
        let hx = row_keys(x_cols, n, &cfg, &hasher);
        let hz = row_keys(z_cols, n, &cfg, &hasher);
        let mut by_z: Vec<(u64, u32)> = hz.iter().enumerate().map(|(t, &k)| (k, t as u32)).collect();
        by_z.sort_unstable();
        let mut members = Vec::new();
        let mut runs = Vec::new();
        let mut s = 0;
        while s < by_z.len() {
            let mut e = s + 1;
            while e < by_z.len() && by_z[e].0 == by_z[s].0 {
                e += 1;
            }
            if e - s >= 2 {
                let start = members.len() as u32;
                members.extend(by_z[s..e].iter().map(|&(_, t)| t));
                runs.push((start, members.len() as u32));
            }
            s = e;
        }
        Conditioning {
            cfg,
            hasher,
            n,
            hx,
            members,
            runs,
        }
    }

    /// Estimator value for Y given as (already preprocessed) columns.
    /// `norms[t]` is the activation norm of sample t for activation-based phi.
    pub(crate) fn score(
        &self,
        y_cols: &[&[f64]],
        phi: &PhiSpec,
        norms: Option<&[f64]>,
        edges: EdgeRule,
        scratch: &mut Scratch,
    ) -> f64 {
        let constant = phi.constant_value();
        let n_total = self.n as f64;
        let mut total = 0.0;
        for &(s, e) in &self.runs {
            let run = &self.members[s as usize..e as usize];
            scratch.cell.clear();
            for &t in run {
                let t = t as usize;
                let hy = row_key(y_cols, t, &self.cfg, &self.hasher);
                let norm = norms.map_or(0.0, |nv| nv[t]);
                scratch.cell.push((self.hx[t], hy, norm));
            }
            scratch
                .cell
                .sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)).then(a.2.total_cmp(&b.2)));
            scratch.ys.clear();
            scratch.ys.extend(scratch.cell.iter().map(|c| c.1));
            scratch.ys.sort_unstable();

            let cell = &scratch.cell;
            let ys = &scratch.ys;
            let n_k = cell.len() as u64;
            let denom = n_k as f64 * n_total;
            let mut acc = 0.0;
            let mut covered = 0u64;
            let mut i0 = 0;
            while i0 < cell.len() {
                let mut i1 = i0 + 1;
                while i1 < cell.len() && cell[i1].0 == cell[i0].0 {
                    i1 += 1;
                }
                let n_ik = (i1 - i0) as u64;
                let mut j0 = i0;
                while j0 < i1 {
                    let mut j1 = j0 + 1;
                    while j1 < i1 && cell[j1].1 == cell[j0].1 {
                        j1 += 1;
                    }
                    let hy = cell[j0].1;
                    let n_ijk = (j1 - j0) as u64;
                    let n_jk = (ys.partition_point(|&v| v <= hy) - ys.partition_point(|&v| v < hy))
                        as u64;
                    let ab = n_ik * n_jk;
                    let alpha = ab as f64 / denom;
                    let t = (n_ijk * n_k) as f64 / ab as f64;
                    let phi_cell = match constant {
                        Some(_) => 1.0,
                        None => {
                            let mean_norm =
                                cell[j0..j1].iter().map(|c| c.2).sum::<f64>() / n_ijk as f64;
                            phi.eval(mean_norm)
                        }
                    };
                    acc += phi_cell * alpha * g(t);
                    covered += ab;
                    j0 = j1;
                }
                i0 = i1;
            }
            if edges == EdgeRule::Completed {
                let missing = n_k * n_k - covered;
                if missing > 0 {
                    let phi_k = match constant {
                        Some(_) => 1.0,
                        None => phi.eval(cell.iter().map(|c| c.2).sum::<f64>() / n_k as f64),
                    };
                    acc += phi_k * 0.5 * (missing as f64 / denom);
                }
            }
            total += acc;
        }
        match constant {
            Some(c) => c * total,
            None => total,
        }
    }
}

/// l2 norm of each raw (x_t, y_t) row pair.
pub(crate) fn pair_norms(x: &[&[f64]], y: &[&[f64]], n: usize) -> Vec<f64> {
    (0..n)
        .map(|t| {
            let sq: f64 = x.iter().chain(y.iter()).map(|c| c[t] * c[t]).sum();
            libm::sqrt(sq)
        })
        .collect()
}

fn check_inputs(x: &Matrix, y: &Matrix, z: &Matrix) -> Result<usize> {
    let m = x.rows();
    if y.rows() != m || z.rows() != m {
        return Err(Error::shape(format!(
            "row counts differ: X {}, Y {}, Z {}",
            m,
            y.rows(),
            z.rows()
        )));
    }
    if m < 2 {
        return Err(Error::Empty(format!("need at least 2 samples, got {m}")));
    }
    if x.cols() == 0 || y.cols() == 0 {
        return Err(Error::shape("X and Y need at least one column"));
    }
    for (name, mat) in [("X", x), ("Y", y), ("Z", z)] {
        if let Some(index) = mat.data().iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("{name} has a non-finite value at flat index {index}")));
        }
    }
    Ok(m)
}

/// Hash-based ACMI estimate of I_phi(X; Y | Z). A `z` with zero columns
/// gives the unconditional estimate.
pub fn estimate_acmi(
    x: &Matrix,
    y: &Matrix,
    z: &Matrix,
    phi: &PhiSpec,
    cfg: &EstimatorConfig,
) -> Result<Estimate> {
    let m = check_inputs(x, y, z)?;
    phi.validate()?;
    let hash = cfg.resolve(m, x.cols() + y.cols() + z.cols())?;

    let xs = prepared_columns(x, cfg.standardize);
    let ys = prepared_columns(y, cfg.standardize);
    let zs = prepared_columns(z, cfg.standardize);
    let xr: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
    let yr: Vec<&[f64]> = ys.iter().map(Vec::as_slice).collect();
    let zr: Vec<&[f64]> = zs.iter().map(Vec::as_slice).collect();

    let norms = if phi.variant.uses_activations() {
        let raw_x = x.columns();
        let raw_y = y.columns();
        let rx: Vec<&[f64]> = raw_x.iter().map(Vec::as_slice).collect();
        let ry: Vec<&[f64]> = raw_y.iter().map(Vec::as_slice).collect();
        Some(pair_norms(&rx, &ry, m))
    } else {
        None
    };

    let cond = Conditioning::new(&xr, &zr, m, hash);
    let value = cond.score(&yr, phi, norms.as_deref(), cfg.edges, &mut Scratch::default());
    Ok(Estimate {
        value,
        n_samples: m,
        config: hash,
        phi: *phi,
    })
}

/// Hash-based AMI estimate of I_phi(X; Y) (ACMI with an empty conditioning set).
pub fn estimate_ami(x: &Matrix, y: &Matrix, phi: &PhiSpec, cfg: &EstimatorConfig) -> Result<Estimate> {
    estimate_acmi(x, y, &Matrix::empty(x.rows()), phi, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Bernoulli, Distribution};

    fn bernoulli_column(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = Bernoulli::new(0.5).unwrap();
        (0..n).map(|_| if d.sample(&mut rng) { 1.0 } else { 0.0 }).collect()
    }

    #[test]
    fn g_examples() {
        assert_eq!(g_fn(1.0).unwrap(), 0.0);
        assert_eq!(g_fn(3.0).unwrap(), 0.5);
        assert!((g_fn(0.5).unwrap() - 1.0 / 12.0).abs() < 1e-15);
        assert_eq!(g_fn(0.0).unwrap(), 0.5);
        assert!(g_fn(-0.1).is_err());
    }

    #[test]
    fn phi_validation() {
        assert!(PhiSpec::new(PhiVariant::Weight).validate().is_err());
        assert!(PhiSpec::new(PhiVariant::Weight).with_weight(1.5).validate().is_err());
        assert!(PhiSpec::new(PhiVariant::GaussWeight).with_weight(0.5).validate().is_ok());
        assert!(PhiSpec::constant().scaled(-1.0).validate().is_err());
        let g = PhiSpec::new(PhiVariant::GaussWeight).with_weight(1.0);
        assert!((g.constant_value().unwrap() - libm::exp(-0.5)).abs() < 1e-15);
    }

    #[test]
    fn x_equal_z_gives_zero() {
        let n = 2000;
        let x = Matrix::from_column(&bernoulli_column(n, 1));
        let y = Matrix::from_column(&bernoulli_column(n, 2));
        let est = estimate_acmi(&x, &y, &x, &PhiSpec::constant(), &EstimatorConfig::default()).unwrap();
        assert_eq!(est.value, 0.0);
    }

    #[test]
    fn observed_edges_lose_zero_joint_mass() {
        // X = Y, Z independent: completed sum recovers 1/3, observed-only 1/12.
        let n = 20_000;
        let x = Matrix::from_column(&bernoulli_column(n, 3));
        let z = Matrix::from_column(&bernoulli_column(n, 4));
        let cfg = EstimatorConfig::default().with_epsilon(0.1);
        let full = estimate_acmi(&x, &x, &z, &PhiSpec::constant(), &cfg).unwrap();
        let obs = estimate_acmi(&x, &x, &z, &PhiSpec::constant(), &cfg.with_edges(EdgeRule::Observed))
            .unwrap();
        assert!((full.value - 1.0 / 3.0).abs() < 1e-3, "{}", full.value);
        assert!((obs.value - 1.0 / 12.0).abs() < 1e-3, "{}", obs.value);
    }

    #[test]
    fn rejects_bad_inputs() {
        let x = Matrix::from_column(&[0.0, 1.0, 2.0]);
        let y = Matrix::from_column(&[0.0, 1.0]);
        assert!(matches!(
            estimate_ami(&x, &y, &PhiSpec::constant(), &EstimatorConfig::default()),
            Err(Error::Shape(_))
        ));
        let one = Matrix::from_column(&[1.0]);
        assert!(matches!(
            estimate_ami(&one, &one, &PhiSpec::constant(), &EstimatorConfig::default()),
            Err(Error::Empty(_))
        ));
        let weight = PhiSpec::new(PhiVariant::Weight);
        assert!(estimate_ami(&x, &x, &weight, &EstimatorConfig::default()).is_err());
    }

    #[test]
    fn resolve_draws_offset_inside_bucket() {
        for seed in 0..50 {
            let h = EstimatorConfig::default().with_seed(seed).resolve(1000, 3).unwrap();
            assert!(h.b_offset >= 0.0 && h.b_offset <= h.epsilon);
            assert!((h.epsilon - libm::pow(1000.0, -1.0 / 6.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn standardize_is_order_invariant() {
        let mut a = alloc::vec![3.0, -1.0, 0.25, 8.5, 2.0];
        let mut b = alloc::vec![8.5, 2.0, 3.0, 0.25, -1.0];
        standardize_in_place(&mut a);
        standardize_in_place(&mut b);
        assert_eq!(a[0], b[2]);
        assert_eq!(a[3], b[0]);
        let mut c = alloc::vec![2.0; 4];
        standardize_in_place(&mut c);
        assert_eq!(c, alloc::vec![0.0; 4]);
    }
}
