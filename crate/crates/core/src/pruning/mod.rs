//! Connectivity scoring between grouped filters of adjacent layers and
//! threshold-based pruning of the weakest group pairs.

mod network;

pub use network::{prune_network, LayerReport, PruneConfig, PruneReport, PruneResult, ReportTotals};

use alloc::format;
use alloc::vec::Vec;
use core::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::hash::derive_seed;
use crate::estimator::{
    default_epsilon, pair_norms, prepared_columns, Conditioning, EstimatorConfig, PhiSpec, PhiVariant,
    Scratch,
};
use crate::exec::Executor;
use crate::matrix::Matrix;
use crate::sensitivity::{partition_values, FilterPartition};
use crate::tensor::{ActivationSet, WeightKernel};

/// Sequential contiguous blocks; the first `n_filters % n_groups` blocks hold one extra filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupScheme {
    pub layer_index: usize,
    pub n_filters: usize,
    pub n_groups: usize,
}

impl GroupScheme {
    pub fn new(layer_index: usize, n_filters: usize, n_groups: usize) -> Result<Self> {
        if n_groups < 1 || n_groups > n_filters {
            return Err(Error::config(format!(
                "layer {layer_index}: {n_groups} groups for {n_filters} filters"
            )));
        }
        Ok(GroupScheme {
            layer_index,
            n_filters,
            n_groups,
        })
    }

    /// `requested` groups, clamped to the filter count.
    pub fn clamped(layer_index: usize, n_filters: usize, requested: usize) -> Result<Self> {
        GroupScheme::new(layer_index, n_filters, requested.clamp(1, n_filters.max(1)))
    }

    pub fn members(&self, g: usize) -> Range<usize> {
        let q = self.n_filters / self.n_groups;
        let r = self.n_filters % self.n_groups;
        let start = g * q + g.min(r);
        start..start + q + usize::from(g < r)
    }

    pub fn size(&self, g: usize) -> usize {
        self.members(g).len()
    }

    pub fn group_of(&self, f: usize) -> usize {
        let q = self.n_filters / self.n_groups;
        let r = self.n_filters % self.n_groups;
        let big = r * (q + 1);
        if f < big {
            f / (q + 1)
        } else {
            r + (f - big) / q
        }
    }
}

/// m x G matrix whose column g is the per-sample mean of the member filters.
pub fn group_activations(acts: &ActivationSet, scheme: &GroupScheme) -> Result<Matrix> {
    group_columns(&acts.samples, scheme)
}

pub(crate) fn group_columns(samples: &Matrix, scheme: &GroupScheme) -> Result<Matrix> {
    if samples.cols() != scheme.n_filters {
        return Err(Error::shape(format!(
            "activations have {} filters, scheme covers {}",
            samples.cols(),
            scheme.n_filters
        )));
    }
    let mut out = Matrix::zeros(samples.rows(), scheme.n_groups);
    for r in 0..samples.rows() {
        let row = samples.row(r);
        for g in 0..scheme.n_groups {
            let m = scheme.members(g);
            let len = m.len() as f64;
            out.set(r, g, row[m].iter().sum::<f64>() / len);
        }
    }
    Ok(out)
}

/// Group-level protection: a group's sensitivity is the mean of its members'.
pub fn group_partition(lambda: &[f64], scheme: &GroupScheme, protect_fraction: f64) -> Result<FilterPartition> {
    if lambda.len() != scheme.n_filters {
        return Err(Error::shape(format!(
            "{} sensitivities for {} filters",
            lambda.len(),
            scheme.n_filters
        )));
    }
    let means: Vec<f64> = (0..scheme.n_groups)
        .map(|g| {
            let m = scheme.members(g);
            let len = m.len() as f64;
            lambda[m].iter().sum::<f64>() / len
        })
        .collect();
    partition_values(&means, protect_fraction)
}

/// Mean |w| between every output group and input group, min-max rescaled
/// to [0, 1] over the layer. A constant matrix maps to all ones.
pub fn pair_weights(kernel: &WeightKernel, out_scheme: &GroupScheme, in_scheme: &GroupScheme) -> Result<Matrix> {
    if kernel.out_filters() != out_scheme.n_filters || kernel.in_filters() != in_scheme.n_filters {
        return Err(Error::shape("kernel does not match the group schemes"));
    }
    let wbar = kernel.abs_mean();
    let mut out = Matrix::zeros(out_scheme.n_groups, in_scheme.n_groups);
    for i in 0..out_scheme.n_groups {
        for j in 0..in_scheme.n_groups {
            let (ri, rj) = (out_scheme.members(i), in_scheme.members(j));
            let count = (ri.len() * rj.len()) as f64;
            let mut s = 0.0;
            for o in ri {
                s += wbar.row(o)[rj.clone()].iter().sum::<f64>();
            }
            out.set(i, j, s / count);
        }
    }
    let lo = out.data().iter().copied().fold(f64::INFINITY, f64::min);
    let hi = out.data().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let data = out
        .data()
        .iter()
        .map(|&v| if hi > lo { (v - lo) / (hi - lo) } else { 1.0 })
        .collect();
    Matrix::new(out_scheme.n_groups, in_scheme.n_groups, data)
}

/// Connectivity scores eta(i, j) between output group i and input group j.
/// Rows of protected output groups are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectivityMatrix {
    pub layer_pair: (usize, usize),
    pub out_scheme: GroupScheme,
    pub in_scheme: GroupScheme,
    /// row-major, out groups x in groups
    pub scores: Vec<Option<f64>>,
    pub phi: PhiVariant,
    /// Estimator settings with epsilon resolved; per-pair seeds derive from `config.seed`.
    pub config: EstimatorConfig,
}

impl ConnectivityMatrix {
    pub fn rows(&self) -> usize {
        self.out_scheme.n_groups
    }

    pub fn cols(&self) -> usize {
        self.in_scheme.n_groups
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.scores[i * self.cols() + j]
    }

    pub fn n_scored(&self) -> usize {
        self.scores.iter().filter(|s| s.is_some()).count()
    }
}

/// Seed for every estimate whose source group is `j` within a layer pair.
pub fn source_seed(master: u64, layer_pair: (usize, usize), j: usize) -> u64 {
    derive_seed(master, &[layer_pair.0 as u64, layer_pair.1 as u64, j as u64])
}

/// Inputs to [`score_layer_pair`] besides the grouped activations.
pub struct ScoreRequest<'a> {
    pub layer_pair: (usize, usize),
    pub in_scheme: GroupScheme,
    pub out_scheme: GroupScheme,
    /// Group-level partition of the output layer.
    pub partition: &'a FilterPartition,
    /// out groups x in groups, required for weight-based phi.
    pub pair_weights: Option<&'a Matrix>,
    pub phi: PhiVariant,
    pub config: EstimatorConfig,
}

/// eta(i, j) = ACMI(X = input group j; Y = output group i | Z = every other input group).
///
/// The map runs over input groups j: the (X, Z) hashing is shared by every i.
/// Each call uses the seed [`source_seed`] and the layer-wide epsilon, so a
/// single score equals `estimate_acmi` called with those settings.
pub fn score_layer_pair<E: Executor>(
    acts_in: &Matrix,
    acts_out: &Matrix,
    req: &ScoreRequest<'_>,
    exec: &E,
) -> Result<ConnectivityMatrix> {
    let m = acts_in.rows();
    let (g0, g1) = (req.in_scheme.n_groups, req.out_scheme.n_groups);
    if acts_out.rows() != m {
        return Err(Error::shape(format!("{} vs {} activation rows", m, acts_out.rows())));
    }
    if acts_in.cols() != g0 || acts_out.cols() != g1 {
        return Err(Error::shape("grouped activations do not match the group schemes"));
    }
    if req.partition.len() != g1 {
        return Err(Error::shape("partition does not cover the output groups"));
    }
    if m < 2 {
        return Err(Error::Empty(format!("need at least 2 samples, got {m}")));
    }
    if let Some(index) = acts_in.data().iter().chain(acts_out.data()).position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    let uses_weight = req.phi.uses_weight();
    if uses_weight {
        match req.pair_weights {
            Some(w) if w.rows() == g1 && w.cols() == g0 => {}
            _ => return Err(Error::config("weight-based phi needs a pair weight per group pair")),
        }
    }

    let dims = g0 + 1;
    let mut config = req.config;
    config.epsilon = Some(config.epsilon.unwrap_or_else(|| default_epsilon(m, dims)));

    let std_in = prepared_columns(acts_in, config.standardize);
    let std_out = prepared_columns(acts_out, config.standardize);
    let (raw_in, raw_out) = if req.phi.uses_activations() {
        (acts_in.columns(), acts_out.columns())
    } else {
        (Vec::new(), Vec::new())
    };
    let rows: Vec<usize> = req.partition.prunable.clone();

    let per_source: Vec<Result<Vec<f64>>> = exec.map(g0, |j| {
        let mut cfg = config;
        cfg.seed = source_seed(req.config.seed, req.layer_pair, j);
        let hash = cfg.resolve(m, dims)?;
        let x_cols = [std_in[j].as_slice()];
        let z_cols: Vec<&[f64]> = (0..g0).filter(|&p| p != j).map(|p| std_in[p].as_slice()).collect();
        let cond = Conditioning::new(&x_cols, &z_cols, m, hash);
        let mut scratch = Scratch::default();
        let mut out = Vec::with_capacity(rows.len());
        for &i in &rows {
            let mut phi = PhiSpec::new(req.phi);
            if uses_weight {
                phi = phi.with_weight(req.pair_weights.map_or(1.0, |w| w.get(i, j)));
            }
            phi.validate()?;
            let norms = if req.phi.uses_activations() {
                Some(pair_norms(&[raw_in[j].as_slice()], &[raw_out[i].as_slice()], m))
            } else {
                None
            };
            out.push(cond.score(&[std_out[i].as_slice()], &phi, norms.as_deref(), cfg.edges, &mut scratch));
        }
        Ok(out)
    });

    let mut scores = alloc::vec![None; g1 * g0];
    for (j, col) in per_source.into_iter().enumerate() {
        for (&i, v) in rows.iter().zip(col?) {
            scores[i * g0 + j] = Some(v);
        }
    }
    Ok(ConnectivityMatrix {
        layer_pair: req.layer_pair,
        out_scheme: req.out_scheme,
        in_scheme: req.in_scheme,
        scores,
        phi: req.phi,
        config,
    })
}

/// Keep/prune decision per (output group, input group).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneMask {
    pub layer_pair: (usize, usize),
    pub out_scheme: GroupScheme,
    pub in_scheme: GroupScheme,
    /// row-major, out groups x in groups
    keep: Vec<bool>,
}

impl PruneMask {
    pub fn new(
        layer_pair: (usize, usize),
        out_scheme: GroupScheme,
        in_scheme: GroupScheme,
        keep: Vec<bool>,
    ) -> Result<Self> {
        if keep.len() != out_scheme.n_groups * in_scheme.n_groups {
            return Err(Error::shape(format!(
                "keep matrix has {} entries, expected {}x{}",
                keep.len(),
                out_scheme.n_groups,
                in_scheme.n_groups
            )));
        }
        Ok(PruneMask {
            layer_pair,
            out_scheme,
            in_scheme,
            keep,
        })
    }

    pub fn full(layer_pair: (usize, usize), out_scheme: GroupScheme, in_scheme: GroupScheme) -> Self {
        let n = out_scheme.n_groups * in_scheme.n_groups;
        PruneMask {
            layer_pair,
            out_scheme,
            in_scheme,
            keep: alloc::vec![true; n],
        }
    }

    pub fn keep(&self) -> &[bool] {
        &self.keep
    }

    pub fn is_kept(&self, i: usize, j: usize) -> bool {
        self.keep[i * self.in_scheme.n_groups + j]
    }

    pub fn out_filters(&self) -> usize {
        self.out_scheme.n_filters
    }

    pub fn in_filters(&self) -> usize {
        self.in_scheme.n_filters
    }

    pub fn pruned_groups(&self) -> usize {
        self.keep.iter().filter(|k| !**k).count()
    }

    /// Number of (out filter, in filter) pairs left intact.
    pub fn kept_filter_pairs(&self) -> usize {
        let mut n = 0;
        for i in 0..self.out_scheme.n_groups {
            for j in 0..self.in_scheme.n_groups {
                if self.is_kept(i, j) {
                    n += self.out_scheme.size(i) * self.in_scheme.size(j);
                }
            }
        }
        n
    }

    pub fn filter_kept(&self, out: usize, inp: usize) -> bool {
        self.is_kept(self.out_scheme.group_of(out), self.in_scheme.group_of(inp))
    }

    /// out_filters x in_filters keep flags, row-major.
    pub fn expand(&self) -> Vec<bool> {
        let mut v = Vec::with_capacity(self.out_filters() * self.in_filters());
        for o in 0..self.out_filters() {
            for i in 0..self.in_filters() {
                v.push(self.filter_kept(o, i));
            }
        }
        v
    }

    /// Copy of `kernel` with every pruned pair's entries set to zero.
    pub fn apply(&self, kernel: &WeightKernel) -> Result<WeightKernel> {
        if kernel.out_filters() != self.out_filters() || kernel.in_filters() != self.in_filters() {
            return Err(Error::shape("mask does not match kernel"));
        }
        let area = kernel.area();
        let mut data = kernel.tensor().data().to_vec();
        for (p, kept) in self.expand().into_iter().enumerate() {
            if !kept {
                data[p * area..(p + 1) * area].iter_mut().for_each(|v| *v = 0.0);
            }
        }
        WeightKernel::new(
            kernel.layer_index,
            crate::tensor::Tensor::new(kernel.tensor().dtype(), kernel.tensor().shape().to_vec(), data)?,
        )
    }
}

/// Prunes scored pairs with score <= delta in ascending (score, i, j) order,
/// stopping before the pruned share of scored pairs would exceed gamma.
/// `delta` may be `f64::INFINITY`.
pub fn threshold_prune(scores: &ConnectivityMatrix, delta: f64, gamma: f64) -> Result<PruneMask> {
    if delta.is_nan() || delta < 0.0 {
        return Err(Error::config(format!("delta must be >= 0, got {delta}")));
    }
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::config(format!("gamma must be in [0, 1], got {gamma}")));
    }
    let (rows, cols) = (scores.rows(), scores.cols());
    let n_scored = scores.n_scored();
    let cap = libm::floor(gamma * n_scored as f64 + 1e-12) as usize;
    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    for i in 0..rows {
        for j in 0..cols {
            if let Some(s) = scores.get(i, j) {
                if s <= delta {
                    candidates.push((s, i, j));
                }
            }
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))));
    let mut keep = alloc::vec![true; rows * cols];
    for &(_, i, j) in candidates.iter().take(cap) {
        keep[i * cols + j] = false;
    }
    PruneMask::new(scores.layer_pair, scores.out_scheme, scores.in_scheme, keep)
}
