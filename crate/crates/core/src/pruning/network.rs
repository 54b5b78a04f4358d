use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{
    group_columns, group_partition, pair_weights, score_layer_pair, threshold_prune, ConnectivityMatrix,
    GroupScheme, PruneMask, ScoreRequest,
};
use crate::error::{Error, Result};
use crate::estimator::{EstimatorConfig, PhiVariant};
use crate::exec::Executor;
use crate::network::Network;
use crate::sensitivity::{compute_sensitivity, FilterPartition};
use crate::tensor::{compression_percent, csr_memory, CsrStats, CSR_FORMULA};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PruneConfig {
    /// Upper pruning fraction per layer, indexed like the network's layers.
    /// Entry l limits the connections from layer l-1 into layer l; entry 0 is unused.
    pub gamma: Vec<f64>,
    /// Score threshold in phi units; `None` is unbounded.
    pub delta: Option<f64>,
    pub layer_delta: BTreeMap<usize, f64>,
    pub groups: usize,
    pub layer_groups: BTreeMap<usize, usize>,
    pub protect_fraction: f64,
    pub layer_protect: BTreeMap<usize, f64>,
    pub phi: PhiVariant,
    pub estimator: EstimatorConfig,
    pub value_width: usize,
    pub index_width: usize,
}

impl Default for PruneConfig {
    fn default() -> Self {
        PruneConfig {
            gamma: Vec::new(),
            delta: None,
            layer_delta: BTreeMap::new(),
            groups: 64,
            layer_groups: BTreeMap::new(),
            protect_fraction: 0.1,
            layer_protect: BTreeMap::new(),
            phi: PhiVariant::GaussWeight,
            estimator: EstimatorConfig::default(),
            value_width: 4,
            index_width: 4,
        }
    }
}

impl PruneConfig {
    pub fn delta_for(&self, layer: usize) -> Option<f64> {
        self.layer_delta.get(&layer).copied().or(self.delta)
    }

    pub fn groups_for(&self, layer: usize) -> usize {
        self.layer_groups.get(&layer).copied().unwrap_or(self.groups)
    }

    pub fn protect_for(&self, layer: usize) -> f64 {
        self.layer_protect.get(&layer).copied().unwrap_or(self.protect_fraction)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerReport {
    pub layer: usize,
    pub name: String,
    pub in_groups: usize,
    pub out_groups: usize,
    pub n_protected: usize,
    pub n_scored: usize,
    pub n_pruned: usize,
    /// n_pruned / n_scored over group pairs, 0 when nothing was scored
    pub pruned_fraction: f64,
    pub delta_used: Option<f64>,
    pub gamma_used: f64,
    pub params: usize,
    pub params_pruned: usize,
    pub csr: CsrStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportTotals {
    pub compression_percent: f64,
    pub params: usize,
    pub params_pruned: usize,
    pub csr_bytes: usize,
    pub csr_value_bytes: usize,
    pub csr_index_bytes: usize,
    pub value_width: usize,
    pub index_width: usize,
    pub csr_formula: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneReport {
    pub layers: Vec<LayerReport>,
    pub totals: ReportTotals,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PruneResult {
    /// One entry per layer; `masks[l]` covers the kernel feeding layer l.
    pub masks: Vec<Option<PruneMask>>,
    pub scores: Vec<Option<ConnectivityMatrix>>,
    pub report: PruneReport,
}

/// Sensitivity, grouping, scoring and thresholding for every adjacent layer pair.
pub fn prune_network<E: Executor>(net: &Network, cfg: &PruneConfig, exec: &E) -> Result<PruneResult> {
    let layers = net.layers();
    let n_layers = layers.len();
    if cfg.gamma.len() != n_layers {
        return Err(Error::config(format!(
            "gamma has {} entries for {} layers",
            cfg.gamma.len(),
            n_layers
        )));
    }
    if let Some(g) = cfg.gamma.iter().find(|g| !(0.0..=1.0).contains(*g)) {
        return Err(Error::config(format!("gamma {g} outside [0, 1]")));
    }

    let mut masks: Vec<Option<PruneMask>> = alloc::vec![None; n_layers];
    let mut scores: Vec<Option<ConnectivityMatrix>> = alloc::vec![None; n_layers];
    let mut reports = Vec::new();

    for l1 in 1..n_layers {
        let (src, dst) = (&layers[l1 - 1], &layers[l1]);
        let named = |e: Error| match e {
            Error::Layer { .. } => e,
            other => Error::layer(dst.name.clone(), other.to_string()),
        };
        let kernel = dst
            .kernel
            .as_ref()
            .ok_or_else(|| Error::layer(dst.name.clone(), "missing weight kernel"))?;
        let in_scheme = GroupScheme::clamped(l1 - 1, src.n_filters(), cfg.groups_for(l1 - 1)).map_err(named)?;
        let out_scheme = GroupScheme::clamped(l1, dst.n_filters(), cfg.groups_for(l1)).map_err(named)?;
        let gamma = cfg.gamma[l1];
        let delta = cfg.delta_for(l1);

        let (mask, partition) = if gamma == 0.0 {
            (PruneMask::full((l1 - 1, l1), out_scheme, in_scheme), FilterPartition::none(out_scheme.n_groups))
        } else {
            let fraction = cfg.protect_for(l1);
            let partition = match layers.get(l1 + 1).and_then(|l| l.kernel.as_ref()) {
                Some(down) if fraction > 0.0 => {
                    let s = compute_sensitivity(down).map_err(named)?;
                    group_partition(&s.lambda, &out_scheme, fraction).map_err(named)?
                }
                _ => FilterPartition::none(out_scheme.n_groups),
            };
            let acts_in = group_columns(&src.activations, &in_scheme).map_err(named)?;
            let acts_out = group_columns(&dst.activations, &out_scheme).map_err(named)?;
            let weights = if cfg.phi.uses_weight() {
                Some(pair_weights(kernel, &out_scheme, &in_scheme).map_err(named)?)
            } else {
                None
            };
            let req = ScoreRequest {
                layer_pair: (l1 - 1, l1),
                in_scheme,
                out_scheme,
                partition: &partition,
                pair_weights: weights.as_ref(),
                phi: cfg.phi,
                config: cfg.estimator,
            };
            let conn = score_layer_pair(&acts_in, &acts_out, &req, exec).map_err(named)?;
            let mask = threshold_prune(&conn, delta.unwrap_or(f64::INFINITY), gamma).map_err(named)?;
            scores[l1] = Some(conn);
            (mask, partition)
        };

        let n_scored = scores[l1].as_ref().map_or(0, ConnectivityMatrix::n_scored);
        let n_pruned = mask.pruned_groups();
        let params = kernel.n_params();
        let params_pruned = (mask.out_filters() * mask.in_filters() - mask.kept_filter_pairs()) * kernel.area();
        let csr = csr_memory(&mask, kernel, cfg.value_width, cfg.index_width)?;
        reports.push(LayerReport {
            layer: l1,
            name: dst.name.clone(),
            in_groups: in_scheme.n_groups,
            out_groups: out_scheme.n_groups,
            n_protected: partition.protected.len(),
            n_scored,
            n_pruned,
            pruned_fraction: if n_scored == 0 { 0.0 } else { n_pruned as f64 / n_scored as f64 },
            delta_used: delta,
            gamma_used: gamma,
            params,
            params_pruned,
            csr,
        });
        masks[l1] = Some(mask);
    }

    let mut aligned_masks = Vec::new();
    let mut kernels = Vec::new();
    let (mut csr_bytes, mut csr_value_bytes, mut csr_index_bytes) = (0, 0, 0);
    for (layer, mask) in layers.iter().zip(&masks) {
        if let Some(k) = &layer.kernel {
            let stats = match mask {
                Some(m) => csr_memory(m, k, cfg.value_width, cfg.index_width)?,
                None => CsrStats::new(
                    k.out_filters(),
                    k.in_filters() * k.area(),
                    k.n_params(),
                    cfg.value_width,
                    cfg.index_width,
                ),
            };
            csr_bytes += stats.bytes;
            csr_value_bytes += stats.value_bytes;
            csr_index_bytes += stats.index_bytes;
            aligned_masks.push(mask.clone());
            kernels.push(k);
        }
    }
    let totals = ReportTotals {
        compression_percent: compression_percent(&aligned_masks, &kernels)?,
        params: kernels.iter().map(|k| k.n_params()).sum(),
        params_pruned: reports.iter().map(|r| r.params_pruned).sum(),
        csr_bytes,
        csr_value_bytes,
        csr_index_bytes,
        value_width: cfg.value_width,
        index_width: cfg.index_width,
        csr_formula: CSR_FORMULA.to_string(),
    };
    Ok(PruneResult {
        masks,
        scores,
        report: PruneReport { layers: reports, totals },
    })
}
