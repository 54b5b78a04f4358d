//! Quality curves: accuracy of a clean-trained classifier on activations of
//! a layer whose incoming connections are pruned to c%.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::svm::{train_linear_classifier, LinearClassifier, SvmOptions};
use super::{default_grid, QualityCurve};
use crate::error::{Error, Result};
use crate::estimator::{EstimatorConfig, PhiVariant};
use crate::exec::Executor;
use crate::matrix::Matrix;
use crate::pruning::{
    group_columns, pair_weights, score_layer_pair, threshold_prune, ConnectivityMatrix, GroupScheme, ScoreRequest,
};
use crate::sensitivity::FilterPartition;
use crate::toynet::{forward, layer_output, MlpSpec};

/// Order in which incoming connections are removed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeRanking {
    /// ascending connectivity score
    #[default]
    Acmi,
    /// ascending mean |w|
    Magnitude,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProbeOptions {
    /// compression percentages
    pub grid: Vec<f64>,
    pub ranking: ProbeRanking,
    pub groups: usize,
    pub phi: PhiVariant,
    pub estimator: EstimatorConfig,
    pub svm: SvmOptions,
    /// Layers to probe; `None` means every layer except the input, the first
    /// hidden layer and the output.
    pub layers: Option<Vec<usize>>,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        ProbeOptions {
            grid: default_grid(),
            ranking: ProbeRanking::Acmi,
            groups: 64,
            phi: PhiVariant::GaussWeight,
            estimator: EstimatorConfig::default(),
            svm: SvmOptions::default(),
            layers: None,
        }
    }
}

/// Accuracy of a fixed classifier on (pruned) activations.
pub fn measure_quality(clf: &LinearClassifier, pruned_acts: &Matrix, labels: &[usize]) -> Result<f64> {
    clf.accuracy(pruned_acts, labels)
}

fn split_rows(m: usize) -> (Vec<usize>, Vec<usize>) {
    ((0..m).step_by(2).collect(), (1..m).step_by(2).collect())
}

/// One curve per probed layer. Even rows train the classifier, odd rows
/// measure it; the connection ranking uses every row.
pub fn quality_curves<E: Executor>(
    spec: &MlpSpec,
    inputs: &Matrix,
    labels: &[usize],
    opts: &ProbeOptions,
    exec: &E,
) -> Result<Vec<QualityCurve>> {
    let n_layers = spec.n_layers();
    if labels.len() != inputs.rows() {
        return Err(Error::shape(format!("{} labels for {} samples", labels.len(), inputs.rows())));
    }
    let layers = opts
        .layers
        .clone()
        .unwrap_or_else(|| (2..n_layers.saturating_sub(1)).collect());
    if let Some(&bad) = layers.iter().find(|&&l| l == 0 || l >= n_layers) {
        return Err(Error::config(format!("cannot probe layer {bad}")));
    }
    let pass = forward(spec, inputs, None)?;
    let (train, test) = split_rows(inputs.rows());
    let train_labels: Vec<usize> = train.iter().map(|&t| labels[t]).collect();
    let test_labels: Vec<usize> = test.iter().map(|&t| labels[t]).collect();

    let mut curves = Vec::new();
    for &l in &layers {
        let kernel = &spec.weights[l - 1];
        let clf = train_linear_classifier(&pass.activations[l].select_rows(&train), &train_labels, &opts.svm)?;
        let in_scheme = GroupScheme::clamped(l - 1, spec.layer_sizes[l - 1], opts.groups)?;
        let out_scheme = GroupScheme::clamped(l, spec.layer_sizes[l], opts.groups)?;
        let weights = pair_weights(kernel, &out_scheme, &in_scheme)?;
        let ranking = match opts.ranking {
            ProbeRanking::Acmi => {
                let partition = FilterPartition::none(out_scheme.n_groups);
                let req = ScoreRequest {
                    layer_pair: (l - 1, l),
                    in_scheme,
                    out_scheme,
                    partition: &partition,
                    pair_weights: Some(&weights),
                    phi: opts.phi,
                    config: opts.estimator,
                };
                let a = group_columns(&pass.activations[l - 1], &in_scheme)?;
                let b = group_columns(&pass.activations[l], &out_scheme)?;
                score_layer_pair(&a, &b, &req, exec)?
            }
            ProbeRanking::Magnitude => ConnectivityMatrix {
                layer_pair: (l - 1, l),
                out_scheme,
                in_scheme,
                scores: weights.data().iter().map(|&w| Some(w)).collect(),
                phi: opts.phi,
                config: opts.estimator,
            },
        };
        let upstream = pass.activations[l - 1].select_rows(&test);
        let rectify = l + 1 < n_layers;
        let mut alphas = Vec::with_capacity(opts.grid.len());
        for &c in &opts.grid {
            let mask = threshold_prune(&ranking, f64::INFINITY, c / 100.0)?;
            let pruned = layer_output(&upstream, &mask.apply(kernel)?, rectify);
            alphas.push(measure_quality(&clf, &pruned, &test_labels)?);
        }
        curves.push(QualityCurve::new(l, opts.grid.clone(), alphas)?);
    }
    Ok(curves)
}
