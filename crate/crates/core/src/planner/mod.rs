//! Per-layer pruning limits from classifier quality curves.
//!
//! For each prunable layer a linear classifier is trained on clean
//! activations and scored on activations of the same layer pruned to c%.
//! Layers whose best accuracy is near the top of the network get the largest
//! c that stays above chance. The remaining layers share what is left of the
//! budget tau through a common accuracy threshold.

pub mod probe;
pub mod svm;

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use probe::{measure_quality, quality_curves, ProbeOptions, ProbeRanking};
pub use svm::{train_linear_classifier, LinearClassifier, SvmOptions};

/// Spacing of the default compression grid, as a fraction.
pub const GRID_STEP: f64 = 0.05;

/// c in {1, 6, 11, ..., 96}.
pub fn default_grid() -> Vec<f64> {
    (0..20).map(|k| (1 + 5 * k) as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityCurve {
    pub layer_index: usize,
    /// compression percentages, ascending
    pub c_values: Vec<f64>,
    /// classifier accuracy at each c
    pub alpha_values: Vec<f64>,
}

impl QualityCurve {
    pub fn new(layer_index: usize, c_values: Vec<f64>, alpha_values: Vec<f64>) -> Result<Self> {
        if c_values.len() != alpha_values.len() || c_values.is_empty() {
            return Err(Error::shape(format!(
                "layer {layer_index}: {} c values, {} alpha values",
                c_values.len(),
                alpha_values.len()
            )));
        }
        if c_values.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::config(format!("layer {layer_index}: c values must ascend")));
        }
        if c_values.iter().any(|c| !(0.0..=100.0).contains(c)) {
            return Err(Error::config(format!("layer {layer_index}: c outside [0, 100]")));
        }
        if alpha_values.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::config(format!("layer {layer_index}: alpha outside [0, 1]")));
        }
        Ok(QualityCurve {
            layer_index,
            c_values,
            alpha_values,
        })
    }

    pub fn peak(&self) -> f64 {
        self.alpha_values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Running minimum of alpha along c.
    pub fn envelope(&self) -> Vec<f64> {
        let mut lo = f64::INFINITY;
        self.alpha_values
            .iter()
            .map(|&a| {
                lo = lo.min(a);
                lo
            })
            .collect()
    }
}

/// How the layers that keep their above-chance limit are selected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "fraction")]
pub enum TopRule {
    /// peak >= min + (1 - fraction) * (max - min) over all peaks
    Range(f64),
    /// peak at or above the (1 - fraction) quantile of all peaks
    Percentile(f64),
}

impl Default for TopRule {
    fn default() -> Self {
        TopRule::Range(0.8)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrunePlan {
    /// One fraction per network layer.
    pub gamma: Vec<f64>,
    pub tau: f64,
    pub members_of_m: Vec<usize>,
    /// Accuracy threshold for the remaining layers; `None` when none of them is pruned.
    pub alpha_threshold: Option<f64>,
}

impl PrunePlan {
    pub fn total(&self) -> f64 {
        self.gamma.iter().sum()
    }
}

fn top_members(curves: &[QualityCurve], rule: TopRule) -> BTreeSet<usize> {
    let peaks: Vec<f64> = curves.iter().map(QualityCurve::peak).collect();
    let lo = peaks.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = peaks.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let cut = match rule {
        TopRule::Range(f) => lo + (1.0 - f) * (hi - lo),
        TopRule::Percentile(f) => crate::stats::quantile(&peaks, 1.0 - f),
    };
    curves
        .iter()
        .zip(&peaks)
        .filter(|(_, &p)| p >= cut)
        .map(|(c, _)| c.layer_index)
        .collect()
}

/// Assigns gamma per layer so that the total lands within one grid step of `tau`.
///
/// Layers in the top set get the largest c with alpha > 1 / num_classes.
/// The other layers admit grid points in order of decreasing running-minimum
/// accuracy (the common threshold) for as long as the total stays <= tau;
/// equal accuracies are admitted smaller c first, then lower layer first.
/// `tau = 0` yields an all-zero plan. Layers without a curve get 0.
pub fn assign_gammas(
    curves: &[QualityCurve],
    tau: f64,
    num_classes: usize,
    n_layers: usize,
    rule: TopRule,
) -> Result<PrunePlan> {
    if num_classes < 2 {
        return Err(Error::TooFewClasses { found: num_classes });
    }
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::config(format!("tau must be finite and >= 0, got {tau}")));
    }
    let mut layers = BTreeSet::new();
    for c in curves {
        if c.layer_index >= n_layers {
            return Err(Error::config(format!("curve for layer {} outside the network", c.layer_index)));
        }
        if !layers.insert(c.layer_index) {
            return Err(Error::config(format!("two curves for layer {}", c.layer_index)));
        }
    }
    let mut gamma = alloc::vec![0.0; n_layers];
    if tau == 0.0 || curves.is_empty() {
        if tau > GRID_STEP {
            return Err(Error::InfeasibleTau { tau, min: 0.0, max: GRID_STEP });
        }
        return Ok(PrunePlan {
            gamma,
            tau,
            members_of_m: Vec::new(),
            alpha_threshold: None,
        });
    }

    let members = top_members(curves, rule);
    let chance = 1.0 / num_classes as f64;
    let mut base = 0.0;
    let mut max_total = 0.0;
    // (threshold, c, layer, increment)
    let mut steps: Vec<(f64, f64, usize, f64)> = Vec::new();
    for curve in curves {
        if members.contains(&curve.layer_index) {
            let g = curve
                .c_values
                .iter()
                .zip(&curve.alpha_values)
                .filter(|(_, &a)| a > chance)
                .map(|(&c, _)| c / 100.0)
                .fold(0.0, f64::max);
            gamma[curve.layer_index] = g;
            base += g;
            max_total += g;
        } else {
            let mut prev = 0.0;
            for (&c, &e) in curve.c_values.iter().zip(&curve.envelope()) {
                steps.push((e, c, curve.layer_index, c / 100.0 - prev));
                prev = c / 100.0;
            }
            max_total += prev;
        }
    }
    let (min, max) = (base - GRID_STEP, max_total + GRID_STEP);
    if tau < min || tau > max {
        return Err(Error::InfeasibleTau { tau, min, max });
    }

    steps.sort_by(|a, b| {
        b.0.total_cmp(&a.0)
            .then(a.1.total_cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });
    let mut total = base;
    let mut threshold = None;
    for &(e, c, layer, inc) in &steps {
        if total + inc > tau + 1e-12 {
            break;
        }
        // a layer's envelope is non-increasing, so its steps arrive in c order
        gamma[layer] = c / 100.0;
        total += inc;
        threshold = Some(e);
    }
    Ok(PrunePlan {
        gamma,
        tau,
        members_of_m: members.into_iter().collect(),
        alpha_threshold: threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn curve(layer: usize, alphas: &[f64]) -> QualityCurve {
        QualityCurve::new(layer, default_grid(), alphas.to_vec()).unwrap()
    }

    #[test]
    fn grid() {
        let g = default_grid();
        assert_eq!(g.len(), 20);
        assert_eq!((g[0], g[19]), (1.0, 96.0));
    }

    #[test]
    fn above_chance_through_96() {
        let plan = assign_gammas(&[curve(1, &[0.9; 20])], 0.96, 10, 3, TopRule::default()).unwrap();
        assert_eq!(plan.gamma, vec![0.0, 0.96, 0.0]);
        assert_eq!(plan.members_of_m, vec![1]);
    }

    #[test]
    fn drop_below_chance_after_46() {
        // c = 46 is index 9
        let a: Vec<f64> = (0..20).map(|k| if k <= 9 { 0.8 } else { 0.05 }).collect();
        let plan = assign_gammas(&[curve(1, &a)], 0.46, 10, 2, TopRule::default()).unwrap();
        assert_eq!(plan.gamma[1], 0.46);
    }

    #[test]
    fn zero_tau_is_all_zero() {
        let plan = assign_gammas(&[curve(1, &[0.9; 20]), curve(2, &[0.3; 20])], 0.0, 10, 3, TopRule::default())
            .unwrap();
        assert!(plan.gamma.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn remaining_layers_fill_budget() {
        let hi = curve(1, &[0.9; 20]);
        let lo_a: Vec<f64> = (0..20).map(|k| 0.4 - 0.01 * k as f64).collect();
        let lo_b: Vec<f64> = (0..20).map(|k| 0.35 - 0.015 * k as f64).collect();
        let curves = [hi, curve(2, &lo_a), curve(3, &lo_b)];
        for tau in [0.96, 1.2, 1.5, 2.0, 2.5, 2.88] {
            let plan = assign_gammas(&curves, tau, 10, 4, TopRule::Range(0.2)).unwrap();
            assert!((plan.total() - tau).abs() <= GRID_STEP + 1e-9, "tau {tau}: {:?}", plan.gamma);
        }
        assert!(matches!(
            assign_gammas(&curves, 0.5, 10, 4, TopRule::Range(0.2)),
            Err(Error::InfeasibleTau { .. })
        ));
        assert!(assign_gammas(&curves, 3.5, 10, 4, TopRule::Range(0.2)).is_err());
    }

    #[test]
    fn percentile_rule() {
        let curves = [curve(1, &[0.9; 20]), curve(2, &[0.5; 20]), curve(3, &[0.2; 20])];
        let m = top_members(&curves, TopRule::Percentile(0.5));
        assert_eq!(m.into_iter().collect::<Vec<_>>(), vec![1, 2]);
    }
}
