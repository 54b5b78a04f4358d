//! Wall-clock experiments: estimator time against sample count, and
//! layer-pair scoring time against the number of groups.

use std::time::Instant;

use serde::Serialize;
use snacs_core::estimator::hash::derive_seed;
use snacs_core::pruning::{group_activations, pair_weights, score_layer_pair, GroupScheme, ScoreRequest};
use snacs_core::sensitivity::FilterPartition;
use snacs_core::stats::{linear_fit, median};
use snacs_core::tensor::ActivationSet;
use snacs_core::toynet::teacher_fixture;
use snacs_core::validation::null_sample;
use snacs_core::{estimate_acmi, EstimatorConfig, Executor, PhiSpec, PhiVariant};

pub const GROUP_GRID: [usize; 5] = [16, 32, 64, 128, 256];
pub const TIMING_SAMPLES: [usize; 5] = [5_000, 10_000, 20_000, 40_000, 80_000];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timing {
    pub x: f64,
    pub seconds: f64,
}

fn median_seconds(reps: usize, mut f: impl FnMut()) -> f64 {
    let t: Vec<f64> = (0..reps.max(1))
        .map(|_| {
            let start = Instant::now();
            f();
            start.elapsed().as_secs_f64()
        })
        .collect();
    median(&t)
}

/// One ACMI call per N on 1-D X, Y and 2-D Z, median of `reps` runs.
pub fn estimator_time_vs_n(grid: &[usize], reps: usize, seed: u64) -> snacs_core::Result<Vec<Timing>> {
    let mut out = Vec::new();
    for &n in grid {
        let (x, y, z) = null_sample(n, 1, 1, 2, derive_seed(seed, &[n as u64]));
        let cfg = EstimatorConfig::default().with_seed(seed);
        estimate_acmi(&x, &y, &z, &PhiSpec::constant(), &cfg)?;
        let secs = median_seconds(reps, || {
            let _ = estimate_acmi(&x, &y, &z, &PhiSpec::constant(), &cfg);
        });
        out.push(Timing { x: n as f64, seconds: secs });
    }
    Ok(out)
}

/// Slope of log(seconds) against log(x).
pub fn scaling_exponent(points: &[Timing]) -> f64 {
    let lx: Vec<f64> = points.iter().map(|p| p.x.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.seconds.max(1e-9).ln()).collect();
    linear_fit(&lx, &ly).0
}

/// Scores the (1, 2) pair of a [20, filters, filters, 10] teacher network with
/// `m` samples for each group count in `grid`.
pub fn runtime_vs_groups<E: Executor>(
    grid: &[usize],
    filters: usize,
    m: usize,
    phi: PhiVariant,
    reps: usize,
    seed: u64,
    exec: &E,
) -> snacs_core::Result<Vec<Timing>> {
    let fix = teacher_fixture(&[20, filters, filters, 10], m, 3.0, seed)?;
    let acts_in = ActivationSet::new(1, fix.pass.activations[1].clone());
    let acts_out = ActivationSet::new(2, fix.pass.activations[2].clone());
    let kernel = &fix.spec.weights[1];
    let mut out = Vec::new();
    for &g in grid {
        let in_scheme = GroupScheme::clamped(1, filters, g)?;
        let out_scheme = GroupScheme::clamped(2, filters, g)?;
        let a = group_activations(&acts_in, &in_scheme)?;
        let b = group_activations(&acts_out, &out_scheme)?;
        let weights = pair_weights(kernel, &out_scheme, &in_scheme)?;
        let partition = FilterPartition::none(out_scheme.n_groups);
        let req = ScoreRequest {
            layer_pair: (1, 2),
            in_scheme,
            out_scheme,
            partition: &partition,
            pair_weights: Some(&weights),
            phi,
            config: EstimatorConfig::default().with_seed(seed),
        };
        let mut failure = None;
        let secs = median_seconds(reps, || {
            if let Err(e) = score_layer_pair(&a, &b, &req, exec) {
                failure = Some(e);
            }
        });
        if let Some(e) = failure {
            return Err(e);
        }
        out.push(Timing { x: g as f64, seconds: secs });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponent_of_exact_power_law() {
        let pts: Vec<Timing> = [1.0, 2.0, 4.0, 8.0]
            .iter()
            .map(|&x: &f64| Timing { x, seconds: 0.5 * x.powf(1.2) })
            .collect();
        assert!((scaling_exponent(&pts) - 1.2).abs() < 1e-12);
    }
}
