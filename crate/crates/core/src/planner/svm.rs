//! One-vs-rest linear SVM trained with the Pegasos subgradient method.

use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmOptions {
    pub epochs: usize,
    pub reg: f64,
    pub seed: u64,
}

impl Default for SvmOptions {
    fn default() -> Self {
        SvmOptions {
            epochs: 20,
            reg: 1e-4,
            seed: 0,
        }
    }
}

/// Features are standardized with the training statistics, then a constant
/// 1 is appended as bias input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearClassifier {
    pub n_classes: usize,
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    /// n_classes x (d + 1), bias weight last
    pub weights: Matrix,
}

fn column_stats(x: &Matrix) -> (Vec<f64>, Vec<f64>) {
    let n = x.rows() as f64;
    let mut mean = Vec::with_capacity(x.cols());
    let mut scale = Vec::with_capacity(x.cols());
    for c in 0..x.cols() {
        let col = x.column(c);
        let mu = col.iter().sum::<f64>() / n;
        let var = col.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n;
        let sd = libm::sqrt(var);
        mean.push(mu);
        scale.push(if sd > 0.0 { sd } else { 1.0 });
    }
    (mean, scale)
}

impl LinearClassifier {
    fn features(&self, row: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(row.iter().zip(&self.mean).zip(&self.scale).map(|((v, m), s)| (v - m) / s));
        out.push(1.0);
    }

    pub fn n_features(&self) -> usize {
        self.mean.len()
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<usize>> {
        if x.cols() != self.n_features() {
            return Err(Error::shape(format!(
                "classifier expects {} features, got {}",
                self.n_features(),
                x.cols()
            )));
        }
        let mut buf = Vec::new();
        Ok((0..x.rows())
            .map(|r| {
                self.features(x.row(r), &mut buf);
                let mut best = 0;
                let mut best_score = f64::NEG_INFINITY;
                for k in 0..self.n_classes {
                    let s: f64 = self.weights.row(k).iter().zip(&buf).map(|(w, v)| w * v).sum();
                    if s > best_score {
                        best = k;
                        best_score = s;
                    }
                }
                best
            })
            .collect())
    }

    /// Fraction of rows predicted correctly.
    pub fn accuracy(&self, x: &Matrix, labels: &[usize]) -> Result<f64> {
        if labels.len() != x.rows() {
            return Err(Error::shape("label count differs from row count"));
        }
        if labels.is_empty() {
            return Err(Error::Empty("no samples to score".into()));
        }
        let pred = self.predict(x)?;
        let hits = pred.iter().zip(labels).filter(|(p, l)| p == l).count();
        Ok(hits as f64 / labels.len() as f64)
    }
}

pub fn train_linear_classifier(x: &Matrix, labels: &[usize], opts: &SvmOptions) -> Result<LinearClassifier> {
    if labels.len() != x.rows() {
        return Err(Error::shape(format!("{} labels for {} samples", labels.len(), x.rows())));
    }
    if let Some(index) = x.data().iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    if !(opts.reg > 0.0) {
        return Err(Error::config("regularization must be positive"));
    }
    let n_classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut seen = alloc::vec![false; n_classes];
    labels.iter().for_each(|&l| seen[l] = true);
    let found = seen.iter().filter(|s| **s).count();
    if found < 2 {
        return Err(Error::TooFewClasses { found });
    }

    let (mean, scale) = column_stats(x);
    let d = x.cols() + 1;
    let mut clf = LinearClassifier {
        n_classes,
        mean,
        scale,
        weights: Matrix::zeros(n_classes, d),
    };
    let feats: Vec<Vec<f64>> = (0..x.rows())
        .map(|r| {
            let mut f = Vec::new();
            clf.features(x.row(r), &mut f);
            f
        })
        .collect();

    let radius = 1.0 / libm::sqrt(opts.reg);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut order: Vec<usize> = (0..x.rows()).collect();
    let mut w = alloc::vec![alloc::vec![0.0; d]; n_classes];
    let mut step = 0usize;
    for _ in 0..opts.epochs {
        order.shuffle(&mut rng);
        for &t in &order {
            step += 1;
            let eta = 1.0 / (opts.reg * step as f64);
            let f = &feats[t];
            for (k, wk) in w.iter_mut().enumerate() {
                let y = if labels[t] == k { 1.0 } else { -1.0 };
                let margin = y * wk.iter().zip(f).map(|(a, b)| a * b).sum::<f64>();
                let shrink = 1.0 - eta * opts.reg;
                wk.iter_mut().for_each(|v| *v *= shrink);
                if margin < 1.0 {
                    wk.iter_mut().zip(f).for_each(|(v, b)| *v += eta * y * b);
                }
                let norm = libm::sqrt(wk.iter().map(|v| v * v).sum::<f64>());
                if norm > radius {
                    let s = radius / norm;
                    wk.iter_mut().for_each(|v| *v *= s);
                }
            }
        }
    }
    for (k, wk) in w.iter().enumerate() {
        for (c, &v) in wk.iter().enumerate() {
            clf.weights.set(k, c, v);
        }
    }
    Ok(clf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toynet::synth_dataset;

    #[test]
    fn separable_blobs() {
        let data = synth_dataset(2, 500, 2, 5.0, 3).unwrap();
        let clf = train_linear_classifier(&data.features, &data.labels, &SvmOptions::default()).unwrap();
        assert!(clf.accuracy(&data.features, &data.labels).unwrap() >= 0.99);
    }

    #[test]
    fn deterministic_and_validated() {
        let data = synth_dataset(3, 90, 4, 2.0, 1).unwrap();
        let opts = SvmOptions { seed: 5, ..SvmOptions::default() };
        let a = train_linear_classifier(&data.features, &data.labels, &opts).unwrap();
        let b = train_linear_classifier(&data.features, &data.labels, &opts).unwrap();
        assert_eq!(a, b);
        let one = alloc::vec![0usize; 90];
        assert_eq!(
            train_linear_classifier(&data.features, &one, &opts),
            Err(Error::TooFewClasses { found: 1 })
        );
        assert!(a.predict(&Matrix::zeros(2, 3)).is_err());
    }
}
