//! Filter sensitivity from the downstream kernel and the protected/prunable split.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::WeightKernel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityScores {
    /// Layer whose filters are scored (the downstream kernel's input side).
    pub layer_index: usize,
    pub lambda: Vec<f64>,
    /// Row sums C(f_c) of the averaged downstream kernel.
    pub normalizers: Vec<f64>,
    /// Downstream filters with C = 0, left out of every lambda.
    pub skipped_rows: Vec<usize>,
}

/// lambda_i = sum_c Wbar(c, i) / C(c), with Wbar the mean of |W| over the
/// kernel window and C(c) = sum_p Wbar(c, p).
pub fn compute_sensitivity(downstream: &WeightKernel) -> Result<SensitivityScores> {
    let wbar = downstream.abs_mean();
    let (n_out, n_in) = (wbar.rows(), wbar.cols());
    let normalizers: Vec<f64> = (0..n_out).map(|c| wbar.row(c).iter().sum()).collect();
    let skipped_rows: Vec<usize> = (0..n_out).filter(|&c| normalizers[c] == 0.0).collect();
    if skipped_rows.len() == n_out {
        return Err(Error::layer(
            format!("{}", downstream.layer_index),
            "every downstream filter has an all-zero kernel",
        ));
    }
    let mut lambda = alloc::vec![0.0; n_in];
    for c in 0..n_out {
        let norm = normalizers[c];
        if norm == 0.0 {
            continue;
        }
        for (l, &w) in lambda.iter_mut().zip(wbar.row(c)) {
            *l += w / norm;
        }
    }
    Ok(SensitivityScores {
        layer_index: downstream.layer_index.saturating_sub(1),
        lambda,
        normalizers,
        skipped_rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterPartition {
    pub protected: Vec<usize>,
    pub prunable: Vec<usize>,
    pub protect_fraction: f64,
}

impl FilterPartition {
    /// No protected members among `n`.
    pub fn none(n: usize) -> Self {
        FilterPartition {
            protected: Vec::new(),
            prunable: (0..n).collect(),
            protect_fraction: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.protected.len() + self.prunable.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_protected(&self, i: usize) -> bool {
        self.protected.binary_search(&i).is_ok()
    }

    /// Protection flag per index.
    pub fn flags(&self) -> Vec<bool> {
        let mut f = alloc::vec![false; self.len()];
        for &i in &self.protected {
            f[i] = true;
        }
        f
    }
}

/// ceil(fraction * n), tolerant of representation error in the product.
pub fn protected_count(n: usize, fraction: f64) -> usize {
    let c = libm::ceil(fraction * n as f64 - 1e-9);
    (c.max(0.0) as usize).min(n)
}

/// Protects the ceil(fraction * n) largest values; ties go to the lower index.
pub fn partition_values(values: &[f64], fraction: f64) -> Result<FilterPartition> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::config(format!("protect fraction {fraction} outside [0, 1)")));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::Domain("sensitivity contains NaN".into()));
    }
    let n = values.len();
    let k = protected_count(n, fraction);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let mut protected: Vec<usize> = order[..k].to_vec();
    protected.sort_unstable();
    let prunable = (0..n).filter(|i| protected.binary_search(i).is_err()).collect();
    Ok(FilterPartition {
        protected,
        prunable,
        protect_fraction: fraction,
    })
}

pub fn partition_by_sensitivity(scores: &SensitivityScores, protect_fraction: f64) -> Result<FilterPartition> {
    partition_values(&scores.lambda, protect_fraction)
}

/// (value, count) histogram with `bins` equal-width bins over [min, max].
/// `value` is the bin centre.
pub fn lambda_histogram(lambda: &[f64], bins: usize) -> Vec<(f64, usize)> {
    if lambda.is_empty() || bins == 0 {
        return Vec::new();
    }
    let lo = lambda.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = lambda.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut counts = alloc::vec![0usize; bins];
    for &v in lambda {
        let b = (((v - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(b, c)| (lo + (b as f64 + 0.5) * width, c))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn kernel(rows: usize, cols: usize, v: &[f64]) -> WeightKernel {
        WeightKernel::dense(2, rows, cols, v.to_vec()).unwrap()
    }

    #[test]
    fn worked_examples() {
        let s = compute_sensitivity(&kernel(2, 2, &[1.0, 1.0, 1.0, 1.0])).unwrap();
        assert_eq!(s.lambda, vec![1.0, 1.0]);
        let s = compute_sensitivity(&kernel(2, 2, &[2.0, 0.0, 0.0, 2.0])).unwrap();
        assert_eq!(s.lambda, vec![1.0, 1.0]);
        let s = compute_sensitivity(&kernel(2, 2, &[3.0, 1.0, 1.0, 1.0])).unwrap();
        assert_eq!(s.lambda, vec![1.25, 0.75]);
        assert_eq!(s.layer_index, 1);
    }

    #[test]
    fn zero_rows_are_skipped() {
        let s = compute_sensitivity(&kernel(3, 2, &[1.0, 1.0, 0.0, 0.0, 2.0, 2.0])).unwrap();
        assert_eq!(s.skipped_rows, vec![1]);
        assert_eq!(s.lambda.iter().sum::<f64>(), 2.0);
        assert!(compute_sensitivity(&kernel(1, 2, &[0.0, 0.0])).is_err());
    }

    #[test]
    fn partition_examples() {
        let p = partition_values(&[1.25, 0.75], 0.5).unwrap();
        assert_eq!(p.protected, vec![0]);
        assert_eq!(p.prunable, vec![1]);
        assert!(partition_values(&[1.25, 0.75], 0.0).unwrap().protected.is_empty());
        let p = partition_values(&[1.0; 8], 0.25).unwrap();
        assert_eq!(p.protected, vec![0, 1]);
        assert!(partition_values(&[1.0], 1.0).is_err());
        assert_eq!(protected_count(30, 0.1), 3);
    }

    #[test]
    fn histogram_counts_everything() {
        let h = lambda_histogram(&[0.0, 0.5, 1.0, 1.0], 2);
        assert_eq!(h.iter().map(|b| b.1).sum::<usize>(), 4);
        assert_eq!(h[1].1, 3);
    }
}
