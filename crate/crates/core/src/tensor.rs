//! Tensor payloads, activation/weight views and storage accounting.

use alloc::format;
use core::borrow::Borrow;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::pruning::PruneMask;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DType {
    F32,
    F64,
}

impl DType {
    pub fn width(self) -> usize {
        match self {
            DType::F32 => 4,
            DType::F64 => 8,
        }
    }
}

/// Row-major numeric payload. `f32` data is widened losslessly to `f64`
/// and narrowed back on write, so round trips are bit-exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    dtype: DType,
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(dtype: DType, shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let expected = shape
            .iter()
            .try_fold(1usize, |acc, &s| acc.checked_mul(s))
            .ok_or_else(|| Error::shape("shape product overflows"))?;
        if expected != data.len() {
            return Err(Error::shape(format!(
                "shape {shape:?} holds {expected} elements, buffer has {}",
                data.len()
            )));
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        if dtype == DType::F32 {
            if let Some(index) = data.iter().position(|&v| (v as f32) as f64 != v) {
                return Err(Error::Domain(format!(
                    "value at flat index {index} is not representable as f32"
                )));
            }
        }
        Ok(Tensor { dtype, shape, data })
    }

    pub fn from_f32(shape: Vec<usize>, data: &[f32]) -> Result<Self> {
        Tensor::new(DType::F32, shape, data.iter().map(|&v| v as f64).collect())
    }

    pub fn from_matrix(m: &Matrix) -> Self {
        Tensor {
            dtype: DType::F64,
            shape: alloc::vec![m.rows(), m.cols()],
            data: m.data().to_vec(),
        }
    }

    pub fn dtype(&self) -> DType {
        self.dtype
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Interprets a 1-D tensor as a column and a 2-D tensor as samples x features.
    pub fn to_matrix(&self) -> Result<Matrix> {
        match self.shape.as_slice() {
            [_] => Ok(Matrix::from_column(&self.data)),
            [r, c] => Matrix::new(*r, *c, self.data.clone()),
            s => Err(Error::shape(format!("expected 1-D or 2-D tensor, got shape {s:?}"))),
        }
    }
}

/// Per-sample scalar activations of one layer (samples x filters).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivationSet {
    pub layer_index: usize,
    pub samples: Matrix,
    pub class_labels: Option<Vec<usize>>,
}

impl ActivationSet {
    pub fn new(layer_index: usize, samples: Matrix) -> Self {
        ActivationSet {
            layer_index,
            samples,
            class_labels: None,
        }
    }

    pub fn with_labels(mut self, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if labels.len() != self.samples.rows() {
            return Err(Error::shape(format!(
                "{} labels for {} samples",
                labels.len(),
                self.samples.rows()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::Domain(format!("label {bad} outside [0, {num_classes})")));
        }
        self.class_labels = Some(labels);
        Ok(self)
    }

    pub fn n_samples(&self) -> usize {
        self.samples.rows()
    }

    pub fn n_filters(&self) -> usize {
        self.samples.cols()
    }
}

/// Collapses every axis after (sample, filter) to its arithmetic mean.
pub fn average_spatial(layer_index: usize, t: &Tensor) -> Result<ActivationSet> {
    let shape = t.shape();
    if shape.len() < 2 {
        return Err(Error::shape(format!(
            "activations need (sample, filter, ...) axes, got shape {shape:?}"
        )));
    }
    let (m, n) = (shape[0], shape[1]);
    let area: usize = shape[2..].iter().product();
    if area == 0 {
        return Err(Error::shape("empty spatial extent"));
    }
    let mut out = Vec::with_capacity(m * n);
    for block in t.data().chunks_exact(area) {
        out.push(block.iter().sum::<f64>() / area as f64);
    }
    Ok(ActivationSet::new(layer_index, Matrix::new(m, n, out)?))
}

/// Incoming kernel of a layer: (out, in, kh, kw) for conv, (out, in) for dense.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightKernel {
    pub layer_index: usize,
    tensor: Tensor,
}

impl WeightKernel {
    pub fn new(layer_index: usize, tensor: Tensor) -> Result<Self> {
        match tensor.shape().len() {
            2 | 4 => {}
            d => {
                return Err(Error::shape(format!(
                    "weight kernel must be 2-D or 4-D, got {d}-D"
                )))
            }
        }
        if tensor.shape()[0] == 0 || tensor.shape()[1] == 0 {
            return Err(Error::shape("weight kernel has an empty filter axis"));
        }
        Ok(WeightKernel { layer_index, tensor })
    }

    pub fn dense(layer_index: usize, out: usize, inp: usize, data: Vec<f64>) -> Result<Self> {
        WeightKernel::new(
            layer_index,
            Tensor::new(DType::F64, alloc::vec![out, inp], data)?,
        )
    }

    pub fn tensor(&self) -> &Tensor {
        &self.tensor
    }

    pub fn out_filters(&self) -> usize {
        self.tensor.shape()[0]
    }

    pub fn in_filters(&self) -> usize {
        self.tensor.shape()[1]
    }

    /// kh * kw, or 1 for dense kernels.
    pub fn area(&self) -> usize {
        self.tensor.shape()[2..].iter().product()
    }

    pub fn n_params(&self) -> usize {
        self.tensor.len()
    }

    /// Entries for one (out, in) filter pair.
    pub fn pair(&self, out: usize, inp: usize) -> &[f64] {
        let a = self.area();
        let start = (out * self.in_filters() + inp) * a;
        &self.tensor.data()[start..start + a]
    }

    /// out x in matrix of mean |w| over the kernel window.
    pub fn abs_mean(&self) -> Matrix {
        let (o, i, a) = (self.out_filters(), self.in_filters(), self.area());
        let data = self
            .tensor
            .data()
            .chunks_exact(a)
            .map(|w| w.iter().map(|v| v.abs()).sum::<f64>() / a as f64)
            .collect();
        Matrix::new(o, i, data).expect("kernel shape is consistent")
    }

    /// Same kernel with every entry multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Result<Self> {
        let data = self.tensor.data().iter().map(|v| v * k).collect();
        WeightKernel::new(
            self.layer_index,
            Tensor::new(DType::F64, self.tensor.shape().to_vec(), data)?,
        )
    }
}

/// Storage of a kernel flattened to out x (in * kh * kw) in compressed sparse row form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsrStats {
    pub rows: usize,
    pub cols: usize,
    pub nnz: usize,
    pub value_width: usize,
    pub index_width: usize,
    /// value_width * nnz
    pub value_bytes: usize,
    /// index_width * (nnz + rows + 1): column indices plus row pointers
    pub index_bytes: usize,
    pub bytes: usize,
}

impl CsrStats {
    pub fn new(rows: usize, cols: usize, nnz: usize, value_width: usize, index_width: usize) -> Self {
        let value_bytes = value_width * nnz;
        let index_bytes = index_width * nnz + index_width * (rows + 1);
        CsrStats {
            rows,
            cols,
            nnz,
            value_width,
            index_width,
            value_bytes,
            index_bytes,
            bytes: value_bytes + index_bytes,
        }
    }
}

pub const CSR_FORMULA: &str = "bytes = value_width*nnz + index_width*nnz + index_width*(rows+1)";

fn check_width(w: usize) -> Result<()> {
    if w == 4 || w == 8 {
        Ok(())
    } else {
        Err(Error::config(format!("CSR widths must be 4 or 8 bytes, got {w}")))
    }
}

/// CSR footprint of `kernel` after zeroing every (out, in) pair the mask prunes.
pub fn csr_memory(
    mask: &PruneMask,
    kernel: &WeightKernel,
    value_width: usize,
    index_width: usize,
) -> Result<CsrStats> {
    check_width(value_width)?;
    check_width(index_width)?;
    if mask.out_filters() != kernel.out_filters() || mask.in_filters() != kernel.in_filters() {
        return Err(Error::shape(format!(
            "mask covers {}x{} filters, kernel is {}x{}",
            mask.out_filters(),
            mask.in_filters(),
            kernel.out_filters(),
            kernel.in_filters()
        )));
    }
    let nnz = mask.kept_filter_pairs() * kernel.area();
    Ok(CsrStats::new(
        kernel.out_filters(),
        kernel.in_filters() * kernel.area(),
        nnz,
        value_width,
        index_width,
    ))
}

/// Percentage of prunable kernel parameters removed by the masks.
/// `masks[i]` applies to `kernels[i]`; `None` means the kernel is untouched.
pub fn compression_percent<K: Borrow<WeightKernel>>(
    masks: &[Option<PruneMask>],
    kernels: &[K],
) -> Result<f64> {
    if masks.len() != kernels.len() {
        return Err(Error::shape(format!(
            "{} masks for {} kernels",
            masks.len(),
            kernels.len()
        )));
    }
    let mut total = 0usize;
    let mut pruned = 0usize;
    for (mask, kernel) in masks.iter().zip(kernels) {
        let kernel = kernel.borrow();
        total += kernel.n_params();
        if let Some(mask) = mask {
            if mask.out_filters() != kernel.out_filters() || mask.in_filters() != kernel.in_filters()
            {
                return Err(Error::shape(format!(
                    "mask for layer {} does not match its kernel",
                    kernel.layer_index
                )));
            }
            pruned += (mask.out_filters() * mask.in_filters() - mask.kept_filter_pairs())
                * kernel.area();
        }
    }
    if total == 0 {
        return Ok(0.0);
    }
    Ok(100.0 * pruned as f64 / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pruning::GroupScheme;
    use alloc::vec;

    fn mask_from(out: usize, inp: usize, keep: Vec<bool>) -> PruneMask {
        PruneMask::new(
            (0, 1),
            GroupScheme::new(1, out, out).unwrap(),
            GroupScheme::new(0, inp, inp).unwrap(),
            keep,
        )
        .unwrap()
    }

    #[test]
    fn tensor_rejects_nan_with_index() {
        let err = Tensor::new(DType::F64, vec![2, 2], vec![0.0, 1.0, f64::NAN, 3.0]).unwrap_err();
        assert_eq!(err, Error::NonFinite { index: 2 });
    }

    #[test]
    fn tensor_rejects_shape_mismatch() {
        assert!(matches!(
            Tensor::new(DType::F64, vec![2, 3], vec![0.0; 5]),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn average_spatial_examples() {
        let t = Tensor::new(DType::F64, vec![1, 1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(average_spatial(0, &t).unwrap().samples.get(0, 0), 2.5);
        let t = Tensor::new(DType::F64, vec![1, 1, 1], vec![7.0]).unwrap();
        assert_eq!(average_spatial(0, &t).unwrap().samples.get(0, 0), 7.0);
        let t = Tensor::new(DType::F64, vec![3], vec![1.0, 2.0, 3.0]).unwrap();
        assert!(average_spatial(0, &t).is_err());
    }

    #[test]
    fn average_spatial_matches_naive_loop() {
        // shape [2,3,4], values from a fixed affine sequence
        let data: Vec<f64> = (0..24).map(|k| (k as f64 * 0.37).sin()).collect();
        let t = Tensor::new(DType::F64, vec![2, 3, 4], data.clone()).unwrap();
        let a = average_spatial(0, &t).unwrap();
        for s in 0..2 {
            for f in 0..3 {
                let mut acc = 0.0;
                for p in 0..4 {
                    acc += data[s * 12 + f * 4 + p];
                }
                assert!((a.samples.get(s, f) - acc / 4.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn csr_examples() {
        let kernel = WeightKernel::dense(1, 100, 100, vec![1.0; 10_000]).unwrap();
        // keep exactly 10 entries per row
        let keep: Vec<bool> = (0..10_000).map(|k| k % 100 < 10).collect();
        let stats = csr_memory(&mask_from(100, 100, keep), &kernel, 4, 4).unwrap();
        assert_eq!(stats.nnz, 1000);
        assert_eq!(stats.bytes, 8404);

        let empty = csr_memory(&mask_from(100, 100, vec![false; 10_000]), &kernel, 4, 4).unwrap();
        assert_eq!(empty.nnz, 0);
        assert_eq!(empty.bytes, 4 * 101);

        let full = csr_memory(&mask_from(100, 100, vec![true; 10_000]), &kernel, 4, 4).unwrap();
        assert_eq!(full.nnz, 10_000);

        assert!(csr_memory(&mask_from(100, 100, vec![true; 10_000]), &kernel, 2, 4).is_err());
        let small = WeightKernel::dense(1, 10, 100, vec![1.0; 1000]).unwrap();
        assert!(csr_memory(&mask_from(100, 100, vec![true; 10_000]), &small, 4, 4).is_err());
    }

    #[test]
    fn csr_conv_kernel_counts_window() {
        let kernel =
            WeightKernel::new(1, Tensor::new(DType::F64, vec![2, 3, 3, 3], vec![0.5; 54]).unwrap())
                .unwrap();
        let mask = mask_from(2, 3, vec![true, false, true, false, false, true]);
        let stats = csr_memory(&mask, &kernel, 8, 4).unwrap();
        assert_eq!((stats.rows, stats.cols, stats.nnz), (2, 27, 27));
        assert_eq!(stats.value_bytes, 8 * 27);
        assert_eq!(stats.index_bytes, 4 * 27 + 4 * 3);
    }

    #[test]
    fn compression_examples() {
        let k = WeightKernel::new(1, Tensor::new(DType::F64, vec![2, 2, 1, 1], vec![1.0; 4]).unwrap())
            .unwrap();
        let full = mask_from(2, 2, vec![true; 4]);
        let none = mask_from(2, 2, vec![false; 4]);
        let three = mask_from(2, 2, vec![false, true, false, false]);
        let kernels = vec![k];
        assert_eq!(compression_percent(&[Some(full)], &kernels).unwrap(), 0.0);
        assert_eq!(compression_percent(&[Some(none)], &kernels).unwrap(), 100.0);
        assert_eq!(compression_percent(&[Some(three)], &kernels).unwrap(), 75.0);
        assert_eq!(compression_percent(&[None], &kernels).unwrap(), 0.0);
        assert!(compression_percent(&[], &kernels).is_err());
    }
}
