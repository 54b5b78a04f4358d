//! Bias-free multilayer perceptron and Gaussian-blob data, enough to run the
//! whole pipeline without an external framework.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::hash::derive_seed;
use crate::matrix::Matrix;
use crate::network::{Layer, LayerKind, Network};
use crate::pruning::PruneMask;
use crate::tensor::WeightKernel;

/// Rectifier on hidden layers, identity on the output layer.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpSpec {
    pub layer_sizes: Vec<usize>,
    /// `weights[k]` maps layer k to layer k + 1, shape (sizes[k+1], sizes[k]).
    pub weights: Vec<WeightKernel>,
    pub seed: u64,
}

impl MlpSpec {
    pub fn new(layer_sizes: Vec<usize>, weights: Vec<WeightKernel>, seed: u64) -> Result<Self> {
        if layer_sizes.len() < 2 || layer_sizes.contains(&0) {
            return Err(Error::config("need at least two non-empty layers"));
        }
        if weights.len() != layer_sizes.len() - 1 {
            return Err(Error::shape(format!(
                "{} kernels for {} layers",
                weights.len(),
                layer_sizes.len()
            )));
        }
        for (k, w) in weights.iter().enumerate() {
            if w.area() != 1 || w.out_filters() != layer_sizes[k + 1] || w.in_filters() != layer_sizes[k] {
                return Err(Error::shape(format!(
                    "kernel {k} does not map {} to {} units",
                    layer_sizes[k],
                    layer_sizes[k + 1]
                )));
            }
        }
        Ok(MlpSpec {
            layer_sizes,
            weights,
            seed,
        })
    }

    /// Gaussian weights with variance 2 / fan_in.
    pub fn random(layer_sizes: &[usize], seed: u64) -> Result<Self> {
        let mut weights = Vec::new();
        for k in 0..layer_sizes.len().saturating_sub(1) {
            let (fan_in, fan_out) = (layer_sizes[k], layer_sizes[k + 1]);
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0x3E1, k as u64]));
            let dist = Normal::new(0.0, libm::sqrt(2.0 / fan_in.max(1) as f64))
                .map_err(|e| Error::config(format!("{e}")))?;
            let data = (0..fan_in * fan_out).map(|_| dist.sample(&mut rng)).collect();
            weights.push(WeightKernel::dense(k + 1, fan_out, fan_in, data)?);
        }
        MlpSpec::new(layer_sizes.to_vec(), weights, seed)
    }

    pub fn n_layers(&self) -> usize {
        self.layer_sizes.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardPass {
    /// `activations[0]` is the input, the last entry the logits.
    pub activations: Vec<Matrix>,
}

impl ForwardPass {
    pub fn logits(&self) -> &Matrix {
        self.activations.last().expect("forward pass has layers")
    }
}

/// out = relu(a W^T) for hidden layers, a W^T for the last one.
pub(crate) fn layer_output(input: &Matrix, kernel: &WeightKernel, rectify: bool) -> Matrix {
    let (m, n_in, n_out) = (input.rows(), kernel.in_filters(), kernel.out_filters());
    let w = kernel.tensor().data();
    let mut out = Matrix::zeros(m, n_out);
    for r in 0..m {
        let x = input.row(r);
        for o in 0..n_out {
            let row = &w[o * n_in..(o + 1) * n_in];
            let mut acc = 0.0;
            for (a, b) in row.iter().zip(x) {
                acc += a * b;
            }
            out.set(r, o, if rectify { acc.max(0.0) } else { acc });
        }
    }
    out
}

/// Runs the network. `masks[l]`, when present, zeroes connections into layer l.
pub fn forward(spec: &MlpSpec, inputs: &Matrix, masks: Option<&[Option<PruneMask>]>) -> Result<ForwardPass> {
    if inputs.cols() != spec.layer_sizes[0] {
        return Err(Error::shape(format!(
            "input width {} but the network expects {}",
            inputs.cols(),
            spec.layer_sizes[0]
        )));
    }
    if let Some(m) = masks {
        if m.len() != spec.n_layers() {
            return Err(Error::shape(format!("{} masks for {} layers", m.len(), spec.n_layers())));
        }
    }
    let last = spec.weights.len();
    let mut activations = alloc::vec![inputs.clone()];
    for (k, kernel) in spec.weights.iter().enumerate() {
        let mask = masks.and_then(|m| m[k + 1].as_ref());
        let masked;
        let kernel = match mask {
            Some(mask) => {
                masked = mask.apply(kernel)?;
                &masked
            }
            None => kernel,
        };
        let out = layer_output(&activations[k], kernel, k + 1 < last);
        activations.push(out);
    }
    Ok(ForwardPass { activations })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthDataset {
    pub features: Matrix,
    pub labels: Vec<usize>,
    pub num_classes: usize,
    pub seed: u64,
}

/// Identity-covariance Gaussian blobs. Sample t belongs to class t mod K;
/// class c is centred at +separation on axis c (c < d), then at -separation
/// on axis c - d, and so on cyclically.
pub fn synth_dataset(num_classes: usize, m: usize, d: usize, separation: f64, seed: u64) -> Result<SynthDataset> {
    if num_classes < 1 || d < 1 {
        return Err(Error::config("need at least one class and one dimension"));
    }
    if m < num_classes {
        return Err(Error::config(format!("{m} samples cannot cover {num_classes} classes")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0xDA7A]));
    let mut data = Vec::with_capacity(m * d);
    let mut labels = Vec::with_capacity(m);
    for t in 0..m {
        let c = t % num_classes;
        let axis = c % d;
        let sign = if (c / d) % 2 == 0 { 1.0 } else { -1.0 };
        for k in 0..d {
            let z: f64 = StandardNormal.sample(&mut rng);
            data.push(if k == axis { z + sign * separation } else { z });
        }
        labels.push(c);
    }
    Ok(SynthDataset {
        features: Matrix::new(m, d, data)?,
        labels,
        num_classes,
        seed,
    })
}

/// Index of the largest entry of each row (first one on ties).
pub fn argmax_rows(m: &Matrix) -> Vec<usize> {
    (0..m.rows())
        .map(|r| {
            let row = m.row(r);
            let mut best = 0;
            for (k, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = k;
                }
            }
            best
        })
        .collect()
}

/// Random teacher network together with inputs it labels itself.
#[derive(Debug, Clone, PartialEq)]
pub struct TeacherFixture {
    pub spec: MlpSpec,
    pub inputs: Matrix,
    pub labels: Vec<usize>,
    pub num_classes: usize,
    pub pass: ForwardPass,
}

fn centered_columns(m: &Matrix) -> Matrix {
    let mut out = m.clone();
    for c in 0..m.cols() {
        let mu = m.column(c).iter().sum::<f64>() / m.rows().max(1) as f64;
        for r in 0..m.rows() {
            out.set(r, c, m.get(r, c) - mu);
        }
    }
    out
}

/// Inputs are Gaussian blobs; labels are the teacher's argmax outputs after
/// each logit is centred over the dataset, which keeps classes roughly balanced.
pub fn teacher_fixture(layer_sizes: &[usize], m: usize, separation: f64, seed: u64) -> Result<TeacherFixture> {
    let spec = MlpSpec::random(layer_sizes, derive_seed(seed, &[1]))?;
    let num_classes = *layer_sizes.last().ok_or_else(|| Error::config("empty layer list"))?;
    let data = synth_dataset(num_classes, m, layer_sizes[0], separation, derive_seed(seed, &[2]))?;
    let pass = forward(&spec, &data.features, None)?;
    let labels = argmax_rows(&centered_columns(pass.logits()));
    Ok(TeacherFixture {
        spec,
        inputs: data.features,
        labels,
        num_classes,
        pass,
    })
}

impl TeacherFixture {
    /// Layer 0 is the input; layer k carries kernel k - 1 and its activations.
    pub fn network(&self) -> Result<Network> {
        let mut layers = Vec::new();
        for (k, acts) in self.pass.activations.iter().enumerate() {
            let (name, kind, kernel) = if k == 0 {
                (String::from("input"), LayerKind::Input, None)
            } else {
                (format!("fc{k}"), LayerKind::Dense, Some(self.spec.weights[k - 1].clone()))
            };
            layers.push(Layer {
                name,
                kind,
                kernel,
                activations: acts.clone(),
            });
        }
        Network::new(layers, Some(self.labels.clone()))
    }
}
