//! In-memory network: per-layer incoming kernels plus recorded activations.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::tensor::WeightKernel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerKind {
    Input,
    Dense,
    Conv,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub name: String,
    pub kind: LayerKind,
    /// Kernel feeding this layer from the previous one.
    pub kernel: Option<WeightKernel>,
    /// samples x filters, one scalar per filter
    pub activations: Matrix,
}

impl Layer {
    pub fn n_filters(&self) -> usize {
        self.activations.cols()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    layers: Vec<Layer>,
    labels: Option<Vec<usize>>,
}

impl Network {
    pub fn new(layers: Vec<Layer>, labels: Option<Vec<usize>>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Empty("network has no layers".into()));
        }
        let m = layers[0].activations.rows();
        for (l, layer) in layers.iter().enumerate() {
            if layer.activations.rows() != m {
                return Err(Error::layer(
                    layer.name.clone(),
                    format!("{} activation rows, expected {m}", layer.activations.rows()),
                ));
            }
            if let Some(k) = &layer.kernel {
                if k.out_filters() != layer.n_filters() {
                    return Err(Error::layer(
                        layer.name.clone(),
                        format!(
                            "kernel has {} output filters, activations have {}",
                            k.out_filters(),
                            layer.n_filters()
                        ),
                    ));
                }
                if l > 0 && k.in_filters() != layers[l - 1].n_filters() {
                    return Err(Error::layer(
                        layer.name.clone(),
                        format!(
                            "kernel has {} input filters, previous layer has {}",
                            k.in_filters(),
                            layers[l - 1].n_filters()
                        ),
                    ));
                }
            } else if l > 0 {
                return Err(Error::layer(layer.name.clone(), "missing weight kernel"));
            }
        }
        if let Some(lb) = &labels {
            if lb.len() != m {
                return Err(Error::shape(format!("{} labels for {m} samples", lb.len())));
            }
        }
        Ok(Network { layers, labels })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn n_samples(&self) -> usize {
        self.layers[0].activations.rows()
    }

    /// Kernels of every layer that has one, in layer order.
    pub fn kernels(&self) -> Vec<&WeightKernel> {
        self.layers.iter().filter_map(|l| l.kernel.as_ref()).collect()
    }
}
