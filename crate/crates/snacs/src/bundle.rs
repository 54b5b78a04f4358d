//! Network bundles: an NPZ archive of weights and activations described by a
//! JSON manifest.
//!
//! Manifest layout:
//!
//! ```json
//! {
//!   "layers": [
//!     {"name": "input", "type": "input", "weight_entry": null,
//!      "activation_entry": "input.act", "out_filters": 20, "in_filters": 0},
//!     {"name": "fc1", "type": "dense", "weight_entry": "fc1.weight",
//!      "activation_entry": "fc1.act", "out_filters": 32, "in_filters": 20}
//!   ],
//!   "labels_entry": "labels",
//!   "num_classes": 10
//! }
//! ```
//!
//! Activations with three or more axes are averaged over the trailing
//! (spatial) axes. Labels are stored as a float vector of whole numbers.

use std::collections::BTreeMap;
use std::io::{Read, Seek};
use std::path::Path;

use serde::{Deserialize, Serialize};
use snacs_core::tensor::average_spatial;
use snacs_core::toynet::{MlpSpec, TeacherFixture};
use snacs_core::{Layer, LayerKind, Matrix, Network, Tensor, WeightKernel};

use crate::error::{AppError, Result};
use crate::npy::NpzBundle;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerEntry {
    pub name: String,
    #[serde(rename = "type")]
    pub kind: LayerKind,
    #[serde(default)]
    pub weight_entry: Option<String>,
    pub activation_entry: String,
    pub out_filters: usize,
    #[serde(default)]
    pub in_filters: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub layers: Vec<LayerEntry>,
    #[serde(default)]
    pub labels_entry: Option<String>,
    #[serde(default)]
    pub num_classes: Option<usize>,
}

impl Manifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| AppError::format(path, e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }
}

/// A loaded network plus the class count declared in the manifest.
#[derive(Debug, Clone)]
pub struct LoadedBundle {
    pub network: Network,
    pub num_classes: Option<usize>,
}

fn layer_err(path: &Path, layer: &str, reason: impl std::fmt::Display) -> AppError {
    AppError::format(path, format!("layer {layer}: {reason}"))
}

fn activation_matrix(l: usize, t: &Tensor) -> snacs_core::Result<Matrix> {
    match t.shape().len() {
        2 => t.to_matrix(),
        _ => average_spatial(l, t).map(|a| a.samples),
    }
}

/// Whole-number labels in [0, num_classes) when a class count is given.
pub fn labels_from_tensor(t: &Tensor, num_classes: Option<usize>) -> std::result::Result<Vec<usize>, String> {
    if t.shape().len() != 1 {
        return Err(format!("labels must be 1-D, got shape {:?}", t.shape()));
    }
    t.data()
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            if v < 0.0 || v.fract() != 0.0 {
                return Err(format!("label {i} is {v}, not a class index"));
            }
            let c = v as usize;
            match num_classes {
                Some(k) if c >= k => Err(format!("label {i} is {c}, outside [0, {k})")),
                _ => Ok(c),
            }
        })
        .collect()
}

/// Builds a `Network` from a manifest and an open archive. `label` is used in
/// error messages.
pub fn load_network<R: Read + Seek>(manifest: &Manifest, npz: &mut NpzBundle<R>, label: &Path) -> Result<LoadedBundle> {
    let mut layers = Vec::with_capacity(manifest.layers.len());
    for (l, entry) in manifest.layers.iter().enumerate() {
        let name = entry.name.as_str();
        let acts = npz.get(&entry.activation_entry)?;
        let activations = activation_matrix(l, &acts).map_err(|e| layer_err(label, name, e))?;
        if activations.cols() != entry.out_filters {
            return Err(layer_err(
                label,
                name,
                format!("{} activation filters, manifest says {}", activations.cols(), entry.out_filters),
            ));
        }
        let kernel = match &entry.weight_entry {
            Some(w) => {
                let t = npz.get(w)?;
                let k = WeightKernel::new(l, t).map_err(|e| layer_err(label, name, e))?;
                if k.out_filters() != entry.out_filters || k.in_filters() != entry.in_filters {
                    return Err(layer_err(
                        label,
                        name,
                        format!(
                            "kernel is {}x{}, manifest says {}x{}",
                            k.out_filters(),
                            k.in_filters(),
                            entry.out_filters,
                            entry.in_filters
                        ),
                    ));
                }
                Some(k)
            }
            None => None,
        };
        if let (Some(k), LayerKind::Dense) = (&kernel, entry.kind) {
            if k.area() != 1 {
                return Err(layer_err(label, name, "dense layer with a 4-D kernel"));
            }
        }
        layers.push(Layer {
            name: entry.name.clone(),
            kind: entry.kind,
            kernel,
            activations,
        });
    }
    let labels = match &manifest.labels_entry {
        Some(e) => {
            let t = npz.get(e)?;
            Some(labels_from_tensor(&t, manifest.num_classes).map_err(|r| AppError::format(label.join(e), r))?)
        }
        None => None,
    };
    let network = Network::new(layers, labels).map_err(|e| AppError::format(label, e.to_string()))?;
    Ok(LoadedBundle {
        network,
        num_classes: manifest.num_classes,
    })
}

pub fn load_bundle(manifest_path: impl AsRef<Path>, npz_path: impl AsRef<Path>) -> Result<LoadedBundle> {
    let manifest = Manifest::load(manifest_path)?;
    let npz_path = npz_path.as_ref();
    let mut npz = NpzBundle::open(npz_path)?;
    load_network(&manifest, &mut npz, npz_path)
}

/// Manifest and archive entries for a toy teacher network.
pub fn export_fixture(fix: &TeacherFixture) -> (Manifest, BTreeMap<String, Tensor>) {
    let mut entries = BTreeMap::new();
    let mut layers = Vec::new();
    for (k, acts) in fix.pass.activations.iter().enumerate() {
        let (name, kind) = if k == 0 {
            ("input".to_string(), LayerKind::Input)
        } else {
            (format!("fc{k}"), LayerKind::Dense)
        };
        let act_entry = format!("{name}.act");
        entries.insert(act_entry.clone(), Tensor::from_matrix(acts));
        let weight_entry = if k == 0 {
            None
        } else {
            let e = format!("{name}.weight");
            entries.insert(e.clone(), fix.spec.weights[k - 1].tensor().clone());
            Some(e)
        };
        layers.push(LayerEntry {
            name,
            kind,
            weight_entry,
            activation_entry: act_entry,
            out_filters: fix.spec.layer_sizes[k],
            in_filters: if k == 0 { 0 } else { fix.spec.layer_sizes[k - 1] },
        });
    }
    let labels: Vec<f64> = fix.labels.iter().map(|&l| l as f64).collect();
    entries.insert(
        "labels".to_string(),
        Tensor::new(snacs_core::DType::F64, vec![labels.len()], labels).expect("labels are finite"),
    );
    let manifest = Manifest {
        layers,
        labels_entry: Some("labels".to_string()),
        num_classes: Some(fix.num_classes),
    };
    (manifest, entries)
}

/// Recovers a bias-free MLP from an all-dense network: layer 0 activations are
/// the inputs. Fails when any layer is convolutional or the recorded
/// activations disagree with a forward pass of the stored weights.
pub fn mlp_from_network(net: &Network) -> snacs_core::Result<(MlpSpec, Matrix)> {
    let sizes: Vec<usize> = net.layers().iter().map(|l| l.n_filters()).collect();
    let mut weights = Vec::new();
    for layer in &net.layers()[1..] {
        match (&layer.kernel, layer.kind) {
            (Some(k), LayerKind::Dense) if k.area() == 1 => weights.push(k.clone()),
            _ => {
                return Err(snacs_core::Error::Layer {
                    layer: layer.name.clone(),
                    reason: "planning from a bundle needs dense layers; pass --curves instead".into(),
                })
            }
        }
    }
    let spec = MlpSpec::new(sizes, weights, 0)?;
    let inputs = net.layers()[0].activations.clone();
    let pass = snacs_core::toynet::forward(&spec, &inputs, None)?;
    for (k, (got, layer)) in pass.activations.iter().zip(net.layers()).enumerate().skip(1) {
        let worst = got
            .data()
            .iter()
            .zip(layer.activations.data())
            .map(|(a, b)| (a - b).abs() / (1.0 + b.abs()))
            .fold(0.0, f64::max);
        if worst > 1e-4 {
            return Err(snacs_core::Error::Layer {
                layer: layer.name.clone(),
                reason: format!("recorded activations differ from a forward pass (layer {k}, rel. error {worst:.3e})"),
            });
        }
    }
    Ok((spec, inputs))
}
