//! JSON and CSV encodings of masks, reports, plans, curves and histograms.
//!
//! Mask file:
//!
//! ```json
//! {"masks": [{"layer": "fc2", "layer_pair": [1, 2],
//!             "out_groups": {"layer_index": 2, "n_filters": 32, "n_groups": 8},
//!             "in_groups":  {"layer_index": 1, "n_filters": 32, "n_groups": 8},
//!             "keep_matrix": "<base64>", "kept": 50,
//!             "filter_level_expansion": null}]}
//! ```
//!
//! `keep_matrix` packs the out_groups x in_groups keep flags row-major, most
//! significant bit first, the last byte padded with zeros. Layers with no
//! mask are left out. Curves CSV has columns `layer,c,alpha`; validation CSV
//! `x,median,q25,q75,mse`; histogram CSV `value,count`.

use std::collections::BTreeMap;
use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};
use snacs_core::pruning::GroupScheme;
use snacs_core::validation::CurvePoint;
use snacs_core::{Network, PruneMask, PrunePlan, PruneReport, QualityCurve};

use crate::error::{AppError, Result};

pub fn pack_bits(bits: &[bool]) -> Vec<u8> {
    let mut out = vec![0u8; bits.len().div_ceil(8)];
    for (k, &b) in bits.iter().enumerate() {
        if b {
            out[k / 8] |= 0x80 >> (k % 8);
        }
    }
    out
}

pub fn unpack_bits(bytes: &[u8], n: usize) -> Option<Vec<bool>> {
    if bytes.len() != n.div_ceil(8) {
        return None;
    }
    let bits: Vec<bool> = (0..n).map(|k| bytes[k / 8] & (0x80 >> (k % 8)) != 0).collect();
    let padding_clear = (n..bytes.len() * 8).all(|k| bytes[k / 8] & (0x80 >> (k % 8)) == 0);
    padding_clear.then_some(bits)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaskRecord {
    pub layer: String,
    pub layer_pair: (usize, usize),
    pub out_groups: GroupScheme,
    pub in_groups: GroupScheme,
    pub keep_matrix: String,
    pub kept: usize,
    #[serde(default)]
    pub filter_level_expansion: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaskFile {
    pub masks: Vec<MaskRecord>,
}

impl MaskRecord {
    pub fn from_mask(layer: &str, mask: &PruneMask) -> Self {
        MaskRecord {
            layer: layer.to_string(),
            layer_pair: mask.layer_pair,
            out_groups: mask.out_scheme,
            in_groups: mask.in_scheme,
            keep_matrix: STANDARD.encode(pack_bits(mask.keep())),
            kept: mask.keep().iter().filter(|&&k| k).count(),
            filter_level_expansion: None,
        }
    }

    pub fn to_mask(&self) -> std::result::Result<PruneMask, String> {
        let n = self.out_groups.n_groups * self.in_groups.n_groups;
        let bytes = STANDARD
            .decode(&self.keep_matrix)
            .map_err(|e| format!("layer {}: keep_matrix is not base64: {e}", self.layer))?;
        let bits = unpack_bits(&bytes, n)
            .ok_or_else(|| format!("layer {}: keep_matrix does not hold exactly {n} bits", self.layer))?;
        if bits.iter().filter(|&&k| k).count() != self.kept {
            return Err(format!("layer {}: kept count disagrees with keep_matrix", self.layer));
        }
        PruneMask::new(self.layer_pair, self.out_groups, self.in_groups, bits)
            .map_err(|e| format!("layer {}: {e}", self.layer))
    }
}

impl MaskFile {
    pub fn from_masks(net: &Network, masks: &[Option<PruneMask>]) -> Self {
        let masks = masks
            .iter()
            .enumerate()
            .filter_map(|(l, m)| m.as_ref().map(|m| MaskRecord::from_mask(&net.layers()[l].name, m)))
            .collect();
        MaskFile { masks }
    }

    /// Per-layer masks aligned with `net`, resolving records by layer name.
    pub fn resolve(&self, net: &Network) -> std::result::Result<Vec<Option<PruneMask>>, String> {
        let mut out = vec![None; net.len()];
        for rec in &self.masks {
            let l = net
                .layers()
                .iter()
                .position(|layer| layer.name == rec.layer)
                .ok_or_else(|| format!("mask for unknown layer {}", rec.layer))?;
            if rec.layer_pair != (l.wrapping_sub(1), l) {
                return Err(format!("layer {}: layer_pair {:?} but the layer is at index {l}", rec.layer, rec.layer_pair));
            }
            out[l] = Some(rec.to_mask()?);
        }
        Ok(out)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        read_json(path)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("value serializes") + "\n"
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| AppError::format(path, e.to_string()))
}

pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, text).map_err(|e| AppError::io(path, e))
}

fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

fn opt(v: Option<f64>) -> String {
    v.map(|d| d.to_string()).unwrap_or_default()
}

pub const REPORT_CSV_HEADER: [&str; 14] = [
    "layer",
    "name",
    "in_groups",
    "out_groups",
    "n_protected",
    "n_scored",
    "n_pruned",
    "pruned_fraction",
    "delta_used",
    "gamma_used",
    "params",
    "params_pruned",
    "compression_percent",
    "csr_bytes",
];

/// One row per layer; an empty `delta_used` means unbounded.
pub fn report_csv(report: &PruneReport) -> String {
    csv_string(
        &REPORT_CSV_HEADER,
        report.layers.iter().map(|r| {
            let pct = if r.params == 0 {
                0.0
            } else {
                100.0 * r.params_pruned as f64 / r.params as f64
            };
            vec![
                r.layer.to_string(),
                r.name.clone(),
                r.in_groups.to_string(),
                r.out_groups.to_string(),
                r.n_protected.to_string(),
                r.n_scored.to_string(),
                r.n_pruned.to_string(),
                r.pruned_fraction.to_string(),
                opt(r.delta_used),
                r.gamma_used.to_string(),
                r.params.to_string(),
                r.params_pruned.to_string(),
                pct.to_string(),
                r.csr.bytes.to_string(),
            ]
        }),
    )
}

pub fn curves_csv(curves: &[QualityCurve]) -> String {
    csv_string(
        &["layer", "c", "alpha"],
        curves.iter().flat_map(|cv| {
            cv.c_values
                .iter()
                .zip(&cv.alpha_values)
                .map(|(c, a)| vec![cv.layer_index.to_string(), c.to_string(), a.to_string()])
                .collect::<Vec<_>>()
        }),
    )
}

#[derive(Deserialize)]
struct CurveRow {
    layer: usize,
    c: f64,
    alpha: f64,
}

/// Groups rows by layer, keeping file order within each layer.
pub fn parse_curves_csv(text: &str) -> std::result::Result<Vec<QualityCurve>, String> {
    let mut by_layer: BTreeMap<usize, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    for (k, row) in rdr.deserialize::<CurveRow>().enumerate() {
        let row = row.map_err(|e| format!("row {}: {e}", k + 1))?;
        let e = by_layer.entry(row.layer).or_default();
        e.0.push(row.c);
        e.1.push(row.alpha);
    }
    by_layer
        .into_iter()
        .map(|(l, (c, a))| QualityCurve::new(l, c, a).map_err(|e| e.to_string()))
        .collect()
}

pub fn validation_csv(points: &[CurvePoint]) -> String {
    csv_string(
        &["x", "median", "q25", "q75", "mse"],
        points.iter().map(|p| {
            vec![
                p.x.to_string(),
                p.median.to_string(),
                p.q25.to_string(),
                p.q75.to_string(),
                p.mse.to_string(),
            ]
        }),
    )
}

pub fn histogram_csv(bins: &[(f64, usize)]) -> String {
    csv_string(
        &["value", "count"],
        bins.iter().map(|(v, c)| vec![v.to_string(), c.to_string()]),
    )
}

/// Plan file written by `plan` and read by `prune --plan`.
pub fn plan_json(plan: &PrunePlan) -> String {
    to_json(plan)
}
