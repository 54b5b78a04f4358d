//! Explicit collision-count table. The fast estimator never materializes
//! this; it exists for inspection and as an independent route to the same sum.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{g, row_keys, EdgeRule, HashConfig};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollisionTable {
    pub joint: BTreeMap<(u64, u64, u64), u64>,
    pub xz: BTreeMap<(u64, u64), u64>,
    pub yz: BTreeMap<(u64, u64), u64>,
    pub z: BTreeMap<u64, u64>,
    pub total: u64,
}

/// Counts N_ijk, N_ik, N_jk, N_k of the hashed samples. Inputs are quantized
/// as given (no standardization).
pub fn build_collision_table(x: &Matrix, y: &Matrix, z: &Matrix, cfg: &HashConfig) -> Result<CollisionTable> {
    cfg.validate()?;
    let m = x.rows();
    if y.rows() != m || z.rows() != m {
        return Err(Error::shape(format!(
            "row counts differ: X {}, Y {}, Z {}",
            m,
            y.rows(),
            z.rows()
        )));
    }
    if m == 0 {
        return Err(Error::Empty("no samples".into()));
    }
    let hasher = cfg.hasher(m);
    let keys = |mat: &Matrix| {
        let cols = mat.columns();
        let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
        row_keys(&refs, m, cfg, &hasher)
    };
    let (hx, hy, hz) = (keys(x), keys(y), keys(z));

    let mut table = CollisionTable {
        joint: BTreeMap::new(),
        xz: BTreeMap::new(),
        yz: BTreeMap::new(),
        z: BTreeMap::new(),
        total: m as u64,
    };
    for t in 0..m {
        let (i, j, k) = (hx[t], hy[t], hz[t]);
        *table.joint.entry((i, j, k)).or_default() += 1;
        *table.xz.entry((i, k)).or_default() += 1;
        *table.yz.entry((j, k)).or_default() += 1;
        *table.z.entry(k).or_default() += 1;
    }
    Ok(table)
}

impl CollisionTable {
    /// Checks the count identities; returns a description of the first violation.
    pub fn check_invariants(&self) -> core::result::Result<(), alloc::string::String> {
        let sums = [
            self.joint.values().sum::<u64>(),
            self.xz.values().sum::<u64>(),
            self.yz.values().sum::<u64>(),
            self.z.values().sum::<u64>(),
        ];
        if sums.iter().any(|&s| s != self.total) {
            return Err(format!("marginal sums {sums:?} != {}", self.total));
        }
        for (&(i, j, k), &n) in &self.joint {
            let n_ik = self.xz.get(&(i, k)).copied().unwrap_or(0);
            let n_jk = self.yz.get(&(j, k)).copied().unwrap_or(0);
            if n > n_ik.min(n_jk) {
                return Err(format!("N_ijk {n} exceeds marginals at ({i},{j},{k})"));
            }
        }
        for (&(i, k), &n) in &self.xz {
            if n > self.z.get(&k).copied().unwrap_or(0) {
                return Err(format!("N_ik exceeds N_k at ({i},{k})"));
            }
        }
        for (&(j, k), &n) in &self.yz {
            if n > self.z.get(&k).copied().unwrap_or(0) {
                return Err(format!("N_jk exceeds N_k at ({j},{k})"));
            }
        }
        Ok(())
    }

    /// Plug-in sum with a constant phi, computed directly from the maps.
    pub fn plug_in(&self, phi: f64, edges: EdgeRule) -> f64 {
        let n = self.total as f64;
        let mut covered: BTreeMap<u64, u64> = BTreeMap::new();
        let mut sum = 0.0;
        for (&(i, j, k), &n_ijk) in &self.joint {
            let n_ik = self.xz[&(i, k)];
            let n_jk = self.yz[&(j, k)];
            let n_k = self.z[&k];
            let r_ik = n_ik as f64 / n;
            let r_jk = n_jk as f64 / n;
            let r_k = n_k as f64 / n;
            let r_ijk = n_ijk as f64 / n;
            sum += r_ik * r_jk / r_k * g(r_ijk * r_k / (r_ik * r_jk));
            *covered.entry(k).or_default() += n_ik * n_jk;
        }
        if edges == EdgeRule::Completed {
            for (&k, &n_k) in &self.z {
                let missing = n_k * n_k - covered.get(&k).copied().unwrap_or(0);
                sum += 0.5 * missing as f64 / (n_k as f64 * n);
            }
        }
        phi * sum
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> HashConfig {
        HashConfig::new(1.0, 0.0, 4, 11).unwrap()
    }

    #[test]
    fn identical_samples_share_one_key() {
        let x = Matrix::from_column(&[0.5; 4]);
        let t = build_collision_table(&x, &x, &x, &cfg()).unwrap();
        assert_eq!(t.joint.len(), 1);
        assert_eq!(*t.joint.values().next().unwrap(), 4);
        assert_eq!(t.plug_in(1.0, EdgeRule::Completed), 0.0);
        t.check_invariants().unwrap();
    }

    #[test]
    fn distinct_xy_shared_z() {
        let x = Matrix::from_column(&[0.0, 10.0, 20.0, 30.0]);
        let y = Matrix::from_column(&[5.0, 15.0, 25.0, 35.0]);
        let z = Matrix::from_column(&[0.0; 4]);
        // a large bucket count keeps the four keys apart
        let c = HashConfig::new(1.0, 0.0, 1 << 20, 3).unwrap();
        let t = build_collision_table(&x, &y, &z, &c).unwrap();
        assert_eq!(t.joint.len(), 4);
        assert!(t.joint.values().all(|&v| v == 1));
        assert!(t.xz.values().all(|&v| v == 1));
        assert!(t.yz.values().all(|&v| v == 1));
        assert_eq!(t.z.values().copied().collect::<Vec<_>>(), alloc::vec![4]);
    }

    #[test]
    fn order_invariant() {
        let x = Matrix::from_column(&[0.1, 2.2, 3.3, 0.1, 7.0]);
        let y = Matrix::from_column(&[1.0, 1.0, 4.0, 0.0, 2.0]);
        let z = Matrix::from_column(&[0.0, 1.0, 0.0, 1.0, 0.0]);
        let p = [4, 2, 0, 3, 1];
        let a = build_collision_table(&x, &y, &z, &cfg()).unwrap();
        let b = build_collision_table(&x.select_rows(&p), &y.select_rows(&p), &z.select_rows(&p), &cfg())
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_mismatch() {
        let x = Matrix::from_column(&[0.0, 1.0]);
        let y = Matrix::from_column(&[0.0]);
        assert!(build_collision_table(&x, &y, &x, &cfg()).is_err());
    }
}
