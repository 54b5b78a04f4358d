//! Exact plug-in values for finite-support distributions.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::g;
use crate::error::{Error, Result};

const NORM_TOL: f64 = 1e-12;

fn check_pmf(p: &[f64], expected_len: usize) -> Result<()> {
    if p.len() != expected_len {
        return Err(Error::shape(format!("pmf needs {expected_len} entries, got {}", p.len())));
    }
    if let Some(index) = p.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    if p.iter().any(|&v| v < 0.0) {
        return Err(Error::Domain("pmf has a negative entry".into()));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized { sum });
    }
    Ok(())
}

fn check_phi(phi: &[f64], expected_len: usize) -> Result<()> {
    if phi.len() != expected_len {
        return Err(Error::shape(format!("phi table needs {expected_len} entries, got {}", phi.len())));
    }
    if phi.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::Domain("phi must be finite and non-negative".into()));
    }
    Ok(())
}

/// Joint pmf over X × Y × Z, stored as p[(x * ny + y) * nz + z].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointPmf {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub p: Vec<f64>,
}

impl JointPmf {
    pub fn new(nx: usize, ny: usize, nz: usize, p: Vec<f64>) -> Result<Self> {
        check_pmf(&p, nx * ny * nz)?;
        Ok(JointPmf { nx, ny, nz, p })
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize, z: usize) -> f64 {
        self.p[(x * self.ny + y) * self.nz + z]
    }
}

/// Joint pmf over X × Y, stored as p[x * ny + y].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairPmf {
    pub nx: usize,
    pub ny: usize,
    pub p: Vec<f64>,
    /// Marginals the table was built from, if it is an outer product.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    factors: Option<(Vec<f64>, Vec<f64>)>,
}

impl PairPmf {
    pub fn new(nx: usize, ny: usize, p: Vec<f64>) -> Result<Self> {
        check_pmf(&p, nx * ny)?;
        Ok(PairPmf { nx, ny, p, factors: None })
    }

    /// Outer product of two marginals. The marginals are kept as given, so
    /// p(x, y) / (p(x) p(y)) is exactly 1 and the dependence value exactly 0.
    pub fn independent(px: &[f64], py: &[f64]) -> Result<Self> {
        check_pmf(px, px.len())?;
        check_pmf(py, py.len())?;
        let p = px.iter().flat_map(|&a| py.iter().map(move |&b| a * b)).collect();
        let mut pmf = PairPmf::new(px.len(), py.len(), p)?;
        pmf.factors = Some((px.to_vec(), py.to_vec()));
        Ok(pmf)
    }

    /// Row and column sums, or the factors for a pmf built by `independent`.
    pub fn marginals(&self) -> (Vec<f64>, Vec<f64>) {
        if let Some(f) = &self.factors {
            return f.clone();
        }
        let mut px = alloc::vec![0.0; self.nx];
        let mut py = alloc::vec![0.0; self.ny];
        for x in 0..self.nx {
            for y in 0..self.ny {
                let v = self.p[x * self.ny + y];
                px[x] += v;
                py[y] += v;
            }
        }
        (px, py)
    }
}

/// Sum over z of p(z) sum_{x,y} p(x|z) p(y|z) phi(x,y,z) g(p(x,y|z) / (p(x|z) p(y|z))).
/// `phi` has the same layout as the pmf.
pub fn exact_cmi_discrete(pmf: &JointPmf, phi: &[f64]) -> Result<f64> {
    check_pmf(&pmf.p, pmf.nx * pmf.ny * pmf.nz)?;
    check_phi(phi, pmf.p.len())?;
    let (nx, ny, nz) = (pmf.nx, pmf.ny, pmf.nz);
    let mut total = 0.0;
    for z in 0..nz {
        let mut pxz = alloc::vec![0.0; nx];
        let mut pyz = alloc::vec![0.0; ny];
        for x in 0..nx {
            for y in 0..ny {
                let v = pmf.at(x, y, z);
                pxz[x] += v;
                pyz[y] += v;
            }
        }
        let pz: f64 = pxz.iter().sum();
        if pz <= 0.0 {
            continue;
        }
        let mut inner = 0.0;
        for x in 0..nx {
            for y in 0..ny {
                let prod = (pxz[x] / pz) * (pyz[y] / pz);
                if prod <= 0.0 {
                    continue;
                }
                let joint = pmf.at(x, y, z) / pz;
                inner += prod * phi[(x * ny + y) * nz + z] * g(joint / prod);
            }
        }
        total += pz * inner;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmiBounds {
    pub lower: f64,
    pub upper: f64,
    pub value: f64,
}

/// I_phi(X; Y) of a discrete pair together with 0 and
/// (1/2) E_{P_X P_Y}[phi (dP_XY / dP_X P_Y + 1)].
pub fn exact_ami_bounds_discrete(pmf: &PairPmf, phi: &[f64]) -> Result<AmiBounds> {
    check_pmf(&pmf.p, pmf.nx * pmf.ny)?;
    check_phi(phi, pmf.p.len())?;
    let (px, py) = pmf.marginals();
    let mut value = 0.0;
    let mut upper = 0.0;
    for x in 0..pmf.nx {
        for y in 0..pmf.ny {
            let w = px[x] * py[y];
            if w <= 0.0 {
                continue;
            }
            let t = pmf.p[x * pmf.ny + y] / w;
            let gv = g(t);
            // (t-1)^2 <= (t+1)^2, so the bound term dominates; max() keeps that true after rounding
            let ub = ((t + 1.0) / 2.0).max(gv);
            let wf = w * phi[x * pmf.ny + y];
            value += wf * gv;
            upper += wf * ub;
        }
    }
    let bounds = AmiBounds {
        lower: 0.0,
        upper,
        value,
    };
    if !(bounds.lower <= bounds.value && bounds.value <= bounds.upper) {
        return Err(Error::Domain(format!("bound violated: {bounds:?}")));
    }
    Ok(bounds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn copy_with_independent_z() -> JointPmf {
        // X = Y ~ Bernoulli(1/2), Z ~ Bernoulli(1/2) independent
        let mut p = vec![0.0; 8];
        for x in 0..2 {
            for z in 0..2 {
                p[(x * 2 + x) * 2 + z] = 0.25;
            }
        }
        JointPmf::new(2, 2, 2, p).unwrap()
    }

    #[test]
    fn copy_pmf_gives_one_third() {
        let pmf = copy_with_independent_z();
        assert_eq!(exact_cmi_discrete(&pmf, &[1.0; 8]).unwrap(), 1.0 / 3.0);
        assert_eq!(exact_cmi_discrete(&pmf, &[2.0; 8]).unwrap(), 2.0 / 3.0);
    }

    #[test]
    fn product_pmf_gives_zero() {
        let px = [0.2, 0.8];
        let py = [0.5, 0.3, 0.2];
        let pz = [0.6, 0.4];
        let mut p = Vec::new();
        for a in px {
            for b in py {
                for c in pz {
                    p.push(a * b * c);
                }
            }
        }
        let pmf = JointPmf::new(2, 3, 2, p).unwrap();
        assert!(exact_cmi_discrete(&pmf, &[1.0; 12]).unwrap().abs() < 1e-15);
    }

    #[test]
    fn rejects_unnormalized() {
        assert!(matches!(
            JointPmf::new(1, 1, 2, vec![0.5, 0.6]),
            Err(Error::NotNormalized { .. })
        ));
        assert!(PairPmf::new(1, 2, vec![0.5, 0.5 + 1e-10]).is_err());
    }

    #[test]
    fn independent_pair_is_zero() {
        let pmf = PairPmf::independent(&[0.25, 0.75], &[0.5, 0.5]).unwrap();
        let b = exact_ami_bounds_discrete(&pmf, &[1.0; 4]).unwrap();
        assert_eq!(b.value, 0.0);
        assert_eq!(b.lower, 0.0);
    }
}
