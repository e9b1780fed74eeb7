//! Dipole coupling and potential matrices.

use nalgebra::DMatrix;

use crate::error::{QdoError, Result};
use crate::geometry::{norm2, sub, SiteSet};
use crate::io::fmt_f64;
use crate::linalg::SymmetricEigen;
use crate::tolerances::{COINCIDENT_SITE, PD_MARGIN};

/// Scaled dipole tensor `W = alpha T`, `3N x 3N`, zero diagonal blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    pub w: DMatrix<f64>,
    /// `None` for mode-level models that do not come from QDO sites.
    pub n_qdo: Option<usize>,
}

impl CouplingMatrix {
    /// Coupling between individual modes, e.g. the three-mode model.
    /// The matrix must be symmetric with a zero diagonal.
    pub fn mode_level(w: DMatrix<f64>) -> Result<Self> {
        if !w.is_square() {
            return Err(QdoError::Domain("mode coupling matrix must be square".into()));
        }
        for i in 0..w.nrows() {
            if w[(i, i)] != 0.0 {
                return Err(QdoError::Domain(format!("mode {i} couples to itself")));
            }
            for j in 0..i {
                if w[(i, j)] != w[(j, i)] {
                    return Err(QdoError::Domain("mode coupling matrix must be symmetric".into()));
                }
            }
        }
        Ok(CouplingMatrix { w, n_qdo: None })
    }

    pub fn n_modes(&self) -> usize {
        self.w.nrows()
    }

    /// Row-major CSV, 17 significant digits.
    pub fn to_csv(&self) -> String {
        matrix_csv(&self.w)
    }
}

/// Per-QDO polarizability and frequency ratio for heterogeneous assemblies.
#[derive(Debug, Clone, PartialEq)]
pub struct QdoParamSet {
    pub polarizability: Vec<f64>,
    pub frequency_ratio: Vec<f64>,
}

impl QdoParamSet {
    pub fn uniform(n: usize, polarizability: f64, frequency_ratio: f64) -> Self {
        QdoParamSet {
            polarizability: vec![polarizability; n],
            frequency_ratio: vec![frequency_ratio; n],
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.polarizability.len() != n || self.frequency_ratio.len() != n {
            return Err(QdoError::Domain(format!(
                "parameter set has {}/{} entries for {n} sites",
                self.polarizability.len(),
                self.frequency_ratio.len()
            )));
        }
        let bad = self
            .polarizability
            .iter()
            .chain(&self.frequency_ratio)
            .any(|&x| !(x.is_finite() && x > 0.0));
        if bad {
            return Err(QdoError::Domain("QDO parameters must be positive".into()));
        }
        Ok(())
    }
}

/// `V` together with the eigendecomposition of `V - I` that sets its flags.
#[derive(Debug, Clone)]
pub struct PotentialMatrix {
    pub v: DMatrix<f64>,
    /// `V - I`; equal to `W` for identical QDOs.
    pub offset: DMatrix<f64>,
    pub offset_eigen: SymmetricEigen,
    pub positive_definite: bool,
    pub perturbative: bool,
    /// Energy of the uncoupled oscillators in units of the reference quantum.
    pub reference_energy: f64,
}

impl PotentialMatrix {
    fn from_offset(offset: DMatrix<f64>, reference_energy: f64) -> Self {
        let n = offset.nrows();
        let offset_eigen = SymmetricEigen::new(&offset);
        let (lo, hi) = if n == 0 {
            (0.0, 0.0)
        } else {
            (offset_eigen.values[0], offset_eigen.values[n - 1])
        };
        let v = DMatrix::identity(n, n) + &offset;
        PotentialMatrix {
            v,
            offset,
            offset_eigen,
            positive_definite: lo > -1.0 + PD_MARGIN,
            perturbative: lo.abs().max(hi.abs()) < 1.0,
            reference_energy,
        }
    }

    pub fn n_modes(&self) -> usize {
        self.v.nrows()
    }

    /// Spectral norm of `V - I`.
    pub fn max_abs_offset_eigenvalue(&self) -> f64 {
        self.offset_eigen.values.iter().fold(0.0f64, |a, x| a.max(x.abs()))
    }

    pub fn to_csv(&self) -> String {
        matrix_csv(&self.v)
    }
}

/// The `3x3` dipole block `(I - 3 R^ R^) / R^3` for separation `r`.
pub fn dipole_block(r: [f64; 3]) -> [[f64; 3]; 3] {
    let d2 = norm2(r);
    let d = d2.sqrt();
    let inv3 = 1.0 / (d2 * d);
    let mut block = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in a..3 {
            let delta = if a == b { 1.0 } else { 0.0 };
            block[a][b] = (delta - 3.0 * r[a] * r[b] / d2) * inv3;
            block[b][a] = block[a][b];
        }
    }
    block
}

fn dipole_tensor(sites: &SiteSet, pair_scale: impl Fn(usize, usize) -> f64) -> Result<DMatrix<f64>> {
    let n = sites.len();
    let mut w = DMatrix::zeros(3 * n, 3 * n);
    for mu in 0..n {
        for xi in (mu + 1)..n {
            let r = sub(sites.positions[mu], sites.positions[xi]);
            let sep = norm2(r).sqrt();
            if sep < COINCIDENT_SITE {
                return Err(QdoError::CoincidentSites {
                    first: mu,
                    second: xi,
                    separation: sep,
                });
            }
            let block = dipole_block(r);
            let s = pair_scale(mu, xi);
            for a in 0..3 {
                for b in 0..3 {
                    let value = s * block[a][b];
                    w[(3 * mu + a, 3 * xi + b)] = value;
                    w[(3 * xi + b, 3 * mu + a)] = value;
                }
            }
        }
    }
    Ok(w)
}

/// Dimensionless dipole coupling of identical QDOs.
pub fn build_coupling(sites: &SiteSet) -> Result<CouplingMatrix> {
    let w = dipole_tensor(sites, |_, _| 1.0)?;
    Ok(CouplingMatrix {
        w,
        n_qdo: Some(sites.len()),
    })
}

/// `V = I + W` with validity flags.
pub fn build_potential(coupling: &CouplingMatrix) -> PotentialMatrix {
    let n = coupling.n_modes();
    PotentialMatrix::from_offset(coupling.w.clone(), 0.5 * n as f64)
}

/// Potential matrix of heterogeneous QDOs. Positions share the length unit
/// of `polarizability^(1/3)`; energies are in units of the reference quantum.
pub fn build_potential_general(sites: &SiteSet, params: &QdoParamSet) -> Result<PotentialMatrix> {
    let n = sites.len();
    params.validate(n)?;
    let omega = &params.frequency_ratio;
    let alpha = &params.polarizability;
    let mut v = dipole_tensor(sites, |mu, xi| omega[mu] * omega[xi] * (alpha[mu] * alpha[xi]).sqrt())?;
    for mu in 0..n {
        for a in 0..3 {
            v[(3 * mu + a, 3 * mu + a)] = omega[mu] * omega[mu];
        }
    }
    let offset = v - DMatrix::identity(3 * n, 3 * n);
    let reference = 1.5 * omega.iter().sum::<f64>();
    Ok(PotentialMatrix::from_offset(offset, reference))
}

fn matrix_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| fmt_f64(m[(i, j)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_trimer, SiteSet};
    use crate::linalg::max_abs;
    use std::f64::consts::FRAC_PI_3;

    fn dimer(axis: usize, rho: f64) -> SiteSet {
        let mut p = [0.0; 3];
        p[axis] = rho;
        SiteSet::custom(vec![[0.0; 3], p]).unwrap()
    }

    #[test]
    fn dimer_blocks() {
        let rho: f64 = 1.3;
        let z = build_coupling(&dimer(2, rho)).unwrap();
        let c = rho.powi(-3);
        let expect_z = [c, c, -2.0 * c];
        let x = build_coupling(&dimer(0, rho)).unwrap();
        let expect_x = [-2.0 * c, c, c];
        for a in 0..3 {
            for b in 0..3 {
                let ez = if a == b { expect_z[a] } else { 0.0 };
                let ex = if a == b { expect_x[a] } else { 0.0 };
                assert!((z.w[(a, 3 + b)] - ez).abs() < 1e-15);
                assert!((x.w[(3 + a, b)] - ex).abs() < 1e-15);
                assert_eq!(z.w[(a, b)], 0.0);
            }
        }
    }

    #[test]
    fn equilateral_trace_of_square() {
        let w = build_coupling(&build_trimer(1.0, FRAC_PI_3).unwrap()).unwrap().w;
        assert!(((&w * &w).trace() - 36.0).abs() < 1e-12);
        assert!(w.trace().abs() < 1e-15);
        assert_eq!(w, w.transpose());
    }

    #[test]
    fn blocks_traceless_and_symmetric() {
        let w = build_coupling(&build_trimer(1.7, 2.2).unwrap()).unwrap().w;
        for mu in 0..3 {
            for xi in 0..3 {
                let tr: f64 = (0..3).map(|a| w[(3 * mu + a, 3 * xi + a)]).sum();
                assert!(tr.abs() < 1e-15);
                for a in 0..3 {
                    for b in 0..3 {
                        assert_eq!(w[(3 * mu + a, 3 * xi + b)], w[(3 * mu + b, 3 * xi + a)]);
                    }
                }
            }
        }
    }

    #[test]
    fn coincident_sites_rejected() {
        let s = SiteSet {
            kind: crate::geometry::GeometryKind::Custom,
            rho: 1.0,
            theta: None,
            positions: vec![[0.0; 3], [1.0, 0.0, 0.0], [1e-12, 0.0, 0.0]],
        };
        assert!(matches!(build_coupling(&s), Err(QdoError::CoincidentSites { .. })));
    }

    #[test]
    fn uncoupled_potential_is_identity() {
        let w = CouplingMatrix::mode_level(DMatrix::zeros(6, 6)).unwrap();
        let v = build_potential(&w);
        assert_eq!(v.v, DMatrix::identity(6, 6));
        assert!(v.positive_definite && v.perturbative);
    }

    #[test]
    fn dimer_flags() {
        let v = build_potential(&build_coupling(&dimer(2, 2.0)).unwrap());
        let expect = [-0.25, -0.125, -0.125, 0.125, 0.125, 0.25];
        for (got, want) in v.offset_eigen.values.iter().zip(expect) {
            assert!((got - want).abs() < 1e-15);
        }
        assert!(v.positive_definite && v.perturbative);

        let v = build_potential(&build_coupling(&dimer(2, 0.9)).unwrap());
        assert!((v.max_abs_offset_eigenvalue() - 2.0 / 0.729).abs() < 1e-12);
        assert!(!v.positive_definite && !v.perturbative);
    }

    #[test]
    fn general_reduces_to_homogeneous() {
        let alpha: f64 = 2.5;
        let physical = build_trimer(3.0, 1.9).unwrap();
        let params = QdoParamSet::uniform(3, alpha, 1.0);
        let general = build_potential_general(&physical, &params).unwrap();
        let reduced = physical.scaled(alpha.powf(-1.0 / 3.0));
        let homogeneous = build_potential(&build_coupling(&reduced).unwrap());
        assert!(max_abs(&(&general.v - &homogeneous.v)) < 1e-14);
        assert!((general.reference_energy - 4.5).abs() < 1e-15);
    }

    #[test]
    fn heterogeneous_dimer_diagonal() {
        let params = QdoParamSet {
            polarizability: vec![1.0, 1.0],
            frequency_ratio: vec![1.0, 2.0],
        };
        let v = build_potential_general(&dimer(0, 3.0), &params).unwrap();
        for a in 0..3 {
            assert_eq!(v.v[(a, a)], 1.0);
            assert_eq!(v.v[(3 + a, 3 + a)], 4.0);
        }
        // off-diagonal scaled by omega_1 omega_2 = 2
        assert!((v.v[(0, 3)] - 2.0 * (-2.0 / 27.0)).abs() < 1e-15);
    }

    #[test]
    fn general_rejects_bad_params() {
        let s = dimer(0, 3.0);
        assert!(build_potential_general(&s, &QdoParamSet::uniform(3, 1.0, 1.0)).is_err());
        assert!(build_potential_general(&s, &QdoParamSet::uniform(2, -1.0, 1.0)).is_err());
        assert!(build_potential_general(&s, &QdoParamSet::uniform(2, 1.0, 0.0)).is_err());
    }

    #[test]
    fn mode_level_validation() {
        let mut k = DMatrix::zeros(3, 3);
        k[(0, 1)] = 0.2;
        assert!(CouplingMatrix::mode_level(k.clone()).is_err());
        k[(1, 0)] = 0.2;
        assert!(CouplingMatrix::mode_level(k.clone()).is_ok());
        k[(2, 2)] = 0.1;
        assert!(CouplingMatrix::mode_level(k).is_err());
    }

    #[test]
    fn csv_dump() {
        let w = build_coupling(&dimer(2, 2.0)).unwrap();
        let csv = w.to_csv();
        assert_eq!(csv.lines().count(), 6);
        let first: Vec<f64> = csv.lines().next().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!(first, vec![0.0, 0.0, 0.0, 0.125, 0.0, 0.0]);
    }
}
