//! Ground-state covariance matrices and two-mode reductions.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::coupling::PotentialMatrix;
use crate::error::{QdoError, Result};
use crate::linalg::{max_abs, symmetrise, SymmetricEigen};
use crate::tolerances::{EIGENVALUE_FLOOR, PHYSICALITY, STANDARD_FORM_DISC};

/// Position and momentum blocks of the ground-state covariance matrix,
/// normalised so that the uncoupled vacuum has `X = P = I`.
#[derive(Debug, Clone)]
pub struct GroundStateCM {
    pub x: DMatrix<f64>,
    pub p: DMatrix<f64>,
}

impl GroundStateCM {
    /// `X = V^{-1/2}`, `P = V^{1/2}`.
    pub fn from_potential(v: &PotentialMatrix) -> Result<Self> {
        let eig = &v.offset_eigen;
        if let Some(min) = eig.values.iter().map(|w| 1.0 + w).min_by(|a, b| a.total_cmp(b)) {
            if min <= EIGENVALUE_FLOOR {
                return Err(QdoError::NotPositiveDefinite { min_eigenvalue: min });
            }
        }
        Ok(GroundStateCM {
            x: eig.apply(|w| 1.0 / (1.0 + w).sqrt()),
            p: eig.apply(|w| (1.0 + w).sqrt()),
        })
    }

    /// From explicit blocks; both must be symmetric with matching size.
    pub fn from_blocks(x: DMatrix<f64>, p: DMatrix<f64>) -> Result<Self> {
        if !x.is_square() || x.shape() != p.shape() {
            return Err(QdoError::Domain("X and P must be square and of equal size".into()));
        }
        let scale = max_abs(&x).max(max_abs(&p)).max(1.0);
        if max_abs(&(&x - x.transpose())) > PHYSICALITY * scale
            || max_abs(&(&p - p.transpose())) > PHYSICALITY * scale
        {
            return Err(QdoError::Domain("X and P must be symmetric".into()));
        }
        Ok(GroundStateCM { x: symmetrise(x), p: symmetrise(p) })
    }

    pub fn n_modes(&self) -> usize {
        self.x.nrows()
    }

    /// `X_ii P_ii`, at least 1 for any physical state.
    pub fn uncertainty_product(&self, i: usize) -> f64 {
        self.x[(i, i)] * self.p[(i, i)]
    }

    /// `X_ij P_ij`; negative values signal a partial-transpose violation.
    pub fn cross_product(&self, i: usize, j: usize) -> f64 {
        self.x[(i, j)] * self.p[(i, j)]
    }

    /// Largest deviation of `X P` from the identity; zero for a pure state.
    pub fn purity_residual(&self) -> f64 {
        let xp = &self.x * &self.p;
        max_abs(&(xp - DMatrix::identity(self.n_modes(), self.n_modes())))
    }

    /// Indices where `P_ii <= 1` or `X_ii >= 1 / P_ii` fail beyond `tol`.
    pub fn diagonal_violations(&self, tol: f64) -> Vec<usize> {
        (0..self.n_modes())
            .filter(|&i| {
                let (x, p) = (self.x[(i, i)], self.p[(i, i)]);
                p > 1.0 + tol || x < 1.0 / p - tol
            })
            .collect()
    }

    /// Two-mode sub-blocks `(X_ij, P_ij)` restricted to modes `i` and `j`.
    pub fn pair_blocks(&self, i: usize, j: usize) -> (DMatrix<f64>, DMatrix<f64>) {
        let pick = |m: &DMatrix<f64>| {
            DMatrix::from_row_slice(2, 2, &[m[(i, i)], m[(i, j)], m[(j, i)], m[(j, j)]])
        };
        (pick(&self.x), pick(&self.p))
    }
}

/// Symplectic eigenvalues of the block-diagonal form `A (+) B`, ascending.
/// Both blocks must be symmetric positive definite.
pub fn symplectic_spectrum(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<Vec<f64>> {
    if a.shape() != b.shape() || !a.is_square() {
        return Err(QdoError::Domain("blocks must be square and of equal size".into()));
    }
    let eb = SymmetricEigen::new(b);
    if eb.values.iter().any(|&v| v <= 0.0) {
        return Err(QdoError::UnphysicalState("momentum block is not positive definite".into()));
    }
    let root_b = eb.apply(f64::sqrt);
    let m = symmetrise(&root_b * a * &root_b);
    let values = SymmetricEigen::values_of(&m);
    if values.iter().any(|&v| v <= 0.0) {
        return Err(QdoError::UnphysicalState("position block is not positive definite".into()));
    }
    Ok(values.iter().map(|v| v.sqrt()).collect())
}

/// Local-symplectic invariants of a two-mode reduced state: the diagonal
/// entries `a`, `b` and the correlations `c_plus`, `c_minus` shared by both
/// blocks after rescaling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoModeStandardForm {
    pub a: f64,
    pub b: f64,
    pub c_plus: f64,
    pub c_minus: f64,
    /// The two correlation magnitudes coincided within tolerance.
    pub collapsed: bool,
}

impl TwoModeStandardForm {
    /// Smallest symplectic eigenvalue of the partial transpose.
    pub fn min_pt_symplectic(&self) -> f64 {
        let (a, b, cp, cm) = (self.a, self.b, self.c_plus, self.c_minus);
        let delta = a * a + b * b - 2.0 * cp * cm;
        let det = (a * b - cp * cp) * (a * b - cm * cm);
        let disc = (delta * delta - 4.0 * det).max(0.0);
        ((delta - disc.sqrt()) / 2.0).max(0.0).sqrt()
    }
}

/// Reduce modes `(i, j)` of `cm` to standard form.
pub fn reduce_two_mode(cm: &GroundStateCM, i: usize, j: usize) -> Result<TwoModeStandardForm> {
    let n = cm.n_modes();
    if i == j || i >= n || j >= n {
        return Err(QdoError::Domain(format!("invalid mode pair ({i}, {j}) for {n} modes")));
    }
    let (x, p) = cm.pair_blocks(i, j);
    let nu = symplectic_spectrum(&x, &p)?;
    if nu[0] < 1.0 - PHYSICALITY {
        return Err(QdoError::UnphysicalState(format!(
            "reduced state of modes ({i}, {j}) has symplectic eigenvalue {}",
            nu[0]
        )));
    }
    let a = cm.uncertainty_product(i).sqrt();
    let b = cm.uncertainty_product(j).sqrt();
    let prod = cm.cross_product(i, j);
    let q = (p[(0, 1)] * p[(0, 1)] - p[(0, 0)] * p[(1, 1)]) * (x[(0, 1)] * x[(0, 1)] - x[(0, 0)] * x[(1, 1)]);
    let ab = a * b;
    let sigma = (ab * ab + prod * prod - q) / ab;
    let disc = sigma * sigma - 4.0 * prod * prod;
    // sigma carries absolute roundoff of order (ab)^2 eps from the cancellation above
    let scale = sigma * sigma + sigma.abs() * ab * ab + (ab * ab * f64::EPSILON).powi(2);
    let (cp2, cm2, collapsed) = if disc.abs() <= STANDARD_FORM_DISC * scale {
        (sigma / 2.0, sigma / 2.0, true)
    } else if disc < 0.0 {
        return Err(QdoError::UnphysicalState(format!(
            "standard-form discriminant {disc} is negative for modes ({i}, {j})"
        )));
    } else {
        let root = disc.sqrt();
        let cp2 = (sigma + root) / 2.0;
        // product form avoids cancellation in the smaller root
        let cm2 = if cp2 > 0.0 { prod * prod / cp2 } else { 0.0 };
        (cp2, cm2, false)
    };
    let c_plus = cp2.max(0.0).sqrt();
    let c_minus = prod.signum() * cm2.max(0.0).sqrt();
    Ok(TwoModeStandardForm { a, b, c_plus, c_minus, collapsed })
}
