//! Thin wrapper over the dense symmetric eigensolver.

use nalgebra::{DMatrix, DVector};

/// Orthogonal eigendecomposition `m = vectors * diag(values) * vectors^T`,
/// eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl SymmetricEigen {
    pub fn new(m: &DMatrix<f64>) -> Self {
        let eig = m.clone().symmetric_eigen();
        let n = eig.eigenvalues.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
        let mut vectors = DMatrix::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            vectors.set_column(dst, &eig.eigenvectors.column(src));
        }
        SymmetricEigen { values, vectors }
    }

    /// Eigenvalues only, ascending.
    pub fn values_of(m: &DMatrix<f64>) -> DVector<f64> {
        let mut v: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
        v.sort_by(|a, b| a.total_cmp(b));
        DVector::from_vec(v)
    }

    /// `O f(diag) O^T`, symmetrised.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let mut scaled = self.vectors.clone();
        for (k, mut col) in scaled.column_iter_mut().enumerate() {
            col *= f(self.values[k]);
        }
        let m = &scaled * self.vectors.transpose();
        symmetrise(m)
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        self.apply(|x| x)
    }
}

pub fn symmetrise(m: DMatrix<f64>) -> DMatrix<f64> {
    let t = m.transpose();
    (m + t) * 0.5
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
}
