//! Two-level truncation of the oscillator modes.
//!
//! Qubit `i` is bit `i` of the computational-basis index; bit value 0 is the
//! oscillator ground level (energy 1/2) and 1 the first excited level (3/2).

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::coupling::CouplingMatrix;
use crate::error::{QdoError, Result};
use crate::linalg::SymmetricEigen;
use crate::tolerances::{QUBIT_DENSE_MAX, QUBIT_MAX, QUBIT_RESIDUAL};

/// `H = (1/2) sum_i (2 - Z_i) + sum_{i<j} c_ij X_i X_j`, stored as its
/// diagonal plus the coupling list so large registers stay matrix-free.
#[derive(Debug, Clone)]
pub struct QubitModel {
    pub d: usize,
    pub couplings: Vec<(usize, usize, f64)>,
    /// `tr(W^2) / 16` of the source oscillator model.
    pub pair_energy: f64,
    diag: Vec<f64>,
}

impl QubitModel {
    /// Uses the entries of `c` (upper triangle) directly as qubit couplings.
    pub fn from_couplings(c: &DMatrix<f64>) -> Result<Self> {
        let model = Self::assemble(c, 1.0)?;
        Ok(model)
    }

    fn assemble(w: &DMatrix<f64>, scale: f64) -> Result<Self> {
        let d = w.nrows();
        if !w.is_square() || d == 0 {
            return Err(QdoError::Domain("coupling matrix must be square and nonempty".into()));
        }
        if d > QUBIT_MAX {
            return Err(QdoError::TooLarge { size: d, budget: QUBIT_MAX });
        }
        let mut couplings = Vec::new();
        let mut tr_w2 = 0.0;
        for i in 0..d {
            for j in (i + 1)..d {
                let x = w[(i, j)];
                tr_w2 += 2.0 * x * x;
                if x != 0.0 {
                    couplings.push((i, j, scale * x));
                }
            }
        }
        let dim = 1usize << d;
        let diag = (0..dim)
            .map(|s: usize| 0.5 * d as f64 + s.count_ones() as f64)
            .collect();
        Ok(QubitModel { d, couplings, pair_energy: tr_w2 / 16.0, diag })
    }

    pub fn dim(&self) -> usize {
        1 << self.d
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    /// `H v` without forming `H`.
    pub fn apply(&self, v: &[f64], out: &mut [f64]) {
        for (o, (d, x)) in out.iter_mut().zip(self.diag.iter().zip(v)) {
            *o = d * x;
        }
        for &(i, j, c) in &self.couplings {
            let flip = (1usize << i) | (1usize << j);
            for (s, o) in out.iter_mut().enumerate() {
                *o += c * v[s ^ flip];
            }
        }
    }

    pub fn hamiltonian(&self) -> DMatrix<f64> {
        let dim = self.dim();
        let mut h = DMatrix::from_diagonal(&DVector::from_column_slice(&self.diag));
        for &(i, j, c) in &self.couplings {
            let flip = (1usize << i) | (1usize << j);
            for s in 0..dim {
                h[(s ^ flip, s)] += c;
            }
        }
        h
    }
}

/// Qubit model of an oscillator assembly. Projecting `x = (a + a^dag)/sqrt 2`
/// onto the two lowest levels gives `X / sqrt 2`, so each qubit coupling is
/// `w_ij / 2`.
pub fn build_qubit_model(w: &CouplingMatrix) -> Result<QubitModel> {
    QubitModel::assemble(&w.w, 0.5)
}

#[derive(Debug, Clone)]
pub struct QubitGroundState {
    pub energy: f64,
    pub state: DVector<f64>,
    pub residual: f64,
}

impl QubitGroundState {
    pub fn d(&self) -> usize {
        self.state.len().trailing_zeros() as usize
    }

    /// One-qubit reduced density matrix.
    pub fn reduced_one(&self, i: usize) -> [[f64; 2]; 2] {
        let bit = 1usize << i;
        let mut rho = [[0.0; 2]; 2];
        for s in 0..self.state.len() {
            if s & bit == 0 {
                let (a, b) = (self.state[s], self.state[s | bit]);
                rho[0][0] += a * a;
                rho[0][1] += a * b;
                rho[1][1] += b * b;
            }
        }
        rho[1][0] = rho[0][1];
        rho
    }

    /// Two-qubit reduced density matrix, local index `b_i + 2 b_j`.
    pub fn reduced_two(&self, i: usize, j: usize) -> DMatrix<f64> {
        let (bi, bj) = (1usize << i, 1usize << j);
        let mut rho = DMatrix::zeros(4, 4);
        for s in 0..self.state.len() {
            if s & (bi | bj) != 0 {
                continue;
            }
            let idx = [s, s | bi, s | bj, s | bi | bj];
            for (r, &sr) in idx.iter().enumerate() {
                for (c, &sc) in idx.iter().enumerate() {
                    rho[(r, c)] += self.state[sr] * self.state[sc];
                }
            }
        }
        rho
    }
}

/// Lowest eigenpair: dense for small registers, Lanczos above.
pub fn ground_state(model: &QubitModel) -> Result<QubitGroundState> {
    let (energy, mut state) = if model.d <= QUBIT_DENSE_MAX {
        let eig = SymmetricEigen::new(&model.hamiltonian());
        (eig.values[0], eig.vectors.column(0).into_owned())
    } else {
        lanczos_lowest(model)?
    };
    // fix the overall sign for reproducible output
    let pivot = state.iter().fold(0.0f64, |m, &x| if x.abs() > m.abs() { x } else { m });
    if pivot < 0.0 {
        state.neg_mut();
    }
    let residual = residual_norm(model, &state, energy);
    if residual > QUBIT_RESIDUAL {
        return Err(QdoError::Domain(format!("qubit ground state residual {residual:e} too large")));
    }
    Ok(QubitGroundState { energy, state, residual })
}

fn residual_norm(model: &QubitModel, x: &DVector<f64>, energy: f64) -> f64 {
    let mut hx = vec![0.0; x.len()];
    model.apply(x.as_slice(), &mut hx);
    hx.iter().zip(x.iter()).map(|(h, v)| (h - energy * v).powi(2)).sum::<f64>().sqrt()
}

/// Restarted Lanczos with full reorthogonalisation.
fn lanczos_lowest(model: &QubitModel) -> Result<(f64, DVector<f64>)> {
    let dim = model.dim();
    let m = dim.min(120);
    let mut start = DVector::from_fn(dim, |s, _| 1.0 + 0.1 * ((s as f64) * 0.618).sin());
    start.normalize_mut();
    let mut w = vec![0.0; dim];
    for _ in 0..200 {
        let mut basis: Vec<DVector<f64>> = vec![start.clone()];
        let (mut alpha, mut beta) = (Vec::with_capacity(m), Vec::with_capacity(m));
        for k in 0..m {
            model.apply(basis[k].as_slice(), &mut w);
            let mut v = DVector::from_column_slice(&w);
            for q in &basis {
                let proj = q.dot(&v);
                v.axpy(-proj, q, 1.0);
            }
            // second pass keeps the basis orthogonal to working precision
            for q in &basis {
                let proj = q.dot(&v);
                v.axpy(-proj, q, 1.0);
            }
            alpha.push(basis[k].dot(&DVector::from_column_slice(&w)));
            let b = v.norm();
            if k + 1 == m || b < 1e-14 {
                break;
            }
            beta.push(b);
            basis.push(v / b);
        }
        let n = alpha.len();
        let mut t = DMatrix::zeros(n, n);
        for k in 0..n {
            t[(k, k)] = alpha[k];
            if k + 1 < n {
                t[(k, k + 1)] = beta[k];
                t[(k + 1, k)] = beta[k];
            }
        }
        let eig = SymmetricEigen::new(&t);
        let mut x = DVector::zeros(dim);
        for (k, q) in basis.iter().enumerate().take(n) {
            x.axpy(eig.vectors[(k, 0)], q, 1.0);
        }
        x.normalize_mut();
        // Rayleigh quotient of the normalised Ritz vector
        model.apply(x.as_slice(), &mut w);
        let energy = x.dot(&DVector::from_column_slice(&w));
        if residual_norm(model, &x, energy) < QUBIT_RESIDUAL {
            return Ok((energy, x));
        }
        start = x;
    }
    Err(QdoError::Domain("Lanczos did not converge".into()))
}

/// Qubit analogue of the binding energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QubitBinding {
    pub min_eig: f64,
    /// `(d - min eig) / 2` as printed; nonzero for an uncoupled register.
    pub e_qub_printed: f64,
    /// Value of the printed quantity at zero coupling, `d / 4`.
    pub baseline: f64,
    /// `d / 2 - min eig`, zero for an uncoupled register.
    pub e_qub: f64,
    /// `e_qub - delta_2`.
    pub delta_qub: f64,
}

pub fn qubit_binding(model: &QubitModel, gs: &QubitGroundState) -> QubitBinding {
    let d = model.d as f64;
    let e_qub = 0.5 * d - gs.energy;
    QubitBinding {
        min_eig: gs.energy,
        e_qub_printed: 0.5 * (d - gs.energy),
        baseline: 0.25 * d,
        e_qub,
        delta_qub: e_qub - model.pair_energy,
    }
}

/// One-qubit tangle `4 det rho_i`.
pub fn qubit_tangle(gs: &QubitGroundState, i: usize) -> f64 {
    let r = gs.reduced_one(i);
    (4.0 * (r[0][0] * r[1][1] - r[0][1] * r[1][0])).clamp(0.0, 1.0)
}

fn spin_flip(rho: &DMatrix<f64>) -> DMatrix<f64> {
    // Y (x) Y is real and symmetric; rho is real so conjugation is trivial
    let yy = DMatrix::from_row_slice(
        4,
        4,
        &[0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0],
    );
    &yy * rho * &yy
}

/// Decreasing square roots of the spectrum of `sqrt(rho) rho~ sqrt(rho)`.
pub fn wootters_lambdas(rho: &DMatrix<f64>) -> [f64; 4] {
    // roundoff-level eigenvalues would otherwise leak in at their square root
    let root = SymmetricEigen::new(rho).apply(|x| if x < 1e-14 { 0.0 } else { x.sqrt() });
    let r = crate::linalg::symmetrise(&root * spin_flip(rho) * &root);
    let vals = SymmetricEigen::values_of(&r);
    let mut out = [0.0; 4];
    for (k, v) in vals.iter().rev().enumerate() {
        // spectrum of a product of unit-trace states: entries below 1e-15 are roundoff
        let v = if *v > -1e-12 && *v < 1e-15 { 0.0 } else { *v };
        out[k] = v.max(0.0).sqrt();
    }
    out
}

/// Pairwise tangle of qubits `i` and `j` (squared concurrence).
pub fn qubit_pair_tangle(gs: &QubitGroundState, i: usize, j: usize) -> f64 {
    let l = wootters_lambdas(&gs.reduced_two(i, j));
    let c = (l[0] - l[1] - l[2] - l[3]).max(0.0);
    (c * c).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::build_coupling;
    use crate::geometry::build_trimer;
    use std::f64::consts::FRAC_PI_2;

    fn pair(kappa: f64) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[0.0, kappa, kappa, 0.0])
    }

    #[test]
    fn single_qubit_levels() {
        let m = QubitModel::from_couplings(&DMatrix::zeros(1, 1)).unwrap();
        let e = SymmetricEigen::values_of(&m.hamiltonian());
        assert_eq!(e.as_slice(), &[0.5, 1.5]);
    }

    #[test]
    fn two_qubit_pattern() {
        let h = QubitModel::from_couplings(&pair(0.3)).unwrap().hamiltonian();
        let expect = DMatrix::from_row_slice(
            4,
            4,
            &[1.0, 0.0, 0.0, 0.3, 0.0, 2.0, 0.3, 0.0, 0.0, 0.3, 2.0, 0.0, 0.3, 0.0, 0.0, 3.0],
        );
        assert_eq!(h, expect);
    }

    #[test]
    fn trimer_register_size() {
        let w = build_coupling(&build_trimer(2.6, FRAC_PI_2).unwrap()).unwrap();
        let m = build_qubit_model(&w).unwrap();
        assert_eq!(m.d, 9);
        assert_eq!(m.hamiltonian().nrows(), 512);
    }

    #[test]
    fn too_large() {
        let r = QubitModel::from_couplings(&DMatrix::zeros(15, 15));
        assert!(matches!(r, Err(QdoError::TooLarge { size: 15, budget: 14 })));
    }

    #[test]
    fn uncoupled_binding_and_tangles() {
        let m = QubitModel::from_couplings(&DMatrix::zeros(3, 3)).unwrap();
        let gs = ground_state(&m).unwrap();
        let b = qubit_binding(&m, &gs);
        assert_eq!(b.e_qub, 0.0);
        assert_eq!(b.e_qub_printed, b.baseline);
        for i in 0..3 {
            assert_eq!(qubit_tangle(&gs, i), 0.0);
            for j in (i + 1)..3 {
                assert_eq!(qubit_pair_tangle(&gs, i, j), 0.0);
            }
        }
    }

    #[test]
    fn two_qubit_pure_state_tangles_agree() {
        let gs = ground_state(&QubitModel::from_couplings(&pair(0.4)).unwrap()).unwrap();
        // ground state cos t |00> - sin t |11> with tan 2t = kappa
        let t = 0.5 * 0.4f64.atan();
        let oracle = (2.0 * t.sin() * t.cos()).powi(2);
        assert!((qubit_tangle(&gs, 0) - oracle).abs() < 1e-12);
        assert!((qubit_pair_tangle(&gs, 0, 1) - oracle).abs() < 1e-10);
    }

    #[test]
    fn symmetric_three_qubit_tangles_equal() {
        let mut c = DMatrix::from_element(3, 3, 0.3);
        c.fill_diagonal(0.0);
        let gs = ground_state(&QubitModel::from_couplings(&c).unwrap()).unwrap();
        let t0 = qubit_tangle(&gs, 0);
        assert!(t0 > 0.0);
        for i in 1..3 {
            assert!((qubit_tangle(&gs, i) - t0).abs() < 1e-12);
        }
        let pairs = qubit_pair_tangle(&gs, 0, 1) + qubit_pair_tangle(&gs, 0, 2);
        assert!(t0 >= pairs - 1e-9);
    }

    #[test]
    fn lanczos_matches_dense() {
        let w = build_coupling(&build_trimer(2.0, 1.7).unwrap()).unwrap();
        let m = build_qubit_model(&w).unwrap();
        let dense = SymmetricEigen::new(&m.hamiltonian());
        let (e, x) = lanczos_lowest(&m).unwrap();
        assert!((e - dense.values[0]).abs() < 1e-10);
        let overlap = x.dot(&dense.vectors.column(0)).abs();
        assert!((overlap - 1.0).abs() < 1e-8);
    }

    #[test]
    fn large_register_uses_lanczos() {
        let sites = crate::geometry::build_chain(4, 2.5, 2.0).unwrap();
        let w = build_coupling(&sites).unwrap();
        let m = build_qubit_model(&w).unwrap();
        assert_eq!(m.d, 12);
        let gs = ground_state(&m).unwrap();
        assert!(gs.residual < 1e-9);
        assert!((gs.state.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn weak_trimer_reproduces_leading_orders() {
        let sites = build_trimer(4.0, 1.2).unwrap();
        let w = build_coupling(&sites).unwrap();
        let m = build_qubit_model(&w).unwrap();
        let b = qubit_binding(&m, &ground_state(&m).unwrap());
        let d3 = crate::energy::axilrod_teller(&sites);
        assert!(d3.signum() == b.delta_qub.signum());
        assert!(((b.delta_qub - d3) / d3).abs() < 0.2);
    }
}
