//! Gaussian tangles, monogamy bounds and the entanglement distribution index.

use std::f64::consts::PI;

use serde::Serialize;

use crate::coupling::CouplingMatrix;
use crate::error::{QdoError, Result};
use crate::gaussian::{reduce_two_mode, GroundStateCM, TwoModeStandardForm};
use crate::io::Table;
use crate::tolerances::{EDI_DENOMINATOR, ETA_DEGENERATE, INEQUALITY, PHI_GRID, PHI_REFINE};

/// Tangle of one mode against the rest, from `u = X_ii P_ii`.
pub fn tangle_from_product(u: f64) -> f64 {
    let u = u.max(1.0);
    let t = u.sqrt() + (u - 1.0).sqrt() - 1.0;
    0.25 * t * t
}

pub fn mode_tangle(cm: &GroundStateCM, i: usize) -> f64 {
    tangle_from_product(cm.uncertainty_product(i))
}

/// Upper bound on a pairwise tangle, zero for non-positive arguments.
pub fn f_bound(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let t = x.sqrt() + (x + 1.0).sqrt() - 1.0;
    0.25 * t * t
}

/// Reduced tangle `g(x) = x (1 + sqrt x)^2 / (1 + 2 sqrt x)^2`.
pub fn g_reduced(x: f64) -> f64 {
    let x = x.max(0.0);
    let s = x.sqrt();
    let r = (1.0 + s) / (1.0 + 2.0 * s);
    x * r * r
}

pub fn pair_bound(cm: &GroundStateCM, i: usize, j: usize) -> f64 {
    f_bound(-cm.cross_product(i, j))
}

/// Tangle of the isolated two-mode ground state with coupling `w`.
pub fn reference_tangle(w: f64) -> Result<f64> {
    let aw = w.abs();
    if aw >= 1.0 {
        return Err(QdoError::SeriesDivergent { max_abs: aw });
    }
    // sqrt(eps_+ / eps_-) = ((1 + |w|) / (1 - |w|))^(1/4)
    let t = ((1.0 + aw) / (1.0 - aw)).sqrt().sqrt() - 1.0;
    Ok(0.25 * t * t)
}

/// Sums of pair bounds and reference tangles over the nine mode pairs
/// joining QDOs `mu` and `xi`.
pub fn edi_parts(cm: &GroundStateCM, w: &CouplingMatrix, mu: usize, xi: usize) -> Result<(f64, f64)> {
    let n_qdo = cm.n_modes() / 3;
    if mu == xi || mu >= n_qdo || xi >= n_qdo || cm.n_modes() != w.n_modes() {
        return Err(QdoError::Domain(format!("invalid QDO pair ({mu}, {xi}) for {n_qdo} QDOs")));
    }
    let (mut num, mut den) = (0.0, 0.0);
    for i in 3 * mu..3 * mu + 3 {
        for j in 3 * xi..3 * xi + 3 {
            num += pair_bound(cm, i, j);
            den += reference_tangle(w.w[(i, j)])?;
        }
    }
    Ok((num, den))
}

/// Entanglement distribution index of QDOs `mu` and `xi`. Values above one
/// mean the pair shares more entanglement than it would in isolation.
pub fn edi(cm: &GroundStateCM, w: &CouplingMatrix, mu: usize, xi: usize) -> Result<f64> {
    let (num, den) = edi_parts(cm, w, mu, xi)?;
    if den < EDI_DENOMINATOR {
        return Err(QdoError::DegenerateDenominator { mu, xi });
    }
    Ok(num / den)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReducedTangle {
    pub total: f64,
    pub per_mode: Vec<f64>,
}

pub fn reduced_tangle_total(cm: &GroundStateCM) -> ReducedTangle {
    let per_mode: Vec<f64> = (0..cm.n_modes()).map(|i| g_reduced(mode_tangle(cm, i))).collect();
    ReducedTangle { total: per_mode.iter().sum(), per_mode }
}

/// Mixed-state pairwise tangle with diagnostics of the minimisation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MixedTangle {
    pub tau: f64,
    pub m_min: f64,
    pub phi_min: f64,
    /// `eta*` vanished and only `phi = 0, pi` were evaluated.
    pub degenerate_branch: bool,
    /// `1 - xi_+^2 / eta*` was negative and clamped to zero.
    pub radicand_clamped: bool,
    /// PPT pair; no minimisation was performed.
    pub ppt: bool,
}

struct MixedForm {
    xi_minus: f64,
    root_eta: f64,
    h2_const: f64,
    h2_cos: f64,
    h2_sin: f64,
}

impl MixedForm {
    fn m(&self, phi: f64) -> f64 {
        let (s, c) = phi.sin_cos();
        let h1 = self.xi_minus + self.root_eta * c;
        let h2 = self.h2_const - self.h2_cos * c + self.h2_sin * s;
        if h2 <= 0.0 {
            f64::INFINITY
        } else {
            h1 * h1 / h2
        }
    }
}

/// Pairwise tangle of a mixed two-mode reduced state in standard form.
pub fn mixed_pair_tangle(sf: &TwoModeStandardForm) -> MixedTangle {
    let (a, b, cp, cm) = (sf.a, sf.b, sf.c_plus, sf.c_minus);
    if cp * cm >= 0.0 {
        return MixedTangle {
            tau: 0.0,
            m_min: 0.0,
            phi_min: 0.0,
            degenerate_branch: false,
            radicand_clamped: false,
            ppt: true,
        };
    }
    let (a2, b2) = (a * a, b * b);
    let big_a = a * b - cm * cm;
    let xi_plus = cp * big_a + cm;
    let xi_minus = cp * big_a - cm;
    let eta = (a - b * big_a) * (b - a * big_a);
    let zeta = 2.0 * a * b * cm.powi(3) + (a2 + b2) * cp * cm * cm + (a2 + b2 - 2.0 * a2 * b2) * cm
        - a * b * (a2 + b2 - 2.0) * cp;
    let h2_const = 2.0 * big_a * (a2 + b2 + 2.0 * cp * cm);

    let degenerate = eta <= ETA_DEGENERATE;
    let mut clamped = false;
    let form = if degenerate {
        MixedForm { xi_minus, root_eta: 0.0, h2_const, h2_cos: 0.0, h2_sin: 0.0 }
    } else {
        let root_eta = eta.sqrt();
        let radicand = 1.0 - xi_plus * xi_plus / eta;
        if radicand < 0.0 {
            clamped = true;
        }
        MixedForm {
            xi_minus,
            root_eta,
            h2_const,
            h2_cos: zeta / root_eta,
            h2_sin: (a2 - b2) * radicand.max(0.0).sqrt(),
        }
    };

    let (phi_min, m_min) = if degenerate {
        let (m0, mpi) = (form.m(0.0), form.m(PI));
        if m0 <= mpi {
            (0.0, m0)
        } else {
            (PI, mpi)
        }
    } else {
        minimise_periodic(|phi| form.m(phi))
    };
    MixedTangle {
        tau: f_bound(m_min),
        m_min,
        phi_min,
        degenerate_branch: degenerate,
        radicand_clamped: clamped,
        ppt: false,
    }
}

/// Global minimum on `[0, 2 pi)`: dense grid, then golden-section search
/// around the best grid point.
fn minimise_periodic(f: impl Fn(f64) -> f64) -> (f64, f64) {
    let step = 2.0 * PI / PHI_GRID as f64;
    let (mut best_k, mut best) = (0, f64::INFINITY);
    for k in 0..PHI_GRID {
        let v = f(k as f64 * step);
        if v < best {
            best = v;
            best_k = k;
        }
    }
    let centre = best_k as f64 * step;
    let (mut lo, mut hi) = (centre - step, centre + step);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > PHI_REFINE {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    let x = 0.5 * (lo + hi);
    let v = f(x);
    let (phi, m) = if v < best { (x, v) } else { (centre, best) };
    (phi.rem_euclid(2.0 * PI), m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairBound {
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

/// Per-assembly entanglement summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TangleReport {
    pub tau_mode: Vec<f64>,
    pub tau_tilde_mode: Vec<f64>,
    pub tau_tilde_total: f64,
    /// Nonzero pair bounds, `i < j`.
    pub pair_bounds: Vec<PairBound>,
    pub monogamy_margins: Vec<f64>,
    /// Sum of all per-mode margins; the summed inequality is weaker than
    /// the per-mode one.
    pub summed_margin: f64,
    pub bound_rhs: f64,
    /// `bound_rhs - tau_tilde_total`.
    pub bound_residual: f64,
    pub monogamy_violations: Vec<usize>,
    pub bound_violated: bool,
}

impl TangleReport {
    pub fn is_clean(&self) -> bool {
        self.monogamy_violations.is_empty() && !self.bound_violated
    }
}

/// `S_inf` recovered from the state alone: `(tr X + tr P - 2n) / 4`.
pub fn s_infinity_from_state(cm: &GroundStateCM) -> f64 {
    (0..cm.n_modes())
        .map(|i| cm.x[(i, i)] + cm.p[(i, i)] - 2.0)
        .sum::<f64>()
        * 0.25
}

pub fn monogamy_audit(cm: &GroundStateCM) -> TangleReport {
    monogamy_audit_with_bound(cm, s_infinity_from_state(cm))
}

/// Audit against a separately computed `S_inf`.
pub fn monogamy_audit_with_bound(cm: &GroundStateCM, s_inf: f64) -> TangleReport {
    let n = cm.n_modes();
    let tau_mode: Vec<f64> = (0..n).map(|i| mode_tangle(cm, i)).collect();
    let tau_tilde_mode: Vec<f64> = tau_mode.iter().map(|&t| g_reduced(t)).collect();
    let tau_tilde_total: f64 = tau_tilde_mode.iter().sum();
    let mut pair_bounds = Vec::new();
    let mut sums = vec![0.0; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let value = pair_bound(cm, i, j);
            if value > 0.0 {
                sums[i] += value;
                sums[j] += value;
                pair_bounds.push(PairBound { i, j, value });
            }
        }
    }
    let monogamy_margins: Vec<f64> = tau_mode.iter().zip(&sums).map(|(t, s)| t - s).collect();
    let monogamy_violations = monogamy_margins
        .iter()
        .enumerate()
        .filter(|(_, &m)| m < -INEQUALITY)
        .map(|(i, _)| i)
        .collect();
    TangleReport {
        tau_mode,
        tau_tilde_mode,
        tau_tilde_total,
        pair_bounds,
        summed_margin: monogamy_margins.iter().sum(),
        monogamy_margins,
        bound_rhs: s_inf,
        bound_residual: s_inf - tau_tilde_total,
        monogamy_violations,
        bound_violated: tau_tilde_total > s_inf + INEQUALITY,
    }
}

/// Per-pair table: bound, reference tangle, mixed-state tangle and PPT flag.
/// The reference column is `NaN` where `|w| >= 1`.
pub fn pair_table(cm: &GroundStateCM, w: &CouplingMatrix) -> Result<Table> {
    let n = cm.n_modes();
    if w.n_modes() != n {
        return Err(QdoError::Domain("coupling and state sizes differ".into()));
    }
    let mut table = Table::new(&["i", "j", "tau_sys", "tau_ref", "tau_mixed", "ppt_zero"]);
    for i in 0..n {
        for j in (i + 1)..n {
            let tau_sys = pair_bound(cm, i, j);
            let tau_ref = reference_tangle(w.w[(i, j)]).unwrap_or(f64::NAN);
            let mixed = mixed_pair_tangle(&reduce_two_mode(cm, i, j)?);
            let ppt = if cm.cross_product(i, j) >= 0.0 { 1usize } else { 0 };
            table.push(vec![i.into(), j.into(), tau_sys.into(), tau_ref.into(), mixed.tau.into(), ppt.into()]);
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::{build_coupling, build_potential};
    use crate::geometry::{build_trimer, SiteSet};
    use nalgebra::DMatrix;
    use std::f64::consts::FRAC_PI_3;

    fn state(sites: &SiteSet) -> (GroundStateCM, CouplingMatrix) {
        let w = build_coupling(sites).unwrap();
        let cm = GroundStateCM::from_potential(&build_potential(&w)).unwrap();
        (cm, w)
    }

    fn two_mode(kappa: f64) -> GroundStateCM {
        let mut k = DMatrix::zeros(2, 2);
        k[(0, 1)] = kappa;
        k[(1, 0)] = kappa;
        GroundStateCM::from_potential(&build_potential(&CouplingMatrix::mode_level(k).unwrap())).unwrap()
    }

    /// Pure two-mode tangle written in terms of the normal-mode frequencies.
    fn pure_oracle(kappa: f64) -> f64 {
        let (ep, em) = ((1.0 + kappa).sqrt(), (1.0 - kappa).sqrt());
        let t = (ep / em).sqrt() - 1.0;
        t * t / 4.0
    }

    #[test]
    fn f_bound_values() {
        assert_eq!(f_bound(-0.1), 0.0);
        assert_eq!(f_bound(0.0), 0.0);
        assert!((f_bound(1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn g_values() {
        assert!((g_reduced(1.0) - 4.0 / 9.0).abs() < 1e-15);
        assert_eq!(g_reduced(0.0), 0.0);
    }

    #[test]
    fn uncoupled_mode() {
        assert_eq!(tangle_from_product(1.0), 0.0);
        assert_eq!(tangle_from_product(1.0 - 1e-15), 0.0);
    }

    #[test]
    fn two_mode_tangle_closed_form() {
        let cm = two_mode(0.5);
        let expect = pure_oracle(0.5);
        assert!((expect - 0.024_975_7).abs() < 1e-7);
        assert!((mode_tangle(&cm, 0) - expect).abs() < 1e-12);
        assert!((pair_bound(&cm, 0, 1) - expect).abs() < 1e-12);
        assert!((reference_tangle(0.5).unwrap() - expect).abs() < 1e-15);
        let m = mixed_pair_tangle(&reduce_two_mode(&cm, 0, 1).unwrap());
        assert!((m.tau - expect).abs() < 1e-8, "{m:?}");
    }

    #[test]
    fn reference_tangle_monotone_and_bounded() {
        assert_eq!(reference_tangle(0.0).unwrap(), 0.0);
        let mut prev = 0.0;
        for k in 1..1000 {
            let t = reference_tangle(k as f64 / 1000.0).unwrap();
            assert!(t > prev);
            prev = t;
        }
        assert!(reference_tangle(1.0).is_err());
        assert!(reference_tangle(-0.3).unwrap() == reference_tangle(0.3).unwrap());
    }

    #[test]
    fn g_identity_on_trimer_modes() {
        let (cm, _) = state(&build_trimer(1.9, 2.2).unwrap());
        for i in 0..cm.n_modes() {
            let lhs = g_reduced(mode_tangle(&cm, i));
            let rhs = 0.25 * (cm.uncertainty_product(i) - 1.0);
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn dimer_edi_is_one() {
        let sites = SiteSet::custom(vec![[0.0; 3], [0.0, 0.0, 2.0]]).unwrap();
        let (cm, w) = state(&sites);
        assert!((edi(&cm, &w, 0, 1).unwrap() - 1.0).abs() < 1e-9);
        // z-modes: bound saturates the two-mode tangle
        assert!((pair_bound(&cm, 2, 5) - reference_tangle(w.w[(2, 5)]).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn trimer_edi_regimes() {
        let (cm, w) = state(&build_trimer(4.0, FRAC_PI_3).unwrap());
        assert!(edi(&cm, &w, 0, 1).unwrap() < 1.0);
        let (cm, w) = state(&build_trimer(1.6, FRAC_PI_3).unwrap());
        assert!(edi(&cm, &w, 0, 1).unwrap() > 1.0);
        let (cm, w) = state(&build_trimer(50.0, 2.0).unwrap());
        assert!((edi(&cm, &w, 0, 1).unwrap() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn edi_errors() {
        let (cm, w) = state(&build_trimer(2.0, 2.0).unwrap());
        assert!(edi(&cm, &w, 1, 1).is_err());
        assert!(edi(&cm, &w, 0, 3).is_err());
        let far = SiteSet::custom(vec![[0.0; 3], [1e120, 0.0, 0.0]]).unwrap();
        let (cm, w) = state(&far);
        assert!(matches!(edi(&cm, &w, 0, 1), Err(QdoError::DegenerateDenominator { .. })));
    }

    #[test]
    fn ppt_pairs_vanish() {
        let (cm, _) = state(&build_trimer(2.0, FRAC_PI_3).unwrap());
        let mut seen = 0;
        for i in 0..9 {
            for j in (i + 1)..9 {
                if cm.cross_product(i, j) > 0.0 {
                    seen += 1;
                    assert_eq!(pair_bound(&cm, i, j), 0.0);
                    let m = mixed_pair_tangle(&reduce_two_mode(&cm, i, j).unwrap());
                    assert_eq!(m.tau, 0.0);
                    assert!(m.ppt);
                }
            }
        }
        assert!(seen > 0);
    }

    #[test]
    fn mixed_tangle_below_bound_on_equilateral() {
        let (cm, _) = state(&build_trimer(2.0, FRAC_PI_3).unwrap());
        for i in 0..9 {
            for j in (i + 1)..9 {
                let m = mixed_pair_tangle(&reduce_two_mode(&cm, i, j).unwrap());
                assert!(m.tau >= 0.0);
                assert!(m.tau <= pair_bound(&cm, i, j) + 1e-8);
            }
        }
    }

    #[test]
    fn audit_uncoupled_is_zero() {
        let w = CouplingMatrix::mode_level(DMatrix::zeros(6, 6)).unwrap();
        let cm = GroundStateCM::from_potential(&build_potential(&w)).unwrap();
        let r = monogamy_audit(&cm);
        assert!(r.tau_mode.iter().all(|&t| t == 0.0));
        assert_eq!(r.tau_tilde_total, 0.0);
        assert!(r.pair_bounds.is_empty());
        assert!(r.is_clean());
    }

    #[test]
    fn audit_trimer_clean() {
        let (cm, _) = state(&build_trimer(1.8, 1.4).unwrap());
        let r = monogamy_audit(&cm);
        assert!(r.is_clean(), "{r:?}");
        assert!(r.tau_tilde_total > 0.0 && r.bound_residual >= 0.0);
        let json = serde_json::to_value(&r).unwrap();
        assert!(json["pair_bounds"].as_array().unwrap().len() == r.pair_bounds.len());
    }

    #[test]
    fn pair_table_columns() {
        let (cm, w) = state(&build_trimer(2.5, 2.0).unwrap());
        let t = pair_table(&cm, &w).unwrap();
        assert_eq!(t.columns, ["i", "j", "tau_sys", "tau_ref", "tau_mixed", "ppt_zero"]);
        assert_eq!(t.rows.len(), 36);
    }

    #[test]
    fn golden_section_finds_interior_minimum() {
        let (phi, m) = minimise_periodic(|x| (x - 1.234_567_89).powi(2) + 0.5);
        assert!((phi - 1.234_567_89).abs() < 1e-6);
        assert!((m - 0.5).abs() < 1e-12);
    }
}
