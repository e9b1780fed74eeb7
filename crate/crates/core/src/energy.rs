//! Binding energy, its perturbation series and the many-body remainder.
//!
//! Energies are dimensionless, in units of the oscillator quantum. The
//! series terms are evaluated from eigenvalue power sums of `W`, so a single
//! eigendecomposition serves every order.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::coupling::{build_coupling, build_potential, CouplingMatrix, PotentialMatrix};
use crate::error::{QdoError, Result};
use crate::geometry::SiteSet;
use crate::tolerances::{ENERGY_CLAMP, EIGENVALUE_FLOOR, SERIES_CONVERGED_REL, SERIES_K_CAP};

/// Normal-mode eigenvalues of `V` and of `V - I`, with the shared eigenvectors.
#[derive(Debug, Clone)]
pub struct ModeSpectrum {
    pub lambda: DVector<f64>,
    pub w_eigs: DVector<f64>,
    pub eigvecs: DMatrix<f64>,
    pub reference_energy: f64,
}

impl ModeSpectrum {
    pub fn n_modes(&self) -> usize {
        self.lambda.len()
    }

    pub fn max_abs_w(&self) -> f64 {
        self.w_eigs.iter().fold(0.0f64, |a, w| a.max(w.abs()))
    }
}

/// Reuses the eigendecomposition held by the potential.
pub fn spectrum(v: &PotentialMatrix) -> Result<ModeSpectrum> {
    let w_eigs = v.offset_eigen.values.clone();
    let lambda = w_eigs.map(|w| 1.0 + w);
    if let Some(&min) = lambda.iter().min_by(|a, b| a.total_cmp(b)) {
        if min <= EIGENVALUE_FLOOR {
            return Err(QdoError::NotPositiveDefinite { min_eigenvalue: min });
        }
    }
    Ok(ModeSpectrum {
        lambda,
        w_eigs,
        eigvecs: v.offset_eigen.vectors.clone(),
        reference_energy: v.reference_energy,
    })
}

/// `E = E_ref - (1/2) sum sqrt(lambda)`, clamped at zero within roundoff.
pub fn binding_energy(spec: &ModeSpectrum) -> Result<f64> {
    let n = spec.n_modes() as f64;
    let mut acc = spec.reference_energy - 0.5 * n;
    for (&w, &l) in spec.w_eigs.iter().zip(spec.lambda.iter()) {
        if l <= EIGENVALUE_FLOOR {
            return Err(QdoError::NotPositiveDefinite { min_eigenvalue: l });
        }
        // 1 - sqrt(1 + w) without cancellation
        acc += -0.5 * w / (1.0 + l.sqrt());
    }
    if acc < 0.0 && acc > -ENERGY_CLAMP {
        acc = 0.0;
    }
    Ok(acc)
}

/// Coefficient of `sum_i w_i^k` in the expansion of the binding energy.
pub fn series_coefficient(k: usize) -> f64 {
    assert!(k >= 2, "series starts at k = 2");
    let mut c = 1.0 / 16.0;
    for j in 2..k {
        c *= -((2 * j - 1) as f64) / (2.0 * (j + 1) as f64);
    }
    c
}

/// Power-series terms `delta_2 ..= delta_kmax` and their convergence flag.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesTerms {
    pub delta: Vec<f64>,
    pub converged: bool,
}

impl SeriesTerms {
    pub fn k_used(&self) -> usize {
        self.delta.len() + 1
    }

    /// `delta_k`, or zero past the evaluated order.
    pub fn get(&self, k: usize) -> f64 {
        self.delta.get(k.wrapping_sub(2)).copied().unwrap_or(0.0)
    }

    /// Running sums `sum_{k<=l} delta_k`, indexed from `l = 2`.
    pub fn partial_sums(&self) -> Vec<f64> {
        running(self.delta.iter().copied())
    }

    /// Running sums `S_l = sum_{k<=l} (k - 1) delta_k`, indexed from `l = 2`.
    pub fn weighted_partial_sums(&self) -> Vec<f64> {
        running(self.delta.iter().enumerate().map(|(i, d)| (i + 1) as f64 * d))
    }
}

fn running(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    values
        .map(|x| {
            acc += x;
            acc
        })
        .collect()
}

/// Terms computed without a convergence requirement. Valid for any
/// spectrum; only meaningful as a series when `max |w| < 1`.
pub fn raw_terms(w_eigs: &DVector<f64>, k_max: usize) -> Vec<f64> {
    let k_max = k_max.min(SERIES_K_CAP);
    let mut powers: Vec<f64> = w_eigs.iter().map(|w| w * w).collect();
    let mut coeff = 1.0 / 16.0;
    let mut out = Vec::with_capacity(k_max.saturating_sub(1));
    for k in 2..=k_max {
        if k > 2 {
            coeff *= -((2 * k - 3) as f64) / (2.0 * k as f64);
            for (p, w) in powers.iter_mut().zip(w_eigs.iter()) {
                *p *= w;
            }
        }
        out.push(coeff * powers.iter().sum::<f64>());
    }
    out
}

/// Series up to `k_max` (capped at 200).
pub fn series_terms(spec: &ModeSpectrum, k_max: usize) -> Result<SeriesTerms> {
    if k_max < 2 {
        return Err(QdoError::Domain(format!("k_max must be >= 2, got {k_max}")));
    }
    let max_abs = spec.max_abs_w();
    if max_abs >= 1.0 {
        return Err(QdoError::SeriesDivergent { max_abs });
    }
    let delta = raw_terms(&spec.w_eigs, k_max);
    let converged = is_converged(&delta);
    Ok(SeriesTerms { delta, converged })
}

/// Series truncated at the first order that meets the convergence test.
pub fn series_until_converged(spec: &ModeSpectrum, k_cap: usize) -> Result<SeriesTerms> {
    let mut full = series_terms(spec, k_cap)?;
    let floor = SERIES_CONVERGED_REL * full.delta[0].max(1e-300);
    if let Some(pos) = full.delta.iter().position(|d| d.abs() < floor) {
        full.delta.truncate(pos + 1);
        full.converged = true;
    }
    Ok(full)
}

fn is_converged(delta: &[f64]) -> bool {
    match (delta.first(), delta.last()) {
        (Some(d2), Some(last)) => last.abs() < SERIES_CONVERGED_REL * d2.max(1e-300),
        _ => false,
    }
}

/// Pair-additive energy `(3/4) sum_{mu<xi} R^-6`.
pub fn pairwise_energy(sites: &SiteSet) -> f64 {
    let mut sum = 0.0;
    for a in 0..sites.len() {
        for b in (a + 1)..sites.len() {
            sum += sites.distance(a, b).powi(-6);
        }
    }
    0.75 * sum
}

/// `1 + 3 cos(g1) cos(g2) cos(g3)` for the triangle `(a, b, c)`.
pub fn at_bracket(sites: &SiteSet, a: usize, b: usize, c: usize) -> f64 {
    let (ab, ac, bc) = (sites.distance(a, b), sites.distance(a, c), sites.distance(b, c));
    let cos_at = |opp: f64, s1: f64, s2: f64| (s1 * s1 + s2 * s2 - opp * opp) / (2.0 * s1 * s2);
    let ca = cos_at(bc, ab, ac);
    let cb = cos_at(ac, ab, bc);
    let cc = cos_at(ab, ac, bc);
    1.0 + 3.0 * ca * cb * cc
}

/// AT bracket of the isoceles trimer with apex angle `theta`.
pub fn trimer_at_bracket(theta: f64) -> f64 {
    let c = theta.cos();
    1.0 + 1.5 * c * (1.0 - c)
}

/// Triple-dipole energy as a geometric sum over triplets `mu < xi < sigma`.
pub fn axilrod_teller(sites: &SiteSet) -> f64 {
    let n = sites.len();
    let mut sum = 0.0;
    for a in 0..n {
        for b in (a + 1)..n {
            let rab = sites.distance(a, b);
            for c in (b + 1)..n {
                let r3 = (rab * sites.distance(a, c) * sites.distance(b, c)).powi(3);
                sum += at_bracket(sites, a, b, c) / r3;
            }
        }
    }
    -9.0 / 16.0 * sum
}

/// Triple-dipole energy `-tr(W^3) / 32` from explicit matrix products.
pub fn axilrod_teller_trace(w: &CouplingMatrix) -> f64 {
    let w2 = &w.w * &w.w;
    -w2.component_mul(&w.w).sum() / 32.0
}

/// Closed form of `sum_{k>=2} (k - 1) delta_k`.
pub fn s_infinity(spec: &ModeSpectrum) -> f64 {
    spec.w_eigs
        .iter()
        .zip(spec.lambda.iter())
        .map(|(&w, &l)| {
            let s = l.sqrt();
            // (sqrt(l) - 1)^2 / sqrt(l)
            let d = w / (1.0 + s);
            d * d / s
        })
        .sum::<f64>()
        * 0.25
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ManyBody {
    pub delta_mb: f64,
    pub delta3: f64,
    pub delta4: f64,
    pub s_inf: f64,
}

/// Many-body remainder `E - delta_2`, leading terms and `S_inf`.
pub fn many_body(spec: &ModeSpectrum, sites: &SiteSet) -> Result<ManyBody> {
    let e = binding_energy(spec)?;
    let terms = raw_terms(&spec.w_eigs, 4);
    Ok(ManyBody {
        delta_mb: e - pairwise_energy(sites),
        delta3: terms[1],
        delta4: terms[2],
        s_inf: s_infinity(spec),
    })
}

/// Energies of one assembly.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyBreakdown {
    pub binding_e: f64,
    /// `delta_2 ..= delta_{k_used}`.
    pub delta: Vec<f64>,
    pub delta_mb: f64,
    pub s_inf: f64,
    pub k_used: usize,
    pub converged: bool,
}

impl EnergyBreakdown {
    pub fn delta_k(&self, k: usize) -> f64 {
        self.delta.get(k.wrapping_sub(2)).copied().unwrap_or(0.0)
    }
}

#[derive(Serialize, Deserialize)]
struct EnergyWire {
    binding_e: f64,
    delta2: f64,
    delta3: f64,
    delta4: f64,
    delta_mb: f64,
    s_inf: f64,
    k_used: usize,
    converged: bool,
}

impl Serialize for EnergyBreakdown {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        EnergyWire {
            binding_e: self.binding_e,
            delta2: self.delta_k(2),
            delta3: self.delta_k(3),
            delta4: self.delta_k(4),
            delta_mb: self.delta_mb,
            s_inf: self.s_inf,
            k_used: self.k_used,
            converged: self.converged,
        }
        .serialize(s)
    }
}

/// Full energy analysis of an assembly of identical QDOs. Outside the
/// perturbative regime only `delta_2..delta_4` are reported and
/// `converged` is false.
pub fn energy_breakdown(sites: &SiteSet, k_max: usize) -> Result<EnergyBreakdown> {
    let potential = build_potential(&build_coupling(sites)?);
    let spec = spectrum(&potential)?;
    energy_breakdown_from(&spec, sites, k_max)
}

pub fn energy_breakdown_from(spec: &ModeSpectrum, sites: &SiteSet, k_max: usize) -> Result<EnergyBreakdown> {
    let binding_e = binding_energy(spec)?;
    let (delta, converged) = match series_until_converged(spec, k_max.max(4)) {
        Ok(t) => (t.delta, t.converged),
        Err(QdoError::SeriesDivergent { .. }) => (raw_terms(&spec.w_eigs, 4), false),
        Err(e) => return Err(e),
    };
    Ok(EnergyBreakdown {
        binding_e,
        k_used: delta.len() + 1,
        delta,
        delta_mb: binding_e - pairwise_energy(sites),
        s_inf: s_infinity(spec),
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_chain, build_trimer};
    use std::f64::consts::{FRAC_PI_3, PI};

    fn dimer(rho: f64) -> SiteSet {
        SiteSet::custom(vec![[0.0; 3], [0.0, 0.0, rho]]).unwrap()
    }

    fn spec_of(sites: &SiteSet) -> ModeSpectrum {
        spectrum(&build_potential(&build_coupling(sites).unwrap())).unwrap()
    }

    // 3 - (2 sqrt(1.125) + 2 sqrt(0.875) + sqrt(1.25) + sqrt(0.75)) / 2
    const DIMER2_BINDING: f64 = 0.011_895_785_259_526_62;

    #[test]
    fn coefficients() {
        assert_eq!(series_coefficient(2), 1.0 / 16.0);
        assert_eq!(series_coefficient(3), -1.0 / 32.0);
        assert_eq!(series_coefficient(4), 5.0 / 256.0);
        // (2k-3)!! / (2^(k+1) k!) at k = 6: 945 / (128 * 720)
        assert!((series_coefficient(6) - 945.0 / 92160.0).abs() < 1e-18);
    }

    #[test]
    fn identity_spectrum() {
        let w = CouplingMatrix::mode_level(DMatrix::zeros(3, 3)).unwrap();
        let s = spectrum(&build_potential(&w)).unwrap();
        assert!(s.lambda.iter().all(|&l| l == 1.0));
        assert_eq!(binding_energy(&s).unwrap(), 0.0);
        let t = series_terms(&s, 10).unwrap();
        assert!(t.delta.iter().all(|&d| d == 0.0));
        assert_eq!(s_infinity(&s), 0.0);
    }

    #[test]
    fn dimer_spectrum_and_energy() {
        let s = spec_of(&dimer(2.0));
        let expect = [0.75, 0.875, 0.875, 1.125, 1.125, 1.25];
        for (l, e) in s.lambda.iter().zip(expect) {
            assert!((l - e).abs() < 1e-15);
        }
        let e = binding_energy(&s).unwrap();
        assert!((e - DIMER2_BINDING).abs() < 1e-15, "{e}");
        let t = series_terms(&s, 60).unwrap();
        assert!((t.delta[0] - 0.01171875).abs() < 1e-16);
        assert!((t.partial_sums().last().unwrap() - e).abs() < 1e-12);
        assert!(t.converged);
    }

    #[test]
    fn strong_dimer_not_positive_definite() {
        let p = build_potential(&build_coupling(&dimer(0.9)).unwrap());
        assert!(matches!(spectrum(&p), Err(QdoError::NotPositiveDefinite { .. })));
    }

    #[test]
    fn divergent_series_rejected() {
        // |w| = 2/1.2^3 > 1 but lambda > 0 for the transverse modes only;
        // use a mode-level model that stays positive definite
        let mut k = DMatrix::zeros(2, 2);
        k[(0, 1)] = 0.99;
        k[(1, 0)] = 0.99;
        let s = spectrum(&build_potential(&CouplingMatrix::mode_level(k).unwrap())).unwrap();
        assert!(series_terms(&s, 10).is_ok());
        let mut k = DMatrix::zeros(3, 3);
        for (i, j) in [(0, 1), (1, 2), (0, 2)] {
            k[(i, j)] = 0.6;
            k[(j, i)] = 0.6;
        }
        // eigenvalues 1.2, -0.6, -0.6
        let s = spectrum(&build_potential(&CouplingMatrix::mode_level(k).unwrap())).unwrap();
        assert!(matches!(series_terms(&s, 10), Err(QdoError::SeriesDivergent { .. })));
    }

    #[test]
    fn pairwise_values() {
        assert_eq!(pairwise_energy(&dimer(2.0)), 0.01171875);
        let eq = build_trimer(1.0, FRAC_PI_3).unwrap();
        assert!((pairwise_energy(&eq) - 2.25).abs() < 1e-14);
        let line = build_chain(3, 1.0, PI).unwrap();
        assert!((pairwise_energy(&line) - 1.51171875).abs() < 1e-14);
    }

    #[test]
    fn at_collinear_attractive() {
        let line = build_trimer(2.0, PI).unwrap();
        assert!((at_bracket(&line, 0, 1, 2) + 2.0).abs() < 1e-14);
        assert!(axilrod_teller(&line) > 0.0);
    }

    #[test]
    fn at_equilateral_closed_form() {
        let rho: f64 = 1.7;
        let eq = build_trimer(rho, FRAC_PI_3).unwrap();
        let expect = -99.0 / 128.0 * rho.powi(-9);
        assert!((axilrod_teller(&eq) - expect).abs() < 1e-14 * expect.abs());
        let w = build_coupling(&eq).unwrap();
        assert!((axilrod_teller_trace(&w) - expect).abs() < 1e-12 * expect.abs());
    }

    #[test]
    fn at_vanishes_at_critical_angle() {
        let theta = ((1.5 - 8.25f64.sqrt()) / 3.0).acos();
        assert!((theta - 2.045_896_027_206_679).abs() < 1e-12);
        let s = build_trimer(2.0, theta).unwrap();
        assert!(axilrod_teller(&s).abs() < 1e-16);
        assert!(trimer_at_bracket(theta).abs() < 1e-15);
        assert!((trimer_at_bracket(1.2) - at_bracket(&build_trimer(1.0, 1.2).unwrap(), 0, 1, 2)).abs() < 1e-14);
    }

    #[test]
    fn dimer_many_body() {
        let s = spec_of(&dimer(2.0));
        let mb = many_body(&s, &dimer(2.0)).unwrap();
        let expect = DIMER2_BINDING - 0.01171875;
        assert!((mb.delta_mb - expect).abs() < 1e-15);
        // odd traces vanish for a single pair
        assert!(mb.delta3.abs() < 1e-18);
        assert!(mb.delta4 > 0.0);
    }

    #[test]
    fn weak_equilateral_dominated_by_at() {
        let sites = build_trimer(4.0, FRAC_PI_3).unwrap();
        let mb = many_body(&spec_of(&sites), &sites).unwrap();
        assert!(mb.delta_mb < 0.0);
        assert!(((mb.delta_mb - mb.delta3) / mb.delta3).abs() < 0.1);
    }

    #[test]
    fn s_infinity_matches_weighted_series() {
        let sites = build_trimer(2.2, 1.3).unwrap();
        let s = spec_of(&sites);
        let t = series_terms(&s, 200).unwrap();
        let last = *t.weighted_partial_sums().last().unwrap();
        assert!((last - s_infinity(&s)).abs() < 1e-12);
    }

    #[test]
    fn breakdown_json_fields() {
        let b = energy_breakdown(&dimer(2.0), 60).unwrap();
        let v = serde_json::to_value(&b).unwrap();
        for key in ["binding_e", "delta2", "delta3", "delta4", "delta_mb", "s_inf", "k_used", "converged"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert!((v["delta2"].as_f64().unwrap() - 0.01171875).abs() < 1e-16);
        assert!(b.converged && b.k_used < 60);
    }

    #[test]
    fn breakdown_outside_radius() {
        // rho = 1.36 equilateral: largest eigenvalue of W is about 1.39, smallest about -0.994
        let sites = build_trimer(1.36, FRAC_PI_3).unwrap();
        let spec = spec_of(&sites);
        assert!(spec.max_abs_w() >= 1.0);
        let b = energy_breakdown_from(&spec, &sites, 60).unwrap();
        assert!(b.binding_e > 0.0);
        assert!(!b.converged);
        assert_eq!(b.delta.len(), 3);
    }
}
