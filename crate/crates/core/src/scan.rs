//! Parameter sweeps, boundary searches and result tables.
//!
//! Every grid point is evaluated independently (in parallel when a rayon
//! pool is active) and rows are emitted in grid order. A point that cannot
//! be evaluated keeps its row, with `NaN` values and a non-`ok` status.

use std::f64::consts::{FRAC_PI_3, PI};
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::coupling::{build_coupling, build_potential, CouplingMatrix, PotentialMatrix};
use crate::energy::{
    axilrod_teller, binding_energy, energy_breakdown_from, pairwise_energy, raw_terms, series_terms,
    spectrum, trimer_at_bracket, EnergyBreakdown,
};
use crate::entanglement::{edi, monogamy_audit_with_bound, pair_bound, reference_tangle};
use crate::error::{QdoError, Result};
use crate::gaussian::GroundStateCM;
use crate::geometry::{build_chain, build_lattice, build_trimer, LatticeKind, SiteSet};
use crate::io::{Cell, Table};
use crate::qubit::{build_qubit_model, ground_state, qubit_binding, qubit_pair_tangle, qubit_tangle, QubitModel};
use crate::tolerances::{BISECTION, MODE_BUDGET, SERIES_K_CAP};

/// Evenly spaced samples including both ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl Range {
    pub fn new(min: f64, max: f64, steps: usize) -> Result<Self> {
        let r = Range { min, max, steps };
        r.validate("range")?;
        Ok(r)
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        if self.steps < 2 {
            return Err(QdoError::Domain(format!("{name}: steps must be >= 2, got {}", self.steps)));
        }
        if !(self.min.is_finite() && self.max.is_finite() && self.min < self.max) {
            return Err(QdoError::Domain(format!(
                "{name}: need finite min < max, got [{}, {}]",
                self.min, self.max
            )));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let n = self.steps;
        (0..n)
            .map(|k| {
                if k + 1 == n {
                    self.max
                } else {
                    self.min + (self.max - self.min) * k as f64 / (n - 1) as f64
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanKind {
    Trimer,
    Chain,
    LatticeCurve,
    ThreeMode,
    QubitTrimer,
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryMode {
    MbZero,
    EdiOne,
    AtZero,
    D3EqNegD4,
}

impl fmt::Display for BoundaryMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundaryMode::MbZero => "mb_zero",
            BoundaryMode::EdiOne => "edi_one",
            BoundaryMode::AtZero => "at_zero",
            BoundaryMode::D3EqNegD4 => "d3_eq_neg_d4",
        })
    }
}

impl FromStr for BoundaryMode {
    type Err = QdoError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "mb_zero" => Ok(BoundaryMode::MbZero),
            "edi_one" => Ok(BoundaryMode::EdiOne),
            "at_zero" => Ok(BoundaryMode::AtZero),
            "d3_eq_neg_d4" => Ok(BoundaryMode::D3EqNegD4),
            other => Err(QdoError::Domain(format!("unknown boundary mode '{other}'"))),
        }
    }
}

/// Assembly family a boundary search runs on. Trimers and chains are
/// searched along `theta` at fixed `rho`; lattices along `rho`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "target")]
pub enum BoundaryTarget {
    Trimer,
    Chain { n: usize },
    Lattice { kind: LatticeKind, dims: Vec<usize> },
}

impl BoundaryTarget {
    pub fn sweeps_theta(&self) -> bool {
        !matches!(self, BoundaryTarget::Lattice { .. })
    }
}

/// Complete description of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSpec {
    pub kind: ScanKind,
    pub rho: Range,
    pub theta: Range,
    pub kappa: Range,
    pub beta: Range,
    pub lattice: LatticeKind,
    pub dims: Vec<usize>,
    pub chain_len: usize,
    pub k_max: usize,
    pub mode_budget: usize,
    pub boundary_mode: BoundaryMode,
    pub boundary_target: BoundaryTarget,
    /// Fixed values for boundary searches; empty means the `rho` grid
    /// (theta searches) or the `theta` grid start (lattice searches).
    pub fixed: Vec<f64>,
}

impl ScanSpec {
    pub fn new(kind: ScanKind) -> Self {
        ScanSpec {
            kind,
            rho: Range { min: 1.8, max: 4.0, steps: 50 },
            theta: Range { min: FRAC_PI_3, max: PI, steps: 50 },
            kappa: Range { min: 0.05, max: 0.95, steps: 19 },
            beta: Range { min: 0.0, max: 1.0, steps: 5 },
            lattice: LatticeKind::Square,
            dims: vec![11, 11],
            chain_len: 100,
            k_max: SERIES_K_CAP,
            mode_budget: MODE_BUDGET,
            boundary_mode: BoundaryMode::MbZero,
            boundary_target: BoundaryTarget::Trimer,
            fixed: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.rho.validate("rho")?;
        if self.rho.min <= 0.0 {
            return Err(QdoError::Domain("rho must be positive".into()));
        }
        let slack = 1e-12;
        if matches!(self.kind, ScanKind::Trimer | ScanKind::Chain | ScanKind::QubitTrimer | ScanKind::Boundary) {
            self.theta.validate("theta")?;
            if self.theta.min < FRAC_PI_3 - slack || self.theta.max > PI + slack {
                return Err(QdoError::Domain("theta must lie in [pi/3, pi]".into()));
            }
        }
        if self.kind == ScanKind::ThreeMode {
            self.kappa.validate("kappa")?;
            self.beta.validate("beta")?;
            if self.kappa.min <= -1.0 || self.kappa.max >= 1.0 {
                return Err(QdoError::Domain("kappa must lie in (-1, 1)".into()));
            }
            if self.beta.min < 0.0 || self.beta.max > 1.0 {
                return Err(QdoError::Domain("beta must lie in [0, 1]".into()));
            }
        }
        if self.k_max < 4 || self.k_max > SERIES_K_CAP {
            return Err(QdoError::Domain(format!("kmax must lie in [4, {SERIES_K_CAP}]")));
        }
        if self.kind == ScanKind::Chain && self.chain_len < 3 {
            return Err(QdoError::Domain("chain length must be >= 3".into()));
        }
        if self.fixed.iter().any(|v| !v.is_finite()) {
            return Err(QdoError::Domain("fixed values must be finite".into()));
        }
        Ok(())
    }
}

/// Status label for a failed point.
pub fn status_of(err: &QdoError) -> &'static str {
    match err {
        QdoError::Domain(_) => "domain_error",
        QdoError::CoincidentSites { .. } => "coincident_sites",
        QdoError::NotPositiveDefinite { .. } => "not_positive_definite",
        QdoError::SeriesDivergent { .. } => "series_divergent",
        QdoError::UnphysicalState(_) => "unphysical_state",
        QdoError::DegenerateDenominator { .. } => "degenerate_denominator",
        QdoError::TooLarge { .. } => "too_large",
        QdoError::NoBracket { .. } => "no_bracket",
        QdoError::Io(_) => "io_error",
    }
}

/// Rows plus run metadata.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanOutput {
    pub table: Table,
    pub meta: serde_json::Value,
}

impl ScanOutput {
    pub fn all_invalid(&self) -> bool {
        !self.table.rows.is_empty() && self.table.statuses().iter().all(|s| *s != "ok")
    }
}

fn failed_row(prefix: Vec<Cell>, width: usize, err: &QdoError) -> Vec<Cell> {
    let mut row = prefix;
    while row.len() + 1 < width {
        row.push(f64::NAN.into());
    }
    row.push(status_of(err).into());
    row
}

/// Energies and entanglement diagnostics of one assembly.
#[derive(Debug, Clone)]
pub struct Assessment {
    pub energy: EnergyBreakdown,
    pub delta2: f64,
    pub tau_tilde: f64,
    pub monogamy_margin_min: f64,
    /// `S_inf - tau_tilde`.
    pub bound_residual: f64,
    pub monogamy_ok: bool,
    pub bound_ok: bool,
    pub edi: Vec<f64>,
}

impl Assessment {
    pub fn status(&self) -> &'static str {
        match (self.bound_ok, self.monogamy_ok) {
            (true, true) => "ok",
            (false, _) => "bound_violation",
            (true, false) => "monogamy_violation",
        }
    }
}

struct Prepared {
    coupling: CouplingMatrix,
    potential: PotentialMatrix,
}

fn prepare(sites: &SiteSet) -> Result<Prepared> {
    let coupling = build_coupling(sites)?;
    let potential = build_potential(&coupling);
    Ok(Prepared { coupling, potential })
}

/// Full analysis of `sites` with EDI for each listed QDO pair.
pub fn assess(sites: &SiteSet, k_max: usize, edi_pairs: &[(usize, usize)]) -> Result<Assessment> {
    let Prepared { coupling, potential } = prepare(sites)?;
    let spec = spectrum(&potential)?;
    let energy = energy_breakdown_from(&spec, sites, k_max)?;
    let cm = GroundStateCM::from_potential(&potential)?;
    let report = monogamy_audit_with_bound(&cm, energy.s_inf);
    let edi = edi_pairs
        .iter()
        .map(|&(a, b)| edi(&cm, &coupling, a, b))
        .collect::<Result<Vec<_>>>()?;
    Ok(Assessment {
        delta2: pairwise_energy(sites),
        tau_tilde: report.tau_tilde_total,
        monogamy_margin_min: report.monogamy_margins.iter().copied().fold(f64::INFINITY, f64::min),
        bound_residual: report.bound_residual,
        monogamy_ok: report.monogamy_violations.is_empty(),
        bound_ok: !report.bound_violated,
        edi,
        energy,
    })
}

pub const TRIMER_COLUMNS: [&str; 15] = [
    "rho",
    "theta",
    "binding_e",
    "delta2",
    "delta3",
    "delta4",
    "delta_mb",
    "tau_tilde",
    "s_inf",
    "edi_12",
    "monogamy_margin_min",
    "bound_residual",
    "k_used",
    "converged",
    "status",
];

fn grid2(a: &[f64], b: &[f64]) -> Vec<(f64, f64)> {
    a.iter().flat_map(|&x| b.iter().map(move |&y| (x, y))).collect()
}

fn assessment_row(prefix: Vec<Cell>, a: &Assessment) -> Vec<Cell> {
    let mut row = prefix;
    row.extend([
        a.energy.binding_e.into(),
        a.delta2.into(),
        a.energy.delta_k(3).into(),
        a.energy.delta_k(4).into(),
        a.energy.delta_mb.into(),
        a.tau_tilde.into(),
        a.energy.s_inf.into(),
        a.edi.first().copied().unwrap_or(f64::NAN).into(),
        a.monogamy_margin_min.into(),
        a.bound_residual.into(),
        a.energy.k_used.into(),
        usize::from(a.energy.converged).into(),
        a.status().into(),
    ]);
    row
}

/// Trimer heat map over `(rho, theta)`, rho-major.
pub fn run_trimer_scan(spec: &ScanSpec) -> Result<ScanOutput> {
    spec.validate()?;
    let points = grid2(&spec.rho.values(), &spec.theta.values());
    let rows: Vec<Vec<Cell>> = points
        .par_iter()
        .map(|&(rho, theta)| {
            let prefix = vec![rho.into(), theta.into()];
            match build_trimer(rho, theta).and_then(|s| assess(&s, spec.k_max, &[(0, 1)])) {
                Ok(a) => assessment_row(prefix, &a),
                Err(e) => failed_row(prefix, TRIMER_COLUMNS.len(), &e),
            }
        })
        .collect();
    let mut table = Table::new(&TRIMER_COLUMNS);
    rows.into_iter().for_each(|r| table.push(r));
    Ok(ScanOutput { table, meta: json!({ "scan": "trimer", "spec": spec }) })
}

/// `S_l` and the reduced tangle versus series order `l` for one assembly.
pub fn partial_sum_table(sites: &SiteSet, k_max: usize) -> Result<Table> {
    let Prepared { potential, .. } = prepare(sites)?;
    let spec = spectrum(&potential)?;
    let terms = series_terms(&spec, k_max)?;
    let s_inf = crate::energy::s_infinity(&spec);
    let cm = GroundStateCM::from_potential(&potential)?;
    let tau = crate::entanglement::reduced_tangle_total(&cm).total;
    let mut table = Table::new(&["l", "s_l", "tau_tilde", "s_inf", "status"]);
    for (k, s) in terms.weighted_partial_sums().into_iter().enumerate() {
        table.push(vec![(k + 2).into(), s.into(), tau.into(), s_inf.into(), "ok".into()]);
    }
    Ok(table)
}

/// Zero-based indices of the central QDO pair of an `n`-site chain.
pub fn chain_center_pair(n: usize) -> (usize, usize) {
    (n / 2, n / 2 + 1)
}

pub const CHAIN_COLUMNS: [&str; 8] = [
    "rho",
    "theta",
    "delta2",
    "delta_mb",
    "delta_mb_over_delta2",
    "edi_center",
    "bound_residual",
    "status",
];

/// Zigzag chain heat map with the central-pair EDI.
pub fn run_chain_scan(spec: &ScanSpec) -> Result<ScanOutput> {
    spec.validate()?;
    let n = spec.chain_len;
    if 3 * n > spec.mode_budget {
        return Err(QdoError::TooLarge { size: 3 * n, budget: spec.mode_budget });
    }
    let pair = chain_center_pair(n);
    if pair.1 >= n {
        return Err(QdoError::Domain(format!("chain of {n} sites has no central pair")));
    }
    let points = grid2(&spec.rho.values(), &spec.theta.values());
    let rows: Vec<Vec<Cell>> = points
        .par_iter()
        .map(|&(rho, theta)| {
            let prefix = vec![rho.into(), theta.into()];
            match build_chain(n, rho, theta).and_then(|s| assess(&s, spec.k_max, &[pair])) {
                Ok(a) => {
                    let mut row = prefix;
                    row.extend([
                        a.delta2.into(),
                        a.energy.delta_mb.into(),
                        (a.energy.delta_mb / a.delta2).into(),
                        a.edi[0].into(),
                        a.bound_residual.into(),
                        a.status().into(),
                    ]);
                    row
                }
                Err(e) => failed_row(prefix, CHAIN_COLUMNS.len(), &e),
            }
        })
        .collect();
    let mut table = Table::new(&CHAIN_COLUMNS);
    rows.into_iter().for_each(|r| table.push(r));
    Ok(ScanOutput {
        table,
        meta: json!({ "scan": "chain", "spec": spec, "center_pair": [pair.0, pair.1] }),
    })
}

/// Nearest and next-nearest neighbours of `center` with their displacements.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Neighbor {
    pub site: usize,
    pub shell: usize,
    pub displacement: [f64; 3],
}

pub fn central_neighbors(sites: &SiteSet, center: usize) -> Vec<Neighbor> {
    let shells = sites.neighbor_shells(center);
    let mut out = Vec::new();
    for (shell, &d) in shells.iter().take(2).enumerate() {
        for site in sites.sites_at_distance(center, d) {
            let (p, c) = (sites.positions[site], sites.positions[center]);
            out.push(Neighbor {
                site,
                shell: shell + 1,
                displacement: [p[0] - c[0], p[1] - c[1], p[2] - c[2]],
            });
        }
    }
    out
}

/// Mean EDI between `center` and its nearest neighbours.
pub fn mean_nn_edi(cm: &GroundStateCM, w: &CouplingMatrix, center: usize, neighbors: &[Neighbor]) -> Result<f64> {
    let nn: Vec<usize> = neighbors.iter().filter(|n| n.shell == 1).map(|n| n.site).collect();
    if nn.is_empty() {
        return Err(QdoError::Domain("central site has no neighbours".into()));
    }
    let mut sum = 0.0;
    for &s in &nn {
        sum += edi(cm, w, center, s)?;
    }
    Ok(sum / nn.len() as f64)
}

pub const LATTICE_COLUMNS: [&str; 16] = [
    "rho",
    "binding_e",
    "delta2",
    "delta3",
    "delta4",
    "delta_mb",
    "tau_tilde",
    "s_inf",
    "mb_ratio",
    "d3_ratio",
    "d34_ratio",
    "tau_ratio",
    "edi_nn_mean",
    "monogamy_margin_min",
    "bound_residual",
    "status",
];

/// Lattice curve versus `rho`, plus a second table with the EDI of every
/// nearest and next-nearest neighbour of the central site.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatticeCurve {
    pub output: ScanOutput,
    pub edi_table: Table,
}

pub fn run_lattice_curve(spec: &ScanSpec) -> Result<LatticeCurve> {
    spec.validate()?;
    let unit = build_lattice(spec.lattice, &spec.dims, 1.0)?;
    if unit.n_modes() > spec.mode_budget {
        return Err(QdoError::TooLarge { size: unit.n_modes(), budget: spec.mode_budget });
    }
    let center = unit.central_site();
    let neighbors = central_neighbors(&unit, center);
    let rhos = spec.rho.values();
    // outer parallelism only; each point already runs a large eigensolve
    let results: Vec<Result<(Assessment, Vec<f64>)>> = rhos
        .par_iter()
        .map(|&rho| {
            let sites = unit.scaled(rho);
            let pairs: Vec<(usize, usize)> = neighbors.iter().map(|n| (center, n.site)).collect();
            let a = assess(&sites, spec.k_max, &pairs)?;
            let edis = a.edi.clone();
            Ok((a, edis))
        })
        .collect();

    let mut table = Table::new(&LATTICE_COLUMNS);
    let mut edi_table = Table::new(&["rho", "site", "shell", "dx", "dy", "dz", "edi", "status"]);
    for (&rho, res) in rhos.iter().zip(results) {
        match res {
            Ok((a, edis)) => {
                let d2 = a.delta2;
                let (d3, d4) = (a.energy.delta_k(3), a.energy.delta_k(4));
                let nn: Vec<f64> = neighbors
                    .iter()
                    .zip(&edis)
                    .filter(|(n, _)| n.shell == 1)
                    .map(|(_, &e)| e)
                    .collect();
                let nn_mean = nn.iter().sum::<f64>() / nn.len().max(1) as f64;
                table.push(vec![
                    rho.into(),
                    a.energy.binding_e.into(),
                    d2.into(),
                    d3.into(),
                    d4.into(),
                    a.energy.delta_mb.into(),
                    a.tau_tilde.into(),
                    a.energy.s_inf.into(),
                    (a.energy.delta_mb / d2).into(),
                    (d3 / d2).into(),
                    ((d3 + d4) / d2).into(),
                    ((a.tau_tilde - d2) / (2.0 * d2)).into(),
                    nn_mean.into(),
                    a.monogamy_margin_min.into(),
                    a.bound_residual.into(),
                    a.status().into(),
                ]);
                for (n, e) in neighbors.iter().zip(edis) {
                    let d = n.displacement;
                    edi_table.push(vec![
                        rho.into(),
                        n.site.into(),
                        n.shell.into(),
                        (d[0] * rho).into(),
                        (d[1] * rho).into(),
                        (d[2] * rho).into(),
                        e.into(),
                        "ok".into(),
                    ]);
                }
            }
            Err(e) => table.push(failed_row(vec![rho.into()], LATTICE_COLUMNS.len(), &e)),
        }
    }
    let meta = json!({
        "scan": "lattice",
        "spec": spec,
        "n_sites": unit.len(),
        "central_site": center,
        "neighbors_at_unit_rho": neighbors,
    });
    Ok(LatticeCurve { output: ScanOutput { table, meta }, edi_table })
}

/// Mode-level coupling of the three-mode model: `kappa` between modes 1-2
/// and 2-3, `kappa beta` between 1-3.
pub fn three_mode_coupling(kappa: f64, beta: f64) -> Result<CouplingMatrix> {
    let mut k = DMatrix::zeros(3, 3);
    for (i, j, v) in [(0, 1, kappa), (1, 2, kappa), (0, 2, kappa * beta)] {
        k[(i, j)] = v;
        k[(j, i)] = v;
    }
    CouplingMatrix::mode_level(k)
}

/// Tangle of an isolated two-qubit pair with qubit coupling `c`.
pub fn reference_qubit_tangle(c: f64) -> f64 {
    c * c / (1.0 + c * c)
}

pub const THREE_MODE_COLUMNS: [&str; 11] = [
    "kappa",
    "beta",
    "tau_sys_12",
    "tau_ref_12",
    "ratio_minus_1",
    "tau_sys_23",
    "tau_pair_qubit",
    "tau_ref_qubit",
    "e_qub",
    "delta_qub",
    "status",
];

/// `(kappa, beta)` scan of the three-mode model with qubit comparison.
pub fn run_three_mode_scan(spec: &ScanSpec) -> Result<ScanOutput> {
    spec.validate()?;
    let points = grid2(&spec.kappa.values(), &spec.beta.values());
    let rows: Vec<Vec<Cell>> = points
        .par_iter()
        .map(|&(kappa, beta)| {
            let prefix = vec![kappa.into(), beta.into()];
            match three_mode_point(kappa, beta) {
                Ok(mut vals) => {
                    let mut row = prefix;
                    row.extend(vals.drain(..).map(Cell::from));
                    row.push("ok".into());
                    row
                }
                Err(e) => failed_row(prefix, THREE_MODE_COLUMNS.len(), &e),
            }
        })
        .collect();
    let mut table = Table::new(&THREE_MODE_COLUMNS);
    rows.into_iter().for_each(|r| table.push(r));
    Ok(ScanOutput { table, meta: json!({ "scan": "three_mode", "spec": spec }) })
}

fn three_mode_point(kappa: f64, beta: f64) -> Result<Vec<f64>> {
    let w = three_mode_coupling(kappa, beta)?;
    let potential = build_potential(&w);
    let cm = GroundStateCM::from_potential(&potential)?;
    let tau_sys = pair_bound(&cm, 0, 1);
    let tau_ref = reference_tangle(kappa)?;
    let model = build_qubit_model(&w)?;
    let gs = ground_state(&model)?;
    let qb = qubit_binding(&model, &gs);
    Ok(vec![
        tau_sys,
        tau_ref,
        tau_sys / tau_ref - 1.0,
        pair_bound(&cm, 1, 2),
        qubit_pair_tangle(&gs, 0, 1),
        reference_qubit_tangle(0.5 * kappa),
        qb.e_qub,
        qb.delta_qub,
    ])
}

pub const QUBIT_TRIMER_COLUMNS: [&str; 15] = [
    "rho",
    "theta",
    "delta2",
    "delta3",
    "delta_mb",
    "min_eig",
    "e_qub_printed",
    "baseline",
    "e_qub",
    "delta_qub",
    "tau_qubit_1",
    "tau_pair_qubit",
    "tau_ref_qubit",
    "sign_match_d3",
    "status",
];

/// Exact-versus-qubit comparison on the trimer.
pub fn run_qubit_trimer_scan(spec: &ScanSpec) -> Result<ScanOutput> {
    spec.validate()?;
    let points = grid2(&spec.rho.values(), &spec.theta.values());
    let rows: Vec<Vec<Cell>> = points
        .par_iter()
        .map(|&(rho, theta)| {
            let prefix = vec![rho.into(), theta.into()];
            match qubit_trimer_point(rho, theta) {
                Ok(p) => {
                    let mut row = prefix;
                    row.extend([
                        p.delta2.into(),
                        p.delta3.into(),
                        p.delta_mb.into(),
                        p.binding.min_eig.into(),
                        p.binding.e_qub_printed.into(),
                        p.binding.baseline.into(),
                        p.binding.e_qub.into(),
                        p.binding.delta_qub.into(),
                        p.tau_qubit_1.into(),
                        p.tau_pair_qubit.into(),
                        p.tau_ref_qubit.into(),
                        usize::from(p.binding.delta_qub.signum() == p.delta3.signum()).into(),
                        "ok".into(),
                    ]);
                    row
                }
                Err(e) => failed_row(prefix, QUBIT_TRIMER_COLUMNS.len(), &e),
            }
        })
        .collect();
    let mut table = Table::new(&QUBIT_TRIMER_COLUMNS);
    rows.into_iter().for_each(|r| table.push(r));
    Ok(ScanOutput {
        table,
        meta: json!({
            "scan": "qubit_trimer",
            "spec": spec,
            "qubit_coupling": "w_ij / 2",
            "e_qub": "d/2 - min_eig, equal to 2 (e_qub_printed - baseline)",
        }),
    })
}

/// Qubit comparator quantities at one trimer geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QubitTrimerPoint {
    pub delta2: f64,
    pub delta3: f64,
    pub delta_mb: f64,
    pub binding: crate::qubit::QubitBinding,
    pub tau_qubit_1: f64,
    /// Sum over the nine mode pairs joining QDOs 1 and 2.
    pub tau_pair_qubit: f64,
    pub tau_ref_qubit: f64,
}

pub fn qubit_trimer_point(rho: f64, theta: f64) -> Result<QubitTrimerPoint> {
    let sites = build_trimer(rho, theta)?;
    let Prepared { coupling, potential } = prepare(&sites)?;
    let spec = spectrum(&potential)?;
    let delta2 = pairwise_energy(&sites);
    let delta_mb = binding_energy(&spec)? - delta2;
    let delta3 = axilrod_teller(&sites);
    let model: QubitModel = build_qubit_model(&coupling)?;
    let gs = ground_state(&model)?;
    let (mut pair, mut reference) = (0.0, 0.0);
    for i in 0..3 {
        for j in 3..6 {
            pair += qubit_pair_tangle(&gs, i, j);
            reference += reference_qubit_tangle(0.5 * coupling.w[(i, j)]);
        }
    }
    Ok(QubitTrimerPoint {
        delta2,
        delta3,
        delta_mb,
        binding: qubit_binding(&model, &gs),
        tau_qubit_1: qubit_tangle(&gs, 0),
        tau_pair_qubit: pair,
        tau_ref_qubit: reference,
    })
}

/// Located zero of a boundary objective.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryResult {
    pub mode: BoundaryMode,
    /// `rho` for trimer and chain searches, the (unused) theta slot otherwise.
    pub fixed: f64,
    pub root: f64,
    pub lo: f64,
    pub hi: f64,
    /// Half-width of the final bracket.
    pub residual: f64,
    pub objective_lo: f64,
    pub objective_hi: f64,
}

/// Objective whose zero defines the boundary, at one point of the search.
pub fn boundary_objective(mode: BoundaryMode, target: &BoundaryTarget, fixed: f64, x: f64) -> Result<f64> {
    let sites = match target {
        BoundaryTarget::Trimer => build_trimer(fixed, x)?,
        BoundaryTarget::Chain { n } => build_chain(*n, fixed, x)?,
        BoundaryTarget::Lattice { kind, dims } => build_lattice(*kind, dims, x)?,
    };
    objective_on(mode, target, &sites)
}

fn objective_on(mode: BoundaryMode, target: &BoundaryTarget, sites: &SiteSet) -> Result<f64> {
    match mode {
        BoundaryMode::AtZero => match (target, sites.theta) {
            (BoundaryTarget::Trimer, Some(theta)) => Ok(trimer_at_bracket(theta)),
            _ => Ok(axilrod_teller(sites)),
        },
        BoundaryMode::MbZero => {
            let Prepared { potential, .. } = prepare(sites)?;
            Ok(binding_energy(&spectrum(&potential)?)? - pairwise_energy(sites))
        }
        BoundaryMode::D3EqNegD4 => {
            let Prepared { potential, .. } = prepare(sites)?;
            let t = raw_terms(&spectrum(&potential)?.w_eigs, 4);
            Ok(t[1] + t[2])
        }
        BoundaryMode::EdiOne => {
            let Prepared { coupling, potential } = prepare(sites)?;
            let cm = GroundStateCM::from_potential(&potential)?;
            let value = match target {
                BoundaryTarget::Trimer => edi(&cm, &coupling, 0, 1)?,
                BoundaryTarget::Chain { n } => {
                    let (a, b) = chain_center_pair(*n);
                    edi(&cm, &coupling, a, b)?
                }
                BoundaryTarget::Lattice { .. } => {
                    let center = sites.central_site();
                    let neighbors = central_neighbors(sites, center);
                    mean_nn_edi(&cm, &coupling, center, &neighbors)?
                }
            };
            Ok(value - 1.0)
        }
    }
}

/// First sign change of `f` on `grid` (ascending), refined by bisection to
/// `BISECTION`. Points where `f` fails are skipped when bracketing.
pub fn bracket_and_bisect(grid: &[f64], f: impl Fn(f64) -> Result<f64> + Sync) -> Result<(f64, f64, f64, f64)> {
    let values: Vec<Option<f64>> = grid.par_iter().map(|&x| f(x).ok().filter(|v| v.is_finite())).collect();
    let mut bracket = None;
    let mut prev: Option<(f64, f64)> = None;
    for (&x, v) in grid.iter().zip(&values) {
        let Some(v) = *v else {
            prev = None;
            continue;
        };
        if v == 0.0 {
            return Ok((x, x, v, v));
        }
        if let Some((px, pv)) = prev {
            if pv.signum() != v.signum() {
                bracket = Some((px, x, pv, v));
                break;
            }
        }
        prev = Some((x, v));
    }
    let (mut lo, mut hi, mut flo, mut fhi) = bracket.ok_or(QdoError::NoBracket {
        lo: grid.first().copied().unwrap_or(f64::NAN),
        hi: grid.last().copied().unwrap_or(f64::NAN),
    })?;
    while hi - lo > BISECTION {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok((mid, mid, fm, fm));
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
            fhi = fm;
        }
    }
    Ok((lo, hi, flo, fhi))
}

/// Boundary at fixed `rho` (trimer, chain: search over `theta_grid`) or over
/// `rho_grid` (lattice; `fixed` is recorded but unused).
pub fn find_boundary(
    mode: BoundaryMode,
    target: &BoundaryTarget,
    fixed: f64,
    search_grid: &[f64],
) -> Result<BoundaryResult> {
    let (lo, hi, flo, fhi) = bracket_and_bisect(search_grid, |x| boundary_objective(mode, target, fixed, x))?;
    Ok(BoundaryResult {
        mode,
        fixed,
        root: 0.5 * (lo + hi),
        lo,
        hi,
        residual: 0.5 * (hi - lo),
        objective_lo: flo,
        objective_hi: fhi,
    })
}

/// Boundary search for every fixed value in the spec.
pub fn run_boundary_scan(spec: &ScanSpec) -> Result<ScanOutput> {
    spec.validate()?;
    let target = &spec.boundary_target;
    if let BoundaryTarget::Lattice { kind, dims } = target {
        let probe = build_lattice(*kind, dims, 1.0)?;
        if probe.n_modes() > spec.mode_budget {
            return Err(QdoError::TooLarge { size: probe.n_modes(), budget: spec.mode_budget });
        }
    }
    if let BoundaryTarget::Chain { n } = target {
        if 3 * n > spec.mode_budget {
            return Err(QdoError::TooLarge { size: 3 * n, budget: spec.mode_budget });
        }
    }
    let (fixed, grid) = if target.sweeps_theta() {
        let fixed = if spec.fixed.is_empty() { spec.rho.values() } else { spec.fixed.clone() };
        (fixed, spec.theta.values())
    } else {
        (vec![f64::NAN], spec.rho.values())
    };
    let columns = ["mode", "fixed", "root", "lo", "hi", "residual", "status"];
    let mut table = Table::new(&columns);
    for f in fixed {
        let prefix = vec![spec.boundary_mode.to_string().into(), f.into()];
        match find_boundary(spec.boundary_mode, target, f, &grid) {
            Ok(b) => {
                let mut row = prefix;
                row.extend([b.root.into(), b.lo.into(), b.hi.into(), b.residual.into(), "ok".into()]);
                table.push(row);
            }
            Err(e) => table.push(failed_row(prefix, columns.len(), &e)),
        }
    }
    Ok(ScanOutput {
        table,
        meta: json!({ "scan": "boundary", "spec": spec }),
    })
}
