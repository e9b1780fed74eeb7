//! Equilibrium positions of QDO assemblies.
//!
//! Positions are dimensionless, measured in units of `alpha^(1/3)`, so the
//! nearest-neighbour separation of every generated assembly equals `rho`.

use std::f64::consts::{FRAC_PI_3, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{QdoError, Result};
use crate::tolerances::{COINCIDENT_SITE, GEOMETRY_REL};

pub type Point = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeometryKind {
    Trimer,
    Chain,
    Square,
    Triangular,
    Honeycomb,
    Cubic,
    Pyrochlore,
    Custom,
}

/// Lattice families accepted by [`build_lattice`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LatticeKind {
    Square,
    Triangular,
    Honeycomb,
    Cubic,
    Pyrochlore,
}

impl LatticeKind {
    pub fn geometry(self) -> GeometryKind {
        match self {
            LatticeKind::Square => GeometryKind::Square,
            LatticeKind::Triangular => GeometryKind::Triangular,
            LatticeKind::Honeycomb => GeometryKind::Honeycomb,
            LatticeKind::Cubic => GeometryKind::Cubic,
            LatticeKind::Pyrochlore => GeometryKind::Pyrochlore,
        }
    }

    /// Number of cell axes (2D or 3D).
    pub fn axes(self) -> usize {
        match self {
            LatticeKind::Square | LatticeKind::Triangular | LatticeKind::Honeycomb => 2,
            LatticeKind::Cubic | LatticeKind::Pyrochlore => 3,
        }
    }

    pub fn basis_len(self) -> usize {
        self.basis().len()
    }

    fn primitive_vectors(self) -> Vec<Point> {
        let s3 = 3f64.sqrt();
        match self {
            LatticeKind::Square => vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            LatticeKind::Triangular => vec![[1.0, 0.0, 0.0], [0.5, 0.5 * s3, 0.0]],
            LatticeKind::Honeycomb => vec![[s3, 0.0, 0.0], [-0.5 * s3, 1.5, 0.0]],
            LatticeKind::Cubic => vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            // FCC primitive vectors of a unit conventional cube
            LatticeKind::Pyrochlore => vec![[0.0, 0.5, 0.5], [0.5, 0.0, 0.5], [0.5, 0.5, 0.0]],
        }
    }

    fn basis(self) -> Vec<Point> {
        match self {
            LatticeKind::Honeycomb => vec![[0.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            LatticeKind::Pyrochlore => vec![
                [0.0, 0.0, 0.0],
                [0.25, 0.25, 0.0],
                [0.25, 0.0, 0.25],
                [0.0, 0.25, 0.25],
            ],
            _ => vec![[0.0, 0.0, 0.0]],
        }
    }
}

impl fmt::Display for LatticeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            LatticeKind::Square => "square",
            LatticeKind::Triangular => "triangular",
            LatticeKind::Honeycomb => "honeycomb",
            LatticeKind::Cubic => "cubic",
            LatticeKind::Pyrochlore => "pyrochlore",
        };
        f.write_str(name)
    }
}

impl FromStr for LatticeKind {
    type Err = QdoError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "square" => Ok(LatticeKind::Square),
            "triangular" => Ok(LatticeKind::Triangular),
            "honeycomb" => Ok(LatticeKind::Honeycomb),
            "cubic" => Ok(LatticeKind::Cubic),
            "pyrochlore" => Ok(LatticeKind::Pyrochlore),
            other => Err(QdoError::Domain(format!("unsupported lattice kind '{other}'"))),
        }
    }
}

/// Positions of `N` QDOs plus the metadata of the generator that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteSet {
    pub kind: GeometryKind,
    pub rho: f64,
    pub theta: Option<f64>,
    pub positions: Vec<Point>,
}

impl SiteSet {
    /// Wraps arbitrary positions; `rho` becomes their minimum separation.
    pub fn custom(positions: Vec<Point>) -> Result<Self> {
        if positions.len() < 2 {
            return Err(QdoError::Domain("an assembly needs at least two sites".into()));
        }
        let (rho, (first, second)) = min_pair(&positions);
        if rho < COINCIDENT_SITE {
            return Err(QdoError::CoincidentSites {
                first,
                second,
                separation: rho,
            });
        }
        Ok(SiteSet {
            kind: GeometryKind::Custom,
            rho,
            theta: None,
            positions,
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn n_modes(&self) -> usize {
        3 * self.positions.len()
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        norm(sub(self.positions[a], self.positions[b]))
    }

    /// Exhaustive minimum over distinct pairs.
    pub fn min_pair_distance(&self) -> f64 {
        min_pair(&self.positions).0
    }

    /// Returns a copy with every coordinate multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> SiteSet {
        SiteSet {
            kind: self.kind,
            rho: self.rho * factor,
            theta: self.theta,
            positions: self.positions.iter().map(|p| scale(*p, factor)).collect(),
        }
    }

    /// Site closest to the centroid; ties go to the lowest index.
    pub fn central_site(&self) -> usize {
        let n = self.positions.len() as f64;
        let mut centroid = [0.0; 3];
        for p in &self.positions {
            for k in 0..3 {
                centroid[k] += p[k] / n;
            }
        }
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (idx, p) in self.positions.iter().enumerate() {
            let d = norm(sub(*p, centroid));
            if d < best_d * (1.0 - 1e-12) {
                best = idx;
                best_d = d;
            }
        }
        best
    }

    /// Sites whose distance from `site` equals `distance` to relative `1e-9`.
    pub fn sites_at_distance(&self, site: usize, distance: f64) -> Vec<usize> {
        (0..self.len())
            .filter(|&other| other != site)
            .filter(|&other| (self.distance(site, other) - distance).abs() <= 1e-9 * distance)
            .collect()
    }

    /// Distinct separations from `site`, ascending and merged at relative `1e-9`.
    pub fn neighbor_shells(&self, site: usize) -> Vec<f64> {
        let mut ds: Vec<f64> = (0..self.len())
            .filter(|&o| o != site)
            .map(|o| self.distance(site, o))
            .collect();
        ds.sort_by(|a, b| a.total_cmp(b));
        let mut shells: Vec<f64> = Vec::new();
        for d in ds {
            match shells.last() {
                Some(&last) if (d - last).abs() <= 1e-9 * last => {}
                _ => shells.push(d),
            }
        }
        shells
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if !(rho.is_finite() && rho > 0.0) {
        return Err(QdoError::Domain(format!("rho must be positive, got {rho}")));
    }
    Ok(())
}

fn check_theta(theta: f64) -> Result<()> {
    let slack = 1e-12;
    if !(theta.is_finite() && theta >= FRAC_PI_3 - slack && theta <= PI + slack) {
        return Err(QdoError::Domain(format!(
            "theta must lie in [pi/3, pi], got {theta}"
        )));
    }
    Ok(())
}

/// Isoceles trimer with apex angle `theta` at site 1 (0-based) and legs `rho`.
pub fn build_trimer(rho: f64, theta: f64) -> Result<SiteSet> {
    let mut sites = build_zigzag(3, rho, theta)?;
    sites.kind = GeometryKind::Trimer;
    Ok(sites)
}

/// Linear-to-zigzag chain: odd sites are lifted by `rho cos(theta/2)`.
pub fn build_chain(n: usize, rho: f64, theta: f64) -> Result<SiteSet> {
    if n < 3 {
        return Err(QdoError::Domain(format!("a chain needs n >= 3, got {n}")));
    }
    build_zigzag(n, rho, theta)
}

fn build_zigzag(n: usize, rho: f64, theta: f64) -> Result<SiteSet> {
    check_rho(rho)?;
    check_theta(theta)?;
    let (s, c) = (0.5 * theta).sin_cos();
    let positions = (0..n)
        .map(|k| {
            let y = if k % 2 == 1 { rho * c } else { 0.0 };
            [k as f64 * rho * s, y, 0.0]
        })
        .collect();
    Ok(SiteSet {
        kind: GeometryKind::Chain,
        rho,
        theta: Some(theta),
        positions,
    })
}

/// Open-boundary lattice of `dims` unit cells, rescaled so the minimum
/// separation equals `rho`.
///
/// `dims` lists one extent per cell axis. For the multi-site bases a leading
/// (pyrochlore) or trailing (honeycomb) basis count may be included, as in
/// `4x12x12x12` or `47x47x2`; it must match the basis size.
pub fn build_lattice(kind: LatticeKind, dims: &[usize], rho: f64) -> Result<SiteSet> {
    check_rho(rho)?;
    let extents = cell_extents(kind, dims)?;
    let vectors = kind.primitive_vectors();
    let basis = kind.basis();

    let mut raw = Vec::with_capacity(extents.iter().product::<usize>() * basis.len());
    let mut index = vec![0usize; extents.len()];
    loop {
        let mut origin = [0.0; 3];
        for (axis, &i) in index.iter().enumerate() {
            origin = add(origin, scale(vectors[axis], i as f64));
        }
        for b in &basis {
            raw.push(add(origin, *b));
        }
        // row-major: last axis fastest
        let mut axis = extents.len();
        loop {
            if axis == 0 {
                let sites = normalise(raw, rho)?;
                return Ok(SiteSet {
                    kind: kind.geometry(),
                    ..sites
                });
            }
            axis -= 1;
            index[axis] += 1;
            if index[axis] < extents[axis] {
                break;
            }
            index[axis] = 0;
        }
    }
}

fn cell_extents(kind: LatticeKind, dims: &[usize]) -> Result<Vec<usize>> {
    let axes = kind.axes();
    let nb = kind.basis_len();
    let extents: Vec<usize> = if dims.len() == axes {
        dims.to_vec()
    } else if dims.len() == axes + 1 && nb > 1 {
        match kind {
            LatticeKind::Pyrochlore if dims[0] == nb => dims[1..].to_vec(),
            LatticeKind::Honeycomb if dims[axes] == nb => dims[..axes].to_vec(),
            _ => {
                return Err(QdoError::Domain(format!(
                    "dims {dims:?} do not match the {nb}-site {kind} basis"
                )))
            }
        }
    } else {
        return Err(QdoError::Domain(format!(
            "{kind} lattice expects {axes} extents, got {dims:?}"
        )));
    };
    if extents.contains(&0) {
        return Err(QdoError::Domain(format!("extents must be >= 1, got {dims:?}")));
    }
    if extents.iter().product::<usize>() * nb < 2 {
        return Err(QdoError::Domain(format!(
            "{kind} lattice {dims:?} has fewer than two sites"
        )));
    }
    Ok(extents)
}

fn normalise(raw: Vec<Point>, rho: f64) -> Result<SiteSet> {
    let (dmin, (first, second)) = min_pair(&raw);
    if dmin < COINCIDENT_SITE {
        return Err(QdoError::CoincidentSites {
            first,
            second,
            separation: dmin,
        });
    }
    let factor = rho / dmin;
    let positions: Vec<Point> = raw.into_iter().map(|p| scale(p, factor)).collect();
    debug_assert!((min_pair(&positions).0 - rho).abs() <= GEOMETRY_REL * rho * 10.0);
    Ok(SiteSet {
        kind: GeometryKind::Custom,
        rho,
        theta: None,
        positions,
    })
}

fn min_pair(points: &[Point]) -> (f64, (usize, usize)) {
    let mut best = (f64::INFINITY, (0, 0));
    for a in 0..points.len() {
        for b in (a + 1)..points.len() {
            let d2 = norm2(sub(points[a], points[b]));
            if d2 < best.0 {
                best = (d2, (a, b));
            }
        }
    }
    (best.0.sqrt(), best.1)
}

pub(crate) fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn add(a: Point, b: Point) -> Point {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn scale(a: Point, s: f64) -> Point {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub(crate) fn norm2(a: Point) -> f64 {
    a[0] * a[0] + a[1] * a[1] + a[2] * a[2]
}

pub(crate) fn norm(a: Point) -> f64 {
    norm2(a).sqrt()
}
