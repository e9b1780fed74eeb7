#![allow(dead_code)]

use std::f64::consts::{FRAC_PI_3, PI};

use nalgebra::DMatrix;
use qdo_core::{build_chain, build_lattice, build_trimer, LatticeKind, SiteSet};
use rand::Rng;

/// `(V^{1/2}, V^{-1/2})` by Denman-Beavers iteration; no eigensolver involved.
pub fn sqrt_pair(v: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = v.nrows();
    let mut y = v.clone();
    let mut z = DMatrix::<f64>::identity(n, n);
    for _ in 0..100 {
        let yi = y.clone().try_inverse().expect("invertible iterate");
        let zi = z.clone().try_inverse().expect("invertible iterate");
        let y_next = (&y + zi) * 0.5;
        let z_next = (&z + yi) * 0.5;
        let step = (&y_next - &y).amax();
        y = y_next;
        z = z_next;
        if step < 1e-15 {
            break;
        }
    }
    (y, z)
}

/// Dense `V = I + alpha T` assembled directly from the positions.
pub fn potential_oracle(sites: &SiteSet) -> DMatrix<f64> {
    let n = sites.len();
    let mut v = DMatrix::<f64>::identity(3 * n, 3 * n);
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            let (pa, pb) = (sites.positions[a], sites.positions[b]);
            let d = [pb[0] - pa[0], pb[1] - pa[1], pb[2] - pa[2]];
            let r2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
            let r = r2.sqrt();
            for i in 0..3 {
                for j in 0..3 {
                    let delta = if i == j { 1.0 } else { 0.0 };
                    v[(3 * a + i, 3 * b + j)] = (delta - 3.0 * d[i] * d[j] / r2) / (r2 * r);
                }
            }
        }
    }
    v
}

/// Trimer within the scanned window.
pub fn random_trimer(rng: &mut impl Rng) -> SiteSet {
    build_trimer(rng.gen_range(1.8..4.0), rng.gen_range(FRAC_PI_3..PI)).unwrap()
}

/// Random cluster with all separations at least `min_sep`.
pub fn random_cluster(rng: &mut impl Rng, n: usize, min_sep: f64) -> SiteSet {
    let side = min_sep * (n as f64).cbrt() * 1.6;
    loop {
        let mut pts: Vec<[f64; 3]> = Vec::with_capacity(n);
        for _ in 0..(50 * n) {
            if pts.len() == n {
                break;
            }
            let p = [rng.gen_range(0.0..side), rng.gen_range(0.0..side), rng.gen_range(0.0..side)];
            let ok = pts.iter().all(|q| {
                let d2: f64 = (0..3).map(|k| (p[k] - q[k]).powi(2)).sum();
                d2 >= min_sep * min_sep
            });
            if ok {
                pts.push(p);
            }
        }
        if pts.len() == n {
            return SiteSet::custom(pts).unwrap();
        }
    }
}

/// Trimer, zigzag chain, small lattice or random cluster, drawn at random.
/// Callers must still handle a non-positive-definite potential.
pub fn random_assembly(rng: &mut impl Rng) -> SiteSet {
    match rng.gen_range(0..4) {
        0 => random_trimer(rng),
        1 => build_chain(rng.gen_range(3..9), rng.gen_range(1.9..4.0), rng.gen_range(FRAC_PI_3..PI)).unwrap(),
        2 => {
            let kind = [LatticeKind::Square, LatticeKind::Triangular, LatticeKind::Honeycomb][rng.gen_range(0..3)];
            build_lattice(kind, &[rng.gen_range(2..5), rng.gen_range(2..5)], rng.gen_range(2.0..4.0)).unwrap()
        }
        _ => {
            let (n, sep) = (rng.gen_range(2..7), rng.gen_range(1.9..3.0));
            random_cluster(rng, n, sep)
        }
    }
}

/// The assemblies swept by the bound and monogamy suites: trimer grid plus
/// four lattices at three separations.
pub fn suite_lattices() -> Vec<(String, SiteSet)> {
    let mut out = Vec::new();
    for rho in [2.37, 2.93, 4.0] {
        for (kind, dims) in [
            (LatticeKind::Square, vec![11, 11]),
            (LatticeKind::Triangular, vec![11, 11]),
            (LatticeKind::Honeycomb, vec![6, 6]),
            (LatticeKind::Cubic, vec![7, 7, 7]),
        ] {
            out.push((format!("{kind} rho={rho}"), build_lattice(kind, &dims, rho).unwrap()));
        }
    }
    out
}

pub fn trimer_grid() -> Vec<(f64, f64)> {
    let steps = 50;
    let mut out = Vec::with_capacity(steps * steps);
    for a in 0..steps {
        let rho = 1.8 + 2.2 * a as f64 / (steps - 1) as f64;
        for b in 0..steps {
            let theta = FRAC_PI_3 + (PI - FRAC_PI_3) * b as f64 / (steps - 1) as f64;
            out.push((rho, theta));
        }
    }
    out
}

/// Independent reduced tangle function.
pub fn g_oracle(x: f64) -> f64 {
    let s = x.sqrt();
    x * (1.0 + s).powi(2) / (1.0 + 2.0 * s).powi(2)
}
