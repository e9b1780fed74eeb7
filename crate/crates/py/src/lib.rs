//! Python bindings for the `qdo_core` crate.

use pyo3::exceptions::{PyMemoryError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde_json::Value;

use qdo_core::energy::{energy_breakdown as breakdown, s_infinity};
use qdo_core::entanglement::{edi as edi_of, monogamy_audit_with_bound};
use qdo_core::geometry::{build_chain, build_lattice, build_trimer, LatticeKind, SiteSet};
use qdo_core::scan::{self, BoundaryMode, BoundaryTarget, Range, ScanKind, ScanSpec};
use qdo_core::{build_coupling, build_potential, spectrum, GroundStateCM, QdoError};

fn err(e: QdoError) -> PyErr {
    match e {
        QdoError::TooLarge { .. } => PyMemoryError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match (n.as_i64(), n.as_f64()) {
            (Some(i), _) => i.into_pyobject(py)?.into_any(),
            (None, Some(f)) => f.into_pyobject(py)?.into_any(),
            _ => py.None().into_bound(py),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(to_py(py, item)?)?;
            }
            list.into_any()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, item) in map {
                dict.set_item(k, to_py(py, item)?)?;
            }
            dict.into_any()
        }
    })
}

fn serialize<'py>(py: Python<'py>, value: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let v = serde_json::to_value(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    to_py(py, &v)
}

fn sites_from(positions: Vec<[f64; 3]>) -> PyResult<SiteSet> {
    SiteSet::custom(positions).map_err(err)
}

/// Positions of the isosceles trimer with apex angle `theta`.
#[pyfunction]
fn trimer_positions(rho: f64, theta: f64) -> PyResult<Vec<[f64; 3]>> {
    Ok(build_trimer(rho, theta).map_err(err)?.positions)
}

/// Positions of an `n`-site linear-zigzag chain.
#[pyfunction]
fn chain_positions(n: usize, rho: f64, theta: f64) -> PyResult<Vec<[f64; 3]>> {
    Ok(build_chain(n, rho, theta).map_err(err)?.positions)
}

/// Positions of an open-boundary lattice patch.
#[pyfunction]
fn lattice_positions(kind: &str, dims: Vec<usize>, rho: f64) -> PyResult<Vec<[f64; 3]>> {
    let kind: LatticeKind = kind.parse().map_err(err)?;
    Ok(build_lattice(kind, &dims, rho).map_err(err)?.positions)
}

/// Binding energy and the series decomposition of an assembly.
#[pyfunction]
#[pyo3(signature = (positions, k_max = 200))]
fn energy_breakdown<'py>(py: Python<'py>, positions: Vec<[f64; 3]>, k_max: usize) -> PyResult<Bound<'py, PyAny>> {
    serialize(py, &breakdown(&sites_from(positions)?, k_max).map_err(err)?)
}

/// Per-mode tangles, pair bounds and the reduced-tangle bound.
#[pyfunction]
fn tangle_report<'py>(py: Python<'py>, positions: Vec<[f64; 3]>) -> PyResult<Bound<'py, PyAny>> {
    let sites = sites_from(positions)?;
    let potential = build_potential(&build_coupling(&sites).map_err(err)?);
    let s_inf = s_infinity(&spectrum(&potential).map_err(err)?);
    let cm = GroundStateCM::from_potential(&potential).map_err(err)?;
    serialize(py, &monogamy_audit_with_bound(&cm, s_inf))
}

/// Entanglement distribution index between QDOs `mu` and `xi`.
#[pyfunction]
fn edi(positions: Vec<[f64; 3]>, mu: usize, xi: usize) -> PyResult<f64> {
    let sites = sites_from(positions)?;
    let w = build_coupling(&sites).map_err(err)?;
    let cm = GroundStateCM::from_potential(&build_potential(&w)).map_err(err)?;
    edi_of(&cm, &w, mu, xi).map_err(err)
}

/// Boundary root along `grid` (theta for trimer/chain, rho for lattice).
#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (mode, grid, fixed = f64::NAN, target = "trimer", n = 100, kind = "square", dims = vec![11, 11]))]
fn find_boundary<'py>(
    py: Python<'py>,
    mode: &str,
    grid: Vec<f64>,
    fixed: f64,
    target: &str,
    n: usize,
    kind: &str,
    dims: Vec<usize>,
) -> PyResult<Bound<'py, PyAny>> {
    let mode: BoundaryMode = mode.parse().map_err(err)?;
    let target = match target {
        "trimer" => BoundaryTarget::Trimer,
        "chain" => BoundaryTarget::Chain { n },
        "lattice" => BoundaryTarget::Lattice { kind: kind.parse().map_err(err)?, dims },
        other => return Err(PyValueError::new_err(format!("unknown target '{other}'"))),
    };
    serialize(py, &scan::find_boundary(mode, &target, fixed, &grid).map_err(err)?)
}

/// Qubit-comparator quantities for one trimer geometry.
#[pyfunction]
fn qubit_trimer<'py>(py: Python<'py>, rho: f64, theta: f64) -> PyResult<Bound<'py, PyAny>> {
    serialize(py, &scan::qubit_trimer_point(rho, theta).map_err(err)?)
}

/// Trimer heatmap as CSV text.
#[pyfunction]
#[pyo3(signature = (rho = (1.8, 4.0, 50), theta = (std::f64::consts::FRAC_PI_3, std::f64::consts::PI, 50), k_max = 200))]
fn trimer_scan(rho: (f64, f64, usize), theta: (f64, f64, usize), k_max: usize) -> PyResult<String> {
    let mut spec = ScanSpec::new(ScanKind::Trimer);
    spec.rho = Range::new(rho.0, rho.1, rho.2).map_err(err)?;
    spec.theta = Range::new(theta.0, theta.1, theta.2).map_err(err)?;
    spec.k_max = k_max;
    Ok(scan::run_trimer_scan(&spec).map_err(err)?.table.to_csv())
}

/// Lattice curve over rho as CSV text.
#[pyfunction]
#[pyo3(signature = (kind, dims, rho = (1.8, 4.0, 50), k_max = 200))]
fn lattice_scan(kind: &str, dims: Vec<usize>, rho: (f64, f64, usize), k_max: usize) -> PyResult<String> {
    let mut spec = ScanSpec::new(ScanKind::LatticeCurve);
    spec.lattice = kind.parse().map_err(err)?;
    spec.dims = dims;
    spec.rho = Range::new(rho.0, rho.1, rho.2).map_err(err)?;
    spec.k_max = k_max;
    Ok(scan::run_lattice_curve(&spec).map_err(err)?.output.table.to_csv())
}

#[pymodule]
fn qdo(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(trimer_positions, m)?)?;
    m.add_function(wrap_pyfunction!(chain_positions, m)?)?;
    m.add_function(wrap_pyfunction!(lattice_positions, m)?)?;
    m.add_function(wrap_pyfunction!(energy_breakdown, m)?)?;
    m.add_function(wrap_pyfunction!(tangle_report, m)?)?;
    m.add_function(wrap_pyfunction!(edi, m)?)?;
    m.add_function(wrap_pyfunction!(find_boundary, m)?)?;
    m.add_function(wrap_pyfunction!(qubit_trimer, m)?)?;
    m.add_function(wrap_pyfunction!(trimer_scan, m)?)?;
    m.add_function(wrap_pyfunction!(lattice_scan, m)?)?;
    Ok(())
}
