//! Python module `hkit`. Grids cross the boundary as flat row-major lists
//! with an explicit box and resolution; structured inputs and reports as JSON
//! strings.

use hkit_core::experiment::{run, RunConfig};
use hkit_core::hardy::{self, Atom, AtomProfile};
use hkit_core::{GridFunction, KernelSpec, MatrixFamily, QuadratureSpec, Region, SquareMatrix};
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

create_exception!(hkit, HkitError, PyException);

fn err(e: hkit_core::Error) -> PyErr {
    HkitError::new_err(e.to_string())
}

fn json_err(e: serde_json::Error) -> PyErr {
    HkitError::new_err(format!("invalid json: {e}"))
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<SquareMatrix> {
    SquareMatrix::from_rows(&rows).map_err(err)
}

fn grid(lo: Vec<f64>, hi: Vec<f64>, resolution: Vec<usize>, values: Vec<f64>) -> PyResult<GridFunction> {
    let region = Region::new(lo, hi).map_err(err)?;
    GridFunction::new(region, resolution, values).map_err(err)
}

#[pyfunction]
fn spectral_norm(rows: Vec<Vec<f64>>) -> PyResult<f64> {
    matrix(rows)?.spectral_norm().map_err(err)
}

#[pyfunction]
fn ell_norm(rows: Vec<Vec<f64>>) -> PyResult<f64> {
    Ok(matrix(rows)?.ell_norm())
}

#[pyfunction]
fn min_eigenvalue_gram(rows: Vec<Vec<f64>>) -> PyResult<f64> {
    matrix(rows)?.min_eigenvalue_gram().map_err(err)
}

#[pyfunction]
fn inverse(rows: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    Ok(matrix(rows)?.inverse().map_err(err)?.rows())
}

/// Returns the L_A, L* and L2 comparison as a JSON string.
#[pyfunction]
#[pyo3(signature = (kernel, family, nodes_per_axis=None))]
fn compare_conditions(kernel: &str, family: &str, nodes_per_axis: Option<usize>) -> PyResult<String> {
    let phi: KernelSpec = serde_json::from_str(kernel).map_err(json_err)?;
    let a: MatrixFamily = serde_json::from_str(family).map_err(json_err)?;
    let q = match nodes_per_axis {
        Some(m) => QuadratureSpec::gauss(m),
        None => QuadratureSpec::default_for(phi.dim()),
    };
    let c = hkit_core::compare_conditions(&phi, &a, &q).map_err(err)?;
    serde_json::to_string(&c).map_err(json_err)
}

#[pyfunction]
fn make_atom(
    center: Vec<f64>,
    radius: f64,
    profile: &str,
    lo: Vec<f64>,
    hi: Vec<f64>,
    resolution: Vec<usize>,
) -> PyResult<Vec<f64>> {
    let profile = match profile {
        "sign-split" => AtomProfile::SignSplit,
        "shell-difference" => AtomProfile::ShellDifference,
        other => return Err(HkitError::new_err(format!("unknown profile {other}"))),
    };
    let region = Region::new(lo, hi).map_err(err)?;
    let g = hardy::make_atom(&Atom::new(center, radius, profile), region, resolution).map_err(err)?;
    Ok(g.values().to_vec())
}

#[pyfunction]
fn riesz_transform(lo: Vec<f64>, hi: Vec<f64>, resolution: Vec<usize>, values: Vec<f64>, p: usize) -> PyResult<Vec<f64>> {
    let f = grid(lo, hi, resolution, values)?;
    Ok(hardy::riesz_transform(&f, p).map_err(err)?.values().to_vec())
}

#[pyfunction]
fn h1_surrogate_norm(lo: Vec<f64>, hi: Vec<f64>, resolution: Vec<usize>, values: Vec<f64>) -> PyResult<f64> {
    hardy::h1_surrogate_norm(&grid(lo, hi, resolution, values)?).map_err(err)
}

/// Runs a JSON configuration; returns `(report_json, exit_code)`.
#[pyfunction]
fn run_config(py: Python<'_>, config: &str) -> PyResult<(String, i32)> {
    let c = RunConfig::from_json_str(config).map_err(err)?;
    let out = py.detach(|| run(&c)).map_err(err)?;
    Ok((out.report.to_json_string(), out.report.exit_code()))
}

#[pymodule]
fn hkit(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("HkitError", m.py().get_type::<HkitError>())?;
    m.add_function(wrap_pyfunction!(spectral_norm, m)?)?;
    m.add_function(wrap_pyfunction!(ell_norm, m)?)?;
    m.add_function(wrap_pyfunction!(min_eigenvalue_gram, m)?)?;
    m.add_function(wrap_pyfunction!(inverse, m)?)?;
    m.add_function(wrap_pyfunction!(compare_conditions, m)?)?;
    m.add_function(wrap_pyfunction!(make_atom, m)?)?;
    m.add_function(wrap_pyfunction!(riesz_transform, m)?)?;
    m.add_function(wrap_pyfunction!(h1_surrogate_norm, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    Ok(())
}
