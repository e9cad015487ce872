//! Python bindings for the modlab core.
//!
//! Functions take the same descriptor strings as the command line and return
//! plain lists, so the module has no NumPy dependency.

use modlab::convergence::{convergence_experiment, Method, Semigroup, SemigroupSpec, SemigroupTag};
use modlab::maximal::{maximal_function as maximal, RadiiSet};
use modlab::modnorm::{weight_class_membership, Domain, WeightClass};
use modlab::stft::gaussian_window;
use modlab::{kernels, sample, Exponent, FunctionDescriptor, Grid, MixedNormParams, Offset, Weight};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn py_err(e: modlab::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parsed<T: std::str::FromStr>(what: &str, s: &str) -> PyResult<T>
where
    T::Err: std::fmt::Display,
{
    s.parse().map_err(|e| PyValueError::new_err(format!("bad {what} `{s}`: {e}")))
}

/// 1D grid for `data`; singular data defaults to the half-step lattice.
fn grid_for(data: &FunctionDescriptor, half_width: f64, n: usize, offset: Option<&str>) -> PyResult<Grid> {
    let offset = match offset {
        Some(s) => parsed::<Offset>("offset", s)?,
        None if data.singular_at_origin() => Offset::HalfStep,
        None => Offset::None,
    };
    Grid::new(1, half_width, n, offset).map_err(py_err)
}

fn params(p: &str, q: &str) -> PyResult<MixedNormParams> {
    let p = Exponent::parse_named("p", p).map_err(py_err)?;
    let q = Exponent::parse_named("q", q).map_err(py_err)?;
    Ok(MixedNormParams::new(p, q))
}

/// Samples a descriptor; returns `(x, real, imag)`.
#[pyfunction]
#[pyo3(signature = (data, half_width = 8.0, n = 1024, offset = None))]
fn sample_data(
    data: &str,
    half_width: f64,
    n: usize,
    offset: Option<&str>,
) -> PyResult<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let desc = FunctionDescriptor::parse(data).map_err(py_err)?;
    let g = grid_for(&desc, half_width, n, offset)?;
    let f = sample(&desc, &g).map_err(py_err)?;
    Ok((g.axis(), f.real_parts(), f.values().iter().map(|z| z.im).collect()))
}

/// Euclidean kernels `heat`/`poisson` of one argument, Hermite kernels
/// `hermite_heat`/`hermite_poisson` of two.
#[pyfunction]
#[pyo3(signature = (kind, t, x, y = None, nodes = 64))]
fn kernel(kind: &str, t: f64, x: Vec<f64>, y: Option<Vec<f64>>, nodes: usize) -> PyResult<f64> {
    let y = y.unwrap_or_else(|| vec![0.0; x.len()]);
    match kind {
        "heat" => kernels::heat_kernel(t, &x),
        "poisson" => kernels::poisson_kernel(t, &x),
        "hermite_heat" => kernels::hermite_heat_kernel(t, &x, &y),
        "hermite_poisson" => kernels::hermite_poisson_kernel(t, &x, &y, nodes),
        other => return Err(PyValueError::new_err(format!("unknown kernel `{other}`"))),
    }
    .map_err(py_err)
}

/// Weighted modulation norm with the Gaussian window e^{-π|y|²}.
#[pyfunction]
#[pyo3(signature = (data, p = "2", q = "2", weight = "const", half_width = 8.0, n = 1024))]
fn modulation_norm(data: &str, p: &str, q: &str, weight: &str, half_width: f64, n: usize) -> PyResult<f64> {
    let desc = FunctionDescriptor::parse(data).map_err(py_err)?;
    let g = grid_for(&desc, half_width, n, None)?;
    let f = sample(&desc, &g).map_err(py_err)?;
    let v = Weight::parse(weight, Domain::PhaseSpace).map_err(py_err)?;
    modlab::modnorm::modulation_norm(&f, &gaussian_window(&g), params(p, q)?, &v).map_err(py_err)
}

/// Discrete maximal function over every ball radius up to L.
#[pyfunction]
#[pyo3(signature = (data, half_width = 8.0, n = 1024))]
fn maximal_function(data: &str, half_width: f64, n: usize) -> PyResult<Vec<f64>> {
    let desc = FunctionDescriptor::parse(data).map_err(py_err)?;
    let g = grid_for(&desc, half_width, n, None)?;
    let f = sample(&desc, &g).map_err(py_err)?;
    let mf = maximal(&f, &RadiiSet::default_for(&g)).map_err(py_err)?;
    Ok(mf.real_parts())
}

/// Membership verdict and the truncated norms of each tested sweep.
#[pyfunction]
#[pyo3(signature = (class_tag, weight, t0 = vec![0.05, 0.1, 0.2, 0.5, 1.0], p = "2", q = "2"))]
fn weight_class(class_tag: &str, weight: &str, t0: Vec<f64>, p: &str, q: &str) -> PyResult<(String, Vec<Vec<f64>>)> {
    let class: WeightClass = parsed("weight class", class_tag)?;
    let v = Weight::parse(weight, Domain::PhaseSpace).map_err(py_err)?;
    let r = weight_class_membership(class, &v, params(p, q)?, &t0).map_err(py_err)?;
    Ok((r.verdict.to_string(), r.sweeps.into_iter().map(|s| s.norms).collect()))
}

/// Sup error of T_t f - f over `t_values`; returns `(errors, verdict)`.
#[pyfunction]
#[pyo3(signature = (semigroup, data, t_values, excluded_radius = 0.0, eps = 1e-2, half_width = 8.0, n = 1024))]
fn convergence(
    semigroup: &str,
    data: &str,
    t_values: Vec<f64>,
    excluded_radius: f64,
    eps: f64,
    half_width: f64,
    n: usize,
) -> PyResult<(Vec<f64>, String)> {
    let tag: SemigroupTag = parsed("semigroup", semigroup)?;
    let method = if tag.is_hermite() { Method::Spectral } else { Method::KernelConvolution };
    let spec = SemigroupSpec::new(tag, method).map_err(py_err)?;
    let desc = FunctionDescriptor::parse(data).map_err(py_err)?;
    let g = grid_for(&desc, half_width, n, None)?;
    let f = sample(&desc, &g).map_err(py_err)?;
    let s = Semigroup::new(spec, g).map_err(py_err)?;
    let r = convergence_experiment(&s, &f, &t_values, excluded_radius, eps).map_err(py_err)?;
    Ok((r.max_error.clone(), r.verdict.to_string()))
}

/// `(group, name, value, tolerance, passed, gating)`
type CheckRow = (String, String, f64, f64, bool, bool);

/// Runs verification groups, one row per check.
#[pyfunction]
#[pyo3(signature = (only = Vec::new()))]
fn verify(only: Vec<String>) -> PyResult<Vec<CheckRow>> {
    let rows = modlab::verify::run(&only).map_err(py_err)?;
    Ok(rows.into_iter().map(|c| (c.group.to_string(), c.name, c.value, c.tolerance, c.passed, c.gating)).collect())
}

#[pymodule]
fn modlab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(sample_data, m)?)?;
    m.add_function(wrap_pyfunction!(kernel, m)?)?;
    m.add_function(wrap_pyfunction!(modulation_norm, m)?)?;
    m.add_function(wrap_pyfunction!(maximal_function, m)?)?;
    m.add_function(wrap_pyfunction!(weight_class, m)?)?;
    m.add_function(wrap_pyfunction!(convergence, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
