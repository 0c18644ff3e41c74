//! Python bindings: seeded reductions, cost and synchronization statistics,
//! and the triCluster reduction. Results come back as dicts and strings.

use std::f64::consts::FRAC_PI_4;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use qreduce::peps::{self, Lattice};
use qreduce::protocols::{cost_stats, AkltForm, Protocol, RunOptions, Sampled, WireSpec};
use qreduce::{rng, syncwalk, Error};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::CapExceeded { .. } | Error::Verification(_) | Error::ProbabilityUnderflow | Error::Io(_) => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

#[allow(clippy::too_many_arguments)]
fn protocol(
    name: &str,
    form: &str,
    theta: Option<f64>,
    theta_a: Option<f64>,
    theta_b: Option<f64>,
    gamma: Option<f64>,
    phi: Option<f64>,
    axis: f64,
) -> PyResult<Protocol> {
    let need = |v: Option<f64>, k: &str| v.ok_or_else(|| PyValueError::new_err(format!("{k} is required")));
    Ok(match name {
        "aklt-alternating" => Protocol::Aklt { form: AkltForm::parse(form).map_err(py_err)? },
        "family" => Protocol::Family { theta_a: need(theta_a, "theta_a")?, theta_b: need(theta_b, "theta_b")? },
        "fnw" => Protocol::Fnw { theta: need(theta, "theta")? },
        "wire-filter" => match (gamma, phi) {
            (Some(g), None) => Protocol::Wire { spec: WireSpec::biased(axis, g) },
            (None, Some(p)) => Protocol::Wire { spec: WireSpec::byproduct(axis, p) },
            _ => return Err(PyValueError::new_err("give exactly one of gamma, phi")),
        },
        other => return Err(PyValueError::new_err(format!("unknown protocol {other:?}"))),
    })
}

/// Runs one seeded reduction under the mixed boundary and verifies it.
#[pyfunction]
#[pyo3(signature = (name, n, seed, form="spin", theta=None, theta_a=None, theta_b=None, gamma=None, phi=None, axis=FRAC_PI_4))]
#[allow(clippy::too_many_arguments)]
fn reduce<'py>(
    py: Python<'py>,
    name: &str,
    n: usize,
    seed: u64,
    form: &str,
    theta: Option<f64>,
    theta_a: Option<f64>,
    theta_b: Option<f64>,
    gamma: Option<f64>,
    phi: Option<f64>,
    axis: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let p = protocol(name, form, theta, theta_a, theta_b, gamma, phi, axis)?;
    let tr = p.run_trial(n, seed, 0, &RunOptions::default()).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("passed", tr.passed())?;
    d.set_item("surviving", tr.surviving.clone())?;
    d.set_item("consumed", tr.consumed)?;
    d.set_item("retries", tr.retries)?;
    d.set_item("walk_steps", tr.walk_steps)?;
    if let Some(v) = &tr.verdict {
        d.set_item("fidelity_original", v.fidelity_original)?;
        d.set_item("fidelity_target", v.fidelity_target)?;
    }
    d.set_item("trace", tr.to_text())?;
    Ok(d)
}

/// Cost statistics as CSV text.
#[pyfunction]
#[pyo3(signature = (name, ns, trials, seed, form="spin", theta=None, theta_a=None, theta_b=None, gamma=None, phi=None, axis=FRAC_PI_4, verify=false))]
#[allow(clippy::too_many_arguments)]
fn cost(
    name: &str,
    ns: Vec<usize>,
    trials: usize,
    seed: u64,
    form: &str,
    theta: Option<f64>,
    theta_a: Option<f64>,
    theta_b: Option<f64>,
    gamma: Option<f64>,
    phi: Option<f64>,
    axis: f64,
    verify: bool,
) -> PyResult<String> {
    let p = protocol(name, form, theta, theta_a, theta_b, gamma, phi, axis)?;
    Ok(cost_stats(&p, &ns, trials, seed, verify).map_err(py_err)?.to_csv())
}

/// Synchronization walk statistics as CSV text.
#[pyfunction]
fn sync_simulate(diff: usize, trials: usize, cap: usize, seed: u64) -> PyResult<String> {
    Ok(syncwalk::sync_simulate(diff, trials, cap, seed).map_err(py_err)?.to_csv())
}

/// One sampled triCluster reduction on a `rows × cols` grid.
#[pyfunction]
fn tricluster<'py>(py: Python<'py>, rows: usize, cols: usize, seed: u64) -> PyResult<Bound<'py, PyDict>> {
    let l = Lattice::grid(rows, cols).map_err(py_err)?;
    let mut g = rng::trial(seed, "peps", 0);
    let run = peps::tricluster_reduce(&l, &mut Sampled(&mut g)).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("outcomes", run.outcomes)?;
    d.set_item("z_nodes", run.z_nodes)?;
    d.set_item("fidelity", run.fidelity)?;
    Ok(d)
}

#[pyfunction]
fn fnw_theta_hat(theta: f64) -> f64 {
    qreduce::protocols::fnw_theta_hat(theta)
}

#[pymodule]
fn qreduce_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(reduce, m)?)?;
    m.add_function(wrap_pyfunction!(cost, m)?)?;
    m.add_function(wrap_pyfunction!(sync_simulate, m)?)?;
    m.add_function(wrap_pyfunction!(tricluster, m)?)?;
    m.add_function(wrap_pyfunction!(fnw_theta_hat, m)?)?;
    Ok(())
}
