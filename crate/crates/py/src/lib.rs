//! Python bindings: resonant-mode solver, emitter purities and the CLI entry.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use ::waveguide_bic::error::Error;
use ::waveguide_bic::fock;
use ::waveguide_bic::spectral::{required_omega0_for_bic, residuals};
use ::waveguide_bic::{make_rectangular_model, SpectralOptions};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Domain(_) | Error::Precondition(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Resonant mode of the rectangular guide at distance `d`.
#[pyfunction]
#[pyo3(signature = (d, n = 1, lambda_ = 0.1, k_c = 2.0, cutoff = 1.0))]
fn solve_bic<'py>(py: Python<'py>, d: f64, n: u32, lambda_: f64, k_c: f64, cutoff: f64) -> PyResult<Bound<'py, PyDict>> {
    let opts = SpectralOptions::default();
    let model = make_rectangular_model(cutoff, k_c, lambda_).map_err(to_py)?;
    let mode = required_omega0_for_bic(&model, d, n, &opts).map_err(to_py)?;
    let res = residuals(&mode, &opts).map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("E", mode.energy)?;
    out.set_item("omega0", mode.omega0)?;
    out.set_item("d", mode.distance)?;
    out.set_item("kbar", mode.kbar)?;
    out.set_item("n", mode.n)?;
    out.set_item("p_at", mode.p_at)?;
    out.set_item("phi_A", (mode.phi_a.re, mode.phi_a.im))?;
    out.set_item("phi_B", (mode.phi_b.re, mode.phi_b.im))?;
    out.set_item("residual_max", res.max())?;
    Ok(out)
}

/// Diagonal C_ℓ of the reduced emitter state of |N⟩.
#[pyfunction]
fn reduced_density_a(n: usize, p_at: f64) -> PyResult<Vec<f64>> {
    fock::reduced_density_a(n, p_at).map_err(to_py)
}

#[pyfunction]
fn purity_a(n: usize, p_at: f64) -> PyResult<f64> {
    fock::purity_a(n, p_at).map_err(to_py)
}

#[pyfunction]
fn purity_closed_form(n: usize) -> f64 {
    fock::purity_closed_form(n)
}

#[pyfunction]
fn thermal_purity(beta_e: f64, p_at: f64, n_max: usize) -> PyResult<f64> {
    fock::thermal_purity(beta_e, p_at, n_max).map(|t| t.purity).map_err(to_py)
}

/// Run `wgbic` with `args` (without the program name); returns the exit code.
#[pyfunction]
fn run_cli(args: Vec<String>) -> i32 {
    ::waveguide_bic::cli::run(std::iter::once("wgbic".to_string()).chain(args))
}

#[pymodule]
fn waveguide_bic(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(solve_bic, m)?)?;
    m.add_function(wrap_pyfunction!(reduced_density_a, m)?)?;
    m.add_function(wrap_pyfunction!(purity_a, m)?)?;
    m.add_function(wrap_pyfunction!(purity_closed_form, m)?)?;
    m.add_function(wrap_pyfunction!(thermal_purity, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    Ok(())
}
