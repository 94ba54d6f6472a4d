//! Python bindings: scenario runs, checkpoint inspection and the
//! slope-vector algebra.

use std::path::PathBuf;

use hymflow::checkpoint::Checkpoint;
use hymflow::config::ScenarioConfig;
use hymflow::functionals::{hym_of_type as type_floor, SlopeVector};
use hymflow::scenario::{run_scenario as run, Scenario};
use hymflow::{hn, props};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn py_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn slopes(v: Vec<f64>) -> PyResult<SlopeVector> {
    SlopeVector::new(v).map_err(py_err)
}

/// Runs a scenario file; returns the summary JSON and the trace CSV. When
/// `out_dir` is given the usual output files are written there as well.
#[pyfunction]
#[pyo3(signature = (config, out_dir=None))]
fn run_scenario(config: PathBuf, out_dir: Option<PathBuf>) -> PyResult<(String, String)> {
    let cfg = ScenarioConfig::load(&config).map_err(py_err)?;
    let sc = Scenario::build(&cfg).map_err(py_err)?;
    let rep = run(&sc).map_err(py_err)?;
    if let Some(dir) = out_dir {
        rep.write_outputs(&sc, &dir).map_err(py_err)?;
    }
    let summary = serde_json::to_string(&rep.summary()).map_err(py_err)?;
    Ok((summary, rep.trace_csv()))
}

/// `(t, steps, [(name, rows, cols)])` of a checkpoint file.
#[pyfunction]
fn inspect_checkpoint(path: PathBuf) -> PyResult<(f64, usize, Vec<(String, usize, usize)>)> {
    let cp = Checkpoint::load(&path).map_err(py_err)?;
    let fields = cp.fields.iter().map(|(n, f)| (n.clone(), f.rows(), f.cols())).collect();
    Ok((cp.t, cp.steps, fields))
}

/// HN partial order `mu ≤ lam` on nonincreasing slope vectors.
#[pyfunction]
fn leq(mu: Vec<f64>, lam: Vec<f64>) -> PyResult<bool> {
    hn::leq(&slopes(mu)?, &slopes(lam)?).map_err(py_err)
}

/// `2π Σ |μ_j + N|^α`, the critical value of a type.
#[pyfunction]
#[pyo3(signature = (mu, alpha=2.0, n_shift=0.0))]
fn hym_of_type(mu: Vec<f64>, alpha: f64, n_shift: f64) -> PyResult<f64> {
    type_floor(&slopes(mu)?, alpha, n_shift).map_err(py_err)
}

/// Runs the property batteries; returns whether all passed and the report.
#[pyfunction]
#[pyo3(signature = (seed=0, cases=1000))]
fn run_props(seed: u64, cases: usize) -> (bool, String) {
    let rep = props::run_property_suite(seed, cases);
    (rep.all_passed(), rep.to_string())
}

#[pymodule]
fn hymflow_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(inspect_checkpoint, m)?)?;
    m.add_function(wrap_pyfunction!(leq, m)?)?;
    m.add_function(wrap_pyfunction!(hym_of_type, m)?)?;
    m.add_function(wrap_pyfunction!(run_props, m)?)?;
    Ok(())
}
