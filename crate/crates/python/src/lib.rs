//! Python bindings for `occlp`.
//!
//! States are addressed by label on the Python side; results come back as
//! plain dicts of floats, lists and strings.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use occlp::model::{self, catalog, TableRow};
use occlp::tauberian::{self, BoundedSequence};
use occlp::{dp, lpform, FiniteControlSystem, OccupationalMeasure};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A finite deterministic control system.
#[pyclass(name = "ControlSystem", module = "occlp", frozen)]
struct PyControlSystem {
    inner: FiniteControlSystem,
}

impl PyControlSystem {
    fn state(&self, label: &str) -> PyResult<usize> {
        self.inner
            .state_index(label)
            .ok_or_else(|| PyValueError::new_err(format!("unknown state {label:?}")))
    }
}

#[pymethods]
impl PyControlSystem {
    /// Build from `(state, action, next_state, cost)` rows.
    #[new]
    fn new(rows: Vec<(String, String, String, f64)>) -> PyResult<Self> {
        let rows: Vec<TableRow> = rows
            .into_iter()
            .map(|(state, action, next_state, cost)| TableRow {
                state,
                action,
                next_state,
                cost,
            })
            .collect();
        let inner = model::build_from_table(&rows).map_err(value_err)?;
        Ok(Self { inner })
    }

    /// One of the builtin models: two_state, cycle3, lq1d.
    #[staticmethod]
    fn builtin(name: &str) -> PyResult<Self> {
        catalog::by_name(name)
            .map(|inner| Self { inner })
            .ok_or_else(|| PyValueError::new_err(format!("unknown builtin model {name:?}")))
    }

    /// Parse a `state,action,next_state,cost` CSV document.
    #[staticmethod]
    fn from_csv(text: &str) -> PyResult<Self> {
        let inner = occlp::cli::parse_table(text).map_err(value_err)?;
        Ok(Self { inner })
    }

    fn to_csv(&self) -> String {
        occlp::cli::export_table(&self.inner)
    }

    #[getter]
    fn states(&self) -> Vec<String> {
        self.inner.state_labels().to_vec()
    }

    #[getter]
    fn num_pairs(&self) -> usize {
        self.inner.num_pairs()
    }

    #[getter]
    fn cost_bound(&self) -> f64 {
        self.inner.cost_bound()
    }

    fn rows(&self) -> Vec<(String, String, String, f64)> {
        self.inner
            .to_rows()
            .into_iter()
            .map(|r| (r.state, r.action, r.next_state, r.cost))
            .collect()
    }

    fn __len__(&self) -> usize {
        self.inner.num_states()
    }

    fn __repr__(&self) -> String {
        format!(
            "ControlSystem(states={}, pairs={})",
            self.inner.num_states(),
            self.inner.num_pairs()
        )
    }
}

fn labelled<'py>(py: Python<'py>, sys: &FiniteControlSystem, values: &[f64]) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    for (y, v) in values.iter().enumerate() {
        d.set_item(sys.state_label(y), *v)?;
    }
    Ok(d)
}

fn policy_labels(sys: &FiniteControlSystem, policy: &dp::Policy) -> Vec<(String, String)> {
    policy
        .choice
        .iter()
        .enumerate()
        .map(|(y, &a)| (sys.state_label(y).to_owned(), sys.actions(y)[a].label.clone()))
        .collect()
}

fn measure_rows(sys: &FiniteControlSystem, m: &OccupationalMeasure) -> Vec<(String, String, f64)> {
    m.weights
        .iter()
        .enumerate()
        .map(|(p, &w)| {
            let (y, a) = sys.pair(p);
            (sys.state_label(y).to_owned(), sys.actions(y)[a].label.clone(), w)
        })
        .collect()
}

/// Discounted value function by value iteration.
#[pyfunction]
#[pyo3(signature = (system, alpha, tol=dp::DEFAULT_TOL, max_iter=dp::DEFAULT_MAX_ITER))]
fn value_iteration<'py>(
    py: Python<'py>,
    system: &PyControlSystem,
    alpha: f64,
    tol: f64,
    max_iter: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let sys = &system.inner;
    let vi = dp::value_iteration(sys, alpha, tol, max_iter).map_err(value_err)?;
    let d = PyDict::new(py);
    d.set_item("value", labelled(py, sys, &vi.value.values)?)?;
    d.set_item("policy", policy_labels(sys, &vi.policy))?;
    d.set_item("iterations", vi.iterations)?;
    d.set_item("residual", vi.residual)?;
    d.set_item("error_bound", vi.error_bound)?;
    Ok(d)
}

/// Optimal total cost over `steps` steps from each state.
#[pyfunction]
fn finite_horizon_value<'py>(py: Python<'py>, system: &PyControlSystem, steps: usize) -> PyResult<Bound<'py, PyDict>> {
    let fh = dp::finite_horizon_value(&system.inner, steps).map_err(value_err)?;
    labelled(py, &system.inner, &fh.value.values)
}

/// Discounted LP from `y0`, with its dual potential.
#[pyfunction]
fn solve_discounted<'py>(
    py: Python<'py>,
    system: &PyControlSystem,
    y0: &str,
    alpha: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let sys = &system.inner;
    let y = system.state(y0)?;
    let sol = lpform::solve_discounted(sys, y, alpha).map_err(value_err)?;
    let d = PyDict::new(py);
    d.set_item("value", sol.value)?;
    d.set_item("dual_value", sol.dual_value)?;
    d.set_item("measure", measure_rows(sys, &sol.measure))?;
    d.set_item("potential", labelled(py, sys, &sol.dual.psi.values)?)?;
    Ok(d)
}

/// Long-run average LP: optimal `g*`, normalization dual `mu`, stationary measure.
#[pyfunction]
fn solve_average<'py>(py: Python<'py>, system: &PyControlSystem) -> PyResult<Bound<'py, PyDict>> {
    let sys = &system.inner;
    let sol = lpform::solve_average(sys).map_err(value_err)?;
    let d = PyDict::new(py);
    d.set_item("value", sol.value)?;
    d.set_item("mu", sol.dual.mu)?;
    d.set_item("measure", measure_rows(sys, &sol.measure))?;
    d.set_item("potential", labelled(py, sys, &sol.dual.psi.values)?)?;
    Ok(d)
}

/// Value iteration, LP primal and LP dual side by side; `pass` if all gaps are within `tol`.
#[pyfunction]
#[pyo3(signature = (system, y0, alpha, tol=1e-8))]
fn verify_discounted<'py>(
    py: Python<'py>,
    system: &PyControlSystem,
    y0: &str,
    alpha: f64,
    tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let y = system.state(y0)?;
    let report = lpform::verify_theorem_4_1(&system.inner, y, alpha, tol).map_err(value_err)?;
    let d = PyDict::new(py);
    for r in &report.records {
        d.set_item(r.quantity.as_str(), r.value)?;
    }
    d.set_item("pass", report.passed())?;
    Ok(d)
}

fn sequence(preamble: Vec<f64>, cycle: Vec<f64>) -> PyResult<BoundedSequence> {
    BoundedSequence::eventually_periodic(preamble, cycle).map_err(value_err)
}

/// `(1-α) Σ α^t b_t` for the sequence `preamble, cycle, cycle, ...`.
#[pyfunction]
fn abel_mean(preamble: Vec<f64>, cycle: Vec<f64>, alpha: f64) -> PyResult<f64> {
    tauberian::abel_mean(&sequence(preamble, cycle)?, alpha).map_err(value_err)
}

/// Smallest horizon whose Cesàro average is within `eps + 2M/T` of the Abel mean.
#[pyfunction]
fn find_cesaro_horizon<'py>(
    py: Python<'py>,
    preamble: Vec<f64>,
    cycle: Vec<f64>,
    alpha: f64,
    eps: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let h = tauberian::find_cesaro_horizon(&sequence(preamble, cycle)?, alpha, eps).map_err(value_err)?;
    let d = PyDict::new(py);
    d.set_item("horizon", h.horizon)?;
    d.set_item("lower_bound", h.lower_bound)?;
    d.set_item("sigma", h.sigma)?;
    d.set_item("average", h.average)?;
    d.set_item("rhs", h.rhs)?;
    Ok(d)
}

/// Returns `(t_star, l, growth_bound)`.
#[pyfunction]
fn find_good_start(values: Vec<f64>, sigma: f64, eps: f64) -> PyResult<(usize, usize, f64)> {
    let g = tauberian::find_good_start(&values, sigma, eps).map_err(value_err)?;
    Ok((g.t_star, g.l, g.growth_bound))
}

/// `[(alpha, min_y (1-α)V_α(y), g*)]`.
#[pyfunction]
fn alpha_sweep(system: &PyControlSystem, alphas: Vec<f64>) -> PyResult<Vec<(f64, f64, f64)>> {
    let r = tauberian::alpha_sweep(&system.inner, &alphas).map_err(value_err)?;
    Ok(r.points.iter().map(|p| (p.parameter, p.value, p.reference)).collect())
}

/// `[(S, G_S, g*)]`.
#[pyfunction]
fn horizon_sweep(system: &PyControlSystem, horizons: Vec<usize>) -> PyResult<Vec<(usize, f64, f64)>> {
    let r = tauberian::horizon_sweep(&system.inner, &horizons).map_err(value_err)?;
    Ok(r.points.iter().map(|p| (p.parameter as usize, p.value, p.reference)).collect())
}

#[pymodule]
#[pyo3(name = "occlp")]
fn occlp_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyControlSystem>()?;
    m.add_function(wrap_pyfunction!(value_iteration, m)?)?;
    m.add_function(wrap_pyfunction!(finite_horizon_value, m)?)?;
    m.add_function(wrap_pyfunction!(solve_discounted, m)?)?;
    m.add_function(wrap_pyfunction!(solve_average, m)?)?;
    m.add_function(wrap_pyfunction!(verify_discounted, m)?)?;
    m.add_function(wrap_pyfunction!(abel_mean, m)?)?;
    m.add_function(wrap_pyfunction!(find_cesaro_horizon, m)?)?;
    m.add_function(wrap_pyfunction!(find_good_start, m)?)?;
    m.add_function(wrap_pyfunction!(alpha_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(horizon_sweep, m)?)?;
    Ok(())
}
