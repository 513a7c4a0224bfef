//! Python bindings: systems, spanning values, pressure estimates and the config runner.

use nalgebra::{DMatrix, DVector};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use invpress_core::cover::{self, CoverInstance, CoverStatus};
use invpress_core::experiment::{self, Command, ExperimentConfig, RunOptions};
use invpress_core::pressure::{self, Budgets, SolverMethod};
use invpress_core::properties;
use invpress_core::system::{
    m3_fixture, ControlAlphabet, ControlSystem, FiniteStateControlSystem, IntervalBox,
    QuantizedSystem, WeightFunction, WeightKind,
};
use invpress_core::trajectory::VerificationMode;

fn err(e: invpress_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, |row| row.len());
    if r == 0 || c == 0 || rows.iter().any(|row| row.len() != c) {
        return Err(PyValueError::new_err(
            "matrix must be a non-empty list of equal-length rows",
        ));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

fn region(bounds: Vec<(f64, f64)>) -> PyResult<IntervalBox> {
    IntervalBox::from_intervals(&bounds).map_err(err)
}

fn budgets(
    method: &str,
    node_budget: u64,
    word_budget: usize,
    merge_tolerance: f64,
) -> PyResult<Budgets> {
    let mut b = Budgets::default();
    b.method = match method {
        "exact" => SolverMethod::Exact,
        "greedy" => SolverMethod::Greedy,
        "auto" => SolverMethod::Auto,
        other => return Err(PyValueError::new_err(format!("unknown method `{other}`"))),
    };
    b.node_budget = node_budget;
    b.enumeration.word_budget = word_budget;
    b.enumeration.merge_tolerance = merge_tolerance;
    Ok(b)
}

fn mode(name: &str, param: f64) -> PyResult<VerificationMode> {
    Ok(match name {
        "center" => VerificationMode::Center { delta: param },
        "box" => VerificationMode::Box { delta: param },
        "outer" => VerificationMode::Outer { epsilon: param },
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown verification mode `{other}`"
            )))
        }
    })
}

/// A table system or a gridded continuous-state system.
#[pyclass(
    name = "ControlSystem",
    module = "invpress",
    frozen,
    skip_from_py_object
)]
#[derive(Clone)]
struct PyControlSystem {
    inner: ControlSystem,
}

#[pymethods]
impl PyControlSystem {
    /// The two-state reference table.
    #[staticmethod]
    fn m3() -> Self {
        Self {
            inner: m3_fixture().into(),
        }
    }

    /// Table system; `None` entries leave the state space.
    #[staticmethod]
    #[pyo3(signature = (table, interior, labels=None))]
    fn table(
        table: Vec<Vec<Option<usize>>>,
        interior: Vec<bool>,
        labels: Option<Vec<String>>,
    ) -> PyResult<Self> {
        let sys = match labels {
            Some(l) => FiniteStateControlSystem::new(table, interior, l),
            None => FiniteStateControlSystem::with_default_labels(table, interior),
        }
        .map_err(err)?;
        Ok(Self { inner: sys.into() })
    }

    /// `x+ = A x + B u + c` on `region` with `cells` per axis.
    #[staticmethod]
    #[pyo3(signature = (a, b, alphabet, region_bounds, cells, margin=1e-3, c=None))]
    fn affine(
        a: Vec<Vec<f64>>,
        b: Vec<Vec<f64>>,
        alphabet: Vec<Vec<f64>>,
        region_bounds: Vec<(f64, f64)>,
        cells: Vec<usize>,
        margin: f64,
        c: Option<Vec<f64>>,
    ) -> PyResult<Self> {
        let a = matrix(a)?;
        let c = DVector::from_vec(c.unwrap_or_else(|| vec![0.0; a.nrows()]));
        let alphabet = ControlAlphabet::new(alphabet).map_err(err)?;
        let sys = QuantizedSystem::affine(
            a,
            matrix(b)?,
            c,
            alphabet,
            region(region_bounds)?,
            cells,
            margin,
        )
        .map_err(err)?;
        Ok(Self { inner: sys.into() })
    }

    /// Zero-order-hold samples of `x' = A x + B u` at interval `tau`.
    #[staticmethod]
    #[pyo3(signature = (a, b, tau, alphabet, region_bounds, cells, margin=1e-3))]
    fn linear_zoh(
        a: Vec<Vec<f64>>,
        b: Vec<Vec<f64>>,
        tau: f64,
        alphabet: Vec<Vec<f64>>,
        region_bounds: Vec<(f64, f64)>,
        cells: Vec<usize>,
        margin: f64,
    ) -> PyResult<Self> {
        let alphabet = ControlAlphabet::new(alphabet).map_err(err)?;
        let sys = QuantizedSystem::sample_linear_zoh(
            &matrix(a)?,
            &matrix(b)?,
            tau,
            alphabet,
            region(region_bounds)?,
            cells,
            margin,
        )
        .map_err(err)?;
        Ok(Self { inner: sys.into() })
    }

    #[getter]
    fn alphabet_len(&self) -> usize {
        self.inner.alphabet_len()
    }

    #[getter]
    fn universe_size(&self) -> usize {
        self.inner.universe_size()
    }

    #[getter]
    fn time_step(&self) -> f64 {
        self.inner.time_step()
    }

    #[getter]
    fn is_strongly_invariant(&self) -> bool {
        self.inner.is_strongly_invariant()
    }

    /// Weight table for `"abs"`, `"square"` or `"zero"` on this alphabet.
    fn weight(&self, kind: &str) -> PyResult<Vec<f64>> {
        let kind = match kind {
            "abs" => WeightKind::AbsoluteValue,
            "square" => WeightKind::Quadratic,
            "zero" => return Ok(vec![0.0; self.inner.alphabet_len()]),
            other => return Err(PyValueError::new_err(format!("unknown weight `{other}`"))),
        };
        match &self.inner {
            ControlSystem::Quantized(q) => Ok(WeightFunction::on_alphabet(kind, q.alphabet())
                .map_err(err)?
                .table()
                .to_vec()),
            ControlSystem::Finite(_) => Err(PyValueError::new_err(
                "table systems have symbolic controls",
            )),
        }
    }

    fn __repr__(&self) -> String {
        let kind = match &self.inner {
            ControlSystem::Finite(_) => "table",
            ControlSystem::Quantized(_) => "gridded",
        };
        format!(
            "ControlSystem(kind={kind}, states={}, controls={})",
            self.inner.universe_size(),
            self.inner.alphabet_len()
        )
    }
}

#[pyclass(name = "PressureEstimate", module = "invpress", frozen)]
struct PyPressureEstimate {
    inner: pressure::PressureEstimate,
}

#[pymethods]
impl PyPressureEstimate {
    #[getter]
    fn value(&self) -> f64 {
        self.inner.value
    }

    #[getter]
    fn fekete_inf(&self) -> f64 {
        self.inner.fekete_inf
    }

    #[getter]
    fn tail_slope(&self) -> f64 {
        self.inner.tail_slope
    }

    #[getter]
    fn interval(&self) -> (f64, f64) {
        (self.inner.interval[0], self.inner.interval[1])
    }

    #[getter]
    fn all_exact(&self) -> bool {
        self.inner.all_exact
    }

    #[getter]
    fn warnings(&self) -> Vec<String> {
        self.inner.warnings.clone()
    }

    /// `(n, a_lower, a_upper, exact)` per row.
    #[getter]
    fn per_n(&self) -> Vec<(usize, f64, f64, bool)> {
        self.inner
            .per_n
            .iter()
            .map(|r| (r.n, r.a.lower, r.a.upper, r.exact))
            .collect()
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(err)
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }

    fn __repr__(&self) -> String {
        format!(
            "PressureEstimate(value={}, tail_slope={}, all_exact={})",
            self.inner.value, self.inner.tail_slope, self.inner.all_exact
        )
    }
}

#[pyclass(name = "CoverSolution", module = "invpress", frozen, get_all)]
struct PyCoverSolution {
    status: String,
    chosen: Vec<usize>,
    log_value: f64,
    log_lower_bound: f64,
    nodes: u64,
}

fn weights(sys: &ControlSystem, table: Vec<f64>) -> PyResult<WeightFunction> {
    let w = WeightFunction::tabulated(table).map_err(err)?;
    w.check_len(sys.alphabet_len()).map_err(err)?;
    Ok(w)
}

/// `equispaced(count, lo, hi)` as a scalar alphabet list.
#[pyfunction]
fn equispaced(count: usize, lo: f64, hi: f64) -> PyResult<Vec<Vec<f64>>> {
    Ok(ControlAlphabet::equispaced(count, lo, hi)
        .map_err(err)?
        .values()
        .to_vec())
}

/// `(lower, upper, exact)` enclosure of `a_n`.
#[pyfunction]
#[pyo3(signature = (system, weight, n, mode_name="center", param=1e-3, method="exact", node_budget=10_000_000, word_budget=1_000_000, merge_tolerance=0.0))]
#[allow(clippy::too_many_arguments)]
fn a_n(
    py: Python<'_>,
    system: &PyControlSystem,
    weight: Vec<f64>,
    n: usize,
    mode_name: &str,
    param: f64,
    method: &str,
    node_budget: u64,
    word_budget: usize,
    merge_tolerance: f64,
) -> PyResult<(f64, f64, bool)> {
    let f = weights(&system.inner, weight)?;
    let m = mode(mode_name, param)?;
    let b = budgets(method, node_budget, word_budget, merge_tolerance)?;
    let sys = &system.inner;
    let v = py
        .detach(|| pressure::a_n(sys, &f, n, &m, &b))
        .map_err(err)?;
    Ok((v.lower, v.upper, v.exact))
}

/// `(lower, upper, exact)` for the minimal spanning cardinality; `upper` is `None` when infeasible.
#[pyfunction]
#[pyo3(signature = (system, n, delta=1e-3))]
fn spanning_count(
    py: Python<'_>,
    system: &PyControlSystem,
    n: usize,
    delta: f64,
) -> PyResult<(u64, Option<u64>, bool)> {
    let sys = &system.inner;
    let c = py
        .detach(|| {
            pressure::spanning_count(
                sys,
                n,
                &VerificationMode::Center { delta },
                &Budgets::default(),
            )
        })
        .map_err(err)?;
    Ok((c.lower, c.upper, c.exact))
}

#[pyfunction]
#[pyo3(signature = (system, weight, n_min, n_max, delta=1e-3, method="exact", node_budget=10_000_000, word_budget=1_000_000))]
#[allow(clippy::too_many_arguments)]
fn pressure_inner(
    py: Python<'_>,
    system: &PyControlSystem,
    weight: Vec<f64>,
    n_min: usize,
    n_max: usize,
    delta: f64,
    method: &str,
    node_budget: u64,
    word_budget: usize,
) -> PyResult<PyPressureEstimate> {
    let f = weights(&system.inner, weight)?;
    let b = budgets(method, node_budget, word_budget, 0.0)?;
    let sys = &system.inner;
    let inner = py
        .detach(|| {
            pressure::pressure_inner(
                sys,
                &f,
                n_min,
                n_max,
                &VerificationMode::Center { delta },
                &b,
            )
        })
        .map_err(err)?;
    Ok(PyPressureEstimate { inner })
}

/// Outer pressure along `epsilons` (strictly decreasing; default ladder when omitted).
#[pyfunction]
#[pyo3(signature = (system, weight, n_min, n_max, epsilons=None, merge_tolerance=0.0, word_budget=1_000_000))]
#[allow(clippy::too_many_arguments)]
fn pressure_outer(
    py: Python<'_>,
    system: &PyControlSystem,
    weight: Vec<f64>,
    n_min: usize,
    n_max: usize,
    epsilons: Option<Vec<f64>>,
    merge_tolerance: f64,
    word_budget: usize,
) -> PyResult<PyPressureEstimate> {
    let f = weights(&system.inner, weight)?;
    let b = budgets("exact", 10_000_000, word_budget, merge_tolerance)?;
    let sys = &system.inner;
    let ladder = epsilons.unwrap_or_else(|| pressure::default_epsilon_ladder(sys));
    let inner = py
        .detach(|| pressure::pressure_outer(sys, &f, n_min, n_max, &ladder, &b))
        .map_err(err)?;
    Ok(PyPressureEstimate { inner })
}

/// Feedback pressure from covers built out of optimal spanning families, `τ <= tau_max`.
#[pyfunction]
#[pyo3(signature = (system, weight, tau_max, n_max, delta=1e-3))]
fn pressure_feedback(
    py: Python<'_>,
    system: &PyControlSystem,
    weight: Vec<f64>,
    tau_max: usize,
    n_max: usize,
    delta: f64,
) -> PyResult<PyPressureEstimate> {
    let f = weights(&system.inner, weight)?;
    let b = Budgets::default();
    let m = VerificationMode::Center { delta };
    let sys = &system.inner;
    let inner = py
        .detach(|| {
            let covers = pressure::feedback_cover_candidates(sys, &f, tau_max, &m, &b)?;
            pressure::pressure_feedback(sys, &f, &covers, n_max, &m, &b)
        })
        .map_err(err)?;
    Ok(PyPressureEstimate { inner })
}

/// `f(u0) + Σ max(0, Re μ)`; `weight` is `"zero"`, `"abs"`, `"square"` or a constant.
#[pyfunction]
fn linear_pressure_formula(
    a: Vec<Vec<f64>>,
    weight: &Bound<'_, PyAny>,
    u0: Vec<f64>,
) -> PyResult<f64> {
    let kind = if let Ok(c) = weight.extract::<f64>() {
        WeightKind::Constant(c)
    } else {
        match weight.extract::<String>()?.as_str() {
            "zero" => WeightKind::Constant(0.0),
            "abs" => WeightKind::AbsoluteValue,
            "square" => WeightKind::Quadratic,
            other => return Err(PyValueError::new_err(format!("unknown weight `{other}`"))),
        }
    };
    pressure::linear_pressure_formula(&matrix(a)?, kind, &u0).map_err(err)
}

/// Minimum-weight set cover over `universe` elements.
#[pyfunction]
#[pyo3(signature = (universe, sets, log_weights, node_budget=10_000_000))]
fn solve_cover(
    universe: usize,
    sets: Vec<Vec<usize>>,
    log_weights: Vec<f64>,
    node_budget: u64,
) -> PyResult<PyCoverSolution> {
    if sets.len() != log_weights.len() {
        return Err(PyValueError::new_err(
            "sets and log_weights differ in length",
        ));
    }
    let inst =
        CoverInstance::from_log_weights(universe, sets.into_iter().zip(log_weights).collect())
            .map_err(err)?;
    let sol = cover::solve_exact(&inst, node_budget);
    let status = match sol.status {
        CoverStatus::Optimal => "optimal",
        CoverStatus::FeasibleUpperBound => "feasible_upper_bound",
        CoverStatus::Infeasible => "infeasible",
    };
    Ok(PyCoverSolution {
        status: status.into(),
        chosen: sol.chosen.clone(),
        log_value: sol.log_value,
        log_lower_bound: sol.log_lower_bound,
        nodes: sol.nodes,
    })
}

/// Runs a CLI command on a JSON config and returns the report text (nothing is written).
#[pyfunction]
fn run_experiment(py: Python<'_>, command: &str, config_json: &str) -> PyResult<String> {
    let cmd: Command = command.parse().map_err(err)?;
    let cfg = ExperimentConfig::from_json(config_json).map_err(err)?;
    let out = py
        .detach(|| experiment::execute(cmd, &cfg, &RunOptions::default()))
        .map_err(err)?;
    Ok(out.report_text())
}

/// Property battery on M3 plus `random_fixtures` random tables; returns the report as JSON.
#[pyfunction]
#[pyo3(signature = (random_fixtures=20, n_max=6, seed=2024))]
fn run_property_suite(
    py: Python<'_>,
    random_fixtures: usize,
    n_max: usize,
    seed: u64,
) -> PyResult<String> {
    let report = py
        .detach(|| {
            properties::run_property_suite(
                &properties::standard_fixtures(random_fixtures, seed),
                n_max,
                seed,
            )
        })
        .map_err(err)?;
    serde_json::to_string(&report).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pymodule]
pub fn invpress(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyControlSystem>()?;
    m.add_class::<PyPressureEstimate>()?;
    m.add_class::<PyCoverSolution>()?;
    m.add_function(wrap_pyfunction!(equispaced, m)?)?;
    m.add_function(wrap_pyfunction!(a_n, m)?)?;
    m.add_function(wrap_pyfunction!(spanning_count, m)?)?;
    m.add_function(wrap_pyfunction!(pressure_inner, m)?)?;
    m.add_function(wrap_pyfunction!(pressure_outer, m)?)?;
    m.add_function(wrap_pyfunction!(pressure_feedback, m)?)?;
    m.add_function(wrap_pyfunction!(linear_pressure_formula, m)?)?;
    m.add_function(wrap_pyfunction!(solve_cover, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(run_property_suite, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
