//! Python bindings for the grid linear-system solver.
//!
//! Exposes the instance type, the three solvers (staged amplification,
//! one-shot amplification, exact elimination), and the cost/bound analysis
//! helpers. Statistics come back as plain dicts so callers can feed them
//! straight into pandas or JSON.
//!
//! The default build links libpython (so `cargo test` can load the crate);
//! build with `--features extension-module` to produce a standalone module.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyBool, PyDict, PyList, PyString};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qlinsolve::{
    classical_solve, crossover as crossover_impl, dimred_solve, generate_instance,
    lemma1_check as lemma1_impl, lemma2_check as lemma2_impl, monte_carlo_success, naive_solve,
    quantum_cost as quantum_cost_impl, stage_iterations as stage_iterations_impl,
    success_lower_bound, ArithmeticMode, GridPoint, InstanceFile, SearchStats, StageMode,
    StagePolicy,
};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_mode(mode: &str) -> PyResult<ArithmeticMode> {
    match mode {
        "modular" => Ok(ArithmeticMode::ModularM),
        "exact" => Ok(ArithmeticMode::ExactInteger),
        other => Err(value_err(format!(
            "mode must be \"modular\" or \"exact\", got {other:?}"
        ))),
    }
}

fn parse_stage_mode(mode: &str) -> PyResult<StageMode> {
    match mode {
        "model" => Ok(StageMode::ModelCount),
        "oracle" => Ok(StageMode::OracleCount),
        "bbht" => Ok(StageMode::Bbht),
        other => Err(value_err(format!(
            "stage_mode must be \"model\", \"oracle\", or \"bbht\", got {other:?}"
        ))),
    }
}

fn json_to_py<'py>(py: Python<'py>, v: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    use serde_json::Value;
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => PyBool::new(py, *b).to_owned().into_any(),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                i.into_pyobject(py)?.into_any()
            } else if let Some(u) = n.as_u64() {
                u.into_pyobject(py)?.into_any()
            } else {
                n.as_f64()
                    .expect("JSON numbers are i64, u64, or f64")
                    .into_pyobject(py)?
                    .into_any()
            }
        }
        Value::String(s) => PyString::new(py, s).into_any(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.into_any()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (key, val) in map {
                dict.set_item(key, json_to_py(py, val)?)?;
            }
            dict.into_any()
        }
    })
}

fn stats_to_dict<'py>(py: Python<'py>, stats: &SearchStats) -> PyResult<Bound<'py, PyAny>> {
    let value = serde_json::to_value(stats).map_err(value_err)?;
    json_to_py(py, &value)
}

/// A square integer system A x + b = 0 solved over the grid {0..M-1}^n.
#[pyclass(name = "LinearSystem", module = "qlinsolve")]
struct PyLinearSystem {
    inner: qlinsolve::LinearSystem,
    planted: Option<Vec<u64>>,
    gen_seed: u64,
}

#[pymethods]
impl PyLinearSystem {
    #[new]
    #[pyo3(signature = (a, b, m, mode="modular"))]
    fn new(a: Vec<Vec<i64>>, b: Vec<i64>, m: u64, mode: &str) -> PyResult<Self> {
        let inner =
            qlinsolve::LinearSystem::new(a, b, m, parse_mode(mode)?).map_err(value_err)?;
        Ok(PyLinearSystem {
            inner,
            planted: None,
            gen_seed: 0,
        })
    }

    /// Generate an instance with a planted solution and invertible matrix.
    #[staticmethod]
    #[pyo3(signature = (n, m, mode="modular", seed=0))]
    fn generate(n: usize, m: u64, mode: &str, seed: u64) -> PyResult<Self> {
        let (inner, planted) =
            generate_instance(n, m, parse_mode(mode)?, seed).map_err(value_err)?;
        Ok(PyLinearSystem {
            inner,
            planted: Some(planted.coords().to_vec()),
            gen_seed: seed,
        })
    }

    /// Parse the JSON instance format written by the CLI.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let file = InstanceFile::from_json(text).map_err(value_err)?;
        let seed = file.seed;
        let (inner, planted) = file.into_system().map_err(value_err)?;
        Ok(PyLinearSystem {
            inner,
            planted: planted.map(|p| p.coords().to_vec()),
            gen_seed: seed,
        })
    }

    fn to_json(&self) -> String {
        let planted = self.planted.as_ref().map(|c| GridPoint::new(c.clone()));
        InstanceFile::from_system(&self.inner, self.gen_seed, planted.as_ref()).to_json()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn m(&self) -> u64 {
        self.inner.grid_modulus()
    }

    #[getter]
    fn mode(&self) -> &'static str {
        match self.inner.mode() {
            ArithmeticMode::ModularM => "modular",
            ArithmeticMode::ExactInteger => "exact",
        }
    }

    #[getter]
    fn a(&self) -> Vec<Vec<i64>> {
        self.inner.coefficients().to_vec()
    }

    #[getter]
    fn b(&self) -> Vec<i64> {
        self.inner.constants().to_vec()
    }

    /// The solution planted at generation time, if this instance has one.
    #[getter]
    fn planted_solution(&self) -> Option<Vec<u64>> {
        self.planted.clone()
    }

    /// Evaluate all n rows at a grid point.
    fn residual(&self, point: Vec<u64>) -> PyResult<Vec<i64>> {
        let p = GridPoint::new(point);
        Ok(self.inner.residual(&p).map_err(value_err)?.values().to_vec())
    }

    /// True when every row vanishes at the point.
    fn is_solution(&self, point: Vec<u64>) -> PyResult<bool> {
        let p = GridPoint::new(point);
        Ok(self.inner.residual(&p).map_err(value_err)?.is_zero())
    }

    /// Enumerate every grid point whose first k rows vanish (k=0: all rows).
    fn brute_force_solutions(&self, k: usize) -> PyResult<Vec<Vec<u64>>> {
        Ok(self
            .inner
            .brute_force_solutions(k)
            .map_err(value_err)?
            .into_iter()
            .map(|p| p.coords().to_vec())
            .collect())
    }

    fn __repr__(&self) -> String {
        format!(
            "LinearSystem(n={}, M={}, mode=\"{}\")",
            self.inner.n(),
            self.inner.grid_modulus(),
            self.mode()
        )
    }
}

/// Solve by staged row-by-row reduction; returns the run statistics as a dict.
#[pyfunction]
#[pyo3(signature = (system, seed=0, stage_mode="model", max_retries=3, bbht_growth=1.2))]
fn solve_dimred<'py>(
    py: Python<'py>,
    system: PyRef<'py, PyLinearSystem>,
    seed: u64,
    stage_mode: &str,
    max_retries: u32,
    bbht_growth: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let policy = StagePolicy {
        mode: parse_stage_mode(stage_mode)?,
        max_retries,
        bbht_growth,
    };
    policy.validate().map_err(value_err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let stats = dimred_solve(&system.inner, &policy, &mut rng).map_err(value_err)?;
    stats_to_dict(py, &stats)
}

/// Solve by one-shot amplification of the all-rows predicate.
#[pyfunction]
#[pyo3(signature = (system, seed=0))]
fn solve_naive<'py>(
    py: Python<'py>,
    system: PyRef<'py, PyLinearSystem>,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let stats = naive_solve(&system.inner, &mut rng).map_err(value_err)?;
    stats_to_dict(py, &stats)
}

/// Solve exactly by elimination; raises ValueError when no grid point works.
#[pyfunction]
fn solve_classical(system: PyRef<'_, PyLinearSystem>) -> PyResult<Vec<u64>> {
    Ok(classical_solve(&system.inner)
        .map_err(value_err)?
        .coords()
        .to_vec())
}

/// floor(pi/4 * sqrt(m)): amplification rounds for one target among m points.
#[pyfunction]
fn stage_iterations(m: u64) -> u64 {
    stage_iterations_impl(m)
}

/// Total step count 2n(s + n) for an n-dimensional staged solve.
#[pyfunction]
fn quantum_cost(n: u64, m: u64) -> u128 {
    quantum_cost_impl(n, m)
}

/// Elimination step count n^3.
#[pyfunction]
fn classical_cost(n: u64) -> u128 {
    qlinsolve::classical_cost(n)
}

/// Least dimension where the staged solve beats n^3 elimination.
#[pyfunction]
fn crossover(m: u64) -> u64 {
    crossover_impl(m)
}

/// Success floor (m - 2n)/(m - n) and the per-stage model (1 - 1/m)^n.
#[pyfunction]
fn success_bound<'py>(py: Python<'py>, n: u64, m: u64) -> PyResult<Bound<'py, PyAny>> {
    let bound = success_lower_bound(n, m).map_err(value_err)?;
    let value = serde_json::to_value(&bound).map_err(value_err)?;
    json_to_py(py, &value)
}

/// Check C(n, k) <= n^k with exact integers.
#[pyfunction]
fn lemma1_check(n: u64, k: u64) -> bool {
    lemma1_impl(n, k)
}

/// Check (1-p)^n > (1-2np)/(1-np); returns (lhs, rhs, holds).
#[pyfunction]
fn lemma2_check(p: f64, n: u64) -> PyResult<(f64, f64, bool)> {
    let outcome = lemma2_impl(p, n).map_err(value_err)?;
    Ok((outcome.lhs, outcome.rhs, outcome.holds))
}

/// Repeat the staged solve across seeded runs; returns rate statistics.
#[pyfunction]
#[pyo3(signature = (system, runs=100, seed=0, stage_mode="model", max_retries=0, bbht_growth=1.2))]
fn success_rate<'py>(
    py: Python<'py>,
    system: PyRef<'py, PyLinearSystem>,
    runs: u32,
    seed: u64,
    stage_mode: &str,
    max_retries: u32,
    bbht_growth: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let policy = StagePolicy {
        mode: parse_stage_mode(stage_mode)?,
        max_retries,
        bbht_growth,
    };
    policy.validate().map_err(value_err)?;
    let outcome = monte_carlo_success(&system.inner, &policy, runs, seed).map_err(value_err)?;
    let value = serde_json::to_value(&outcome).map_err(value_err)?;
    json_to_py(py, &value)
}

#[pymodule(name = "qlinsolve")]
fn qlinsolve_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyLinearSystem>()?;
    m.add_function(wrap_pyfunction!(solve_dimred, m)?)?;
    m.add_function(wrap_pyfunction!(solve_naive, m)?)?;
    m.add_function(wrap_pyfunction!(solve_classical, m)?)?;
    m.add_function(wrap_pyfunction!(stage_iterations, m)?)?;
    m.add_function(wrap_pyfunction!(quantum_cost, m)?)?;
    m.add_function(wrap_pyfunction!(classical_cost, m)?)?;
    m.add_function(wrap_pyfunction!(crossover, m)?)?;
    m.add_function(wrap_pyfunction!(success_bound, m)?)?;
    m.add_function(wrap_pyfunction!(lemma1_check, m)?)?;
    m.add_function(wrap_pyfunction!(lemma2_check, m)?)?;
    m.add_function(wrap_pyfunction!(success_rate, m)?)?;
    m.add("MAX_GRID_SIZE", qlinsolve::DESK_SCALE_GUARD)?;
    Ok(())
}
