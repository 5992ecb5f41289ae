//! Python bindings. Agents and tasks are 0-based ids; matchings cross the
//! boundary as sorted lists of `(agent, task)` tuples.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use mvbm::gen::{generate_instance as gen_instance, GenConfig};
use mvbm::harness::{results_csv, run_experiment as run_grid, ExperimentConfig};
use mvbm::oracle::{
    audit_agent_truthfulness, audit_task_truthfulness, brute_force_mvbm, poa_pos_on_instance,
};
use mvbm::strategies::{Deviation, Setting};
use mvbm::{fixtures, Matching, MechanismKind, Profile};

fn py_err(e: mvbm::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse<T: std::str::FromStr<Err = mvbm::Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(py_err)
}

fn pairs(mu: &Matching) -> Vec<(usize, usize)> {
    mu.pairs().collect()
}

fn profile_or_truthful(inst: &mvbm::Instance, profile: Option<&str>) -> PyResult<Profile> {
    match profile {
        Some(json) => Profile::from_json(json).map_err(py_err),
        None => Ok(Profile::truthful_agents(inst)),
    }
}

/// A market: agent capacities, task values and the agent-task edges.
#[pyclass(name = "Instance", frozen, eq, skip_from_py_object)]
#[derive(Clone, PartialEq)]
struct PyInstance {
    inner: mvbm::Instance,
}

#[pymethods]
impl PyInstance {
    #[new]
    fn new(capacities: Vec<usize>, values: Vec<f64>, edges: Vec<(usize, usize)>) -> PyResult<Self> {
        let inner = mvbm::Instance::new(capacities, values, &edges).map_err(py_err)?;
        Ok(PyInstance { inner })
    }

    #[staticmethod]
    fn from_json(s: &str) -> PyResult<Self> {
        let inner = mvbm::Instance::from_json(s).map_err(py_err)?;
        Ok(PyInstance { inner })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn n_agents(&self) -> usize {
        self.inner.n_agents()
    }

    #[getter]
    fn n_tasks(&self) -> usize {
        self.inner.n_tasks()
    }

    #[getter]
    fn capacities(&self) -> Vec<usize> {
        self.inner.capacities().to_vec()
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.inner.values().to_vec()
    }

    fn edges(&self) -> Vec<(usize, usize)> {
        self.inner.edges().collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Instance(n_agents={}, n_tasks={}, n_edges={})",
            self.inner.n_agents(),
            self.inner.n_tasks(),
            self.inner.n_edges()
        )
    }
}

/// Runs a mechanism (`bfs`, `dfs`, `ap` or `rbfs`) on the truthful profile,
/// or on `profile` given as JSON.
#[pyfunction]
#[pyo3(signature = (instance, mech = "bfs", profile = None, seed = None))]
fn solve(
    instance: &PyInstance,
    mech: &str,
    profile: Option<&str>,
    seed: Option<u64>,
) -> PyResult<Vec<(usize, usize)>> {
    let kind: MechanismKind = parse(mech)?;
    let profile = profile_or_truthful(&instance.inner, profile)?;
    let mu = mvbm::run_mechanism(kind, &instance.inner, &profile, seed).map_err(py_err)?;
    Ok(pairs(&mu))
}

#[pyfunction]
fn matching_weight(instance: &PyInstance, matching: Vec<(usize, usize)>) -> PyResult<f64> {
    mvbm::matching_weight(&instance.inner, &Matching::from_pairs(matching)).map_err(py_err)
}

/// Optimum weight found by exhaustive enumeration (small instances only).
#[pyfunction]
fn brute_force_weight(instance: &PyInstance) -> PyResult<f64> {
    Ok(brute_force_mvbm(&instance.inner).map_err(py_err)?.weight)
}

/// Union of the first-come-first-served policies of all agents.
#[pyfunction]
fn fcfs_union(instance: &PyInstance) -> Vec<(usize, usize)> {
    pairs(&mvbm::fcfs_policies(&instance.inner).union())
}

/// Mean true utility of every agent over `trials` lottery draws.
#[pyfunction]
#[pyo3(signature = (instance, trials, seed, profile = None))]
fn randomized_bfs(
    instance: &PyInstance,
    trials: usize,
    seed: u64,
    profile: Option<&str>,
) -> PyResult<Vec<f64>> {
    let profile = profile_or_truthful(&instance.inner, profile)?;
    mvbm::run_randomized_bfs(&instance.inner, &profile, trials, seed).map_err(py_err)
}

/// Equilibrium ratios `(poa, pos)`; `pos` is `None` when only the worst
/// equilibrium is known.
#[pyfunction]
#[pyo3(signature = (instance, mech = "bfs"))]
fn poa_pos(instance: &PyInstance, mech: &str) -> PyResult<(f64, Option<f64>)> {
    let r = poa_pos_on_instance(&instance.inner, parse(mech)?).map_err(py_err)?;
    Ok((r.poa, r.pos))
}

fn deviation_dicts<'py>(py: Python<'py>, found: &[Deviation]) -> PyResult<Vec<Bound<'py, PyDict>>> {
    found
        .iter()
        .map(|d| {
            let out = PyDict::new(py);
            out.set_item("side", d.side.label())?;
            out.set_item("id", d.id)?;
            out.set_item("edges", d.report.edges.clone())?;
            out.set_item("capacity", d.report.capacity)?;
            out.set_item("value", d.report.value)?;
            out.set_item("truthful_utility", d.truthful_utility)?;
            out.set_item("deviant_utility", d.deviant_utility)?;
            Ok(out)
        })
        .collect()
}

/// Every profitable unilateral agent deviation from truthful reporting.
#[pyfunction]
#[pyo3(signature = (instance, mech = "bfs", setting = "ems"))]
fn audit_agents<'py>(
    py: Python<'py>,
    instance: &PyInstance,
    mech: &str,
    setting: &str,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let found = audit_agent_truthfulness(&instance.inner, parse(mech)?, parse::<Setting>(setting)?)
        .map_err(py_err)?;
    deviation_dicts(py, &found)
}

/// Every task report that gets an unmatched task matched.
#[pyfunction]
#[pyo3(signature = (instance, mech = "bfs", setting = "ems", grid = vec![1.0, 0.5, 0.25]))]
fn audit_tasks<'py>(
    py: Python<'py>,
    instance: &PyInstance,
    mech: &str,
    setting: &str,
    grid: Vec<f64>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let found = audit_task_truthfulness(
        &instance.inner,
        parse(mech)?,
        parse::<Setting>(setting)?,
        &grid,
    )
    .map_err(py_err)?;
    deviation_dicts(py, &found)
}

#[pyfunction]
#[pyo3(signature = (n, m, p, b_low, b_high, seed = 0, index = 0))]
fn generate_instance(
    n: usize,
    m: usize,
    p: f64,
    b_low: usize,
    b_high: usize,
    seed: u64,
    index: u64,
) -> PyResult<PyInstance> {
    let cfg = GenConfig::new(n, m, p, b_low, b_high, seed);
    let inner = gen_instance(&cfg, index).map_err(py_err)?;
    Ok(PyInstance { inner })
}

/// Runs an experiment described by a JSON config and returns its CSV.
#[pyfunction]
fn run_experiment(py: Python<'_>, config_json: &str) -> PyResult<String> {
    let cfg = ExperimentConfig::from_json(config_json).map_err(py_err)?;
    let table = py.detach(|| run_grid(&cfg)).map_err(py_err)?;
    Ok(results_csv(&table))
}

/// `(name, expected, actual)` for every worked example.
#[pyfunction]
fn replay_fixtures() -> Vec<(String, String, String)> {
    fixtures::replay_all()
        .into_iter()
        .map(|o| (o.name.to_string(), o.expected, o.actual))
        .collect()
}

#[pymodule]
fn mvbm_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInstance>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(matching_weight, m)?)?;
    m.add_function(wrap_pyfunction!(brute_force_weight, m)?)?;
    m.add_function(wrap_pyfunction!(fcfs_union, m)?)?;
    m.add_function(wrap_pyfunction!(randomized_bfs, m)?)?;
    m.add_function(wrap_pyfunction!(poa_pos, m)?)?;
    m.add_function(wrap_pyfunction!(audit_agents, m)?)?;
    m.add_function(wrap_pyfunction!(audit_tasks, m)?)?;
    m.add_function(wrap_pyfunction!(generate_instance, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(replay_fixtures, m)?)?;
    Ok(())
}
