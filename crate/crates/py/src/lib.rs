//! Python bindings: problems, policies, QNPs and parity automata, with the
//! planning, synthesis, verification and simulation entry points.

use std::collections::BTreeMap;
use std::sync::Arc;

use genplan_core::constraints::TrajectoryConstraint;
use genplan_core::dot::{policy_to_dot, problem_to_dot};
use genplan_core::io::{class_from_json, problem_from_json, problem_to_json};
use genplan_core::ltl::{eval_lasso, parse_ltl, Alphabet, Word};
use genplan_core::model::{
    check_solution_with_budget, simulate, Level, Mode, Policy, Pondp, Resolver, RunOptions, SimRun, TransitionSystem,
    DEFAULT_BUDGET,
};
use genplan_core::omega::{ltl_to_dpw, synthesize_with_budget, Dpw, SynthesisResult};
use genplan_core::projection::observation_projection;
use genplan_core::qnp::{close_qnp, parse_qnp, syntactic_projection, Qnp, QnpSystem};
use genplan_core::{catalog, fond};
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde_json::json;

create_exception!(genplan, GenplanError, PyValueError);

fn err(e: impl std::fmt::Display) -> PyErr {
    GenplanError::new_err(e.to_string())
}

fn to_py<'py>(py: Python<'py>, v: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (v.to_string(),))
}

fn level(name: &str) -> PyResult<Level> {
    match name {
        "state" => Ok(Level::State),
        "observation" => Ok(Level::Observation),
        other => Err(err(format!("unknown level `{other}`"))),
    }
}

/// A planning problem; fully observable when every state is its own
/// observation.
#[pyclass(name = "Problem", module = "genplan", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyProblem {
    inner: Pondp,
}

#[pymethods]
impl PyProblem {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        problem_from_json(text).map(|inner| PyProblem { inner }).map_err(err)
    }

    fn to_json(&self) -> String {
        problem_to_json(&self.inner)
    }

    fn to_dot(&self) -> String {
        problem_to_dot(&self.inner)
    }

    #[getter]
    fn states(&self) -> Vec<String> {
        self.inner.states().to_vec()
    }

    #[getter]
    fn observations(&self) -> Vec<String> {
        self.inner.observations().to_vec()
    }

    #[getter]
    fn actions(&self) -> Vec<String> {
        self.inner.actions().to_vec()
    }

    #[getter]
    fn init(&self) -> Vec<String> {
        self.inner
            .init()
            .iter()
            .map(|&s| self.inner.state_name(s).to_string())
            .collect()
    }

    #[getter]
    fn goal(&self) -> Vec<String> {
        self.inner
            .goal_states()
            .map(|s| self.inner.state_name(s).to_string())
            .collect()
    }

    fn is_fully_observable(&self) -> bool {
        self.inner.is_fully_observable()
    }

    /// Successor names of `action` in `state`.
    fn successors(&self, state: &str, action: &str) -> PyResult<Vec<String>> {
        self.inner
            .step_named(state, action)
            .map(|v| v.into_iter().map(String::from).collect())
            .map_err(err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Problem(states={}, observations={}, actions={})",
            self.inner.num_states(),
            self.inner.observations().len(),
            self.inner.actions().len()
        )
    }
}

/// A finite-memory policy.
#[pyclass(name = "Policy", module = "genplan", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyPolicy {
    inner: Policy,
}

#[pymethods]
impl PyPolicy {
    /// A memoryless policy from an observation-to-action mapping.
    #[staticmethod]
    fn memoryless(rules: BTreeMap<String, String>) -> Self {
        PyPolicy {
            inner: Policy::memoryless(rules),
        }
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        serde_json::from_str(text).map(|inner| PyPolicy { inner }).map_err(err)
    }

    fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.inner).expect("policies serialize")
    }

    fn to_dot(&self) -> String {
        policy_to_dot(&self.inner)
    }

    #[getter]
    fn memory_states(&self) -> Vec<String> {
        self.inner.memory_states().to_vec()
    }

    /// The action chosen after seeing `observations`, if defined.
    fn act(&self, observations: Vec<String>) -> Option<String> {
        self.inner.act(&observations).map(String::from)
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!(
            "Policy(memory_states={}, rules={})",
            self.inner.memory_states().len(),
            self.inner.outputs().count()
        )
    }
}

/// A qualitative numerical problem.
#[pyclass(name = "Qnp", module = "genplan", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyQnp {
    inner: Qnp,
}

#[pymethods]
impl PyQnp {
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        parse_qnp(text).map(|inner| PyQnp { inner }).map_err(err)
    }

    #[getter]
    fn variables(&self) -> Vec<String> {
        self.inner.variables.clone()
    }

    #[getter]
    fn actions(&self) -> Vec<String> {
        self.inner.actions.iter().map(|a| a.name.clone()).collect()
    }

    /// The QNP with commitment fluents and `set`/`unset` actions.
    fn close(&self) -> PyResult<Self> {
        close_qnp(&self.inner).map(|inner| PyQnp { inner }).map_err(err)
    }

    /// The boolean FOND abstraction.
    fn projection(&self) -> PyResult<PyProblem> {
        syntactic_projection(&self.inner)
            .map(|inner| PyProblem { inner })
            .map_err(err)
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!(
            "Qnp(variables={:?}, actions={})",
            self.inner.variables,
            self.inner.actions.len()
        )
    }
}

/// A deterministic parity automaton (max-parity, even accepts).
#[pyclass(name = "Dpw", module = "genplan", frozen, skip_from_py_object)]
pub struct PyDpw {
    inner: Dpw,
}

#[pymethods]
impl PyDpw {
    #[getter]
    fn num_states(&self) -> usize {
        self.inner.num_states()
    }

    #[getter]
    fn priorities(&self) -> Vec<u32> {
        self.inner.priorities()
    }

    /// Whether the automaton accepts `prefix (cycle)^ω`, given as letter names.
    fn accepts(&self, prefix: Vec<String>, cycle: Vec<String>) -> PyResult<bool> {
        let w = Word::parse(&self.inner.alphabet, &prefix, &cycle).map_err(err)?;
        self.inner.accepts(&w).map_err(err)
    }

    fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.inner.to_json()).expect("automata serialize")
    }

    fn to_dot(&self) -> String {
        self.inner.to_dot()
    }
}

fn constraint(p: &Pondp, texts: &[String], lvl: Level) -> PyResult<TrajectoryConstraint> {
    let parts = texts
        .iter()
        .map(|t| TrajectoryConstraint::from_text(p, t, lvl))
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
    Ok(TrajectoryConstraint::all(texts.join(" & "), parts))
}

/// Observation projection of a class given as JSON.
#[pyfunction]
fn project(class_json: &str) -> PyResult<PyProblem> {
    let class = class_from_json(class_json).map_err(err)?;
    let proj = observation_projection(&class).map_err(err)?;
    Ok(PyProblem { inner: proj.problem })
}

/// A strong-cyclic policy, or `None` when there is none.
#[pyfunction]
fn plan(problem: &PyProblem) -> PyResult<Option<PyPolicy>> {
    fond::strong_cyclic_plan(&problem.inner)
        .map(|r| r.map(|inner| PyPolicy { inner }))
        .map_err(err)
}

/// Synthesis under the conjunction of `constraints`. Returns the policy or
/// `None` when unrealizable.
#[pyfunction]
#[pyo3(signature = (problem, constraints = Vec::new(), level = "observation", budget = DEFAULT_BUDGET))]
fn synthesize(
    py: Python<'_>,
    problem: &PyProblem,
    constraints: Vec<String>,
    level: &str,
    budget: usize,
) -> PyResult<Option<PyPolicy>> {
    let lvl = self::level(level)?;
    let p = problem.inner.clone();
    let r = py.detach(move || {
        let c = constraint(&p, &constraints, lvl)?;
        synthesize_with_budget(&p, &c, budget).map_err(err)
    })?;
    Ok(match r {
        SynthesisResult::Realizable { policy, .. } => Some(PyPolicy { inner: policy }),
        SynthesisResult::Unrealizable(_) => None,
    })
}

/// Verdict of `policy` on `problem` as a dict with at least a `verdict` key.
#[pyfunction]
#[pyo3(signature = (problem, policy, mode = "fair", constraint = None, level = "observation"))]
fn verify<'py>(
    py: Python<'py>,
    problem: &PyProblem,
    policy: &PyPolicy,
    mode: &str,
    constraint: Option<String>,
    level: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let p = &problem.inner;
    let c;
    let m = match mode {
        "fair" => Mode::Fair,
        "strong" => Mode::Strong,
        "constraint" => {
            let text = constraint.ok_or_else(|| err("mode `constraint` needs a constraint"))?;
            c = self::constraint(p, &[text], self::level(level)?)?;
            Mode::Under(&c)
        }
        other => return Err(err(format!("unknown mode `{other}`"))),
    };
    let v = check_solution_with_budget(p, &policy.inner, m, DEFAULT_BUDGET).map_err(err)?;
    let mut out = serde_json::to_value(&v).expect("verdicts serialize");
    out["solution"] = json!(v.is_solution());
    out["summary"] = json!(v.to_string());
    to_py(py, &out)
}

fn trace<T: TransitionSystem>(sys: &T, run: SimRun<T::State>) -> serde_json::Value {
    let (outcome, steps, last) = match run {
        SimRun::Finite { steps, last } => {
            let o = if sys.is_goal(&last) { "goal" } else { "stuck" };
            (o, steps, Some(last))
        }
        SimRun::Truncated { steps, last } => ("truncated", steps, Some(last)),
        SimRun::Lasso { mut prefix, cycle } => {
            prefix.extend(cycle);
            ("lasso", prefix, None)
        }
    };
    let mut states: Vec<String> = steps.iter().map(|(s, _)| sys.label(s)).collect();
    states.extend(last.as_ref().map(|s| sys.label(s)));
    let actions: Vec<&str> = steps.iter().map(|(_, a)| a.as_str()).collect();
    json!({ "outcome": outcome, "steps": steps.len(), "states": states, "actions": actions })
}

/// Runs `policy` on the unbounded QNP from the given initial values, or
/// from values sampled with `seed` when `values` is `None`.
#[pyfunction]
#[pyo3(signature = (qnp, policy, values = None, seed = 0, max_steps = 100_000))]
fn simulate_qnp<'py>(
    py: Python<'py>,
    qnp: &PyQnp,
    policy: &PyPolicy,
    values: Option<BTreeMap<String, u64>>,
    seed: u64,
    max_steps: usize,
) -> PyResult<Bound<'py, PyAny>> {
    use rand_chacha::rand_core::SeedableRng;
    let sys = match values {
        Some(v) => QnpSystem::new(&qnp.inner, &v),
        None => QnpSystem::sample(&qnp.inner, &mut rand_chacha::ChaCha8Rng::seed_from_u64(seed)),
    }
    .map_err(err)?;
    let opts = RunOptions {
        max_steps,
        stop_at_goal: true,
        detect_lasso: true,
    };
    let run = simulate(&sys, &policy.inner, &mut Resolver::seeded(seed), opts).map_err(err)?;
    to_py(py, &trace(&sys, run))
}

/// Runs `policy` on a finite problem with seeded outcomes.
#[pyfunction]
#[pyo3(signature = (problem, policy, seed = 0, max_steps = 100_000))]
fn simulate_problem<'py>(
    py: Python<'py>,
    problem: &PyProblem,
    policy: &PyPolicy,
    seed: u64,
    max_steps: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let opts = RunOptions {
        max_steps,
        stop_at_goal: true,
        detect_lasso: true,
    };
    let run = simulate(&problem.inner, &policy.inner, &mut Resolver::seeded(seed), opts).map_err(err)?;
    to_py(py, &trace(&problem.inner, run))
}

#[pyfunction]
#[pyo3(signature = (formula, alphabet, budget = DEFAULT_BUDGET))]
fn ltl_to_parity(formula: &str, alphabet: Vec<String>, budget: usize) -> PyResult<PyDpw> {
    let sigma = Arc::new(Alphabet::plain(alphabet).map_err(err)?);
    let f = parse_ltl(formula, &sigma).map_err(err)?;
    ltl_to_dpw(&f, budget).map(|inner| PyDpw { inner }).map_err(err)
}

/// Truth of `formula` on the lasso `prefix (cycle)^ω`.
#[pyfunction]
fn eval_ltl(formula: &str, alphabet: Vec<String>, prefix: Vec<String>, cycle: Vec<String>) -> PyResult<bool> {
    let sigma = Arc::new(Alphabet::plain(alphabet).map_err(err)?);
    let f = parse_ltl(formula, &sigma).map_err(err)?;
    let w = Word::parse(&sigma, &prefix, &cycle).map_err(err)?;
    eval_lasso(&f, &w).map_err(err)
}

/// The two-state counter abstraction.
#[pyfunction]
fn counter_projection() -> PyProblem {
    PyProblem {
        inner: catalog::counter_projection(),
    }
}

/// A concrete counter from `x0` with values up to `bound`.
#[pyfunction]
fn counter_problem(x0: u64, bound: u64) -> PyResult<PyProblem> {
    if x0 > bound || bound == 0 {
        return Err(err("counter needs x0 <= bound and bound >= 1"));
    }
    Ok(PyProblem {
        inner: catalog::counter_problem(x0, bound),
    })
}

#[pymodule]
fn genplan(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("GenplanError", m.py().get_type::<GenplanError>())?;
    m.add_class::<PyProblem>()?;
    m.add_class::<PyPolicy>()?;
    m.add_class::<PyQnp>()?;
    m.add_class::<PyDpw>()?;
    m.add_function(wrap_pyfunction!(project, m)?)?;
    m.add_function(wrap_pyfunction!(plan, m)?)?;
    m.add_function(wrap_pyfunction!(synthesize, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_qnp, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_problem, m)?)?;
    m.add_function(wrap_pyfunction!(ltl_to_parity, m)?)?;
    m.add_function(wrap_pyfunction!(eval_ltl, m)?)?;
    m.add_function(wrap_pyfunction!(counter_projection, m)?)?;
    m.add_function(wrap_pyfunction!(counter_problem, m)?)?;
    Ok(())
}
