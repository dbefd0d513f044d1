//! Python bindings: problems, checks, generators and differential runs.

use std::collections::BTreeMap;

use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use disclose_core::check::{run_check, Algo, Classes};
use disclose_core::corpus::{random_problem as core_random_problem, run_diff as core_run_diff, Family};
use disclose_core::engine::ChaseBudget;
use disclose_core::hardgen::{
    chain_implication, gen_3coloring as core_gen_3coloring, gen_circuit_sat as core_gen_circuit_sat,
    gen_id_implication, Circuit, CircuitVariant, ColoringProblem,
};
use disclose_core::model;
use disclose_core::syntax::{parse, print};

create_exception!(disclose, DiscloseError, PyValueError);

fn err(e: impl std::fmt::Display) -> PyErr {
    DiscloseError::new_err(e.to_string())
}

#[pyclass(frozen)]
struct Problem {
    inner: model::Problem,
}

#[pymethods]
impl Problem {
    #[new]
    fn new(text: &str) -> PyResult<Problem> {
        parse(text).map(|inner| Problem { inner }).map_err(err)
    }

    #[getter]
    fn constraints(&self) -> Vec<String> {
        self.inner.constraints.iter().map(|d| d.to_string()).collect()
    }

    #[getter]
    fn mappings(&self) -> Vec<String> {
        self.inner.mappings.rules.iter().map(|r| r.to_string()).collect()
    }

    #[getter]
    fn policy(&self) -> String {
        self.inner.policy.to_string()
    }

    /// Constraint and mapping classes, legal algorithms, and the automatic
    /// choice.
    fn classes(&self) -> BTreeMap<&'static str, Vec<String>> {
        let c = Classes::of(&self.inner);
        BTreeMap::from([
            ("constraints", c.constraints.iter().map(|x| x.to_string()).collect()),
            ("mappings", c.mappings.iter().map(|x| x.to_string()).collect()),
            ("legal", c.legal_algos().iter().map(|x| x.to_string()).collect()),
            ("auto", vec![c.auto().to_string()]),
        ])
    }

    #[pyo3(signature = (algo = "auto", rounds = 8, max_facts = 100_000))]
    fn check(&self, py: Python<'_>, algo: &str, rounds: usize, max_facts: usize) -> PyResult<Report> {
        let algo: Algo = algo.parse().map_err(err)?;
        let p = &self.inner;
        let r = py.detach(|| run_check(p, algo, ChaseBudget::new(rounds, max_facts))).map_err(err)?;
        Ok(Report {
            verdict: r.verdict.to_string(),
            algorithm: r.algorithm.to_string(),
            witness: r.witness.clone(),
            rounds: r.rounds,
            facts: r.facts,
            unknown_reason: r.unknown_reason.clone(),
            notes: r.notes.clone(),
            elapsed_ms: r.elapsed_ms,
            json: r.to_json(),
        })
    }

    fn __str__(&self) -> String {
        print(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!(
            "Problem({} constraints, {} mappings, policy {})",
            self.inner.constraints.len(),
            self.inner.mappings.rules.len(),
            self.inner.policy
        )
    }
}

#[pyclass(frozen, get_all)]
struct Report {
    verdict: String,
    algorithm: String,
    witness: Option<BTreeMap<String, String>>,
    rounds: usize,
    facts: usize,
    unknown_reason: Option<String>,
    notes: Vec<String>,
    elapsed_ms: f64,
    json: String,
}

#[pymethods]
impl Report {
    fn to_json(&self) -> String {
        self.json.clone()
    }

    fn __repr__(&self) -> String {
        format!("Report(verdict={}, algorithm={})", self.verdict, self.algorithm)
    }
}

#[pyfunction]
#[pyo3(signature = (edges, vertices = None))]
fn gen_3coloring(edges: &str, vertices: Option<usize>) -> PyResult<Problem> {
    let g = ColoringProblem::parse(edges, vertices).map_err(err)?;
    Ok(Problem { inner: core_gen_3coloring(&g) })
}

/// The circuit problem and its companion instance, one fact per line.
#[pyfunction]
#[pyo3(signature = (spec, variant = "fr1"))]
fn gen_circuit_sat(spec: &str, variant: &str) -> PyResult<(Problem, Vec<String>)> {
    let variant = match variant {
        "atommap" => CircuitVariant::AtomMap,
        "fr1" => CircuitVariant::Fr1,
        v => return Err(err(format!("unknown variant `{v}`"))),
    };
    let c = Circuit::parse(spec).map_err(err)?;
    let s = core_gen_circuit_sat(&c, variant).map_err(err)?;
    Ok((Problem { inner: s.problem }, s.instance.sorted_facts().iter().map(|f| f.to_string()).collect()))
}

#[pyfunction]
fn gen_id_chain(n: usize) -> Problem {
    Problem { inner: gen_id_implication(&chain_implication(n)) }
}

#[pyfunction]
fn random_problem(family: &str, seed: u64) -> PyResult<Problem> {
    let f: Family = family.parse().map_err(err)?;
    Ok(Problem { inner: core_random_problem(f, seed) })
}

/// Settings, disagreement and unknown counts over a seed range.
#[pyfunction]
#[pyo3(signature = (family, start, end, algos = None))]
fn run_diff(py: Python<'_>, family: &str, start: u64, end: u64, algos: Option<Vec<String>>) -> PyResult<BTreeMap<&'static str, usize>> {
    let f: Family = family.parse().map_err(err)?;
    let algos: Option<Vec<Algo>> =
        algos.map(|a| a.iter().map(|x| x.parse::<Algo>()).collect::<Result<_, _>>()).transpose().map_err(err)?;
    let s = py.detach(|| core_run_diff(f, start..end, algos.as_deref(), ChaseBudget::default()));
    Ok(BTreeMap::from([
        ("total", s.total()),
        ("disagreements", s.disagreements().len()),
        ("unknown", s.unknown()),
    ]))
}

#[pymodule]
fn disclose(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("DiscloseError", m.py().get_type::<DiscloseError>())?;
    m.add_class::<Problem>()?;
    m.add_class::<Report>()?;
    m.add_function(wrap_pyfunction!(gen_3coloring, m)?)?;
    m.add_function(wrap_pyfunction!(gen_circuit_sat, m)?)?;
    m.add_function(wrap_pyfunction!(gen_id_chain, m)?)?;
    m.add_function(wrap_pyfunction!(random_problem, m)?)?;
    m.add_function(wrap_pyfunction!(run_diff, m)?)?;
    Ok(())
}
