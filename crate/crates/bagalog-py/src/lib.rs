//! Python module `bagalog`: programs, bags and the main queries.

use std::collections::{BTreeMap, HashMap};

use bagalog::model::{Multiplicity, MultisetInstance, Program};
use bagalog::multiplicity::Engine;
use bagalog::trees::{self, TreeKey, TreeOptions};
use bagalog::{analysis, chase, cli, model, mra, parser, transform};
use num_bigint::BigUint;
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

create_exception!(bagalog, BagalogError, PyValueError);

fn fail(e: impl ToString) -> PyErr {
    BagalogError::new_err(e.to_string())
}

#[pyclass(name = "Program", module = "bagalog", frozen, from_py_object)]
#[derive(Clone)]
struct PyProgram {
    inner: Program,
}

#[pymethods]
impl PyProgram {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        Ok(PyProgram { inner: parser::parse_program(text).map_err(fail)? })
    }

    #[getter]
    fn rules(&self) -> Vec<String> {
        self.inner.rules().iter().map(|r| r.to_string()).collect()
    }

    fn lift(&self) -> PyResult<PyProgram> {
        Ok(PyProgram { inner: transform::lift_program(&self.inner).map_err(fail)? })
    }

    fn normalize(&self) -> PyProgram {
        PyProgram { inner: analysis::normalize(&self.inner) }
    }

    fn is_warded(&self) -> bool {
        analysis::is_warded(&self.inner).warded
    }

    fn affected_positions(&self) -> Vec<String> {
        analysis::affected_positions(&self.inner).iter().map(|p| p.to_string()).collect()
    }

    /// Predicate name to stratum.
    fn strata(&self) -> PyResult<BTreeMap<String, usize>> {
        let s = analysis::stratify(&self.inner).map_err(fail)?;
        Ok(s.into_iter().map(|(p, k)| (p.to_string(), k)).collect())
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Program({} rules)", self.inner.rules().len())
    }
}

#[pyclass(name = "Bag", module = "bagalog", frozen, from_py_object)]
#[derive(Clone)]
struct PyBag {
    inner: MultisetInstance,
}

#[pymethods]
impl PyBag {
    #[new]
    #[pyo3(signature = (text = ""))]
    fn new(text: &str) -> PyResult<Self> {
        Ok(PyBag { inner: parser::parse_edb(text).map_err(fail)? })
    }

    fn mult(&self, atom: &str) -> PyResult<u64> {
        Ok(self.inner.mult(&parser::parse_atom(atom).map_err(fail)?))
    }

    fn items(&self) -> Vec<(String, u64)> {
        self.inner.iter().map(|(a, n)| (a.to_string(), n)).collect()
    }

    fn total(&self) -> u64 {
        self.inner.total()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Bag({} atoms, {} copies)", self.inner.len(), self.inner.total())
    }
}

/// Number of proof trees of a ground atom; `None` when infinite.
#[pyfunction]
#[pyo3(signature = (program, facts, atom, normalize = true))]
fn multiplicity(program: &PyProgram, facts: &PyBag, atom: &str, normalize: bool) -> PyResult<Option<BigUint>> {
    let opts = bagalog::multiplicity::EngineOptions { normalize, ..Default::default() };
    let e = Engine::with_options(&program.inner, &facts.inner, &opts).map_err(fail)?;
    let a = parser::parse_atom(atom).map_err(fail)?;
    match e.multiplicity(&a).map_err(fail)?.multiplicity {
        Multiplicity::Finite(n) => Ok(Some(n)),
        Multiplicity::Infinite => Ok(None),
    }
}

#[pyfunction]
fn is_finite(program: &PyProgram, facts: &PyBag, atom: &str) -> PyResult<bool> {
    let a = parser::parse_atom(atom).map_err(fail)?;
    bagalog::multiplicity::is_finite(&program.inner, &facts.inner, &a).map_err(fail)
}

/// Multiplicity of every derivable atom; infinite ones map to `None`.
#[pyfunction]
#[pyo3(signature = (program, facts, max_depth = chase::DEFAULT_MAX_DEPTH))]
fn bag_eval(program: &PyProgram, facts: &PyBag, max_depth: usize) -> PyResult<BTreeMap<String, Option<BigUint>>> {
    let (bag, infinite) = bagalog::multiplicity::bag(&program.inner, &facts.inner, max_depth).map_err(fail)?;
    let mut out: BTreeMap<String, Option<BigUint>> = bag.iter().map(|(a, n)| (a.to_string(), Some(BigUint::from(n)))).collect();
    out.extend(infinite.iter().map(|a| (a.to_string(), None)));
    Ok(out)
}

/// Atoms of the chase and whether it saturated. Untidded programs are
/// lifted first unless `lift` is false.
#[pyfunction]
#[pyo3(signature = (program, facts, max_depth = chase::DEFAULT_MAX_DEPTH, lift = true))]
fn run_chase(program: &PyProgram, facts: &PyBag, max_depth: usize, lift: bool) -> PyResult<(Vec<String>, bool)> {
    let (p, start): (Program, Vec<model::Atom>) = if lift && !program.inner.is_tidded() {
        let l = transform::lift_program(&program.inner).map_err(fail)?;
        let d = transform::lift_edb_for(&program.inner, &facts.inner).map_err(fail)?;
        (l, d.atoms().to_vec())
    } else {
        (program.inner.clone(), facts.inner.atoms().cloned().collect())
    };
    let r = chase::chase(&start, &p, max_depth).map_err(fail)?;
    Ok((r.atoms().iter().map(|a| a.to_string()).collect(), r.saturated))
}

/// Bag read off a lifted chase: tids counted per tuple.
#[pyfunction]
#[pyo3(signature = (program, facts, max_depth = chase::DEFAULT_MAX_DEPTH))]
fn pbbs(program: &PyProgram, facts: &PyBag, max_depth: usize) -> PyResult<(PyBag, bool)> {
    let r = chase::pbbs_bounded(&program.inner, &facts.inner, max_depth).map_err(fail)?;
    Ok((PyBag { inner: r.bag }, r.saturated))
}

/// Number of trees for a ground atom and whether enumeration finished.
#[pyfunction]
#[pyo3(signature = (program, facts, atom, reduced = false, max_depth = trees::DEFAULT_TREE_DEPTH, limit = trees::DEFAULT_TREE_LIMIT))]
fn count_trees(program: &PyProgram, facts: &PyBag, atom: &str, reduced: bool, max_depth: usize, limit: usize) -> PyResult<(usize, bool)> {
    let a = parser::parse_atom(atom).map_err(fail)?;
    let e = trees::enumerate_pts(&program.inner, &facts.inner, &a, &TreeOptions { max_depth, limit }).map_err(fail)?;
    let n = if reduced {
        let keys: std::collections::BTreeSet<TreeKey> = e.reduced().iter().map(trees::tree_key).collect();
        keys.len()
    } else {
        e.count()
    };
    Ok((n, e.complete))
}

fn env_of(env: HashMap<String, PyBag>) -> mra::Env {
    env.into_iter().map(|(k, v)| (model::sym(&k), v.inner)).collect()
}

#[pyfunction]
fn mra_eval(expr: &str, env: HashMap<String, PyBag>) -> PyResult<PyBag> {
    let e = parser::parse_mra(expr).map_err(fail)?;
    Ok(PyBag { inner: mra::eval(&e, &env_of(env)).map_err(fail)? })
}

/// Datalog program computing the expression into `ans`.
#[pyfunction]
fn mra_compile(expr: &str, env: HashMap<String, PyBag>) -> PyResult<PyProgram> {
    let e = parser::parse_mra(expr).map_err(fail)?;
    let schema = mra::schema_of(&env_of(env)).map_err(fail)?;
    Ok(PyProgram { inner: mra::compile(&e, &schema).map_err(fail)?.program })
}

/// Run the command-line tool in process: `(exit code, stdout, stderr)`.
#[pyfunction]
fn main(args: Vec<String>) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("bagalog".to_string()).chain(args);
    let code = cli::run(argv, &mut out, &mut err);
    (code, String::from_utf8_lossy(&out).into_owned(), String::from_utf8_lossy(&err).into_owned())
}

#[pymodule]
#[pyo3(name = "bagalog")]
fn bagalog_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("BagalogError", m.py().get_type::<BagalogError>())?;
    m.add_class::<PyProgram>()?;
    m.add_class::<PyBag>()?;
    m.add_function(wrap_pyfunction!(multiplicity, m)?)?;
    m.add_function(wrap_pyfunction!(is_finite, m)?)?;
    m.add_function(wrap_pyfunction!(bag_eval, m)?)?;
    m.add_function(wrap_pyfunction!(run_chase, m)?)?;
    m.add_function(wrap_pyfunction!(pbbs, m)?)?;
    m.add_function(wrap_pyfunction!(count_trees, m)?)?;
    m.add_function(wrap_pyfunction!(mra_eval, m)?)?;
    m.add_function(wrap_pyfunction!(mra_compile, m)?)?;
    m.add_function(wrap_pyfunction!(main, m)?)?;
    Ok(())
}
