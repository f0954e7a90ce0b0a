use std::collections::BTreeMap;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use apsl_core::apsl::{self as core_apsl, Algorithm, ApslConfig, Depth, LearnError};
use apsl_core::bnio::{self, GroundTruthBn, NeighborhoodSpec};
use apsl_core::eval;
use apsl_core::graph::{dag_to_cpdag, EdgeKind};
use apsl_core::{Dataset as CoreDataset, Pdag, TestConfig, VarId};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[derive(FromPyObject)]
enum DepthArg {
    Int(usize),
    Text(String),
}

impl DepthArg {
    fn resolve(self) -> PyResult<Depth> {
        match self {
            DepthArg::Int(k) => Depth::new(k).map_err(value_err),
            DepthArg::Text(s) => s.parse().map_err(value_err),
        }
    }
}

/// Categorical dataset with named columns.
#[pyclass(frozen, module = "apsl")]
pub struct Dataset {
    inner: CoreDataset,
}

#[pymethods]
impl Dataset {
    /// Builds a dataset from integer-coded columns.
    #[new]
    #[pyo3(signature = (names, columns, cardinalities=None))]
    fn new(names: Vec<String>, columns: Vec<Vec<u32>>, cardinalities: Option<Vec<usize>>) -> PyResult<Self> {
        let cards = cardinalities.unwrap_or_else(|| {
            columns.iter().map(|c| c.iter().max().map_or(1, |&m| m as usize + 1)).collect()
        });
        CoreDataset::from_columns(names, cards, columns).map(|inner| Dataset { inner }).map_err(value_err)
    }

    #[staticmethod]
    fn from_csv(text: &str) -> PyResult<Self> {
        CoreDataset::load_csv(text).map(|inner| Dataset { inner }).map_err(value_err)
    }

    #[staticmethod]
    fn read_csv(path: &str) -> PyResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| value_err(format!("{path}: {e}")))?;
        Self::from_csv(&text)
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }

    #[getter]
    fn n_rows(&self) -> usize {
        self.inner.n_rows()
    }

    #[getter]
    fn n_vars(&self) -> usize {
        self.inner.n_vars()
    }

    #[getter]
    fn names(&self) -> Vec<String> {
        self.inner.names().to_vec()
    }

    #[getter]
    fn cardinalities(&self) -> Vec<usize> {
        self.inner.cardinalities().to_vec()
    }

    fn column(&self, name: &str) -> PyResult<Vec<u32>> {
        let v = self.inner.var_by_name(name).ok_or_else(|| value_err(format!("unknown column {name:?}")))?;
        Ok(self.inner.column(v).to_vec())
    }

    fn __len__(&self) -> usize {
        self.inner.n_rows()
    }

    fn __repr__(&self) -> String {
        format!("Dataset(n_rows={}, n_vars={})", self.inner.n_rows(), self.inner.n_vars())
    }
}

/// Partially directed graph over named variables.
#[pyclass(frozen, module = "apsl")]
pub struct Graph {
    inner: Pdag,
    names: Vec<String>,
    ci_tests: BTreeMap<String, u64>,
}

impl Graph {
    fn new(inner: Pdag, names: Vec<String>) -> Self {
        Graph { inner, names, ci_tests: BTreeMap::new() }
    }

    fn var(&self, name: &str) -> PyResult<VarId> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(VarId)
            .ok_or_else(|| value_err(format!("unknown variable {name:?}")))
    }
}

#[pymethods]
impl Graph {
    /// Edges as `(a, b, directed)`; undirected edges list the lower index first.
    fn edges(&self) -> Vec<(String, String, bool)> {
        self.inner
            .edges()
            .into_iter()
            .map(|e| {
                (self.names[e.a.0].clone(), self.names[e.b.0].clone(), e.kind == EdgeKind::Directed)
            })
            .collect()
    }

    fn is_arc(&self, a: &str, b: &str) -> PyResult<bool> {
        Ok(self.inner.is_arc(self.var(a)?, self.var(b)?))
    }

    fn is_undirected(&self, a: &str, b: &str) -> PyResult<bool> {
        Ok(self.inner.is_undirected(self.var(a)?, self.var(b)?))
    }

    fn to_edge_list(&self) -> String {
        self.inner.to_edge_list(&self.names)
    }

    fn to_adjacency_csv(&self) -> String {
        self.inner.to_adjacency_csv(&self.names)
    }

    #[getter]
    fn n_edges(&self) -> usize {
        self.inner.n_edges()
    }

    #[getter]
    fn n_directed(&self) -> usize {
        self.inner.n_directed()
    }

    #[getter]
    fn n_undirected(&self) -> usize {
        self.inner.n_undirected()
    }

    #[getter]
    fn names(&self) -> Vec<String> {
        self.names.clone()
    }

    /// CI-test counts of the run that produced this graph (empty otherwise).
    #[getter]
    fn ci_tests(&self) -> BTreeMap<String, u64> {
        self.ci_tests.clone()
    }

    fn __eq__(&self, other: &Graph) -> bool {
        self.names == other.names && self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!(
            "Graph(n_vars={}, directed={}, undirected={})",
            self.names.len(),
            self.inner.n_directed(),
            self.inner.n_undirected()
        )
    }
}

/// Discrete Bayesian network parsed from BIF.
#[pyclass(frozen, module = "apsl")]
pub struct Network {
    inner: GroundTruthBn,
}

impl Network {
    fn var(&self, name: &str) -> PyResult<VarId> {
        self.inner.var_by_name(name).ok_or_else(|| value_err(format!("unknown variable {name:?}")))
    }
}

#[pymethods]
impl Network {
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        bnio::parse_bif(text).map(|inner| Network { inner }).map_err(value_err)
    }

    #[staticmethod]
    fn read(path: &str) -> PyResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| value_err(format!("{path}: {e}")))?;
        Self::parse(&text)
    }

    fn to_bif(&self) -> String {
        bnio::serialize_bif(&self.inner)
    }

    #[getter]
    fn names(&self) -> Vec<String> {
        self.inner.names().to_vec()
    }

    #[getter]
    fn n_vars(&self) -> usize {
        self.inner.n_vars()
    }

    fn parents(&self, name: &str) -> PyResult<Vec<String>> {
        let v = self.var(name)?;
        Ok(self.inner.parents(v).iter().map(|&p| self.inner.name(p).to_string()).collect())
    }

    fn pc_size(&self, name: &str) -> PyResult<usize> {
        Ok(self.inner.pc_size(self.var(name)?))
    }

    fn dag(&self) -> Graph {
        Graph::new(self.inner.dag().clone(), self.inner.names().to_vec())
    }

    fn cpdag(&self) -> PyResult<Graph> {
        let g = dag_to_cpdag(self.inner.dag()).map_err(value_err)?;
        Ok(Graph::new(g, self.inner.names().to_vec()))
    }

    /// Forward-samples `n` rows.
    #[pyo3(signature = (n, seed=0))]
    fn sample(&self, py: Python<'_>, n: usize, seed: u64) -> PyResult<Dataset> {
        if n == 0 {
            return Err(value_err("n must be at least 1"));
        }
        let inner = py.detach(|| bnio::forward_sample(&self.inner, n, seed));
        Ok(Dataset { inner })
    }

    /// True edges whose nearer endpoint lies within `depth - 1` steps of `target`.
    fn neighborhood(&self, target: &str, depth: DepthArg) -> PyResult<Vec<(String, String)>> {
        let spec = NeighborhoodSpec { target: self.var(target)?, depth: depth.resolve()? };
        let region = bnio::true_neighborhood(&self.inner, spec);
        Ok(region
            .edges
            .iter()
            .map(|e| (self.inner.name(e.a).to_string(), self.inner.name(e.b).to_string()))
            .collect())
    }

    /// The `k` variables with the largest parent-and-child sets.
    fn largest_pc(&self, k: usize) -> Vec<String> {
        bnio::top_pc_nodes(&self.inner, k).into_iter().map(|v| self.inner.name(v).to_string()).collect()
    }

    fn __repr__(&self) -> String {
        format!("Network(n_vars={}, n_edges={})", self.inner.n_vars(), self.inner.dag().n_edges())
    }
}

#[allow(clippy::too_many_arguments)]
fn learn_impl(
    py: Python<'_>,
    data: &Dataset,
    target: &str,
    depth: DepthArg,
    algorithm: Algorithm,
    alpha: f64,
    delta: f64,
    max_cond_size: Option<usize>,
    adjust_dof: bool,
    pc_symmetry: bool,
) -> PyResult<Graph> {
    let t = data.inner.var_by_name(target).ok_or_else(|| value_err(format!("unknown target {target:?}")))?;
    let cfg = ApslConfig {
        depth: depth.resolve()?,
        algorithm,
        test: TestConfig { alpha, max_cond_size, adjust_dof, ..TestConfig::default() },
        delta,
        pc_symmetry,
    };
    let outcome = py.detach(|| core_apsl::run(&data.inner, t, &cfg)).map_err(|e| match e {
        LearnError::Ci(_) => PyRuntimeError::new_err(e.to_string()),
        _ => value_err(e),
    })?;
    let mut g = Graph::new(outcome.run.graph, data.inner.names().to_vec());
    g.ci_tests = BTreeMap::from([
        ("total".to_string(), outcome.tests.total),
        ("conditional".to_string(), outcome.tests.conditional),
        ("pc_conditional".to_string(), outcome.tests.pc_conditional),
    ]);
    Ok(g)
}

/// Learns the structure around `target` with the HITON-MB backend.
#[pyfunction]
#[pyo3(signature = (data, target, depth=DepthArg::Text("max".into()), alpha=0.01, delta=0.05, max_cond_size=Some(3), adjust_dof=false, pc_symmetry=true))]
#[allow(clippy::too_many_arguments)]
fn apsl(
    py: Python<'_>,
    data: &Dataset,
    target: &str,
    depth: DepthArg,
    alpha: f64,
    delta: f64,
    max_cond_size: Option<usize>,
    adjust_dof: bool,
    pc_symmetry: bool,
) -> PyResult<Graph> {
    learn_impl(py, data, target, depth, Algorithm::Apsl, alpha, delta, max_cond_size, adjust_dof, pc_symmetry)
}

/// Learns the structure around `target` with the FCBF-based MB-FS backend.
#[pyfunction]
#[pyo3(signature = (data, target, depth=DepthArg::Text("max".into()), alpha=0.01, delta=0.05, max_cond_size=Some(3), adjust_dof=false, pc_symmetry=true))]
#[allow(clippy::too_many_arguments)]
fn apsl_fs(
    py: Python<'_>,
    data: &Dataset,
    target: &str,
    depth: DepthArg,
    alpha: f64,
    delta: f64,
    max_cond_size: Option<usize>,
    adjust_dof: bool,
    pc_symmetry: bool,
) -> PyResult<Graph> {
    learn_impl(py, data, target, depth, Algorithm::ApslFs, alpha, delta, max_cond_size, adjust_dof, pc_symmetry)
}

/// Scores `graph` on the true depth-`depth` region around `target`.
#[pyfunction]
fn ar_metrics<'py>(
    py: Python<'py>,
    graph: &Graph,
    network: &Network,
    target: &str,
    depth: DepthArg,
) -> PyResult<Bound<'py, PyDict>> {
    if graph.names != network.inner.names() {
        return Err(value_err("graph and network variables differ"));
    }
    let spec = NeighborhoodSpec { target: network.var(target)?, depth: depth.resolve()? };
    let region = bnio::true_neighborhood(&network.inner, spec);
    let m = eval::ar_metrics(&graph.inner, &network.inner, &region);
    let d = PyDict::new(py);
    d.set_item("ar_precision", m.ar_precision)?;
    d.set_item("ar_recall", m.ar_recall)?;
    d.set_item("ar_distance", m.ar_distance)?;
    d.set_item("n_true_edges", m.n_true_edges)?;
    d.set_item("n_predicted_edges", m.n_predicted_edges)?;
    d.set_item("n_correct_edges", m.n_correct_edges)?;
    Ok(d)
}

#[pyfunction]
fn ar_distance(precision: f64, recall: f64) -> f64 {
    eval::ar_distance(precision, recall)
}

#[pymodule]
#[pyo3(name = "apsl")]
fn apsl_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Dataset>()?;
    m.add_class::<Graph>()?;
    m.add_class::<Network>()?;
    m.add_function(wrap_pyfunction!(crate::apsl, m)?)?;
    m.add_function(wrap_pyfunction!(apsl_fs, m)?)?;
    m.add_function(wrap_pyfunction!(ar_metrics, m)?)?;
    m.add_function(wrap_pyfunction!(ar_distance, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
