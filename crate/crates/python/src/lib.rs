//! Python bindings. The module is importable as `detforest`.

use detforest::canonical::forests_equal_canonical;
use detforest::config::{self, ConfigFile};
use detforest::io::{forest_from_json, forest_to_json, tree_to_dot, tree_to_json};
use detforest::{
    forest_divergence, gini as core_gini, trees_equal_canonical, Aggregation,
    AggregationChoice, ClassCounts, Dataset, Error, Forest, ForestConfig, Mtry, RngState,
};
use pyo3::exceptions::{PyIOError, PyIndexError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(io) => PyIOError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn parse_aggregation(s: &str) -> PyResult<Aggregation> {
    config::parse_aggregation(s)
        .ok_or_else(|| PyValueError::new_err(format!("unknown aggregation '{s}'")))
}

#[pyclass(name = "Dataset", module = "detforest", skip_from_py_object)]
#[derive(Clone)]
struct PyDataset {
    inner: Dataset,
}

#[pymethods]
impl PyDataset {
    #[new]
    #[pyo3(signature = (rows, labels, feature_names=None))]
    fn new(rows: Vec<Vec<f64>>, labels: Vec<usize>, feature_names: Option<Vec<String>>) -> PyResult<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != p) {
            return Err(PyValueError::new_err(format!("row {i} has {} values, expected {p}", rows[i].len())));
        }
        let names = feature_names.unwrap_or_else(|| (0..p).map(|j| format!("x{j}")).collect());
        let inner = Dataset::new(rows.concat(), labels, names).map_err(py_err)?;
        Ok(Self { inner })
    }

    /// Synthetic compositional data with labels planted on the first three features.
    #[staticmethod]
    #[pyo3(signature = (n_rows=4598, n_features=87, seed=0))]
    fn generate(n_rows: usize, n_features: usize, seed: u64) -> PyResult<Self> {
        let inner = detforest::generate_synthetic_formulas(n_rows, n_features, seed).map_err(py_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (path, label_column="label"))]
    fn load_csv(path: &str, label_column: &str) -> PyResult<Self> {
        Ok(Self { inner: Dataset::load_csv(path, label_column).map_err(py_err)? })
    }

    #[pyo3(signature = (path, label_column="label"))]
    fn save_csv(&self, path: &str, label_column: &str) -> PyResult<()> {
        self.inner.save_csv(path, label_column).map_err(py_err)
    }

    /// Seeded shuffle into `(train, test)` datasets.
    #[pyo3(signature = (train_fraction=0.8, seed=0))]
    fn split(&self, train_fraction: f64, seed: u64) -> PyResult<(Self, Self)> {
        let s = detforest::train_test_split(self.inner.n_rows(), train_fraction, seed).map_err(py_err)?;
        Ok((self.subset(s.train)?, self.subset(s.test)?))
    }

    fn subset(&self, rows: Vec<usize>) -> PyResult<Self> {
        if let Some(&r) = rows.iter().find(|&&r| r >= self.inner.n_rows()) {
            return Err(PyIndexError::new_err(format!("row {r} out of range")));
        }
        Ok(Self { inner: self.inner.subset(&rows) })
    }

    fn row(&self, i: usize) -> PyResult<Vec<f64>> {
        if i >= self.inner.n_rows() {
            return Err(PyIndexError::new_err(format!("row {i} out of range")));
        }
        Ok(self.inner.row(i).to_vec())
    }

    #[getter]
    fn n_rows(&self) -> usize {
        self.inner.n_rows()
    }

    #[getter]
    fn n_features(&self) -> usize {
        self.inner.n_features()
    }

    #[getter]
    fn n_classes(&self) -> usize {
        self.inner.n_classes()
    }

    #[getter]
    fn labels(&self) -> Vec<usize> {
        self.inner.labels().to_vec()
    }

    #[getter]
    fn feature_names(&self) -> Vec<String> {
        self.inner.feature_names().to_vec()
    }

    fn __len__(&self) -> usize {
        self.inner.n_rows()
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset(n_rows={}, n_features={}, n_classes={})",
            self.inner.n_rows(),
            self.inner.n_features(),
            self.inner.n_classes()
        )
    }
}

#[pyclass(name = "ForestConfig", module = "detforest", skip_from_py_object)]
#[derive(Clone)]
struct PyForestConfig {
    inner: ForestConfig,
}

#[pymethods]
impl PyForestConfig {
    /// Keyword overrides on top of the defaults. `mtry` is "all", "sqrt" or
    /// an int; enum-like options take the config-file spellings.
    #[new]
    #[pyo3(signature = (**kwargs))]
    fn new(kwargs: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        Self::with_overrides(ForestConfig::default(), kwargs)
    }

    #[staticmethod]
    #[pyo3(signature = (name, **kwargs))]
    fn preset(name: &str, kwargs: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        Self::with_overrides(config::preset_config(name).map_err(py_err)?, kwargs)
    }

    /// Parses `key = value` text on top of the defaults.
    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        let file = ConfigFile::parse(text).map_err(py_err)?;
        Ok(Self { inner: file.apply(&ForestConfig::default()).map_err(py_err)? })
    }

    fn to_text(&self) -> String {
        config::render_config(&self.inner)
    }

    #[getter]
    fn n_trees(&self) -> usize {
        self.inner.n_trees
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[getter]
    fn min_node_size(&self) -> usize {
        self.inner.min_node_size
    }

    #[getter]
    fn max_depth(&self) -> Option<usize> {
        self.inner.max_depth
    }

    #[getter]
    fn bootstrap(&self) -> bool {
        self.inner.bootstrap
    }

    #[getter]
    fn tie_break(&self) -> &'static str {
        config::tie_break_name(self.inner.tie_break)
    }

    #[getter]
    fn aggregation(&self) -> &'static str {
        config::aggregation_name(self.inner.aggregation)
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!("ForestConfig({:?})", self.inner)
    }
}

impl PyForestConfig {
    fn with_overrides(mut cfg: ForestConfig, kwargs: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        let Some(kwargs) = kwargs else {
            cfg.validate().map_err(py_err)?;
            return Ok(Self { inner: cfg });
        };
        for (k, v) in kwargs.iter() {
            let key: String = k.extract()?;
            match key.as_str() {
                "n_trees" => cfg.n_trees = v.extract()?,
                "min_node_size" => cfg.min_node_size = v.extract()?,
                "max_depth" => cfg.max_depth = v.extract()?,
                "bootstrap" => cfg.bootstrap = v.extract()?,
                "sample_fraction" => cfg.sample_fraction = v.extract()?,
                "seed" => cfg.seed = v.extract()?,
                "mtry" => {
                    cfg.mtry = if let Ok(n) = v.extract::<usize>() {
                        Mtry::Count(n)
                    } else {
                        match v.extract::<String>()?.as_str() {
                            "all" => Mtry::All,
                            "sqrt" => Mtry::Sqrt,
                            s => return Err(PyValueError::new_err(format!("unknown mtry '{s}'"))),
                        }
                    }
                }
                "node_size_semantics" => {
                    let s: String = v.extract()?;
                    cfg.node_size_semantics = config::parse_semantics(&s)
                        .ok_or_else(|| PyValueError::new_err(format!("unknown node_size_semantics '{s}'")))?;
                }
                "tie_break" => {
                    let s: String = v.extract()?;
                    cfg.tie_break = config::parse_tie_break(&s)
                        .ok_or_else(|| PyValueError::new_err(format!("unknown tie_break '{s}'")))?;
                }
                "aggregation" => cfg.aggregation = parse_aggregation(&v.extract::<String>()?)?,
                other => return Err(PyValueError::new_err(format!("unknown option '{other}'"))),
            }
        }
        cfg.validate().map_err(py_err)?;
        Ok(Self { inner: cfg })
    }
}

#[pyclass(name = "Forest", module = "detforest", skip_from_py_object)]
#[derive(Clone)]
struct PyForest {
    inner: Forest,
}

#[pymethods]
impl PyForest {
    /// Trains on `rows` of `data` (all rows by default).
    #[staticmethod]
    #[pyo3(signature = (data, config=None, rows=None, workers=1))]
    fn fit(
        py: Python<'_>,
        data: &PyDataset,
        config: Option<&PyForestConfig>,
        rows: Option<Vec<usize>>,
        workers: usize,
    ) -> PyResult<Self> {
        let cfg = config.map(|c| c.inner.clone()).unwrap_or_default();
        let rows = rows.unwrap_or_else(|| (0..data.inner.n_rows()).collect());
        let ds = &data.inner;
        let inner = py
            .detach(|| Forest::fit_with_workers(ds, &rows, &cfg, workers))
            .map_err(py_err)?;
        Ok(Self { inner })
    }

    /// Class id for one feature vector under the forest's own aggregation,
    /// or under `aggregation` when given.
    #[pyo3(signature = (x, aggregation=None))]
    fn predict(&self, x: Vec<f64>, aggregation: Option<&str>) -> PyResult<usize> {
        let mode = match aggregation {
            Some(a) => parse_aggregation(a)?,
            None => self.inner.config.aggregation,
        };
        self.inner.predict_with(&x, mode).map_err(py_err)
    }

    fn predict_proba(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.predict_proba(&x).map_err(py_err)
    }

    #[pyo3(signature = (data, aggregation=None))]
    fn predict_dataset(&self, data: &PyDataset, aggregation: Option<&str>) -> PyResult<Vec<usize>> {
        let mode = match aggregation {
            Some(a) => parse_aggregation(a)?,
            None => self.inner.config.aggregation,
        };
        self.inner.predict_dataset(&data.inner, mode).map_err(py_err)
    }

    fn accuracy(&self, data: &PyDataset) -> PyResult<f64> {
        self.inner.accuracy(&data.inner).map_err(py_err)
    }

    fn to_json(&self) -> PyResult<String> {
        forest_to_json(&self.inner).map_err(py_err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self { inner: forest_from_json(text).map_err(py_err)? })
    }

    #[pyo3(signature = (tree=0))]
    fn export_dot(&self, tree: usize) -> PyResult<String> {
        Ok(tree_to_dot(self.tree(tree)?))
    }

    #[pyo3(signature = (tree=0))]
    fn export_tree_json(&self, tree: usize) -> PyResult<String> {
        tree_to_json(self.tree(tree)?).map_err(py_err)
    }

    /// Equal up to which of several tied features each split used.
    fn canonically_equal(&self, other: &Self) -> bool {
        forests_equal_canonical(&self.inner, &other.inner)
    }

    /// Whether tree `i` of this forest and tree `j` of `other` are canonically equal.
    fn trees_canonically_equal(&self, i: usize, other: &Self, j: usize) -> PyResult<bool> {
        Ok(trees_equal_canonical(self.tree(i)?, other.tree(j)?))
    }

    #[getter]
    fn n_trees(&self) -> usize {
        self.inner.trees.len()
    }

    #[getter]
    fn n_features(&self) -> usize {
        self.inner.n_features
    }

    #[getter]
    fn n_classes(&self) -> usize {
        self.inner.n_classes
    }

    #[getter]
    fn config(&self) -> PyForestConfig {
        PyForestConfig { inner: self.inner.config.clone() }
    }

    fn tree_sizes(&self) -> Vec<usize> {
        self.inner.trees.iter().map(|t| t.n_nodes()).collect()
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!(
            "Forest(n_trees={}, n_features={}, n_classes={})",
            self.inner.trees.len(),
            self.inner.n_features,
            self.inner.n_classes
        )
    }
}

impl PyForest {
    fn tree(&self, i: usize) -> PyResult<&detforest::DecisionTree> {
        self.inner.trees.get(i).ok_or_else(|| {
            PyIndexError::new_err(format!("tree {i} out of range ({} trees)", self.inner.trees.len()))
        })
    }
}

/// SplitMix64 stream.
#[pyclass(name = "Rng", module = "detforest")]
struct PyRng {
    inner: RngState,
}

#[pymethods]
impl PyRng {
    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn bounded(&mut self, n: u64) -> PyResult<u64> {
        self.inner.bounded(n).map_err(py_err)
    }

    fn shuffle(&mut self, m: usize) -> PyResult<Vec<usize>> {
        self.inner.shuffle(m).map_err(py_err)
    }

    #[getter]
    fn state(&self) -> u64 {
        self.inner.0
    }
}

#[pyfunction]
fn derive_stream(seed: u64, stream_index: u64) -> PyRng {
    PyRng { inner: detforest::derive_stream(seed, stream_index) }
}

#[pyfunction]
fn gini(counts: Vec<usize>) -> f64 {
    core_gini(&ClassCounts(counts))
}

/// Pairwise divergent classifications as a dict with `labels`, `n_test`,
/// `matrix` and `pairs`.
#[pyfunction]
#[pyo3(signature = (forests, test, aggregation=None))]
fn divergence<'py>(
    py: Python<'py>,
    forests: Vec<(String, PyRef<'py, PyForest>)>,
    test: &PyDataset,
    aggregation: Option<&str>,
) -> PyResult<Bound<'py, PyDict>> {
    let mode = match aggregation {
        Some(a) => AggregationChoice::Override(parse_aggregation(a)?),
        None => AggregationChoice::PerForest,
    };
    let labelled: Vec<(String, &Forest)> = forests.iter().map(|(l, f)| (l.clone(), &f.inner)).collect();
    let r = forest_divergence(&labelled, &test.inner, mode).map_err(py_err)?;
    let out = PyDict::new(py);
    out.set_item("labels", &r.labels)?;
    out.set_item("n_test", r.n_test)?;
    out.set_item("matrix", &r.matrix)?;
    let pairs = r
        .pairs
        .iter()
        .map(|p| {
            let d = PyDict::new(py);
            d.set_item("a", &p.a)?;
            d.set_item("b", &p.b)?;
            d.set_item("n_divergent", p.n_divergent)?;
            d.set_item("divergent_rows", &p.divergent_rows)?;
            Ok(d)
        })
        .collect::<PyResult<Vec<_>>>()?;
    out.set_item("pairs", pairs)?;
    out.set_item("table", r.render_table())?;
    Ok(out)
}

/// `(hazard, message)` for every reproducibility hazard in config text.
#[pyfunction]
fn audit_config(text: &str) -> PyResult<Vec<(String, String)>> {
    let file = ConfigFile::parse(text).map_err(py_err)?;
    let warnings = config::audit(&file).map_err(py_err)?;
    Ok(warnings.into_iter().map(|w| (format!("{:?}", w.hazard), w.message)).collect())
}

#[pyfunction]
fn presets() -> Vec<(&'static str, &'static str)> {
    config::PRESETS.iter().map(|p| (p.name, p.description)).collect()
}

#[pymodule]
#[pyo3(name = "detforest")]
fn detforest_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDataset>()?;
    m.add_class::<PyForestConfig>()?;
    m.add_class::<PyForest>()?;
    m.add_class::<PyRng>()?;
    m.add_function(wrap_pyfunction!(derive_stream, m)?)?;
    m.add_function(wrap_pyfunction!(gini, m)?)?;
    m.add_function(wrap_pyfunction!(divergence, m)?)?;
    m.add_function(wrap_pyfunction!(audit_config, m)?)?;
    m.add_function(wrap_pyfunction!(presets, m)?)?;
    Ok(())
}
