//! Feature matrices, CSV I/O, train/test splitting and the synthetic
//! composition-data generator.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{invalid, Error, Result};
use crate::prng::{derive_stream, SPLIT_STREAM, SYNTHETIC_STREAM};

/// Absolute tolerance for "each row sums to 100".
pub const COMPOSITION_TOLERANCE: f64 = 1e-6;

/// A dense row-major feature matrix with integer class labels.
///
/// Immutable after construction. All features are finite and non-negative,
/// and `n_classes == 1 + max(labels)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    labels: Vec<usize>,
    feature_names: Vec<String>,
    n_rows: usize,
    n_features: usize,
    n_classes: usize,
}

impl Dataset {
    pub fn new(
        features: Vec<f64>,
        labels: Vec<usize>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        let n_features = feature_names.len();
        let n_rows = labels.len();
        if n_features == 0 {
            return Err(invalid("dataset needs at least one feature column"));
        }
        if n_rows == 0 {
            return Err(invalid("dataset needs at least one row"));
        }
        if features.len() != n_rows * n_features {
            return Err(invalid(format!(
                "feature matrix has {} values, expected {n_rows} x {n_features}",
                features.len()
            )));
        }
        if let Some(pos) = features.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(invalid(format!(
                "feature value {} at row {}, column {} is not a finite non-negative number",
                features[pos],
                pos / n_features,
                pos % n_features
            )));
        }
        let n_classes = labels.iter().max().map_or(0, |m| m + 1);
        Ok(Self {
            features,
            labels,
            feature_names,
            n_rows,
            n_features,
            n_classes,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, row: usize) -> usize {
        self.labels[row]
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    #[inline]
    pub fn value(&self, row: usize, feature: usize) -> f64 {
        self.features[row * self.n_features + feature]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.features[row * self.n_features..(row + 1) * self.n_features]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.features.chunks_exact(self.n_features)
    }

    /// Fails unless every row sums to 100 within [`COMPOSITION_TOLERANCE`].
    pub fn check_composition(&self) -> Result<()> {
        for (i, row) in self.rows().enumerate() {
            let sum: f64 = row.iter().sum();
            if (sum - 100.0).abs() > COMPOSITION_TOLERANCE {
                return Err(invalid(format!("row {i} sums to {sum}, expected 100")));
            }
        }
        Ok(())
    }

    /// New dataset holding the given rows, in order.
    ///
    /// The class count is kept from `self` so subsets stay label-compatible.
    pub fn subset(&self, rows: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(rows.len() * self.n_features);
        for &r in rows {
            features.extend_from_slice(self.row(r));
        }
        Dataset {
            features,
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            feature_names: self.feature_names.clone(),
            n_rows: rows.len(),
            n_features: self.n_features,
            n_classes: self.n_classes,
        }
    }

    pub fn load_csv(path: impl AsRef<Path>, label_column: &str) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::Parse {
            path: path.to_owned(),
            message: e.to_string(),
        })?;
        Self::read_csv(file, label_column).map_err(|e| match e {
            Error::InvalidArgument(message) => Error::Parse {
                path: path.to_owned(),
                message,
            },
            other => other,
        })
    }

    /// Parses CSV with a header row. Feature columns keep their file order.
    ///
    /// Labels that are all non-negative integers are used as class ids
    /// directly; anything else is mapped to ids by order of first appearance.
    pub fn read_csv<R: Read>(reader: R, label_column: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| invalid(format!("cannot read header row: {e}")))?
            .clone();
        let label_idx = headers
            .iter()
            .position(|h| h == label_column)
            .ok_or_else(|| invalid(format!("label column '{label_column}' not found")))?;
        let feature_names: Vec<String> = headers
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != label_idx)
            .map(|(_, h)| h.to_owned())
            .collect();

        let mut features = Vec::new();
        let mut raw_labels = Vec::new();
        for (row, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| invalid(format!("row {row}: {e}")))?;
            // row numbers in messages are 0-based data rows (header excluded)
            for (col, cell) in record.iter().enumerate() {
                if col == label_idx {
                    raw_labels.push(cell.to_owned());
                    continue;
                }
                let v: f64 = cell.parse().map_err(|_| {
                    invalid(format!(
                        "row {row}, column '{}': '{cell}' is not numeric",
                        headers.get(col).unwrap_or("?")
                    ))
                })?;
                if !v.is_finite() || v < 0.0 {
                    return Err(invalid(format!(
                        "row {row}, column '{}': value {cell} must be finite and non-negative",
                        headers.get(col).unwrap_or("?")
                    )));
                }
                features.push(v);
            }
        }
        Dataset::new(features, map_labels(&raw_labels), feature_names)
    }

    pub fn write_csv<W: Write>(&self, writer: W, label_column: &str) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = self.feature_names.iter().map(String::as_str).collect();
        header.push(label_column);
        w.write_record(&header).map_err(csv_io)?;
        let mut record = Vec::with_capacity(self.n_features + 1);
        for (row, x) in self.rows().enumerate() {
            record.clear();
            // `{}` on f64 prints the shortest string that parses back exactly
            record.extend(x.iter().map(|v| v.to_string()));
            record.push(self.labels[row].to_string());
            w.write_record(&record).map_err(csv_io)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>, label_column: &str) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file), label_column)
    }
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn map_labels(raw: &[String]) -> Vec<usize> {
    let numeric: Option<Vec<usize>> = raw.iter().map(|s| s.parse().ok()).collect();
    if let Some(ids) = numeric {
        return ids;
    }
    let mut seen: HashMap<&str, usize> = HashMap::new();
    raw.iter()
        .map(|s| {
            let next = seen.len();
            *seen.entry(s.as_str()).or_insert(next)
        })
        .collect()
}

/// Row indices of a train/test partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Shuffles `[0, n_rows)` on the reserved split stream and cuts it at
/// `floor(train_fraction * n_rows)`.
pub fn train_test_split(n_rows: usize, train_fraction: f64, seed: u64) -> Result<SplitIndices> {
    if n_rows < 2 {
        return Err(invalid("train/test split needs at least 2 rows"));
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(invalid(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let n_train = (train_fraction * n_rows as f64).floor() as usize;
    if n_train == 0 || n_train >= n_rows {
        return Err(invalid(format!(
            "train fraction {train_fraction} leaves an empty train or test set for {n_rows} rows"
        )));
    }
    let mut perm = derive_stream(seed, SPLIT_STREAM).shuffle(n_rows)?;
    let test = perm.split_off(n_train);
    Ok(SplitIndices { train: perm, test })
}

/// Synthetic formula data: rows of exponential draws normalised to sum to
/// 100, labelled by a planted linear score `2*x0 + x1 - x2`.
///
/// Thresholds are the nearest-rank 60th and 85th percentiles of the score
/// over the generated rows, so classes come out close to 60/25/15.
pub fn generate_synthetic_formulas(n_rows: usize, n_features: usize, seed: u64) -> Result<Dataset> {
    if n_rows == 0 {
        return Err(invalid("synthetic data needs n >= 1"));
    }
    if n_features < 4 {
        return Err(invalid(format!(
            "synthetic data needs p >= 4 (planted rule uses 3 features), got {n_features}"
        )));
    }
    let mut rng = derive_stream(seed, SYNTHETIC_STREAM);
    let mut features = Vec::with_capacity(n_rows * n_features);
    let mut row = vec![0.0; n_features];
    for _ in 0..n_rows {
        for e in row.iter_mut() {
            *e = -rng.unit_open_closed().ln();
        }
        let total: f64 = row.iter().sum();
        // every draw lies in (0, 1], so at worst all e_i are 0; guard the division
        if total > 0.0 {
            features.extend(row.iter().map(|e| 100.0 * e / total));
        } else {
            features.extend(std::iter::repeat_n(100.0 / n_features as f64, n_features));
        }
    }
    let scores: Vec<f64> = features.chunks_exact(n_features).map(planted_score).collect();
    let (t1, t2) = planted_thresholds(&scores);
    let labels = scores
        .iter()
        .map(|&s| {
            if s > t2 {
                2
            } else if s > t1 {
                1
            } else {
                0
            }
        })
        .collect();
    let names = (0..n_features).map(|i| format!("ing{i:02}")).collect();
    Dataset::new(features, labels, names)
}

pub fn planted_score(row: &[f64]) -> f64 {
    2.0 * row[0] + row[1] - row[2]
}

/// Nearest-rank percentile: the value at sorted position `ceil(q * n) - 1`.
pub fn nearest_rank(sorted: &[f64], percent: usize) -> f64 {
    let rank = (percent * sorted.len()).div_ceil(100).max(1);
    sorted[rank - 1]
}

pub fn planted_thresholds(scores: &[f64]) -> (f64, f64) {
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    (nearest_rank(&sorted, 60), nearest_rank(&sorted, 85))
}
