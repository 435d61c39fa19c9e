//! Datasets: CSV ingestion, seeded splits and synthetic generators.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;

pub const DEFAULT_TEST_FRACTION: f64 = 0.2;
pub const DEFAULT_VAL_FRACTION: f64 = 0.2;

/// Standard deviation of the additive label noise in [`gen_noisy_regression`].
pub const REGRESSION_NOISE_STD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: FeatureMatrix,
    pub labels: Vec<f64>,
    pub feature_names: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(features: FeatureMatrix, labels: Vec<f64>, feature_names: Option<Vec<String>>) -> Result<Self> {
        if features.rows() == 0 || features.cols() == 0 {
            return Err(Error::schema("dataset needs at least one row and one feature"));
        }
        if labels.len() != features.rows() {
            return Err(Error::schema(format!(
                "{} rows but {} labels",
                features.rows(),
                labels.len()
            )));
        }
        if let Some(names) = &feature_names {
            if names.len() != features.cols() {
                return Err(Error::schema("feature name count does not match columns"));
            }
        }
        for (i, v) in features.as_slice().iter().enumerate() {
            if !v.is_finite() {
                let (r, c) = (i / features.cols(), i % features.cols());
                return Err(Error::schema_at(format!("non-finite feature value {v}"), r, c));
            }
        }
        if let Some((i, v)) = labels.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::schema_at(format!("non-finite label {v}"), i, features.cols()));
        }
        Ok(Dataset {
            features,
            labels,
            feature_names,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.features.cols()
    }

    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select_rows(idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
        }
    }

    /// Rows of `self` followed by rows of `other`.
    pub fn concat(&self, other: &Dataset) -> Result<Dataset> {
        if self.n_features() != other.n_features() {
            return Err(Error::schema("cannot concatenate datasets with different widths"));
        }
        let mut data = self.features.as_slice().to_vec();
        data.extend_from_slice(other.features.as_slice());
        let mut labels = self.labels.clone();
        labels.extend_from_slice(&other.labels);
        let features = FeatureMatrix::new(data, labels.len(), self.n_features())?;
        Ok(Dataset {
            features,
            labels,
            feature_names: self.feature_names.clone(),
        })
    }
}

/// Which CSV column holds the label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    Name(String),
    Index(usize),
}

impl std::str::FromStr for LabelColumn {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(s.to_string()),
        })
    }
}

/// Numeric table as read from a CSV, before the label column is chosen.
#[derive(Debug, Clone)]
pub struct Table {
    pub header: Option<Vec<String>>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column_index(&self, label: &LabelColumn) -> Result<usize> {
        let width = self.rows.first().map_or(0, Vec::len);
        match label {
            LabelColumn::Index(i) if *i < width => Ok(*i),
            LabelColumn::Index(i) => Err(Error::schema(format!(
                "label column {i} out of range for {width} columns"
            ))),
            LabelColumn::Name(name) => {
                let header = self
                    .header
                    .as_ref()
                    .ok_or_else(|| Error::schema("label given by name but file has no header"))?;
                header
                    .iter()
                    .position(|h| h == name)
                    .ok_or_else(|| Error::schema(format!("no column named '{name}'")))
            }
        }
    }

    /// Split off the label column.
    pub fn into_dataset(self, label: &LabelColumn) -> Result<Dataset> {
        let li = self.column_index(label)?;
        self.into_dataset_with(Some(li))
    }

    /// All columns are features; labels are zero-filled.
    pub fn into_unlabelled(self) -> Result<Dataset> {
        self.into_dataset_with(None)
    }

    fn into_dataset_with(self, label: Option<usize>) -> Result<Dataset> {
        let n = self.rows.len();
        let width = self.rows.first().map_or(0, Vec::len);
        let m = width - usize::from(label.is_some());
        let mut data = Vec::with_capacity(n * m);
        let mut labels = Vec::with_capacity(n);
        for row in &self.rows {
            for (j, &v) in row.iter().enumerate() {
                if Some(j) == label {
                    labels.push(v);
                } else {
                    data.push(v);
                }
            }
            if label.is_none() {
                labels.push(0.0);
            }
        }
        let names = self.header.map(|h| {
            h.into_iter()
                .enumerate()
                .filter(|(j, _)| Some(*j) != label)
                .map(|(_, s)| s)
                .collect()
        });
        Dataset::new(FeatureMatrix::new(data, n, m)?, labels, names)
    }
}

/// Parse a numeric CSV. Every cell must be a finite decimal number.
pub fn read_table<R: Read>(reader: R, has_header: bool) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = if has_header {
        Some(
            rdr.headers()
                .map_err(csv_error)?
                .iter()
                .map(str::to_string)
                .collect::<Vec<_>>(),
        )
    } else {
        None
    };
    let mut rows = Vec::new();
    let mut width = header.as_ref().map(Vec::len);
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_error)?;
        if let Some(w) = width {
            if rec.len() != w {
                return Err(Error::schema_at(
                    format!("row has {} cells, expected {w}", rec.len()),
                    r,
                    rec.len().min(w),
                ));
            }
        } else {
            width = Some(rec.len());
        }
        let mut row = Vec::with_capacity(rec.len());
        for (c, cell) in rec.iter().enumerate() {
            if cell.is_empty() {
                return Err(Error::schema_at(format!("missing value at row {r}, column {c}"), r, c));
            }
            let v: f64 = cell
                .parse()
                .map_err(|_| Error::schema_at(format!("unparsable cell '{cell}' at row {r}, column {c}"), r, c))?;
            if !v.is_finite() {
                return Err(Error::schema_at(
                    format!("non-finite cell '{cell}' at row {r}, column {c}"),
                    r,
                    c,
                ));
            }
            row.push(v);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::schema("CSV has no data rows"));
    }
    Ok(Table { header, rows })
}

fn csv_error(e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            _ => unreachable!(),
        }
    } else {
        Error::schema(e.to_string())
    }
}

pub fn load_table(path: impl AsRef<Path>, has_header: bool) -> Result<Table> {
    read_table(File::open(path)?, has_header)
}

pub fn load_csv(path: impl AsRef<Path>, label: &LabelColumn, has_header: bool) -> Result<Dataset> {
    load_table(path, has_header)?.into_dataset(label)
}

/// Write features then the label as the last column, named `y`. Values use
/// the shortest decimal form that parses back to the same `f64`.
pub fn write_csv<W: Write>(data: &Dataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = match &data.feature_names {
        Some(names) => names.clone(),
        None => (0..data.n_features()).map(|j| format!("x{j}")).collect(),
    };
    header.push("y".to_string());
    w.write_record(&header).map_err(csv_error)?;
    let mut buf = Vec::with_capacity(header.len());
    for i in 0..data.len() {
        buf.clear();
        buf.extend(data.features.row(i).iter().map(|v| v.to_string()));
        buf.push(data.labels[i].to_string());
        w.write_record(&buf).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_csv(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    write_csv(data, File::create(path)?)
}

/// Index partition produced by [`split_indices`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

fn rounded_share(n: usize, fraction: f64) -> usize {
    (n as f64 * fraction).round() as usize
}

/// Shuffle `0..n` by `seed`, hold out `round(n * test_fraction)` for test,
/// then `round(rest * val_fraction)` of the remainder for validation.
/// A `val_fraction` of zero skips the validation block.
pub fn split_indices(n: usize, test_fraction: f64, val_fraction: f64, seed: u64) -> Result<SplitIndices> {
    let in_open_unit = |f: f64| f > 0.0 && f < 1.0;
    if !in_open_unit(test_fraction) {
        return Err(Error::domain(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    if !(val_fraction == 0.0 || in_open_unit(val_fraction)) {
        return Err(Error::domain(format!(
            "validation fraction must lie in [0, 1), got {val_fraction}"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_test = rounded_share(n, test_fraction);
    let rest = n - n_test.min(n);
    let n_val = rounded_share(rest, val_fraction);
    let n_train = rest.saturating_sub(n_val);
    if n_test == 0 || n_train == 0 || (val_fraction > 0.0 && n_val == 0) {
        return Err(Error::domain(format!(
            "split of {n} rows leaves an empty block (train={n_train}, val={n_val}, test={n_test})"
        )));
    }
    let test = idx[..n_test].to_vec();
    let val = idx[n_test..n_test + n_val].to_vec();
    let train = idx[n_test + n_val..].to_vec();
    Ok(SplitIndices { train, val, test })
}

/// Seeded `(train, val, test)` partition of a dataset.
pub fn split(data: &Dataset, test_fraction: f64, val_fraction: f64, seed: u64) -> Result<(Dataset, Dataset, Dataset)> {
    let s = split_indices(data.len(), test_fraction, val_fraction, seed)?;
    Ok((data.subset(&s.train), data.subset(&s.val), data.subset(&s.test)))
}

/// Seeded `(rest, held_out)` partition with `round(n * fraction)` held out.
pub fn holdout(data: &Dataset, fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let s = split_indices(data.len(), fraction, 0.0, seed)?;
    Ok((data.subset(&s.train), data.subset(&s.test)))
}

/// Two unit-variance Gaussian classes centred at `-sep/2` (label 0) and
/// `+sep/2` (label 1) on every coordinate. Class 0 rows come first.
pub fn gen_two_gaussians(n: usize, dims: usize, separation: f64, seed: u64) -> Result<Dataset> {
    if n == 0 || !n.is_multiple_of(2) {
        return Err(Error::domain(format!("n must be even and positive, got {n}")));
    }
    if dims == 0 {
        return Err(Error::domain("dims must be >= 1"));
    }
    if !(separation >= 0.0 && separation.is_finite()) {
        return Err(Error::domain(format!("separation must be >= 0, got {separation}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(n * dims);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let y = if i < n / 2 { 0.0 } else { 1.0 };
        let centre = (y - 0.5) * separation;
        for _ in 0..dims {
            let z: f64 = StandardNormal.sample(&mut rng);
            data.push(centre + z);
        }
        labels.push(y);
    }
    Dataset::new(FeatureMatrix::new(data, n, dims)?, labels, None)
}

/// Linear regression data with optional gross outliers, plus the labels
/// before outliers were injected.
#[derive(Debug, Clone)]
pub struct NoisyRegression {
    pub data: Dataset,
    pub clean_labels: Vec<f64>,
    pub outlier_rows: Vec<usize>,
    pub weights: Vec<f64>,
}

/// `y = w . x + e` with `x, w ~ N(0, 1)` and `e ~ N(0, 0.5^2)`. A seeded
/// `round(n * outlier_fraction)` rows get their label shifted by
/// `+/- outlier_scale * std(y)`.
pub fn gen_noisy_regression_with_truth(
    n: usize,
    dims: usize,
    outlier_fraction: f64,
    outlier_scale: f64,
    seed: u64,
) -> Result<NoisyRegression> {
    if n == 0 || dims == 0 {
        return Err(Error::domain("n and dims must be >= 1"));
    }
    if !(0.0..1.0).contains(&outlier_fraction) {
        return Err(Error::domain(format!(
            "outlier fraction must lie in [0, 1), got {outlier_fraction}"
        )));
    }
    if !outlier_scale.is_finite() {
        return Err(Error::domain("outlier scale must be finite"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights: Vec<f64> = (0..dims).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut data = Vec::with_capacity(n * dims);
    let mut clean = Vec::with_capacity(n);
    for _ in 0..n {
        let mut y = 0.0;
        for w in &weights {
            let x: f64 = StandardNormal.sample(&mut rng);
            data.push(x);
            y += w * x;
        }
        let e: f64 = StandardNormal.sample(&mut rng);
        clean.push(y + REGRESSION_NOISE_STD * e);
    }
    let mean = clean.iter().sum::<f64>() / n as f64;
    let std = (clean.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / n as f64).sqrt();

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut outlier_rows: Vec<usize> = order[..rounded_share(n, outlier_fraction)].to_vec();
    outlier_rows.sort_unstable();
    let mut labels = clean.clone();
    for &i in &outlier_rows {
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        labels[i] += sign * outlier_scale * std;
    }
    Ok(NoisyRegression {
        data: Dataset::new(FeatureMatrix::new(data, n, dims)?, labels, None)?,
        clean_labels: clean,
        outlier_rows,
        weights,
    })
}

pub fn gen_noisy_regression(
    n: usize,
    dims: usize,
    outlier_fraction: f64,
    outlier_scale: f64,
    seed: u64,
) -> Result<Dataset> {
    Ok(gen_noisy_regression_with_truth(n, dims, outlier_fraction, outlier_scale, seed)?.data)
}
