use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which CSV column holds the class label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LabelColumn {
    Index(usize),
    Name(String),
}

impl LabelColumn {
    pub fn last() -> Self {
        LabelColumn::Name("last".into())
    }
}

impl Default for LabelColumn {
    fn default() -> Self {
        Self::last()
    }
}

impl std::str::FromStr for LabelColumn {
    type Err = Error;

    /// A zero-based index, `first`, `last`, or a header name.
    fn from_str(s: &str) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::Config("empty label column".into()));
        }
        Ok(match s.parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(s.to_string()),
        })
    }
}

impl std::fmt::Display for LabelColumn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LabelColumn::Index(i) => write!(f, "{i}"),
            LabelColumn::Name(n) => f.write_str(n),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    pub features: Vec<Vec<f64>>,
    /// Class indices in `0..num_classes`, numbered by first appearance.
    pub labels: Vec<usize>,
    pub num_classes: usize,
    /// Original label text per class index.
    pub class_names: Vec<String>,
    pub feature_names: Vec<String>,
}

impl Dataset {
    pub fn num_samples(&self) -> usize {
        self.features.len()
    }

    pub fn num_features(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Checks the requirements of `folds`-fold cross validation: at least two
    /// classes and at least `folds` samples in every class.
    pub fn check_for_cv(&self, folds: usize) -> Result<()> {
        if self.num_classes < 2 {
            return Err(Error::Dataset(format!("{}: need at least 2 classes", self.name)));
        }
        for (c, n) in self.class_counts().into_iter().enumerate() {
            if n < folds.max(2) {
                return Err(Error::Dataset(format!(
                    "{}: class `{}` has {n} samples, {}-fold cross validation needs at least {}",
                    self.name,
                    self.class_names[c],
                    folds,
                    folds.max(2)
                )));
            }
        }
        Ok(())
    }

    /// Rows at `idx`, in that order.
    pub fn subset(&self, idx: &[usize]) -> (Vec<Vec<f64>>, Vec<usize>) {
        (
            idx.iter().map(|&i| self.features[i].clone()).collect(),
            idx.iter().map(|&i| self.labels[i]).collect(),
        )
    }
}

fn parse_error(path: &Path, line: u64, message: String) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    }
}

/// Loads a numeric CSV with one label column.
///
/// A header row is detected when any of its feature cells fails to parse as a
/// number. Labels are encoded by order of first appearance.
pub fn load_csv(path: impl AsRef<Path>, label_column: &LabelColumn, delimiter: u8) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    read_csv(file, path, name, label_column, delimiter)
}

/// Like [`load_csv`] from any reader; `path` only labels error messages.
pub fn read_csv<R: Read>(
    reader: R,
    path: &Path,
    name: String,
    label_column: &LabelColumn,
    delimiter: u8,
) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .delimiter(delimiter)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut records = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_error(path, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.iter().all(|c| c.is_empty()) {
            continue;
        }
        records.push((line, rec));
    }
    let Some((_, first)) = records.first() else {
        return Err(Error::Dataset(format!("{}: no rows", path.display())));
    };
    let width = first.len();
    if width < 2 {
        return Err(parse_error(path, 1, "need at least one feature column and a label column".into()));
    }

    let resolve_index = |label: &LabelColumn, header: Option<&csv::StringRecord>| -> Result<usize> {
        match label {
            LabelColumn::Index(i) if *i < width => Ok(*i),
            LabelColumn::Index(i) => Err(Error::Config(format!(
                "label column {i} out of range for {width} columns"
            ))),
            LabelColumn::Name(n) if n == "last" => Ok(width - 1),
            LabelColumn::Name(n) if n == "first" => Ok(0),
            LabelColumn::Name(n) => header
                .and_then(|h| h.iter().position(|c| c == n))
                .ok_or_else(|| Error::Config(format!("no column named `{n}` in the header"))),
        }
    };

    // header detection needs the label index, which may itself need the header
    let provisional = match label_column {
        LabelColumn::Name(n) if n != "last" && n != "first" => first.iter().position(|c| c == n),
        other => Some(resolve_index(other, None)?),
    };
    let has_header = match provisional {
        None => true,
        Some(li) => first
            .iter()
            .enumerate()
            .any(|(j, c)| j != li && c.parse::<f64>().is_err()),
    };
    let header = if has_header { Some(first.clone()) } else { None };
    let label_idx = resolve_index(label_column, header.as_ref())?;
    let feature_names: Vec<String> = (0..width)
        .filter(|&j| j != label_idx)
        .map(|j| match &header {
            Some(h) => h.get(j).unwrap_or_default().to_string(),
            None => format!("x{j}"),
        })
        .collect();

    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut class_names: Vec<String> = Vec::new();
    for (line, rec) in records.iter().skip(usize::from(has_header)) {
        let line = *line;
        if rec.len() != width {
            return Err(parse_error(
                path,
                line,
                format!("expected {width} columns, found {}", rec.len()),
            ));
        }
        let mut row = Vec::with_capacity(width - 1);
        for (j, cell) in rec.iter().enumerate() {
            let column = || {
                header
                    .as_ref()
                    .and_then(|h| h.get(j))
                    .map_or_else(|| format!("column {}", j + 1), |n| format!("column {} (`{n}`)", j + 1))
            };
            if cell.is_empty() {
                return Err(parse_error(path, line, format!("row {line}, {}: missing value", column())));
            }
            if j == label_idx {
                let class = match class_names.iter().position(|c| c == cell) {
                    Some(c) => c,
                    None => {
                        class_names.push(cell.to_string());
                        class_names.len() - 1
                    }
                };
                labels.push(class);
            } else {
                let v: f64 = cell.parse().map_err(|_| {
                    parse_error(path, line, format!("row {line}, {}: `{cell}` is not a number", column()))
                })?;
                if !v.is_finite() {
                    return Err(parse_error(path, line, format!("row {line}, {}: `{cell}` is not finite", column())));
                }
                row.push(v);
            }
        }
        features.push(row);
    }
    if features.is_empty() {
        return Err(Error::Dataset(format!("{}: no data rows", path.display())));
    }
    Ok(Dataset {
        name,
        features,
        labels,
        num_classes: class_names.len(),
        class_names,
        feature_names,
    })
}

/// Rows to classify, read from a CSV with either `dim` feature columns or
/// `dim` features plus the label column. Labels come back as their raw text.
pub fn load_query(
    path: impl AsRef<Path>,
    label_column: &LabelColumn,
    delimiter: u8,
    dim: usize,
) -> Result<(Vec<Vec<f64>>, Option<Vec<String>>)> {
    let path = path.as_ref();
    let bytes = std::fs::read(path)?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .delimiter(delimiter)
        .trim(csv::Trim::All)
        .from_reader(bytes.as_slice());
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| parse_error(path, e.position().map_or(0, |p| p.line()), e.to_string()))?;
        if !rec.iter().all(|c| c.is_empty()) {
            rows.push(rec);
        }
    }
    let Some(first) = rows.first() else {
        return Err(Error::Dataset(format!("{}: no rows", path.display())));
    };
    if first.len() == dim + 1 {
        let ds = read_csv(bytes.as_slice(), path, String::new(), label_column, delimiter)?;
        let names = ds.labels.iter().map(|&l| ds.class_names[l].clone()).collect();
        return Ok((ds.features, Some(names)));
    }
    if first.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: first.len(),
        });
    }
    let has_header = first.iter().any(|c| c.parse::<f64>().is_err());
    let mut features = Vec::new();
    for rec in rows.iter().skip(usize::from(has_header)) {
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != dim {
            return Err(parse_error(path, line, format!("expected {dim} columns, found {}", rec.len())));
        }
        let row = rec
            .iter()
            .enumerate()
            .map(|(j, cell)| match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(parse_error(
                    path,
                    line,
                    format!("row {line}, column {}: `{cell}` is not a finite number", j + 1),
                )),
            })
            .collect::<Result<Vec<f64>>>()?;
        features.push(row);
    }
    if features.is_empty() {
        return Err(Error::Dataset(format!("{}: no data rows", path.display())));
    }
    Ok((features, None))
}

/// Per-feature affine map `x -> (x - mean) / scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Scaler {
    /// Mean and population standard deviation of each column; zero-variance
    /// columns get scale 1.
    pub fn fit<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(Error::InvalidArgument("cannot fit a scaler on no rows".into()));
        };
        let k = first.as_ref().len();
        let n = rows.len() as f64;
        let mut mean = vec![0.0; k];
        for r in rows {
            let r = r.as_ref();
            if r.len() != k {
                return Err(Error::DimensionMismatch { expected: k, found: r.len() });
            }
            for (m, x) in mean.iter_mut().zip(r) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; k];
        for r in rows {
            for ((v, x), m) in var.iter_mut().zip(r.as_ref()).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        let scale = var
            .into_iter()
            .map(|v| {
                let sd = (v / n).sqrt();
                if sd > 0.0 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self { mean, scale })
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((x, m), s)| (x - m) / s)
            .collect()
    }

    pub fn transform<R: AsRef<[f64]>>(&self, rows: &[R]) -> Vec<Vec<f64>> {
        rows.iter().map(|r| self.transform_row(r.as_ref())).collect()
    }
}

/// Z-scores both sets with statistics of `train` alone.
pub fn standardize<R: AsRef<[f64]>, T: AsRef<[f64]>>(
    train: &[R],
    test: &[T],
) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>, Scaler)> {
    let scaler = Scaler::fit(train)?;
    Ok((scaler.transform(train), scaler.transform(test), scaler))
}
