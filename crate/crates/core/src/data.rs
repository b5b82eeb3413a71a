//! Session inputs: the data matrix, its 2-D embedding, the clustering under
//! scrutiny and optional per-row metadata.
//!
//! All inputs are headered UTF-8 CSV. Any file may carry a leading `id`
//! column; when two files both carry one, their ids must agree row for row.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ID_COLUMN: &str = "id";

/// A headered CSV file split into an optional id column and the remaining
/// string cells.
#[derive(Debug, Clone)]
struct RawTable {
    name: String,
    ids: Option<Vec<String>>,
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl RawTable {
    fn parse(name: &str, text: &str) -> Result<Self> {
        let csv_err = |e: csv::Error| Error::Csv {
            file: name.to_string(),
            message: e.to_string(),
        };
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut headers: Vec<String> = reader
            .headers()
            .map_err(csv_err)?
            .iter()
            .map(str::to_string)
            .collect();
        if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
            return Err(Error::Csv {
                file: name.to_string(),
                message: "missing header row".into(),
            });
        }
        let has_id = headers[0].eq_ignore_ascii_case(ID_COLUMN);
        let mut ids = has_id.then(Vec::new);
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(csv_err)?;
            let mut cells: Vec<String> = record.iter().map(str::to_string).collect();
            if let Some(ids) = ids.as_mut() {
                ids.push(cells.remove(0));
            }
            rows.push(cells);
        }
        if has_id {
            headers.remove(0);
        }
        Ok(Self {
            name: name.to_string(),
            ids,
            headers,
            rows,
        })
    }

    fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&path.display().to_string(), &text)
    }

    fn numeric_cell(&self, row: usize, col: usize) -> Result<f64> {
        let cell = &self.rows[row][col];
        if cell.is_empty() || cell.eq_ignore_ascii_case("na") {
            return Err(Error::MissingValue {
                file: self.name.clone(),
                row,
                column: self.headers[col].clone(),
            });
        }
        match cell.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(Error::Parse {
                file: self.name.clone(),
                row,
                column: self.headers[col].clone(),
                value: cell.clone(),
            }),
        }
    }

    fn numeric_matrix(&self) -> Result<Vec<f64>> {
        let mut values = Vec::with_capacity(self.rows.len() * self.headers.len());
        for row in 0..self.rows.len() {
            for col in 0..self.headers.len() {
                values.push(self.numeric_cell(row, col)?);
            }
        }
        Ok(values)
    }
}

fn default_ids(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

fn check_unique(ids: &[String]) -> Result<()> {
    let mut seen = HashSet::with_capacity(ids.len());
    for id in ids {
        if !seen.insert(id.as_str()) {
            return Err(Error::DuplicateId(id.clone()));
        }
    }
    Ok(())
}

/// Dense n×p matrix of observations, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    ids: Vec<String>,
    features: Vec<String>,
    values: Vec<f64>,
}

impl Dataset {
    pub fn new(ids: Vec<String>, features: Vec<String>, values: Vec<f64>) -> Result<Self> {
        let n = ids.len();
        let p = features.len();
        if n < 2 {
            return Err(Error::TooFewRows { needed: 2, found: n });
        }
        if p == 0 {
            return Err(Error::invalid("dataset needs at least one feature"));
        }
        if values.len() != n * p {
            return Err(Error::DimensionMismatch {
                what: "dataset values".into(),
                expected: n * p,
                found: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::MissingValue {
                file: "<memory>".into(),
                row: pos / p,
                column: features[pos % p].clone(),
            });
        }
        check_unique(&ids)?;
        Ok(Self {
            ids,
            features,
            values,
        })
    }

    /// Builds a dataset with ids `0..n` and features `x1..xp`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(rows.len() * p);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != p {
                return Err(Error::DimensionMismatch {
                    what: format!("row {i}"),
                    expected: p,
                    found: row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        let features = (1..=p).map(|j| format!("x{j}")).collect();
        Self::new(default_ids(rows.len()), features, values)
    }

    pub fn from_matrix(ids: Vec<String>, features: Vec<String>, m: &DMatrix<f64>) -> Result<Self> {
        let mut values = Vec::with_capacity(m.nrows() * m.ncols());
        for i in 0..m.nrows() {
            values.extend(m.row(i).iter().copied());
        }
        Self::new(ids, features, values)
    }

    pub fn from_csv_str(name: &str, text: &str) -> Result<Self> {
        Self::from_table(RawTable::parse(name, text)?)
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_table(RawTable::read(path.as_ref())?)
    }

    fn from_table(table: RawTable) -> Result<Self> {
        let values = table.numeric_matrix()?;
        let ids = table.ids.clone().unwrap_or_else(|| default_ids(table.rows.len()));
        Self::new(ids, table.headers, values)
    }

    /// Serializes with an `id` column. `f64`'s `Display` is the shortest
    /// representation that parses back to the same bits.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from(ID_COLUMN);
        for f in &self.features {
            out.push(',');
            out.push_str(f);
        }
        out.push('\n');
        for (i, id) in self.ids.iter().enumerate() {
            out.push_str(id);
            for v in self.row(i) {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn n_rows(&self) -> usize {
        self.ids.len()
    }

    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn features(&self) -> &[String] {
        &self.features
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let p = self.n_features();
        &self.values[i * p..(i + 1) * p]
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_features() + j]
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n_rows(), self.n_features(), &self.values)
    }

    /// Matrix of the given rows, in the given order.
    pub fn rows_matrix(&self, rows: &[usize]) -> DMatrix<f64> {
        let p = self.n_features();
        DMatrix::from_fn(rows.len(), p, |i, j| self.value(rows[i], j))
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }

    /// Same rows and ids, new values (e.g. after adding noise).
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.ids.clone(), self.features.clone(), values)
    }
}

/// Two-dimensional embedding aligned row-for-row with a [`Dataset`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    coords: Vec<[f64; 2]>,
}

impl Embedding {
    pub fn new(coords: Vec<[f64; 2]>) -> Result<Self> {
        if coords.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("embedding coordinates must be finite"));
        }
        Ok(Self { coords })
    }

    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    fn from_table(table: &RawTable) -> Result<Self> {
        if table.headers.len() != 2 {
            return Err(Error::DimensionMismatch {
                what: format!("{} columns", table.name),
                expected: 2,
                found: table.headers.len(),
            });
        }
        let flat = table.numeric_matrix()?;
        Self::new(flat.chunks_exact(2).map(|c| [c[0], c[1]]).collect())
    }

    pub fn from_csv_str(name: &str, text: &str) -> Result<Self> {
        Self::from_table(&RawTable::parse(name, text)?)
    }
}

/// Hard cluster assignment, one label per row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    labels: Vec<String>,
    classes: Vec<String>,
}

impl Clustering {
    pub fn new(labels: Vec<String>) -> Result<Self> {
        let mut classes: Vec<String> = labels.clone();
        classes.sort();
        classes.dedup();
        if classes.len() < 2 {
            return Err(Error::TooFewClasses(classes.len()));
        }
        Ok(Self { labels, classes })
    }

    pub fn from_indices(labels: &[usize]) -> Result<Self> {
        Self::new(labels.iter().map(|l| l.to_string()).collect())
    }

    fn from_table(table: &RawTable) -> Result<Self> {
        if table.headers.len() != 1 {
            return Err(Error::DimensionMismatch {
                what: format!("{} columns", table.name),
                expected: 1,
                found: table.headers.len(),
            });
        }
        let mut labels = Vec::with_capacity(table.rows.len());
        for (row, cells) in table.rows.iter().enumerate() {
            if cells[0].is_empty() {
                return Err(Error::MissingValue {
                    file: table.name.clone(),
                    row,
                    column: table.headers[0].clone(),
                });
            }
            labels.push(cells[0].clone());
        }
        Self::new(labels)
    }

    pub fn from_csv_str(name: &str, text: &str) -> Result<Self> {
        Self::from_table(&RawTable::parse(name, text)?)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Distinct class labels, sorted.
    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, row: usize) -> &str {
        &self.labels[row]
    }

    /// Row indices of one class, ascending.
    pub fn members(&self, class: &str) -> Result<Vec<usize>> {
        let rows: Vec<usize> = self
            .labels
            .iter()
            .enumerate()
            .filter_map(|(i, l)| (l == class).then_some(i))
            .collect();
        if rows.is_empty() {
            return Err(Error::EmptyClass(class.to_string()));
        }
        Ok(rows)
    }

    /// All classes with their member rows.
    pub fn groups(&self) -> BTreeMap<String, Vec<usize>> {
        let mut out: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, l) in self.labels.iter().enumerate() {
            out.entry(l.clone()).or_default().push(i);
        }
        out
    }
}

/// One metadata column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "values", rename_all = "snake_case")]
pub enum MetaValues {
    Categorical(Vec<String>),
    /// Blank cells are `None`.
    Numeric(Vec<Option<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaColumn {
    pub name: String,
    pub values: MetaValues,
}

/// Per-row metadata. A column is numeric when every non-blank cell parses as
/// a number; otherwise it is categorical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaTable {
    n_rows: usize,
    columns: Vec<MetaColumn>,
}

impl MetaTable {
    pub fn new(n_rows: usize, columns: Vec<MetaColumn>) -> Result<Self> {
        for c in &columns {
            let len = match &c.values {
                MetaValues::Categorical(v) => v.len(),
                MetaValues::Numeric(v) => v.len(),
            };
            if len != n_rows {
                return Err(Error::DimensionMismatch {
                    what: format!("metadata column {:?}", c.name),
                    expected: n_rows,
                    found: len,
                });
            }
        }
        Ok(Self { n_rows, columns })
    }

    fn from_table(table: &RawTable) -> Result<Self> {
        let n = table.rows.len();
        let mut columns = Vec::with_capacity(table.headers.len());
        for (j, name) in table.headers.iter().enumerate() {
            let cells: Vec<&str> = table.rows.iter().map(|r| r[j].as_str()).collect();
            let parsed: Vec<Option<Option<f64>>> = cells
                .iter()
                .map(|c| {
                    if c.is_empty() {
                        Some(None)
                    } else {
                        c.parse::<f64>().ok().filter(|v| v.is_finite()).map(Some)
                    }
                })
                .collect();
            let numeric = parsed.iter().all(Option::is_some)
                && parsed.iter().any(|v| matches!(v, Some(Some(_))));
            let values = if numeric {
                MetaValues::Numeric(parsed.into_iter().map(Option::flatten).collect())
            } else {
                MetaValues::Categorical(cells.iter().map(|c| c.to_string()).collect())
            };
            columns.push(MetaColumn {
                name: name.clone(),
                values,
            });
        }
        Self::new(n, columns)
    }

    pub fn from_csv_str(name: &str, text: &str) -> Result<Self> {
        Self::from_table(&RawTable::parse(name, text)?)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn columns(&self) -> &[MetaColumn] {
        &self.columns
    }
}

/// Everything a diagnosis session needs, validated and row-aligned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionInputs {
    pub dataset: Dataset,
    pub embedding: Embedding,
    pub clustering: Clustering,
    pub meta: Option<MetaTable>,
}

fn check_aligned(
    what: &str,
    data_ids: Option<&[String]>,
    table: &RawTable,
    expected_rows: usize,
) -> Result<()> {
    if table.rows.len() != expected_rows {
        return Err(Error::DimensionMismatch {
            what: format!("{what} rows"),
            expected: expected_rows,
            found: table.rows.len(),
        });
    }
    if let (Some(left), Some(right)) = (data_ids, table.ids.as_deref()) {
        if let Some(row) = (0..left.len()).find(|&i| left[i] != right[i]) {
            return Err(Error::IdMismatch {
                row,
                left: left[row].clone(),
                right: right[row].clone(),
            });
        }
    }
    Ok(())
}

/// CSV text for each input; `meta` is optional.
#[derive(Debug, Clone, Copy)]
pub struct CsvSources<'a> {
    pub data: (&'a str, &'a str),
    pub embedding: (&'a str, &'a str),
    pub labels: (&'a str, &'a str),
    pub meta: Option<(&'a str, &'a str)>,
}

impl SessionInputs {
    /// Parses and cross-validates the four inputs. Each source is a
    /// `(name, csv text)` pair; the name only shows up in error messages.
    pub fn from_csv(src: CsvSources<'_>) -> Result<Self> {
        let data_table = RawTable::parse(src.data.0, src.data.1)?;
        let emb_table = RawTable::parse(src.embedding.0, src.embedding.1)?;
        let label_table = RawTable::parse(src.labels.0, src.labels.1)?;
        let meta_table = src
            .meta
            .map(|(name, text)| RawTable::parse(name, text))
            .transpose()?;
        Self::from_tables(data_table, emb_table, label_table, meta_table)
    }

    fn from_tables(
        data_table: RawTable,
        emb_table: RawTable,
        label_table: RawTable,
        meta_table: Option<RawTable>,
    ) -> Result<Self> {
        let data_ids = data_table.ids.clone();
        let dataset = Dataset::from_table(data_table)?;
        let n = dataset.n_rows();
        check_aligned("embedding", data_ids.as_deref(), &emb_table, n)?;
        check_aligned("labels", data_ids.as_deref(), &label_table, n)?;
        let embedding = Embedding::from_table(&emb_table)?;
        let clustering = Clustering::from_table(&label_table)?;
        let meta = match meta_table {
            Some(t) => {
                check_aligned("metadata", data_ids.as_deref(), &t, n)?;
                Some(MetaTable::from_table(&t)?)
            }
            None => None,
        };
        Ok(Self {
            dataset,
            embedding,
            clustering,
            meta,
        })
    }
}

/// Reads and validates a session from files on disk.
pub fn load_session(
    data_path: impl AsRef<Path>,
    embedding_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
    meta_path: Option<&Path>,
) -> Result<SessionInputs> {
    SessionInputs::from_tables(
        RawTable::read(data_path.as_ref())?,
        RawTable::read(embedding_path.as_ref())?,
        RawTable::read(labels_path.as_ref())?,
        meta_path.map(RawTable::read).transpose()?,
    )
}
