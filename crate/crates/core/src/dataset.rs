//! Categorical datasets: CSV loading, label coding and contingency counting.

use std::collections::{HashMap, HashSet};
use std::fmt;

use thiserror::Error;

/// Position of a variable in a dataset (or network) schema.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

impl VarId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<usize> for VarId {
    fn from(i: usize) -> Self {
        VarId(i)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DatasetError {
    #[error("row {row}: {msg}")]
    Format { row: usize, msg: String },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("dataset has no data rows")]
    Empty,
    #[error("row {row}, column {column}: missing value")]
    MissingValue { row: usize, column: String },
    #[error("usage error: {0}")]
    Usage(String),
}

/// Column-major matrix of category codes.
///
/// Every column `i` holds codes in `0..cardinalities[i]`. Labels are kept so
/// a loaded CSV can be written back unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    names: Vec<String>,
    cardinalities: Vec<usize>,
    columns: Vec<Vec<u32>>,
    labels: Vec<Vec<String>>,
    n_rows: usize,
}

impl Dataset {
    /// Builds a dataset from already-coded columns. Labels default to the code
    /// rendered as a decimal string.
    pub fn from_columns(
        names: Vec<String>,
        cardinalities: Vec<usize>,
        columns: Vec<Vec<u32>>,
    ) -> Result<Self, DatasetError> {
        let labels = cardinalities
            .iter()
            .map(|&k| (0..k).map(|c| c.to_string()).collect())
            .collect();
        Self::from_parts(names, cardinalities, columns, labels)
    }

    pub fn from_parts(
        names: Vec<String>,
        cardinalities: Vec<usize>,
        columns: Vec<Vec<u32>>,
        labels: Vec<Vec<String>>,
    ) -> Result<Self, DatasetError> {
        let p = names.len();
        if cardinalities.len() != p || columns.len() != p || labels.len() != p {
            return Err(DatasetError::Schema(
                "names, cardinalities, columns and labels differ in length".into(),
            ));
        }
        check_unique(&names)?;
        let n_rows = columns.first().map_or(0, Vec::len);
        if n_rows == 0 {
            return Err(DatasetError::Empty);
        }
        for (i, col) in columns.iter().enumerate() {
            let k = cardinalities[i];
            if k == 0 {
                return Err(DatasetError::Schema(format!("variable {} has cardinality 0", names[i])));
            }
            if labels[i].len() != k {
                return Err(DatasetError::Schema(format!(
                    "variable {} has {} labels for cardinality {k}",
                    names[i],
                    labels[i].len()
                )));
            }
            if col.len() != n_rows {
                return Err(DatasetError::Schema(format!(
                    "column {} has {} rows, expected {n_rows}",
                    names[i],
                    col.len()
                )));
            }
            if let Some(row) = col.iter().position(|&c| c as usize >= k) {
                return Err(DatasetError::Format {
                    row: row + 1,
                    msg: format!("code {} out of range for {} (cardinality {k})", col[row], names[i]),
                });
            }
        }
        Ok(Dataset { names, cardinalities, columns, labels, n_rows })
    }

    /// Parses a header + rows CSV of category labels.
    ///
    /// Labels are coded per column in first-appearance order. Empty cells are
    /// rejected as missing values. Row numbers in errors are 1-based file lines.
    pub fn load_csv(text: &str) -> Result<Self, DatasetError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(DatasetError::Empty)?;
        let names: Vec<String> = split_csv_line(header).into_iter().map(str::to_string).collect();
        check_unique(&names)?;
        let p = names.len();

        let mut maps: Vec<HashMap<String, u32>> = vec![HashMap::new(); p];
        let mut labels: Vec<Vec<String>> = vec![Vec::new(); p];
        let mut columns: Vec<Vec<u32>> = vec![Vec::new(); p];
        for (lineno, line) in lines {
            let row = lineno + 1;
            let cells = split_csv_line(line);
            if cells.len() != p {
                return Err(DatasetError::Format {
                    row,
                    msg: format!("expected {p} fields, found {}", cells.len()),
                });
            }
            for (j, cell) in cells.into_iter().enumerate() {
                if cell.is_empty() {
                    return Err(DatasetError::MissingValue { row, column: names[j].clone() });
                }
                let next = maps[j].len() as u32;
                let code = *maps[j].entry(cell.to_string()).or_insert_with(|| {
                    labels[j].push(cell.to_string());
                    next
                });
                columns[j].push(code);
            }
        }
        if columns.first().is_none_or(Vec::is_empty) {
            return Err(DatasetError::Empty);
        }
        let cardinalities = labels.iter().map(Vec::len).collect();
        Self::from_parts(names, cardinalities, columns, labels)
    }

    /// Renders the dataset back to CSV using its labels.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.n_rows * self.n_vars() * 4);
        out.push_str(&self.names.join(","));
        out.push('\n');
        for r in 0..self.n_rows {
            for j in 0..self.n_vars() {
                if j > 0 {
                    out.push(',');
                }
                out.push_str(&self.labels[j][self.columns[j][r] as usize]);
            }
            out.push('\n');
        }
        out
    }

    pub fn n_vars(&self) -> usize {
        self.names.len()
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, v: VarId) -> &str {
        &self.names[v.0]
    }

    pub fn cardinalities(&self) -> &[usize] {
        &self.cardinalities
    }

    pub fn cardinality(&self, v: VarId) -> usize {
        self.cardinalities[v.0]
    }

    pub fn column(&self, v: VarId) -> &[u32] {
        &self.columns[v.0]
    }

    pub fn labels(&self, v: VarId) -> &[String] {
        &self.labels[v.0]
    }

    pub fn var_ids(&self) -> impl Iterator<Item = VarId> {
        (0..self.n_vars()).map(VarId)
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.names.iter().position(|n| n == name).map(VarId)
    }

    /// Joint counts over `vars`; the first variable is the slowest-varying
    /// dimension of `counts`.
    pub fn count(&self, vars: &[VarId]) -> Result<ContingencyTable, DatasetError> {
        if vars.is_empty() {
            return Err(DatasetError::Usage("count needs at least one variable".into()));
        }
        let mut seen = HashSet::new();
        for v in vars {
            if v.0 >= self.n_vars() {
                return Err(DatasetError::Usage(format!("variable {v} out of range")));
            }
            if !seen.insert(*v) {
                return Err(DatasetError::Usage(format!("variable {v} repeated in count")));
            }
        }
        let dims: Vec<usize> = vars.iter().map(|&v| self.cardinality(v)).collect();
        let size: usize = dims.iter().product();
        let mut counts = vec![0u64; size];
        let mut index = vec![0usize; self.n_rows];
        for &v in vars {
            let k = self.cardinality(v);
            for (idx, &c) in index.iter_mut().zip(self.column(v)) {
                *idx = *idx * k + c as usize;
            }
        }
        for i in index {
            counts[i] += 1;
        }
        Ok(ContingencyTable { dims, counts })
    }
}

/// Dense joint count table. `counts` is row-major over `dims`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    pub dims: Vec<usize>,
    pub counts: Vec<u64>,
}

impl ContingencyTable {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Sums out every dimension not listed in `keep` (given as positions into
    /// `dims`, in the order the result should use).
    pub fn marginal(&self, keep: &[usize]) -> ContingencyTable {
        let dims: Vec<usize> = keep.iter().map(|&k| self.dims[k]).collect();
        let mut counts = vec![0u64; dims.iter().product()];
        let mut digits = vec![0usize; self.dims.len()];
        for &c in &self.counts {
            let idx = keep.iter().fold(0, |acc, &k| acc * self.dims[k] + digits[k]);
            counts[idx] += c;
            for d in (0..digits.len()).rev() {
                digits[d] += 1;
                if digits[d] < self.dims[d] {
                    break;
                }
                digits[d] = 0;
            }
        }
        ContingencyTable { dims, counts }
    }
}

fn check_unique(names: &[String]) -> Result<(), DatasetError> {
    let mut seen = HashSet::new();
    for n in names {
        if !seen.insert(n.as_str()) {
            return Err(DatasetError::Schema(format!("duplicate variable name {n:?}")));
        }
    }
    Ok(())
}

fn split_csv_line(line: &str) -> Vec<&str> {
    line.trim_end_matches('\r').split(',').map(str::trim).collect()
}
