//! Sample matrices with named, possibly multi-dimensional variables.
//!
//! On disk a dataset is comma-separated text with a header row. A variable
//! `v` with several columns is stored as `v.0, v.1, …`.

use std::path::Path;

use ndarray::{s, Array2, ArrayView2, Axis};
use thiserror::Error;

use crate::io::{write_atomic, IoError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DataError {
    #[error("a dataset needs at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("variable spans must be contiguous, non-empty and cover all {columns} columns")]
    BadSpans { columns: usize },
    #[error("non-finite value at row {row}, column {column}")]
    NonFinite { row: usize, column: usize },
    #[error("unknown variable index {0}")]
    UnknownVariable(usize),
    #[error("malformed dataset: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    pub start: usize,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    values: Array2<f64>,
    variables: Vec<Variable>,
}

impl Dataset {
    pub fn new(values: Array2<f64>, variables: Vec<Variable>) -> Result<Self, DataError> {
        let (rows, columns) = values.dim();
        if rows < 2 {
            return Err(DataError::TooFewRows(rows));
        }
        let mut next = 0;
        for v in &variables {
            if v.len == 0 || v.start != next {
                return Err(DataError::BadSpans { columns });
            }
            next += v.len;
        }
        if next != columns || variables.is_empty() {
            return Err(DataError::BadSpans { columns });
        }
        if let Some(((row, column), _)) = values.indexed_iter().find(|(_, x)| !x.is_finite()) {
            return Err(DataError::NonFinite { row, column });
        }
        Ok(Dataset { values, variables })
    }

    /// One scalar variable per column.
    pub fn from_columns(names: Vec<String>, values: Array2<f64>) -> Result<Self, DataError> {
        if names.len() != values.ncols() {
            return Err(DataError::BadSpans {
                columns: values.ncols(),
            });
        }
        let variables = names
            .into_iter()
            .enumerate()
            .map(|(i, name)| Variable {
                name,
                start: i,
                len: 1,
            })
            .collect();
        Dataset::new(values, variables)
    }

    /// Scalar variables named `X0, X1, …`.
    pub fn unnamed(values: Array2<f64>) -> Result<Self, DataError> {
        let names = crate::graph::io::default_names(values.ncols());
        Dataset::from_columns(names, values)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    #[inline]
    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn names(&self) -> Vec<String> {
        self.variables.iter().map(|v| v.name.clone()).collect()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn dim_of(&self, var: usize) -> Result<usize, DataError> {
        self.variables
            .get(var)
            .map(|v| v.len)
            .ok_or(DataError::UnknownVariable(var))
    }

    pub fn columns_of(&self, var: usize) -> Result<ArrayView2<'_, f64>, DataError> {
        let v = self
            .variables
            .get(var)
            .ok_or(DataError::UnknownVariable(var))?;
        Ok(self.values.slice(s![.., v.start..v.start + v.len]))
    }

    /// Column-wise concatenation of the given variables (`n × 0` when empty).
    pub fn gather(&self, vars: &[usize]) -> Result<Array2<f64>, DataError> {
        let mut width = 0;
        for &v in vars {
            width += self.dim_of(v)?;
        }
        let mut out = Array2::zeros((self.rows(), width));
        let mut c = 0;
        for &v in vars {
            let cols = self.columns_of(v)?;
            out.slice_mut(s![.., c..c + cols.ncols()]).assign(&cols);
            c += cols.ncols();
        }
        Ok(out)
    }

    /// Each column shifted to mean 0 and scaled to unit variance. Constant
    /// columns become all zeros.
    pub fn standardized(&self) -> Dataset {
        let mut values = self.values.clone();
        for mut col in values.axis_iter_mut(Axis(1)) {
            let n = col.len() as f64;
            let mean = col.sum() / n;
            let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
            let sd = var.sqrt();
            if sd > 0.0 {
                col.mapv_inplace(|x| (x - mean) / sd);
            } else {
                col.fill(0.0);
            }
        }
        Dataset {
            values,
            variables: self.variables.clone(),
        }
    }

    pub fn header(&self) -> Vec<String> {
        let mut h = Vec::with_capacity(self.values.ncols());
        for v in &self.variables {
            if v.len == 1 {
                h.push(v.name.clone());
            } else {
                h.extend((0..v.len).map(|k| format!("{}.{k}", v.name)));
            }
        }
        h
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = self.header().join(",");
        out.push('\n');
        for row in self.values.rows() {
            let cells: Vec<String> = row.iter().map(|x| format!("{x}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv_reader<R: std::io::Read>(reader: R) -> Result<Self, DataError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let header: Vec<String> = rdr
            .headers()
            .map_err(|e| DataError::Parse(e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        let variables = spans_from_header(&header);
        let mut flat = Vec::new();
        let mut rows = 0;
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| DataError::Parse(e.to_string()))?;
            if rec.len() != header.len() {
                return Err(DataError::Parse(format!(
                    "row {} has {} fields, expected {}",
                    i + 1,
                    rec.len(),
                    header.len()
                )));
            }
            for field in rec.iter() {
                let x: f64 = field
                    .parse()
                    .map_err(|_| DataError::Parse(format!("row {}: bad number {field:?}", i + 1)))?;
                flat.push(x);
            }
            rows += 1;
        }
        let values = Array2::from_shape_vec((rows, header.len()), flat)
            .map_err(|e| DataError::Parse(e.to_string()))?;
        Dataset::new(values, variables)
    }

    pub fn read_csv(path: &Path) -> Result<Self, IoError> {
        let f = std::fs::File::open(path).map_err(|e| IoError::file(path, e))?;
        Dataset::from_csv_reader(std::io::BufReader::new(f)).map_err(|e| IoError::Format {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), IoError> {
        write_atomic(path, self.to_csv_string().as_bytes())
    }
}

/// Groups runs of `name.0, name.1, …` into one variable.
fn spans_from_header(header: &[String]) -> Vec<Variable> {
    fn split(col: &str) -> Option<(&str, usize)> {
        let (base, idx) = col.rsplit_once('.')?;
        let k = idx.parse().ok()?;
        (!base.is_empty()).then_some((base, k))
    }
    let mut vars: Vec<Variable> = Vec::new();
    for (c, col) in header.iter().enumerate() {
        if let Some((base, k)) = split(col) {
            if k > 0 {
                if let Some(last) = vars.last_mut() {
                    if last.name == base && last.len == k && last.start + last.len == c {
                        last.len += 1;
                        continue;
                    }
                }
            } else {
                vars.push(Variable {
                    name: base.to_string(),
                    start: c,
                    len: 1,
                });
                continue;
            }
        }
        vars.push(Variable {
            name: col.clone(),
            start: c,
            len: 1,
        });
    }
    vars
}
