use std::io::{Read, Write};

use super::{Matrix, NumericsError};
use crate::typing::TypeTag;

/// Named samples × features table.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub features: Vec<String>,
    rows: Matrix,
    /// Implicit type, when the dataset flows through a typed pipeline.
    pub tag: Option<TypeTag>,
}

impl Dataset {
    /// Checks the table invariants: at least one sample, one label per
    /// column, finite values only.
    pub fn new(name: impl Into<String>, features: Vec<String>, rows: Matrix) -> Result<Self, NumericsError> {
        let name = name.into();
        if rows.rows() == 0 {
            return Err(NumericsError::InvalidDataset(format!("`{name}` has no samples")));
        }
        if features.len() != rows.cols() {
            return Err(NumericsError::InvalidDataset(format!(
                "`{name}` has {} feature labels for {} columns",
                features.len(),
                rows.cols()
            )));
        }
        if let Some(pos) = rows.as_slice().iter().position(|x| !x.is_finite()) {
            return Err(NumericsError::InvalidDataset(format!(
                "`{name}` has a non-finite value at row {}, column {}",
                pos / rows.cols(),
                pos % rows.cols()
            )));
        }
        Ok(Self {
            name,
            features,
            rows,
            tag: None,
        })
    }

    /// Labels columns `<name>_0`, `<name>_1`, ...
    pub fn with_default_labels(name: impl Into<String>, rows: Matrix) -> Result<Self, NumericsError> {
        let name = name.into();
        let features = (0..rows.cols()).map(|j| format!("{name}_{j}")).collect();
        Self::new(name, features, rows)
    }

    pub fn with_tag(mut self, tag: Option<TypeTag>) -> Self {
        self.tag = tag;
        self
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn n_samples(&self) -> usize {
        self.rows.rows()
    }

    pub fn n_features(&self) -> usize {
        self.rows.cols()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.rows
    }

    pub fn into_matrix(self) -> Matrix {
        self.rows
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.rows.row(i)
    }

    pub fn read_csv(name: impl Into<String>, reader: impl Read) -> Result<Self, NumericsError> {
        let name = name.into();
        let bad = |msg: String| NumericsError::InvalidDataset(format!("`{name}`: {msg}"));
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let features: Vec<String> = rdr
            .headers()
            .map_err(|e| bad(e.to_string()))?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        let mut data = Vec::new();
        let mut n = 0;
        for (i, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| bad(e.to_string()))?;
            for (j, field) in record.iter().enumerate() {
                let v: f64 = field
                    .trim()
                    .parse()
                    .map_err(|_| bad(format!("row {}, column {}: not a number: {field:?}", i + 1, j + 1)))?;
                data.push(v);
            }
            n += 1;
        }
        let cols = features.len();
        if data.len() != n * cols {
            return Err(bad("rows differ in length from the header".into()));
        }
        Self::new(name, features, Matrix::from_vec(n, cols, data))
    }

    /// Writes a header row then one line per sample, using the shortest
    /// decimal representation that reads back to the same bits.
    pub fn write_csv(&self, writer: impl Write) -> Result<(), std::io::Error> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(&self.features)?;
        let mut buf = Vec::with_capacity(self.n_features());
        for row in self.rows.row_iter() {
            buf.clear();
            buf.extend(row.iter().map(|v| format!("{v:?}")));
            w.write_record(&buf)?;
        }
        w.flush()
    }

    pub fn to_csv_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_csv(&mut out).expect("writing to memory");
        out
    }
}
