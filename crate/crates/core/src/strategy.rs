//! Observation matrices for causal discovery.
//!
//! Strategy S1 stacks raw degradation values; strategy S2 stacks per-unit
//! degradation increments, which removes the degradation trend while keeping
//! the causal information carried by simultaneous changes.

use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::dataset::DegradationDataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    S1,
    S2,
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Strategy::S1 => f.write_str("s1"),
            Strategy::S2 => f.write_str("s2"),
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "s1" => Ok(Strategy::S1),
            "s2" => Ok(Strategy::S2),
            other => Err(Error::Config(format!(
                "unknown strategy {other:?}; expected one of: s1, s2"
            ))),
        }
    }
}

/// observations x variables matrix; the sole input format for the
/// non-temporal discovery algorithms.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    labels: Vec<String>,
    strategy: Strategy,
    values: Array2<f64>,
}

impl DataMatrix {
    pub fn from_parts(labels: Vec<String>, strategy: Strategy, values: Array2<f64>) -> Result<Self> {
        if labels.len() != values.ncols() {
            return Err(Error::Input(format!(
                "{} labels for {} columns",
                labels.len(),
                values.ncols()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("matrix contains non-finite values".into()));
        }
        Ok(Self {
            labels,
            strategy,
            values,
        })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    pub fn column(&self, j: usize) -> ArrayView1<'_, f64> {
        self.values.column(j)
    }

    /// Per-column standardization to zero mean and unit variance. Optional:
    /// discovery runs on unstandardized data unless asked otherwise, but
    /// large scale disparity between parameters can make thresholded methods
    /// meaningless without it.
    pub fn standardized(&self) -> Result<DataMatrix> {
        let n = self.nrows() as f64;
        let mut values = self.values.clone();
        for j in 0..self.ncols() {
            let col = self.values.column(j);
            let mean = col.sum() / n;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            if var <= 0.0 {
                return Err(Error::Degenerate(format!(
                    "column {} ({}) has zero variance",
                    j, self.labels[j]
                )));
            }
            let sd = var.sqrt();
            values.column_mut(j).mapv_inplace(|v| (v - mean) / sd);
        }
        DataMatrix::from_parts(self.labels.clone(), self.strategy, values)
    }

    /// CSV with the labels as header, one observation per row. The strategy
    /// tag goes into a sidecar `<path>.meta.json`.
    pub fn write_csv_path(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))?;
        let meta = serde_json::json!({
            "strategy": self.strategy,
            "rows": self.nrows(),
            "cols": self.ncols(),
        });
        let meta_path = sidecar_path(path);
        std::fs::write(meta_path, serde_json::to_string_pretty(&meta)?)?;
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(&self.labels)?;
        for i in 0..self.nrows() {
            let rec: Vec<String> = (0..self.ncols())
                .map(|j| format!("{}", self.values[(i, j)]))
                .collect();
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R, strategy: Strategy) -> Result<DataMatrix> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
        let labels: Vec<String> = rdr.headers()?.iter().map(|s| s.to_string()).collect();
        let k = labels.len();
        let mut data = Vec::new();
        let mut rows = 0;
        for (idx, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() != k {
                return Err(Error::Parse {
                    line: idx + 2,
                    msg: format!("expected {k} fields, got {}", rec.len()),
                });
            }
            for f in rec.iter() {
                data.push(f.parse::<f64>().map_err(|_| Error::Parse {
                    line: idx + 2,
                    msg: format!("bad value: {f:?}"),
                })?);
            }
            rows += 1;
        }
        let values = Array2::from_shape_vec((rows, k), data)
            .map_err(|e| Error::Input(e.to_string()))?;
        DataMatrix::from_parts(labels, strategy, values)
    }
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    std::path::PathBuf::from(s)
}

/// Strategy S1: raw values, unit-major and time-minor row order. Row count is
/// the total number of measurements (n*m for a rectangular dataset).
pub fn build_s1(d: &DegradationDataset) -> Result<DataMatrix> {
    if d.n_units() == 0 || d.total_rows() == 0 {
        return Err(Error::Input("empty dataset".into()));
    }
    let k = d.k();
    let rows = d.total_rows();
    let mut values = Array2::zeros((rows, k));
    let mut r = 0;
    for u in d.units() {
        for j in 0..u.times.len() {
            for l in 0..k {
                values[(r, l)] = u.values[(j, l)];
            }
            r += 1;
        }
    }
    DataMatrix::from_parts(d.labels().to_vec(), Strategy::S1, values)
}

/// Strategy S2: per-unit degradation increments x_j - x_{j-1}, j = 2..m.
/// Increments never span unit boundaries; row count is n*(m-1) for a
/// rectangular dataset.
pub fn build_s2(d: &DegradationDataset) -> Result<DataMatrix> {
    if d.n_units() == 0 {
        return Err(Error::Input("empty dataset".into()));
    }
    if d.units().iter().any(|u| u.times.len() < 2) {
        return Err(Error::Input(
            "every unit needs at least 2 measurements for increments".into(),
        ));
    }
    let k = d.k();
    let rows: usize = d.units().iter().map(|u| u.times.len() - 1).sum();
    let mut values = Array2::zeros((rows, k));
    let mut r = 0;
    for u in d.units() {
        for j in 1..u.times.len() {
            for l in 0..k {
                values[(r, l)] = u.values[(j, l)] - u.values[(j - 1, l)];
            }
            r += 1;
        }
    }
    DataMatrix::from_parts(d.labels().to_vec(), Strategy::S2, values)
}

pub fn build(d: &DegradationDataset, strategy: Strategy) -> Result<DataMatrix> {
    match strategy {
        Strategy::S1 => build_s1(d),
        Strategy::S2 => build_s2(d),
    }
}
