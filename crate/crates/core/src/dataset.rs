//! Multivariate degradation datasets: `k` performance parameters measured on
//! `n` units over a time grid.
//!
//! Simulated datasets are always rectangular (every unit shares the grid
//! `t_j`); real datasets may carry a different measurement count per unit
//! until a window extraction makes them rectangular.

use std::io::{Read, Write};
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};

/// One unit's degradation paths: an `m x k` value block over its time stamps.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitPath {
    pub id: u32,
    pub times: Vec<f64>,
    /// `m x k`: row j holds the k parameter values at `times[j]`.
    pub values: Array2<f64>,
}

/// Measurements `x[l][i][j]` for parameter l, unit i, time j.
#[derive(Debug, Clone, PartialEq)]
pub struct DegradationDataset {
    labels: Vec<String>,
    units: Vec<UnitPath>,
    /// Seed the dataset was generated from, when it came from the simulator.
    seed: Option<u64>,
}

impl DegradationDataset {
    pub fn new(labels: Vec<String>, units: Vec<UnitPath>, seed: Option<u64>) -> Result<Self> {
        let k = labels.len();
        if k == 0 {
            return Err(Error::Input("dataset needs at least one parameter".into()));
        }
        for u in &units {
            if u.values.ncols() != k {
                return Err(Error::Input(format!(
                    "unit {} has {} columns, expected {k}",
                    u.id,
                    u.values.ncols()
                )));
            }
            if u.values.nrows() != u.times.len() {
                return Err(Error::Input(format!(
                    "unit {} has {} rows but {} times",
                    u.id,
                    u.values.nrows(),
                    u.times.len()
                )));
            }
            if u.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::Input(format!("unit {} contains non-finite values", u.id)));
            }
        }
        Ok(Self {
            labels,
            units,
            seed,
        })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.labels.len()
    }

    pub fn n_units(&self) -> usize {
        self.units.len()
    }

    pub fn units(&self) -> &[UnitPath] {
        &self.units
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// All units share one measurement count (and, for simulated data, grid).
    pub fn is_rectangular(&self) -> bool {
        let Some(first) = self.units.first() else {
            return true;
        };
        self.units.iter().all(|u| u.times == first.times)
    }

    /// Measurements per unit for rectangular datasets.
    pub fn measurements_per_unit(&self) -> Result<usize> {
        if !self.is_rectangular() {
            return Err(Error::Input("dataset is not rectangular".into()));
        }
        Ok(self.units.first().map_or(0, |u| u.times.len()))
    }

    pub fn total_rows(&self) -> usize {
        self.units.iter().map(|u| u.times.len()).sum()
    }

    /// Dataset restricted to the given unit indices, in the given order.
    pub fn select_units(&self, indices: &[usize]) -> Result<DegradationDataset> {
        let mut units = Vec::with_capacity(indices.len());
        for &i in indices {
            let u = self
                .units
                .get(i)
                .ok_or_else(|| Error::Input(format!("unit index {i} out of range")))?;
            units.push(u.clone());
        }
        DegradationDataset::new(self.labels.clone(), units, self.seed)
    }

    /// Long-form CSV: header `unit,time,<label1>,...,<labelk>`, one row per
    /// measurement time. f64 formatting is shortest-round-trip, so reading
    /// the file back reproduces the values bit-exactly.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let mut header = vec!["unit".to_string(), "time".to_string()];
        header.extend(self.labels.iter().cloned());
        wtr.write_record(&header)?;
        for u in &self.units {
            for (j, &t) in u.times.iter().enumerate() {
                let mut rec = vec![u.id.to_string(), format!("{t}")];
                for l in 0..self.k() {
                    rec.push(format!("{}", u.values[(j, l)]));
                }
                wtr.write_record(&rec)?;
            }
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn write_csv_path(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn read_csv<R: Read>(r: R) -> Result<DegradationDataset> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
        let header = rdr.headers()?.clone();
        if header.len() < 3 || &header[0] != "unit" || &header[1] != "time" {
            return Err(Error::Input(
                "dataset CSV must start with columns unit,time".into(),
            ));
        }
        let labels: Vec<String> = header.iter().skip(2).map(|s| s.to_string()).collect();
        let k = labels.len();

        let mut units: Vec<UnitPath> = Vec::new();
        let mut current: Option<(u32, Vec<f64>, Vec<f64>)> = None;
        for (idx, rec) in rdr.records().enumerate() {
            let line = idx + 2;
            let rec = rec?;
            if rec.len() != k + 2 {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected {} fields, got {}", k + 2, rec.len()),
                });
            }
            let parse = |field: &str, what: &str| -> Result<f64> {
                field.parse::<f64>().map_err(|_| Error::Parse {
                    line,
                    msg: format!("bad {what}: {field:?}"),
                })
            };
            let id: u32 = rec[0].parse().map_err(|_| Error::Parse {
                line,
                msg: format!("bad unit id: {:?}", &rec[0]),
            })?;
            let t = parse(&rec[1], "time")?;
            let row: Vec<f64> = rec
                .iter()
                .skip(2)
                .map(|f| parse(f, "value"))
                .collect::<Result<_>>()?;

            match &mut current {
                Some((cid, times, vals)) if *cid == id => {
                    times.push(t);
                    vals.extend_from_slice(&row);
                }
                _ => {
                    if let Some((cid, times, vals)) = current.take() {
                        units.push(finish_unit(cid, times, vals, k)?);
                    }
                    current = Some((id, vec![t], row));
                }
            }
        }
        if let Some((cid, times, vals)) = current.take() {
            units.push(finish_unit(cid, times, vals, k)?);
        }
        DegradationDataset::new(labels, units, None)
    }

    pub fn read_csv_path(path: &Path) -> Result<DegradationDataset> {
        let file = std::fs::File::open(path)?;
        Self::read_csv(std::io::BufReader::new(file))
    }
}

fn finish_unit(id: u32, times: Vec<f64>, vals: Vec<f64>, k: usize) -> Result<UnitPath> {
    let m = times.len();
    let values = Array2::from_shape_vec((m, k), vals)
        .map_err(|e| Error::Input(format!("unit {id}: {e}")))?;
    Ok(UnitPath { id, times, values })
}
