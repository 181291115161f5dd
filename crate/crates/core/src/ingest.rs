//! Turbofan sensor-data ingestion: whitespace-format parsing, degradation
//! window extraction and unit-level bootstrap resampling.

use std::io::{BufRead, BufReader};
use std::path::Path;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::{DegradationDataset, UnitPath};
use crate::error::{Error, Result};
use crate::graph::CausalGraph;
use crate::seeds;

/// Labels of the 14 sensors that show degradation, in file order.
pub const CMAPSS_SENSOR_LABELS: [&str; 14] = [
    "T24", "T30", "T50", "P30", "Nf", "Nc", "Ps30", "phi", "NRf", "NRc", "BPR", "htBleed", "W31",
    "W32",
];

/// 1-based ids of the sensors that stay constant and are dropped.
pub const CMAPSS_EXCLUDED_SENSORS: [usize; 7] = [1, 5, 6, 10, 16, 18, 19];

/// 1-based ids of the kept sensors, aligned with [`CMAPSS_SENSOR_LABELS`].
pub const CMAPSS_KEPT_SENSORS: [usize; 14] = [2, 3, 4, 7, 8, 9, 11, 12, 13, 14, 15, 17, 20, 21];

const CMAPSS_COLUMNS: usize = 26; // unit, cycle, 3 settings, 21 sensors

/// Parses a training file in the standard whitespace layout
/// (unit, cycle, 3 operational settings, 21 sensors) into a 14-parameter
/// dataset keyed by unit and cycle. The column mapping is verified at load
/// time by asserting that every excluded sensor is constant within each unit
/// (sample standard deviation at most 1e-9 of the mean magnitude).
pub fn parse_cmapss(path: &Path) -> Result<DegradationDataset> {
    let file = std::fs::File::open(path)?;
    let reader = BufReader::new(file);

    struct RawUnit {
        id: u32,
        cycles: Vec<f64>,
        sensors: Vec<[f64; 21]>,
    }
    let mut units: Vec<RawUnit> = Vec::new();

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != CMAPSS_COLUMNS {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("expected {CMAPSS_COLUMNS} columns, got {}", fields.len()),
            });
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("bad number: {s:?}"),
            })
        };
        let unit_f = parse(fields[0])?;
        if unit_f.fract() != 0.0 || unit_f < 1.0 {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("bad unit id: {unit_f}"),
            });
        }
        let unit_id = unit_f as u32;
        let cycle = parse(fields[1])?;
        let mut sensors = [0.0f64; 21];
        for s in 0..21 {
            sensors[s] = parse(fields[5 + s])?;
        }

        match units.last_mut() {
            Some(u) if u.id == unit_id => {
                u.cycles.push(cycle);
                u.sensors.push(sensors);
            }
            _ => {
                if units.iter().any(|u| u.id == unit_id) {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: format!("unit {unit_id} rows are not contiguous"),
                    });
                }
                units.push(RawUnit {
                    id: unit_id,
                    cycles: vec![cycle],
                    sensors: vec![sensors],
                });
            }
        }
    }
    if units.is_empty() {
        return Err(Error::Input("no records in file".into()));
    }

    for u in &units {
        // Cycles must be consecutive integers starting at 1.
        for (j, &c) in u.cycles.iter().enumerate() {
            if c != (j + 1) as f64 {
                return Err(Error::Input(format!(
                    "unit {}: cycle column is not consecutive from 1 (found {c} at position {})",
                    u.id,
                    j + 1
                )));
            }
        }
        // The excluded sensors must really be constant per unit.
        for &sensor in &CMAPSS_EXCLUDED_SENSORS {
            let col: Vec<f64> = u.sensors.iter().map(|row| row[sensor - 1]).collect();
            let n = col.len() as f64;
            let mean = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            let tol = 1e-9 * mean.abs();
            if var.sqrt() > tol {
                return Err(Error::Input(format!(
                    "column mapping validation failed: sensor {sensor} varies within unit {} \
                     (sd {:.3e} > {:.3e})",
                    u.id,
                    var.sqrt(),
                    tol
                )));
            }
        }
    }

    let dataset_units: Vec<UnitPath> = units
        .into_iter()
        .map(|u| {
            let m = u.cycles.len();
            let mut values = Array2::zeros((m, 14));
            for (j, row) in u.sensors.iter().enumerate() {
                for (l, &sensor) in CMAPSS_KEPT_SENSORS.iter().enumerate() {
                    values[(j, l)] = row[sensor - 1];
                }
            }
            UnitPath {
                id: u.id,
                times: u.cycles,
                values,
            }
        })
        .collect();

    DegradationDataset::new(
        CMAPSS_SENSOR_LABELS.iter().map(|s| s.to_string()).collect(),
        dataset_units,
        None,
    )
}

/// Keeps the last `w` measurements of every unit on a shared relative grid
/// 1..=w. Value order and values are preserved exactly.
pub fn extract_last_window(d: &DegradationDataset, w: usize) -> Result<DegradationDataset> {
    if w == 0 {
        return Err(Error::Window("window length must be positive".into()));
    }
    let mut units = Vec::with_capacity(d.n_units());
    for u in d.units() {
        let m = u.times.len();
        if m < w {
            return Err(Error::Window(format!(
                "unit {} has {m} measurements, fewer than the window of {w}",
                u.id
            )));
        }
        let start = m - w;
        let mut values = Array2::zeros((w, d.k()));
        for j in 0..w {
            for l in 0..d.k() {
                values[(j, l)] = u.values[(start + j, l)];
            }
        }
        units.push(UnitPath {
            id: u.id,
            times: (1..=w).map(|t| t as f64).collect(),
            values,
        });
    }
    DegradationDataset::new(d.labels().to_vec(), units, d.seed())
}

/// Draws `repeats` resamples of `floor(fraction * n)` distinct units each,
/// without replacement, preserving original unit order within a resample.
/// Deterministic given the seed.
pub fn bootstrap_units(
    d: &DegradationDataset,
    fraction: f64,
    repeats: usize,
    seed: u64,
) -> Result<Vec<DegradationDataset>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Config(format!("fraction {fraction} outside (0, 1]")));
    }
    if d.n_units() < 2 {
        return Err(Error::Config("bootstrap needs at least 2 units".into()));
    }
    let count = (fraction * d.n_units() as f64).floor() as usize;
    if count == 0 {
        return Err(Error::Config(format!(
            "fraction {fraction} selects no units out of {}",
            d.n_units()
        )));
    }
    let mut out = Vec::with_capacity(repeats);
    for rep in 0..repeats {
        let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(seed, &[rep as u64]));
        let mut indices = rand::seq::index::sample(&mut rng, d.n_units(), count).into_vec();
        indices.sort_unstable();
        out.push(d.select_units(&indices)?);
    }
    Ok(out)
}

/// Majority-vote aggregation of bootstrap graphs: an adjacency is kept when
/// present in more than half of the replicates; it is drawn directed only
/// when one direction itself holds a strict majority, undirected otherwise.
pub fn majority_vote_graph(graphs: &[CausalGraph]) -> Result<CausalGraph> {
    let Some(first) = graphs.first() else {
        return Err(Error::Metric("no graphs to aggregate".into()));
    };
    let k = first.k();
    for g in graphs {
        if g.k() != k || g.labels() != first.labels() {
            return Err(Error::Comparison("graphs disagree on variables".into()));
        }
    }
    let total = graphs.len();
    let mut edges = Vec::new();
    for i in 0..k {
        for j in (i + 1)..k {
            let present = graphs.iter().filter(|g| g.adjacent(i, j)).count();
            if 2 * present <= total {
                continue;
            }
            let fwd = graphs.iter().filter(|g| g.is_directed_edge(i, j)).count();
            let rev = graphs.iter().filter(|g| g.is_directed_edge(j, i)).count();
            if 2 * fwd > total {
                edges.push((i, j));
            } else if 2 * rev > total {
                edges.push((j, i));
            } else {
                edges.push((i, j));
                edges.push((j, i));
            }
        }
    }
    CausalGraph::from_edges(first.labels().to_vec(), &edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    /// Small synthetic file in the training layout: `units` engines with
    /// linearly drifting kept sensors and constant excluded sensors.
    fn write_synthetic(path: &Path, units: usize, cycles_per_unit: &[usize]) {
        let mut f = std::fs::File::create(path).unwrap();
        for u in 0..units {
            for c in 1..=cycles_per_unit[u] {
                let mut fields: Vec<String> = vec![format!("{}", u + 1), format!("{c}")];
                for s in 0..3 {
                    fields.push(format!("{:.4}", 0.001 * s as f64));
                }
                for sensor in 1..=21usize {
                    let v = if CMAPSS_EXCLUDED_SENSORS.contains(&sensor) {
                        100.0 + sensor as f64
                    } else {
                        // Unit- and sensor-specific drift.
                        10.0 * sensor as f64 + 0.1 * u as f64 + 0.05 * c as f64 * sensor as f64
                    };
                    fields.push(format!("{v:.6}"));
                }
                writeln!(f, "{}", fields.join(" ")).unwrap();
            }
        }
    }

    #[test]
    fn parses_synthetic_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("train.txt");
        write_synthetic(&path, 3, &[50, 60, 55]);
        let d = parse_cmapss(&path).unwrap();
        assert_eq!(d.n_units(), 3);
        assert_eq!(d.k(), 14);
        assert_eq!(d.labels()[0], "T24");
        assert_eq!(d.labels()[13], "W32");
        assert_eq!(d.units()[1].times.len(), 60);
        // Cycle grid 1..m.
        assert_eq!(d.units()[0].times[0], 1.0);
        assert_eq!(d.units()[0].times[49], 50.0);
        // T24 is sensor 2.
        assert!((d.units()[0].values[(0, 0)] - (20.0 + 0.0 + 0.05 * 1.0 * 2.0)).abs() < 1e-9);
    }

    #[test]
    fn rejects_wrong_column_count() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.txt");
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "{}", vec!["1.0"; 22].join(" ")).unwrap();
        let err = parse_cmapss(&path).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn rejects_varying_excluded_sensor() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.txt");
        let mut f = std::fs::File::create(&path).unwrap();
        for c in 1..=5 {
            let mut fields: Vec<String> = vec!["1".into(), format!("{c}")];
            fields.extend(vec!["0.0".to_string(); 3]);
            for sensor in 1..=21usize {
                // Sensor 1 should be constant but varies here.
                let v = if sensor == 1 { c as f64 } else { 5.0 };
                fields.push(format!("{v}"));
            }
            writeln!(f, "{}", fields.join(" ")).unwrap();
        }
        let err = parse_cmapss(&path).unwrap_err();
        assert!(err.to_string().contains("sensor 1"), "{err}");
    }

    #[test]
    fn window_extraction() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("train.txt");
        write_synthetic(&path, 2, &[50, 45]);
        let d = parse_cmapss(&path).unwrap();

        let w = extract_last_window(&d, 40).unwrap();
        assert!(w.is_rectangular());
        assert_eq!(w.measurements_per_unit().unwrap(), 40);
        assert_eq!(w.units()[0].times[0], 1.0);
        assert_eq!(w.units()[0].times[39], 40.0);
        // Suffix values preserved exactly.
        assert_eq!(
            w.units()[0].values[(39, 5)],
            d.units()[0].values[(49, 5)]
        );
        assert_eq!(
            w.units()[1].values[(0, 2)],
            d.units()[1].values[(5, 2)]
        );

        // Window equal to the full length of a unit keeps it whole, and a
        // second extraction at the same width is the identity.
        let rect = extract_last_window(&d, 45).unwrap();
        assert_eq!(rect.measurements_per_unit().unwrap(), 45);
        let again = extract_last_window(&rect, 45).unwrap();
        assert_eq!(again, rect);

        assert!(extract_last_window(&d, 0).is_err());
        let err = extract_last_window(&d, 46).unwrap_err();
        assert!(err.to_string().contains("unit 2"), "{err}");
    }

    #[test]
    fn bootstrap_determinism_and_sizes() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("train.txt");
        write_synthetic(&path, 10, &[30; 10]);
        let d = parse_cmapss(&path).unwrap();

        let a = bootstrap_units(&d, 0.8, 5, 7).unwrap();
        let b = bootstrap_units(&d, 0.8, 5, 7).unwrap();
        assert_eq!(a.len(), 5);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.n_units(), 8);
            let ids_x: Vec<u32> = x.units().iter().map(|u| u.id).collect();
            let ids_y: Vec<u32> = y.units().iter().map(|u| u.id).collect();
            assert_eq!(ids_x, ids_y);
        }

        // fraction = 1.0 reproduces the original unit set.
        let full = bootstrap_units(&d, 1.0, 1, 3).unwrap();
        let ids: Vec<u32> = full[0].units().iter().map(|u| u.id).collect();
        assert_eq!(ids, (1..=10).collect::<Vec<u32>>());

        assert!(bootstrap_units(&d, 0.0, 1, 3).is_err());
        assert!(bootstrap_units(&d, 0.05, 1, 3).is_err());
    }

    #[test]
    fn majority_vote_rules() {
        let labels = vec!["a".to_string(), "b".to_string(), "c".to_string()];
        let directed = CausalGraph::from_edges(labels.clone(), &[(0, 1)]).unwrap();
        let undirected = CausalGraph::from_edges(labels.clone(), &[(0, 1), (1, 0)]).unwrap();
        let empty = CausalGraph::empty(labels.clone());

        // Edge present in 2/3, one directed one undirected: kept undirected.
        let agg = majority_vote_graph(&[directed.clone(), undirected.clone(), empty.clone()])
            .unwrap();
        assert!(agg.is_undirected_edge(0, 1));

        // Directed in 2/3: kept directed.
        let agg =
            majority_vote_graph(&[directed.clone(), directed.clone(), undirected]).unwrap();
        assert!(agg.is_directed_edge(0, 1));

        // Present in only 1/3: dropped.
        let agg = majority_vote_graph(&[directed, empty.clone(), empty]).unwrap();
        assert_eq!(agg.edge_count(), 0);
    }
}
