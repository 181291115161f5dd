//! Pairwise Granger causality on raw degradation series.
//!
//! For each ordered pair (i, j) an F-test asks whether lags of series i
//! improve the autoregression of series j beyond j's own lags. Designs are
//! built per unit (lags never span unit boundaries) and pooled into one
//! regression, which reduces to the classic single-series test at n = 1.
//! An edge i -> j is drawn when the pooled p-value falls below alpha, so the
//! output may contain symmetric detections and is not constrained to a DAG.

use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

use crate::dataset::DegradationDataset;
use crate::error::{Error, Result};
use crate::graph::CausalGraph;
use crate::linalg::ols;

use super::config::GrangerConfig;

/// Pooled lagged design for effect column `j` with optional cause column.
/// Rows start at `start_lag` within each unit so lag-order comparisons can
/// share a common sample.
fn lagged_design(
    d: &DegradationDataset,
    effect: usize,
    cause: Option<usize>,
    p: usize,
    start_lag: usize,
) -> (DMatrix<f64>, DVector<f64>) {
    let mut rows = 0;
    for u in d.units() {
        rows += u.times.len().saturating_sub(start_lag);
    }
    let ncols = 1 + p + if cause.is_some() { p } else { 0 };
    let mut x = DMatrix::zeros(rows, ncols);
    let mut y = DVector::zeros(rows);
    let mut r = 0;
    for u in d.units() {
        for t in start_lag..u.times.len() {
            y[r] = u.values[(t, effect)];
            x[(r, 0)] = 1.0;
            for lag in 1..=p {
                x[(r, lag)] = u.values[(t - lag, effect)];
            }
            if let Some(c) = cause {
                for lag in 1..=p {
                    x[(r, p + lag)] = u.values[(t - lag, c)];
                }
            }
            r += 1;
        }
    }
    (x, y)
}

/// AIC of the restricted autoregression at lag p on the common sample.
fn restricted_aic(d: &DegradationDataset, effect: usize, p: usize, start_lag: usize) -> Result<f64> {
    let (x, y) = lagged_design(d, effect, None, p, start_lag);
    let n = y.len() as f64;
    let fit = ols(&x, &y)?;
    Ok(n * (fit.rss / n).max(1e-300).ln() + 2.0 * (p + 1) as f64)
}

pub fn granger_pairwise(d: &DegradationDataset, cfg: &GrangerConfig) -> Result<CausalGraph> {
    let k = d.k();
    if cfg.max_lag == 0 {
        return Err(Error::Config("max_lag must be positive".into()));
    }
    if !(0.0..=1.0).contains(&cfg.alpha) {
        return Err(Error::Config(format!("alpha {} outside [0,1]", cfg.alpha)));
    }

    let min_len = d
        .units()
        .iter()
        .map(|u| u.times.len())
        .min()
        .ok_or_else(|| Error::Input("empty dataset".into()))?;

    let mut edges = Vec::new();
    for effect in 0..k {
        // Lag selection happens once per effect series; the restricted model
        // does not depend on the cause.
        let p = match cfg.aic_max_lag {
            None => cfg.max_lag,
            Some(cap) => {
                let cap = cap.max(1);
                if min_len <= 3 * cap {
                    return Err(Error::TestInfeasible(format!(
                        "series of length {min_len} too short for lag selection up to {cap}"
                    )));
                }
                let mut best = (f64::INFINITY, 1);
                for cand in 1..=cap {
                    let aic = restricted_aic(d, effect, cand, cap)?;
                    if aic < best.0 {
                        best = (aic, cand);
                    }
                }
                best.1
            }
        };
        if min_len <= 3 * p {
            return Err(Error::TestInfeasible(format!(
                "series of length {min_len} too short for lag order {p}"
            )));
        }

        for cause in 0..k {
            if cause == effect {
                continue;
            }
            let (xr, y) = lagged_design(d, effect, None, p, p);
            let (xu, yu) = lagged_design(d, effect, Some(cause), p, p);
            let restricted = ols(&xr, &y)?;
            let unrestricted = ols(&xu, &yu)?;
            let n = y.len() as f64;
            let df2 = n - (2 * p + 1) as f64;
            if df2 <= 0.0 {
                return Err(Error::TestInfeasible(
                    "not enough pooled rows for the F-test".into(),
                ));
            }
            let num = ((restricted.rss - unrestricted.rss) / p as f64).max(0.0);
            let den = unrestricted.rss / df2;
            let p_value = if den <= 0.0 {
                0.0
            } else {
                let f = num / den;
                let dist = FisherSnedecor::new(p as f64, df2)
                    .map_err(|e| Error::Numerical(format!("F distribution: {e}")))?;
                1.0 - dist.cdf(f)
            };
            if p_value < cfg.alpha {
                edges.push((cause, effect));
            }
        }
    }

    // Symmetric detections are kept as-is (rendered as an undirected pair).
    CausalGraph::from_edges(d.labels().to_vec(), &edges)
}
