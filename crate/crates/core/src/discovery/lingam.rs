//! Direct-LiNGAM: causal-order estimation for linear non-Gaussian models.
//!
//! At each step the most exogenous remaining variable is selected by
//! aggregating the pairwise likelihood-ratio statistic against all other
//! remaining variables (sum of squared negative parts; the true root scores
//! zero), then regressed out of the remainder. Once the full order is known,
//! each variable is regressed on its order predecessors in the original data
//! and edges with coefficient magnitude above the threshold are kept.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::graph::CausalGraph;
use crate::linalg::{design_with_intercept, ols};
use crate::stats::pairwise_lr_cols;
use crate::strategy::DataMatrix;

use super::config::DirectLingamConfig;

pub fn direct_lingam(m: &DataMatrix, cfg: &DirectLingamConfig) -> Result<CausalGraph> {
    let k = m.ncols();
    let rows = m.nrows();
    if rows < 20 {
        return Err(Error::TestInfeasible(format!(
            "direct-lingam needs at least 20 rows, got {rows}"
        )));
    }

    // Working copies that get residualized as roots are extracted.
    let mut work: Vec<Vec<f64>> = (0..k).map(|j| m.column(j).to_vec()).collect();
    let mut remaining: Vec<usize> = (0..k).collect();
    let mut order: Vec<usize> = Vec::with_capacity(k);

    while remaining.len() > 1 {
        let mut best: Option<(f64, usize)> = None;
        for &cand in &remaining {
            let mut miss = 0.0;
            for &other in &remaining {
                if other == cand {
                    continue;
                }
                let stat = pairwise_lr_cols(&work[cand], &work[other])?;
                miss += stat.min(0.0).powi(2);
            }
            if best.as_ref().map_or(true, |(b, _)| miss < *b) {
                best = Some((miss, cand));
            }
        }
        let root = best.expect("nonempty remaining").1;
        order.push(root);
        remaining.retain(|&v| v != root);

        // Regress the root out of every remaining variable.
        let root_col = work[root].clone();
        let n = root_col.len() as f64;
        let mean_r = root_col.iter().sum::<f64>() / n;
        let var_r = root_col.iter().map(|v| (v - mean_r).powi(2)).sum::<f64>() / n;
        if var_r <= 0.0 {
            return Err(Error::Degenerate("zero-variance working column".into()));
        }
        for &j in &remaining {
            let mean_j = work[j].iter().sum::<f64>() / n;
            let cov = work[j]
                .iter()
                .zip(&root_col)
                .map(|(a, b)| (a - mean_j) * (b - mean_r))
                .sum::<f64>()
                / n;
            let beta = cov / var_r;
            for (v, r) in work[j].iter_mut().zip(&root_col) {
                *v -= beta * r;
            }
        }
    }
    order.push(remaining[0]);

    // Fit coefficients of each variable on its order predecessors in the
    // original data; keep edges above the threshold.
    let mut edges = Vec::new();
    for pos in 1..k {
        let child = order[pos];
        let preds = &order[..pos];
        let x = design_with_intercept(m.values(), preds);
        let y = DVector::from_vec(m.column(child).to_vec());
        let fit = ols(&x, &y)?;
        for (idx, &p) in preds.iter().enumerate() {
            if fit.coefs[idx + 1].abs() > cfg.edge_threshold {
                edges.push((p, child));
            }
        }
    }
    CausalGraph::from_edges(m.labels().to_vec(), &edges)
}
