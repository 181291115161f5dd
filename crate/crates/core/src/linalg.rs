//! Small dense least-squares helper shared by the statistical kernels,
//! Direct-LiNGAM and the Granger baseline.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};

pub(crate) struct OlsFit {
    /// Coefficients in design-column order.
    pub coefs: DVector<f64>,
    pub fitted: DVector<f64>,
    pub rss: f64,
}

/// Ordinary least squares via Cholesky on the normal equations. A rank
/// deficient design is reported as a numerical error rather than solved in a
/// minimum-norm sense; the callers treat that as degenerate input.
pub(crate) fn ols(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<OlsFit> {
    let xtx = x.transpose() * x;
    let xty = x.transpose() * y;
    let chol = Cholesky::new(xtx)
        .ok_or_else(|| Error::Numerical("singular regression design".into()))?;
    let coefs = chol.solve(&xty);
    let fitted = x * &coefs;
    let rss = (y - &fitted).norm_squared();
    Ok(OlsFit { coefs, fitted, rss })
}

/// Design matrix from data columns with a leading intercept column.
pub(crate) fn design_with_intercept(
    values: &ndarray::Array2<f64>,
    cols: &[usize],
) -> DMatrix<f64> {
    let n = values.nrows();
    let mut x = DMatrix::zeros(n, cols.len() + 1);
    for i in 0..n {
        x[(i, 0)] = 1.0;
        for (c, &col) in cols.iter().enumerate() {
            x[(i, c + 1)] = values[(i, col)];
        }
    }
    x
}
