//! Statistical primitives behind the discovery algorithms: partial
//! correlation, Fisher's Z conditional-independence test, Gaussian BIC local
//! scores and the pairwise likelihood-ratio direction measure.

use nalgebra::DVector;
use ndarray::Array2;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::linalg::{design_with_intercept, ols};
use crate::strategy::DataMatrix;

/// Outcome of one conditional-independence test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CiTestResult {
    pub statistic: f64,
    pub p_value: f64,
    /// Independence decision at the significance level: `p_value > alpha`.
    pub independent: bool,
}

/// Residuals of `values[:, target]` after least-squares projection onto
/// `values[:, cond]` plus an intercept. The empty conditioning set leaves
/// centered values.
fn regression_residuals(values: &Array2<f64>, target: usize, cond: &[usize]) -> Result<Vec<f64>> {
    let n = values.nrows();
    let p = cond.len() + 1;
    if n <= p + 1 {
        return Err(Error::TestInfeasible(format!(
            "{n} rows cannot support regression on {} columns",
            cond.len()
        )));
    }
    let y: Vec<f64> = values.column(target).to_vec();
    if cond.is_empty() {
        let mean = y.iter().sum::<f64>() / n as f64;
        return Ok(y.iter().map(|v| v - mean).collect());
    }
    let x = design_with_intercept(values, cond);
    let yv = DVector::from_vec(y.clone());
    let fit = ols(&x, &yv).map_err(|_| {
        Error::Numerical(format!(
            "singular regression: conditioning block {cond:?} is rank deficient"
        ))
    })?;
    Ok((0..n).map(|i| y[i] - fit.fitted[i]).collect())
}

fn check_column_variance(m: &DataMatrix, col: usize) -> Result<()> {
    let v = m.column(col);
    let n = v.len() as f64;
    let mean = v.sum() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    if var <= 0.0 {
        return Err(Error::Degenerate(format!(
            "column {col} ({}) has zero variance",
            m.labels()[col]
        )));
    }
    Ok(())
}

fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    let mut sab = 0.0;
    for i in 0..a.len() {
        let da = a[i] - ma;
        let db = b[i] - mb;
        saa += da * da;
        sbb += db * db;
        sab += da * db;
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return Err(Error::Degenerate("zero-variance residual".into()));
    }
    Ok(sab / (saa * sbb).sqrt())
}

/// Partial correlation of columns `i` and `j` given the conditioning columns
/// `cond`: the Pearson correlation of the two regression residuals. Equals
/// the plain Pearson correlation when `cond` is empty.
pub fn partial_correlation(m: &DataMatrix, i: usize, j: usize, cond: &[usize]) -> Result<f64> {
    if i == j || cond.contains(&i) || cond.contains(&j) {
        return Err(Error::Input(format!(
            "conditioning set {cond:?} must exclude the tested pair ({i},{j})"
        )));
    }
    check_column_variance(m, i)?;
    check_column_variance(m, j)?;
    let ri = regression_residuals(m.values(), i, cond)?;
    let rj = regression_residuals(m.values(), j, cond)?;
    pearson(&ri, &rj)
}

/// Fisher's Z test of zero partial correlation:
/// `z = atanh(r) * sqrt(rows - |S| - 3)`, two-sided normal p-value.
///
/// A numerically degenerate `|r| >= 1` (duplicated columns) is clamped to a
/// dependence declaration with p = 0 instead of an infinite statistic.
pub fn fisher_z_test(r: f64, rows: usize, s_size: usize, alpha: f64) -> Result<CiTestResult> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Input(format!("alpha {alpha} outside [0,1]")));
    }
    let dof = rows as f64 - s_size as f64 - 3.0;
    if dof <= 0.0 {
        return Err(Error::TestInfeasible(format!(
            "{rows} rows cannot support a CI test with |S| = {s_size}"
        )));
    }
    if !r.is_finite() {
        return Err(Error::Numerical(format!("correlation {r} is not finite")));
    }
    if r.abs() >= 1.0 {
        return Ok(CiTestResult {
            statistic: f64::INFINITY.copysign(r),
            p_value: 0.0,
            independent: false,
        });
    }
    let z = r.atanh() * dof.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let p = 2.0 * (1.0 - normal.cdf(z.abs()));
    Ok(CiTestResult {
        statistic: z,
        p_value: p,
        independent: p > alpha,
    })
}

/// Gaussian linear-regression local score (higher is better):
/// `-rows * ln(RSS/rows) - |parents| * ln(rows)`, up to child-constant terms.
pub fn bic_local_score(m: &DataMatrix, child: usize, parents: &[usize]) -> Result<f64> {
    let rows = m.nrows();
    if rows <= parents.len() + 2 {
        return Err(Error::TestInfeasible(format!(
            "{rows} rows cannot score {} parents",
            parents.len()
        )));
    }
    let res = regression_residuals(m.values(), child, parents)?;
    let rss: f64 = res.iter().map(|r| r * r).sum();
    let n = rows as f64;
    // Perfect fits would take ln to -inf; floor keeps the score finite while
    // still dominating any penalty difference.
    let rss = rss.max(1e-300);
    Ok(-n * (rss / n).ln() - parents.len() as f64 * n.ln())
}

/// Score change from re-parenting `child`: BIC(after) - BIC(before).
/// Decomposable: depends only on the child column and the two parent sets.
pub fn bic_local_delta(
    m: &DataMatrix,
    child: usize,
    parents_before: &[usize],
    parents_after: &[usize],
) -> Result<f64> {
    let mut before: Vec<usize> = parents_before.to_vec();
    let mut after: Vec<usize> = parents_after.to_vec();
    before.sort_unstable();
    after.sort_unstable();
    if before == after {
        return Ok(0.0);
    }
    Ok(bic_local_score(m, child, &after)? - bic_local_score(m, child, &before)?)
}

// Maximum-entropy differential-entropy approximation constants
// (log-cosh and Gaussian-weighted moment nonlinearities).
const ENTROPY_K1: f64 = 79.047;
const ENTROPY_K2: f64 = 7.4129;
const ENTROPY_GAMMA: f64 = 0.37457;

fn approx_entropy(u: &[f64]) -> f64 {
    let n = u.len() as f64;
    let mean_log_cosh = u.iter().map(|v| v.cosh().ln()).sum::<f64>() / n;
    let mean_gauss = u.iter().map(|v| v * (-v * v / 2.0).exp()).sum::<f64>() / n;
    (1.0 + (2.0 * std::f64::consts::PI).ln()) / 2.0
        - ENTROPY_K1 * (mean_log_cosh - ENTROPY_GAMMA).powi(2)
        - ENTROPY_K2 * mean_gauss.powi(2)
}

fn standardize(v: &[f64]) -> Result<Vec<f64>> {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    if var <= 0.0 {
        return Err(Error::Degenerate("zero-variance column".into()));
    }
    let sd = var.sqrt();
    Ok(v.iter().map(|x| (x - mean) / sd).collect())
}

/// Pairwise likelihood-ratio direction statistic for the linear non-Gaussian
/// pairwise model: positive supports `i -> j`, negative the reverse.
/// Antisymmetric in (i, j) by construction.
pub fn pairwise_lr(m: &DataMatrix, i: usize, j: usize) -> Result<f64> {
    if i == j {
        return Err(Error::Input("pairwise statistic needs two distinct columns".into()));
    }
    pairwise_lr_cols(&m.column(i).to_vec(), &m.column(j).to_vec())
}

/// Column-slice variant of [`pairwise_lr`], used on residualized working
/// data during causal-order search.
pub fn pairwise_lr_cols(xi: &[f64], xj: &[f64]) -> Result<f64> {
    if xi.len() < 20 {
        return Err(Error::TestInfeasible(format!(
            "pairwise likelihood ratio needs at least 20 rows, got {}",
            xi.len()
        )));
    }
    let x = standardize(xi)?;
    let y = standardize(xj)?;
    let n = x.len() as f64;
    let rho = x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() / n;

    let res_x_on_y: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - rho * b).collect();
    let res_y_on_x: Vec<f64> = y.iter().zip(&x).map(|(b, a)| b - rho * a).collect();
    let norm_x = standardize(&res_x_on_y)?;
    let norm_y = standardize(&res_y_on_x)?;

    // Smaller entropy sum identifies the true factorization; the statistic is
    // the reverse-minus-forward difference so the supported direction is
    // positive.
    Ok((approx_entropy(&y) + approx_entropy(&norm_x))
        - (approx_entropy(&x) + approx_entropy(&norm_y)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strategy::Strategy;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal as NormalDist, Uniform};

    fn matrix(values: Array2<f64>) -> DataMatrix {
        let k = values.ncols();
        let labels = (1..=k).map(|i| format!("X{i}")).collect();
        DataMatrix::from_parts(labels, Strategy::S1, values).unwrap()
    }

    fn gaussian_pair(n: usize, seed: u64) -> DataMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = NormalDist::new(0.0, 1.0).unwrap();
        let mut values = Array2::zeros((n, 2));
        for i in 0..n {
            values[(i, 0)] = d.sample(&mut rng);
            values[(i, 1)] = d.sample(&mut rng);
        }
        matrix(values)
    }

    #[test]
    fn correlation_of_duplicated_column_is_one() {
        let mut values = Array2::zeros((50, 2));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for i in 0..50 {
            let v: f64 = rng.gen();
            values[(i, 0)] = v;
            values[(i, 1)] = v;
        }
        let m = matrix(values);
        let r = partial_correlation(&m, 0, 1, &[]).unwrap();
        assert_relative_eq!(r, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn independent_columns_have_small_correlation() {
        let m = gaussian_pair(10_000, 2);
        let r = partial_correlation(&m, 0, 1, &[]).unwrap();
        assert!(r.abs() < 0.05, "r = {r}");
    }

    #[test]
    fn conditioning_removes_common_cause() {
        // y = x + e and z = x: given x, the residuals are independent.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = NormalDist::new(0.0, 1.0).unwrap();
        let n = 10_000;
        let mut values = Array2::zeros((n, 3));
        for i in 0..n {
            let x = d.sample(&mut rng);
            values[(i, 0)] = x;
            values[(i, 1)] = x + d.sample(&mut rng);
            values[(i, 2)] = x;
        }
        let m = matrix(values);
        // Conditioning on a duplicate of x is rank deficient together with x,
        // so condition on x alone.
        let r = partial_correlation(&m, 1, 2, &[0]);
        // z - fitted(z|x) is exactly zero: degenerate residual.
        assert!(r.is_err());
        // The intended check from the contract: partial corr of y and a copy
        // of x given x itself is degenerate; with independent noise added to
        // the third column it is near zero.
        let mut values = Array2::zeros((n, 3));
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for i in 0..n {
            let x = d.sample(&mut rng);
            values[(i, 0)] = x;
            values[(i, 1)] = x + d.sample(&mut rng);
            values[(i, 2)] = x + d.sample(&mut rng);
        }
        let m = matrix(values);
        let r = partial_correlation(&m, 1, 2, &[0]).unwrap();
        assert!(r.abs() < 0.05, "r = {r}");
    }

    #[test]
    fn partial_correlation_is_symmetric_and_affine_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let d = NormalDist::new(0.0, 1.0).unwrap();
        let n = 500;
        let mut values = Array2::zeros((n, 3));
        for i in 0..n {
            let z = d.sample(&mut rng);
            values[(i, 0)] = z + d.sample(&mut rng);
            values[(i, 1)] = z + d.sample(&mut rng);
            values[(i, 2)] = z;
        }
        let m = matrix(values.clone());
        let r_ij = partial_correlation(&m, 0, 1, &[2]).unwrap();
        let r_ji = partial_correlation(&m, 1, 0, &[2]).unwrap();
        assert_relative_eq!(r_ij, r_ji, max_relative = 1e-12);

        let mut scaled = values;
        for i in 0..n {
            scaled[(i, 0)] = 3.5 * scaled[(i, 0)] - 100.0;
            scaled[(i, 2)] = -0.2 * scaled[(i, 2)] + 4.0;
        }
        let ms = matrix(scaled);
        let r_scaled = partial_correlation(&ms, 0, 1, &[2]).unwrap();
        assert_relative_eq!(r_ij, r_scaled, max_relative = 1e-9);
    }

    #[test]
    fn fisher_z_frozen_values() {
        // r = 0: z = 0, p = 1.
        let t = fisher_z_test(0.0, 100, 0, 0.05).unwrap();
        assert_eq!(t.statistic, 0.0);
        assert_abs_diff_eq!(t.p_value, 1.0, epsilon = 1e-12);
        assert!(t.independent);

        // r = 0.5, rows = 100, |S| = 0: z = atanh(0.5)*sqrt(97) = 5.4096.
        let t = fisher_z_test(0.5, 100, 0, 0.05).unwrap();
        assert_abs_diff_eq!(t.statistic, 5.4096, epsilon = 1e-3);
        assert!(t.p_value < 1e-6);
        assert!(!t.independent);

        // r = 0.1, rows = 50, |S| = 1: z = atanh(0.1)*sqrt(46) = 0.6805,
        // p = 0.4962.
        let t = fisher_z_test(0.1, 50, 1, 0.05).unwrap();
        assert_abs_diff_eq!(t.statistic, 0.6805, epsilon = 1e-3);
        assert_abs_diff_eq!(t.p_value, 0.4962, epsilon = 1e-3);
        assert!(t.independent);
    }

    #[test]
    fn fisher_z_clamps_and_guards() {
        let t = fisher_z_test(1.0, 100, 0, 0.05).unwrap();
        assert_eq!(t.p_value, 0.0);
        assert!(!t.independent);
        assert!(fisher_z_test(0.2, 4, 1, 0.05).is_err());
    }

    #[test]
    fn fisher_z_monotone_in_r() {
        let mut last_p = f64::INFINITY;
        for step in 0..50 {
            let r = step as f64 / 50.0;
            let t = fisher_z_test(r, 80, 2, 0.05).unwrap();
            assert!(t.p_value <= last_p + 1e-15);
            last_p = t.p_value;
        }
    }

    #[test]
    fn bic_delta_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let d = NormalDist::new(0.0, 1.0).unwrap();
        let n = 1000;
        let mut values = Array2::zeros((n, 3));
        for i in 0..n {
            let x = d.sample(&mut rng);
            values[(i, 0)] = x;
            values[(i, 1)] = 2.0 * x + 0.1 * d.sample(&mut rng);
            values[(i, 2)] = d.sample(&mut rng);
        }
        let m = matrix(values);

        // Identical parent sets: exactly zero.
        assert_eq!(bic_local_delta(&m, 1, &[0], &[0]).unwrap(), 0.0);

        // Adding the true parent is strongly positive; cross-check against
        // the closed form -n*ln(1 - r^2) - ln(n) computed from the plain
        // correlation.
        let delta = bic_local_delta(&m, 1, &[], &[0]).unwrap();
        assert!(delta > 0.0);
        let r = partial_correlation(&m, 1, 0, &[]).unwrap();
        let oracle = -(n as f64) * (1.0 - r * r).ln() - (n as f64).ln();
        assert_relative_eq!(delta, oracle, max_relative = 1e-8);
    }

    #[test]
    fn bic_irrelevant_parent_is_penalized() {
        // y independent of z: the penalty dominates with high probability.
        let mut negative = 0;
        let total = 40;
        for seed in 0..total {
            let m = gaussian_pair(1000, 100 + seed);
            let delta = bic_local_delta(&m, 0, &[], &[1]).unwrap();
            if delta < 0.0 {
                negative += 1;
            }
        }
        assert!(
            negative as f64 / total as f64 >= 0.95,
            "only {negative}/{total} negative"
        );
    }

    #[test]
    fn bic_deltas_telescope() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let d = NormalDist::new(0.0, 1.0).unwrap();
        let n = 400;
        let mut values = Array2::zeros((n, 4));
        for i in 0..n {
            for j in 0..4 {
                values[(i, j)] = d.sample(&mut rng);
            }
        }
        let m = matrix(values);
        let d01 = bic_local_delta(&m, 3, &[], &[0]).unwrap();
        let d12 = bic_local_delta(&m, 3, &[0], &[0, 1]).unwrap();
        let d02 = bic_local_delta(&m, 3, &[], &[0, 1]).unwrap();
        assert_relative_eq!(d01 + d12, d02, max_relative = 1e-8, epsilon = 1e-8);
    }

    /// Distance correlation, the residual-independence oracle for the
    /// direction statistic. O(n^2) time, O(n) memory.
    fn distance_correlation(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len();
        let nf = n as f64;
        let row_means = |v: &[f64]| -> (Vec<f64>, f64) {
            let mut rm = vec![0.0; n];
            for i in 0..n {
                let mut s = 0.0;
                for j in 0..n {
                    s += (v[i] - v[j]).abs();
                }
                rm[i] = s / nf;
            }
            let grand = rm.iter().sum::<f64>() / nf;
            (rm, grand)
        };
        let (ra, ga) = row_means(a);
        let (rb, gb) = row_means(b);
        let mut dcov = 0.0;
        let mut dvar_a = 0.0;
        let mut dvar_b = 0.0;
        for i in 0..n {
            for j in 0..n {
                let aa = (a[i] - a[j]).abs() - ra[i] - ra[j] + ga;
                let bb = (b[i] - b[j]).abs() - rb[i] - rb[j] + gb;
                dcov += aa * bb;
                dvar_a += aa * aa;
                dvar_b += bb * bb;
            }
        }
        (dcov / (dvar_a * dvar_b).sqrt().max(1e-300)).max(0.0).sqrt()
    }

    fn uniform_pair(n: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = Uniform::new(-1.0f64, 1.0);
        let x: Vec<f64> = (0..n).map(|_| u.sample(&mut rng)).collect();
        let y: Vec<f64> = x.iter().map(|&v| v + 0.3 * u.sample(&mut rng)).collect();
        (x, y)
    }

    #[test]
    fn pairwise_lr_direction_and_antisymmetry() {
        let n = 10_000;
        let (x, y) = uniform_pair(n, 9);
        let mut values = Array2::zeros((n, 2));
        for i in 0..n {
            values[(i, 0)] = x[i];
            values[(i, 1)] = y[i];
        }
        let m = matrix(values);
        let fwd = pairwise_lr(&m, 0, 1).unwrap();
        let rev = pairwise_lr(&m, 1, 0).unwrap();
        assert!(fwd > 0.0, "forward statistic {fwd}");
        assert!(rev < 0.0, "reverse statistic {rev}");
        assert_abs_diff_eq!(fwd, -rev, epsilon = 1e-8);

        // Residual-independence oracle: the regression residual is less
        // dependent on the regressor in the true direction.
        let sub = 2000;
        let xs = standardize(&x[..sub].to_vec()).unwrap();
        let ys = standardize(&y[..sub].to_vec()).unwrap();
        let rho = xs.iter().zip(&ys).map(|(a, b)| a * b).sum::<f64>() / sub as f64;
        let res_fwd: Vec<f64> = ys.iter().zip(&xs).map(|(b, a)| b - rho * a).collect();
        let res_rev: Vec<f64> = xs.iter().zip(&ys).map(|(a, b)| a - rho * b).collect();
        let dep_fwd = distance_correlation(&xs, &res_fwd);
        let dep_rev = distance_correlation(&ys, &res_rev);
        assert!(
            dep_fwd < dep_rev,
            "oracle disagrees: dcor fwd {dep_fwd} vs rev {dep_rev}"
        );
    }

    #[test]
    fn pairwise_lr_symmetric_case_is_small() {
        // Gaussian-to-itself is unidentifiable: statistic near zero.
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let d = NormalDist::new(0.0, 1.0).unwrap();
        let n = 10_000;
        let mut values = Array2::zeros((n, 2));
        for i in 0..n {
            let v = d.sample(&mut rng);
            values[(i, 0)] = v;
            values[(i, 1)] = 0.999_999 * v + 1e-6 * d.sample(&mut rng);
        }
        let m = matrix(values);
        let s = pairwise_lr(&m, 0, 1).unwrap();
        assert!(s.abs() < 0.01, "statistic {s}");
    }

    #[test]
    fn pairwise_lr_needs_rows() {
        let m = gaussian_pair(10, 11);
        assert!(pairwise_lr(&m, 0, 1).is_err());
    }
}
