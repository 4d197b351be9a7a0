use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ridge damping added to the squared singular values.
pub const RIDGE_LAMBDA: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
}

impl LinearModel {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.intercept + self.coefficients.iter().zip(row).map(|(b, x)| b * x).sum::<f64>()
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Vec<f64> {
        (0..x.nrows())
            .map(|i| self.intercept + (0..x.ncols()).map(|j| self.coefficients[j] * x[(i, j)]).sum::<f64>())
            .collect()
    }
}

/// Least squares with intercept. Solved on centred data through the SVD with
/// a tiny ridge term, so rank-deficient systems get the minimum-norm answer.
pub fn linreg_fit(x: &DMatrix<f64>, y: &[f64]) -> Result<LinearModel> {
    let (n, d) = x.shape();
    if n != y.len() {
        return Err(Error::InvalidInput(format!("{n} rows but {} targets", y.len())));
    }
    if n == 0 {
        return Err(Error::Insufficient("linear regression on zero rows".into()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Model("non-finite value in regression input".into()));
    }
    let y_mean = y.iter().sum::<f64>() / n as f64;
    if d == 0 {
        return Ok(LinearModel {
            coefficients: Vec::new(),
            intercept: y_mean,
        });
    }
    if x.iter().all(|v| *v == 0.0) {
        return Err(Error::Model("design matrix is all zeros".into()));
    }
    let x_means: Vec<f64> = (0..d).map(|j| x.column(j).sum() / n as f64).collect();
    let xc = DMatrix::from_fn(n, d, |i, j| x[(i, j)] - x_means[j]);
    let yc = DVector::from_iterator(n, y.iter().map(|v| v - y_mean));

    let svd = xc.svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    let uty = u.transpose() * yc;
    let mut scaled = DVector::zeros(svd.singular_values.len());
    for (i, s) in svd.singular_values.iter().enumerate() {
        scaled[i] = s / (s * s + RIDGE_LAMBDA) * uty[i];
    }
    let beta = v_t.transpose() * scaled;
    let coefficients: Vec<f64> = beta.iter().copied().collect();
    let intercept = y_mean - coefficients.iter().zip(&x_means).map(|(b, m)| b * m).sum::<f64>();
    Ok(LinearModel {
        coefficients,
        intercept,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn exact_line() {
        let x = DMatrix::from_column_slice(5, 1, &[0.0, 1.0, 2.0, 3.0, 10.0]);
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let m = linreg_fit(&x, &y).unwrap();
        assert!((m.coefficients[0] - 2.0).abs() < 1e-6);
        assert!((m.intercept - 1.0).abs() < 1e-6);
    }

    #[test]
    fn constant_target() {
        let x = DMatrix::from_column_slice(4, 1, &[1.0, 5.0, 2.0, 8.0]);
        let m = linreg_fit(&x, &[3.0; 4]).unwrap();
        assert!(m.coefficients[0].abs() < 1e-12);
        assert!((m.intercept - 3.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(linreg_fit(&DMatrix::zeros(4, 2), &[1.0, 2.0, 3.0, 4.0]).is_err());
        assert!(linreg_fit(&DMatrix::zeros(3, 1), &[1.0]).is_err());
    }

    #[test]
    fn underdetermined_gives_min_norm() {
        // duplicated column: weight splits evenly
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 2.0, 2.0, 4.0, 4.0]);
        let m = linreg_fit(&x, &[2.0, 4.0, 8.0]).unwrap();
        assert!((m.coefficients[0] - 1.0).abs() < 1e-6);
        assert!((m.coefficients[1] - 1.0).abs() < 1e-6);
    }

    /// Normal equations with an explicit intercept column, solved by Gaussian
    /// elimination with partial pivoting.
    fn normal_equations(x: &DMatrix<f64>, y: &[f64]) -> Vec<f64> {
        let (n, d) = x.shape();
        let p = d + 1;
        let col = |i: usize, j: usize| if j == 0 { 1.0 } else { x[(i, j - 1)] };
        let mut a = vec![vec![0.0; p + 1]; p];
        for r in 0..p {
            for c in 0..p {
                a[r][c] = (0..n).map(|i| col(i, r) * col(i, c)).sum();
            }
            a[r][p] = (0..n).map(|i| col(i, r) * y[i]).sum();
        }
        for k in 0..p {
            let piv = (k..p).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
            a.swap(k, piv);
            for i in k + 1..p {
                let f = a[i][k] / a[k][k];
                for j in k..=p {
                    a[i][j] -= f * a[k][j];
                }
            }
        }
        let mut sol = vec![0.0; p];
        for k in (0..p).rev() {
            let s: f64 = (k + 1..p).map(|j| a[k][j] * sol[j]).sum();
            sol[k] = (a[k][p] - s) / a[k][k];
        }
        sol
    }

    #[test]
    fn matches_normal_equations() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let (n, d) = (60, 5);
            let x = DMatrix::from_fn(n, d, |_, _| rng.gen_range(-3.0..3.0));
            let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
            let m = linreg_fit(&x, &y).unwrap();
            let want = normal_equations(&x, &y);
            assert!((m.intercept - want[0]).abs() < 1e-6);
            for j in 0..d {
                assert!((m.coefficients[j] - want[j + 1]).abs() < 1e-6);
            }
        }
    }
}
