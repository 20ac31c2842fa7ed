//! Dense restricted likelihood for a random-intercept model: builds the full
//! covariance `I + lambda Z Z'` and inverts it directly.

use nalgebra::{DMatrix, DVector};

pub struct DenseReml {
    pub loglik: f64,
    pub beta: DVector<f64>,
    pub sigma2: f64,
}

pub fn dense_reml(y: &[f64], x: &DMatrix<f64>, items: &[String], lambda: f64) -> DenseReml {
    let n = y.len();
    let p = x.ncols();
    let mut v = DMatrix::<f64>::identity(n, n);
    for i in 0..n {
        for j in 0..n {
            if items[i] == items[j] {
                v[(i, j)] += lambda;
            }
        }
    }
    let v_inv = v.clone().try_inverse().unwrap();
    let log_det_v = v.lu().determinant().ln();
    let yv = DVector::from_column_slice(y);
    let a = x.transpose() * &v_inv * x;
    let beta = a.clone().try_inverse().unwrap() * x.transpose() * &v_inv * &yv;
    let r = &yv - x * &beta;
    let q = (r.transpose() * &v_inv * &r)[(0, 0)];
    let dof = (n - p) as f64;
    let sigma2 = q / dof;
    let loglik =
        -0.5 * (dof * (2.0 * std::f64::consts::PI * sigma2).ln() + log_det_v + a.lu().determinant().ln() + dof);
    DenseReml { loglik, beta, sigma2 }
}

/// Ordinary least squares via QR: estimates and conventional standard errors.
pub fn ols(y: &[f64], x: &DMatrix<f64>) -> (Vec<f64>, Vec<f64>) {
    let n = y.len();
    let p = x.ncols();
    let yv = DVector::from_column_slice(y);
    let qr = x.clone().qr();
    let r = qr.r();
    let qty = qr.q().transpose() * &yv;
    let beta = r.clone().solve_upper_triangular(&qty).unwrap();
    let resid = &yv - x * &beta;
    let s2 = resid.norm_squared() / (n - p) as f64;
    let r_inv = r.solve_upper_triangular(&DMatrix::identity(p, p)).unwrap();
    let cov = &r_inv * r_inv.transpose() * s2;
    (beta.as_slice().to_vec(), (0..p).map(|j| cov[(j, j)].sqrt()).collect())
}
