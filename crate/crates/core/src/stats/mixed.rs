//! Linear mixed model with one random intercept per item, fitted by REML.
//!
//! `y = X b + u[item] + e`, `u ~ N(0, s2_item)`, `e ~ N(0, s2_resid)`.
//! With `lambda = s2_item / s2_resid` every item block of the covariance is
//! `s2_resid (I + lambda J)`, whose inverse and determinant are closed form,
//! so `b` and `s2_resid` are profiled out and only `ln lambda` is searched.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use statrs::function::erf::erfc;

use super::StatsError;

const LOG_LAMBDA_MIN: f64 = -18.0;
const LOG_LAMBDA_MAX: f64 = 18.0;
const GOLDEN_TOL: f64 = 1e-10;
const GRID_STEP: f64 = 0.5;

/// How the variance components were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitMethod {
    /// Interior REML optimum over the variance ratio.
    Reml,
    /// The REML optimum is at zero item variance; estimates are OLS.
    ZeroItemVariance,
    /// The fixed effects reproduce the data exactly; both variances are 0.
    ExactFit,
    /// Fixed effects plus item offsets reproduce the data exactly; the
    /// residual variance is 0 and the item variance comes from the offsets.
    ZeroResidual,
}

impl FitMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            FitMethod::Reml => "reml",
            FitMethod::ZeroItemVariance => "reml-boundary",
            FitMethod::ExactFit => "exact",
            FitMethod::ZeroResidual => "zero-residual",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixedFit {
    pub names: Vec<String>,
    pub beta: Vec<f64>,
    pub se: Vec<f64>,
    pub z: Vec<f64>,
    pub p: Vec<f64>,
    pub sigma2_item: f64,
    pub sigma2_resid: f64,
    /// Restricted log-likelihood; `+inf` when a variance is exactly 0.
    pub reml_loglik: f64,
    pub converged: bool,
    pub method: FitMethod,
    pub n_obs: usize,
    pub n_items: usize,
}

impl MixedFit {
    pub fn index(&self, name: &str) -> Result<usize, StatsError> {
        self.names.iter().position(|n| n == name).ok_or_else(|| StatsError::UnknownCoefficient(name.into()))
    }

    pub fn coef(&self, name: &str) -> Result<f64, StatsError> {
        Ok(self.beta[self.index(name)?])
    }

    pub fn se_of(&self, name: &str) -> Result<f64, StatsError> {
        Ok(self.se[self.index(name)?])
    }
}

/// Two-sided normal p-value for `beta / se`. A zero standard error gives 1
/// for a zero estimate and 0 otherwise.
pub fn wald_p(fit: &MixedFit, coefficient: &str) -> Result<f64, StatsError> {
    let i = fit.index(coefficient)?;
    Ok(z_and_p(fit.beta[i], fit.se[i]).1)
}

fn z_and_p(beta: f64, se: f64) -> (f64, f64) {
    if se > 0.0 {
        let z = beta / se;
        (z, erfc(z.abs() / std::f64::consts::SQRT_2))
    } else if beta == 0.0 {
        (0.0, 1.0)
    } else {
        (beta.signum() * f64::INFINITY, 0.0)
    }
}

struct Groups {
    /// observation indices per item
    members: Vec<Vec<usize>>,
    /// column sums of X per item
    col_sums: Vec<DVector<f64>>,
    y_sums: Vec<f64>,
}

struct Profile {
    loglik: f64,
    beta: DVector<f64>,
    sigma2: f64,
    a_inv: DMatrix<f64>,
}

struct Problem<'a> {
    y: &'a DVector<f64>,
    x: &'a DMatrix<f64>,
    groups: Groups,
    xtx: DMatrix<f64>,
    xty: DVector<f64>,
}

impl Problem<'_> {
    fn n(&self) -> usize {
        self.y.len()
    }

    fn p(&self) -> usize {
        self.x.ncols()
    }

    /// Profiled REML at variance ratio `lambda`. `None` if the quadratic form
    /// degenerates.
    fn profile(&self, lambda: f64) -> Option<Profile> {
        let (n, p) = (self.n(), self.p());
        let mut a = self.xtx.clone();
        let mut b = self.xty.clone();
        let mut log_det_v = 0.0;
        let mut weights = Vec::with_capacity(self.groups.members.len());
        for ((m, s), &t) in self.groups.members.iter().zip(&self.groups.col_sums).zip(&self.groups.y_sums) {
            let ni = m.len() as f64;
            let w = lambda / (1.0 + lambda * ni);
            a -= s * s.transpose() * w;
            b -= s * (w * t);
            log_det_v += (lambda * ni).ln_1p();
            weights.push(w);
        }
        let chol = a.clone().cholesky()?;
        let beta = chol.solve(&b);
        let log_det_a = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        let r = self.y - self.x * &beta;
        let mut q = 0.0;
        for (m, w) in self.groups.members.iter().zip(&weights) {
            let (mut ss, mut sum) = (0.0, 0.0);
            for &i in m {
                ss += r[i] * r[i];
                sum += r[i];
            }
            q += ss - w * sum * sum;
        }
        let dof = (n - p) as f64;
        let sigma2 = q / dof;
        if !sigma2.is_finite() || sigma2 <= 0.0 {
            return None;
        }
        let loglik = -0.5 * (dof * (2.0 * std::f64::consts::PI * sigma2).ln() + log_det_v + log_det_a + dof);
        Some(Profile { loglik, beta, sigma2, a_inv: chol.inverse() })
    }
}

/// Fits `y ~ X + (1 | item)` by REML.
///
/// `names` labels the columns of `x`; `items` gives each observation's item.
pub fn fit_mixed<G: Ord + Clone>(
    y: &[f64],
    x: &DMatrix<f64>,
    names: &[String],
    items: &[G],
) -> Result<MixedFit, StatsError> {
    let (n, p) = (y.len(), x.ncols());
    if x.nrows() != n || items.len() != n || names.len() != p {
        return Err(StatsError::Dimension(format!(
            "{n} responses, {}x{} design, {} item labels, {} names",
            x.nrows(),
            p,
            items.len(),
            names.len()
        )));
    }
    if let Some(v) = y.iter().chain(x.iter()).find(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite(format!("value {v} in the data")));
    }
    let mut index: BTreeMap<&G, usize> = BTreeMap::new();
    let mut members: Vec<Vec<usize>> = Vec::new();
    for (i, g) in items.iter().enumerate() {
        let k = *index.entry(g).or_insert_with(|| {
            members.push(Vec::new());
            members.len() - 1
        });
        members[k].push(i);
    }
    let m = members.len();
    if m < 2 {
        return Err(StatsError::TooFewItems { need: 2, got: m });
    }
    if n <= p {
        return Err(StatsError::RankDeficient { rank: n.min(p), cols: p, detail: format!("only {n} observations") });
    }
    let rank = x.clone().svd(false, false).rank(rank_eps(x));
    if rank < p {
        return Err(StatsError::RankDeficient { rank, cols: p, detail: String::new() });
    }

    let yv = DVector::from_column_slice(y);
    let scale = y.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
    let zero_tol = n as f64 * (1e-9 * scale).powi(2);

    // exact fit: OLS residuals vanish
    let ols_beta = x.clone().svd(true, true).solve(&yv, 1e-14).expect("svd computed with u and v");
    let ols_rss = (&yv - x * &ols_beta).norm_squared();
    if ols_rss <= zero_tol {
        return Ok(finish(
            names,
            ols_beta.as_slice(),
            &vec![0.0; p],
            0.0,
            0.0,
            f64::INFINITY,
            FitMethod::ExactFit,
            n,
            m,
        ));
    }

    let groups = Groups {
        col_sums: members
            .iter()
            .map(|mm| mm.iter().fold(DVector::zeros(p), |acc, &i| acc + x.row(i).transpose()))
            .collect(),
        y_sums: members.iter().map(|mm| mm.iter().map(|&i| y[i]).sum()).collect(),
        members,
    };

    if let Some(fit) = zero_residual_fit(&yv, x, &groups, names, zero_tol)? {
        return Ok(fit);
    }

    let problem = Problem { y: &yv, x, xtx: x.transpose() * x, xty: x.transpose() * &yv, groups };

    // coarse grid on ln(lambda) to bracket, then golden section
    let f = |u: f64| problem.profile(u.exp()).map(|pr| pr.loglik).unwrap_or(f64::NEG_INFINITY);
    let steps = ((LOG_LAMBDA_MAX - LOG_LAMBDA_MIN) / GRID_STEP).round() as usize;
    let grid: Vec<f64> = (0..=steps).map(|k| LOG_LAMBDA_MIN + GRID_STEP * k as f64).collect();
    let values: Vec<f64> = grid.iter().map(|&u| f(u)).collect();
    let best = (0..grid.len()).fold(0, |b, k| if values[k] > values[b] { k } else { b });
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(grid.len() - 1)];
    let u = golden_max(&f, lo, hi, GOLDEN_TOL);

    let zero = problem
        .profile(0.0)
        .ok_or_else(|| StatsError::NonConvergence("residual variance is 0 at zero item variance".into()))?;
    let interior = problem.profile(u.exp());
    let (lambda, prof, method) = match interior {
        Some(pr) if pr.loglik > zero.loglik => (u.exp(), pr, FitMethod::Reml),
        _ => (0.0, zero, FitMethod::ZeroItemVariance),
    };
    if method == FitMethod::Reml && u > LOG_LAMBDA_MAX - 1e-3 {
        return Err(StatsError::NonConvergence(format!(
            "variance ratio ran to the upper search bound (ln lambda = {u:.3}); residual variance is numerically 0"
        )));
    }
    let se: Vec<f64> = (0..p).map(|j| (prof.sigma2 * prof.a_inv[(j, j)]).max(0.0).sqrt()).collect();
    Ok(finish(names, prof.beta.as_slice(), &se, lambda * prof.sigma2, prof.sigma2, prof.loglik, method, n, m))
}

fn rank_eps(x: &DMatrix<f64>) -> f64 {
    let max_abs = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    1e-10 * max_abs.max(1.0) * (x.nrows().max(x.ncols()) as f64)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    names: &[String],
    beta: &[f64],
    se: &[f64],
    sigma2_item: f64,
    sigma2_resid: f64,
    reml_loglik: f64,
    method: FitMethod,
    n_obs: usize,
    n_items: usize,
) -> MixedFit {
    let (z, p): (Vec<f64>, Vec<f64>) = beta.iter().zip(se).map(|(&b, &s)| z_and_p(b, s)).unzip();
    MixedFit {
        names: names.to_vec(),
        beta: beta.to_vec(),
        se: se.to_vec(),
        z,
        p,
        sigma2_item,
        sigma2_resid,
        reml_loglik,
        converged: true,
        method,
        n_obs,
        n_items,
    }
}

/// Handles data that fixed effects plus free item offsets reproduce exactly.
/// The within-item part of `b` is identified by the demeaned design; the rest
/// is fitted on item means, whose scatter estimates the item variance.
fn zero_residual_fit(
    y: &DVector<f64>,
    x: &DMatrix<f64>,
    groups: &Groups,
    names: &[String],
    zero_tol: f64,
) -> Result<Option<MixedFit>, StatsError> {
    let (n, p, m) = (y.len(), x.ncols(), groups.members.len());
    let mut xw = x.clone();
    let mut yw = y.clone();
    let mut xbar = DMatrix::zeros(m, p);
    let mut ybar = DVector::zeros(m);
    for (g, mm) in groups.members.iter().enumerate() {
        let ni = mm.len() as f64;
        let mean_x = &groups.col_sums[g] / ni;
        let mean_y = groups.y_sums[g] / ni;
        xbar.set_row(g, &mean_x.transpose());
        ybar[g] = mean_y;
        for &i in mm {
            for j in 0..p {
                xw[(i, j)] -= mean_x[j];
            }
            yw[i] -= mean_y;
        }
    }
    let svd = xw.clone().svd(true, true);
    let eps = rank_eps(x);
    let beta_w = svd.solve(&yw, eps).expect("svd computed with u and v");
    let rss_w = (&yw - &xw * &beta_w).norm_squared();
    if rss_w > zero_tol {
        return Ok(None);
    }
    let v_t = svd.v_t.as_ref().expect("v computed");
    let null: Vec<DVector<f64>> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| **s <= eps)
        .map(|(k, _)| v_t.row(k).transpose())
        .collect();
    let null_dim = null.len() + p.saturating_sub(svd.singular_values.len());
    if null_dim != null.len() {
        return Err(StatsError::RankDeficient {
            rank: svd.singular_values.len(),
            cols: p,
            detail: format!("{n} observations"),
        });
    }
    let k = null.len();
    if m <= k {
        return Err(StatsError::TooFewItems { need: k + 1, got: m });
    }
    let e = &ybar - &xbar * &beta_w;
    let (beta, cov, sigma2_item) = if k == 0 {
        let tau = e.norm_squared() / m as f64;
        (beta_w, DMatrix::zeros(p, p), tau)
    } else {
        let basis = DMatrix::from_columns(&null);
        let mm = &xbar * &basis;
        let mtm = mm.transpose() * &mm;
        let chol = mtm.cholesky().ok_or_else(|| StatsError::RankDeficient {
            rank: p - k,
            cols: p,
            detail: "between-item part of the design is singular".into(),
        })?;
        let gamma = chol.solve(&(mm.transpose() * &e));
        let rss_b = (&e - &mm * &gamma).norm_squared();
        let tau = rss_b / (m - k) as f64;
        let cov = &basis * chol.inverse() * basis.transpose() * tau;
        (beta_w + &basis * gamma, cov, tau)
    };
    let se: Vec<f64> = (0..p).map(|j| cov[(j, j)].max(0.0).sqrt()).collect();
    Ok(Some(finish(names, beta.as_slice(), &se, sigma2_item, 0.0, f64::INFINITY, FitMethod::ZeroResidual, n, m)))
}

fn golden_max(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    [a, mid, b].into_iter().fold(mid, |best, u| if f(u) > f(best) { u } else { best })
}
