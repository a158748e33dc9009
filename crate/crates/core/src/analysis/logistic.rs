//! Logistic regression by iteratively reweighted least squares, with Wald
//! standard errors and two-sided normal p-values.

use log::warn;
use nalgebra::{DMatrix, DVector};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Coefficient magnitude beyond which the fit is flagged as separated.
pub const SEPARATION_BOUND: f64 = 15.0;
/// Per-observation IRLS weight treated as underflow.
const WEIGHT_FLOOR: f64 = 1e-15;
const MAX_HALVINGS: usize = 40;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogitConfig {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for LogitConfig {
    fn default() -> Self {
        Self { max_iter: 50, tol: 1e-8 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegressionFit {
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub z: Vec<f64>,
    pub p_values: Vec<f64>,
    pub converged: bool,
    pub separated: bool,
    pub iterations: usize,
    /// Log-likelihood at the start and after every accepted step.
    pub log_likelihoods: Vec<f64>,
    pub n_obs: usize,
}

impl RegressionFit {
    pub fn coef(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.coefficients[i])
    }
}

fn log1pexp(eta: f64) -> f64 {
    if eta > 0.0 {
        eta + (-eta).exp().ln_1p()
    } else {
        eta.exp().ln_1p()
    }
}

fn sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

pub fn log_likelihood(x: &DMatrix<f64>, y: &[f64], beta: &DVector<f64>) -> f64 {
    let eta = x * beta;
    eta.iter().zip(y).map(|(&e, &yi)| yi * e - log1pexp(e)).sum()
}

/// Two-sided p-value of a standard normal statistic.
pub fn normal_two_sided_p(z: f64) -> f64 {
    if z.is_nan() {
        return 1.0;
    }
    erfc(z.abs() / std::f64::consts::SQRT_2).clamp(0.0, 1.0)
}

fn fisher(x: &DMatrix<f64>, beta: &DVector<f64>) -> (DMatrix<f64>, DVector<f64>, bool) {
    let p: DVector<f64> = (x * beta).map(sigmoid);
    let w = p.map(|pi| pi * (1.0 - pi));
    let underflow = w.iter().any(|&wi| wi < WEIGHT_FLOOR);
    let mut xw = x.clone();
    for (i, mut row) in xw.row_iter_mut().enumerate() {
        row *= w[i];
    }
    (x.transpose() * xw, p, underflow)
}

/// `x` must already contain the intercept column; `y` holds 0/1 outcomes.
pub fn logistic_fit(x: &DMatrix<f64>, y: &[f64], names: &[&str], cfg: LogitConfig) -> Result<RegressionFit> {
    let (n, k) = x.shape();
    if y.len() != n || names.len() != k {
        return Err(Error::dim("regression inputs", format!("{n} outcomes, {k} names"), format!("{} outcomes, {} names", y.len(), names.len())));
    }
    if n < k {
        return Err(Error::Argument(format!("regression needs at least as many rows as columns ({n} < {k})")));
    }
    if y.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::Argument("regression outcomes must be 0 or 1".into()));
    }
    let ones = y.iter().filter(|&&v| v == 1.0).count();
    if ones == 0 || ones == n {
        return Err(Error::Degenerate(format!("constant outcome over {n} rows ({ones} positive)")));
    }
    let yv = DVector::from_column_slice(y);
    let mut beta = DVector::zeros(k);
    let mut ll = log_likelihood(x, y, &beta);
    let mut lls = vec![ll];
    let mut converged = false;
    let mut separated = false;
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        iterations += 1;
        let (h, p, underflow) = fisher(x, &beta);
        if underflow {
            separated = true;
            break;
        }
        let grad = x.transpose() * (&yv - &p);
        let chol = h
            .cholesky()
            .ok_or_else(|| Error::Rank("weighted normal equations are singular".into()))?;
        let delta = chol.solve(&grad);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let cand = &beta + &delta * t;
            let cand_ll = log_likelihood(x, y, &cand);
            if cand_ll >= ll {
                accepted = Some((cand, cand_ll));
                break;
            }
            t *= 0.5;
        }
        let Some((next, next_ll)) = accepted else {
            // No representable ascent: the optimum is reached to machine precision.
            converged = delta.amax() < cfg.tol.sqrt();
            break;
        };
        let change = (&next - &beta).amax();
        beta = next;
        ll = next_ll;
        lls.push(ll);
        if beta.amax() > SEPARATION_BOUND {
            separated = true;
            break;
        }
        if change < cfg.tol {
            converged = true;
            break;
        }
    }
    if separated {
        converged = false;
        warn!("logistic regression: (quasi-)complete separation detected; coefficients are not meaningful");
    } else if !converged {
        warn!("logistic regression did not converge in {iterations} iterations");
    }
    let (h, _, _) = fisher(x, &beta);
    let se: Vec<f64> = match h.try_inverse() {
        Some(inv) => (0..k).map(|i| inv[(i, i)].max(0.0).sqrt()).collect(),
        None => vec![f64::INFINITY; k],
    };
    let z: Vec<f64> = beta.iter().zip(&se).map(|(b, s)| if *s > 0.0 { b / s } else { 0.0 }).collect();
    let p_values = z.iter().map(|&zi| normal_two_sided_p(zi)).collect();
    Ok(RegressionFit {
        names: names.iter().map(|s| s.to_string()).collect(),
        coefficients: beta.iter().copied().collect(),
        std_errors: se,
        z,
        p_values,
        converged,
        separated,
        iterations,
        log_likelihoods: lls,
        n_obs: n,
    })
}

/// Builds `[1, x_1, .., x_p]` rows.
pub fn with_intercept(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let k = rows.first().map_or(0, Vec::len) + 1;
    DMatrix::from_fn(rows.len(), k, |i, j| if j == 0 { 1.0 } else { rows[i][j - 1] })
}
