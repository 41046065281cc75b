//! Logistic regression fit by iteratively reweighted least squares.
//!
//! Columns are standardized internally for conditioning; the reported
//! coefficients are mapped back to the original feature scale.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::features::Features;

pub const MAX_ITER: usize = 100;
pub const GRAD_TOL: f64 = 1e-8;
pub const RIDGE: f64 = 1e-8;

#[inline]
pub fn expit(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    // standardized-scale coefficients, intercept first
    beta: Vec<f64>,
    center: Vec<f64>,
    scale: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl LogisticModel {
    /// Linear predictor for one feature row.
    pub fn linear_predictor(&self, x: &[f64]) -> f64 {
        let mut eta = self.beta[0];
        for j in 0..x.len() {
            eta += self.beta[j + 1] * (x[j] - self.center[j]) / self.scale[j];
        }
        eta
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        expit(self.linear_predictor(x))
    }

    /// Intercept followed by slopes, on the original feature scale.
    pub fn coefficients(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.beta.len());
        let mut intercept = self.beta[0];
        for j in 0..self.center.len() {
            intercept -= self.beta[j + 1] * self.center[j] / self.scale[j];
        }
        out.push(intercept);
        for j in 0..self.center.len() {
            out.push(self.beta[j + 1] / self.scale[j]);
        }
        out
    }
}

fn neg_log_lik(design: &DMatrix<f64>, y: &[f64], beta: &DVector<f64>) -> f64 {
    let eta = design * beta;
    let mut nll = 0.0;
    for (i, &e) in eta.iter().enumerate() {
        // log(1 + exp(e)) - y e, computed stably
        let sp = if e > 0.0 {
            e + (-e).exp().ln_1p()
        } else {
            e.exp().ln_1p()
        };
        nll += sp - y[i] * e;
    }
    nll
}

/// Fits `P(y = 1 | x)`; `y` must be 0/1 valued.
///
/// Newton steps are halved while the likelihood fails to improve. On
/// separable data the iteration runs to the cap and the caller's
/// truncation bounds take over.
pub fn fit_logistic(x: &Features, y: &[f64]) -> Result<LogisticModel> {
    let n = x.rows();
    let p = x.cols();
    if y.len() != n {
        return Err(Error::Shape(format!("{} labels for {} rows", y.len(), n)));
    }
    if !x.all_finite() {
        let row = (0..n)
            .find(|&i| x.row(i).iter().any(|v| !v.is_finite()))
            .unwrap_or(0);
        return Err(Error::NonFiniteFeature { row });
    }
    let mut center = vec![0.0; p];
    let mut scale = vec![1.0; p];
    for j in 0..p {
        let m = (0..n).map(|i| x.get(i, j)).sum::<f64>() / n as f64;
        let v = (0..n).map(|i| (x.get(i, j) - m).powi(2)).sum::<f64>() / n as f64;
        center[j] = m;
        scale[j] = if v > 0.0 { v.sqrt() } else { 1.0 };
    }
    let design = DMatrix::from_fn(n, p + 1, |i, j| {
        if j == 0 {
            1.0
        } else {
            (x.get(i, j - 1) - center[j - 1]) / scale[j - 1]
        }
    });
    let mut beta = DVector::zeros(p + 1);
    let mut nll = neg_log_lik(&design, y, &beta);
    let mut converged = false;
    let mut iterations = 0;
    for it in 0..MAX_ITER {
        iterations = it + 1;
        let eta = &design * &beta;
        let mut grad = DVector::zeros(p + 1);
        let mut hess = DMatrix::from_diagonal_element(p + 1, p + 1, RIDGE);
        for i in 0..n {
            let mu = expit(eta[i]);
            let w = mu * (1.0 - mu);
            let r = y[i] - mu;
            let row = design.row(i);
            for a in 0..=p {
                grad[a] += row[a] * r;
                let wa = w * row[a];
                for b in 0..=a {
                    hess[(a, b)] += wa * row[b];
                }
            }
        }
        if grad.norm() < GRAD_TOL {
            converged = true;
            break;
        }
        for a in 0..=p {
            for b in 0..a {
                hess[(b, a)] = hess[(a, b)];
            }
        }
        let step = match hess.clone().cholesky() {
            Some(ch) => ch.solve(&grad),
            None => hess.lu().solve(&grad).ok_or(Error::SingularDesign)?,
        };
        if !step.iter().all(|v| v.is_finite()) {
            return Err(Error::SingularDesign);
        }
        let mut frac = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let cand = &beta + &step * frac;
            let cand_nll = neg_log_lik(&design, y, &cand);
            if cand_nll <= nll + 1e-12 * nll.abs().max(1.0) {
                beta = cand;
                nll = cand_nll;
                accepted = true;
                break;
            }
            frac *= 0.5;
        }
        if !accepted {
            // no further progress possible at machine precision
            break;
        }
    }
    Ok(LogisticModel {
        beta: beta.iter().copied().collect(),
        center,
        scale,
        iterations,
        converged,
    })
}
