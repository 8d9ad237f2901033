use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default L2 weight on the mean log-likelihood scale.
pub const DEFAULT_L2: f64 = 1e-3;
const MAX_ITER: usize = 100;
const TOL: f64 = 1e-8;

/// Fitted `Pr[S=1 | b] = logistic(b0 + sum_i beta_i b_i)` over label indicators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionScores {
    pub labels: Vec<String>,
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl RegressionScores {
    /// `|beta_i| / stderr_i` per label.
    pub fn scores(&self) -> Vec<f64> {
        self.coefficients
            .iter()
            .zip(&self.std_errors)
            .map(|(b, se)| b.abs() / se)
            .collect()
    }

    /// Label indices by descending score; ties keep label order.
    pub fn ranking(&self) -> Vec<usize> {
        let scores = self.scores();
        let mut idx: Vec<usize> = (0..scores.len()).collect();
        idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        idx
    }
}

/// Penalized logistic regression of a binary protected attribute on label indicators.
///
/// `labels[r]` lists the label codes present in row `r` (codes index `label_names`).
/// The objective is the mean log-likelihood minus `l2/2 * |beta|^2` (intercept
/// unpenalized), maximized by damped Newton steps (IRLS). The penalty keeps
/// coefficients finite under complete separation.
pub fn logistic_label_scores(labels: &[Vec<u32>], label_names: &[String], protected: &[bool], l2: f64) -> Result<RegressionScores> {
    let d = label_names.len();
    if d == 0 {
        return Err(Error::InvalidParameter("regression needs at least one label".into()));
    }
    if labels.len() != protected.len() {
        return Err(Error::InvalidParameter("label sets and protected column differ in length".into()));
    }
    if labels.iter().flatten().any(|&c| c as usize >= d) {
        return Err(Error::InvalidParameter("label code out of range".into()));
    }
    let positives = protected.iter().filter(|&&s| s).count();
    if positives == 0 || positives == protected.len() {
        return Err(Error::NoVariation("protected attribute takes a single value".into()));
    }
    if !(l2 > 0.0) {
        return Err(Error::InvalidParameter("l2 weight must be positive".into()));
    }

    let n = protected.len();
    let penalty = l2 * n as f64;
    let p = d + 1;
    let mut beta = DVector::<f64>::zeros(p);
    let prior = positives as f64 / n as f64;
    beta[0] = (prior / (1.0 - prior)).ln();

    let mut objective = penalized_loglik(labels, protected, &beta, penalty);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < MAX_ITER {
        iterations += 1;
        let (hessian, gradient) = newton_system(labels, protected, &beta, penalty);
        let Some(chol) = hessian.cholesky() else {
            return Err(Error::NoVariation("singular information matrix".into()));
        };
        let step = chol.solve(&gradient);
        let mut scale = 1.0;
        let mut candidate = &beta + &step;
        let mut cand_obj = penalized_loglik(labels, protected, &candidate, penalty);
        while cand_obj < objective - 1e-12 * objective.abs() && scale > 1e-6 {
            scale *= 0.5;
            candidate = &beta + &step * scale;
            cand_obj = penalized_loglik(labels, protected, &candidate, penalty);
        }
        let change = (&candidate - &beta).amax();
        beta = candidate;
        objective = cand_obj;
        if change < TOL {
            converged = true;
            break;
        }
    }

    let (hessian, _) = newton_system(labels, protected, &beta, penalty);
    let covariance = hessian
        .cholesky()
        .ok_or_else(|| Error::NoVariation("singular information matrix".into()))?
        .inverse();
    Ok(RegressionScores {
        labels: label_names.to_vec(),
        intercept: beta[0],
        coefficients: beta.iter().skip(1).copied().collect(),
        std_errors: (1..p).map(|i| covariance[(i, i)].max(0.0).sqrt()).collect(),
        iterations,
        converged,
    })
}

fn linear(row: &[u32], beta: &DVector<f64>) -> f64 {
    beta[0] + row.iter().map(|&c| beta[c as usize + 1]).sum::<f64>()
}

fn penalized_loglik(labels: &[Vec<u32>], protected: &[bool], beta: &DVector<f64>, penalty: f64) -> f64 {
    let ll: f64 = labels
        .iter()
        .zip(protected)
        .map(|(row, &s)| {
            let eta = linear(row, beta);
            // log(1 + e^eta) computed stably
            let softplus = if eta > 0.0 { eta + (-eta).exp().ln_1p() } else { eta.exp().ln_1p() };
            if s {
                eta - softplus
            } else {
                -softplus
            }
        })
        .sum();
    let ridge: f64 = beta.iter().skip(1).map(|b| b * b).sum();
    ll - 0.5 * penalty * ridge
}

/// Negative Hessian and gradient of the penalized log-likelihood.
fn newton_system(labels: &[Vec<u32>], protected: &[bool], beta: &DVector<f64>, penalty: f64) -> (DMatrix<f64>, DVector<f64>) {
    let p = beta.len();
    let mut info = DMatrix::<f64>::zeros(p, p);
    let mut grad = DVector::<f64>::zeros(p);
    for (row, &s) in labels.iter().zip(protected) {
        let mu = 1.0 / (1.0 + (-linear(row, beta)).exp());
        let w = mu * (1.0 - mu);
        let resid = f64::from(u8::from(s)) - mu;
        grad[0] += resid;
        info[(0, 0)] += w;
        for (k, &a) in row.iter().enumerate() {
            let a = a as usize + 1;
            grad[a] += resid;
            info[(0, a)] += w;
            info[(a, a)] += w;
            for &b in &row[k + 1..] {
                let b = b as usize + 1;
                info[(a, b)] += w;
            }
        }
    }
    // mirror the upper triangle
    for i in 0..p {
        for j in (i + 1)..p {
            let v = info[(i, j)] + info[(j, i)];
            info[(i, j)] = v;
            info[(j, i)] = v;
        }
    }
    for i in 1..p {
        info[(i, i)] += penalty;
        grad[i] -= penalty * beta[i];
    }
    (info, grad)
}
