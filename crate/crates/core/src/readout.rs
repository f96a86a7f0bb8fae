//! Ridge-regression output layer and task metrics.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::StateMatrix;

/// Symbols of the 4-level equalization alphabet, ascending.
pub const SYMBOLS: [f64; 4] = [-3.0, -1.0, 1.0, 3.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadoutModel {
    pub weights: Vec<f64>,
    pub ridge_lambda: f64,
}

fn gram(s: &DMatrix<f64>) -> DMatrix<f64> {
    s.tr_mul(s)
}

fn regularized(g: &DMatrix<f64>, lambda: f64) -> DMatrix<f64> {
    let mut g = g.clone();
    for i in 0..g.nrows() {
        g[(i, i)] += lambda;
    }
    g
}

fn factor(g: &DMatrix<f64>, lambda: f64) -> Result<Cholesky<f64, Dyn>> {
    Cholesky::new(regularized(g, lambda)).ok_or(Error::Singular { lambda })
}

fn finite_model(w: DVector<f64>, lambda: f64) -> Result<ReadoutModel> {
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular { lambda });
    }
    Ok(ReadoutModel {
        weights: w.iter().copied().collect(),
        ridge_lambda: lambda,
    })
}

/// Solves `(S^T S + lambda I) w = S^T y` by Cholesky factorization.
pub fn train_ridge(s: &StateMatrix, y: &[f64], lambda: f64) -> Result<ReadoutModel> {
    if s.rows() != y.len() {
        return Err(Error::Shape(format!(
            "{} state rows for {} targets",
            s.rows(),
            y.len()
        )));
    }
    if !(lambda >= 0.0) {
        return Err(Error::param("ridge_lambda", "must be non-negative"));
    }
    let yv = DVector::from_column_slice(y);
    let w = factor(&gram(&s.data), lambda)?.solve(&s.data.tr_mul(&yv));
    finite_model(w, lambda)
}

pub fn predict(model: &ReadoutModel, s: &StateMatrix) -> Result<Vec<f64>> {
    if s.cols() != model.weights.len() {
        return Err(Error::Shape(format!(
            "{} state columns for {} weights",
            s.cols(),
            model.weights.len()
        )));
    }
    let w = DVector::from_column_slice(&model.weights);
    Ok((&s.data * w).iter().copied().collect())
}

/// Mean squared error over the population variance of the target.
pub fn nmse(pred: &[f64], target: &[f64]) -> Result<f64> {
    if pred.len() != target.len() || target.len() < 2 {
        return Err(Error::Shape(format!(
            "nmse needs equal lengths >= 2, got {} and {}",
            pred.len(),
            target.len()
        )));
    }
    let n = target.len() as f64;
    let mean = target.iter().sum::<f64>() / n;
    let var = target.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / n;
    if !(var > 0.0) {
        return Err(Error::ZeroVariance);
    }
    let mse = pred
        .iter()
        .zip(target)
        .map(|(p, y)| (p - y).powi(2))
        .sum::<f64>()
        / n;
    Ok(mse / var)
}

/// Fraction of samples whose thresholded prediction equals the binary label.
pub fn accuracy(pred: &[f64], labels: &[f64], threshold: f64) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    let hits = pred
        .iter()
        .zip(labels)
        .filter(|(&p, &y)| decide(p, threshold) == (y >= 0.5))
        .count();
    hits as f64 / labels.len() as f64
}

fn decide(p: f64, threshold: f64) -> bool {
    p >= threshold
}

/// Accuracy after a majority vote of the per-sample decisions within each group
/// (ties fall back to the mean prediction).
pub fn group_accuracy(pred: &[f64], labels: &[f64], groups: &[usize], threshold: f64) -> f64 {
    let mut i = 0;
    let (mut hits, mut total) = (0usize, 0usize);
    while i < groups.len() {
        let g = groups[i];
        let mut j = i;
        while j < groups.len() && groups[j] == g {
            j += 1;
        }
        let votes = pred[i..j].iter().filter(|&&p| decide(p, threshold)).count();
        let len = j - i;
        let decision = match (2 * votes).cmp(&len) {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Less => false,
            std::cmp::Ordering::Equal => {
                decide(pred[i..j].iter().sum::<f64>() / len as f64, threshold)
            }
        };
        if decision == (labels[i] >= 0.5) {
            hits += 1;
        }
        total += 1;
        i = j;
    }
    if total == 0 {
        0.0
    } else {
        hits as f64 / total as f64
    }
}

/// Nearest alphabet symbol; exact midpoints go to the smaller symbol.
pub fn quantize_symbol(x: f64) -> f64 {
    let mut best = SYMBOLS[0];
    let mut dist = (x - best).abs();
    for &s in &SYMBOLS[1..] {
        let d = (x - s).abs();
        if d < dist {
            best = s;
            dist = d;
        }
    }
    best
}

/// Symbol error ratio after nearest-symbol quantization.
pub fn ser(pred: &[f64], symbols: &[f64]) -> f64 {
    if symbols.is_empty() {
        return 0.0;
    }
    let errors = pred
        .iter()
        .zip(symbols)
        .filter(|(&p, &d)| quantize_symbol(p) != d)
        .count();
    errors as f64 / symbols.len() as f64
}

/// Ridge solver with the regularization chosen by contiguous k-fold
/// cross-validation.
///
/// All Gram matrices and their factorizations are computed once, so fitting many
/// targets against the same states only costs triangular solves.
pub struct RidgeCv {
    states: DMatrix<f64>,
    lambdas: Vec<f64>,
    folds: Vec<std::ops::Range<usize>>,
    // per fold: Gram of the held-out rows
    fold_states: Vec<DMatrix<f64>>,
    // [lambda][fold] factor of the training Gram, None when singular
    fold_factors: Vec<Vec<Option<Cholesky<f64, Dyn>>>>,
    full_factors: Vec<Option<Cholesky<f64, Dyn>>>,
}

impl RidgeCv {
    pub fn new(s: &StateMatrix, lambdas: &[f64], folds: usize) -> Result<Self> {
        let rows = s.rows();
        if lambdas.is_empty() {
            return Err(Error::param("lambdas", "need at least one candidate"));
        }
        if lambdas.iter().any(|l| !(*l >= 0.0)) {
            return Err(Error::param("lambdas", "must be non-negative"));
        }
        if folds < 2 || rows < 2 * folds {
            return Err(Error::Shape(format!(
                "{rows} rows cannot be split into {folds} folds"
            )));
        }
        let bounds: Vec<_> = (0..folds)
            .map(|f| (f * rows / folds)..((f + 1) * rows / folds))
            .collect();
        let total = gram(&s.data);
        let fold_states: Vec<_> = bounds
            .iter()
            .map(|r| s.data.rows(r.start, r.len()).into_owned())
            .collect();
        let fold_grams: Vec<_> = fold_states.iter().map(|m| &total - gram(m)).collect();
        let fold_factors = lambdas
            .iter()
            .map(|&l| fold_grams.iter().map(|g| factor(g, l).ok()).collect())
            .collect();
        let full_factors = lambdas.iter().map(|&l| factor(&total, l).ok()).collect();
        Ok(Self {
            states: s.data.clone(),
            lambdas: lambdas.to_vec(),
            folds: bounds,
            fold_states,
            fold_factors,
            full_factors,
        })
    }

    /// Cross-validated mean squared error for each candidate (infinite when singular).
    pub fn validation_errors(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.states.nrows() {
            return Err(Error::Shape(format!(
                "{} state rows for {} targets",
                self.states.nrows(),
                y.len()
            )));
        }
        let yv = DVector::from_column_slice(y);
        let total_rhs = self.states.tr_mul(&yv);
        let fold_rhs: Vec<_> = self
            .folds
            .iter()
            .zip(&self.fold_states)
            .map(|(r, m)| (&total_rhs - m.tr_mul(&yv.rows(r.start, r.len())), r))
            .collect();
        Ok(self
            .fold_factors
            .iter()
            .map(|per_fold| {
                let mut sse = 0.0;
                for ((fac, (rhs, range)), m) in
                    per_fold.iter().zip(&fold_rhs).zip(&self.fold_states)
                {
                    let Some(fac) = fac else {
                        return f64::INFINITY;
                    };
                    let w = fac.solve(rhs);
                    let pred = m * w;
                    sse += pred
                        .iter()
                        .zip(&y[(*range).clone()])
                        .map(|(p, t)| (p - t).powi(2))
                        .sum::<f64>();
                }
                if sse.is_finite() {
                    sse / y.len() as f64
                } else {
                    f64::INFINITY
                }
            })
            .collect())
    }

    /// Fits `y` with the candidate of lowest validation error (the smaller one on ties).
    pub fn fit(&self, y: &[f64]) -> Result<ReadoutModel> {
        let errors = self.validation_errors(y)?;
        let mut best: Option<usize> = None;
        for (i, e) in errors.iter().enumerate() {
            if self.full_factors[i].is_some()
                && e.is_finite()
                && best.is_none_or(|b| *e < errors[b])
            {
                best = Some(i);
            }
        }
        let i = best.ok_or(Error::Singular {
            lambda: self.lambdas[0],
        })?;
        self.fit_with(i, y)
    }

    fn fit_with(&self, i: usize, y: &[f64]) -> Result<ReadoutModel> {
        let lambda = self.lambdas[i];
        let fac = self.full_factors[i]
            .as_ref()
            .ok_or(Error::Singular { lambda })?;
        let yv = DVector::from_column_slice(y);
        finite_model(fac.solve(&self.states.tr_mul(&yv)), lambda)
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }
}

/// `{1e-12, 1e-10, ..., 1e-2}`.
pub fn default_lambdas() -> Vec<f64> {
    (0..6).map(|i| 10f64.powi(-12 + 2 * i)).collect()
}
