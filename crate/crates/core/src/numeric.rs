//! Shift-stable softmax and log-sum-exp primitives shared by the model,
//! the trust layer, and the serving layer.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NumericError {
    #[error("empty input")]
    EmptyInput,
    #[error("non-finite input at index {0}")]
    NonFinite(usize),
}

/// Softmax computed with max-subtraction so large logits cannot overflow.
///
/// The result is nonnegative and sums to 1 within 1e-9; adding a constant
/// to every logit leaves the output unchanged.
pub fn softmax_stable(logits: &[f64]) -> Result<Vec<f64>, NumericError> {
    if logits.is_empty() {
        return Err(NumericError::EmptyInput);
    }
    if let Some(i) = logits.iter().position(|v| !v.is_finite()) {
        return Err(NumericError::NonFinite(i));
    }
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    Ok(exps.iter().map(|&e| e / sum).collect())
}

/// Shift-stable `ln Σ exp(vᵢ)`.
pub fn logsumexp(values: &[f64]) -> Result<f64, NumericError> {
    if values.is_empty() {
        return Err(NumericError::EmptyInput);
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(NumericError::NonFinite(i));
    }
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = values.iter().map(|&v| (v - max).exp()).sum();
    Ok(max + sum.ln())
}

/// Index of the largest value; ties broken by the lowest index.
pub fn argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        match best {
            Some((_, b)) if v <= b => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}
