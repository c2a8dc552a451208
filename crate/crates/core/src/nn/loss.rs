//! Binary cross-entropy and the logistic helpers it is built from.

use crate::error::{Error, Result};

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
#[inline]
pub fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// `ln σ(z)`, stable for large `|z|`.
#[inline]
pub fn log_sigmoid(z: f64) -> f64 {
    -softplus(-z)
}

/// BCE of a single logit against its label, `softplus(z) - l z`.
#[inline]
pub fn bce_logit(z: f64, label: bool) -> f64 {
    if label {
        softplus(-z)
    } else {
        softplus(z)
    }
}

const PROB_FLOOR: f64 = 1e-15;

/// Mean binary cross-entropy of predicted probabilities, in nats.
///
/// Probabilities must lie in `[0, 1]`; exact endpoints are clipped by 1e-15 so
/// the logarithms stay finite. Anything outside the unit interval is an error.
pub fn bce_loss(probabilities: &[f64], labels: &[bool]) -> Result<f64> {
    if probabilities.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: probabilities.len(),
            got: labels.len(),
        });
    }
    if probabilities.is_empty() {
        return Err(Error::Empty("bce_loss input"));
    }
    let mut total = 0.0;
    for (&p, &l) in probabilities.iter().zip(labels) {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Domain(format!("probability {p} outside [0, 1]")));
        }
        let p = p.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR);
        total -= if l { p.ln() } else { (1.0 - p).ln() };
    }
    Ok(total / probabilities.len() as f64)
}

/// Mean BCE computed directly from logits.
pub fn bce_with_logits(logits: &[f64], labels: &[bool]) -> Result<f64> {
    if logits.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: logits.len(),
            got: labels.len(),
        });
    }
    if logits.is_empty() {
        return Err(Error::Empty("bce_with_logits input"));
    }
    let total: f64 = logits.iter().zip(labels).map(|(&z, &l)| bce_logit(z, l)).sum();
    Ok(total / logits.len() as f64)
}
