use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative l2 tolerance used by [`EqualityMode::Tolerance`].
pub const GRADIENT_TOLERANCE: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EqualityMode {
    /// Bit-for-bit identical entries.
    #[default]
    Exact,
    /// `||a - b|| / max(||a||, ||b||) <= 1e-5`, with `0/0` counted as equal.
    Tolerance,
}

pub fn gradients_equal(a: &[f64], b: &[f64], mode: EqualityMode) -> Result<bool> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!("comparing gradients of dimension {} and {}", a.len(), b.len())));
    }
    Ok(equal_unchecked(a, b, mode))
}

pub(crate) fn equal_unchecked(a: &[f64], b: &[f64], mode: EqualityMode) -> bool {
    match mode {
        EqualityMode::Exact => a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()),
        EqualityMode::Tolerance => relative_difference(a, b) <= GRADIENT_TOLERANCE,
    }
}

/// `||a - b|| / max(||a||, ||b||)`, zero when both vectors are zero.
pub fn relative_difference(a: &[f64], b: &[f64]) -> f64 {
    let norm = |v: &mut dyn Iterator<Item = f64>| v.map(|x| x * x).sum::<f64>().sqrt();
    let diff = norm(&mut a.iter().zip(b).map(|(x, y)| x - y));
    let scale = norm(&mut a.iter().copied()).max(norm(&mut b.iter().copied()));
    if scale == 0.0 {
        if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        diff / scale
    }
}
