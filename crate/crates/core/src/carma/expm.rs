//! Matrix exponential by scaling and squaring around a truncated Taylor series.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Scaled norm at which the Taylor kernel is evaluated.
const SCALED_NORM: f64 = 0.5;
const MAX_TERMS: usize = 40;

fn norm1(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `exp(A t)`.
pub fn matrix_exp(a: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
    if !a.is_square() {
        return Err(Error::validation("matrix", "must be square"));
    }
    if !t.is_finite() || a.iter().any(|x| !x.is_finite()) {
        return Err(Error::validation("matrix", "entries and time must be finite"));
    }
    let n = a.nrows();
    let scaled = a * t;
    let norm = norm1(&scaled);
    if !norm.is_finite() {
        return Err(Error::ExpOverflow(norm));
    }
    let squarings = if norm > SCALED_NORM {
        (norm / SCALED_NORM).log2().ceil() as i32
    } else {
        0
    };
    let x = scaled / 2f64.powi(squarings);

    let mut result = DMatrix::<f64>::identity(n, n);
    let mut term = DMatrix::<f64>::identity(n, n);
    for k in 1..=MAX_TERMS {
        term = &term * &x / k as f64;
        result += &term;
        if norm1(&term) <= f64::EPSILON * 1e-2 * norm1(&result) {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    if result.iter().any(|v| !v.is_finite()) {
        return Err(Error::ExpOverflow(norm));
    }
    Ok(result)
}
