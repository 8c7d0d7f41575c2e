//! Polynomial roots by Aberth–Ehrlich simultaneous iteration.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const ROOT_TOL: f64 = 1e-12;
pub const MAX_ITER: usize = 200;

/// Roots of the monic polynomial `z^n + c[0] z^{n-1} + ... + c[n-1]`.
pub fn monic_roots(coeffs: &[f64]) -> Result<Vec<Complex64>> {
    let n = coeffs.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    if coeffs.iter().any(|c| !c.is_finite()) {
        return Err(Error::validation("coefficients", "must be finite"));
    }
    if n == 1 {
        return Ok(vec![Complex64::new(-coeffs[0], 0.0)]);
    }

    // descending: [1, c0, ..., c_{n-1}]
    let poly: Vec<f64> = std::iter::once(1.0).chain(coeffs.iter().copied()).collect();
    let abs_poly: Vec<f64> = poly.iter().map(|c| c.abs()).collect();

    // centre at the root mean, radius from the Fujiwara bound of the shifted polynomial
    let centre = -coeffs[0] / n as f64;
    let radius = coeffs
        .iter()
        .enumerate()
        .map(|(k, c)| (c.abs()).powf(1.0 / (k + 1) as f64))
        .fold(0.0f64, f64::max)
        .max(1e-3);
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| {
            let angle = std::f64::consts::TAU * k as f64 / n as f64 + 0.4;
            Complex64::new(centre, 0.0) + Complex64::from_polar(radius, angle)
        })
        .collect();

    let mut done = vec![false; n];
    let mut last_step = f64::INFINITY;
    for _ in 0..MAX_ITER {
        last_step = 0.0;
        for i in 0..n {
            if done[i] {
                continue;
            }
            let zi = z[i];
            let (p, dp) = horner(&poly, zi);
            let bound = 4.0 * (n as f64 + 1.0) * f64::EPSILON * horner_abs(&abs_poly, zi.norm());
            if p.norm() <= bound {
                done[i] = true;
                continue;
            }
            let ratio = p / dp;
            let repulsion: Complex64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| (zi - z[j]).inv())
                .sum();
            let w = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            if !w.re.is_finite() || !w.im.is_finite() {
                continue;
            }
            z[i] = zi - w;
            let step = w.norm() / zi.norm().max(1.0);
            last_step = last_step.max(step);
            if step <= ROOT_TOL {
                done[i] = true;
            }
        }
        if done.iter().all(|d| *d) {
            return Ok(clean_conjugates(z));
        }
    }
    Err(Error::RootsNotConverged {
        iterations: MAX_ITER,
        residual: last_step,
    })
}

fn horner(poly: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for c in poly {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

fn horner_abs(abs_poly: &[f64], r: f64) -> f64 {
    abs_poly.iter().fold(0.0, |acc, c| acc * r + c)
}

/// Snaps near-real roots onto the real axis and near-imaginary roots onto
/// the imaginary axis; both are only resolved up to rounding.
fn clean_conjugates(mut z: Vec<Complex64>) -> Vec<Complex64> {
    for r in &mut z {
        if r.im.abs() <= 1e-10 * r.norm().max(1.0) {
            r.im = 0.0;
        }
        if r.re.abs() <= ROOT_TOL * r.norm().max(1.0) {
            r.re = 0.0;
        }
    }
    z.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    z
}

/// Expands `Π (z - z_i)` into `(a_1, ..., a_p)` of `z^p + a_1 z^{p-1} + ... + a_p`.
///
/// The roots must be closed under conjugation so the coefficients are real.
pub fn coefficients_from_roots(roots: &[Complex64]) -> Result<Vec<f64>> {
    if roots.iter().any(|r| !r.re.is_finite() || !r.im.is_finite()) {
        return Err(Error::validation("roots", "must be finite"));
    }
    let mut used = vec![false; roots.len()];
    for i in 0..roots.len() {
        if used[i] {
            continue;
        }
        let tol = 1e-10 * roots[i].norm().max(1.0);
        if roots[i].im.abs() <= tol {
            used[i] = true;
            continue;
        }
        let partner = (0..roots.len())
            .find(|&j| j != i && !used[j] && (roots[j] - roots[i].conj()).norm() <= tol);
        match partner {
            Some(j) => {
                used[i] = true;
                used[j] = true;
            }
            None => {
                return Err(Error::validation(
                    "roots",
                    format!("{} has no conjugate partner", roots[i]),
                ))
            }
        }
    }

    let mut poly = vec![Complex64::new(1.0, 0.0)];
    for r in roots {
        let mut next = vec![Complex64::new(0.0, 0.0); poly.len() + 1];
        for (k, c) in poly.iter().enumerate() {
            next[k] += c;
            next[k + 1] -= c * r;
        }
        poly = next;
    }
    poly[1..]
        .iter()
        .enumerate()
        .map(|(k, c)| {
            if c.im.abs() > 1e-10 * c.re.abs().max(1.0) {
                Err(Error::Numerical(format!(
                    "coefficient a_{} has imaginary residue {:e}",
                    k + 1,
                    c.im
                )))
            } else {
                Ok(c.re)
            }
        })
        .collect()
}
