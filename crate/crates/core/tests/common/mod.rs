#![allow(dead_code)]

use num_complex::Complex64;
use slcarma::carma::CarmaModel;
use slcarma::measure::{JumpLaw, PeriodicPartition, SubordinatorSpec};

pub const LENGTHS: [f64; 7] = [2.0, 2.0, 2.0, 2.0, 1.0, 1.0, 2.0];
pub const MASSES: [f64; 7] = [6.0, 4.0, 2.0, 10.0, 4.0, 8.0, 12.0];
pub const PERIOD: f64 = 12.0;
pub const PERIOD_MASS: f64 = 46.0;
pub const KAPPA: f64 = 3.0;
pub const BETA: f64 = 10.0;

pub fn partition() -> PeriodicPartition {
    PeriodicPartition::new(LENGTHS.to_vec(), MASSES.to_vec()).unwrap()
}

pub fn spec(horizon_periods: u32) -> SubordinatorSpec {
    SubordinatorSpec::new(
        0.0,
        partition(),
        JumpLaw::Normal { mean: 3.0, var: 1.0 },
        horizon_periods,
        false,
    )
    .unwrap()
}

/// Roots of a(z) = (z + 1)(z² + 4z + 5).
pub fn roots() -> [Complex64; 3] {
    [
        Complex64::new(-1.0, 0.0),
        Complex64::new(-2.0, 1.0),
        Complex64::new(-2.0, -1.0),
    ]
}

pub const B: [f64; 3] = [0.5, 2.0, 1.0];

pub fn model() -> CarmaModel {
    CarmaModel::new(vec![5.0, 9.0, 5.0], B.to_vec()).unwrap()
}

/// Λ(t) from the partition table by walking whole periods and pieces.
pub fn lambda_oracle(t: f64) -> f64 {
    let k = (t / PERIOD).floor();
    let mut s = t - k * PERIOD;
    let mut acc = k * PERIOD_MASS;
    for (l, m) in LENGTHS.iter().zip(MASSES) {
        if s <= *l {
            return acc + m * s / l;
        }
        acc += m;
        s -= l;
    }
    acc
}

/// Kernel by residues, h(t) = Σ b(λ) e^{λt} / a'(λ), for distinct roots.
pub fn kernel_oracle(t: f64) -> f64 {
    let r = roots();
    let mut h = Complex64::new(0.0, 0.0);
    for (i, lam) in r.iter().enumerate() {
        let b = B[0] + B[1] * lam + B[2] * lam * lam;
        let da: Complex64 = r
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, mu)| lam - mu)
            .product();
        h += b * (lam * t).exp() / da;
    }
    h.re
}

pub fn mean_sd(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let v = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v.sqrt())
}

/// Kolmogorov distribution survival function, P(√n D > λ) in the limit.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    let mut s = 0.0;
    for k in 1..200 {
        let k = k as f64;
        let term = 2.0 * (-2.0 * k * k * lambda * lambda).exp();
        s += if k as i64 % 2 == 1 { term } else { -term };
    }
    s.clamp(0.0, 1.0)
}
