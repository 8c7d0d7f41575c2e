//! Closed-form periodic mean and covariance of the stationary state.
//!
//! With the driving noise's instantaneous mean rate `ρ(v) = γ + κ r(v)` and
//! variance rate `σ²(v) = β r(v)`, where `r` is the T-periodic event rate,
//!
//! ```text
//! E[X(s)]            = ∫_0^∞ exp(Au) e ρ(s - u) du
//! Cov(X(s), X(s+h))  = [∫_0^∞ exp(Au) e e' exp(A'u) σ²(s - u) du] exp(A'h)
//! ```
//!
//! Both integrals are split into one period (piecewise-constant rate) and a
//! geometric sum over earlier periods.

use std::io::Write;

use nalgebra::{DMatrix, DVector, Dyn, LU};

use crate::carma::CarmaModel;
use crate::error::{Error, Result};
use crate::measure::{PeriodicPartition, SubordinatorSpec};
use crate::quad::integrate;

pub const QUAD_REL_TOL: f64 = 1e-10;
pub const FIXED_POINT_TOL: f64 = 1e-12;
pub const FIXED_POINT_MAX_ITER: usize = 100_000;
const COND_WARN: f64 = 1e12;

/// Precomputed per-(model, partition) quantities shared across phases.
pub struct MomentEngine<'a> {
    model: &'a CarmaModel,
    partition: &'a PeriodicPartition,
    a_lu: LU<f64, Dyn, Dyn>,
    /// LU of `I - exp(AT)`
    tail_lu: LU<f64, Dyn, Dyn>,
    period_transition: DMatrix<f64>,
}

impl<'a> MomentEngine<'a> {
    pub fn new(model: &'a CarmaModel, partition: &'a PeriodicPartition) -> Result<Self> {
        model.require_stable()?;
        let p = model.p();
        let period_transition = model.transition(partition.period())?;
        let tail = DMatrix::identity(p, p) - &period_transition;
        let sv = tail.clone().singular_values();
        let (smax, smin) = (sv.max(), sv.min());
        if smin == 0.0 || smax / smin > COND_WARN {
            log::warn!("I - exp(AT) is ill-conditioned (cond ≈ {:e})", smax / smin);
        }
        Ok(MomentEngine {
            model,
            partition,
            a_lu: model.companion().clone().lu(),
            tail_lu: tail.lu(),
            period_transition,
        })
    }

    /// Pieces `(u0, u1, rate)` of `u ∈ [0, T]` on which `r(s - u)` is constant.
    fn pieces(&self, phase: f64) -> Vec<(f64, f64, f64)> {
        let part = self.partition;
        let period = part.period();
        let mut cuts: Vec<f64> = part.boundaries()[..part.len()]
            .iter()
            .map(|b| (phase - b).rem_euclid(period))
            .filter(|u| *u > 0.0 && *u < period)
            .collect();
        cuts.push(0.0);
        cuts.push(period);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|x, y| (*x - *y).abs() <= 1e-14 * period);
        cuts.windows(2)
            .map(|w| (w[0], w[1], part.rate_at(phase - 0.5 * (w[0] + w[1]))))
            .collect()
    }

    fn phase(&self, s: f64) -> Result<f64> {
        if !s.is_finite() {
            return Err(Error::Domain(format!("phase must be finite, got {s}")));
        }
        Ok(self.partition.split(s).1)
    }

    /// `E[X(s)]`; depends on `s` only through `s mod T`.
    pub fn mean_state(&self, gamma: f64, kappa: f64, s: f64) -> Result<DVector<f64>> {
        let p = self.model.p();
        let phase = self.phase(s)?;
        let mut one_period = DVector::zeros(p);
        for (u0, u1, rate) in self.pieces(phase) {
            let rho = gamma + kappa * rate;
            if rho == 0.0 {
                continue;
            }
            // ∫_{u0}^{u1} exp(Au) e du = A^{-1} (exp(A u1) - exp(A u0)) e
            let diff = self.model.transition(u1)?.column(p - 1) - self.model.transition(u0)?.column(p - 1);
            let integral = self
                .a_lu
                .solve(&diff)
                .ok_or_else(|| Error::Numerical("companion solve failed".into()))?;
            one_period += integral * rho;
        }
        self.tail_lu
            .solve(&one_period)
            .ok_or_else(|| Error::Numerical("I - exp(AT) is singular".into()))
    }

    /// `Cov(X(s), X(s))`
    pub fn state_variance(&self, beta: f64, s: f64) -> Result<DMatrix<f64>> {
        let p = self.model.p();
        let phase = self.phase(s)?;
        let mut g = DMatrix::zeros(p, p);
        if beta != 0.0 {
            for (u0, u1, rate) in self.pieces(phase) {
                if rate == 0.0 {
                    continue;
                }
                let flat = integrate(
                    |u| {
                        let phi = self.model.transition(u)?;
                        let v = phi.column(p - 1);
                        Ok((v * v.transpose()).iter().copied().collect())
                    },
                    u0,
                    u1,
                    p * p,
                    QUAD_REL_TOL,
                )?;
                g += DMatrix::from_vec(p, p, flat) * (beta * rate);
            }
        }
        geometric_sum(&self.period_transition, &g)
    }

    /// `Cov(X(s), X(s + h))` for `h >= 0`.
    pub fn cov_state(&self, beta: f64, s: f64, h: f64) -> Result<DMatrix<f64>> {
        if !(h >= 0.0) {
            return Err(Error::Domain(format!("lag must be >= 0, got {h}")));
        }
        let var = self.state_variance(beta, s)?;
        Ok(var * self.model.transition(h)?.transpose())
    }

    pub fn output_mean(&self, gamma: f64, kappa: f64, s: f64) -> Result<f64> {
        Ok(self.model.b_vector().dot(&self.mean_state(gamma, kappa, s)?))
    }

    pub fn output_autocov(&self, beta: f64, s: f64, h: f64) -> Result<f64> {
        let b = self.model.b_vector();
        Ok(b.dot(&(self.cov_state(beta, s, h)? * &b)))
    }
}

/// `Σ_n Φ^n G Φ'^n` by the fixed point `M ← Φ M Φ' + G`.
fn geometric_sum(phi: &DMatrix<f64>, g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let mut m = g.clone();
    let mut term = g.clone();
    for _ in 0..FIXED_POINT_MAX_ITER {
        term = phi * &term * phi.transpose();
        m += &term;
        let inc = term.amax();
        if inc < FIXED_POINT_TOL * m.amax().max(1.0) {
            return Ok(m);
        }
    }
    Err(Error::Numerical(format!(
        "covariance fixed point did not converge in {FIXED_POINT_MAX_ITER} iterations"
    )))
}

pub fn mean_state(
    model: &CarmaModel,
    partition: &PeriodicPartition,
    gamma: f64,
    kappa: f64,
    s: f64,
) -> Result<DVector<f64>> {
    MomentEngine::new(model, partition)?.mean_state(gamma, kappa, s)
}

pub fn cov_state(
    model: &CarmaModel,
    partition: &PeriodicPartition,
    beta: f64,
    s: f64,
    h: f64,
) -> Result<DMatrix<f64>> {
    MomentEngine::new(model, partition)?.cov_state(beta, s, h)
}

pub fn output_mean(
    model: &CarmaModel,
    partition: &PeriodicPartition,
    gamma: f64,
    kappa: f64,
    s: f64,
) -> Result<f64> {
    MomentEngine::new(model, partition)?.output_mean(gamma, kappa, s)
}

pub fn output_autocov(
    model: &CarmaModel,
    partition: &PeriodicPartition,
    beta: f64,
    s: f64,
    h: f64,
) -> Result<f64> {
    MomentEngine::new(model, partition)?.output_autocov(beta, s, h)
}

/// Mean and covariance over a phase grid and a set of lags.
#[derive(Debug, Clone)]
pub struct PeriodicMomentSet {
    pub phases: Vec<f64>,
    pub lags: Vec<f64>,
    pub means: Vec<DVector<f64>>,
    /// `covariances[i][j] = Cov(X(phases[i]), X(phases[i] + lags[j]))`
    pub covariances: Vec<Vec<DMatrix<f64>>>,
    pub output_means: Vec<f64>,
    pub output_autocov: Vec<Vec<f64>>,
}

impl PeriodicMomentSet {
    pub fn compute(
        model: &CarmaModel,
        spec: &SubordinatorSpec,
        phases: &[f64],
        lags: &[f64],
    ) -> Result<Self> {
        let engine = MomentEngine::new(model, spec.partition())?;
        let (gamma, kappa, beta) = (spec.gamma(), spec.jumps().kappa(), spec.jumps().beta());
        let b = model.b_vector();
        let mut set = PeriodicMomentSet {
            phases: phases.to_vec(),
            lags: lags.to_vec(),
            means: Vec::new(),
            covariances: Vec::new(),
            output_means: Vec::new(),
            output_autocov: Vec::new(),
        };
        for &s in phases {
            let mean = engine.mean_state(gamma, kappa, s)?;
            let var = engine.state_variance(beta, s)?;
            let covs = lags
                .iter()
                .map(|&h| {
                    if !(h >= 0.0) {
                        return Err(Error::Domain(format!("lag must be >= 0, got {h}")));
                    }
                    Ok(&var * model.transition(h)?.transpose())
                })
                .collect::<Result<Vec<_>>>()?;
            set.output_means.push(b.dot(&mean));
            set.output_autocov
                .push(covs.iter().map(|c| b.dot(&(c * &b))).collect());
            set.means.push(mean);
            set.covariances.push(covs);
        }
        Ok(set)
    }

    /// Output variance at each phase (requires lag 0 in the set).
    pub fn output_variance(&self) -> Option<Vec<f64>> {
        let j = self.lags.iter().position(|h| *h == 0.0)?;
        Some(self.output_autocov.iter().map(|row| row[j]).collect())
    }

    /// Writes `phase,mean_Y,var_Y`.
    pub fn write_mean_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let var = self.output_variance().ok_or_else(|| {
            Error::validation("lags", "mean export needs lag 0 for the variance column")
        })?;
        writeln!(out, "phase,mean_Y,var_Y")?;
        for ((s, m), v) in self.phases.iter().zip(&self.output_means).zip(var) {
            writeln!(out, "{s},{m},{v}")?;
        }
        Ok(())
    }

    /// Writes `phase,lag,autocov_Y`.
    pub fn write_autocov_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "phase,lag,autocov_Y")?;
        for (s, row) in self.phases.iter().zip(&self.output_autocov) {
            for (h, c) in self.lags.iter().zip(row) {
                writeln!(out, "{s},{h},{c}")?;
            }
        }
        Ok(())
    }
}
