use std::io::Write;

use nalgebra::{DMatrix, DVector, LU};
use nalgebra::Dyn;

use super::model::CarmaModel;
use crate::error::{Error, Result};
use crate::measure::SubordinatorPath;
use crate::quad::integrate;

/// How the drift contribution `γ ∫ exp(A(t-u)) e du` was evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriftIntegral {
    /// `γ = 0`, nothing to integrate.
    Absent,
    /// `A^{-1} (exp(AΔ) - I) e`
    ClosedForm,
    /// `A` is singular; adaptive quadrature.
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Provenance {
    Exact { drift: DriftIntegral },
    Euler { h: f64, stable_step: bool },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    pub outputs: Vec<f64>,
    pub provenance: Provenance,
    pub source: Option<String>,
}

impl StateTrajectory {
    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.source = Some(source.into());
        self
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Writes `time,Y,X_1,...,X_p`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let p = self.states.first().map_or(0, |x| x.len());
        write!(out, "time,Y")?;
        for i in 1..=p {
            write!(out, ",X_{i}")?;
        }
        writeln!(out)?;
        for ((t, y), x) in self.times.iter().zip(&self.outputs).zip(&self.states) {
            write!(out, "{t},{y}")?;
            for v in x.iter() {
                write!(out, ",{v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// `n` sample times `0, Δ, ..., (n-1)Δ`.
pub fn sample_grid(n: usize, delta: f64) -> Vec<f64> {
    (0..n).map(|i| i as f64 * delta).collect()
}

fn check_sample_times(path: &SubordinatorPath, times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::validation("sample_times", "must be finite"));
    }
    if times.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::validation("sample_times", "must be strictly increasing"));
    }
    if let (Some(first), Some(last)) = (times.first(), times.last()) {
        if *first < path.start || *last > path.horizon {
            return Err(Error::validation(
                "sample_times",
                format!(
                    "[{first}, {last}] not within path window [{}, {}]",
                    path.start, path.horizon
                ),
            ));
        }
    }
    Ok(())
}

/// Propagates the state across jump-free stretches.
struct ExactStepper<'a> {
    model: &'a CarmaModel,
    gamma: f64,
    lu: Option<LU<f64, Dyn, Dyn>>,
}

impl<'a> ExactStepper<'a> {
    fn new(model: &'a CarmaModel, gamma: f64) -> Self {
        let p = model.p();
        let lu = (model.a()[p - 1] != 0.0).then(|| model.companion().clone().lu());
        ExactStepper { model, gamma, lu }
    }

    fn drift_kind(&self) -> DriftIntegral {
        match (self.gamma == 0.0, &self.lu) {
            (true, _) => DriftIntegral::Absent,
            (false, Some(_)) => DriftIntegral::ClosedForm,
            (false, None) => DriftIntegral::Quadrature,
        }
    }

    fn advance(&self, x: &DVector<f64>, dt: f64) -> Result<DVector<f64>> {
        if dt == 0.0 {
            return Ok(x.clone());
        }
        let phi = self.model.transition(dt)?;
        let mut next = &phi * x;
        if self.gamma != 0.0 {
            let p = self.model.p();
            let integral = match &self.lu {
                Some(lu) => {
                    let mut v = phi.column(p - 1).into_owned();
                    v[p - 1] -= 1.0;
                    lu.solve(&v)
                        .ok_or_else(|| Error::Numerical("companion matrix solve failed".into()))?
                }
                None => {
                    let col = integrate(
                        |u| Ok(self.model.transition(u)?.column(p - 1).iter().copied().collect()),
                        0.0,
                        dt,
                        p,
                        1e-12,
                    )?;
                    DVector::from_vec(col)
                }
            };
            next += integral * self.gamma;
        }
        Ok(next)
    }
}

/// Exact state-space solution driven by `path`, recorded at `sample_times`.
///
/// The state is zero at `path.start`; prepend burn-in with
/// [`SubordinatorPath::with_burn_in`] to approximate the stationary regime.
pub fn simulate_exact(
    model: &CarmaModel,
    path: &SubordinatorPath,
    sample_times: &[f64],
) -> Result<StateTrajectory> {
    check_sample_times(path, sample_times)?;
    let p = model.p();
    let stepper = ExactStepper::new(model, path.gamma);
    let b = model.b_vector();

    let mut x = DVector::zeros(p);
    let mut now = path.start;
    let mut next_event = 0;
    let mut states = Vec::with_capacity(sample_times.len());
    let mut outputs = Vec::with_capacity(sample_times.len());
    for &t in sample_times {
        while next_event < path.event_times.len() && path.event_times[next_event] <= t {
            let tau = path.event_times[next_event];
            x = stepper.advance(&x, tau - now)?;
            x[p - 1] += path.jump_sizes[next_event];
            now = tau;
            next_event += 1;
        }
        x = stepper.advance(&x, t - now)?;
        now = t;
        outputs.push(b.dot(&x));
        states.push(x.clone());
    }
    Ok(StateTrajectory {
        times: sample_times.to_vec(),
        states,
        outputs,
        provenance: Provenance::Exact {
            drift: stepper.drift_kind(),
        },
        source: None,
    })
}

/// Jump-adapted forward Euler scheme `X_{k+1} = X_k + A X_k Δt + e γ Δt`,
/// with `J_k` added to the last coordinate at each event time.
///
/// Steps follow the grid `path.start + k h`, cut short where an event time or
/// sample time falls inside a step.
pub fn simulate_euler(
    model: &CarmaModel,
    path: &SubordinatorPath,
    h: f64,
    sample_times: &[f64],
) -> Result<StateTrajectory> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::validation("h", format!("must be positive, got {h}")));
    }
    check_sample_times(path, sample_times)?;
    let stable_step = model
        .roots()
        .iter()
        .all(|z| (1.0 + h * z).norm() < 1.0);
    if !stable_step {
        log::warn!("Euler step h = {h} gives spectral radius of I + Ah >= 1");
    }

    let p = model.p();
    let a: &DMatrix<f64> = model.companion();
    let b = model.b_vector();
    let mut x = DVector::zeros(p);
    let mut now = path.start;
    let mut next_event = 0;
    let mut states = Vec::with_capacity(sample_times.len());
    let mut outputs = Vec::with_capacity(sample_times.len());
    let origin = path.start;
    let run = |x: &mut DVector<f64>, from: f64, to: f64| {
        let mut t = from;
        while t < to {
            let k = ((t - origin) / h + 1e-9).floor() + 1.0;
            let grid = origin + k * h;
            let t_next = if grid >= to - 1e-9 * h { to } else { grid };
            let dt = t_next - t;
            let drift = a * &*x * dt;
            *x += drift;
            x[p - 1] += path.gamma * dt;
            t = t_next;
        }
    };
    for &target in sample_times {
        while next_event < path.event_times.len() && path.event_times[next_event] <= target {
            let tau = path.event_times[next_event];
            run(&mut x, now, tau);
            x[p - 1] += path.jump_sizes[next_event];
            now = tau;
            next_event += 1;
        }
        run(&mut x, now, target);
        now = target;
        outputs.push(b.dot(&x));
        states.push(x.clone());
    }
    Ok(StateTrajectory {
        times: sample_times.to_vec(),
        states,
        outputs,
        provenance: Provenance::Euler { h, stable_step },
        source: None,
    })
}
