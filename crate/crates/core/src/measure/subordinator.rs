use std::io::Write;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::{JumpLaw, PeriodicPartition};
use crate::error::{Error, Result};
use crate::rng::{substream, TAG_BURN_EVENTS, TAG_BURN_JUMPS, TAG_EVENTS, TAG_JUMPS};

/// Drift, periodic intensity and jump law of `S(t) = γt + Σ_{k ≤ N(t)} J_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecDoc", into = "SpecDoc")]
pub struct SubordinatorSpec {
    gamma: f64,
    partition: PeriodicPartition,
    jumps: JumpLaw,
    horizon_periods: u32,
    require_subordinator: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecDoc {
    gamma: f64,
    partition: PeriodicPartition,
    jumps: JumpLaw,
    horizon_periods: u32,
    #[serde(default)]
    require_subordinator: bool,
}

impl TryFrom<SpecDoc> for SubordinatorSpec {
    type Error = Error;

    fn try_from(d: SpecDoc) -> Result<Self> {
        SubordinatorSpec::new(
            d.gamma,
            d.partition,
            d.jumps,
            d.horizon_periods,
            d.require_subordinator,
        )
    }
}

impl From<SubordinatorSpec> for SpecDoc {
    fn from(s: SubordinatorSpec) -> Self {
        SpecDoc {
            gamma: s.gamma,
            partition: s.partition,
            jumps: s.jumps,
            horizon_periods: s.horizon_periods,
            require_subordinator: s.require_subordinator,
        }
    }
}

impl SubordinatorSpec {
    pub fn new(
        gamma: f64,
        partition: PeriodicPartition,
        jumps: JumpLaw,
        horizon_periods: u32,
        require_subordinator: bool,
    ) -> Result<Self> {
        if !gamma.is_finite() {
            return Err(Error::validation("gamma", "must be finite"));
        }
        if horizon_periods == 0 {
            return Err(Error::validation("horizon_periods", "must be at least 1"));
        }
        jumps.validate()?;
        if require_subordinator {
            if gamma < 0.0 {
                return Err(Error::validation(
                    "gamma",
                    format!("require_subordinator needs gamma >= 0, got {gamma}"),
                ));
            }
            if !jumps.is_nonnegative() {
                return Err(Error::validation(
                    "jumps",
                    "require_subordinator needs an almost surely nonnegative jump law",
                ));
            }
        } else if !jumps.is_nonnegative() {
            log::warn!("jump law {jumps:?} can produce negative jumps; S(t) is not a subordinator");
        }
        Ok(SubordinatorSpec {
            gamma,
            partition,
            jumps,
            horizon_periods,
            require_subordinator,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn partition(&self) -> &PeriodicPartition {
        &self.partition
    }

    pub fn jumps(&self) -> &JumpLaw {
        &self.jumps
    }

    pub fn horizon_periods(&self) -> u32 {
        self.horizon_periods
    }

    pub fn require_subordinator(&self) -> bool {
        self.require_subordinator
    }

    pub fn period(&self) -> f64 {
        self.partition.period()
    }

    /// `M T`
    pub fn horizon(&self) -> f64 {
        self.horizon_periods as f64 * self.period()
    }

    /// Same spec with a different number of periods.
    pub fn with_horizon(&self, horizon_periods: u32) -> Result<Self> {
        let mut s = self.clone();
        if horizon_periods == 0 {
            return Err(Error::validation("horizon_periods", "must be at least 1"));
        }
        s.horizon_periods = horizon_periods;
        Ok(s)
    }

    pub fn mean(&self, t: f64) -> Result<f64> {
        Ok(self.gamma * t + self.partition.cumulative_intensity(t)? * self.jumps.kappa())
    }

    pub fn variance(&self, t: f64) -> Result<f64> {
        Ok(self.partition.cumulative_intensity(t)? * self.jumps.beta())
    }

    /// `E[exp(iuS(t))] = exp(iuγt + Λ_t (φ_J(u) - 1))`
    pub fn characteristic_function(&self, t: f64, u: f64) -> Result<Complex64> {
        let lambda = self.partition.cumulative_intensity(t)?;
        let exponent =
            Complex64::new(0.0, u * self.gamma * t) + lambda * (self.jumps.cf(u) - 1.0);
        Ok(exponent.exp())
    }

    /// Event times on `(0, MT]`, sorted and strictly increasing.
    pub fn simulate_counting_process(&self, seed: u64) -> Vec<f64> {
        self.simulate_window(seed, Window::Main).0
    }

    pub fn simulate(&self, seed: u64) -> SubordinatorPath {
        let (event_times, jump_sizes) = self.simulate_window(seed, Window::Main);
        SubordinatorPath {
            start: 0.0,
            horizon: self.horizon(),
            gamma: self.gamma,
            event_times,
            jump_sizes,
        }
    }

    /// Fresh driving noise on `(-periods T, 0]`, independent of the main
    /// window for the same seed.
    pub fn simulate_burn_in(&self, periods: u32, seed: u64) -> SubordinatorPath {
        let (event_times, jump_sizes) = self.simulate_window(seed, Window::BurnIn(periods));
        SubordinatorPath {
            start: -(periods as f64) * self.period(),
            horizon: 0.0,
            gamma: self.gamma,
            event_times,
            jump_sizes,
        }
    }

    fn simulate_window(&self, seed: u64, window: Window) -> (Vec<f64>, Vec<f64>) {
        let (first_period, periods, event_tag, jump_tag) = match window {
            Window::Main => (0i64, self.horizon_periods, TAG_EVENTS, TAG_JUMPS),
            Window::BurnIn(b) => (-(b as i64), b, TAG_BURN_EVENTS, TAG_BURN_JUMPS),
        };
        let part = &self.partition;
        let r = part.len();
        let period = part.period();
        let sampler = self.jumps.sampler();
        let expected = part.period_mass() * periods as f64;
        let mut times = Vec::with_capacity(expected as usize + 16);
        let mut jumps = Vec::with_capacity(expected as usize + 16);

        for k in 0..periods as usize {
            let origin = (first_period + k as i64) as f64 * period;
            for i in 0..r {
                let mass = part.masses()[i];
                if mass == 0.0 {
                    continue;
                }
                let index = (k * r + i) as u64;
                let mut rng = substream(seed, event_tag, index);
                let count = Poisson::new(mass).expect("positive mass").sample(&mut rng) as usize;
                if count == 0 {
                    continue;
                }
                let lo = origin + part.boundaries()[i];
                let len = part.lengths()[i];
                let first = times.len();
                // uniform on (lo, lo + len]
                times.extend((0..count).map(|_| lo + len * (1.0 - rng.random::<f64>())));
                times[first..].sort_by(f64::total_cmp);

                let mut jrng = substream(seed, jump_tag, index);
                jumps.extend((0..count).map(|_| sampler.sample(&mut jrng)));
            }
        }
        for i in 1..times.len() {
            if times[i] <= times[i - 1] {
                times[i] = times[i - 1].next_up();
            }
        }
        (times, jumps)
    }
}

#[derive(Debug, Clone, Copy)]
enum Window {
    Main,
    BurnIn(u32),
}

/// A realized path of `S` on `(start, horizon]`, with `S(start) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubordinatorPath {
    pub start: f64,
    pub horizon: f64,
    pub gamma: f64,
    pub event_times: Vec<f64>,
    pub jump_sizes: Vec<f64>,
}

impl SubordinatorPath {
    /// Path on `(0, horizon]` from explicit events.
    pub fn from_events(
        gamma: f64,
        horizon: f64,
        event_times: Vec<f64>,
        jump_sizes: Vec<f64>,
    ) -> Result<Self> {
        if event_times.len() != jump_sizes.len() {
            return Err(Error::validation(
                "path",
                "event_times and jump_sizes differ in length",
            ));
        }
        if event_times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::validation("path.event_times", "must be strictly increasing"));
        }
        if event_times.iter().any(|t| !(*t > 0.0 && *t <= horizon)) {
            return Err(Error::validation("path.event_times", "must lie in (0, horizon]"));
        }
        Ok(SubordinatorPath {
            start: 0.0,
            horizon,
            gamma,
            event_times,
            jump_sizes,
        })
    }

    /// Prepends `prefix` (which must end where this path starts).
    pub fn prepend(self, prefix: SubordinatorPath) -> Result<Self> {
        if prefix.horizon != self.start {
            return Err(Error::validation(
                "path",
                format!("prefix ends at {} but path starts at {}", prefix.horizon, self.start),
            ));
        }
        let mut event_times = prefix.event_times;
        let mut jump_sizes = prefix.jump_sizes;
        event_times.extend(self.event_times);
        jump_sizes.extend(self.jump_sizes);
        Ok(SubordinatorPath {
            start: prefix.start,
            horizon: self.horizon,
            gamma: self.gamma,
            event_times,
            jump_sizes,
        })
    }

    /// Extends the path backward by `periods` periods of fresh noise drawn
    /// from `spec` under `seed`.
    pub fn with_burn_in(self, spec: &SubordinatorSpec, periods: u32, seed: u64) -> Result<Self> {
        if periods == 0 {
            return Ok(self);
        }
        self.prepend(spec.simulate_burn_in(periods, seed))
    }

    pub fn len(&self) -> usize {
        self.event_times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.event_times.is_empty()
    }

    /// Number of events in `(start, t]`.
    pub fn count(&self, t: f64) -> usize {
        self.event_times.partition_point(|tau| *tau <= t)
    }

    /// `S(t) = γ (t - start) + Σ_{τ_k ≤ t} J_k`
    pub fn value(&self, t: f64) -> f64 {
        let n = self.count(t);
        self.gamma * (t - self.start) + self.jump_sizes[..n].iter().sum::<f64>()
    }

    /// Writes `time,jump,cumulative_S`, one row per event.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "time,jump,cumulative_S")?;
        let mut acc = 0.0;
        for (t, j) in self.event_times.iter().zip(&self.jump_sizes) {
            acc += j;
            writeln!(out, "{},{},{}", t, j, acc + self.gamma * (t - self.start))?;
        }
        Ok(())
    }
}
