use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One period of a piecewise-constant Poisson intensity.
///
/// Subinterval `B_i = (s_{i-1}, s_i]` has length `lengths[i]` and carries
/// `masses[i]` expected events. The pattern repeats with period
/// `T = sum(lengths)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PartitionDoc", into = "PartitionDoc")]
pub struct PeriodicPartition {
    lengths: Vec<f64>,
    masses: Vec<f64>,
    /// `s_0 = 0, s_1, ..., s_r = T`
    boundaries: Vec<f64>,
    /// cumulative mass at each boundary, `cum[r]` is the mass of a period
    cum_mass: Vec<f64>,
}

/// Wire form: exactly one of `masses` or `rates_per_unit_time` must be given.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PartitionDoc {
    lengths: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    masses: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rates_per_unit_time: Option<Vec<f64>>,
}

impl TryFrom<PartitionDoc> for PeriodicPartition {
    type Error = Error;

    fn try_from(doc: PartitionDoc) -> Result<Self> {
        match (doc.masses, doc.rates_per_unit_time) {
            (Some(m), None) => PeriodicPartition::new(doc.lengths, m),
            (None, Some(r)) => PeriodicPartition::from_rates(doc.lengths, r),
            (Some(_), Some(_)) => Err(Error::validation(
                "partition",
                "give either `masses` or `rates_per_unit_time`, not both",
            )),
            (None, None) => Err(Error::validation(
                "partition",
                "missing `masses` (or `rates_per_unit_time`)",
            )),
        }
    }
}

impl From<PeriodicPartition> for PartitionDoc {
    fn from(p: PeriodicPartition) -> Self {
        PartitionDoc {
            lengths: p.lengths,
            masses: Some(p.masses),
            rates_per_unit_time: None,
        }
    }
}

impl PeriodicPartition {
    pub fn new(lengths: Vec<f64>, masses: Vec<f64>) -> Result<Self> {
        if lengths.is_empty() {
            return Err(Error::validation("partition.lengths", "must not be empty"));
        }
        if lengths.len() != masses.len() {
            return Err(Error::validation(
                "partition.masses",
                format!("expected {} entries, got {}", lengths.len(), masses.len()),
            ));
        }
        if let Some(i) = lengths.iter().position(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(Error::validation(
                format!("partition.lengths[{i}]"),
                format!("must be positive and finite, got {}", lengths[i]),
            ));
        }
        if let Some(i) = masses.iter().position(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::validation(
                format!("partition.masses[{i}]"),
                format!("must be nonnegative and finite, got {}", masses[i]),
            ));
        }

        let mut boundaries = Vec::with_capacity(lengths.len() + 1);
        let mut cum_mass = Vec::with_capacity(lengths.len() + 1);
        let (mut s, mut c) = (0.0, 0.0);
        boundaries.push(s);
        cum_mass.push(c);
        for (l, m) in lengths.iter().zip(&masses) {
            s += l;
            c += m;
            boundaries.push(s);
            cum_mass.push(c);
        }
        Ok(PeriodicPartition {
            lengths,
            masses,
            boundaries,
            cum_mass,
        })
    }

    /// Builds the partition from per-unit-time rates, `m_i = rate_i * l_i`.
    pub fn from_rates(lengths: Vec<f64>, rates: Vec<f64>) -> Result<Self> {
        if lengths.len() != rates.len() {
            return Err(Error::validation(
                "partition.rates_per_unit_time",
                format!("expected {} entries, got {}", lengths.len(), rates.len()),
            ));
        }
        let masses = lengths.iter().zip(&rates).map(|(l, r)| l * r).collect();
        Self::new(lengths, masses)
    }

    /// A single subinterval of length `period` carrying `mass` events.
    pub fn homogeneous(period: f64, mass: f64) -> Result<Self> {
        Self::new(vec![period], vec![mass])
    }

    pub fn len(&self) -> usize {
        self.lengths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lengths.is_empty()
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    pub fn period(&self) -> f64 {
        self.boundaries[self.len()]
    }

    /// Expected number of events in one period, `Λ_T`.
    pub fn period_mass(&self) -> f64 {
        self.cum_mass[self.len()]
    }

    /// Event rate per unit time on subinterval `i`.
    pub fn rate(&self, i: usize) -> f64 {
        self.masses[i] / self.lengths[i]
    }

    /// Splits `t` into whole periods and a phase in `[0, T)`.
    pub fn split(&self, t: f64) -> (i64, f64) {
        let period = self.period();
        let mut k = (t / period).floor();
        let mut s = t - k * period;
        if s < 0.0 {
            k -= 1.0;
            s += period;
        }
        if s >= period {
            k += 1.0;
            s -= period;
        }
        (k as i64, s.max(0.0))
    }

    /// Index of the subinterval containing phase `s`, using the closed-left
    /// convention `[s_{i-1}, s_i)`. Callers only use it where the intensity
    /// is integrated, so boundary placement does not matter.
    pub fn locate(&self, s: f64) -> usize {
        let j = self.boundaries.partition_point(|b| *b <= s);
        j.clamp(1, self.len()) - 1
    }

    /// Rate per unit time at absolute time `v` (any sign).
    pub fn rate_at(&self, v: f64) -> f64 {
        let (_, s) = self.split(v);
        self.rate(self.locate(s))
    }

    /// Cumulative intensity `Λ_t = k Λ_T + Λ_s` for `t = kT + s`.
    pub fn cumulative_intensity(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::Domain(format!(
                "cumulative intensity needs finite t >= 0, got {t}"
            )));
        }
        let (k, s) = self.split(t);
        Ok(k as f64 * self.period_mass() + self.phase_intensity(s))
    }

    /// `Λ_s` for a phase `s` in `[0, T)`.
    fn phase_intensity(&self, s: f64) -> f64 {
        let j = self.locate(s);
        self.cum_mass[j] + self.masses[j] * (s - self.boundaries[j]) / self.lengths[j]
    }
}
