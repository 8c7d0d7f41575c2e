use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use slcarma::carma::CarmaModel;
use slcarma::diagnostics::{Detrend, DiagnosticParams};
use slcarma::measure::{PeriodicPartition, SubordinatorSpec};

use crate::failure::{Failure, Result};

/// The pinned configuration for the reference example.
pub const REFERENCE_CONFIG: &str = include_str!("../configs/reference.json");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sampling {
    pub delta: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
pub enum Simulator {
    #[default]
    Exact,
    Euler { h: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentGrid {
    /// Phases `k T / phase_points` for `k = 0..phase_points`.
    pub phase_points: usize,
    pub lags: Vec<f64>,
}

impl Default for MomentGrid {
    fn default() -> Self {
        MomentGrid {
            phase_points: 48,
            lags: vec![0.0, 0.5, 1.0, 2.0, 4.0],
        }
    }
}

fn default_burn_in() -> u32 {
    10
}

fn default_acf_lag() -> usize {
    48
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub subordinator: SubordinatorSpec,
    pub model: CarmaModel,
    pub sampling: Sampling,
    #[serde(default = "default_burn_in")]
    pub burn_in_periods: u32,
    pub diagnostics: DiagnosticParams,
    #[serde(default = "default_acf_lag")]
    pub acf_max_lag: usize,
    #[serde(default)]
    pub simulator: Simulator,
    #[serde(default)]
    pub moments: MomentGrid,
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

/// Command-line adjustments applied on top of a config.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub no_detrend: bool,
    pub stationary_control: bool,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Failure::Validation(m) => Failure::Validation(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn reference() -> Self {
        Self::from_json(REFERENCE_CONFIG).expect("bundled reference config is valid")
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let Sampling { delta, n } = self.sampling;
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Failure::validation("sampling.delta", format!("must be positive, got {delta}")));
        }
        let span = self.subordinator.horizon();
        let steps = span / delta;
        let whole = steps.round();
        if (steps - whole).abs() > 1e-9 * steps.max(1.0) || whole as usize != n || n == 0 {
            return Err(Failure::validation(
                "sampling.n",
                format!(
                    "must equal horizon_periods * T / delta = {} * {} / {delta} = {steps}, got {n}",
                    self.subordinator.horizon_periods(),
                    self.subordinator.period()
                ),
            ));
        }
        let d = &self.diagnostics;
        if d.smoothing_m < 2 || d.smoothing_m > n {
            return Err(Failure::validation(
                "diagnostics.smoothing_M",
                format!("must be in [2, n = {n}], got {}", d.smoothing_m),
            ));
        }
        if !(d.alpha > 0.0 && d.alpha < 1.0) {
            return Err(Failure::validation("diagnostics.alpha", format!("must be in (0, 1), got {}", d.alpha)));
        }
        if self.acf_max_lag >= n {
            return Err(Failure::validation(
                "acf_max_lag",
                format!("must be below n = {n}, got {}", self.acf_max_lag),
            ));
        }
        if let Simulator::Euler { h } = self.simulator {
            if !(h.is_finite() && h > 0.0) {
                return Err(Failure::validation("simulator.h", format!("must be positive, got {h}")));
            }
        }
        if self.moments.phase_points == 0 {
            return Err(Failure::validation("moments.phase_points", "must be at least 1"));
        }
        if let Some(h) = self.moments.lags.iter().find(|h| !(h.is_finite() && **h >= 0.0)) {
            return Err(Failure::validation("moments.lags", format!("must be finite and >= 0, got {h}")));
        }
        Ok(())
    }

    pub fn apply(mut self, o: &Overrides) -> Result<Self> {
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(out) = &o.out {
            self.output_dir = out.clone();
        }
        if o.no_detrend {
            self.diagnostics.detrend = Detrend::None;
        }
        if o.stationary_control {
            let s = &self.subordinator;
            let flat = PeriodicPartition::homogeneous(s.period(), s.partition().period_mass())?;
            self.subordinator = SubordinatorSpec::new(
                s.gamma(),
                flat,
                s.jumps().clone(),
                s.horizon_periods(),
                s.require_subordinator(),
            )?;
        }
        self.validate()?;
        Ok(self)
    }

    /// Sample times `0, Δ, ..., (n-1)Δ`.
    pub fn sample_times(&self) -> Vec<f64> {
        slcarma::carma::sample_grid(self.sampling.n, self.sampling.delta)
    }

    pub fn phases(&self) -> Vec<f64> {
        let k = self.moments.phase_points;
        let period = self.subordinator.period();
        (0..k).map(|i| period * i as f64 / k as f64).collect()
    }
}
