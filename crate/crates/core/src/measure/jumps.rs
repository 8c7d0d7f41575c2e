use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Law of the i.i.d. jump sizes of the compound-Poisson part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
pub enum JumpLaw {
    Normal { mean: f64, var: f64 },
    Exponential { rate: f64 },
    Constant { value: f64 },
    UserTable { values: Vec<f64>, probs: Vec<f64> },
}

impl JumpLaw {
    pub fn validate(&self) -> Result<()> {
        match self {
            JumpLaw::Normal { mean, var } => {
                if !mean.is_finite() || !(var.is_finite() && *var >= 0.0) {
                    return Err(Error::validation(
                        "jumps.params",
                        format!("normal needs finite mean and var >= 0, got ({mean}, {var})"),
                    ));
                }
            }
            JumpLaw::Exponential { rate } => {
                if !(rate.is_finite() && *rate > 0.0) {
                    return Err(Error::validation(
                        "jumps.params.rate",
                        format!("must be positive, got {rate}"),
                    ));
                }
            }
            JumpLaw::Constant { value } => {
                if !value.is_finite() {
                    return Err(Error::validation("jumps.params.value", "must be finite"));
                }
            }
            JumpLaw::UserTable { values, probs } => {
                if values.is_empty() || values.len() != probs.len() {
                    return Err(Error::validation(
                        "jumps.params",
                        "user table needs matching, nonempty `values` and `probs`",
                    ));
                }
                if values.iter().any(|v| !v.is_finite())
                    || probs.iter().any(|p| !(p.is_finite() && *p >= 0.0))
                {
                    return Err(Error::validation(
                        "jumps.params",
                        "user table entries must be finite with nonnegative probabilities",
                    ));
                }
                let total: f64 = probs.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::validation(
                        "jumps.params.probs",
                        format!("must sum to 1, got {total}"),
                    ));
                }
            }
        }
        Ok(())
    }

    /// `E[J]`
    pub fn kappa(&self) -> f64 {
        match self {
            JumpLaw::Normal { mean, .. } => *mean,
            JumpLaw::Exponential { rate } => 1.0 / rate,
            JumpLaw::Constant { value } => *value,
            JumpLaw::UserTable { values, probs } => {
                values.iter().zip(probs).map(|(v, p)| v * p).sum()
            }
        }
    }

    /// `E[J^2]`
    pub fn beta(&self) -> f64 {
        match self {
            JumpLaw::Normal { mean, var } => var + mean * mean,
            JumpLaw::Exponential { rate } => 2.0 / (rate * rate),
            JumpLaw::Constant { value } => value * value,
            JumpLaw::UserTable { values, probs } => {
                values.iter().zip(probs).map(|(v, p)| v * v * p).sum()
            }
        }
    }

    /// Whether every jump is almost surely `>= 0`.
    pub fn is_nonnegative(&self) -> bool {
        match self {
            JumpLaw::Normal { mean, var } => *var == 0.0 && *mean >= 0.0,
            JumpLaw::Exponential { .. } => true,
            JumpLaw::Constant { value } => *value >= 0.0,
            JumpLaw::UserTable { values, probs } => values
                .iter()
                .zip(probs)
                .all(|(v, p)| *v >= 0.0 || *p == 0.0),
        }
    }

    /// Characteristic function `E[exp(iuJ)]`.
    pub fn cf(&self, u: f64) -> Complex64 {
        let i = Complex64::i();
        match self {
            JumpLaw::Normal { mean, var } => (i * u * mean - 0.5 * var * u * u).exp(),
            JumpLaw::Exponential { rate } => Complex64::new(*rate, 0.0) / (rate - i * u),
            JumpLaw::Constant { value } => (i * u * value).exp(),
            JumpLaw::UserTable { values, probs } => values
                .iter()
                .zip(probs)
                .map(|(v, p)| p * (i * u * v).exp())
                .sum(),
        }
    }

    /// Sampler bound to this law; the law must already be validated.
    pub fn sampler(&self) -> JumpSampler {
        let inner = match self {
            JumpLaw::Normal { mean, var } => {
                SamplerKind::Normal(Normal::new(*mean, var.sqrt()).expect("validated normal law"))
            }
            JumpLaw::Exponential { rate } => {
                SamplerKind::Exp(Exp::new(*rate).expect("validated exponential law"))
            }
            JumpLaw::Constant { value } => SamplerKind::Constant(*value),
            JumpLaw::UserTable { values, probs } => SamplerKind::Table(
                values.clone(),
                WeightedIndex::new(probs).expect("validated user table"),
            ),
        };
        JumpSampler { inner }
    }
}

#[derive(Debug, Clone)]
enum SamplerKind {
    Normal(Normal<f64>),
    Exp(Exp<f64>),
    Constant(f64),
    Table(Vec<f64>, WeightedIndex<f64>),
}

#[derive(Debug, Clone)]
pub struct JumpSampler {
    inner: SamplerKind,
}

impl Distribution<f64> for JumpSampler {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.inner {
            SamplerKind::Normal(d) => d.sample(rng),
            SamplerKind::Exp(d) => d.sample(rng),
            SamplerKind::Constant(v) => *v,
            SamplerKind::Table(values, idx) => values[idx.sample(rng)],
        }
    }
}
