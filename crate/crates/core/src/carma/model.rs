use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::expm::matrix_exp;
use super::roots::{coefficients_from_roots, monic_roots};
use crate::error::{Error, Result};

/// Tolerance for declaring a root of `a(z)` and of `b(z)` shared.
pub const COMMON_ROOT_TOL: f64 = 1e-8;

/// CARMA(p, q) with `a(z) = z^p + a_1 z^{p-1} + ... + a_p` and
/// `b(z) = b_0 + b_1 z + ... + b_q z^q`, `b_q = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelDoc", into = "ModelDoc")]
pub struct CarmaModel {
    a: Vec<f64>,
    /// padded to length p
    b: Vec<f64>,
    q: usize,
    roots: Vec<Complex64>,
    #[serde(skip)]
    companion: DMatrix<f64>,
}

/// Wire form: `{roots: [[re, im], ...]}` or `{a: [...]}`, plus `b`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    roots: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    a: Option<Vec<f64>>,
    b: Vec<f64>,
}

impl TryFrom<ModelDoc> for CarmaModel {
    type Error = Error;

    fn try_from(d: ModelDoc) -> Result<Self> {
        let a = match (d.roots, d.a) {
            (Some(r), None) => {
                let roots: Vec<Complex64> = r.iter().map(|[re, im]| Complex64::new(*re, *im)).collect();
                coefficients_from_roots(&roots)?
            }
            (None, Some(a)) => a,
            _ => {
                return Err(Error::validation(
                    "model",
                    "give exactly one of `roots` or `a`",
                ))
            }
        };
        CarmaModel::new(a, d.b)
    }
}

impl From<CarmaModel> for ModelDoc {
    fn from(m: CarmaModel) -> Self {
        ModelDoc {
            roots: None,
            a: Some(m.a),
            b: m.b,
        }
    }
}

/// Outcome of [`CarmaModel::stability_check`].
#[derive(Debug, Clone, PartialEq)]
pub enum Stability {
    Stable { roots: Vec<Complex64> },
    Unstable { offending: Vec<Complex64> },
}

impl Stability {
    pub fn is_stable(&self) -> bool {
        matches!(self, Stability::Stable { .. })
    }
}

impl CarmaModel {
    /// `b` may be shorter than `p`; it is zero-padded. Its last nonzero
    /// entry fixes `q` and must be exactly 1.
    pub fn new(a: Vec<f64>, mut b: Vec<f64>) -> Result<Self> {
        let p = a.len();
        if p == 0 {
            return Err(Error::validation("model.a", "need at least one coefficient"));
        }
        if a.iter().chain(&b).any(|x| !x.is_finite()) {
            return Err(Error::validation("model", "coefficients must be finite"));
        }
        if b.len() > p {
            return Err(Error::validation(
                "model.b",
                format!("at most p = {p} entries, got {}", b.len()),
            ));
        }
        b.resize(p, 0.0);
        let q = b
            .iter()
            .rposition(|x| *x != 0.0)
            .ok_or_else(|| Error::validation("model.b", "must not be identically zero"))?;
        if b[q] != 1.0 {
            return Err(Error::validation(
                "model.b",
                format!("leading coefficient b_{q} must be 1, got {}", b[q]),
            ));
        }

        let roots = monic_roots(&a)?;
        if q > 0 {
            // b(z) / b_q is monic with descending coefficients b_{q-1}, ..., b_0
            let b_desc: Vec<f64> = b[..q].iter().rev().copied().collect();
            let b_roots = monic_roots(&b_desc)?;
            for ra in &roots {
                if let Some(rb) = b_roots.iter().find(|rb| (*rb - ra).norm() <= COMMON_ROOT_TOL) {
                    return Err(Error::validation(
                        "model.b",
                        format!("a(z) and b(z) share the root {rb}"),
                    ));
                }
            }
        }

        let mut companion = DMatrix::<f64>::zeros(p, p);
        for i in 0..p - 1 {
            companion[(i, i + 1)] = 1.0;
        }
        for j in 0..p {
            companion[(p - 1, j)] = -a[p - 1 - j];
        }
        Ok(CarmaModel {
            a,
            b,
            q,
            roots,
            companion,
        })
    }

    pub fn from_roots(roots: &[Complex64], b: Vec<f64>) -> Result<Self> {
        Self::new(coefficients_from_roots(roots)?, b)
    }

    pub fn p(&self) -> usize {
        self.a.len()
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn b_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.b)
    }

    /// Unit vector in the last coordinate.
    pub fn e_vector(&self) -> DVector<f64> {
        let mut e = DVector::zeros(self.p());
        e[self.p() - 1] = 1.0;
        e
    }

    pub fn companion(&self) -> &DMatrix<f64> {
        &self.companion
    }

    /// Roots of `a(z)`, i.e. the eigenvalues of the companion matrix.
    pub fn roots(&self) -> &[Complex64] {
        &self.roots
    }

    pub fn max_real_root(&self) -> f64 {
        self.roots.iter().map(|r| r.re).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn stability_check(&self) -> Stability {
        let offending: Vec<Complex64> = self.roots.iter().copied().filter(|r| r.re >= 0.0).collect();
        if offending.is_empty() {
            Stability::Stable {
                roots: self.roots.clone(),
            }
        } else {
            Stability::Unstable { offending }
        }
    }

    pub(crate) fn require_stable(&self) -> Result<()> {
        match self.stability_check() {
            Stability::Stable { .. } => Ok(()),
            Stability::Unstable { offending } => Err(Error::Unstable {
                roots: offending.iter().map(|r| (r.re, r.im)).collect(),
            }),
        }
    }

    /// `exp(A t)`
    pub fn transition(&self, t: f64) -> Result<DMatrix<f64>> {
        matrix_exp(&self.companion, t)
    }

    /// Kernel `h(t) = b' exp(At) e` for `t >= 0`, zero before.
    pub fn kernel(&self, t: f64) -> Result<f64> {
        if t < 0.0 {
            return Ok(0.0);
        }
        let phi = self.transition(t)?;
        let last = phi.column(self.p() - 1);
        Ok(self.b.iter().zip(last.iter()).map(|(b, x)| b * x).sum())
    }
}
