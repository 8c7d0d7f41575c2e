//! Adaptive Gauss–Kronrod (7/15) quadrature for vector-valued integrands.

#![allow(clippy::excessive_precision)]

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

const MAX_DEPTH: u32 = 40;

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

/// One GK15 panel: (kronrod estimate, |kronrod - gauss|).
fn panel<F>(f: &mut F, a: f64, b: f64, dim: usize) -> Result<(Vec<f64>, f64)>
where
    F: FnMut(f64) -> Result<Vec<f64>>,
{
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut kronrod = vec![0.0; dim];
    let mut gauss = vec![0.0; dim];
    for (k, (&x, &w)) in XGK.iter().zip(&WGK).enumerate() {
        let nodes: &[f64] = if x == 0.0 { &[0.0] } else { &[-1.0, 1.0] };
        for sign in nodes {
            let fx = f(centre + sign * half * x)?;
            for d in 0..dim {
                kronrod[d] += w * fx[d];
                if k % 2 == 1 {
                    gauss[d] += WG[k / 2] * fx[d];
                }
            }
        }
    }
    let mut err = 0.0f64;
    for d in 0..dim {
        kronrod[d] *= half;
        gauss[d] *= half;
        err = err.max((kronrod[d] - gauss[d]).abs());
    }
    Ok((kronrod, err))
}

/// `∫_a^b f(u) du` to relative accuracy `rel_tol` (max-norm over components).
pub(crate) fn integrate<F>(mut f: F, a: f64, b: f64, dim: usize, rel_tol: f64) -> Result<Vec<f64>>
where
    F: FnMut(f64) -> Result<Vec<f64>>,
{
    if a == b {
        return Ok(vec![0.0; dim]);
    }
    let (whole, err) = panel(&mut f, a, b, dim)?;
    let scale = max_abs(&whole).max(f64::MIN_POSITIVE);
    let target = rel_tol * scale;
    if err <= target {
        return Ok(whole);
    }
    refine(&mut f, a, b, dim, whole, target, 0)
}

fn refine<F>(
    f: &mut F,
    a: f64,
    b: f64,
    dim: usize,
    estimate: Vec<f64>,
    tol: f64,
    depth: u32,
) -> Result<Vec<f64>>
where
    F: FnMut(f64) -> Result<Vec<f64>>,
{
    let mid = 0.5 * (a + b);
    let (left, el) = panel(f, a, mid, dim)?;
    let (right, er) = panel(f, mid, b, dim)?;
    let combined: Vec<f64> = left.iter().zip(&right).map(|(l, r)| l + r).collect();
    let change = estimate
        .iter()
        .zip(&combined)
        .fold(0.0f64, |m, (e, c)| m.max((e - c).abs()));
    if el + er <= tol || (change <= tol && depth > 0) {
        return Ok(combined);
    }
    if depth >= MAX_DEPTH {
        return Err(Error::Numerical(format!(
            "quadrature on [{a}, {b}] did not reach tolerance {tol:e}"
        )));
    }
    let mut out = refine(f, a, mid, dim, left, 0.5 * tol, depth + 1)?;
    let r = refine(f, mid, b, dim, right, 0.5 * tol, depth + 1)?;
    for (o, x) in out.iter_mut().zip(r) {
        *o += x;
    }
    Ok(out)
}
