//! Sample spectral coherence and periodic-correlation detection.
//!
//! For a series `X(0..n)` with ordinates `d(p) = Σ_t X(t) exp(i t 2πp/n)`,
//! the coherence between frequency windows starting at `p` and `q` is
//!
//! ```text
//! |γ(p,q,M)|² = |Σ_m d(p+m) conj(d(q+m))|² / (Σ_m |d(p+m)|² Σ_m |d(q+m)|²)
//! ```
//!
//! with `m = 0..M` and indices taken mod `n`. Periodic correlation with
//! period `T` shows up as significant cells along the diagonals
//! `q - p ≡ c n / T (mod n)`.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `d(p)` for `p = 0..n`.
pub fn dft_ordinates(series: &[f64]) -> Result<Vec<Complex64>> {
    if series.len() < 2 {
        return Err(Error::validation(
            "series",
            format!("need at least 2 values, got {}", series.len()),
        ));
    }
    let mut buf: Vec<Complex64> = series.iter().map(|x| Complex64::new(*x, 0.0)).collect();
    // the positive-exponent transform is rustfft's (unnormalized) inverse
    FftPlanner::new().plan_fft_inverse(buf.len()).process(&mut buf);
    Ok(buf)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Detrend {
    /// Subtract the sample mean before transforming.
    Mean,
    None,
}

pub fn detrended(series: &[f64], detrend: Detrend) -> Vec<f64> {
    match detrend {
        Detrend::None => series.to_vec(),
        Detrend::Mean => {
            let mean = series.iter().sum::<f64>() / series.len() as f64;
            series.iter().map(|x| x - mean).collect()
        }
    }
}

/// `n × n` grid of `|γ(p,q,M)|²`, row-major.
#[derive(Debug, Clone)]
pub struct CoherenceGrid {
    pub n: usize,
    pub smoothing_m: usize,
    pub values: Vec<f64>,
    /// Cells whose windowed ordinates vanish; their value is set to 0.
    pub degenerate: Vec<(usize, usize)>,
}

impl CoherenceGrid {
    pub fn get(&self, p: usize, q: usize) -> f64 {
        self.values[p * self.n + q]
    }

    /// Writes `p,q,value,significant`.
    pub fn write_csv<W: Write>(&self, mask: &SignificanceMask, mut out: W) -> Result<()> {
        writeln!(out, "p,q,value,significant")?;
        for p in 0..self.n {
            for q in 0..self.n {
                let k = p * self.n + q;
                writeln!(out, "{p},{q},{},{}", self.values[k], u8::from(mask.cells[k]))?;
            }
        }
        Ok(())
    }
}

pub fn spectral_coherence(series: &[f64], smoothing_m: usize) -> Result<CoherenceGrid> {
    let n = series.len();
    if smoothing_m < 2 || smoothing_m > n {
        return Err(Error::validation(
            "smoothing_M",
            format!("must satisfy 2 <= M <= n = {n}, got {smoothing_m}"),
        ));
    }
    let d = dft_ordinates(series)?;
    let power: Vec<f64> = (0..n)
        .map(|p| (0..smoothing_m).map(|m| d[(p + m) % n].norm_sqr()).sum())
        .collect();

    // upper triangle per row, mirrored afterwards so swap symmetry is exact
    let rows: Vec<Vec<(f64, bool)>> = (0..n)
        .into_par_iter()
        .map(|p| {
            (p..n)
                .map(|q| {
                    let denom = power[p] * power[q];
                    if denom == 0.0 {
                        return (0.0, true);
                    }
                    if p == q {
                        return (1.0, false);
                    }
                    let cross: Complex64 = (0..smoothing_m)
                        .map(|m| d[(p + m) % n] * d[(q + m) % n].conj())
                        .sum();
                    ((cross.norm_sqr() / denom).clamp(0.0, 1.0), false)
                })
                .collect()
        })
        .collect();

    let mut values = vec![0.0; n * n];
    let mut degenerate = Vec::new();
    for (p, row) in rows.into_iter().enumerate() {
        for (k, (v, zero)) in row.into_iter().enumerate() {
            let q = p + k;
            values[p * n + q] = v;
            values[q * n + p] = v;
            if zero {
                degenerate.push((p, q));
            }
        }
    }
    Ok(CoherenceGrid {
        n,
        smoothing_m,
        values,
        degenerate,
    })
}

/// Null threshold `1 - α^{1/(M-1)}` of a single coherence cell.
pub fn coherence_threshold(alpha: f64, smoothing_m: usize) -> f64 {
    1.0 - alpha.powf(1.0 / (smoothing_m as f64 - 1.0))
}

#[derive(Debug, Clone)]
pub struct SignificanceMask {
    pub n: usize,
    pub alpha: f64,
    pub threshold: f64,
    /// row-major; the diagonal is always false
    pub cells: Vec<bool>,
}

impl SignificanceMask {
    pub fn get(&self, p: usize, q: usize) -> bool {
        self.cells[p * self.n + q]
    }

    pub fn off_diagonal_count(&self) -> usize {
        self.cells.iter().filter(|c| **c).count()
    }

    pub fn off_diagonal_rate(&self) -> f64 {
        self.off_diagonal_count() as f64 / (self.n * (self.n - 1)) as f64
    }

    /// Fraction of cells on the wrapped diagonal `q ≡ p + offset (mod n)`
    /// that are significant.
    pub fn line_occupancy(&self, offset: usize) -> f64 {
        let n = self.n;
        let hits = (0..n).filter(|p| self.get(*p, (p + offset) % n)).count();
        hits as f64 / n as f64
    }
}

pub fn significance_mask(grid: &CoherenceGrid, alpha: f64) -> Result<SignificanceMask> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::validation("alpha", format!("must be in (0, 1), got {alpha}")));
    }
    let threshold = coherence_threshold(alpha, grid.smoothing_m);
    let n = grid.n;
    let cells = grid
        .values
        .iter()
        .enumerate()
        .map(|(k, v)| k / n != k % n && *v > threshold)
        .collect();
    Ok(SignificanceMask {
        n,
        alpha,
        threshold,
        cells,
    })
}

/// Tuning of the line and classification rules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionParams {
    /// A diagonal is a line when its occupancy exceeds `line_factor * α`.
    pub line_factor: f64,
    /// Off-diagonal exceedance rates up to `null_band_factor * α` count as
    /// consistent with a stationary series.
    pub null_band_factor: f64,
    /// Score a comb of equally spaced diagonals must reach to be accepted.
    pub comb_z: f64,
    /// A comb is replaced by a coarser one when the diagonals it adds score
    /// below this.
    pub harmonic_z: f64,
}

impl Default for DetectionParams {
    fn default() -> Self {
        DetectionParams {
            line_factor: 3.0,
            null_band_factor: 3.0,
            comb_z: 4.0,
            harmonic_z: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodEstimate {
    /// Offsets in `1..=n/2` whose diagonals qualify as lines, ascending.
    pub offsets: Vec<usize>,
    /// Spacing of the accepted comb.
    pub comb: usize,
    /// Comb score, in standard errors above the mean diagonal occupancy.
    pub score: f64,
    pub spacing: usize,
    pub period: usize,
    /// The gcd of the offsets did not divide `n` and was moved to the
    /// nearest divisor.
    pub snapped: bool,
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

struct Occupancy {
    values: Vec<f64>,
    mean: f64,
    sd: f64,
}

impl Occupancy {
    fn new(mask: &SignificanceMask) -> Self {
        let values: Vec<f64> = (1..=mask.n / 2).map(|d| mask.line_occupancy(d)).collect();
        let k = values.len() as f64;
        let mean = values.iter().sum::<f64>() / k;
        let sd = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
        } else {
            0.0
        };
        Occupancy { values, mean, sd }
    }

    fn at(&self, d: usize) -> f64 {
        self.values[d - 1]
    }

    fn score(&self, offsets: impl Iterator<Item = usize>) -> (f64, f64) {
        let (sum, k) = offsets.fold((0.0, 0usize), |(s, k), d| (s + self.at(d), k + 1));
        if k == 0 {
            return (f64::NEG_INFINITY, 0.0);
        }
        let m = sum / k as f64;
        ((m - self.mean) / (self.sd / (k as f64).sqrt()), m)
    }
}

fn comb(g: usize, n: usize) -> impl Iterator<Item = usize> {
    (1..).map(move |j| j * g).take_while(move |d| *d <= n / 2)
}

/// Nearest divisor of `n`, ties going to the smaller one.
pub fn snap_to_divisor(spacing: usize, n: usize) -> (usize, bool) {
    if spacing > 0 && n.is_multiple_of(spacing) {
        return (spacing, false);
    }
    let nearest = (1..=n)
        .filter(|d| n.is_multiple_of(*d))
        .min_by_key(|d| (d.abs_diff(spacing), *d))
        .unwrap_or(1);
    log::warn!("line spacing {spacing} does not divide n = {n}; snapped to {nearest}");
    (nearest, true)
}

/// Diagonals with significant line mass and the period they imply,
/// `T = n / gcd(offsets)`.
///
/// Candidate spacings are the divisors `g` of `n` up to `n/2` whose comb
/// holds at least two lines. Each is
/// scored by the mean occupancy of the diagonals `g, 2g, ...` against the
/// mean and spread of all diagonals, so clusters of exceedances on a single
/// stray diagonal do not decide the spacing. Starting from the best comb,
/// the search steps to the nearest finer accepted comb whose extra diagonals
/// score at least `comb_z` on their own, otherwise to a coarser accepted
/// comb whose dropped diagonals score below `harmonic_z`.
/// Lines are the comb's diagonals above `line_factor * α`.
pub fn detect_period(mask: &SignificanceMask, params: &DetectionParams) -> Option<PeriodEstimate> {
    let n = mask.n;
    if n < 4 {
        return None;
    }
    let occ = Occupancy::new(mask);
    if !(occ.sd > 0.0) {
        return None;
    }
    let limit = params.line_factor * mask.alpha;
    let passes = |g: usize| {
        let (z, m) = occ.score(comb(g, n));
        let lines = comb(g, n).filter(|d| occ.at(*d) > limit).count();
        (z >= params.comb_z && m > limit && lines >= 2).then_some(z)
    };
    let candidates: Vec<(usize, f64)> = (2..=n / 2)
        .filter(|g| n.is_multiple_of(*g))
        .filter_map(|g| passes(g).map(|z| (g, z)))
        .collect();
    let pick = |it: &mut dyn Iterator<Item = (usize, f64)>| it.max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)));
    // the diagonals of comb `fine` that comb `coarse` lacks carry line mass
    let extra = |fine: usize, coarse: usize| occ.score(comb(fine, n).filter(|d| d % coarse != 0)).0;
    let mut best = pick(&mut candidates.iter().copied())?;
    let mut visited = vec![best.0];
    loop {
        let (g, _) = best;
        let finer = candidates
            .iter()
            .copied()
            .filter(|(f, _)| g % f == 0 && *f < g && extra(*f, g) >= params.comb_z)
            .max_by_key(|(f, _)| *f);
        let next = finer.or_else(|| {
            pick(&mut candidates.iter().copied().filter(|(h, _)| h % g == 0 && *h > g && extra(g, *h) < params.harmonic_z))
        });
        match next {
            Some(next) if !visited.contains(&next.0) => {
                visited.push(next.0);
                best = next;
            }
            _ => break,
        }
    }
    let (g, score) = best;
    let offsets: Vec<usize> = comb(g, n).filter(|d| occ.at(*d) > limit).collect();
    let spacing = offsets.iter().fold(0, |acc, d| gcd(acc, *d));
    let (spacing, snapped) = snap_to_divisor(spacing, n);
    Some(PeriodEstimate {
        offsets,
        comb: g,
        score,
        spacing,
        period: n / spacing,
        snapped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Class {
    Stationary,
    PeriodicallyCorrelated,
    NonstationaryOther,
}

/// JSON verdict `{class, period, line_offsets, ...}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub class: Class,
    pub period: Option<usize>,
    pub line_offsets: Vec<usize>,
    pub exceedance_rate: f64,
    /// Share of off-diagonal exceedances lying on the reported lines.
    pub line_share: f64,
}

fn cells_on_lines(mask: &SignificanceMask, offsets: &[usize]) -> usize {
    let n = mask.n;
    offsets
        .iter()
        .map(|&d| {
            let forward = (0..n).filter(|p| mask.get(*p, (p + d) % n)).count();
            // offsets d and n - d are the same pair of diagonals when 2d = n
            if 2 * d == n {
                forward
            } else {
                forward + (0..n).filter(|p| mask.get((p + d) % n, *p)).count()
            }
        })
        .sum()
}

/// Periodically correlated when a comb of lines is detected, stationary
/// when there is none and the exceedance rate stays within the null band,
/// otherwise nonstationary of some other kind.
pub fn classify(mask: &SignificanceMask, params: &DetectionParams) -> Verdict {
    let rate = mask.off_diagonal_rate();
    let total = mask.off_diagonal_count();
    let (class, period, line_offsets) = match detect_period(mask, params) {
        Some(est) => (Class::PeriodicallyCorrelated, Some(est.period), est.offsets),
        None if rate <= params.null_band_factor * mask.alpha => (Class::Stationary, None, Vec::new()),
        None => (Class::NonstationaryOther, None, Vec::new()),
    };
    let line_share = if total > 0 {
        cells_on_lines(mask, &line_offsets) as f64 / total as f64
    } else {
        0.0
    };
    Verdict {
        class,
        period,
        line_offsets,
        exceedance_rate: rate,
        line_share,
    }
}

/// Biased sample autocorrelation for lags `0..=max_lag`.
pub fn sample_autocorrelation(series: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let n = series.len();
    if max_lag >= n {
        return Err(Error::validation(
            "max_lag",
            format!("must be below the series length {n}, got {max_lag}"),
        ));
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let centred: Vec<f64> = series.iter().map(|x| x - mean).collect();
    let spread = centred.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if spread <= 1e-12 * mean.abs().max(1.0) {
        return Err(Error::Domain(
            "autocorrelation of a constant series is undefined".into(),
        ));
    }
    let c0: f64 = centred.iter().map(|x| x * x).sum::<f64>() / n as f64;
    Ok((0..=max_lag)
        .map(|k| {
            let ck: f64 = centred[..n - k]
                .iter()
                .zip(&centred[k..])
                .map(|(a, b)| a * b)
                .sum::<f64>()
                / n as f64;
            ck / c0
        })
        .collect())
}

/// Writes `lag,acf`.
pub fn write_acf_csv<W: Write>(acf: &[f64], mut out: W) -> Result<()> {
    writeln!(out, "lag,acf")?;
    for (k, v) in acf.iter().enumerate() {
        writeln!(out, "{k},{v}")?;
    }
    Ok(())
}

/// Settings for a full coherence analysis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticParams {
    #[serde(rename = "smoothing_M")]
    pub smoothing_m: usize,
    pub alpha: f64,
    pub detrend: Detrend,
    #[serde(default)]
    pub detection: DetectionParams,
}

pub struct Analysis {
    pub grid: CoherenceGrid,
    pub mask: SignificanceMask,
    pub verdict: Verdict,
}

pub fn analyze(series: &[f64], params: &DiagnosticParams) -> Result<Analysis> {
    let x = detrended(series, params.detrend);
    let grid = spectral_coherence(&x, params.smoothing_m)?;
    let mask = significance_mask(&grid, params.alpha)?;
    let verdict = classify(&mask, &params.detection);
    Ok(Analysis {
        grid,
        mask,
        verdict,
    })
}
