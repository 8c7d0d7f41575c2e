use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use slcarma::carma::{simulate_euler, simulate_exact, StateTrajectory};
use slcarma::diagnostics::{analyze, sample_autocorrelation, write_acf_csv, Analysis, Class, DiagnosticParams, Verdict};
use slcarma::measure::SubordinatorPath;
use slcarma::moments::PeriodicMomentSet;
use slcarma::rng::derive_seed;

use crate::config::{ExperimentConfig, Simulator};
use crate::failure::{Failure, Result};

/// One simulated realization: the driving path on the recorded window and
/// the sampled trajectory.
pub struct Realization {
    pub index: u64,
    pub seed: u64,
    pub path: SubordinatorPath,
    pub trajectory: StateTrajectory,
}

pub fn realize(cfg: &ExperimentConfig, index: u64) -> Result<Realization> {
    let seed = derive_seed(cfg.seed, index);
    let spec = &cfg.subordinator;
    let path = spec.simulate(seed);
    let driven = path.clone().with_burn_in(spec, cfg.burn_in_periods, seed)?;
    let times = cfg.sample_times();
    let trajectory = match cfg.simulator {
        Simulator::Exact => simulate_exact(&cfg.model, &driven, &times)?,
        Simulator::Euler { h } => simulate_euler(&cfg.model, &driven, h, &times)?,
    }
    .with_source(format!("seed={seed}"));
    Ok(Realization {
        index,
        seed,
        path,
        trajectory,
    })
}

fn prepare_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Failure::validation("output_dir", format!("{}: {e}", dir.display())))
}

fn create(dir: &Path, name: &str) -> Result<(PathBuf, BufWriter<File>)> {
    let path = dir.join(name);
    let file = File::create(&path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    Ok((path, BufWriter::new(file)))
}

fn finish(path: PathBuf, mut w: BufWriter<File>) -> Result<PathBuf> {
    w.flush().map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    Ok(path)
}

fn suffixed(stem: &str, index: u64, paths: u64) -> String {
    if paths == 1 {
        format!("{stem}.csv")
    } else {
        format!("{stem}_{index:04}.csv")
    }
}

/// Writes `subordinator.csv` and `trajectory.csv` (suffixed by path index
/// when more than one path is requested).
pub fn simulate(cfg: &ExperimentConfig, paths: u64) -> Result<Vec<PathBuf>> {
    if paths == 0 {
        return Err(Failure::validation("paths", "must be at least 1"));
    }
    prepare_dir(&cfg.output_dir)?;
    let runs: Vec<Realization> = (0..paths)
        .into_par_iter()
        .map(|i| realize(cfg, i))
        .collect::<Result<_>>()?;
    let mut written = Vec::new();
    for r in &runs {
        let (p, mut w) = create(&cfg.output_dir, &suffixed("subordinator", r.index, paths))?;
        r.path.write_csv(&mut w)?;
        written.push(finish(p, w)?);
        let (p, mut w) = create(&cfg.output_dir, &suffixed("trajectory", r.index, paths))?;
        r.trajectory.write_csv(&mut w)?;
        written.push(finish(p, w)?);
    }
    Ok(written)
}

/// Writes `mean.csv` and `autocov.csv` from the closed forms.
pub fn moments(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    prepare_dir(&cfg.output_dir)?;
    let mut lags = cfg.moments.lags.clone();
    if !lags.contains(&0.0) {
        lags.insert(0, 0.0);
    }
    let set = PeriodicMomentSet::compute(&cfg.model, &cfg.subordinator, &cfg.phases(), &lags)?;
    let (p, mut w) = create(&cfg.output_dir, "mean.csv")?;
    set.write_mean_csv(&mut w)?;
    let mean = finish(p, w)?;
    let (p, mut w) = create(&cfg.output_dir, "autocov.csv")?;
    set.write_autocov_csv(&mut w)?;
    Ok(vec![mean, finish(p, w)?])
}

/// Reads a series from a CSV file: a single column, or the column headed
/// `Y` when there are several. A header row is optional.
pub fn read_series(path: &Path) -> Result<Vec<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    let mut rows = reader.records();
    let first = match rows.next() {
        Some(r) => r?,
        None => return Err(Failure::validation("series", format!("{} is empty", path.display()))),
    };
    let header = first.iter().any(|f| f.parse::<f64>().is_err());
    let column = if header {
        if first.len() == 1 {
            0
        } else {
            first.iter().position(|f| f == "Y").ok_or_else(|| {
                Failure::validation("series", format!("{}: no `Y` column among several", path.display()))
            })?
        }
    } else if first.len() == 1 {
        0
    } else {
        return Err(Failure::validation(
            "series",
            format!("{}: several unlabeled columns; add a header with a `Y` column", path.display()),
        ));
    };
    let mut values = Vec::new();
    let data = (!header).then_some(Ok(first)).into_iter().chain(rows);
    for (line, rec) in data.enumerate() {
        let rec = rec?;
        let field = rec.get(column).unwrap_or("");
        let v: f64 = field.parse().map_err(|_| {
            Failure::validation("series", format!("{}: row {}: `{field}` is not a number", path.display(), line + 1))
        })?;
        if !v.is_finite() {
            return Err(Failure::validation("series", format!("{}: non-finite value", path.display())));
        }
        values.push(v);
    }
    Ok(values)
}

/// Writes `coherence.csv`, `acf.csv` and `verdict.json` for `series`.
pub fn diagnose_series(
    series: &[f64],
    params: &DiagnosticParams,
    acf_max_lag: usize,
    out: &Path,
) -> Result<(Analysis, Vec<PathBuf>)> {
    if params.smoothing_m > series.len() {
        return Err(Failure::validation(
            "diagnostics.smoothing_M",
            format!("{} exceeds the series length {}", params.smoothing_m, series.len()),
        ));
    }
    prepare_dir(out)?;
    let analysis = analyze(series, params)?;
    let acf = sample_autocorrelation(series, acf_max_lag.min(series.len() - 1))?;
    let (p, mut w) = create(out, "coherence.csv")?;
    analysis.grid.write_csv(&analysis.mask, &mut w)?;
    let coherence = finish(p, w)?;
    let (p, mut w) = create(out, "acf.csv")?;
    write_acf_csv(&acf, &mut w)?;
    let acf_path = finish(p, w)?;
    let (p, mut w) = create(out, "verdict.json")?;
    serde_json::to_writer_pretty(&mut w, &analysis.verdict)?;
    writeln!(w)?;
    let verdict = finish(p, w)?;
    Ok((analysis, vec![coherence, acf_path, verdict]))
}

/// Simulates path 0 of `cfg` and diagnoses its output.
pub fn diagnose(cfg: &ExperimentConfig) -> Result<(Analysis, Vec<PathBuf>)> {
    let r = realize(cfg, 0)?;
    diagnose_series(&r.trajectory.outputs, &cfg.diagnostics, cfg.acf_max_lag, &cfg.output_dir)
}

/// What a reproduction run is expected to find.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Expectation {
    pub class: Class,
    pub period: Option<usize>,
    pub first_offset: Option<usize>,
    /// Share of paths that must match; a share of one half means a strict
    /// majority.
    pub required_share: f64,
}

impl Expectation {
    pub fn for_config(cfg: &ExperimentConfig, stationary_control: bool) -> Self {
        if stationary_control {
            Expectation {
                class: Class::Stationary,
                period: None,
                first_offset: None,
                required_share: 0.5,
            }
        } else {
            let per_period = (cfg.subordinator.period() / cfg.sampling.delta).round() as usize;
            Expectation {
                class: Class::PeriodicallyCorrelated,
                period: Some(per_period),
                first_offset: Some(cfg.sampling.n / per_period),
                required_share: 0.9,
            }
        }
    }

    pub fn matches(&self, v: &Verdict) -> bool {
        v.class == self.class
            && v.period == self.period
            && (self.first_offset.is_none() || v.line_offsets.first().copied() == self.first_offset)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PathVerdict {
    pub index: u64,
    pub seed: u64,
    pub matches: bool,
    #[serde(flatten)]
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReproduceReport {
    pub expected: Expectation,
    pub matched: usize,
    pub paths: usize,
    pub verdicts: Vec<PathVerdict>,
    #[serde(skip)]
    pub files: Vec<PathBuf>,
}

impl ReproduceReport {
    pub fn passed(&self) -> bool {
        let (m, n) = (self.matched as f64, self.paths as f64);
        if self.expected.required_share <= 0.5 {
            m > 0.5 * n
        } else {
            m >= self.expected.required_share * n
        }
    }
}

/// Runs the full pipeline on `cfg`: trajectory and subordinator for path 0,
/// closed-form moments, and diagnostics for each of `paths` seeds.
/// Writes `config.json`, the usual artifacts, and `verdicts.json` when more
/// than one path is run.
pub fn reproduce(cfg: &ExperimentConfig, paths: u64, stationary_control: bool) -> Result<ReproduceReport> {
    if paths == 0 {
        return Err(Failure::validation("paths", "must be at least 1"));
    }
    prepare_dir(&cfg.output_dir)?;
    let expected = Expectation::for_config(cfg, stationary_control);
    let mut files = Vec::new();
    let (p, mut w) = create(&cfg.output_dir, "config.json")?;
    writeln!(w, "{}", cfg.to_json()?)?;
    files.push(finish(p, w)?);
    files.extend(simulate(cfg, 1)?);
    files.extend(moments(cfg)?);
    let (first, written) = diagnose(cfg)?;
    files.extend(written);

    let rest: Vec<(u64, u64, Verdict)> = (1..paths)
        .into_par_iter()
        .map(|i| {
            let r = realize(cfg, i)?;
            let a = analyze(&r.trajectory.outputs, &cfg.diagnostics)?;
            Ok((i, r.seed, a.verdict))
        })
        .collect::<Result<_>>()?;
    let verdicts: Vec<PathVerdict> = std::iter::once((0, derive_seed(cfg.seed, 0), first.verdict))
        .chain(rest)
        .map(|(index, seed, verdict)| PathVerdict {
            index,
            seed,
            matches: expected.matches(&verdict),
            verdict,
        })
        .collect();
    let matched = verdicts.iter().filter(|v| v.matches).count();
    let mut report = ReproduceReport {
        expected,
        matched,
        paths: verdicts.len(),
        verdicts,
        files: Vec::new(),
    };
    if paths > 1 {
        let (p, mut w) = create(&cfg.output_dir, "verdicts.json")?;
        serde_json::to_writer_pretty(&mut w, &report)?;
        writeln!(w)?;
        files.push(finish(p, w)?);
    }
    report.files = files;
    Ok(report)
}
