#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::f64::consts::TAU;
use std::time::Instant;

use common::*;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use slcarma::carma::{matrix_exp, sample_grid, simulate_euler, simulate_exact, CarmaModel};
use slcarma::diagnostics::{analyze, dft_ordinates, Class, Detrend, DiagnosticParams};
use slcarma::measure::{JumpLaw, PeriodicPartition, SubordinatorPath, SubordinatorSpec};
use slcarma::moments::{MomentEngine, PeriodicMomentSet};
use slcarma::rng::{derive_seed, substream};
use slcarma_cli::commands::reproduce;
use slcarma_cli::{ExperimentConfig, Overrides};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn reference_reproduction() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut matched = 0;
    let start = Instant::now();
    for seed in 0..20 {
        let cfg = ExperimentConfig::reference()
            .apply(&Overrides {
                seed: Some(seed),
                out: Some(dir.path().join(seed.to_string())),
                ..Default::default()
            })
            .map_err(|e| e.to_string())?;
        let report = reproduce(&cfg, 1, false).map_err(|e| e.to_string())?;
        let v = &report.verdicts[0].verdict;
        if v.class == Class::PeriodicallyCorrelated && v.period == Some(12) && v.line_offsets.first() == Some(&40) {
            matched += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(matched >= 18 && secs < 60.0, format!("{matched}/20 seeds PC(12) at offset 40 in {secs:.1} s"))
}

fn intensity_exactness() -> Outcome {
    let part = partition();
    let anchors = [(0.0, 0.0), (12.0, 46.0), (24.0, 92.0)];
    let mut ok = anchors.iter().all(|(t, w)| part.cumulative_intensity(*t).unwrap() == *w);
    let mut worst: f64 = 0.0;
    for i in 0..1000 {
        let s = PERIOD * i as f64 / 1000.0;
        let base = part.cumulative_intensity(s).unwrap();
        ok &= (base - lambda_oracle(s)).abs() <= 1e-12 * base.max(1.0);
        for k in 1..4 {
            let want = k as f64 * PERIOD_MASS + base;
            let got = part.cumulative_intensity(k as f64 * PERIOD + s).unwrap();
            worst = worst.max((got - want).abs() / want);
        }
    }
    ok &= worst <= 4.0 * f64::EPSILON;
    check(ok, format!("max relative gap {worst:.1e} over 1000 phases"))
}

fn subordinator_moments() -> Outcome {
    let spec = spec(1);
    let values: Vec<f64> = (0..10_000)
        .into_par_iter()
        .map(|i| spec.simulate(derive_seed(14, i)).value(PERIOD))
        .collect();
    let n = values.len() as f64;
    let (m, sd) = mean_sd(&values);
    let var = sd * sd;
    let m4 = values.iter().map(|v| (v - m).powi(4)).sum::<f64>() / n;
    let (se_m, se_v) = (sd / n.sqrt(), ((m4 - var * var) / n).sqrt());
    check(
        (m - 138.0).abs() < 3.0 * se_m && (var - 460.0).abs() < 3.0 * se_v,
        format!("mean {m:.2} (se {se_m:.2}), variance {var:.1} (se {se_v:.1})"),
    )
}

fn characteristic_function() -> Outcome {
    let spec = spec(2);
    let pairs = [(0u32, 3.0), (1, 0.5), (1, 7.5)];
    let us = [0.5, 1.0, 2.0];
    let mut fact: f64 = 0.0;
    for (k, s) in pairs {
        for u in us {
            let whole = spec.characteristic_function(k as f64 * PERIOD + s, u).unwrap();
            let parts = spec.characteristic_function(PERIOD, u).unwrap().powu(k)
                * spec.characteristic_function(s, u).unwrap();
            fact = fact.max((whole - parts).norm() / whole.norm());
        }
    }
    let n = 100_000u64;
    let samples: Vec<[f64; 3]> = (0..n)
        .into_par_iter()
        .map(|i| {
            let p = spec.simulate(derive_seed(15, i));
            let mut out = [0.0; 3];
            for (o, (k, s)) in out.iter_mut().zip(pairs) {
                *o = p.value(k as f64 * PERIOD + s);
            }
            out
        })
        .collect();
    let mut emp_gap: f64 = 0.0;
    for (j, (k, s)) in pairs.iter().enumerate() {
        for u in us {
            let emp: Complex64 =
                samples.iter().map(|x| Complex64::from_polar(1.0, u * x[j])).sum::<Complex64>() / n as f64;
            let exact = spec.characteristic_function(*k as f64 * PERIOD + s, u).unwrap();
            emp_gap = emp_gap.max((emp - exact).norm());
        }
    }
    let tol = 4.0 * (2.0 / n as f64).sqrt();
    check(
        fact <= 1e-12 && emp_gap < tol,
        format!("factorization gap {fact:.1e}, empirical gap {emp_gap:.4} (tol {tol:.4})"),
    )
}

fn moments_oracle() -> Outcome {
    const PHASES: [f64; 3] = [1.0, 4.5, 9.25];
    const LAGS: [f64; 2] = [0.5, 2.0];
    let spec = spec(2);
    let m = model();
    let mut times: Vec<f64> = PHASES
        .iter()
        .flat_map(|s| std::iter::once(0.0).chain(LAGS).map(move |h| PERIOD + s + h))
        .collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let col = |t: f64| times.iter().position(|x| *x == t).unwrap();
    let n = 10_000u64;
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let seed = derive_seed(21, i);
            let path = spec.simulate(seed).with_burn_in(&spec, 10, seed).unwrap();
            simulate_exact(&m, &path, &times).unwrap().outputs
        })
        .collect();
    let column = |j: usize| rows.iter().map(|r| r[j]).collect::<Vec<f64>>();
    let set = PeriodicMomentSet::compute(&m, &spec, &PHASES, &LAGS).unwrap();
    let mut worst: f64 = 0.0;
    for (i, s) in PHASES.iter().enumerate() {
        let y0 = column(col(PERIOD + s));
        let (mean0, sd0) = mean_sd(&y0);
        worst = worst.max((mean0 - set.output_means[i]).abs() / (sd0 / (n as f64).sqrt()));
        for (j, h) in LAGS.iter().enumerate() {
            let y1 = column(col(PERIOD + s + h));
            let (mean1, _) = mean_sd(&y1);
            let prods: Vec<f64> = y0.iter().zip(&y1).map(|(a, b)| (a - mean0) * (b - mean1)).collect();
            let (cov, sd) = mean_sd(&prods);
            worst = worst.max((cov - set.output_autocov[i][j]).abs() / (sd / (n as f64).sqrt()));
        }
    }
    let part = partition();
    let engine = MomentEngine::new(&m, &part).unwrap();
    let mut periodic = true;
    for s in PHASES {
        for k in [1.0, 2.0, 5.0] {
            let t = s + k * PERIOD;
            periodic &= engine.output_mean(0.0, KAPPA, s).unwrap() == engine.output_mean(0.0, KAPPA, t).unwrap();
            for h in LAGS {
                periodic &= engine.output_autocov(BETA, s, h).unwrap() == engine.output_autocov(BETA, t, h).unwrap();
            }
        }
    }
    check(
        worst < 3.0 && periodic,
        format!("largest deviation {worst:.2} SE, phase wrap exact: {periodic}"),
    )
}

fn ou_special_case() -> Outcome {
    let (alpha, mass, period, gamma) = (0.8, 6.0, 3.0, 0.4);
    let m = CarmaModel::new(vec![alpha], vec![1.0]).unwrap();
    let spec = SubordinatorSpec::new(
        gamma,
        PeriodicPartition::homogeneous(period, mass).unwrap(),
        JumpLaw::Exponential { rate: 2.0 },
        1,
        true,
    )
    .unwrap();
    let (kappa, beta) = (0.5, 0.5);
    let set = PeriodicMomentSet::compute(&m, &spec, &[0.0, 1.1, 2.9], &[0.0, 0.5, 1.0, 2.0]).unwrap();
    let mean = (gamma + mass * kappa / period) / alpha;
    let var = beta * (mass / period) / (2.0 * alpha);
    let (mut abs_gap, mut rel_gap): (f64, f64) = (0.0, 0.0);
    for i in 0..set.phases.len() {
        abs_gap = abs_gap.max((set.output_means[i] - mean).abs());
        abs_gap = abs_gap.max((set.output_autocov[i][0] - var).abs());
        for (j, h) in set.lags.iter().enumerate().skip(1) {
            let want = var * (-alpha * h).exp();
            rel_gap = rel_gap.max((set.output_autocov[i][j] - want).abs() / want);
        }
    }
    check(
        abs_gap <= 1e-8 && rel_gap <= 1e-8,
        format!("mean/variance gap {abs_gap:.1e}, decay relative gap {rel_gap:.1e}"),
    )
}

fn kernel_superposition() -> Outcome {
    let m = model();
    let path = SubordinatorPath::from_events(
        0.0,
        12.0,
        vec![0.7, 2.25, 2.9, 6.1, 9.4],
        vec![3.2, -1.5, 2.0, 4.4, 0.8],
    )
    .unwrap();
    let times: Vec<f64> = (1..=50).map(|i| i as f64 * 0.24).collect();
    let traj = simulate_exact(&m, &path, &times).unwrap();
    let worst = times
        .iter()
        .zip(&traj.outputs)
        .map(|(t, y)| {
            let want: f64 = path
                .event_times
                .iter()
                .zip(&path.jump_sizes)
                .filter(|(tau, _)| *tau <= t)
                .map(|(tau, j)| kernel_oracle(t - tau) * j)
                .sum();
            (y - want).abs()
        })
        .fold(0.0, f64::max);
    check(worst < 1e-10, format!("max gap {worst:.1e} at 50 times"))
}

fn euler_convergence() -> Outcome {
    let path = spec(2).simulate(7);
    let grid = sample_grid(24, 1.0);
    let ou = CarmaModel::new(vec![1.0], vec![1.0]).unwrap();
    let exact = simulate_exact(&ou, &path, &grid).unwrap();
    let gaps: Vec<f64> = [0.1, 0.05, 0.025]
        .iter()
        .map(|h| {
            let euler = simulate_euler(&ou, &path, *h, &grid).unwrap();
            exact.outputs.iter().zip(&euler.outputs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        })
        .collect();
    let orders: Vec<f64> = gaps.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    check(
        orders.iter().all(|o| (0.8..=1.2).contains(o)),
        format!("observed orders {:.3}, {:.3}", orders[0], orders[1]),
    )
}

fn null_calibration() -> Outcome {
    let params = DiagnosticParams {
        smoothing_m: 40,
        alpha: 0.01,
        detrend: Detrend::Mean,
        detection: Default::default(),
    };
    let runs: Vec<_> = (0..50u64)
        .map(|seed| {
            let mut rng = substream(seed, 7, 0);
            let x: Vec<f64> = (0..480).map(|_| rng.sample(StandardNormal)).collect();
            analyze(&x, &params).unwrap()
        })
        .collect();
    let rate = runs.iter().map(|a| a.mask.off_diagonal_rate()).sum::<f64>() / 50.0;
    let stationary = runs.iter().filter(|a| a.verdict.class == Class::Stationary).count();
    check(
        (0.002..=0.03).contains(&rate) && stationary >= 45,
        format!("mean rate {rate:.4}, {stationary}/50 stationary"),
    )
}

fn numerical_kernels() -> Outcome {
    let i3 = DMatrix::<f64>::identity(3, 3);
    let t = 1.3;
    let nil = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
    let nil_exp = DMatrix::from_row_slice(3, 3, &[1.0, t, t * t / 2.0, 0.0, 1.0, t, 0.0, 0.0, 1.0]);
    let analytic = [
        (matrix_exp(&i3, 0.7).unwrap() - &i3 * 0.7f64.exp()).amax() / 0.7f64.exp(),
        (matrix_exp(&nil, t).unwrap() - nil_exp).amax(),
        (matrix_exp(&(&i3 * -0.4), 2.0).unwrap() - &i3 * (-0.8f64).exp()).amax(),
    ]
    .into_iter()
    .fold(0.0, f64::max);

    let mut rng = substream(2024, 1, 0);
    let mut semigroup: f64 = 0.0;
    for _ in 0..100 {
        let mut a = DMatrix::from_fn(3, 3, |_, _| rng.random_range(-2.0f64..2.0));
        let shift = (0..3)
            .map(|i| (0..3).filter(|j| *j != i).map(|j| a[(i, j)].abs()).sum::<f64>() + a[(i, i)])
            .fold(f64::MIN, f64::max);
        for i in 0..3 {
            a[(i, i)] -= shift + 0.1;
        }
        let (s, u) = (rng.random_range(0.0..2.0), rng.random_range(0.0..2.0));
        let whole = matrix_exp(&a, s + u).unwrap();
        let prod = matrix_exp(&a, s).unwrap() * matrix_exp(&a, u).unwrap();
        semigroup = semigroup.max((&whole - &prod).amax() / whole.amax());
    }

    let mut rng = substream(31, 0, 0);
    let mut dft: f64 = 0.0;
    for _ in 0..20 {
        let n = rng.random_range(2..300);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        for (p, z) in dft_ordinates(&x).unwrap().iter().enumerate() {
            let naive: Complex64 = x
                .iter()
                .enumerate()
                .map(|(t, v)| v * Complex64::from_polar(1.0, TAU * (t * p % n) as f64 / n as f64))
                .sum();
            dft = dft.max((z - naive).norm());
        }
    }
    check(
        analytic <= 1e-12 && semigroup <= 1e-10 && dft <= 1e-9,
        format!("analytic {analytic:.1e}, semigroup {semigroup:.1e}, dft {dft:.1e}"),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("reference reproduction", reference_reproduction),
        ("intensity exactness", intensity_exactness),
        ("subordinator moments", subordinator_moments),
        ("characteristic function", characteristic_function),
        ("moments vs ensemble", moments_oracle),
        ("OU special case", ou_special_case),
        ("kernel superposition", kernel_superposition),
        ("Euler convergence", euler_convergence),
        ("null calibration", null_calibration),
        ("numerical kernels", numerical_kernels),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let (tag, detail) = match run() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {:>2} {tag} {name}: {detail}", i + 1);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
