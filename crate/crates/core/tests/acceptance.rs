//! Acceptance criteria, one line per criterion. Run with
//! `cargo test --test acceptance`; exits nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use nsgd_lab::prelude::*;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { passed, detail })
}

const SQRT10: f64 = 3.1622776601683795;

/// Quadratic in R^10 with every coordinate of x1 equal to `fill`.
fn quadratic10(fill: f64) -> ProblemSpec {
    ProblemSpec::Quadratic {
        dim: 10,
        x1: None,
        x1_fill: Some(fill),
    }
}

/// Gaussian noise whose certified second-moment bound in R^10 is `sigma`.
fn gaussian10(sigma: f64) -> OracleSpec {
    OracleSpec::Gaussian { scale: sigma / SQRT10 }
}

/// Tuned minibatch NSGD; `sigma = None` uses the oracle's certified bound.
fn tuned(p: f64, sigma: Option<f64>) -> OptimizerChoice {
    OptimizerChoice::Preset {
        rule: UpdateRule::Nsgd,
        preset: PresetSpec::TunedMinibatch { p, sigma },
    }
}

fn c1() -> Result<Outcome> {
    // ‖x1‖ = 1, so Δ₁ = 0.5.
    let config = ExperimentConfig::new(quadratic10(1.0 / SQRT10), gaussian10(1.0), tuned(2.0, Some(1.0)), 100, 200, 1);
    let batch = match config.prepare()?.spec.estimator {
        EstimatorSpec::Minibatch { batch } => batch.at(1, 100),
        _ => unreachable!(),
    };
    let res = estimate_expectation(&config)?;
    let bound = 6.0 * (0.5f64 / 100.0).sqrt();
    outcome(
        res.diverged == 0 && res.mean <= bound,
        format!("B={batch} mean={:.4} bound={bound:.4}", res.mean),
    )
}

fn c2() -> Result<Outcome> {
    let oracle = OracleSpec::SymmetrizedPareto {
        tail_index: 2.5,
        scale: 0.1,
    };
    let config = ExperimentConfig::new(quadratic10(1.0 / SQRT10), oracle, tuned(1.5, None), 100, 200, 2);
    let sigma = oracle.certified_sigma(1.5, 10)?;
    let batch = match config.prepare()?.spec.estimator {
        EstimatorSpec::Minibatch { batch } => batch.at(1, 100),
        _ => unreachable!(),
    };
    let values = trial_statistics(&config)?;
    let bound = 6.0 * (0.5f64 / 100.0).sqrt();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let worst = values.iter().copied().fold(0.0, f64::max);
    outcome(
        mean <= bound && worst <= bound,
        format!("sigma_1.5={sigma:.4} B={batch} mean={mean:.4} max over trials={worst:.4} bound={bound:.4}"),
    )
}

fn c3() -> Result<Outcome> {
    let spec = HardInstanceSpec {
        eps: 0.1,
        step: 0.1,
        delta1: 1.0,
        smoothness: 1.0,
        horizon_cap: DEFAULT_TSTAR_CAP,
    };
    let problem = make_hard_deterministic(&spec)?;
    let tstar = problem.hard_instance().unwrap().tstar;
    let scanned = tstar_deterministic(0.1, 1.0, 1.0, &StepSequence::Constant { eta: 0.1 }, DEFAULT_TSTAR_CAP)?;
    let oracle = AdditiveOracle::new(problem.clone(), NoiseSpec::none());
    let run = run_trajectory(
        &problem,
        &oracle,
        &OptimizerSpec::nsgd(StepSchedule::Constant { eta: 0.1 }),
        tstar,
        &mut trial_rng(0, 0),
        &RunOptions::default(),
    )?;
    let worst = run.records.iter().map(|r| (r.grad_norm - 0.2).abs()).fold(0.0, f64::max);
    outcome(
        tstar == 52 && scanned == tstar && run.records.len() == 52 && worst <= 1e-10,
        format!("T*={tstar} scan={scanned} max |grad - 0.2|={worst:.2e}"),
    )
}

fn c4() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    let mut all = true;
    for p in [1.1, 1.5, 2.0] {
        for rho in [0.0, 1.0 / 6.0] {
            for sigma in [1.0, 4.0] {
                let spec = AdversarialSpec::new(p, sigma, rho)?;
                let r = check_adversarial_oracle(&spec, &adversarial_grid(&spec, 100))?;
                all &= r.passed;
                worst = worst.max(r.observed);
            }
        }
    }
    outcome(all, format!("12 settings, worst normalized moment/residual={worst:.4}"))
}

fn c5() -> Result<Outcome> {
    let mut rng = trial_rng(5, 0);
    let mut all = true;
    let mut worst = f64::NEG_INFINITY;
    for noise in [NoiseSpec::gaussian(1.0), NoiseSpec::symmetrized_pareto(2.5, 1.0)] {
        for n in [1, 8, 64] {
            for p in [1.5, 2.0] {
                let r = check_von_bahr_esseen(&noise, 1, n, p, 100_000, &mut rng)?;
                all &= r.passed;
                worst = worst.max(r.observed / r.bound);
            }
        }
    }
    outcome(all, format!("12 settings, largest lhs/rhs={worst:.4}"))
}

fn c6() -> Result<Outcome> {
    let r = descent_batch(50, &mut trial_rng(6, 0))?;
    outcome(r.passed, format!("50 runs, largest excess={:.3e}", r.observed))
}

fn c7() -> Result<Outcome> {
    let deltas = [0.5, 0.1, 0.01, 0.001];
    let oracle = OracleSpec::SymmetrizedPareto {
        tail_index: 1.5,
        scale: 1.0,
    };
    let step = StepSchedule::Constant { eta: 0.05 };
    let mut classes = Vec::new();
    for rule in [UpdateRule::Nsgd, UpdateRule::Sgd] {
        let spec = OptimizerSpec::new(rule, step);
        let config = ExperimentConfig::new(quadratic10(1.0 / SQRT10), oracle, OptimizerChoice::Explicit(spec), 100, 10_000, 7);
        let table = quantile_curve(&config, &deltas)?;
        let profile = slope_profile(&table, &SlopeVote::default())?;
        classes.push(profile.class);
    }
    let nsgd_ok = matches!(classes[0], SlopeClass::Sublinear | SlopeClass::Linear);
    outcome(
        nsgd_ok && classes[1] == SlopeClass::Superlinear,
        format!("nsgd={} sgd={}", classes[0].name(), classes[1].name()),
    )
}

fn c8() -> Result<Outcome> {
    // Every coordinate √(2/10) gives ‖x1‖² = 2, so Δ₁ = 1.
    let config = ExperimentConfig::new(quadratic10((0.2f64).sqrt()), gaussian10(1.0), tuned(2.0, Some(1.0)), 100, 10_000, 8);
    let table = quantile_curve(&config, &[0.1, 0.01])?;
    let mut ok = true;
    let mut parts = Vec::new();
    for row in &table.rows {
        let bound = (11.0 + 30.0 * row.log_inv_delta) * (1.0f64 / 100.0).sqrt();
        ok &= row.quantile <= bound;
        parts.push(format!("q({})={:.4}<={bound:.3}", row.delta, row.quantile));
    }
    outcome(ok, parts.join(" "))
}

fn c9() -> Result<Outcome> {
    let rows = measure_gap_experiment(1.0, &[100, 400, 1600])?;
    let (delta1, l) = (0.5, 1.0);
    let mut ok = true;
    let mut parts = Vec::new();
    for r in &rows {
        let t = r.horizon as f64;
        let lb = 2.0 / 3.0 * (delta1 * l / t).sqrt() * t.powf(0.25);
        let ub = 6.0 * (delta1 * l / t).sqrt();
        ok &= r.rms_grad_norm >= lb && r.avg_grad_norm <= ub;
        parts.push(format!("T={} rms/avg={:.3}", r.horizon, r.rms_grad_norm / r.avg_grad_norm));
    }
    for w in rows.windows(2) {
        let growth = (w[1].rms_grad_norm / w[1].avg_grad_norm) / (w[0].rms_grad_norm / w[0].avg_grad_norm);
        let expected = (w[1].horizon as f64 / w[0].horizon as f64).powf(0.25);
        ok &= growth > 1.0 && (growth / expected - 1.0).abs() <= 0.25;
        parts.push(format!("growth={growth:.3} vs {expected:.3}"));
    }
    outcome(ok, parts.join(" "))
}

fn c10() -> Result<Outcome> {
    let oracle = OracleSpec::SymmetrizedPareto {
        tail_index: 2.5,
        scale: 0.1,
    };
    let gamma = 0.1;
    let step = StepSchedule::Constant { eta: 0.01 };
    let mut fractions = Vec::new();
    for clip in [ClipSchedule::Constant { gamma }, clip_theory_preset(gamma, 1.5)?] {
        let spec = OptimizerSpec::clip_sgd(step, clip);
        let config = ExperimentConfig::new(quadratic10(1.0 / SQRT10), oracle, OptimizerChoice::Explicit(spec), 1000, 100, 10);
        let table = clip_fraction_study(&config, 100)?;
        fractions.push(table.windows.last().unwrap().clip_fraction);
    }
    outcome(
        fractions[0] >= 0.9 && fractions[1] < fractions[0],
        format!("final window: constant={:.3} increasing={:.3}", fractions[0], fractions[1]),
    )
}

fn c11() -> Result<Outcome> {
    let eta = 0.05;
    let checkpoints = [10u64, 100];
    let mut ok = true;
    let mut parts = Vec::new();
    for beta in [0.0, 0.5, 0.9] {
        let spec = OptimizerSpec::nsgd(StepSchedule::Constant { eta }).with_momentum(MomentumSchedule::Constant { beta });
        let config = ExperimentConfig::new(quadratic10(1.0 / SQRT10), gaussian10(1.0), OptimizerChoice::Explicit(spec), 100, 4000, 11);
        let errors = run_trials(&config, 1, |_, traj| {
            checkpoints.map(|t| traj.records[t as usize - 1].estimate_error)
        })?;
        for (i, &t) in checkpoints.iter().enumerate() {
            let vals: Vec<f64> = errors.iter().map(|e| e[i]).collect();
            let n = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / n;
            let se = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();
            let betas: Vec<f64> = (1..=t).map(|s| MomentumSchedule::Constant { beta }.at(s)).collect();
            let rhs = momentum_deviation_rhs(1.0, &vec![eta; t as usize], &betas, 1.0, 2.0)?;
            ok &= mean <= rhs + 3.0 * se;
            parts.push(format!("b={beta} t={t}: {mean:.3}<={rhs:.3}"));
        }
    }
    outcome(ok, parts.join(" "))
}

type Criterion = (u32, &'static str, Duration, fn() -> Result<Outcome>);

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        (1, "expectation bound, Gaussian noise", Duration::from_secs(10), c1),
        (2, "expectation bound, Pareto tail 2.5", Duration::from_secs(60), c2),
        (3, "deterministic hard instance", Duration::from_secs(1), c3),
        (4, "adversarial oracle certification", Duration::from_secs(1), c4),
        (5, "von Bahr-Esseen inequality", Duration::from_secs(30), c5),
        (6, "descent ledger on random runs", Duration::from_secs(60), c6),
        (7, "quantile slope classes", Duration::from_secs(300), c7),
        (8, "high-probability bound", Duration::from_secs(120), c8),
        (9, "measure gap", Duration::from_secs(5), c9),
        (10, "clipping fraction", Duration::from_secs(30), c10),
        (11, "momentum deviation bound", Duration::from_secs(60), c11),
    ];
    let mut failed = 0;
    for (id, name, limit, f) in criteria {
        let start = Instant::now();
        let result = f();
        let elapsed = start.elapsed();
        let in_time = elapsed <= limit;
        let (passed, detail) = match result {
            Ok(o) => (o.passed && in_time, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        failed += !passed as u32;
        println!(
            "criterion {id:>2} {}: {name}; {detail}; {:.2}s (limit {}s{})",
            if passed { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            limit.as_secs(),
            if in_time { "" } else { ", over time" }
        );
    }
    println!("{} of 11 criteria passed", 11 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
