//! Tuned minibatch NSGD on a 10-d quadratic with Gaussian noise, compared
//! against the closed-form expectation rate.

use nsgd_lab::prelude::*;

fn main() -> Result<()> {
    let horizon = 100;
    let fill = 1.0 / 10f64.sqrt();
    let config = ExperimentConfig::new(
        ProblemSpec::Quadratic {
            dim: 10,
            x1: None,
            x1_fill: Some(fill),
        },
        OracleSpec::Gaussian { scale: fill },
        OptimizerChoice::Preset {
            rule: UpdateRule::Nsgd,
            preset: PresetSpec::TunedMinibatch { p: 2.0, sigma: Some(1.0) },
        },
        horizon,
        200,
        42,
    );
    let prepared = config.prepare()?;
    println!("resolved optimizer: {:?}", prepared.spec);

    let res = estimate_expectation(&config)?;
    let bound = rate_tuned(&ProblemParams::new(prepared.problem.delta1, 1.0, 1.0, 2.0, horizon));
    println!(
        "mean avg grad norm {:.4} (se {:.1e}) vs rate {:.4}",
        res.mean,
        res.std_error.unwrap_or(0.0),
        bound
    );
    Ok(())
}
