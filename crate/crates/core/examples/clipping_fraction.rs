//! Clip-SGD with a small constant threshold clips nearly every step; the
//! increasing threshold γ t^{1/(3p−2)} stops clipping as t grows.

use nsgd_lab::prelude::*;

fn main() -> Result<()> {
    let gamma = 0.1;
    for (name, clip) in [
        ("constant", ClipSchedule::Constant { gamma }),
        ("increasing", clip_theory_preset(gamma, 1.5)?),
    ] {
        let spec = OptimizerSpec::clip_sgd(StepSchedule::Constant { eta: 0.01 }, clip);
        let config = ExperimentConfig::new(
            ProblemSpec::Quadratic {
                dim: 10,
                x1: None,
                x1_fill: Some(0.3),
            },
            OracleSpec::SymmetrizedPareto {
                tail_index: 2.5,
                scale: 0.1,
            },
            OptimizerChoice::Explicit(spec),
            1000,
            100,
            3,
        );
        let table = clip_fraction_study(&config, 200)?;
        let fractions: Vec<String> = table.windows.iter().map(|w| format!("{:.3}", w.clip_fraction)).collect();
        println!("{name:>10}: {}", fractions.join(" "));
    }
    Ok(())
}
