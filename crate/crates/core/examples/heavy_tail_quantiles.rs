//! Quantiles of the average gradient norm under infinite-variance noise:
//! NSGD stays light-tailed while SGD inherits the noise tail.

use nsgd_lab::prelude::*;

fn main() -> Result<()> {
    let deltas = [0.5, 0.1, 0.01, 0.001];
    for rule in [UpdateRule::Nsgd, UpdateRule::Sgd] {
        let spec = OptimizerSpec::new(rule, StepSchedule::Constant { eta: 0.05 });
        let config = ExperimentConfig::new(
            ProblemSpec::Quadratic {
                dim: 10,
                x1: None,
                x1_fill: Some(0.3),
            },
            OracleSpec::SymmetrizedPareto {
                tail_index: 1.5,
                scale: 1.0,
            },
            OptimizerChoice::Explicit(spec),
            100,
            10_000,
            7,
        );
        let table = quantile_curve(&config, &deltas)?;
        let profile = slope_profile(&table, &SlopeVote::default())?;
        println!("{}:", rule.name());
        for row in &table.rows {
            println!("  delta={:<6} log(1/delta)={:.2} quantile={:.4}", row.delta, row.log_inv_delta, row.quantile);
        }
        println!("  slopes {:?} -> {}", profile.slopes, profile.class.name());
    }
    Ok(())
}
