//! Grid search over step scale, decay and clipping threshold for Clip-SGD,
//! with common random numbers across cells.

use nsgd_lab::prelude::*;

fn main() -> Result<()> {
    let spec = OptimizerSpec::clip_sgd(StepSchedule::Constant { eta: 0.05 }, ClipSchedule::Constant { gamma: 1.0 });
    let template = ExperimentConfig::new(
        ProblemSpec::Cauchy {
            dim: 5,
            x1: None,
            x1_fill: Some(1.0),
        },
        OracleSpec::SymmetrizedPareto {
            tail_index: 1.5,
            scale: 0.3,
        },
        OptimizerChoice::Explicit(spec),
        200,
        20,
        11,
    );
    let grid = GridSpec {
        eta: vec![0.01, 0.05, 0.2],
        r: vec![0.0, 0.5],
        gamma: vec![0.1, 1.0, 10.0],
    };
    let result = grid_search(&template, &grid)?;
    result.write_csv(std::io::stdout(), "example")?;
    let b = &result.best;
    println!("best: eta={} r={} gamma={:?} score={:.4}", b.eta, b.r, b.gamma, b.score);
    Ok(())
}
