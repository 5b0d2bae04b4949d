//! Monte-Carlo deviation of the momentum estimator against its bound.

use nsgd_lab::prelude::*;

fn main() -> Result<()> {
    let eta = 0.05;
    let problem = make_quadratic(10, vec![0.3; 10])?;
    // Per-coordinate scale 1/√10 makes the certified second moment 1.
    let oracle = AdditiveOracle::new(problem.clone(), NoiseSpec::gaussian(1.0 / 10f64.sqrt()));
    for beta in [0.0, 0.5, 0.9, 0.99] {
        let momentum = MomentumSchedule::Constant { beta };
        let spec = OptimizerSpec::nsgd(StepSchedule::Constant { eta }).with_momentum(momentum);
        let trials = 1000;
        let mut sum = [0.0; 2];
        for trial in 0..trials {
            let run = run_trajectory(&problem, &oracle, &spec, 100, &mut trial_rng(5, trial), &RunOptions::default())?;
            sum[0] += run.records[9].estimate_error;
            sum[1] += run.records[99].estimate_error;
        }
        for (i, t) in [10usize, 100].into_iter().enumerate() {
            let betas: Vec<f64> = (1..=t as u64).map(|s| momentum.at(s)).collect();
            let rhs = momentum_deviation_rhs(1.0, &vec![eta; t], &betas, 1.0, 2.0)?;
            println!("beta={beta:<4} t={t:>3}: mean deviation {:.4}, bound {rhs:.4}", sum[i] / trials as f64);
        }
    }
    Ok(())
}
