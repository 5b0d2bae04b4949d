//! The one-dimensional function on which normalized gradient descent with
//! a constant step keeps a gradient of size 2ε for T* iterations.

use nsgd_lab::prelude::*;

fn main() -> Result<()> {
    let spec = HardInstanceSpec {
        eps: 0.1,
        step: 0.1,
        delta1: 1.0,
        smoothness: 1.0,
        horizon_cap: DEFAULT_TSTAR_CAP,
    };
    let problem = make_hard_deterministic(&spec)?;
    let hard = *problem.hard_instance().unwrap();
    println!("T* = {}, inf F = {:.4}", hard.tstar, problem.f_star);

    let oracle = AdditiveOracle::new(problem.clone(), NoiseSpec::none());
    let opt = OptimizerSpec::nsgd(StepSchedule::Constant { eta: spec.step });
    let run = run_trajectory(&problem, &oracle, &opt, hard.tstar + 3, &mut trial_rng(0, 0), &RunOptions::default())?;
    for r in run.records.iter().filter(|r| r.t % 10 == 1 || r.t > hard.tstar - 2) {
        println!("t={:>3} F={:.5} |F'|={:.5}", r.t, r.loss, r.grad_norm);
    }
    Ok(())
}
