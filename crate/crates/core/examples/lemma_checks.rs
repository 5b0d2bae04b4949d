//! The standalone inequalities as executable checks.

use nsgd_lab::prelude::*;

fn main() -> Result<()> {
    let r = check_cosine_lemma(&[1.0, 0.0], &[0.0, 1.0])?;
    println!("{}: {:.4} <= {:.4}", r.name, r.observed, r.bound);

    let mut rng = trial_rng(0, 0);
    let r = check_von_bahr_esseen(&NoiseSpec::symmetrized_pareto(2.5, 1.0), 3, 64, 1.5, 20_000, &mut rng)?;
    println!("{}: {:.3} <= {:.3} (+{:.3})", r.name, r.observed, r.bound, r.tolerance);

    let problem = make_quadratic(3, vec![1.0, -1.0, 0.5])?;
    let oracle = AdditiveOracle::new(problem.clone(), NoiseSpec::symmetrized_pareto(2.5, 0.5));
    let (r, per_batch) = check_minibatch_deviation(&oracle, &[0.2, 0.1, 0.0], 1.5, &[1, 4, 16, 64], 5000, &mut rng)?;
    println!("{}: passed={}", r.name, r.passed);
    for d in per_batch {
        println!("  B={:>3} deviation {:.4} <= {:.4}", d.batch, d.mean_deviation, d.bound);
    }

    for suite in [Suite::Adversarial, Suite::Descent] {
        let reports = run_suite(suite, 1, 1000)?;
        let failed = reports.iter().filter(|r| !r.passed).count();
        println!("{suite:?} suite: {} checks, {failed} failed", reports.len());
    }
    Ok(())
}
