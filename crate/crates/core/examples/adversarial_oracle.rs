//! The two-point adversarial oracle: unbiased, with p-th central moment at
//! most σ^p, yet pushing normalized steps the wrong way with probability δ.

use nsgd_lab::prelude::*;

fn main() -> Result<()> {
    let spec = AdversarialSpec::new(1.5, 1.0, 1.0 / 6.0)?;
    println!("{:>10} {:>10} {:>12} {:>12}", "|grad|", "delta", "moment", "bias");
    for g in adversarial_grid(&spec, 8) {
        println!(
            "{g:>10.4} {:>10.4} {:>12.4e} {:>12.1e}",
            adversarial_delta(&spec, g),
            adversarial_p_moment(&spec, g),
            adversarial_bias(&spec, g)
        );
    }
    let report = check_adversarial_oracle(&spec, &adversarial_grid(&spec, 100))?;
    println!("{}: passed={} (observed {:.4} <= {})", report.name, report.passed, report.observed, report.bound);

    let mut rng = trial_rng(1, 0);
    let draws: Vec<f64> = (0..5).map(|_| sample_adversarial(&spec, &[0.2], &mut rng).grad[0]).collect();
    println!("samples at grad 0.2: {draws:?}");
    Ok(())
}
