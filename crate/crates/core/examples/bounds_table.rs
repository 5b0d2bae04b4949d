//! Closed-form rates, T* and sample complexities for a few tail indices.

use nsgd_lab::prelude::*;

fn main() -> Result<()> {
    for p in [1.2, 1.5, 2.0] {
        let params = ProblemParams::new(1.0, 1.0, 1.0, p, 1000).with_eps(0.1).with_delta_fail(0.01);
        println!("p = {p}");
        println!("  expectation rate          {:.4}", rate_tuned(&params));
        println!("  high-probability rate     {:.4}", rate_tuned_hp(&params)?);
        println!("  momentum (tuned) rate     {:.4}", rate_nsgdm_tuned(&params)?);
        let table = sample_complexity_table(
            &params,
            &[
                ComplexityPreset::Tuned,
                ComplexityPreset::ParamFree,
                ComplexityPreset::FirstOrderLowerBound,
                ComplexityPreset::ClipSgdHighProb,
            ],
        )?;
        for row in table {
            println!("  {:<24} {:>12.4e}  eps exponents {:?}", row.label, row.value, row.eps_exponents);
        }
    }
    let tstar = tstar_deterministic(0.1, 1.0, 1.0, &StepSequence::Constant { eta: 0.1 }, DEFAULT_TSTAR_CAP)?;
    println!("T* for eps=0.1, constant step 0.1: {tstar}");
    println!("lower bound on rms at T=100: {:.4}", measure_gap_lb(1.0, 1.0, 100)?);
    Ok(())
}
