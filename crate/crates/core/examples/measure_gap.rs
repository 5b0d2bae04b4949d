//! Deterministic NSGD on ½x²: the average gradient norm meets the √(1/T)
//! rate while the root-mean-square norm is larger by a factor ~T^{1/4}.

use nsgd_lab::prelude::*;

fn main() -> Result<()> {
    let rows = measure_gap_experiment(1.0, &[25, 100, 400, 1600, 6400])?;
    println!("{:>6} {:>10} {:>10} {:>8} {:>10}", "T", "avg", "rms", "rms/avg", "T^(1/4)");
    for r in &rows {
        println!(
            "{:>6} {:>10.5} {:>10.5} {:>8.3} {:>10.3}",
            r.horizon,
            r.avg_grad_norm,
            r.rms_grad_norm,
            r.rms_grad_norm / r.avg_grad_norm,
            (r.horizon as f64).powf(0.25)
        );
    }
    write_measure_gap_csv(&rows, std::io::stdout(), "example")?;
    Ok(())
}
