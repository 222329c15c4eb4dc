// The spike f_n = n·1(0,1/n) under the pinball counterexample: its shifted
// risk gap to the conditional quantile 0 is (1−τ)(2n−1)/(4n²) → 0 while
// ‖f_n‖_{L1} = 1 for every n.

use shiftcons::constructions::{run_counterexample, CounterexampleMode, McConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    for tau in [0.3, 0.5, 0.9] {
        let table = run_counterexample(
            CounterexampleMode::pinball(tau)?,
            &[2, 10, 100, 1000],
            McConfig { samples: 200_000, seed: 42 },
        )?;
        println!("τ = {tau}");
        println!("{:>6} {:>14} {:>14} {:>10} {:>8}", "n", "exact gap", "closed form", "mc gap", "L1");
        for r in &table.rows {
            let n = r.n as f64;
            let closed = (1.0 - tau) * (2.0 * n - 1.0) / (4.0 * n * n);
            println!(
                "{:>6} {:>14.8e} {:>14.8e} {:>10.5} {:>8.4}",
                r.n, r.exact_gap, closed, r.mc_gap, r.exact_l1
            );
            assert!((r.exact_gap - closed).abs() <= 1e-12 * closed);
        }
        if !table.all_pass() {
            return Err(format!("checks failed: {:?}", table.checks).into());
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
