// Symmetric Lipschitz losses on the symmetric counterexample: the spike's
// risk gap stays below |L|₁/(2n) + 1/n − 1/(2n²) while its L1 norm is 1.

use shiftcons::constructions::{a_x, run_counterexample, CounterexampleMode, McConfig};
use shiftcons::LossSpec;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    for name in ["absolute", "huber:1", "eps:0.25"] {
        let loss: LossSpec = name.parse()?;
        println!("{name}: atoms at ±a_x, a_0.25 = {}", a_x(&loss, 0.25)?);
        let table = run_counterexample(
            CounterexampleMode::symmetric(loss)?,
            &[2, 10, 100],
            McConfig { samples: 100_000, seed: 3 },
        )?;
        for r in &table.rows {
            println!(
                "  n={:<4} gap={:.10} bound={:.6} L1={}",
                r.n,
                r.exact_gap,
                r.bound_gap.unwrap_or(f64::NAN),
                r.exact_l1
            );
        }
        if !table.all_pass() {
            return Err(format!("{name}: {:?}", table.checks).into());
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
