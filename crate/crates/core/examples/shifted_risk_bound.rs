// Monte Carlo risks under heavy tails: the plain least-squares risk is
// flagged as diverging, the shifted pinball risk of a bounded step function
// is finite and bounded by |L|₁ times its L1 norm.

use shiftcons::distributions::{DistributionModel, Marginal};
use shiftcons::predictor::{Constant, StepFunction};
use shiftcons::risk::{mc_lp_distance, mc_risk, mc_shifted_risk};
use shiftcons::LossSpec;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let model: DistributionModel = "cex-pin:0.5".parse()?;
    let ls = mc_risk(&LossSpec::least_squares(), &model, &Constant(0.0), 100_000, 1)?;
    println!("least-squares risk of 0: {:.3e} ± {:.1e}, diverging = {}", ls.value, ls.std_error, ls.diverging);

    let loss = LossSpec::pinball(0.5)?;
    let f = StepFunction::new(vec![0.2, 0.6], vec![0.5, -1.0, 0.25]).expect("valid steps");
    let shifted = mc_shifted_risk(&loss, &model, &f, 400_000, 2)?;
    let l1 = mc_lp_distance(&f, &Constant(0.0), &Marginal::unit_box(1), 1, 400_000, 3)?;
    let lip = loss.lipschitz.expect("pinball is Lipschitz");
    println!(
        "shifted pinball risk {:.5} ± {:.1e}, |L|₁·‖f‖₁ = {:.5}",
        shifted.value,
        shifted.std_error,
        lip * l1.value
    );
    assert!(shifted.value.abs() <= lip * l1.value + 4.0 * (shifted.std_error + lip * l1.std_error));
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
