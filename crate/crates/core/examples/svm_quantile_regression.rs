// Kernel quantile regression on heteroscedastic Cauchy data, where the
// least-squares risk is infinite but the pinball fit is well behaved.

use shiftcons::distributions::DistributionModel;
use shiftcons::predictor::Predictor;
use shiftcons::svm::{fit, norm_bound, FitOptions, Schedule};
use shiftcons::{KernelSpec, LossSpec};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let model: DistributionModel = "hetero-cauchy".parse()?;
    let kernel = KernelSpec::gaussian(0.3, 1)?;
    let n = 800;
    let data = model.sample(n, 5)?;

    for tau in [0.25, 0.5, 0.75] {
        let loss = LossSpec::pinball(tau)?;
        let lambda = Schedule::default_for(&loss).lambda(n);
        let svm = fit(&data, &loss, &kernel, lambda, &FitOptions::default())?;
        let target = model.quantile_function(tau)?;
        let bound = norm_bound(&loss, &data, lambda)?;
        println!(
            "τ={tau}: λ={lambda:.4} sweeps={} gap={:.1e} ‖f‖_H={:.3} ≤ {:.3}",
            svm.iterations,
            svm.duality_gap,
            svm.rkhs_norm()?,
            bound
        );
        assert!(svm.rkhs_norm()? <= bound * (1.0 + 1e-6));
        for x in [0.1, 0.3, 0.5, 0.7, 0.9] {
            println!("    x={x}: fit {:+.3}  true {:+.3}", svm.predict(&[x])?, target.predict(&[x]));
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
