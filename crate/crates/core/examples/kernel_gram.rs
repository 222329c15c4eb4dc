// Gram matrices of the three kernels on random points: symmetric, positive
// semidefinite, and exactly sparse for the compactly supported Wendland kernel.

use rand::RngExt;
use shiftcons::kernel::wendland11;
use shiftcons::seed;
use shiftcons::KernelSpec;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = seed::rng(7);
    let points: Vec<Vec<f64>> = (0..60).map(|_| vec![3.0 * rng.random::<f64>(), 3.0 * rng.random::<f64>()]).collect();

    for kernel in [KernelSpec::gaussian(0.5, 2)?, KernelSpec::wendland(2)?, KernelSpec::linear(2)?] {
        let k = kernel.gram(&points)?;
        let asym = (&k - k.transpose()).abs().max();
        let min_eig = k.clone().symmetric_eigen().eigenvalues.min();
        let zeros = k.iter().filter(|&&v| v == 0.0).count();
        println!("{kernel:<14} asymmetry={asym:e} min eigenvalue={min_eig:+.3e} exact zeros={zeros}");
        assert!(asym == 0.0);
        assert!(min_eig > -1e-10 * k.norm());
    }

    for r in [0.0, 0.5, 0.999, 1.0, 2.0] {
        println!("wendland φ({r}) = {}", wendland11(r));
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
