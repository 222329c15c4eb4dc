// A small version of the consistency experiment: median L1 distance of the
// kernel quantile fit to the true median as n grows, rendered as SVG.

use shiftcons::experiment::{svm_consistency, SvmArgs};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let args = SvmArgs {
        model: "homo-cauchy:0,1".parse()?,
        loss: "pinball:0.5".parse()?,
        kernel: "gaussian:0.5".parse()?,
        beta: Some(0.4),
        c: 1.0,
        sizes: vec![50, 200, 800],
        replicates: 3,
        mc_samples: 5_000,
        seed: 42,
        svg: true,
        timing: false,
        max_iters: 200_000,
    };
    let out = svm_consistency(&args)?;
    print!("{}", out.csv);
    for note in &out.notes {
        println!("{note}");
    }
    let path = std::env::temp_dir().join("shiftcons_consistency.svg");
    std::fs::write(&path, out.svg.as_deref().unwrap_or_default())?;
    println!("plot written to {}", path.display());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
