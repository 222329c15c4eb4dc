// Which synthetic laws admit shifted quantile regression: a finite averaged
// moment, or enough conditional mass on both sides of the quantile.

use shiftcons::distributions::{ConditionIIParams, DistributionModel};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let cases = [
        ("homo-cauchy:0,1", 0.1, 0.03),
        ("hetero-cauchy", 0.1, 0.01),
        ("gauss:1", 0.1, 0.03),
        ("cex-pin:0.5", 0.5, 0.3),
    ];
    println!("{:<16} {:>12} {:>6} {:>12} {:>6}", "model", "E min|Y|,T", "(i)", "worst mass", "(ii)");
    for (name, c1, c2) in cases {
        let model: DistributionModel = name.parse()?;
        let moment = model.averaged_moment(1, 1e6)?;
        let params = ConditionIIParams::on_grid(&model, c1, c2, 50);
        let report = model.check_condition_ii(0.5, &params)?;
        println!(
            "{name:<16} {:>12.4} {:>6} {:>12.6} {:>6}",
            moment.value,
            !moment.diverging,
            report.worst_mass,
            report.holds
        );
    }

    let homo: DistributionModel = "homo-cauchy:0,1".parse()?;
    let rep = homo.check_condition_ii(0.5, &ConditionIIParams::on_grid(&homo, 0.1, 0.03, 50))?;
    let expected = 0.1f64.atan() / std::f64::consts::PI;
    assert!((rep.worst_mass - expected).abs() < 1e-12);
    println!("\ncauchy side mass on (q, q + 0.1): {} = atan(0.1)/π", rep.worst_mass);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
