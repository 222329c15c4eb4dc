// Audits the growth metadata of every shipped loss and shows how the
// shifted pinball loss stays bounded by `|t|` however large `y` gets.

use shiftcons::loss::pinball_shift;
use shiftcons::LossSpec;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let losses = ["least-squares", "pinball:0.3", "absolute", "huber:1", "eps:0.25"];
    for name in losses {
        let loss: LossSpec = name.parse()?;
        let audit = loss.growth_audit(100.0, 2001)?;
        let failed: Vec<_> = audit.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
        println!(
            "{name:<14} p={} c_upper={:<6} c_lower={:<6} lipschitz={:<10} {}",
            loss.growth_type,
            loss.c_upper,
            loss.c_lower,
            loss.lipschitz.map_or("-".to_string(), |l| l.to_string()),
            if failed.is_empty() { "ok".to_string() } else { format!("FAILED {failed:?}") }
        );
        if !audit.all_pass() {
            return Err(format!("{name} failed its audit").into());
        }
    }

    // A deliberately wrong lower constant is caught at the edge of the grid.
    let bad = LossSpec::pinball(0.5)?.with_growth_constants(1.0, 10.0);
    let audit = bad.growth_audit(100.0, 2001)?;
    let lower = audit.check("lower_growth").expect("always audited");
    println!("corrupted pinball: lower_growth first fails at r = {:?}", lower.first_violation);
    assert!(!lower.passed);

    let tau = 0.3;
    let t = 2.0;
    println!("\nL*(y, {t}) for pinball({tau}):");
    for y in [-1e12, -1.0, 0.5, 1.5, 3.0, 1e12] {
        let stable = pinball_shift(tau, y, t);
        assert!(stable.abs() <= t.abs() * tau.max(1.0 - tau) + 1e-12);
        println!("  y = {y:>8e}  L* = {stable}");
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
