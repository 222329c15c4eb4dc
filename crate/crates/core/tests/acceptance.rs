//! End-to-end acceptance criteria. Each criterion prints one PASS/FAIL line;
//! run with `cargo test --test acceptance -- --nocapture` to see them.

use std::process::Command;
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::RngExt;

use shiftcons::constructions::{run_counterexample, run_sobolev_variant, CounterexampleMode, McConfig};
use shiftcons::data::Dataset;
use shiftcons::distributions::{ConditionIIParams, DistributionModel};
use shiftcons::experiment::{median_distances, svm_consistency, SvmArgs};
use shiftcons::seed;
use shiftcons::svm::{fit, norm_bound, objective, FitOptions};
use shiftcons::{KernelSpec, LossSpec};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn sig_digits_agree(a: f64, b: f64, digits: i32) -> bool {
    (a - b).abs() <= 0.5 * 10f64.powi(1 - digits) * b.abs()
}

fn within(start: Instant, limit: Duration, what: &str) -> Result<(), String> {
    let took = start.elapsed();
    ensure(took <= limit, || format!("{what} took {took:?}, limit {limit:?}"))
}

fn pinball_spike_gaps() -> Outcome {
    let start = Instant::now();
    for tau in [0.3, 0.5, 0.9] {
        let table = run_counterexample(
            CounterexampleMode::pinball(tau).map_err(|e| e.to_string())?,
            &[2, 10, 100, 1000],
            McConfig { samples: 1_000_000, seed: 42 },
        )
        .map_err(|e| e.to_string())?;
        for r in &table.rows {
            let n = r.n as f64;
            let closed = (1.0 - tau) * (2.0 * n - 1.0) / (4.0 * n * n);
            ensure(sig_digits_agree(r.exact_gap, closed, 12), || {
                format!("τ={tau} n={}: gap {} vs {closed}", r.n, r.exact_gap)
            })?;
            ensure((r.exact_l1 - 1.0).abs() <= 1e-12, || format!("τ={tau} n={}: L1 {}", r.n, r.exact_l1))?;
            ensure((r.mc_gap - r.exact_gap).abs() <= 4.0 * r.mc_gap_se, || {
                format!("τ={tau} n={}: mc gap {} ± {} vs {}", r.n, r.mc_gap, r.mc_gap_se, r.exact_gap)
            })?;
            ensure((r.mc_l1 - 1.0).abs() <= 4.0 * r.mc_l1_se, || {
                format!("τ={tau} n={}: mc L1 {} ± {}", r.n, r.mc_l1, r.mc_l1_se)
            })?;
        }
    }
    within(start, Duration::from_secs(30), "pinball table")?;
    Ok(format!("12 cells exact to 12 digits, MC within 4 SE, {:.1?}", start.elapsed()))
}

fn symmetric_spike_gaps() -> Outcome {
    let mc = McConfig { samples: 200_000, seed: 42 };
    let abs = run_counterexample(CounterexampleMode::symmetric(LossSpec::absolute()).unwrap(), &[2, 10, 100, 1000], mc)
        .map_err(|e| e.to_string())?;
    for r in &abs.rows {
        let n = r.n as f64;
        let closed = (2.0 * n - 1.0) / (4.0 * n * n);
        ensure(sig_digits_agree(r.exact_gap, closed, 10), || format!("absolute n={}: {} vs {closed}", r.n, r.exact_gap))?;
    }
    for loss in [LossSpec::absolute(), LossSpec::huber(1.0).unwrap(), LossSpec::eps_insensitive(0.25).unwrap()] {
        let t = run_counterexample(CounterexampleMode::symmetric(loss).unwrap(), &[2, 10, 100], mc).map_err(|e| e.to_string())?;
        let lip = loss.lipschitz.unwrap();
        for r in &t.rows {
            let n = r.n as f64;
            let bound = lip / (2.0 * n) + 1.0 / n - 1.0 / (2.0 * n * n);
            ensure(r.exact_gap <= bound, || format!("{loss} n={}: gap {} > bound {bound}", r.n, r.exact_gap))?;
            ensure(r.exact_gap > 0.0, || format!("{loss} n={}: gap {} not positive", r.n, r.exact_gap))?;
            ensure((r.exact_l1 - 1.0).abs() <= 1e-12, || format!("{loss} n={}: L1 {}", r.n, r.exact_l1))?;
        }
    }
    Ok("absolute closed form to 10 digits; absolute, huber(1), eps(0.25) below the bound".into())
}

fn sobolev_spikes() -> Outcome {
    let mode = CounterexampleMode::pinball(0.5).unwrap();
    let mc = McConfig { samples: 200_000, seed: 7 };
    let sizes = [2, 10, 100, 1000];
    let spike = run_counterexample(mode, &sizes, mc).map_err(|e| e.to_string())?;
    for m in [1u32, 2, 5] {
        let t = run_sobolev_variant(mode, m, &sizes, mc).map_err(|e| e.to_string())?;
        for (r, s) in t.rows.iter().zip(&spike.rows) {
            let target = 1.0 / (m as f64 + 1.0);
            ensure((r.exact_l1 - target).abs() <= 1e-12, || format!("m={m} n={}: L1 {}", r.n, r.exact_l1))?;
            ensure(r.exact_gap <= s.exact_gap, || format!("m={m} n={}: gap {} > spike {}", r.n, r.exact_gap, s.exact_gap))?;
        }
        ensure(t.rows.windows(2).all(|w| w[1].exact_gap < w[0].exact_gap), || format!("m={m}: gap not decreasing"))?;
    }
    Ok("L1 = 1/(m+1) for m = 1, 2, 5 and gaps dominated by the step spike".into())
}

fn random_dataset(rng: &mut impl RngExt, n: usize) -> Dataset {
    let xs = (0..n).map(|_| vec![rng.random::<f64>()]).collect();
    let ys = (0..n).map(|_| 10.0 * (rng.random::<f64>() - 0.5)).collect();
    Dataset::new(xs, ys).unwrap()
}

fn single_point_and_norm_bound() -> Outcome {
    let k = KernelSpec::gaussian(1.0, 1).unwrap();
    let opts = FitOptions::default();
    for (y, lambda) in [(1.0, 1.0), (3.0, 0.1), (-2.0, 0.5)] {
        let ds = Dataset::new(vec![vec![0.3]], vec![y]).unwrap();
        let ls = fit(&ds, &LossSpec::least_squares(), &k, lambda, &opts).map_err(|e| e.to_string())?;
        let expected = y / (1.0 + lambda);
        ensure((ls.alpha[0] - expected).abs() <= 1e-12, || format!("least squares y={y} λ={lambda}: {}", ls.alpha[0]))?;
        for tau in [0.2, 0.5, 0.8] {
            let pb = fit(&ds, &LossSpec::pinball(tau).unwrap(), &k, lambda, &opts).map_err(|e| e.to_string())?;
            let slope = if y > 0.0 { tau } else { 1.0 - tau };
            let expected = y.signum() * (slope / (2.0 * lambda)).min(y.abs());
            ensure((pb.alpha[0] - expected).abs() <= 1e-6, || {
                format!("pinball({tau}) y={y} λ={lambda}: {} vs {expected}", pb.alpha[0])
            })?;
        }
    }
    let mut rng = seed::rng(seed::derive(42, "acceptance-norm", 0, 0));
    let losses = [LossSpec::least_squares(), LossSpec::pinball(0.3).unwrap(), LossSpec::huber(1.0).unwrap(), LossSpec::eps_insensitive(0.25).unwrap()];
    for i in 0..100 {
        let n = rng.random_range(1..=200);
        let ds = random_dataset(&mut rng, n);
        let lambda = 10f64.powf(rng.random_range(-3.0..0.0));
        let loss = losses[i % losses.len()];
        let m = fit(&ds, &loss, &k, lambda, &opts).map_err(|e| e.to_string())?;
        let norm = m.rkhs_norm().unwrap();
        let bound = norm_bound(&loss, &ds, lambda).unwrap();
        ensure(norm <= bound * (1.0 + 1e-9) + 1e-12, || format!("dataset {i} ({loss}, n={n}): ‖f‖ {norm} > {bound}"))?;
    }
    Ok("single-point closed forms and norm bound on 100 random datasets".into())
}

fn shift_invariance() -> Outcome {
    let mut rng = seed::rng(seed::derive(42, "acceptance-shift", 0, 0));
    let k = KernelSpec::gaussian(2.0, 1).unwrap();
    for i in 0..20 {
        let n = rng.random_range(5..=120);
        let ds = random_dataset(&mut rng, n);
        let lambda = 10f64.powf(rng.random_range(-3.0..-0.5));
        let loss = [LossSpec::pinball(0.3).unwrap(), LossSpec::absolute(), LossSpec::huber(0.5).unwrap()][i % 3];
        let plain = fit(&ds, &loss, &k, lambda, &FitOptions::default()).map_err(|e| e.to_string())?;
        let shifted = fit(&ds, &loss, &k, lambda, &FitOptions { shifted: true, ..FitOptions::default() }).map_err(|e| e.to_string())?;
        let diff = plain.alpha.iter().zip(&shifted.alpha).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        ensure(diff <= 1e-9, || format!("dataset {i}: coefficients differ by {diff}"))?;
        let constant = ds.ys.iter().map(|&y| loss.eval(y, 0.0)).sum::<f64>() / n as f64;
        let p = objective(&loss, &ds, &k, &plain.alpha, lambda, false).unwrap();
        let s = objective(&loss, &ds, &k, &plain.alpha, lambda, true).unwrap();
        ensure((p - s - constant).abs() <= 1e-9 * (1.0 + constant), || format!("dataset {i}: objectives {p} vs {s} + {constant}"))?;
    }
    Ok("20 datasets: same coefficients, objectives differ by the data constant".into())
}

fn condition_checks() -> Outcome {
    let start = Instant::now();
    let homo: DistributionModel = "homo-cauchy:0,1".parse().unwrap();
    let rep = homo.check_condition_ii(0.5, &ConditionIIParams::on_grid(&homo, 0.1, 0.03, 50)).map_err(|e| e.to_string())?;
    let expected = 0.1f64.atan() / std::f64::consts::PI;
    ensure(rep.holds, || "homo-cauchy condition (ii) fails".into())?;
    ensure(sig_digits_agree(rep.worst_mass, expected, 6), || format!("worst mass {} vs {expected}", rep.worst_mass))?;
    ensure(homo.averaged_moment(1, 1e6).unwrap().diverging, || "homo-cauchy moment should diverge".into())?;

    let gauss: DistributionModel = "gauss:1".parse().unwrap();
    ensure(!gauss.averaged_moment(1, 1e6).unwrap().diverging, || "gaussian moment should be finite".into())?;

    let cex: DistributionModel = "cex-pin:0.5".parse().unwrap();
    ensure(cex.averaged_moment(1, 1e6).unwrap().diverging, || "cex-pin moment should diverge".into())?;
    let rep = cex.check_condition_ii(0.5, &ConditionIIParams::on_grid(&cex, 0.1, 0.03, 50)).map_err(|e| e.to_string())?;
    ensure(!rep.holds, || "cex-pin condition (ii) should fail".into())?;
    within(start, Duration::from_secs(5), "condition checks")?;
    Ok(format!("worst mass {:.9} = atan(0.1)/π, gauss (i) holds, cex-pin fails both", expected))
}

fn svm_consistency_decreases() -> Outcome {
    let start = Instant::now();
    let sizes = vec![100, 400, 1600, 6400];
    let args = SvmArgs {
        model: "homo-cauchy:0,1".parse().unwrap(),
        loss: "pinball:0.5".parse().unwrap(),
        kernel: "gaussian:0.5".parse().unwrap(),
        beta: Some(0.4),
        c: 1.0,
        sizes: sizes.clone(),
        replicates: 5,
        mc_samples: 20_000,
        seed: 42,
        svg: false,
        timing: false,
        max_iters: 200_000,
    };
    let out = svm_consistency(&args).map_err(|e| e.to_string())?;
    let rows: Vec<(u64, usize, f64)> = out
        .csv
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse().unwrap(), f[1].parse().unwrap(), f[5].parse().unwrap())
        })
        .collect();
    let med = median_distances(&rows, &sizes);
    let drop = 1.0 - med[3] / med[0];
    let rises = med.windows(2).filter(|w| w[1] > w[0]).count();
    ensure(drop >= 0.3, || format!("medians {med:?}: only {:.0}% decrease", 100.0 * drop))?;
    ensure(rises <= 1, || format!("medians {med:?}: {rises} non-monotone steps"))?;
    within(start, Duration::from_secs(600), "svm consistency")?;
    Ok(format!("medians {:?}, {:.0}% decrease, {:.1?}", med.iter().map(|m| (m * 1e4).round() / 1e4).collect::<Vec<_>>(), 100.0 * drop, start.elapsed()))
}

fn property_suites() -> Outcome {
    let mut runner = TestRunner::new(Config { cases: 256, failure_persistence: None, ..Config::default() });
    let loss_strategy = prop_oneof![
        Just(LossSpec::least_squares()),
        (0.01f64..0.99).prop_map(|t| LossSpec::pinball(t).unwrap()),
        Just(LossSpec::absolute()),
        (0.1f64..3.0).prop_map(|d| LossSpec::huber(d).unwrap()),
        (0.0f64..2.0).prop_map(|e| LossSpec::eps_insensitive(e).unwrap()),
    ];
    runner
        .run(&(loss_strategy, -50.0f64..50.0, -50.0f64..50.0, -50.0f64..50.0, 0.0f64..1.0), |(loss, y, a, b, w)| {
            let t = w * a + (1.0 - w) * b;
            let lhs = loss.eval(y, t);
            let rhs = w * loss.eval(y, a) + (1.0 - w) * loss.eval(y, b);
            prop_assert!(lhs <= rhs + 1e-9 * (1.0 + rhs.abs()));
            prop_assert_eq!(loss.shift_eval(y, t), loss.eval(y, t) - loss.eval(y, 0.0));
            if let Some(l) = loss.lipschitz {
                prop_assert!((loss.eval(y, a) - loss.eval(y, b)).abs() <= l * (a - b).abs() * (1.0 + 1e-12) + 1e-12);
                prop_assert!(loss.shift_eval_stable(y, t).abs() <= l * t.abs() * (1.0 + 1e-12) + 1e-12);
            }
            Ok(())
        })
        .map_err(|e| format!("loss invariants: {e}"))?;
    runner
        .run(&(0.01f64..0.99, 1e-6f64..1.0 - 1e-6), |(tau, p)| {
            let model = DistributionModel::counterexample_pinball(tau).unwrap();
            let x = [0.37];
            let q = model.conditional_quantile(&x, p).unwrap();
            let c = model.conditional(&x).unwrap();
            prop_assert!(c.cdf(q) >= p - 1e-12 && c.cdf_left(q) <= p + 1e-12);
            Ok(())
        })
        .map_err(|e| format!("quantile inversion: {e}"))?;
    Ok("convexity, shift exactness, Lipschitz, shifted bound, quantile inversion (256 cases each)".into())
}

fn cli_reruns_identical() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_shiftcons");
    let runs: [&[&str]; 4] = [
        &["counterexample", "--tau", "0.5", "--sizes", "2,10,100", "--mc", "20000"],
        &["sobolev", "--loss", "absolute", "--sizes", "2,10", "--m", "2", "--mc", "20000"],
        &["svm-consistency", "--sizes", "50,100", "--replicates", "2", "--mc", "2000"],
        &["verify-conditions", "--model", "hetero-cauchy"],
    ];
    for args in runs {
        let a = Command::new(bin).args(args).output().map_err(|e| e.to_string())?;
        let b = Command::new(bin).args(args).output().map_err(|e| e.to_string())?;
        ensure(matches!(a.status.code(), Some(0 | 3)), || format!("{args:?} exited with {:?}", a.status.code()))?;
        ensure(a.status.code() == b.status.code(), || format!("{args:?}: exit codes differ"))?;
        ensure(!a.stdout.is_empty() && a.stdout == b.stdout, || format!("{args:?}: reruns differ"))?;
    }
    Ok("four subcommands byte-identical across reruns".into())
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 9] = [
        ("1 pinball spike gaps", pinball_spike_gaps),
        ("2 symmetric spike gaps", symmetric_spike_gaps),
        ("3 sobolev spikes", sobolev_spikes),
        ("4 single point and norm bound", single_point_and_norm_bound),
        ("5 shift invariance", shift_invariance),
        ("6 condition checks", condition_checks),
        ("7 svm consistency", svm_consistency_decreases),
        ("8 property suites", property_suites),
        ("9 cli reruns identical", cli_reruns_identical),
    ];
    let mut failed = Vec::new();
    for (name, run) in criteria {
        match run() {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(detail) => {
                println!("FAIL criterion {name}: {detail}");
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
