use proptest::prelude::*;
use rand::RngExt;

use shiftcons::data::Dataset;
use shiftcons::distributions::DistributionModel;
use shiftcons::kernel::wendland11;
use shiftcons::predictor::StepFunction;
use shiftcons::risk::quadrature_shifted_risk;
use shiftcons::seed;
use shiftcons::svm::{fit, objective, FitOptions, Solver};
use shiftcons::{KernelSpec, LossSpec};

fn any_loss() -> impl Strategy<Value = LossSpec> {
    prop_oneof![
        Just(LossSpec::least_squares()),
        (0.01f64..0.99).prop_map(|t| LossSpec::pinball(t).unwrap()),
        Just(LossSpec::absolute()),
        (0.1f64..3.0).prop_map(|d| LossSpec::huber(d).unwrap()),
        (0.0f64..2.0).prop_map(|e| LossSpec::eps_insensitive(e).unwrap()),
    ]
}

fn lipschitz_loss() -> impl Strategy<Value = LossSpec> {
    any_loss().prop_filter("Lipschitz", |l| l.lipschitz.is_some())
}

fn step(cuts: &[f64], values: Vec<f64>) -> (StepFunction, Vec<f64>) {
    let mut c: Vec<f64> = cuts.to_vec();
    c.sort_by(f64::total_cmp);
    c.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
    let values = values[..=c.len()].to_vec();
    let mut edges = vec![0.0];
    edges.extend(&c);
    edges.push(1.0);
    let widths = edges.windows(2).map(|w| w[1] - w[0]).collect();
    (StepFunction::new(c, values).unwrap(), widths)
}

fn random_dataset(seed_value: u64, n: usize) -> Dataset {
    let mut rng = seed::rng(seed_value);
    let xs: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random::<f64>()]).collect();
    let ys = xs.iter().map(|x| (6.0 * x[0]).sin() + rng.random::<f64>() - 0.5).collect();
    Dataset::new(xs, ys).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn loss_is_convex_in_t(loss in any_loss(), y in -100.0f64..100.0, a in -100.0f64..100.0, b in -100.0f64..100.0, w in 0.0f64..1.0) {
        let lhs = loss.eval(y, w * a + (1.0 - w) * b);
        let rhs = w * loss.eval(y, a) + (1.0 - w) * loss.eval(y, b);
        prop_assert!(lhs <= rhs + 1e-9 * (1.0 + rhs.abs()));
    }

    #[test]
    fn lipschitz_constant_holds(loss in lipschitz_loss(), y in -1e3f64..1e3, a in -1e3f64..1e3, b in -1e3f64..1e3) {
        let l = loss.lipschitz.unwrap();
        prop_assert!((loss.eval(y, a) - loss.eval(y, b)).abs() <= l * (a - b).abs() * (1.0 + 1e-12) + 1e-9);
    }

    #[test]
    fn shift_is_exact_difference(loss in any_loss(), y in -1e6f64..1e6, t in -1e6f64..1e6) {
        prop_assert_eq!(loss.shift_eval(y, t), loss.eval(y, t) - loss.eval(y, 0.0));
    }

    #[test]
    fn stable_shift_is_bounded(loss in lipschitz_loss(), y in -1e15f64..1e15, t in -10.0f64..10.0) {
        let s = loss.shift_eval_stable(y, t);
        prop_assert!(s.abs() <= loss.lipschitz.unwrap() * t.abs() * (1.0 + 1e-12) + 1e-12);
        if y.abs() < 1e3 {
            prop_assert!((s - loss.shift_eval(y, t)).abs() <= 1e-9 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn subgradient_brackets_difference_quotients(loss in any_loss(), y in -20.0f64..20.0, t in -20.0f64..20.0) {
        let h = 1e-6;
        let g = loss.subgradient(y, t);
        let right = (loss.eval(y, t + h) - loss.eval(y, t)) / h;
        let left = (loss.eval(y, t) - loss.eval(y, t - h)) / h;
        let slack = 1e-4 * (1.0 + t.abs() + y.abs());
        prop_assert!(g.lo <= right + slack && left - slack <= g.hi, "{:?} vs [{left}, {right}]", g);
        prop_assert!(g.lo <= g.hi);
    }

    #[test]
    fn gram_is_symmetric_psd(pts in prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 2), 1..40), gamma in 0.1f64..3.0) {
        for kernel in [KernelSpec::gaussian(gamma, 2).unwrap(), KernelSpec::wendland(2).unwrap()] {
            let k = kernel.gram(&pts).unwrap();
            prop_assert_eq!(&k, &k.transpose());
            let min = k.clone().symmetric_eigen().eigenvalues.min();
            prop_assert!(min >= -1e-10 * (1.0 + k.norm()), "{kernel}: {min}");
        }
    }

    #[test]
    fn wendland_support_is_compact(r in 0.0f64..5.0) {
        let v = wendland11(r);
        if r >= 1.0 {
            prop_assert_eq!(v, 0.0);
        } else {
            prop_assert!(v > 0.0 && v <= 1.0);
        }
    }

    #[test]
    fn quantile_inverts_cdf(x in 0.001f64..0.999, p in 1e-6f64..0.999999, tau in 0.05f64..0.95) {
        for model in [
            DistributionModel::counterexample_pinball(tau).unwrap(),
            "homo-cauchy:0,1".parse::<DistributionModel>().unwrap(),
            "hetero-cauchy".parse::<DistributionModel>().unwrap(),
            "gauss:0.5".parse::<DistributionModel>().unwrap(),
        ] {
            let c = model.conditional(&[x]).unwrap();
            let q = c.quantile(p).unwrap();
            prop_assert!(c.cdf(q) >= p - 1e-9, "cdf({q}) = {} < {p}", c.cdf(q));
            prop_assert!(c.cdf_left(q) <= p + 1e-9, "cdf_left({q}) = {} > {p}", c.cdf_left(q));
        }
    }

    #[test]
    fn shifted_risk_bounded_and_lipschitz(
        loss in prop_oneof![
            (0.05f64..0.95).prop_map(|t| LossSpec::pinball(t).unwrap()),
            Just(LossSpec::absolute()),
            Just(LossSpec::huber(1.0).unwrap()),
        ],
        cuts in prop::collection::vec(0.05f64..0.95, 0..4),
        fv in prop::collection::vec(-3.0f64..3.0, 5),
        gv in prop::collection::vec(-3.0f64..3.0, 5),
    ) {
        let model = match loss.kind {
            shiftcons::loss::LossKind::Pinball { tau } => DistributionModel::counterexample_pinball(tau).unwrap(),
            _ => DistributionModel::counterexample_symmetric(loss).unwrap(),
        };
        let (f, widths) = step(&cuts, fv.clone());
        let (g, _) = step(&cuts, gv.clone());
        let l = loss.lipschitz.unwrap();
        let rf = quadrature_shifted_risk(&loss, &model, &f).unwrap().value;
        let rg = quadrature_shifted_risk(&loss, &model, &g).unwrap().value;
        let f_l1: f64 = widths.iter().zip(&fv).map(|(w, v)| w * v.abs()).sum();
        let dist: f64 = widths.iter().zip(fv.iter().zip(&gv)).map(|(w, (a, b))| w * (a - b).abs()).sum();
        prop_assert!(rf.abs() <= l * f_l1 + 1e-9);
        prop_assert!((rf - rg).abs() <= l * dist + 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn regularization_is_monotone(data_seed in any::<u64>(), n in 5usize..60, l1 in -3.0f64..0.0, ratio in 1.5f64..20.0) {
        let ds = random_dataset(data_seed, n);
        let k = KernelSpec::gaussian(1.0, 1).unwrap();
        for loss in [LossSpec::least_squares(), LossSpec::pinball(0.3).unwrap(), LossSpec::huber(0.5).unwrap()] {
            let small = 10f64.powf(l1);
            let big = small * ratio;
            let fs = fit(&ds, &loss, &k, small, &FitOptions::default()).unwrap();
            let fb = fit(&ds, &loss, &k, big, &FitOptions::default()).unwrap();
            let risk = |a: &[f64]| objective(&loss, &ds, &k, a, 1e-300, false).unwrap();
            let tol = 1e-5;
            prop_assert!(fb.rkhs_norm().unwrap() <= fs.rkhs_norm().unwrap() * (1.0 + tol) + tol);
            prop_assert!(risk(&fb.alpha) + tol >= risk(&fs.alpha));
        }
    }

    #[test]
    fn restarts_agree_on_the_minimum(data_seed in any::<u64>(), n in 5usize..50, lambda in 0.005f64..0.5) {
        let ds = random_dataset(data_seed, n);
        let k = KernelSpec::gaussian(2.0, 1).unwrap();
        let loss = LossSpec::pinball(0.7).unwrap();
        let mut rng = seed::rng(data_seed ^ 0x5eed);
        let base = fit(&ds, &loss, &k, lambda, &FitOptions::default()).unwrap();
        for r in 0..10 {
            let init: Vec<f64> = (0..n).map(|_| 4.0 * rng.random::<f64>() - 2.0).collect();
            let opts = FitOptions { init: Some(init), seed: r, ..FitOptions::default() };
            let m = fit(&ds, &loss, &k, lambda, &opts).unwrap();
            prop_assert!((m.objective_value - base.objective_value).abs() <= 2e-6, "{} vs {}", m.objective_value, base.objective_value);
        }
        let sg = fit(&ds, &loss, &k, lambda, &FitOptions { solver: Solver::Subgradient, max_iters: 20_000, tol: 1e-3, ..FitOptions::default() });
        if let Ok(sg) = sg {
            prop_assert!(sg.objective_value >= base.objective_value - 2e-6);
        }
    }
}

#[test]
fn sampler_matches_cdf() {
    // Dvoretzky–Kiefer–Wolfowitz band at level 1e-6.
    let n = 20_000;
    let eps = ((2.0f64 / 1e-6).ln() / (2.0 * n as f64)).sqrt();
    let models: Vec<DistributionModel> = ["homo-cauchy:0,1", "hetero-cauchy", "gauss:1", "cex-pin:0.3", "cex-sym:absolute"]
        .iter()
        .map(|s| s.parse().unwrap())
        .collect();
    for (i, model) in models.iter().enumerate() {
        let x = [0.4];
        let c = model.conditional(&x).unwrap();
        let mut rng = seed::rng(seed::derive(1, "dkw", 0, i as u64));
        let mut ys: Vec<f64> = (0..n).map(|_| c.sample(&mut rng)).collect();
        ys.sort_by(f64::total_cmp);
        let mut worst: f64 = 0.0;
        let mut j = 0;
        while j < n {
            let y = ys[j];
            let k = ys[j..].partition_point(|&v| v == y) + j;
            worst = worst
                .max((c.cdf_left(y) - j as f64 / n as f64).abs())
                .max((c.cdf(y) - k as f64 / n as f64).abs());
            j = k;
        }
        assert!(worst <= eps, "model {i}: sup deviation {worst} > {eps}");
    }
}
