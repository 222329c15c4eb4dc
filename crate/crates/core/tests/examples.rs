//! Every runnable example doubles as a smoke test.

macro_rules! example {
    ($name:ident) => {
        #[allow(dead_code)]
        mod $name {
            include!(concat!("../examples/", stringify!($name), ".rs"));
        }

        #[test]
        fn $name() {
            $name::run_example().unwrap();
        }
    };
}

example!(loss_audit);
example!(kernel_gram);
example!(cauchy_conditions);
example!(pinball_counterexample);
example!(symmetric_counterexample);
example!(sobolev_and_gaussian_rkhs);
example!(svm_quantile_regression);
example!(shifted_risk_bound);
example!(consistency_path);
