use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shiftcons")).args(args).output().unwrap()
}

#[test]
fn counterexample_table() {
    let out = run(&["counterexample", "--tau", "0.5", "--sizes", "2,10,100", "--mc", "10000"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "n,exact_gap,mc_gap,mc_gap_se,exact_l1,mc_l1,mc_l1_se,bound_gap");
    assert_eq!(lines.len(), 4);
    let gap: f64 = lines[1].split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(gap, 0.09375);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&["counterexample", "--tau", "1.5", "--sizes", "2"]).status.code(), Some(1));
    assert_eq!(run(&["counterexample", "--sizes", "2"]).status.code(), Some(1));
    assert_eq!(run(&["counterexample", "--tau", "0.5", "--loss", "absolute", "--sizes", "2"]).status.code(), Some(1));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(run(&["loss-audit", "--loss", "hinge"]).status.code(), Some(1));
    assert_eq!(run(&["counterexample", "--tau", "0.5", "--sizes", "2", "--svg"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn numerical_failure_exits_two() {
    let out = run(&["svm-consistency", "--sizes", "100,400", "--replicates", "1", "--mc", "500", "--max-iters", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("converge"));
}

#[test]
fn violations_exit_three() {
    let out = run(&["verify-conditions", "--model", "cex-pin:0.5"]);
    assert_eq!(out.status.code(), Some(3));
    let out = run(&["loss-audit", "--loss", "pinball:0.5", "--c-lower", "10"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8(out.stdout).unwrap().contains("lower_growth,false"));
}

#[test]
fn conditions_pass_for_cauchy_and_gaussian() {
    for model in ["homo-cauchy:0,1", "gauss:1"] {
        let out = run(&["verify-conditions", "--model", model]);
        assert_eq!(out.status.code(), Some(0), "{model}");
        let csv = String::from_utf8(out.stdout).unwrap();
        assert!(csv.starts_with("x,quantile,left_mass,right_mass,atom_mass,ok\n"));
        assert_eq!(csv.lines().count(), 51);
    }
}

#[test]
fn files_and_svg_written_and_reproducible() {
    let dir = std::env::temp_dir().join(format!("shiftcons-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let csv = dir.join("svm.csv");
    let args = [
        "svm-consistency", "--sizes", "50,100,200", "--replicates", "2", "--mc", "2000", "--svg",
        "--out", csv.to_str().unwrap(),
    ];
    assert_eq!(run(&args).status.code(), Some(0));
    let first = std::fs::read(&csv).unwrap();
    let svg = std::fs::read_to_string(dir.join("svm.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert_eq!(run(&args).status.code(), Some(0));
    assert_eq!(first, std::fs::read(&csv).unwrap());
    assert_eq!(svg, std::fs::read_to_string(dir.join("svm.svg")).unwrap());
    let text = String::from_utf8(first).unwrap();
    assert!(text.starts_with("replicate,n,lambda,rkhs_norm,emp_objective,l1_or_lp_to_target,se,wall_ms,schedule_consistent,median_distance\n"));
    assert_eq!(text.lines().count(), 7);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn inconsistent_schedule_warns() {
    let out = run(&["svm-consistency", "--sizes", "20,40", "--replicates", "1", "--mc", "500", "--beta", "0.6"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("WARNING"));
    assert!(String::from_utf8(out.stdout).unwrap().contains(",false,"));
}
