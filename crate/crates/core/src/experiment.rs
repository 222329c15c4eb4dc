//! The five reproducible experiments behind the `shiftcons` binary. Each
//! returns its CSV (and optionally an SVG plot) as strings, so the same run
//! can be driven from code, tests or the command line.

use crate::constructions::{run_counterexample, run_sobolev_variant, CounterexampleMode, GapTable, McConfig};
use crate::csv::{fmt_f64, fmt_opt, Table};
use crate::distributions::{ConditionIIParams, DistributionModel};
use crate::error::{invalid, Error, Result};
use crate::kernel::KernelSpec;
use crate::loss::LossSpec;
use crate::plot::{line_plot, Series};
use crate::svm::{fit_path, FitOptions, PathOptions, Schedule};

/// Truncation used for the averaged-moment divergence test.
pub const MOMENT_TRUNCATION: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    /// A property the run verifies did not hold.
    Violation,
}

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 1;
    pub const NUMERICAL: i32 = 2;
    pub const VIOLATION: i32 = 3;
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Success => exit::OK,
            Status::Violation => exit::VIOLATION,
        }
    }
}

/// Exit code for a failed run.
pub fn error_exit_code(e: &Error) -> i32 {
    match e {
        Error::NonConvergence { .. } | Error::Quadrature { .. } | Error::ApproximationBudget { .. } => exit::NUMERICAL,
        _ => exit::USAGE,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub csv: String,
    pub svg: Option<String>,
    /// Human-readable status lines.
    pub notes: Vec<String>,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CounterexampleArgs {
    pub mode: CounterexampleMode,
    pub sizes: Vec<u64>,
    pub mc_samples: usize,
    pub seed: u64,
    pub svg: bool,
}

fn gap_output(table: &GapTable, title: &str, svg: bool) -> RunOutput {
    let notes = table
        .checks
        .iter()
        .map(|c| format!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail))
        .collect();
    let svg = svg.then(|| {
        let col = |f: fn(&crate::constructions::GapRow) -> f64| table.rows.iter().map(|r| (r.n as f64, f(r))).collect();
        let mut series = vec![
            Series::new("exact_gap", col(|r| r.exact_gap)),
            Series::new("mc_gap", col(|r| r.mc_gap)),
            Series::new("exact_l1", col(|r| r.exact_l1)),
        ];
        if table.rows.iter().all(|r| r.bound_gap.is_some()) {
            series.push(Series::new("bound_gap", col(|r| r.bound_gap.unwrap_or(f64::NAN))));
        }
        line_plot(title, "n", "value", &series)
    });
    RunOutput {
        csv: table.to_table().to_string_lossy(),
        svg,
        notes,
        status: if table.all_pass() { Status::Success } else { Status::Violation },
    }
}

pub fn counterexample(args: &CounterexampleArgs) -> Result<RunOutput> {
    let table = run_counterexample(
        args.mode,
        &args.sizes,
        McConfig {
            samples: args.mc_samples,
            seed: args.seed,
        },
    )?;
    Ok(gap_output(&table, &format!("spike sequence, {}", args.mode), args.svg))
}

pub fn sobolev(args: &CounterexampleArgs, m: u32) -> Result<RunOutput> {
    let table = run_sobolev_variant(
        args.mode,
        m,
        &args.sizes,
        McConfig {
            samples: args.mc_samples,
            seed: args.seed,
        },
    )?;
    Ok(gap_output(&table, &format!("smooth spike m={m}, {}", args.mode), args.svg))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmArgs {
    pub model: DistributionModel,
    pub loss: LossSpec,
    pub kernel: KernelSpec,
    /// Defaults to `0.9/p*`.
    pub beta: Option<f64>,
    pub c: f64,
    pub sizes: Vec<usize>,
    pub replicates: u64,
    pub mc_samples: usize,
    pub seed: u64,
    pub svg: bool,
    /// Record wall-clock time per cell; off by default so reruns are byte-identical.
    pub timing: bool,
    /// Solver budget per fit (sweeps for the dual solver).
    pub max_iters: usize,
}

pub const SVM_COLUMNS: [&str; 10] = [
    "replicate",
    "n",
    "lambda",
    "rkhs_norm",
    "emp_objective",
    "l1_or_lp_to_target",
    "se",
    "wall_ms",
    "schedule_consistent",
    "median_distance",
];

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k == 0 {
        f64::NAN
    } else if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Median distance per size, in the order of `sizes`.
pub fn median_distances(csv_rows: &[(u64, usize, f64)], sizes: &[usize]) -> Vec<f64> {
    sizes
        .iter()
        .map(|&n| {
            let mut d: Vec<f64> = csv_rows.iter().filter(|r| r.1 == n).map(|r| r.2).collect();
            median(&mut d)
        })
        .collect()
}

pub fn svm_consistency(args: &SvmArgs) -> Result<RunOutput> {
    if args.replicates == 0 {
        return Err(invalid("need at least one replicate"));
    }
    let schedule = match args.beta {
        Some(b) => Schedule::for_loss(&args.loss, args.c, b)?,
        None => Schedule {
            c: args.c,
            ..Schedule::default_for(&args.loss)
        },
    };
    // The default branch skips the constructor's checks on c.
    Schedule::new(schedule.c, schedule.beta, schedule.p_star)?;
    let consistent = schedule.is_consistent();
    let mut notes = Vec::new();
    if !consistent {
        notes.push(format!(
            "WARNING: β = {} ≥ 1/p* = 1/{}; λ_n^p*·n does not diverge",
            schedule.beta, schedule.p_star
        ));
    }
    let lp = args.loss.growth_type;
    let opts = PathOptions {
        fit: FitOptions {
            max_iters: args.max_iters,
            ..FitOptions::default()
        },
        lp,
        mc_samples: args.mc_samples,
    };
    struct Cell {
        rep: u64,
        n: usize,
        lambda: f64,
        norm: f64,
        objective: f64,
        distance: f64,
        se: f64,
        wall_ms: f64,
    }
    let mut cells = Vec::new();
    for rep in 0..args.replicates {
        let path = fit_path(&args.model, &args.loss, &args.kernel, &schedule, &args.sizes, args.seed, rep, &opts)?;
        for p in path {
            let fit = p.outcome?;
            cells.push(Cell {
                rep,
                n: p.n,
                lambda: p.lambda,
                norm: fit.rkhs_norm,
                objective: fit.model.objective_value,
                distance: fit.distance.value,
                se: fit.distance.std_error,
                wall_ms: if args.timing { p.wall_ms } else { 0.0 },
            });
        }
    }
    let triples: Vec<(u64, usize, f64)> = cells.iter().map(|c| (c.rep, c.n, c.distance)).collect();
    let medians = median_distances(&triples, &args.sizes);
    let mut table = Table::new(SVM_COLUMNS);
    for c in &cells {
        let med = args.sizes.iter().position(|&n| n == c.n).map(|i| medians[i]);
        table.push(vec![
            c.rep.to_string(),
            c.n.to_string(),
            fmt_f64(c.lambda),
            fmt_f64(c.norm),
            fmt_f64(c.objective),
            fmt_f64(c.distance),
            fmt_f64(c.se),
            fmt_f64(c.wall_ms),
            consistent.to_string(),
            fmt_opt(med),
        ]);
    }
    let first = medians.first().copied().unwrap_or(f64::NAN);
    let last = medians.last().copied().unwrap_or(f64::NAN);
    notes.push(format!(
        "median L{lp} distance {} -> {} over sizes {:?}",
        fmt_f64(first),
        fmt_f64(last),
        args.sizes
    ));
    let svg = args.svg.then(|| {
        let mut series = vec![Series::new(
            "median",
            args.sizes.iter().zip(&medians).map(|(&n, &d)| (n as f64, d)).collect(),
        )];
        for rep in 0..args.replicates {
            series.push(Series::new(
                format!("replicate {rep}"),
                cells.iter().filter(|c| c.rep == rep).map(|c| (c.n as f64, c.distance)).collect(),
            ));
        }
        line_plot(
            &format!("{} on {}, {}", args.loss, args.model, args.kernel),
            "n",
            &format!("L{lp} distance to target"),
            &series,
        )
    });
    Ok(RunOutput {
        csv: table.to_string_lossy(),
        svg,
        notes,
        status: Status::Success,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionArgs {
    pub model: DistributionModel,
    pub tau: f64,
    pub c1: f64,
    pub c2: f64,
    pub grid: usize,
}

/// Condition (i): finite averaged first moment. Condition (ii): two-sided
/// mass around the conditional τ-quantile and no atom there.
pub fn verify_conditions(args: &ConditionArgs) -> Result<RunOutput> {
    if args.grid == 0 {
        return Err(invalid("grid must have at least one point"));
    }
    let moment = args.model.averaged_moment(1, MOMENT_TRUNCATION)?;
    let cond_i = !moment.diverging;
    let params = ConditionIIParams::on_grid(&args.model, args.c1, args.c2, args.grid);
    let rep = args.model.check_condition_ii(args.tau, &params)?;
    let mut table = Table::new(["x", "quantile", "left_mass", "right_mass", "atom_mass", "ok"]);
    for r in &rep.rows {
        table.push(vec![
            fmt_f64(r.x[0]),
            fmt_f64(r.quantile),
            fmt_f64(r.left_mass),
            fmt_f64(r.right_mass),
            fmt_f64(r.atom_mass),
            r.ok.to_string(),
        ]);
    }
    let notes = vec![
        format!(
            "condition (i) {}: truncated first moment {} at T={}, {} at 2T",
            if cond_i { "holds" } else { "fails (diverging)" },
            fmt_f64(moment.value),
            MOMENT_TRUNCATION,
            fmt_f64(moment.doubled)
        ),
        format!(
            "condition (ii) {}: worst one-sided mass {} (c2 = {}), {} atom(s) at the quantile",
            if rep.holds { "holds" } else { "fails" },
            fmt_f64(rep.worst_mass),
            args.c2,
            rep.atom_violations.len()
        ),
    ];
    Ok(RunOutput {
        csv: table.to_string_lossy(),
        svg: None,
        notes,
        status: if cond_i || rep.holds { Status::Success } else { Status::Violation },
    })
}

pub fn loss_audit(loss: &LossSpec, radius: f64, points: usize) -> Result<RunOutput> {
    let audit = loss.growth_audit(radius, points)?;
    let mut table = Table::new(["check", "passed", "first_violation"]);
    for c in &audit.checks {
        table.push(vec![c.name.to_string(), c.passed.to_string(), fmt_opt(c.first_violation)]);
    }
    let notes = vec![format!(
        "{loss}: growth type p={}, c_upper={}, c_lower={}, {}",
        loss.growth_type,
        loss.c_upper,
        loss.c_lower,
        if audit.all_pass() { "all checks pass" } else { "audit FAILED" }
    )];
    Ok(RunOutput {
        csv: table.to_string_lossy(),
        svg: None,
        notes,
        status: if audit.all_pass() { Status::Success } else { Status::Violation },
    })
}
