use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use shiftcons::constructions::CounterexampleMode;
use shiftcons::distributions::DistributionModel;
use shiftcons::experiment::{self, exit, ConditionArgs, CounterexampleArgs, RunOutput, SvmArgs};
use shiftcons::{Error, KernelSpec, LossSpec};

#[derive(Parser)]
#[command(name = "shiftcons", version, about = "Shifted-loss consistency experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Spike sequence: risk gap vanishes, L1 distance stays 1.
    Counterexample(GapFlags),
    /// Same table for the smooth spike n(1 − nx)^m.
    Sobolev {
        #[command(flatten)]
        gap: GapFlags,
        #[arg(long, default_value_t = 2)]
        m: u32,
    },
    /// Kernel machine distances to the target along a λ schedule.
    SvmConsistency(SvmFlags),
    /// Moment condition and two-sided quantile mass condition.
    VerifyConditions(ConditionFlags),
    /// Checks the growth, convexity and Lipschitz metadata of a loss.
    LossAudit(AuditFlags),
}

fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>, String> {
    s.split(',')
        .map(|v| v.trim().parse::<T>().map_err(|_| format!("bad list entry {v:?}")))
        .collect()
}

/// Comma-separated list; a newtype so clap treats it as one value.
#[derive(Clone)]
struct List<T>(Vec<T>);

fn parse_sizes<T: std::str::FromStr>(s: &str) -> Result<List<T>, String> {
    parse_list(s).map(List)
}

fn parse_loss(s: &str) -> Result<LossSpec, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_kernel(s: &str) -> Result<KernelSpec, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_model(s: &str) -> Result<DistributionModel, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Args)]
struct Output {
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Args)]
#[group(id = "which", required = true, multiple = false, args = ["loss", "tau"])]
struct GapFlags {
    /// Symmetric loss for the symmetric counterexample.
    #[arg(long, value_parser = parse_loss)]
    loss: Option<LossSpec>,
    /// Quantile level for the pinball counterexample.
    #[arg(long, allow_negative_numbers = true)]
    tau: Option<f64>,
    #[arg(long, value_parser = parse_sizes::<u64>)]
    sizes: List<u64>,
    #[arg(long, default_value_t = 1_000_000)]
    mc: usize,
    #[command(flatten)]
    output: Output,
    /// Also write an SVG plot next to --out.
    #[arg(long)]
    svg: bool,
}

#[derive(Args)]
struct SvmFlags {
    #[arg(long, value_parser = parse_model, default_value = "homo-cauchy:0,1")]
    model: DistributionModel,
    #[arg(long, value_parser = parse_loss, default_value = "pinball:0.5")]
    loss: LossSpec,
    #[arg(long, value_parser = parse_kernel, default_value = "gaussian:0.5")]
    kernel: KernelSpec,
    /// Schedule exponent; defaults to 0.9/p*.
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long, value_parser = parse_sizes::<usize>, default_value = "100,400,1600")]
    sizes: List<usize>,
    #[arg(long, default_value_t = 5)]
    replicates: u64,
    #[arg(long, default_value_t = 20_000)]
    mc: usize,
    #[command(flatten)]
    output: Output,
    #[arg(long)]
    svg: bool,
    /// Fill the wall_ms column (makes the CSV run-dependent).
    #[arg(long)]
    timing: bool,
    /// Solver sweep budget per fit.
    #[arg(long, default_value_t = 200_000)]
    max_iters: usize,
}

#[derive(Args)]
struct ConditionFlags {
    #[arg(long, value_parser = parse_model)]
    model: DistributionModel,
    #[arg(long, default_value_t = 0.5)]
    tau: f64,
    #[arg(long, default_value_t = 0.1)]
    c1: f64,
    #[arg(long, default_value_t = 0.03)]
    c2: f64,
    #[arg(long, default_value_t = 50)]
    grid: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AuditFlags {
    #[arg(long, value_parser = parse_loss)]
    loss: LossSpec,
    #[arg(long, default_value_t = 100.0)]
    radius: f64,
    #[arg(long, default_value_t = 2001)]
    points: usize,
    /// Override the upper growth constant.
    #[arg(long)]
    c_upper: Option<f64>,
    /// Override the lower growth constant.
    #[arg(long)]
    c_lower: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn gap_args(g: &GapFlags) -> shiftcons::Result<CounterexampleArgs> {
    let mode = match (g.loss, g.tau) {
        (Some(l), None) => CounterexampleMode::symmetric(l)?,
        (None, Some(t)) => CounterexampleMode::pinball(t)?,
        _ => unreachable!("clap enforces exactly one of --loss/--tau"),
    };
    Ok(CounterexampleArgs {
        mode,
        sizes: g.sizes.0.clone(),
        mc_samples: g.mc,
        seed: g.output.seed,
        svg: g.svg,
    })
}

fn write_output(out: &RunOutput, path: Option<&Path>) -> shiftcons::Result<()> {
    if out.svg.is_some() && path.is_none() {
        return Err(Error::InvalidParameter("--svg needs --out".into()));
    }
    match path {
        Some(p) => fs::write(p, &out.csv)?,
        None => print!("{}", out.csv),
    }
    if let Some(svg) = &out.svg {
        if let Some(p) = path {
            fs::write(p.with_extension("svg"), svg)?;
        }
    }
    for note in &out.notes {
        eprintln!("{note}");
    }
    Ok(())
}

fn run(cli: Cli) -> shiftcons::Result<i32> {
    let (out, path) = match &cli.command {
        Command::Counterexample(g) => (experiment::counterexample(&gap_args(g)?)?, g.output.out.clone()),
        Command::Sobolev { gap, m } => (experiment::sobolev(&gap_args(gap)?, *m)?, gap.output.out.clone()),
        Command::SvmConsistency(f) => {
            let args = SvmArgs {
                model: f.model.clone(),
                loss: f.loss,
                kernel: f.kernel,
                beta: f.beta,
                c: f.c,
                sizes: f.sizes.0.clone(),
                replicates: f.replicates,
                mc_samples: f.mc,
                seed: f.output.seed,
                svg: f.svg,
                timing: f.timing,
                max_iters: f.max_iters,
            };
            (experiment::svm_consistency(&args)?, f.output.out.clone())
        }
        Command::VerifyConditions(f) => {
            let args = ConditionArgs {
                model: f.model.clone(),
                tau: f.tau,
                c1: f.c1,
                c2: f.c2,
                grid: f.grid,
            };
            (experiment::verify_conditions(&args)?, f.out.clone())
        }
        Command::LossAudit(f) => {
            let loss = f.loss.with_growth_constants(f.c_upper.unwrap_or(f.loss.c_upper), f.c_lower.unwrap_or(f.loss.c_lower));
            (experiment::loss_audit(&loss, f.radius, f.points)?, f.out.clone())
        }
    };
    write_output(&out, path.as_deref())?;
    Ok(out.status.exit_code())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(exit::USAGE as u8),
            };
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(experiment::error_exit_code(&e) as u8)
        }
    }
}
