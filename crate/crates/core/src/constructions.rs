//! Spike sequences on `(0, 1)` whose shifted-risk gap to the Bayes function
//! vanishes while their `L_1` distance to it does not, in three flavours:
//! the step spike, a Sobolev-smooth spike and a Gaussian-RKHS approximant of
//! the latter. Also the atom locations `a_x` of the symmetric counterexample
//! and drivers that tabulate exact and Monte Carlo gaps.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::csv::{fmt_f64, fmt_opt, Table};
use crate::distributions::{DistributionModel, Marginal};
use crate::error::{invalid, Error, Result};
use crate::kernel::KernelSpec;
use crate::loss::{LossKind, LossSpec};
use crate::predictor::{Constant, PiecewisePredictor, Predictor};
use crate::risk::{mc_lp_distance, mc_shifted_risk, quadrature_risk_gap};
use crate::seed;

/// `f_n = n` on `(0, 1/n)`, zero elsewhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spike {
    n: f64,
}

impl Spike {
    pub fn new(n: u64) -> Result<Self> {
        if n == 0 {
            return Err(invalid("spike index must be at least 1"));
        }
        Ok(Spike { n: n as f64 })
    }

    /// `‖f_n‖_{L_1(0,1)}`.
    pub fn l1_norm(&self) -> f64 {
        1.0
    }
}

impl Predictor for Spike {
    fn predict(&self, x: &[f64]) -> f64 {
        self.eval1(x[0])
    }
}

impl PiecewisePredictor for Spike {
    fn eval1(&self, x: f64) -> f64 {
        if x > 0.0 && x * self.n < 1.0 {
            self.n
        } else {
            0.0
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        if self.n > 1.0 {
            vec![1.0 / self.n]
        } else {
            Vec::new()
        }
    }
}

/// `g_n = n(1 − nx)^m` on `(0, 1/n)`, zero elsewhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SobolevSpike {
    n: f64,
    m: u32,
}

impl SobolevSpike {
    pub fn new(n: u64, m: u32) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(invalid(format!("sobolev spike needs n, m ≥ 1, got n={n} m={m}")));
        }
        Ok(SobolevSpike { n: n as f64, m })
    }

    pub fn l1_norm(&self) -> f64 {
        1.0 / (self.m as f64 + 1.0)
    }
}

impl Predictor for SobolevSpike {
    fn predict(&self, x: &[f64]) -> f64 {
        self.eval1(x[0])
    }
}

impl PiecewisePredictor for SobolevSpike {
    fn eval1(&self, x: f64) -> f64 {
        let u = 1.0 - self.n * x;
        if x > 0.0 && u > 0.0 {
            self.n * u.powi(self.m as i32)
        } else {
            0.0
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        if self.n > 1.0 {
            vec![1.0 / self.n]
        } else {
            Vec::new()
        }
    }
}

/// Ridge added to the Gram matrix of the interpolation nodes.
pub const APPROX_RIDGE: f64 = 1e-10;

/// Gaussian-kernel expansion interpolating a [`SobolevSpike`] at the nodes
/// `(i + 1/2)/grid_size`, with the sup error measured on a grid ten times finer.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianApprox {
    target: SobolevSpike,
    kernel: KernelSpec,
    nodes: Vec<f64>,
    coef: Vec<f64>,
    sup_error: f64,
}

impl GaussianApprox {
    pub fn fit(n: u64, m: u32, gamma: f64, grid_size: usize) -> Result<Self> {
        let target = SobolevSpike::new(n, m)?;
        if (grid_size as u64) < 10 * n {
            return Err(invalid(format!("grid size {grid_size} is below 10·n = {}", 10 * n)));
        }
        let kernel = KernelSpec::gaussian(gamma, 1)?;
        let nodes: Vec<f64> = (0..grid_size).map(|i| (i as f64 + 0.5) / grid_size as f64).collect();
        let pts: Vec<[f64; 1]> = nodes.iter().map(|&v| [v]).collect();
        let mut k = kernel.gram(&pts)?;
        for i in 0..grid_size {
            k[(i, i)] += APPROX_RIDGE;
        }
        let rhs = DVector::from_iterator(grid_size, nodes.iter().map(|&v| target.eval1(v)));
        let coef = solve_spd(k, rhs)?;
        let mut approx = GaussianApprox {
            target,
            kernel,
            nodes,
            coef: coef.iter().copied().collect(),
            sup_error: f64::NAN,
        };
        let audit = 10 * grid_size;
        approx.sup_error = (0..audit)
            .map(|i| (i as f64 + 0.5) / audit as f64)
            .map(|x| (approx.eval1(x) - target.eval1(x)).abs())
            .fold(0.0, f64::max);
        Ok(approx)
    }

    /// Like [`GaussianApprox::fit`] but fails when the audited sup error
    /// exceeds `budget`.
    pub fn fit_within(n: u64, m: u32, gamma: f64, grid_size: usize, budget: f64) -> Result<Self> {
        let a = Self::fit(n, m, gamma, grid_size)?;
        if a.sup_error > budget {
            return Err(Error::ApproximationBudget {
                achieved: a.sup_error,
                budget,
            });
        }
        Ok(a)
    }

    pub fn sup_error(&self) -> f64 {
        self.sup_error
    }

    pub fn target(&self) -> &SobolevSpike {
        &self.target
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coef
    }
}

fn solve_spd(k: DMatrix<f64>, rhs: DVector<f64>) -> Result<DVector<f64>> {
    match k.clone().cholesky() {
        Some(ch) => Ok(ch.solve(&rhs)),
        None => k
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Unsupported("interpolation system is singular".into())),
    }
}

impl Predictor for GaussianApprox {
    fn predict(&self, x: &[f64]) -> f64 {
        self.eval1(x[0])
    }
}

impl PiecewisePredictor for GaussianApprox {
    fn eval1(&self, x: f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.coef)
            .map(|(&z, &c)| c * self.kernel.eval_unchecked(&[x], &[z]))
            .sum()
    }

    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// Which member of the spike families to build.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConstructionSpec {
    Spike { n: u64 },
    SobolevSpike { n: u64, m: u32 },
    GaussianApprox { n: u64, m: u32, gamma: f64, grid_size: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Construction {
    Spike(Spike),
    SobolevSpike(SobolevSpike),
    GaussianApprox(GaussianApprox),
}

impl ConstructionSpec {
    /// Builds the predictor. The Gaussian approximant must reach sup error
    /// `1/n` on its audit grid.
    pub fn construct(&self) -> Result<Construction> {
        Ok(match *self {
            ConstructionSpec::Spike { n } => Construction::Spike(Spike::new(n)?),
            ConstructionSpec::SobolevSpike { n, m } => Construction::SobolevSpike(SobolevSpike::new(n, m)?),
            ConstructionSpec::GaussianApprox { n, m, gamma, grid_size } => {
                Construction::GaussianApprox(GaussianApprox::fit_within(n, m, gamma, grid_size, 1.0 / n as f64)?)
            }
        })
    }
}

impl Predictor for Construction {
    fn predict(&self, x: &[f64]) -> f64 {
        self.eval1(x[0])
    }
}

impl PiecewisePredictor for Construction {
    fn eval1(&self, x: f64) -> f64 {
        match self {
            Construction::Spike(s) => s.eval1(x),
            Construction::SobolevSpike(s) => s.eval1(x),
            Construction::GaussianApprox(g) => g.eval1(x),
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match self {
            Construction::Spike(s) => s.breakpoints(),
            Construction::SobolevSpike(s) => s.breakpoints(),
            Construction::GaussianApprox(g) => g.breakpoints(),
        }
    }
}

/// Radius `r_x` past which the right slope of ψ is within `x` of its limit.
pub fn r_x(loss: &LossSpec, x: f64) -> Result<f64> {
    if !(x > 0.0 && x < 1.0) {
        return Err(invalid(format!("x must lie in (0,1), got {x}")));
    }
    match loss.kind {
        LossKind::Absolute => Ok(0.0),
        LossKind::Pinball { tau: 0.5 } => Ok(0.0),
        LossKind::Huber { delta } => Ok((delta - x).max(0.0)),
        LossKind::EpsInsensitive { eps } => Ok(eps),
        _ => Err(Error::Unsupported(format!(
            "{loss} is not a symmetric Lipschitz loss"
        ))),
    }
}

/// Atom location `a_x = r_x + 1/x` of the symmetric counterexample.
pub fn a_x(loss: &LossSpec, x: f64) -> Result<f64> {
    Ok(r_x(loss, x)? + 1.0 / x)
}

/// The two counterexample families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CounterexampleMode {
    Pinball { tau: f64 },
    Symmetric { loss: LossSpec },
}

impl CounterexampleMode {
    pub fn pinball(tau: f64) -> Result<Self> {
        LossSpec::pinball(tau)?;
        Ok(CounterexampleMode::Pinball { tau })
    }

    pub fn symmetric(loss: LossSpec) -> Result<Self> {
        DistributionModel::counterexample_symmetric(loss)?;
        Ok(CounterexampleMode::Symmetric { loss })
    }

    pub fn loss(&self) -> LossSpec {
        match *self {
            CounterexampleMode::Pinball { tau } => LossSpec::pinball(tau).expect("validated"),
            CounterexampleMode::Symmetric { loss } => loss,
        }
    }

    pub fn model(&self) -> DistributionModel {
        match *self {
            CounterexampleMode::Pinball { tau } => DistributionModel::counterexample_pinball(tau),
            CounterexampleMode::Symmetric { loss } => DistributionModel::counterexample_symmetric(loss),
        }
        .expect("validated")
    }

    /// `|L|₁/(2n) + 1/n − 1/(2n²)`; symmetric mode only.
    pub fn bound_gap(&self, n: u64) -> Option<f64> {
        match self {
            CounterexampleMode::Pinball { .. } => None,
            CounterexampleMode::Symmetric { loss } => {
                let n = n as f64;
                let lip = loss.lipschitz.expect("symmetric counterexample losses are Lipschitz");
                Some(lip / (2.0 * n) + 1.0 / n - 1.0 / (2.0 * n * n))
            }
        }
    }
}

impl fmt::Display for CounterexampleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CounterexampleMode::Pinball { tau } => write!(f, "tau={tau}"),
            CounterexampleMode::Symmetric { loss } => write!(f, "loss={loss}"),
        }
    }
}

impl FromStr for CounterexampleMode {
    type Err = Error;

    /// `tau:<τ>` or a loss name.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().strip_prefix("tau:") {
            Some(t) => CounterexampleMode::pinball(t.trim().parse().map_err(|_| Error::Parse {
                what: "τ",
                input: s.to_string(),
            })?),
            None => CounterexampleMode::symmetric(s.parse()?),
        }
    }
}

/// One row of a counterexample table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapRow {
    pub n: u64,
    pub exact_gap: f64,
    pub mc_gap: f64,
    pub mc_gap_se: f64,
    pub exact_l1: f64,
    pub mc_l1: f64,
    pub mc_l1_se: f64,
    pub bound_gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name,
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapTable {
    pub mode: CounterexampleMode,
    pub rows: Vec<GapRow>,
    pub checks: Vec<Check>,
}

impl GapTable {
    pub const COLUMNS: [&'static str; 8] = [
        "n",
        "exact_gap",
        "mc_gap",
        "mc_gap_se",
        "exact_l1",
        "mc_l1",
        "mc_l1_se",
        "bound_gap",
    ];

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(Self::COLUMNS);
        for r in &self.rows {
            t.push(vec![
                r.n.to_string(),
                fmt_f64(r.exact_gap),
                fmt_f64(r.mc_gap),
                fmt_f64(r.mc_gap_se),
                fmt_f64(r.exact_l1),
                fmt_f64(r.mc_l1),
                fmt_f64(r.mc_l1_se),
                fmt_opt(r.bound_gap),
            ]);
        }
        t
    }
}

/// Monte Carlo sample count and seed for the sampled columns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub samples: usize,
    pub seed: u64,
}

fn check_sizes(sizes: &[u64]) -> Result<()> {
    if sizes.is_empty() {
        return Err(Error::EmptyInput("no sizes given"));
    }
    if sizes[0] == 0 || sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid(format!("sizes must be positive and strictly increasing, got {sizes:?}")));
    }
    Ok(())
}

fn gap_row<F: PiecewisePredictor>(
    mode: &CounterexampleMode,
    f: &F,
    exact_l1: f64,
    n: u64,
    size_index: usize,
    mc: McConfig,
    tag: &str,
) -> Result<GapRow> {
    let loss = mode.loss();
    let model = mode.model();
    let exact_gap = quadrature_risk_gap(&loss, &model, f, &Constant(0.0))?.value;
    let gap_seed = seed::derive(mc.seed, &format!("{tag}-gap"), 0, size_index as u64);
    let l1_seed = seed::derive(mc.seed, &format!("{tag}-l1"), 0, size_index as u64);
    let mc_gap = mc_shifted_risk(&loss, &model, f, mc.samples, gap_seed)?;
    let mc_l1 = mc_lp_distance(f, &Constant(0.0), &Marginal::unit_box(1), 1, mc.samples, l1_seed)?;
    Ok(GapRow {
        n,
        exact_gap,
        mc_gap: mc_gap.value,
        mc_gap_se: mc_gap.std_error,
        exact_l1,
        mc_l1: mc_l1.value,
        mc_l1_se: mc_l1.std_error,
        bound_gap: mode.bound_gap(n),
    })
}

fn common_checks(rows: &[GapRow], l1_target: f64) -> Vec<Check> {
    let mut checks = Vec::new();
    let bad_mc: Vec<u64> = rows
        .iter()
        .filter(|r| {
            (r.mc_gap - r.exact_gap).abs() > 4.0 * r.mc_gap_se || (r.mc_l1 - r.exact_l1).abs() > 4.0 * r.mc_l1_se
        })
        .map(|r| r.n)
        .collect();
    checks.push(Check::new(
        "exact_vs_mc",
        bad_mc.is_empty(),
        format!("rows outside 4 SE: {bad_mc:?}"),
    ));
    let decreasing = rows.windows(2).all(|w| w[1].exact_gap < w[0].exact_gap);
    checks.push(Check::new("gap_decreasing", decreasing, "exact_gap strictly decreasing in n"));
    let l1_flat = rows.iter().all(|r| r.exact_l1 == l1_target);
    checks.push(Check::new("l1_constant", l1_flat, format!("exact_l1 = {l1_target} at every n")));
    if rows.iter().any(|r| r.bound_gap.is_some()) {
        let over: Vec<u64> = rows
            .iter()
            .filter(|r| r.bound_gap.is_some_and(|b| r.exact_gap > b))
            .map(|r| r.n)
            .collect();
        checks.push(Check::new("gap_below_bound", over.is_empty(), format!("rows above bound: {over:?}")));
    }
    checks
}

/// Exact and sampled shifted-risk gap and `L_1` distance of the spike
/// sequence against the Bayes function `0`.
pub fn run_counterexample(mode: CounterexampleMode, sizes: &[u64], mc: McConfig) -> Result<GapTable> {
    check_sizes(sizes)?;
    let rows = sizes
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let s = Spike::new(n)?;
            gap_row(&mode, &s, s.l1_norm(), n, i, mc, "counterexample")
        })
        .collect::<Result<Vec<_>>>()?;
    let checks = common_checks(&rows, 1.0);
    Ok(GapTable { mode, rows, checks })
}

/// As [`run_counterexample`] with the Sobolev spike of order `m`; also checks
/// that its gap never exceeds the step spike's.
pub fn run_sobolev_variant(mode: CounterexampleMode, m: u32, sizes: &[u64], mc: McConfig) -> Result<GapTable> {
    check_sizes(sizes)?;
    let loss = mode.loss();
    let model = mode.model();
    let mut rows = Vec::with_capacity(sizes.len());
    let mut dominated = Vec::new();
    for (i, &n) in sizes.iter().enumerate() {
        let g = SobolevSpike::new(n, m)?;
        let row = gap_row(&mode, &g, g.l1_norm(), n, i, mc, "sobolev")?;
        let spike_gap = quadrature_risk_gap(&loss, &model, &Spike::new(n)?, &Constant(0.0))?.value;
        if row.exact_gap > spike_gap {
            dominated.push(n);
        }
        rows.push(row);
    }
    let mut checks = common_checks(&rows, 1.0 / (m as f64 + 1.0));
    checks.push(Check::new(
        "dominated_by_spike",
        dominated.is_empty(),
        format!("rows above the spike gap: {dominated:?}"),
    ));
    Ok(GapTable { mode, rows, checks })
}

/// Gap of a Gaussian approximant next to the gap of the Sobolev spike it
/// approximates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferReport {
    pub n: u64,
    pub sobolev_gap: f64,
    pub approx_gap: f64,
    pub sup_error: f64,
    /// `|L|₁ · sup_error`.
    pub bound: f64,
    pub holds: bool,
}

pub fn gaussian_transfer(mode: CounterexampleMode, n: u64, m: u32, gamma: f64, grid_size: usize) -> Result<TransferReport> {
    let loss = mode.loss();
    let model = mode.model();
    let approx = GaussianApprox::fit(n, m, gamma, grid_size)?;
    let zero = Constant(0.0);
    let sobolev_gap = quadrature_risk_gap(&loss, &model, approx.target(), &zero)?.value;
    let approx_gap = quadrature_risk_gap(&loss, &model, &approx, &zero)?.value;
    let bound = loss.lipschitz.expect("counterexample losses are Lipschitz") * approx.sup_error();
    // Slack for the quadrature tolerance on both gaps.
    let holds = (approx_gap - sobolev_gap).abs() <= bound + 4e-10;
    Ok(TransferReport {
        n,
        sobolev_gap,
        approx_gap,
        sup_error: approx.sup_error(),
        bound,
        holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spike_values() {
        let s = Spike::new(4).unwrap();
        assert_eq!(s.eval1(0.1), 4.0);
        assert_eq!(s.eval1(0.3), 0.0);
        assert_eq!(s.eval1(0.25), 0.0);
        let g = SobolevSpike::new(4, 2).unwrap();
        assert_eq!(g.eval1(1e-300), 4.0);
        assert_eq!(g.eval1(0.25), 0.0);
        assert_eq!(SobolevSpike::new(3, 9).unwrap().l1_norm(), 0.1);
    }

    #[test]
    fn a_x_examples() {
        assert_eq!(a_x(&LossSpec::absolute(), 0.25).unwrap(), 4.0);
        assert_eq!(a_x(&LossSpec::huber(1.0).unwrap(), 0.25).unwrap(), 4.75);
        assert_eq!(a_x(&LossSpec::eps_insensitive(0.25).unwrap(), 0.5).unwrap(), 2.25);
        assert!(a_x(&LossSpec::pinball(0.3).unwrap(), 0.5).is_err());
        assert!(a_x(&LossSpec::least_squares(), 0.5).is_err());
    }

    #[test]
    fn a_x_scaling() {
        for loss in [LossSpec::absolute(), LossSpec::huber(1.0).unwrap(), LossSpec::eps_insensitive(0.25).unwrap()] {
            for i in 1..100 {
                let x = i as f64 / 100.0;
                let a = a_x(&loss, x).unwrap();
                assert!(a > 1.0f64.max(1.0 / x) - 1.0);
                // the right slope at r_x is within x of its limit
                let gap = loss.asymptotic_slope().unwrap() - loss.slope_sup(r_x(&loss, x).unwrap()).unwrap();
                assert!(gap >= 0.0 && gap <= x + 1e-12, "{loss} x={x} gap={gap}");
            }
        }
        let x = 1e-9;
        assert!((a_x(&LossSpec::absolute(), x).unwrap() * x - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gaussian_approx_example() {
        let g = GaussianApprox::fit(4, 2, 0.02, 400).unwrap();
        assert!(g.sup_error() <= 0.25, "{}", g.sup_error());
        assert!(matches!(
            GaussianApprox::fit_within(4, 2, 0.02, 400, 1e-30),
            Err(Error::ApproximationBudget { .. })
        ));
        assert!(GaussianApprox::fit(4, 2, 0.02, 39).is_err());
    }

    #[test]
    fn pinball_table_small() {
        let t = run_counterexample(
            CounterexampleMode::pinball(0.5).unwrap(),
            &[2, 10, 100],
            McConfig { samples: 20_000, seed: 42 },
        )
        .unwrap();
        let exact: Vec<f64> = t.rows.iter().map(|r| r.exact_gap).collect();
        for (v, e) in exact.iter().zip([0.09375, 0.02375, 0.0024875]) {
            assert!((v - e).abs() < 1e-15 * e.max(1.0), "{v} vs {e}");
        }
        assert!(t.rows.iter().all(|r| r.exact_l1 == 1.0 && r.bound_gap.is_none()));
        assert!(t.all_pass(), "{:?}", t.checks);
        let csv = t.to_table().to_string_lossy();
        assert!(csv.starts_with("n,exact_gap,mc_gap,mc_gap_se,exact_l1,mc_l1,mc_l1_se,bound_gap\n"));
    }

    #[test]
    fn sobolev_domination_small() {
        let t = run_sobolev_variant(
            CounterexampleMode::pinball(0.5).unwrap(),
            1,
            &[10],
            McConfig { samples: 10_000, seed: 1 },
        )
        .unwrap();
        assert!(t.rows[0].exact_gap <= 0.02375);
        assert!(t.all_pass(), "{:?}", t.checks);
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("tau:0.3".parse::<CounterexampleMode>().unwrap(), CounterexampleMode::Pinball { tau: 0.3 });
        assert!("tau:1.5".parse::<CounterexampleMode>().is_err());
        assert!("absolute".parse::<CounterexampleMode>().is_ok());
        assert!("eps:0.75".parse::<CounterexampleMode>().is_err());
    }
}
