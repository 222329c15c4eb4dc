//! Risk functionals: Monte Carlo estimates of `R_{L,P}(f)`, of the shifted
//! risk `R_{L*,P}(f)` and of `L_p(P_X)` distances, plus exact quadrature for
//! one-dimensional mixture models.

use crate::csv::fmt_f64;
use crate::distributions::{Conditional, DistributionModel, Marginal, ModelKind};
use crate::error::{invalid, Error, Result};
use crate::loss::{LossKind, LossSpec};
use crate::predictor::{PiecewisePredictor, Predictor};
use crate::quadrature::{integrate, QuadOptions};
use crate::seed;

/// Running means above this are reported as a diverging estimate.
pub const DIVERGENCE_THRESHOLD: f64 = 1e30;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_samples: usize,
    /// Closed form or quadrature rather than sampling.
    pub exact: bool,
    pub diverging: bool,
}

impl RiskEstimate {
    pub fn exact(value: f64) -> Self {
        RiskEstimate {
            value,
            std_error: 0.0,
            n_samples: 0,
            exact: true,
            diverging: false,
        }
    }

    pub const CSV_HEADER: &'static str = "value,std_error,n_samples,exact";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{}",
            fmt_f64(self.value),
            fmt_f64(self.std_error),
            self.n_samples,
            self.exact
        )
    }

    /// Whether `target` lies within `k` standard errors of the estimate.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.std_error
    }
}

/// Welford accumulator; also tracks whether the running mean blew up.
#[derive(Debug, Default, Clone, Copy)]
struct Welford {
    n: usize,
    mean: f64,
    m2: f64,
    blew_up: bool,
}

impl Welford {
    fn push(&mut self, v: f64) {
        self.n += 1;
        let d = v - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (v - self.mean);
        if !(self.mean.abs() <= DIVERGENCE_THRESHOLD) {
            self.blew_up = true;
        }
    }

    fn std_error(&self) -> f64 {
        if self.n < 2 || !self.m2.is_finite() {
            return if self.blew_up { f64::INFINITY } else { 0.0 };
        }
        (self.m2.max(0.0) / (self.n - 1) as f64 / self.n as f64).sqrt()
    }

    fn estimate(&self, diverging: bool) -> RiskEstimate {
        RiskEstimate {
            value: self.mean,
            std_error: self.std_error(),
            n_samples: self.n,
            exact: false,
            diverging: diverging || self.blew_up,
        }
    }
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        Err(invalid(format!("Monte Carlo needs at least 2 samples, got {n}")))
    } else {
        Ok(())
    }
}

/// Sample mean of `L(yᵢ, f(xᵢ))`.
///
/// Besides the running-mean threshold, the estimate is flagged as diverging
/// when the model's averaged moment of order `p` (the growth type of the
/// loss) is infinite: a finite sample cannot reveal that on its own.
pub fn mc_risk<F: Predictor + ?Sized>(
    loss: &LossSpec,
    model: &DistributionModel,
    f: &F,
    n: usize,
    seed: u64,
) -> Result<RiskEstimate> {
    check_n(n)?;
    let mut rng = seed::rng(seed);
    let mut acc = Welford::default();
    for _ in 0..n {
        let (x, y) = model.draw(&mut rng);
        acc.push(loss.eval(y, f.predict(&x)));
    }
    let heavy = match model.averaged_moment(loss.growth_type, 1e6) {
        Ok(m) => m.diverging,
        Err(Error::Unsupported(_)) => false,
        Err(e) => return Err(e),
    };
    Ok(acc.estimate(heavy))
}

/// Sample mean of the pathwise differences `L(yᵢ, f(xᵢ)) − L(yᵢ, 0)`.
pub fn mc_shifted_risk<F: Predictor + ?Sized>(
    loss: &LossSpec,
    model: &DistributionModel,
    f: &F,
    n: usize,
    seed: u64,
) -> Result<RiskEstimate> {
    check_n(n)?;
    require_lipschitz(loss)?;
    let mut rng = seed::rng(seed);
    let mut acc = Welford::default();
    for _ in 0..n {
        let (x, y) = model.draw(&mut rng);
        acc.push(loss.shift_eval_stable(y, f.predict(&x)));
    }
    Ok(acc.estimate(false))
}

fn require_lipschitz(loss: &LossSpec) -> Result<()> {
    if loss.lipschitz.is_none() {
        return Err(Error::Unsupported(format!(
            "the shifted risk of {loss} is not finite in general; it needs a Lipschitz loss"
        )));
    }
    Ok(())
}

/// `‖f − g‖_{L_p(P_X)}` from `n` marginal draws, standard error by the delta method.
pub fn mc_lp_distance<F: Predictor + ?Sized, G: Predictor + ?Sized>(
    f: &F,
    g: &G,
    marginal: &Marginal,
    p: u32,
    n: usize,
    seed: u64,
) -> Result<RiskEstimate> {
    check_n(n)?;
    if p == 0 {
        return Err(invalid("L_p distance needs p ≥ 1"));
    }
    let mut rng = seed::rng(seed);
    let mut acc = Welford::default();
    for _ in 0..n {
        let x = marginal.sample(&mut rng);
        acc.push((f.predict(&x) - g.predict(&x)).abs().powi(p as i32));
    }
    let m = acc.mean;
    let inv_p = 1.0 / p as f64;
    let value = m.powf(inv_p);
    let std_error = if m > 0.0 {
        inv_p * m.powf(inv_p - 1.0) * acc.std_error()
    } else {
        0.0
    };
    Ok(RiskEstimate {
        value,
        std_error,
        n_samples: n,
        exact: false,
        diverging: acc.blew_up,
    })
}

const OUTER: QuadOptions = QuadOptions {
    abs_tol: 1e-10,
    rel_tol: 1e-13,
    max_intervals: 20_000,
};

fn unit_interval(model: &DistributionModel) -> Result<(f64, f64)> {
    match &model.marginal {
        Marginal::UniformBox { lower, upper } if lower.len() == 1 => Ok((lower[0], upper[0])),
        _ => Err(Error::Unsupported(
            "exact quadrature needs a uniform marginal on an interval".into(),
        )),
    }
}

/// `E[L*(Y, t) | x]` for a mixture conditional, with the uniform pieces
/// integrated in closed form through the antiderivative of ψ.
pub fn conditional_shifted_risk(loss: &LossSpec, cond: &Conditional, t: f64) -> Result<f64> {
    let Conditional::Mixture(m) = cond else {
        return Err(Error::Unsupported(
            "exact inner integrals need a mixture of uniforms and atoms".into(),
        ));
    };
    let big_psi = |r: f64| loss.psi_antiderivative(r);
    let uniform: f64 = m
        .uniforms
        .iter()
        .map(|p| {
            let moved = big_psi(p.b - t) - big_psi(p.a - t);
            let base = big_psi(p.b) - big_psi(p.a);
            p.weight * (moved - base) / (p.b - p.a)
        })
        .sum();
    let atoms: f64 = m.atoms.iter().map(|a| a.weight * loss.shift_eval_stable(a.loc, t)).sum();
    Ok(uniform + atoms)
}

fn model_breakpoints(model: &DistributionModel) -> Vec<f64> {
    match &model.kind {
        ModelKind::CounterexampleSymmetric { loss } => match loss.kind {
            LossKind::Huber { delta } => vec![delta],
            _ => Vec::new(),
        },
        _ => Vec::new(),
    }
}

/// Exact `R_{L*,P}(f)` for a one-dimensional mixture model.
pub fn quadrature_shifted_risk<F: PiecewisePredictor + ?Sized>(
    loss: &LossSpec,
    model: &DistributionModel,
    f: &F,
) -> Result<RiskEstimate> {
    require_lipschitz(loss)?;
    let (lo, hi) = unit_interval(model)?;
    // Probe once so unsupported conditionals fail loudly, not inside the integrand.
    conditional_shifted_risk(loss, &model.conditional(&[0.5 * (lo + hi)])?, 0.0)?;
    let mut breaks = f.breakpoints();
    breaks.extend(model_breakpoints(model));
    let r = integrate(
        |x: f64| {
            let cond = model.conditional(&[x]).expect("x lies inside the open interval");
            conditional_shifted_risk(loss, &cond, f.eval1(x)).expect("mixture conditional")
        },
        lo,
        hi,
        &breaks,
        OUTER,
    )?;
    Ok(RiskEstimate::exact(r.value / (hi - lo)))
}

/// Exact `R_{L*,P}(f) − R_{L*,P}(g)`.
pub fn quadrature_risk_gap<F, G>(loss: &LossSpec, model: &DistributionModel, f: &F, g: &G) -> Result<RiskEstimate>
where
    F: PiecewisePredictor + ?Sized,
    G: PiecewisePredictor + ?Sized,
{
    require_lipschitz(loss)?;
    let (lo, hi) = unit_interval(model)?;
    conditional_shifted_risk(loss, &model.conditional(&[0.5 * (lo + hi)])?, 0.0)?;
    let mut breaks = f.breakpoints();
    breaks.extend(g.breakpoints());
    breaks.extend(model_breakpoints(model));
    let r = integrate(
        |x: f64| {
            let cond = model.conditional(&[x]).expect("x lies inside the open interval");
            let a = conditional_shifted_risk(loss, &cond, f.eval1(x)).expect("mixture conditional");
            let b = conditional_shifted_risk(loss, &cond, g.eval1(x)).expect("mixture conditional");
            a - b
        },
        lo,
        hi,
        &breaks,
        OUTER,
    )?;
    Ok(RiskEstimate::exact(r.value / (hi - lo)))
}

/// Exact `‖f − g‖_{L_1}` under the uniform law on `(0, 1)`.
pub fn quadrature_l1_distance<F, G>(f: &F, g: &G) -> Result<f64>
where
    F: PiecewisePredictor + ?Sized,
    G: PiecewisePredictor + ?Sized,
{
    let mut breaks = f.breakpoints();
    breaks.extend(g.breakpoints());
    Ok(integrate(|x| (f.eval1(x) - g.eval1(x)).abs(), 0.0, 1.0, &breaks, OUTER)?.value)
}
