//! Synthetic joint laws `P = P_X ⊗ P(·|x)` on `X × ℝ`.
//!
//! Each model exposes a sampler, the conditional CDF and quantile function,
//! the atoms of `P(·|x)`, truncated averaged moments, and the checker for
//! the two-sided-mass condition around the conditional quantile that
//! replaces the moment condition for the shifted pinball loss.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::distr::Open01;
use rand::RngExt;
use rand_distr::StandardNormal;
use statrs::function::erf::{erfc, erfc_inv};

use crate::constructions::a_x;
use crate::data::Dataset;
use crate::error::{invalid, Error, Result};
use crate::loss::{LossKind, LossSpec};
use crate::predictor::Predictor;
use crate::quadrature::{integrate, QuadOptions};
use crate::seed::{self, SimRng};

/// Deterministic part of a regression model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Signal {
    Constant(f64),
    /// `sin(2π x₀)`.
    Sine,
}

impl Signal {
    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        match *self {
            Signal::Constant(c) => c,
            Signal::Sine => (2.0 * PI * x[0]).sin(),
        }
    }

    fn is_constant(&self) -> bool {
        matches!(self, Signal::Constant(_))
    }
}

impl FromStr for Signal {
    type Err = Error;

    /// `sine | zero | const:<c>`.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "sine" => Ok(Signal::Sine),
            "zero" => Ok(Signal::Constant(0.0)),
            other => other
                .strip_prefix("const:")
                .and_then(|c| c.trim().parse().ok())
                .map(Signal::Constant)
                .ok_or_else(|| Error::Parse {
                    what: "signal",
                    input: s.to_string(),
                }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseSpec {
    Cauchy { location: f64, scale: f64 },
    Gaussian { sigma: f64 },
}

impl NoiseSpec {
    pub fn cauchy(location: f64, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite() && location.is_finite()) {
            return Err(invalid(format!("cauchy scale must be positive, got {scale}")));
        }
        Ok(NoiseSpec::Cauchy { location, scale })
    }

    pub fn gaussian(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(invalid(format!("gaussian σ must be positive, got {sigma}")));
        }
        Ok(NoiseSpec::Gaussian { sigma })
    }
}

/// Marginal law of the inputs.
#[derive(Debug, Clone, PartialEq)]
pub enum Marginal {
    /// Uniform on the open box `∏ (lower_j, upper_j)`.
    UniformBox { lower: Vec<f64>, upper: Vec<f64> },
    /// All mass on one input point.
    Point(Vec<f64>),
}

impl Marginal {
    pub fn unit_box(dim: usize) -> Self {
        Marginal::UniformBox {
            lower: vec![0.0; dim],
            upper: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Marginal::UniformBox { lower, .. } => lower.len(),
            Marginal::Point(p) => p.len(),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Marginal::UniformBox { lower, upper } => {
                x.len() == lower.len() && x.iter().zip(lower.iter().zip(upper)).all(|(&v, (&l, &u))| l < v && v < u)
            }
            Marginal::Point(p) => p.as_slice() == x,
        }
    }

    pub fn sample(&self, rng: &mut SimRng) -> Vec<f64> {
        match self {
            Marginal::UniformBox { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(&l, &u)| {
                    let v: f64 = rng.sample(Open01);
                    l + (u - l) * v
                })
                .collect(),
            Marginal::Point(p) => p.clone(),
        }
    }

    /// `g` evaluation points: the first coordinate sweeps the box at cell
    /// midpoints, the others sit at the box centre.
    pub fn grid(&self, g: usize) -> Vec<Vec<f64>> {
        match self {
            Marginal::UniformBox { lower, upper } => (0..g)
                .map(|i| {
                    let mut x: Vec<f64> = lower.iter().zip(upper).map(|(l, u)| 0.5 * (l + u)).collect();
                    x[0] = lower[0] + (upper[0] - lower[0]) * (i as f64 + 0.5) / g as f64;
                    x
                })
                .collect(),
            Marginal::Point(p) => vec![p.clone()],
        }
    }
}

/// A uniform component `weight · Unif(a, b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformPiece {
    pub weight: f64,
    pub a: f64,
    pub b: f64,
}

/// A point mass `weight · δ_loc`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub loc: f64,
    pub weight: f64,
}

/// Finite mixture of uniform pieces and atoms.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Mixture {
    pub uniforms: Vec<UniformPiece>,
    pub atoms: Vec<Atom>,
}

/// The conditional law `P(·|x)` at one input.
#[derive(Debug, Clone, PartialEq)]
pub enum Conditional {
    Mixture(Mixture),
    Cauchy { loc: f64, scale: f64 },
    Normal { mean: f64, sd: f64 },
}

/// Relative slack for "has the CDF reached level p" comparisons.
const LEVEL_TOL: f64 = 16.0 * f64::EPSILON;

impl Mixture {
    fn cdf_impl(&self, t: f64, include_atom: bool) -> f64 {
        let u: f64 = self
            .uniforms
            .iter()
            .map(|p| p.weight * ((t - p.a) / (p.b - p.a)).clamp(0.0, 1.0))
            .sum();
        let a: f64 = self
            .atoms
            .iter()
            .filter(|at| if include_atom { at.loc <= t } else { at.loc < t })
            .map(|at| at.weight)
            .sum();
        (u + a).min(1.0)
    }

    fn quantile(&self, p: f64) -> f64 {
        let mut pts: Vec<f64> = self
            .uniforms
            .iter()
            .flat_map(|u| [u.a, u.b])
            .chain(self.atoms.iter().map(|a| a.loc))
            .collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let tol = LEVEL_TOL * p.max(1.0);
        let mut prev: Option<(f64, f64)> = None;
        for &pt in &pts {
            let at = self.cdf_impl(pt, true);
            if at >= p - tol {
                let left = self.cdf_impl(pt, false);
                return match prev {
                    Some((x0, c0)) if left > p + tol => x0 + (p - c0) / (left - c0) * (pt - x0),
                    _ => pt,
                };
            }
            prev = Some((pt, at));
        }
        *pts.last().expect("mixture has at least one component")
    }

    fn sample(&self, rng: &mut SimRng) -> f64 {
        let u: f64 = rng.sample(Open01);
        let mut acc = 0.0;
        for p in &self.uniforms {
            acc += p.weight;
            if u < acc {
                let v: f64 = rng.sample(Open01);
                return p.a + (p.b - p.a) * v;
            }
        }
        for at in &self.atoms {
            acc += at.weight;
            if u < acc {
                return at.loc;
            }
        }
        // Rounding left u above the total weight; fall back to the last component.
        match (self.atoms.last(), self.uniforms.last()) {
            (Some(at), _) => at.loc,
            (None, Some(p)) => {
                let v: f64 = rng.sample(Open01);
                p.a + (p.b - p.a) * v
            }
            (None, None) => 0.0,
        }
    }
}

/// `∫₀^y min{|u|, T}^p du`, odd in `y`.
fn truncated_power_antiderivative(y: f64, p: i32, trunc: f64) -> f64 {
    let a = y.abs();
    let v = if a <= trunc {
        a.powi(p + 1) / (p + 1) as f64
    } else {
        trunc.powi(p + 1) / (p + 1) as f64 + trunc.powi(p) * (a - trunc)
    };
    v.copysign(y)
}

impl Conditional {
    pub fn cdf(&self, t: f64) -> f64 {
        match self {
            Conditional::Mixture(m) => m.cdf_impl(t, true),
            Conditional::Cauchy { loc, scale } => 0.5 + ((t - loc) / scale).atan() / PI,
            Conditional::Normal { mean, sd } => 0.5 * erfc(-(t - mean) / (sd * std::f64::consts::SQRT_2)),
        }
    }

    /// `P((−∞, t) | x)`.
    pub fn cdf_left(&self, t: f64) -> f64 {
        match self {
            Conditional::Mixture(m) => m.cdf_impl(t, false),
            _ => self.cdf(t),
        }
    }

    pub fn atom_mass(&self, t: f64) -> f64 {
        match self {
            Conditional::Mixture(m) => m.atoms.iter().filter(|a| a.loc == t).map(|a| a.weight).sum(),
            _ => 0.0,
        }
    }

    /// Mass of the open interval `(a, b)`.
    pub fn open_mass(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        (self.cdf_left(b) - self.cdf(a)).max(0.0)
    }

    /// Smallest `t` with `cdf(t) ≥ p`, for `p ∈ (0, 1)`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(invalid(format!("quantile level must lie in (0,1), got {p}")));
        }
        Ok(match self {
            Conditional::Mixture(m) => m.quantile(p),
            Conditional::Cauchy { loc, scale } => {
                if p == 0.5 {
                    *loc
                } else {
                    loc + scale * (PI * (p - 0.5)).tan()
                }
            }
            Conditional::Normal { mean, sd } => {
                if p == 0.5 {
                    *mean
                } else {
                    mean - sd * std::f64::consts::SQRT_2 * erfc_inv(2.0 * p)
                }
            }
        })
    }

    pub fn sample(&self, rng: &mut SimRng) -> f64 {
        match self {
            Conditional::Mixture(m) => m.sample(rng),
            Conditional::Cauchy { loc, scale } => {
                let u: f64 = rng.sample(Open01);
                loc + scale * (PI * (u - 0.5)).tan()
            }
            Conditional::Normal { mean, sd } => {
                let z: f64 = rng.sample(StandardNormal);
                mean + sd * z
            }
        }
    }

    /// `E[min{|Y|, T}^p | x]`.
    pub fn truncated_moment(&self, p: u32, trunc: f64) -> Result<f64> {
        let pi = p as i32;
        match self {
            Conditional::Mixture(m) => {
                let u: f64 = m
                    .uniforms
                    .iter()
                    .map(|piece| {
                        piece.weight
                            * (truncated_power_antiderivative(piece.b, pi, trunc)
                                - truncated_power_antiderivative(piece.a, pi, trunc))
                            / (piece.b - piece.a)
                    })
                    .sum();
                let a: f64 = m.atoms.iter().map(|at| at.weight * at.loc.abs().min(trunc).powi(pi)).sum();
                Ok(u + a)
            }
            Conditional::Cauchy { loc, scale } => {
                // y = loc + scale·tan θ turns the density into dθ/π on a bounded range.
                let lo = ((-trunc - loc) / scale).atan();
                let hi = ((trunc - loc) / scale).atan();
                let kink = (-loc / scale).atan();
                let body = integrate(
                    |th: f64| (loc + scale * th.tan()).abs().powi(pi) / PI,
                    lo,
                    hi,
                    &[kink],
                    QuadOptions::default(),
                )?;
                let tail = (lo + 0.5 * PI) / PI + (0.5 * PI - hi) / PI;
                Ok(body.value + trunc.powi(pi) * tail)
            }
            Conditional::Normal { mean, sd } => {
                let zlo = ((-trunc - mean) / sd).max(-40.0);
                let zhi = ((trunc - mean) / sd).min(40.0);
                let phi = |z: f64| (-0.5 * z * z).exp() / (2.0 * PI).sqrt();
                let body = if zhi > zlo {
                    integrate(
                        |z: f64| (mean + sd * z).abs().powi(pi) * phi(z),
                        zlo,
                        zhi,
                        &[-mean / sd],
                        QuadOptions::default(),
                    )?
                    .value
                } else {
                    0.0
                };
                let tail = self.cdf(-trunc) + (1.0 - self.cdf(trunc));
                Ok(body + trunc.powi(pi) * tail)
            }
        }
    }

    pub fn mean(&self) -> Option<f64> {
        match self {
            Conditional::Mixture(m) => Some(
                m.uniforms.iter().map(|p| p.weight * 0.5 * (p.a + p.b)).sum::<f64>()
                    + m.atoms.iter().map(|a| a.weight * a.loc).sum::<f64>(),
            ),
            Conditional::Cauchy { .. } => None,
            Conditional::Normal { mean, .. } => Some(*mean),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelKind {
    /// `x·Unif(−1,1) + (1−x)/2·(δ_{−a_x} + δ_{a_x})` on `X = (0,1)`.
    CounterexampleSymmetric { loss: LossSpec },
    /// `x·(τ Unif(−1,0) + (1−τ) Unif(0,1)) + (1−x)(τ δ_{−1/x} + (1−τ) δ_{1/x})` on `X = (0,1)`.
    CounterexamplePinball { tau: f64 },
    /// `Y = f(X) + ε` with `ε` independent of `X`.
    Homoscedastic { signal: Signal, noise: NoiseSpec },
    /// `Y = f(X) + ε_X`, `ε_x ~ Cauchy(cos‖x‖₂, 2 + sin‖x‖₂)`.
    HeteroscedasticCauchy { signal: Signal },
    /// `Y = f(X) + σ·N(0,1)`.
    GaussianControl { signal: Signal, sigma: f64 },
    /// `Y = y` almost surely.
    PointMass { y: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistributionModel {
    pub kind: ModelKind,
    pub marginal: Marginal,
}

impl DistributionModel {
    /// Symmetric-loss counterexample. The loss must be a symmetric Lipschitz
    /// kind with zero-set radius `c₀ ≤ 1/2`.
    pub fn counterexample_symmetric(loss: LossSpec) -> Result<Self> {
        if loss.zero_radius > 0.5 {
            return Err(invalid(format!(
                "counterexample needs c₀ ≤ 1/2, loss {loss} has c₀ = {}",
                loss.zero_radius
            )));
        }
        // Validates the kind (symmetric, Lipschitz) up front.
        a_x(&loss, 0.5)?;
        Ok(DistributionModel {
            kind: ModelKind::CounterexampleSymmetric { loss },
            marginal: Marginal::unit_box(1),
        })
    }

    pub fn counterexample_pinball(tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau < 1.0) {
            return Err(invalid(format!("τ must lie in (0,1), got {tau}")));
        }
        Ok(DistributionModel {
            kind: ModelKind::CounterexamplePinball { tau },
            marginal: Marginal::unit_box(1),
        })
    }

    pub fn homoscedastic(signal: Signal, noise: NoiseSpec, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(DistributionModel {
            kind: ModelKind::Homoscedastic { signal, noise },
            marginal: Marginal::unit_box(dim),
        })
    }

    pub fn heteroscedastic_cauchy(signal: Signal, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(DistributionModel {
            kind: ModelKind::HeteroscedasticCauchy { signal },
            marginal: Marginal::unit_box(dim),
        })
    }

    pub fn gaussian_control(signal: Signal, sigma: f64, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        NoiseSpec::gaussian(sigma)?;
        Ok(DistributionModel {
            kind: ModelKind::GaussianControl { signal, sigma },
            marginal: Marginal::unit_box(dim),
        })
    }

    pub fn point_mass(marginal: Marginal, y: f64) -> Result<Self> {
        check_dim(marginal.dim())?;
        Ok(DistributionModel {
            kind: ModelKind::PointMass { y },
            marginal,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.marginal.dim()
    }

    fn check_support(&self, x: &[f64]) -> Result<()> {
        if self.marginal.contains(x) {
            Ok(())
        } else {
            Err(Error::OutsideSupport(x.to_vec()))
        }
    }

    /// `P(·|x)`.
    pub fn conditional(&self, x: &[f64]) -> Result<Conditional> {
        self.check_support(x)?;
        Ok(self.conditional_unchecked(x))
    }

    fn conditional_unchecked(&self, x: &[f64]) -> Conditional {
        match &self.kind {
            ModelKind::CounterexampleSymmetric { loss } => {
                let x0 = x[0];
                let a = a_x(loss, x0).expect("loss validated at construction");
                let w = 0.5 * (1.0 - x0);
                Conditional::Mixture(Mixture {
                    uniforms: vec![UniformPiece { weight: x0, a: -1.0, b: 1.0 }],
                    atoms: vec![Atom { loc: -a, weight: w }, Atom { loc: a, weight: w }],
                })
            }
            ModelKind::CounterexamplePinball { tau } => {
                let (x0, tau) = (x[0], *tau);
                Conditional::Mixture(Mixture {
                    uniforms: vec![
                        UniformPiece { weight: x0 * tau, a: -1.0, b: 0.0 },
                        UniformPiece { weight: x0 * (1.0 - tau), a: 0.0, b: 1.0 },
                    ],
                    atoms: vec![
                        Atom { loc: -1.0 / x0, weight: (1.0 - x0) * tau },
                        Atom { loc: 1.0 / x0, weight: (1.0 - x0) * (1.0 - tau) },
                    ],
                })
            }
            ModelKind::Homoscedastic { signal, noise } => match *noise {
                NoiseSpec::Cauchy { location, scale } => Conditional::Cauchy {
                    loc: signal.eval(x) + location,
                    scale,
                },
                NoiseSpec::Gaussian { sigma } => Conditional::Normal {
                    mean: signal.eval(x),
                    sd: sigma,
                },
            },
            ModelKind::HeteroscedasticCauchy { signal } => {
                let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                Conditional::Cauchy {
                    loc: signal.eval(x) + r.cos(),
                    scale: 2.0 + r.sin(),
                }
            }
            ModelKind::GaussianControl { signal, sigma } => Conditional::Normal {
                mean: signal.eval(x),
                sd: *sigma,
            },
            ModelKind::PointMass { y } => Conditional::Mixture(Mixture {
                uniforms: Vec::new(),
                atoms: vec![Atom { loc: *y, weight: 1.0 }],
            }),
        }
    }

    pub fn conditional_cdf(&self, x: &[f64], t: f64) -> Result<f64> {
        Ok(self.conditional(x)?.cdf(t))
    }

    pub fn conditional_quantile(&self, x: &[f64], level: f64) -> Result<f64> {
        self.conditional(x)?.quantile(level)
    }

    pub fn atoms(&self, x: &[f64]) -> Result<Vec<Atom>> {
        Ok(match self.conditional(x)? {
            Conditional::Mixture(m) => m.atoms,
            _ => Vec::new(),
        })
    }

    /// Draws one `(x, y)` pair: marginal first, then the conditional.
    pub fn draw(&self, rng: &mut SimRng) -> (Vec<f64>, f64) {
        let x = self.marginal.sample(rng);
        let y = self.conditional_unchecked(&x).sample(rng);
        (x, y)
    }

    /// `n` i.i.d. draws; deterministic given `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Dataset> {
        if n == 0 {
            return Err(Error::EmptyInput("sample size must be at least 1"));
        }
        let mut rng = seed::rng(seed);
        let (xs, ys) = (0..n).map(|_| self.draw(&mut rng)).unzip();
        Dataset::new(xs, ys)
    }

    /// `∫∫ min{|y|, T}^p dP(y|x) dP_X(x)` and a divergence flag: the value is
    /// declared diverging when doubling `T` moves it by more than 1%.
    pub fn averaged_moment(&self, p: u32, truncation: f64) -> Result<MomentReport> {
        if p == 0 {
            return Err(invalid("moment order must be at least 1"));
        }
        if !(truncation > 0.0 && truncation.is_finite()) {
            return Err(invalid(format!("truncation must be positive, got {truncation}")));
        }
        let v = self.truncated_moment(p, truncation)?;
        let v2 = self.truncated_moment(p, 2.0 * truncation)?;
        let diverging = (v2 - v).abs() > 0.01 * v.abs();
        Ok(MomentReport {
            value: v,
            doubled: v2,
            truncation,
            diverging,
        })
    }

    fn truncated_moment(&self, p: u32, trunc: f64) -> Result<f64> {
        let x_independent = match &self.kind {
            ModelKind::Homoscedastic { signal, .. } | ModelKind::GaussianControl { signal, .. } => signal.is_constant(),
            ModelKind::PointMass { .. } => true,
            _ => false,
        };
        if let Marginal::Point(x) = &self.marginal {
            return self.conditional_unchecked(x).truncated_moment(p, trunc);
        }
        if x_independent {
            let x = self.marginal.grid(1).remove(0);
            return self.conditional_unchecked(&x).truncated_moment(p, trunc);
        }
        let Marginal::UniformBox { lower, upper } = &self.marginal else {
            unreachable!("point marginal handled above")
        };
        if lower.len() != 1 {
            return Err(Error::Unsupported(
                "averaged moments of x-dependent models are only computed for one-dimensional inputs".into(),
            ));
        }
        let (lo, hi) = (lower[0], upper[0]);
        let mut breaks = vec![1.0 / trunc];
        if let ModelKind::CounterexampleSymmetric { loss } = &self.kind {
            if let LossKind::Huber { delta } = loss.kind {
                breaks.push(delta);
            }
        }
        // Error propagation from nested quadrature is collected outside the closure.
        let inner_err = std::cell::Cell::new(None);
        let r = integrate(
            |x: f64| match self.conditional_unchecked(&[x]).truncated_moment(p, trunc) {
                Ok(v) => v,
                Err(e) => {
                    inner_err.set(Some(e.to_string()));
                    0.0
                }
            },
            lo,
            hi,
            &breaks,
            QuadOptions {
                abs_tol: 1e-10,
                rel_tol: 1e-11,
                max_intervals: 20_000,
            },
        )?;
        if let Some(msg) = inner_err.take() {
            return Err(Error::Unsupported(msg));
        }
        Ok(r.value / (hi - lo))
    }

    /// Checks the two-sided conditional mass condition around the conditional
    /// τ-quantile `q(x)` on a grid of inputs: both `(q − c₁, q)` and
    /// `(q, q + c₁)` need mass at least `c₂`, and `q` itself carries no atom.
    pub fn check_condition_ii(&self, tau: f64, params: &ConditionIIParams) -> Result<ConditionIIReport> {
        if !(params.c1 > 0.0 && params.c2 > 0.0) {
            return Err(invalid("condition (ii) needs c1, c2 > 0"));
        }
        if params.x_grid.is_empty() {
            return Err(Error::EmptyInput("condition (ii) grid is empty"));
        }
        let mut rows = Vec::with_capacity(params.x_grid.len());
        for x in &params.x_grid {
            let cond = self.conditional(x)?;
            let q = cond.quantile(tau)?;
            let left = cond.open_mass(q - params.c1, q);
            let right = cond.open_mass(q, q + params.c1);
            let atom = cond.atom_mass(q);
            let ok = left >= params.c2 && right >= params.c2 && atom <= params.probe_tolerance;
            rows.push(ConditionIIRow {
                x: x.clone(),
                quantile: q,
                left_mass: left,
                right_mass: right,
                atom_mass: atom,
                ok,
            });
        }
        let worst_mass = rows
            .iter()
            .map(|r| r.left_mass.min(r.right_mass))
            .fold(f64::INFINITY, f64::min);
        let atom_violations = rows
            .iter()
            .filter(|r| r.atom_mass > params.probe_tolerance)
            .map(|r| (r.x.clone(), r.atom_mass))
            .collect();
        Ok(ConditionIIReport {
            holds: rows.iter().all(|r| r.ok),
            worst_mass,
            atom_violations,
            rows,
        })
    }

    /// Conditional τ-quantile function.
    pub fn quantile_function(&self, tau: f64) -> Result<TargetFunction> {
        if !(tau > 0.0 && tau < 1.0) {
            return Err(invalid(format!("τ must lie in (0,1), got {tau}")));
        }
        Ok(TargetFunction {
            model: self.clone(),
            functional: Functional::Quantile(tau),
        })
    }

    /// The (known) risk minimizer of `loss` under this model.
    pub fn bayes_predictor(&self, loss: &LossSpec) -> Result<TargetFunction> {
        let functional = match loss.kind {
            LossKind::Pinball { tau } => Functional::Quantile(tau),
            LossKind::Absolute => Functional::Quantile(0.5),
            LossKind::LeastSquares => match self.kind {
                ModelKind::Homoscedastic {
                    noise: NoiseSpec::Cauchy { .. },
                    ..
                }
                | ModelKind::HeteroscedasticCauchy { .. } => {
                    return Err(Error::Unsupported("Cauchy noise has no conditional mean".into()))
                }
                _ => Functional::Mean,
            },
            LossKind::Huber { .. } | LossKind::EpsInsensitive { .. } => match self.kind {
                ModelKind::CounterexamplePinball { tau } if tau != 0.5 => {
                    return Err(Error::Unsupported(
                        "the asymmetric pinball counterexample has no closed-form minimizer for this loss".into(),
                    ))
                }
                _ => Functional::Quantile(0.5),
            },
        };
        Ok(TargetFunction {
            model: self.clone(),
            functional,
        })
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        Err(invalid("input dimension must be at least 1"))
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentReport {
    /// Value at the requested truncation.
    pub value: f64,
    /// Value at twice the truncation.
    pub doubled: f64,
    pub truncation: f64,
    pub diverging: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionIIParams {
    pub c1: f64,
    pub c2: f64,
    pub x_grid: Vec<Vec<f64>>,
    /// Atom masses at the quantile up to this size count as zero.
    pub probe_tolerance: f64,
}

impl ConditionIIParams {
    pub fn on_grid(model: &DistributionModel, c1: f64, c2: f64, grid_points: usize) -> Self {
        ConditionIIParams {
            c1,
            c2,
            x_grid: model.marginal.grid(grid_points),
            probe_tolerance: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionIIRow {
    pub x: Vec<f64>,
    pub quantile: f64,
    pub left_mass: f64,
    pub right_mass: f64,
    pub atom_mass: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionIIReport {
    pub holds: bool,
    /// Smallest one-sided mass over the grid.
    pub worst_mass: f64,
    pub atom_violations: Vec<(Vec<f64>, f64)>,
    pub rows: Vec<ConditionIIRow>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Functional {
    Quantile(f64),
    Mean,
}

/// A pointwise functional of the conditional law, usable as a predictor.
/// Evaluates to NaN outside the marginal's support.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetFunction {
    model: DistributionModel,
    functional: Functional,
}

impl TargetFunction {
    pub fn functional(&self) -> Functional {
        self.functional
    }
}

impl Predictor for TargetFunction {
    fn predict(&self, x: &[f64]) -> f64 {
        let Ok(cond) = self.model.conditional(x) else {
            return f64::NAN;
        };
        match self.functional {
            Functional::Quantile(tau) => cond.quantile(tau).unwrap_or(f64::NAN),
            Functional::Mean => cond.mean().unwrap_or(f64::NAN),
        }
    }
}

impl fmt::Display for DistributionModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ModelKind::CounterexampleSymmetric { loss } => write!(f, "cex-sym:{loss}"),
            ModelKind::CounterexamplePinball { tau } => write!(f, "cex-pin:{tau}"),
            ModelKind::Homoscedastic {
                noise: NoiseSpec::Cauchy { location, scale },
                ..
            } => write!(f, "homo-cauchy:{location},{scale}"),
            ModelKind::Homoscedastic {
                noise: NoiseSpec::Gaussian { sigma },
                ..
            }
            | ModelKind::GaussianControl { sigma, .. } => write!(f, "gauss:{sigma}"),
            ModelKind::HeteroscedasticCauchy { .. } => write!(f, "hetero-cauchy"),
            ModelKind::PointMass { y } => write!(f, "point:{y}"),
        }
    }
}

impl DistributionModel {
    /// Parses `cex-sym:<loss> | cex-pin:<τ> | homo-cauchy:<loc>,<scale> |
    /// hetero-cauchy | gauss:<σ> | point:<y>`. The signal and input dimension
    /// apply to the regression models; counterexamples live on `(0,1)`.
    pub fn parse(s: &str, signal: Signal, dim: usize) -> Result<Self> {
        let parse_err = || Error::Parse {
            what: "model",
            input: s.to_string(),
        };
        let num = |v: &str| v.trim().parse::<f64>().map_err(|_| parse_err());
        let (name, arg) = match s.trim().split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s.trim(), None),
        };
        match (name, arg) {
            ("cex-sym", Some(l)) => Self::counterexample_symmetric(l.parse()?),
            ("cex-pin", Some(t)) => Self::counterexample_pinball(num(t)?),
            ("homo-cauchy", Some(a)) => {
                let (loc, scale) = a.split_once(',').ok_or_else(parse_err)?;
                Self::homoscedastic(signal, NoiseSpec::cauchy(num(loc)?, num(scale)?)?, dim)
            }
            ("hetero-cauchy", None) => Self::heteroscedastic_cauchy(signal, dim),
            ("gauss", Some(sg)) => Self::gaussian_control(signal, num(sg)?, dim),
            ("point", Some(y)) => Self::point_mass(Marginal::unit_box(dim), num(y)?),
            _ => Err(parse_err()),
        }
    }
}

impl FromStr for DistributionModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s, Signal::Sine, 1)
    }
}
