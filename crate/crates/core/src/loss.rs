//! Convex distance-based losses `L(y, t) = ψ(y − t)` and their shifted
//! versions `L*(y, t) = L(y, t) − L(y, 0)`.
//!
//! Every [`LossSpec`] carries the analytic metadata the rest of the crate
//! relies on: growth type and envelope constants, Lipschitz constant, the
//! radius of the zero set of ψ, and the right-slope function
//! `z(r) = sup ∂ψ(r)` together with its limit `c̃ = lim z(r)`.

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};

/// The shipped loss families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossKind {
    LeastSquares,
    Pinball { tau: f64 },
    Absolute,
    Huber { delta: f64 },
    EpsInsensitive { eps: f64 },
}

/// A distance-based loss together with its growth and slope metadata.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossSpec {
    pub kind: LossKind,
    /// Growth type `p`: `c_lower·|r|^p − 1 ≤ ψ(r) ≤ c_upper·(|r|^p + 1)`.
    pub growth_type: u32,
    pub c_upper: f64,
    pub c_lower: f64,
    /// `|L|₁`; `None` when ψ grows faster than linearly.
    pub lipschitz: Option<f64>,
    /// `c₀ = sup{r ≥ 0 : ψ(r) = 0}`.
    pub zero_radius: f64,
    pub symmetric: bool,
    pub convex: bool,
}

/// A closed interval `[lo, hi]`, used for subdifferentials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn point(v: f64) -> Self {
        Interval { lo: v, hi: v }
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.lo, self.hi)
    }

    fn negated(self) -> Self {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }
}

impl LossSpec {
    pub fn least_squares() -> Self {
        LossSpec {
            kind: LossKind::LeastSquares,
            growth_type: 2,
            c_upper: 1.0,
            c_lower: 1.0,
            lipschitz: None,
            zero_radius: 0.0,
            symmetric: true,
            convex: true,
        }
    }

    pub fn pinball(tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau < 1.0) {
            return Err(invalid(format!("pinball level τ must lie in (0,1), got {tau}")));
        }
        Ok(LossSpec {
            kind: LossKind::Pinball { tau },
            growth_type: 1,
            c_upper: 1.0,
            c_lower: tau.min(1.0 - tau),
            lipschitz: Some(tau.max(1.0 - tau)),
            zero_radius: 0.0,
            symmetric: tau == 0.5,
            convex: true,
        })
    }

    pub fn absolute() -> Self {
        LossSpec {
            kind: LossKind::Absolute,
            growth_type: 1,
            c_upper: 1.0,
            c_lower: 1.0,
            lipschitz: Some(1.0),
            zero_radius: 0.0,
            symmetric: true,
            convex: true,
        }
    }

    /// Huber loss `r²/2` for `|r| ≤ δ`, `δ|r| − δ²/2` beyond.
    pub fn huber(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(invalid(format!("huber δ must be positive, got {delta}")));
        }
        Ok(LossSpec {
            kind: LossKind::Huber { delta },
            growth_type: 1,
            c_upper: delta,
            // r²/2 ≥ √2|r| − 1 everywhere, and the linear branch keeps slope δ.
            c_lower: delta.min(std::f64::consts::SQRT_2),
            lipschitz: Some(delta),
            zero_radius: 0.0,
            symmetric: true,
            convex: true,
        })
    }

    /// ε-insensitive loss `max{|r| − ε, 0}`.
    pub fn eps_insensitive(eps: f64) -> Result<Self> {
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(invalid(format!("ε must be non-negative, got {eps}")));
        }
        Ok(LossSpec {
            kind: LossKind::EpsInsensitive { eps },
            growth_type: 1,
            c_upper: 1.0,
            c_lower: if eps <= 1.0 { 1.0 } else { 1.0 / eps },
            lipschitz: Some(1.0),
            zero_radius: eps,
            symmetric: true,
            convex: true,
        })
    }

    /// Overrides the growth envelope constants. Mostly useful for building
    /// deliberately wrong specs that [`LossSpec::growth_audit`] must reject.
    pub fn with_growth_constants(mut self, c_upper: f64, c_lower: f64) -> Self {
        self.c_upper = c_upper;
        self.c_lower = c_lower;
        self
    }

    /// The representing function ψ.
    #[inline]
    pub fn psi(&self, r: f64) -> f64 {
        match self.kind {
            LossKind::LeastSquares => r * r,
            LossKind::Pinball { tau } => {
                if r > 0.0 {
                    tau * r
                } else {
                    (1.0 - tau) * (-r)
                }
            }
            LossKind::Absolute => r.abs(),
            LossKind::Huber { delta } => {
                let a = r.abs();
                if a <= delta {
                    0.5 * r * r
                } else {
                    delta * a - 0.5 * delta * delta
                }
            }
            LossKind::EpsInsensitive { eps } => (r.abs() - eps).max(0.0),
        }
    }

    /// `L(y, t) = ψ(y − t)`.
    #[inline]
    pub fn eval(&self, y: f64, t: f64) -> f64 {
        match self.kind {
            // Written in the (y, t) form so that y ≥ t takes the τ branch.
            LossKind::Pinball { tau } => {
                if y < t {
                    (1.0 - tau) * (t - y)
                } else {
                    tau * (y - t)
                }
            }
            _ => self.psi(y - t),
        }
    }

    /// `L*(y, t) = L(y, t) − L(y, 0)`, evaluated literally.
    #[inline]
    pub fn shift_eval(&self, y: f64, t: f64) -> f64 {
        self.eval(y, t) - self.eval(y, 0.0)
    }

    /// The shifted loss through per-kind closed forms that avoid the
    /// cancellation in `L(y,t) − L(y,0)` when `|y| ≫ |t|`.
    ///
    /// Agrees with [`LossSpec::shift_eval`] up to rounding; for the pinball
    /// loss it is exactly [`pinball_shift`].
    pub fn shift_eval_stable(&self, y: f64, t: f64) -> f64 {
        match self.kind {
            LossKind::LeastSquares => t * (t - 2.0 * y),
            LossKind::Pinball { tau } => pinball_shift(tau, y, t),
            LossKind::Absolute => linear_tail_shift(1.0, 0.0, y, t).unwrap_or_else(|| self.shift_eval(y, t)),
            LossKind::Huber { delta } => {
                linear_tail_shift(delta, delta, y, t).unwrap_or_else(|| self.shift_eval(y, t))
            }
            LossKind::EpsInsensitive { eps } => {
                linear_tail_shift(1.0, eps, y, t).unwrap_or_else(|| self.shift_eval(y, t))
            }
        }
    }

    /// Subdifferential of ψ at `r`.
    pub fn psi_subdifferential(&self, r: f64) -> Interval {
        match self.kind {
            LossKind::LeastSquares => Interval::point(2.0 * r),
            LossKind::Pinball { tau } => {
                if r > 0.0 {
                    Interval::point(tau)
                } else if r < 0.0 {
                    Interval::point(tau - 1.0)
                } else {
                    Interval { lo: tau - 1.0, hi: tau }
                }
            }
            LossKind::Absolute => {
                if r > 0.0 {
                    Interval::point(1.0)
                } else if r < 0.0 {
                    Interval::point(-1.0)
                } else {
                    Interval { lo: -1.0, hi: 1.0 }
                }
            }
            LossKind::Huber { delta } => Interval::point(r.clamp(-delta, delta)),
            LossKind::EpsInsensitive { eps } => {
                let a = r.abs();
                if a < eps {
                    Interval::point(0.0)
                } else if a > eps {
                    Interval::point(r.signum())
                } else if eps == 0.0 {
                    Interval { lo: -1.0, hi: 1.0 }
                } else if r > 0.0 {
                    Interval { lo: 0.0, hi: 1.0 }
                } else {
                    Interval { lo: -1.0, hi: 0.0 }
                }
            }
        }
    }

    /// Subdifferential of `t ↦ ψ(y − t)` at `t`.
    pub fn subgradient(&self, y: f64, t: f64) -> Interval {
        self.psi_subdifferential(y - t).negated()
    }

    /// `z(r) = sup ∂ψ(r)` for `r ≥ 0`.
    pub fn slope_sup(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return Err(invalid(format!("slope_sup needs r ≥ 0, got {r}")));
        }
        Ok(self.psi_subdifferential(r).hi)
    }

    /// `c̃ = lim_{r→∞} z(r)`, the asymptotic slope of ψ.
    pub fn asymptotic_slope(&self) -> Result<f64> {
        match self.kind {
            LossKind::LeastSquares => Err(Error::Unsupported(
                "least-squares has unbounded slope and no Lipschitz constant".into(),
            )),
            LossKind::Pinball { tau } => Ok(tau),
            LossKind::Absolute => Ok(1.0),
            LossKind::Huber { delta } => Ok(delta),
            LossKind::EpsInsensitive { .. } => Ok(1.0),
        }
    }

    /// `Ψ(r) = ∫₀ʳ ψ(u) du`, so that `∫_a^b ψ(y − t) dy = Ψ(b − t) − Ψ(a − t)`.
    pub fn psi_antiderivative(&self, r: f64) -> f64 {
        match self.kind {
            LossKind::LeastSquares => r * r * r / 3.0,
            LossKind::Pinball { tau } => {
                if r >= 0.0 {
                    0.5 * tau * r * r
                } else {
                    -0.5 * (1.0 - tau) * r * r
                }
            }
            LossKind::Absolute => 0.5 * r * r.abs(),
            LossKind::Huber { delta } => {
                let a = r.abs();
                let v = if a <= delta {
                    a * a * a / 6.0
                } else {
                    let d = a - delta;
                    delta * delta * delta / 6.0 + 0.5 * delta * delta * d + 0.5 * delta * d * d
                };
                v.copysign(r)
            }
            LossKind::EpsInsensitive { eps } => {
                let d = (r.abs() - eps).max(0.0);
                (0.5 * d * d).copysign(r)
            }
        }
    }

    /// Convex conjugate `ψ*(s) = sup_r s·r − ψ(r)`; `+∞` outside its domain.
    pub fn conjugate(&self, s: f64) -> f64 {
        let dom = self.conjugate_domain();
        if !dom.contains(s) {
            return f64::INFINITY;
        }
        match self.kind {
            LossKind::LeastSquares => 0.25 * s * s,
            LossKind::Pinball { .. } | LossKind::Absolute => 0.0,
            LossKind::Huber { .. } => 0.5 * s * s,
            LossKind::EpsInsensitive { eps } => eps * s.abs(),
        }
    }

    /// Closure of the domain of ψ*.
    pub fn conjugate_domain(&self) -> Interval {
        match self.kind {
            LossKind::LeastSquares => Interval {
                lo: f64::NEG_INFINITY,
                hi: f64::INFINITY,
            },
            LossKind::Pinball { tau } => Interval { lo: tau - 1.0, hi: tau },
            LossKind::Absolute | LossKind::EpsInsensitive { .. } => Interval { lo: -1.0, hi: 1.0 },
            LossKind::Huber { delta } => Interval {
                lo: -delta,
                hi: delta,
            },
        }
    }

    /// `argmax_s { s·c − q·s²/2 − ψ*(s) }` for `q ≥ 0`; the coordinate step of
    /// the dual solver.
    pub(crate) fn conjugate_prox(&self, c: f64, q: f64) -> f64 {
        let dom = self.conjugate_domain();
        let unconstrained = |c: f64, q: f64| {
            if q > 0.0 {
                c / q
            } else if c > 0.0 {
                f64::INFINITY
            } else if c < 0.0 {
                f64::NEG_INFINITY
            } else {
                0.0
            }
        };
        match self.kind {
            LossKind::LeastSquares => c / (q + 0.5),
            LossKind::Pinball { .. } | LossKind::Absolute => dom.clamp(unconstrained(c, q)),
            LossKind::Huber { .. } => dom.clamp(c / (q + 1.0)),
            LossKind::EpsInsensitive { eps } => {
                let soft = c.signum() * (c.abs() - eps).max(0.0);
                dom.clamp(unconstrained(soft, q))
            }
        }
    }

    /// Audits the loss metadata on an even grid over `[−radius, radius]`.
    pub fn growth_audit(&self, radius: f64, points: usize) -> Result<GrowthAudit> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(invalid(format!("grid radius must be positive, got {radius}")));
        }
        if points < 3 {
            return Err(invalid("growth audit needs at least 3 grid points"));
        }
        let grid: Vec<f64> = (0..points)
            .map(|i| -radius + 2.0 * radius * i as f64 / (points - 1) as f64)
            .collect();
        let psi: Vec<f64> = grid.iter().map(|&r| self.psi(r)).collect();
        let p = self.growth_type as i32;
        // Relative slack for rounding in the envelope comparisons.
        let slack = |v: f64| 1e-12 * (1.0 + v.abs());

        let mut checks = Vec::new();

        let zero = self.psi(0.0);
        checks.push(PropertyCheck::from_violation("psi_zero_at_origin", (zero != 0.0).then_some(0.0)));

        let upper = grid.iter().zip(&psi).find(|&(&r, &v)| {
            let bound = self.c_upper * (r.abs().powi(p) + 1.0);
            v > bound + slack(bound)
        });
        checks.push(PropertyCheck::from_violation("upper_growth", upper.map(|(&r, _)| r)));

        let lower = grid.iter().zip(&psi).find(|&(&r, &v)| {
            let bound = self.c_lower * r.abs().powi(p) - 1.0;
            v < bound - slack(bound)
        });
        checks.push(PropertyCheck::from_violation("lower_growth", lower.map(|(&r, _)| r)));

        let convex = (1..points - 1).find(|&i| {
            let chord = 0.5 * (psi[i - 1] + psi[i + 1]);
            psi[i] > chord + slack(chord)
        });
        checks.push(PropertyCheck::from_violation("midpoint_convexity", convex.map(|i| grid[i])));

        let asym = grid
            .iter()
            .find(|&&r| {
                let (a, b) = (self.psi(r), self.psi(-r));
                (a - b).abs() > slack(a.max(b))
            })
            .copied();
        let symmetry_violation = match (self.symmetric, asym) {
            (true, Some(r)) => Some(r),
            // Declared asymmetric but no asymmetry found anywhere on the grid.
            (false, None) => Some(radius),
            _ => None,
        };
        checks.push(PropertyCheck::from_violation("symmetry_flag", symmetry_violation));

        if let Some(lip) = self.lipschitz {
            let v = (1..points).find(|&i| {
                let dr = grid[i] - grid[i - 1];
                let dpsi = (psi[i] - psi[i - 1]).abs();
                dpsi > lip * dr + slack(psi[i].abs().max(psi[i - 1].abs()))
            });
            checks.push(PropertyCheck::from_violation("lipschitz", v.map(|i| grid[i])));
        }

        let c0 = self.zero_radius;
        let zr = grid.iter().zip(&psi).find(|&(&r, &v)| {
            if r.abs() <= c0 {
                v != 0.0
            } else {
                v <= 0.0
            }
        });
        checks.push(PropertyCheck::from_violation("zero_radius", zr.map(|(&r, _)| r)));

        Ok(GrowthAudit {
            loss: *self,
            radius,
            points,
            checks,
        })
    }
}

/// Shifted pinball loss through its four-branch closed form.
#[inline]
pub fn pinball_shift(tau: f64, y: f64, t: f64) -> f64 {
    if y < 0.0_f64.min(t) {
        (1.0 - tau) * t
    } else if 0.0 <= y && y < t {
        (1.0 - tau) * t - y
    } else if t <= y && y < 0.0 {
        y - tau * t
    } else {
        -tau * t
    }
}

/// For symmetric losses that are linear with slope `slope` beyond radius
/// `knee`, `ψ(y − t) − ψ(y)` is exactly `∓slope·t` when both residuals lie
/// in the same linear tail.
#[inline]
fn linear_tail_shift(slope: f64, knee: f64, y: f64, t: f64) -> Option<f64> {
    let r = y - t;
    if y >= knee && r >= knee {
        Some(-slope * t)
    } else if y <= -knee && r <= -knee {
        Some(slope * t)
    } else {
        None
    }
}

/// One audited property.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyCheck {
    pub name: &'static str,
    pub passed: bool,
    /// First grid point (in increasing order) where the property fails.
    pub first_violation: Option<f64>,
}

impl PropertyCheck {
    fn from_violation(name: &'static str, violation: Option<f64>) -> Self {
        PropertyCheck {
            name,
            passed: violation.is_none(),
            first_violation: violation,
        }
    }
}

/// Result of [`LossSpec::growth_audit`].
#[derive(Debug, Clone)]
pub struct GrowthAudit {
    pub loss: LossSpec,
    pub radius: f64,
    pub points: usize,
    pub checks: Vec<PropertyCheck>,
}

impl GrowthAudit {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&PropertyCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for LossSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            LossKind::LeastSquares => write!(f, "least-squares"),
            LossKind::Pinball { tau } => write!(f, "pinball:{tau}"),
            LossKind::Absolute => write!(f, "absolute"),
            LossKind::Huber { delta } => write!(f, "huber:{delta}"),
            LossKind::EpsInsensitive { eps } => write!(f, "eps:{eps}"),
        }
    }
}

impl FromStr for LossSpec {
    type Err = Error;

    /// Parses `least-squares | pinball:<τ> | absolute | huber:<δ> | eps:<ε>`.
    fn from_str(s: &str) -> Result<Self> {
        let parse_err = || Error::Parse {
            what: "loss",
            input: s.to_string(),
        };
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let num = |a: Option<&str>| -> Result<f64> { a.ok_or_else(parse_err)?.trim().parse().map_err(|_| parse_err()) };
        match name.trim() {
            "least-squares" if arg.is_none() => Ok(Self::least_squares()),
            "absolute" if arg.is_none() => Ok(Self::absolute()),
            "pinball" => Self::pinball(num(arg)?),
            "huber" => Self::huber(num(arg)?),
            "eps" => Self::eps_insensitive(num(arg)?),
            _ => Err(parse_err()),
        }
    }
}
