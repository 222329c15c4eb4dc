//! Regularized empirical risk minimization in an RKHS:
//!
//! ```text
//! f = Σ αᵢ k(·, xᵢ),   minimize  (1/n) Σ ψ(yᵢ − f(xᵢ)) + λ αᵀKα
//! ```
//!
//! Least squares is solved directly through `(K + nλI)α = y`. The other
//! losses are solved by randomized coordinate ascent on the dual
//!
//! ```text
//! D(s) = (1/n) Σ [sᵢ yᵢ − ψ*(sᵢ)] − sᵀKs / (4n²λ),    α = s / (2nλ),
//! ```
//!
//! which stops once the duality gap `P(α) − D(s)` drops below the tolerance,
//! so the reported objective is certified to be within `tol` of the minimum.
//! An averaged subgradient method is kept as an independent cross-check.

use std::io::{BufRead, Write};
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;

use crate::csv::fmt_f64;
use crate::data::Dataset;
use crate::distributions::DistributionModel;
use crate::error::{invalid, Error, Result};
use crate::kernel::KernelSpec;
use crate::loss::{LossKind, LossSpec};
use crate::predictor::Predictor;
use crate::risk::{mc_lp_distance, RiskEstimate};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Solver {
    /// Randomized dual coordinate ascent with a duality-gap stopping rule.
    #[default]
    DualCoordinate,
    /// Averaged subgradient descent in function space, step `η₀/√t`.
    Subgradient,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    /// Sweeps over the data (dual solver) or steps (subgradient solver).
    pub max_iters: usize,
    /// Target duality gap.
    pub tol: f64,
    /// Seeds the coordinate order.
    pub seed: u64,
    pub solver: Solver,
    /// Starting coefficients; ignored by the direct least-squares solve.
    pub init: Option<Vec<f64>>,
    /// Report the objective of the shifted loss `L*` instead of `L`.
    pub shifted: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iters: 200_000,
            tol: 1e-6,
            seed: 0,
            solver: Solver::DualCoordinate,
            init: None,
            shifted: false,
        }
    }
}

/// A fitted kernel expansion.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub support_points: Vec<Vec<f64>>,
    pub alpha: Vec<f64>,
    pub kernel: KernelSpec,
    pub lambda: f64,
    pub objective_value: f64,
    pub iterations: usize,
    /// Certified upper bound on `objective_value − min`.
    pub duality_gap: f64,
    /// RKHS norm of the subgradient of the objective closest to zero along
    /// the current dual certificate.
    pub stationarity: f64,
    pub shifted: bool,
}

impl SvmModel {
    /// `Σ αᵢ k(x, xᵢ)`.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        self.kernel.check_dim(x)?;
        Ok(self.eval(x))
    }

    fn eval(&self, x: &[f64]) -> f64 {
        self.support_points
            .iter()
            .zip(&self.alpha)
            .filter(|(_, &a)| a != 0.0)
            .map(|(p, &a)| a * self.kernel.eval_unchecked(x, p))
            .sum()
    }

    /// `√(αᵀKα)`.
    pub fn rkhs_norm(&self) -> Result<f64> {
        if self.alpha.iter().all(|&a| a == 0.0) {
            return Ok(0.0);
        }
        let k = self.kernel.gram(&self.support_points)?;
        let a = DVector::from_column_slice(&self.alpha);
        Ok(a.dot(&(&k * &a)).max(0.0).sqrt())
    }

    /// Writes a header line `kernel=…,lambda=…,…`, then `x_0,…,alpha` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "kernel={},lambda={},objective={},iterations={},duality_gap={},stationarity={},shifted={}",
            self.kernel,
            fmt_f64(self.lambda),
            fmt_f64(self.objective_value),
            self.iterations,
            fmt_f64(self.duality_gap),
            fmt_f64(self.stationarity),
            self.shifted
        )?;
        let mut cols: Vec<String> = (0..self.kernel.input_dim).map(|j| format!("x_{j}")).collect();
        cols.push("alpha".into());
        writeln!(w, "{}", cols.join(","))?;
        for (p, a) in self.support_points.iter().zip(&self.alpha) {
            let mut fields: Vec<String> = p.iter().map(|&v| fmt_f64(v)).collect();
            fields.push(fmt_f64(*a));
            writeln!(w, "{}", fields.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let meta = lines.next().ok_or(Error::EmptyInput("model csv is empty"))??;
        let bad = |what: &'static str, s: &str| Error::Parse {
            what,
            input: s.to_string(),
        };
        let field = |key: &str| -> Result<String> {
            meta.split(',')
                .find_map(|kv| kv.strip_prefix(key).and_then(|v| v.strip_prefix('=')))
                .map(str::to_string)
                .ok_or_else(|| bad("model header", &meta))
        };
        let num = |key: &str| -> Result<f64> {
            let v = field(key)?;
            v.parse().map_err(|_| bad("model header", &meta))
        };
        let header = lines.next().ok_or(Error::EmptyInput("model csv has no column header"))??;
        let dim = header.split(',').count().saturating_sub(1);
        let kernel: KernelSpec = field("kernel")?.parse()?;
        let kernel = kernel.with_dim(dim)?;
        let mut support_points = Vec::new();
        let mut alpha = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let vals: Vec<f64> = line
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad("model row", &line))?;
            if vals.len() != dim + 1 {
                return Err(bad("model row", &line));
            }
            alpha.push(vals[dim]);
            support_points.push(vals[..dim].to_vec());
        }
        Ok(SvmModel {
            support_points,
            alpha,
            kernel,
            lambda: num("lambda")?,
            objective_value: num("objective")?,
            iterations: field("iterations")?.parse().map_err(|_| bad("model header", &meta))?,
            duality_gap: num("duality_gap")?,
            stationarity: num("stationarity")?,
            shifted: field("shifted")?.parse().map_err(|_| bad("model header", &meta))?,
        })
    }
}

impl Predictor for SvmModel {
    fn predict(&self, x: &[f64]) -> f64 {
        self.eval(x)
    }
}

/// `√(R_emp(0)/λ)` with `R_emp(0) = (1/n) Σ L(yᵢ, 0)`: every minimizer has at
/// most this RKHS norm.
pub fn norm_bound(loss: &LossSpec, ds: &Dataset, lambda: f64) -> Result<f64> {
    if ds.is_empty() {
        return Err(Error::EmptyInput("dataset is empty"));
    }
    if !(lambda > 0.0) {
        return Err(invalid(format!("λ must be positive, got {lambda}")));
    }
    let r0 = ds.ys.iter().map(|&y| loss.eval(y, 0.0)).sum::<f64>() / ds.len() as f64;
    Ok((r0 / lambda).sqrt())
}

/// Objective of the expansion `α` recomputed from scratch.
pub fn objective(loss: &LossSpec, ds: &Dataset, kernel: &KernelSpec, alpha: &[f64], lambda: f64, shifted: bool) -> Result<f64> {
    if alpha.len() != ds.len() {
        return Err(Error::DimensionMismatch {
            expected: ds.len(),
            found: alpha.len(),
        });
    }
    let k = kernel.gram(&ds.xs)?;
    let a = DVector::from_column_slice(alpha);
    let f = &k * &a;
    Ok(primal(loss, &ds.ys, f.as_slice(), a.as_slice(), lambda, shifted))
}

fn primal(loss: &LossSpec, y: &[f64], f: &[f64], alpha: &[f64], lambda: f64, shifted: bool) -> f64 {
    let n = y.len() as f64;
    let emp: f64 = if shifted {
        y.iter().zip(f).map(|(&y, &t)| loss.shift_eval_stable(y, t)).sum()
    } else {
        y.iter().zip(f).map(|(&y, &t)| loss.eval(y, t)).sum()
    };
    let quad: f64 = alpha.iter().zip(f).map(|(a, b)| a * b).sum();
    emp / n + lambda * quad.max(0.0)
}

/// `P(α) − D(s)` for the plain loss; `f = Ks/(2nλ)`.
fn duality_gap(loss: &LossSpec, y: &[f64], f: &[f64], s: &[f64]) -> f64 {
    let n = y.len() as f64;
    y.iter()
        .zip(f)
        .zip(s)
        .map(|((&y, &f), &s)| {
            let r = y - f;
            loss.psi(r) + loss.conjugate(s) - s * r
        })
        .sum::<f64>()
        / n
}

fn matvec(k: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    (k * DVector::from_column_slice(v)).as_slice().to_vec()
}

fn stationarity(loss: &LossSpec, k: &DMatrix<f64>, y: &[f64], f: &[f64], s: &[f64]) -> f64 {
    let n = y.len() as f64;
    let v: Vec<f64> = y
        .iter()
        .zip(f)
        .zip(s)
        .map(|((&y, &f), &s)| {
            let r = y - f;
            // Residuals at rounding level count as interpolated points.
            let r = if r.abs() <= 1e-12 * (1.0 + y.abs()) { 0.0 } else { r };
            (s - loss.psi_subdifferential(r).clamp(s)) / n
        })
        .collect();
    if v.iter().all(|&x| x == 0.0) {
        return 0.0;
    }
    let kv = matvec(k, &v);
    v.iter().zip(&kv).map(|(a, b)| a * b).sum::<f64>().max(0.0).sqrt()
}

/// Fits the kernel expansion on `ds`.
pub fn fit(ds: &Dataset, loss: &LossSpec, kernel: &KernelSpec, lambda: f64, opts: &FitOptions) -> Result<SvmModel> {
    if ds.is_empty() {
        return Err(Error::EmptyInput("dataset is empty"));
    }
    if ds.dim() != kernel.input_dim {
        return Err(Error::DimensionMismatch {
            expected: kernel.input_dim,
            found: ds.dim(),
        });
    }
    let k = kernel.gram(&ds.xs)?;
    fit_with_gram(ds, &k, loss, kernel, lambda, opts)
}

/// As [`fit`] with a precomputed Gram matrix of `ds.xs`.
pub fn fit_with_gram(
    ds: &Dataset,
    k: &DMatrix<f64>,
    loss: &LossSpec,
    kernel: &KernelSpec,
    lambda: f64,
    opts: &FitOptions,
) -> Result<SvmModel> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(invalid(format!("λ must be positive, got {lambda}")));
    }
    if !loss.convex {
        return Err(Error::Unsupported(format!("{loss} is not convex")));
    }
    if !(opts.tol > 0.0) {
        return Err(invalid("tolerance must be positive"));
    }
    let n = ds.len();
    if k.nrows() != n || k.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: k.nrows(),
        });
    }
    if let Some(init) = &opts.init {
        if init.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: init.len(),
            });
        }
    }
    let (alpha, iterations) = match (loss.kind, opts.solver) {
        (LossKind::LeastSquares, _) => (least_squares(k, &ds.ys, lambda)?, 1),
        (_, Solver::DualCoordinate) => dual_coordinate(k, &ds.ys, loss, lambda, opts)?,
        (_, Solver::Subgradient) => subgradient(k, &ds.ys, loss, lambda, opts),
    };
    finish(ds, k, loss, kernel, lambda, opts, alpha, iterations)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    ds: &Dataset,
    k: &DMatrix<f64>,
    loss: &LossSpec,
    kernel: &KernelSpec,
    lambda: f64,
    opts: &FitOptions,
    mut alpha: Vec<f64>,
    iterations: usize,
) -> Result<SvmModel> {
    let n = ds.len();
    let y = &ds.ys;
    let scale = 2.0 * n as f64 * lambda;
    let mut f = matvec(k, &alpha);
    let dom = loss.conjugate_domain();
    let s: Vec<f64> = alpha.iter().map(|&a| dom.clamp(scale * a)).collect();
    let f_dual = matvec(k, &s.iter().map(|v| v / scale).collect::<Vec<_>>());
    let p = primal(loss, y, &f, &alpha, lambda, false);
    let p_dual = primal(loss, y, &f_dual, &s.iter().map(|v| v / scale).collect::<Vec<_>>(), lambda, false);
    let dual_value = p_dual - duality_gap(loss, y, &f_dual, &s);
    let p_zero = primal(loss, y, &vec![0.0; n], &vec![0.0; n], lambda, false);
    let mut gap = p - dual_value;
    // Keep the zero function when it is at least as good.
    if p_zero < p {
        alpha.iter_mut().for_each(|a| *a = 0.0);
        f.iter_mut().for_each(|v| *v = 0.0);
        gap = p_zero - dual_value;
    }
    let gap = gap.max(0.0);
    let converged = gap <= opts.tol;
    let s_now: Vec<f64> = alpha.iter().map(|&a| scale * a).collect();
    let stat = stationarity(loss, k, y, &f, &s_now);
    if !converged {
        return Err(Error::NonConvergence {
            iterations,
            gap,
            stationarity: stat,
        });
    }
    Ok(SvmModel {
        support_points: ds.xs.clone(),
        objective_value: primal(loss, y, &f, &alpha, lambda, opts.shifted),
        alpha,
        kernel: *kernel,
        lambda,
        iterations,
        duality_gap: gap,
        stationarity: stat,
        shifted: opts.shifted,
    })
}

fn least_squares(k: &DMatrix<f64>, y: &[f64], lambda: f64) -> Result<Vec<f64>> {
    let n = y.len();
    let mut a = k.clone();
    for i in 0..n {
        a[(i, i)] += n as f64 * lambda;
    }
    let rhs = DVector::from_column_slice(y);
    let sol = match a.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => a
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Unsupported("regularized Gram system is singular".into()))?,
    };
    Ok(sol.as_slice().to_vec())
}

/// Sweeps between exact recomputations of `f = Ks/(2nλ)`.
const REFRESH_EVERY: usize = 25;

fn dual_coordinate(
    k: &DMatrix<f64>,
    y: &[f64],
    loss: &LossSpec,
    lambda: f64,
    opts: &FitOptions,
) -> Result<(Vec<f64>, usize)> {
    let n = y.len();
    let scale = 2.0 * n as f64 * lambda;
    let dom = loss.conjugate_domain();
    let mut s: Vec<f64> = match &opts.init {
        Some(a) => a.iter().map(|&v| dom.clamp(scale * v)).collect(),
        None => vec![0.0; n],
    };
    let refresh = |s: &[f64]| -> Vec<f64> { matvec(k, &s.iter().map(|v| v / scale).collect::<Vec<_>>()) };
    let mut f = refresh(&s);
    let kd = k.as_slice();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = seed::rng(opts.seed);
    let mut sweeps = 0;
    while sweeps < opts.max_iters {
        sweeps += 1;
        order.shuffle(&mut rng);
        for &i in &order {
            let kii = kd[i * n + i];
            let q = kii / scale;
            let c = y[i] - f[i] + q * s[i];
            let new = loss.conjugate_prox(c, q);
            let d = new - s[i];
            if d != 0.0 && d.is_finite() {
                s[i] = new;
                let step = d / scale;
                let col = &kd[i * n..(i + 1) * n];
                for (fj, kj) in f.iter_mut().zip(col) {
                    *fj += step * kj;
                }
            }
        }
        if sweeps % REFRESH_EVERY == 0 {
            f = refresh(&s);
        }
        if duality_gap(loss, y, &f, &s) <= opts.tol {
            // Confirm on a drift-free f before stopping.
            f = refresh(&s);
            if duality_gap(loss, y, &f, &s) <= opts.tol {
                break;
            }
        }
    }
    Ok((s.iter().map(|v| v / scale).collect(), sweeps))
}

/// Largest eigenvalue of a PSD matrix by power iteration.
fn op_norm(k: &DMatrix<f64>) -> f64 {
    let n = k.nrows();
    let mut v = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut est = 0.0;
    for _ in 0..100 {
        let w = k * &v;
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        v = w / norm;
        if (norm - est).abs() <= 1e-12 * norm {
            return norm;
        }
        est = norm;
    }
    est
}

fn subgradient(k: &DMatrix<f64>, y: &[f64], loss: &LossSpec, lambda: f64, opts: &FitOptions) -> (Vec<f64>, usize) {
    let n = y.len();
    let nf = n as f64;
    let eta0 = 1.0 / (2.0 * lambda + op_norm(k) / nf);
    let mut alpha = opts.init.clone().unwrap_or_else(|| vec![0.0; n]);
    let mut avg = alpha.clone();
    let mut best = alpha.clone();
    let mut best_obj = f64::INFINITY;
    let mut t = 0;
    while t < opts.max_iters {
        t += 1;
        let f = matvec(k, &alpha);
        let obj = primal(loss, y, &f, &alpha, lambda, false);
        if obj < best_obj {
            best_obj = obj;
            best.clone_from(&alpha);
        }
        let eta = eta0 / (t as f64).sqrt();
        for i in 0..n {
            let u = loss.psi_subdifferential(y[i] - f[i]).midpoint();
            alpha[i] -= eta * (2.0 * lambda * alpha[i] - u / nf);
        }
        let w = 1.0 / (t as f64 + 1.0);
        for (a, &b) in avg.iter_mut().zip(&alpha) {
            *a += w * (b - *a);
        }
    }
    let f = matvec(k, &avg);
    if primal(loss, y, &f, &avg, lambda, false) < best_obj {
        best = avg;
    }
    (best, t)
}

/// `λ_n = c · n^{−β}` with the exponent `p*` of the loss it is paired with.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    pub c: f64,
    pub beta: f64,
    pub p_star: u32,
}

/// `p* = max{p + 1, p(p + 1)/2}`.
pub fn p_star(p: u32) -> u32 {
    (p + 1).max(p * (p + 1) / 2)
}

impl Schedule {
    pub fn new(c: f64, beta: f64, p_star: u32) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(invalid(format!("schedule constant must be positive, got {c}")));
        }
        if !(beta > 0.0 && beta < 1.0) {
            return Err(invalid(format!("β must lie in (0,1), got {beta}")));
        }
        if p_star < 2 {
            return Err(invalid(format!("p* must be at least 2, got {p_star}")));
        }
        Ok(Schedule { c, beta, p_star })
    }

    pub fn for_loss(loss: &LossSpec, c: f64, beta: f64) -> Result<Self> {
        Self::new(c, beta, p_star(loss.growth_type))
    }

    /// `c = 1`, `β = 0.9/p*`.
    pub fn default_for(loss: &LossSpec) -> Self {
        let ps = p_star(loss.growth_type);
        Schedule {
            c: 1.0,
            beta: 0.9 / ps as f64,
            p_star: ps,
        }
    }

    pub fn lambda(&self, n: usize) -> f64 {
        self.c * (n as f64).powf(-self.beta)
    }

    /// `λ_n → 0` always; `λ_n^{p*} n → ∞` iff `β < 1/p*`.
    pub fn is_consistent(&self) -> bool {
        self.beta * (self.p_star as f64) < 1.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathOptions {
    pub fit: FitOptions,
    /// Order of the `L_p(P_X)` distance to the Bayes predictor.
    pub lp: u32,
    /// Marginal draws for the distance estimate.
    pub mc_samples: usize,
}

#[derive(Debug)]
pub struct PathPoint {
    pub n: usize,
    pub lambda: f64,
    pub wall_ms: f64,
    pub outcome: Result<PathFit>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathFit {
    pub model: SvmModel,
    pub rkhs_norm: f64,
    pub distance: RiskEstimate,
}

/// Fits one replicate along `sizes`: a fresh dataset per size, `λ = schedule(n)`,
/// then the `L_p` distance of the fit to the model's Bayes predictor.
/// Failures are recorded per size and the path continues.
#[allow(clippy::too_many_arguments)]
pub fn fit_path(
    model: &DistributionModel,
    loss: &LossSpec,
    kernel: &KernelSpec,
    schedule: &Schedule,
    sizes: &[usize],
    seed: u64,
    replicate: u64,
    opts: &PathOptions,
) -> Result<Vec<PathPoint>> {
    if sizes.is_empty() || sizes.windows(2).any(|w| w[0] >= w[1]) || sizes[0] == 0 {
        return Err(invalid(format!("sizes must be positive and increasing, got {sizes:?}")));
    }
    let kernel = kernel.with_dim(model.input_dim())?;
    let target = model.bayes_predictor(loss)?;
    let mut out = Vec::with_capacity(sizes.len());
    for (i, &n) in sizes.iter().enumerate() {
        let idx = i as u64;
        let lambda = schedule.lambda(n);
        let start = Instant::now();
        let outcome = (|| {
            let ds = model.sample(n, seed::derive(seed, "svm-data", replicate, idx))?;
            let fo = FitOptions {
                seed: seed::derive(seed, "svm-fit", replicate, idx),
                ..opts.fit.clone()
            };
            let m = fit(&ds, loss, &kernel, lambda, &fo)?;
            let distance = mc_lp_distance(
                &m,
                &target,
                &model.marginal,
                opts.lp,
                opts.mc_samples,
                seed::derive(seed, "svm-eval", replicate, idx),
            )?;
            Ok(PathFit {
                rkhs_norm: m.rkhs_norm()?,
                model: m,
                distance,
            })
        })();
        out.push(PathPoint {
            n,
            lambda,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
            outcome,
        });
    }
    Ok(out)
}
