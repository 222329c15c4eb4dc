//! Positive-definite kernels and Gram matrix assembly.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelKind {
    /// `exp(−‖x − x′‖² / γ²)`.
    Gaussian { gamma: f64 },
    /// Wendland `φ₁,₁(r) = (1 − r)₊³ (3r + 1)` with unit support radius, `φ(0) = 1`.
    Wendland11,
    /// `⟨x, x′⟩`.
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub input_dim: usize,
}

impl KernelSpec {
    pub fn gaussian(gamma: f64, input_dim: usize) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(invalid(format!("gaussian width γ must be positive, got {gamma}")));
        }
        Self::new(KernelKind::Gaussian { gamma }, input_dim)
    }

    pub fn wendland(input_dim: usize) -> Result<Self> {
        Self::new(KernelKind::Wendland11, input_dim)
    }

    pub fn linear(input_dim: usize) -> Result<Self> {
        Self::new(KernelKind::Linear, input_dim)
    }

    fn new(kind: KernelKind, input_dim: usize) -> Result<Self> {
        if input_dim == 0 {
            return Err(invalid("kernel input dimension must be at least 1"));
        }
        Ok(KernelSpec { kind, input_dim })
    }

    /// Same kernel on a different input dimension.
    pub fn with_dim(self, input_dim: usize) -> Result<Self> {
        Self::new(self.kind, input_dim)
    }

    /// `‖k‖∞ = sup_x √k(x,x)`; `None` for the unbounded linear kernel.
    pub fn sup_norm(&self) -> Option<f64> {
        match self.kind {
            KernelKind::Gaussian { .. } | KernelKind::Wendland11 => Some(1.0),
            KernelKind::Linear => None,
        }
    }

    /// Support radius for compactly supported kernels.
    pub fn support_radius(&self) -> Option<f64> {
        match self.kind {
            KernelKind::Wendland11 => Some(1.0),
            _ => None,
        }
    }

    pub fn eval(&self, x: &[f64], x2: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        self.check_dim(x2)?;
        Ok(self.eval_unchecked(x, x2))
    }

    /// Kernel value without dimension checks; callers guarantee matching lengths.
    #[inline]
    pub fn eval_unchecked(&self, x: &[f64], x2: &[f64]) -> f64 {
        match self.kind {
            KernelKind::Gaussian { gamma } => (-sq_dist(x, x2) / (gamma * gamma)).exp(),
            KernelKind::Wendland11 => wendland11(sq_dist(x, x2).sqrt()),
            KernelKind::Linear => x.iter().zip(x2).map(|(a, b)| a * b).sum(),
        }
    }

    pub(crate) fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                found: x.len(),
            });
        }
        Ok(())
    }

    /// Exact pairwise Gram matrix `K[i][j] = k(xᵢ, xⱼ)`.
    pub fn gram<P: AsRef<[f64]>>(&self, points: &[P]) -> Result<DMatrix<f64>> {
        if points.is_empty() {
            return Err(Error::EmptyInput("gram matrix needs at least one point"));
        }
        for p in points {
            self.check_dim(p.as_ref())?;
        }
        let n = points.len();
        let mut k = DMatrix::zeros(n, n);
        for j in 0..n {
            let xj = points[j].as_ref();
            k[(j, j)] = self.eval_unchecked(xj, xj);
            for i in (j + 1)..n {
                let v = self.eval_unchecked(points[i].as_ref(), xj);
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
        }
        Ok(k)
    }
}

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum()
}

#[inline]
pub fn wendland11(r: f64) -> f64 {
    if r >= 1.0 {
        0.0
    } else {
        let s = 1.0 - r;
        s * s * s * (3.0 * r + 1.0)
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            KernelKind::Gaussian { gamma } => write!(f, "gaussian:{gamma}"),
            KernelKind::Wendland11 => write!(f, "wendland"),
            KernelKind::Linear => write!(f, "linear"),
        }
    }
}

impl FromStr for KernelSpec {
    type Err = Error;

    /// Parses `gaussian:<γ> | wendland | linear` with input dimension 1; use
    /// [`KernelSpec::with_dim`] for other dimensions.
    fn from_str(s: &str) -> Result<Self> {
        let parse_err = || Error::Parse {
            what: "kernel",
            input: s.to_string(),
        };
        match s.trim().split_once(':') {
            Some(("gaussian", g)) => Self::gaussian(g.trim().parse().map_err(|_| parse_err())?, 1),
            None if s.trim() == "wendland" => Self::wendland(1),
            None if s.trim() == "linear" => Self::linear(1),
            _ => Err(parse_err()),
        }
    }
}
