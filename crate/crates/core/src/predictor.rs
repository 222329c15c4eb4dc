//! Real-valued predictors `f: X → ℝ`.

/// Anything that maps an input vector to a real prediction.
pub trait Predictor {
    fn predict(&self, x: &[f64]) -> f64;
}

impl<F: Fn(&[f64]) -> f64> Predictor for F {
    fn predict(&self, x: &[f64]) -> f64 {
        self(x)
    }
}

/// A one-dimensional predictor on `(0, 1)` that is smooth between a known
/// finite set of breakpoints. Exact quadrature splits at these points.
pub trait PiecewisePredictor: Predictor {
    fn eval1(&self, x: f64) -> f64;

    /// Interior points of `(0, 1)` where the predictor may fail to be smooth.
    fn breakpoints(&self) -> Vec<f64>;
}

/// The constant predictor `f ≡ c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constant(pub f64);

impl Predictor for Constant {
    fn predict(&self, _x: &[f64]) -> f64 {
        self.0
    }
}

impl PiecewisePredictor for Constant {
    fn eval1(&self, _x: f64) -> f64 {
        self.0
    }

    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// Piecewise-constant function on `(0, 1)`: `values[i]` on `(edges[i], edges[i+1])`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    edges: Vec<f64>,
    values: Vec<f64>,
}

impl StepFunction {
    /// `interior` are the strictly increasing cut points inside `(0,1)`;
    /// `values` has one more entry than `interior`.
    pub fn new(interior: Vec<f64>, values: Vec<f64>) -> Option<Self> {
        if values.len() != interior.len() + 1 {
            return None;
        }
        if interior.windows(2).any(|w| w[0] >= w[1]) || interior.iter().any(|&c| !(c > 0.0 && c < 1.0)) {
            return None;
        }
        let mut edges = Vec::with_capacity(interior.len() + 2);
        edges.push(0.0);
        edges.extend(interior);
        edges.push(1.0);
        Some(StepFunction { edges, values })
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl Predictor for StepFunction {
    fn predict(&self, x: &[f64]) -> f64 {
        self.eval1(x[0])
    }
}

impl PiecewisePredictor for StepFunction {
    fn eval1(&self, x: f64) -> f64 {
        let k = self.edges[1..self.edges.len() - 1].partition_point(|&e| e <= x);
        self.values[k]
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.edges[1..self.edges.len() - 1].to_vec()
    }
}
