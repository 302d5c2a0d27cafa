//! Real-valued fields: finite value vectors, uniform 1D grid samples and
//! closed-form fields with an optional gradient.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Point;

/// A field on a finite space, one value per point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScalarField {
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn constant(n: usize, value: f64) -> Self {
        Self { values: vec![value; n] }
    }

    pub fn zeros(n: usize) -> Self {
        Self::constant(n, 0.0)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::new(self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn neg(&self) -> Self {
        self.map(|v| -v)
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.expect_len(other.len())?;
        Ok(Self::new(
            self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        ))
    }

    /// `CarrierMismatch` unless the field has exactly `n` values.
    pub fn expect_len(&self, n: usize) -> Result<()> {
        if self.values.len() != n {
            return Err(Error::CarrierMismatch { expected: n, got: self.values.len() });
        }
        Ok(())
    }

    /// Pointwise `self >= other`.
    pub fn dominates(&self, other: &Self) -> bool {
        self.values.len() == other.values.len()
            && self.values.iter().zip(&other.values).all(|(a, b)| a >= b)
    }

    /// Largest absolute pointwise difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// `max - min` of the values; zero for a constant field.
    pub fn spread(&self) -> f64 {
        let (lo, hi) = self
            .values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        if self.values.is_empty() {
            0.0
        } else {
            hi - lo
        }
    }
}

impl From<Vec<f64>> for ScalarField {
    fn from(values: Vec<f64>) -> Self {
        Self::new(values)
    }
}

/// Uniform grid on `[min, max]` with `n` nodes (endpoints included).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1 {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl Grid1 {
    pub fn new(min: f64, max: f64, n: usize) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && max > min) || n < 2 {
            return Err(Error::InvalidArgument(format!(
                "grid needs finite min < max and n >= 2 (got [{min}, {max}], n = {n})"
            )));
        }
        Ok(Self { min, max, n })
    }

    pub fn spacing(&self) -> f64 {
        (self.max - self.min) / (self.n - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.max
        } else {
            self.min + i as f64 * self.spacing()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    /// Same interval with `factor` times as many cells.
    pub fn refined(&self, factor: usize) -> Self {
        Self { min: self.min, max: self.max, n: (self.n - 1) * factor + 1 }
    }
}

/// Samples of a function on a [`Grid1`], interpolated linearly between nodes
/// and extended as a constant outside the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridField {
    pub grid: Grid1,
    pub values: Vec<f64>,
}

impl GridField {
    pub fn new(grid: Grid1, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n {
            return Err(Error::CarrierMismatch { expected: grid.n, got: values.len() });
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("grid value {v} is not finite")));
        }
        Ok(Self { grid, values })
    }

    pub fn sample(grid: Grid1, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.nodes().into_iter().map(f).collect();
        Self { grid, values }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let g = &self.grid;
        if x <= g.min {
            return self.values[0];
        }
        if x >= g.max {
            return self.values[g.n - 1];
        }
        let t = (x - g.min) / g.spacing();
        let i = (t.floor() as usize).min(g.n - 2);
        let w = t - i as f64;
        self.values[i] * (1.0 - w) + self.values[i + 1] * w
    }
}

type ValueFn = dyn Fn(Point) -> f64 + Send + Sync;
type GradFn = dyn Fn(Point) -> Point + Send + Sync;

/// A field given by an evaluator, with an optional gradient evaluator.
/// For one-dimensional carriers only the first coordinate is used.
#[derive(Clone)]
pub struct SmoothField {
    name: String,
    value: Arc<ValueFn>,
    grad: Option<Arc<GradFn>>,
}

impl fmt::Debug for SmoothField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothField")
            .field("name", &self.name)
            .field("has_grad", &self.grad.is_some())
            .finish()
    }
}

impl SmoothField {
    pub fn new(
        name: impl Into<String>,
        value: impl Fn(Point) -> f64 + Send + Sync + 'static,
        grad: impl Fn(Point) -> Point + Send + Sync + 'static,
    ) -> Self {
        Self { name: name.into(), value: Arc::new(value), grad: Some(Arc::new(grad)) }
    }

    pub fn without_grad(
        name: impl Into<String>,
        value: impl Fn(Point) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self { name: name.into(), value: Arc::new(value), grad: None }
    }

    /// Field of one real variable with derivative `df`.
    pub fn line(
        name: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        df: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self::new(name, move |p| f(p[0]), move |p| [df(p[0]), 0.0])
    }

    pub fn constant(value: f64) -> Self {
        Self::new(format!("const {value}"), move |_| value, |_| [0.0, 0.0])
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, p: Point) -> f64 {
        (self.value)(p)
    }

    pub fn eval1(&self, x: f64) -> f64 {
        (self.value)([x, 0.0])
    }

    pub fn grad(&self, p: Point) -> Option<Point> {
        self.grad.as_ref().map(|g| g(p))
    }

    pub fn has_grad(&self) -> bool {
        self.grad.is_some()
    }

    /// Samples the field at the given points.
    pub fn restrict(&self, points: &[Point]) -> ScalarField {
        ScalarField::new(points.iter().map(|&p| self.eval(p)).collect())
    }

    pub fn scaled(&self, c: f64) -> Self {
        let value = self.value.clone();
        let grad = self.grad.clone();
        Self {
            name: format!("{c}*{}", self.name),
            value: Arc::new(move |p| c * value(p)),
            grad: grad.map(|g| Arc::new(move |p| {
                let d = g(p);
                [c * d[0], c * d[1]]
            }) as Arc<GradFn>),
        }
    }
}

/// `x - arctan x`, the antiderivative of `t^2 / (1 + t^2)` vanishing at 0.
pub fn arctan_potential() -> SmoothField {
    SmoothField::line("x - atan x", |x| x - x.atan(), |x| x * x / (1.0 + x * x))
}

/// Closed-form fields on the line addressable by name from the command line
/// and scenario files.
pub const NAMED_FIELDS: [&str; 5] = ["arctan-potential", "half-sine", "tanh", "gaussian", "quarter-slope"];

pub fn named_field(name: &str) -> Option<SmoothField> {
    Some(match name {
        "arctan-potential" => arctan_potential(),
        "half-sine" => SmoothField::line("0.5 sin x", |x| 0.5 * x.sin(), |x| 0.5 * x.cos()),
        "tanh" => SmoothField::line("0.4 tanh x", |x| 0.4 * x.tanh(), |x| 0.4 / x.cosh().powi(2)),
        "gaussian" => SmoothField::line("0.3 exp(-x^2)", |x| 0.3 * (-x * x).exp(), |x| -0.6 * x * (-x * x).exp()),
        "quarter-slope" => SmoothField::line("0.25 x", |x| 0.25 * x, |_| 0.25),
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_endpoints_are_exact() {
        let g = Grid1::new(-3.0, 3.0, 7).unwrap();
        assert_eq!(g.node(0), -3.0);
        assert_eq!(g.node(6), 3.0);
        assert_eq!(g.spacing(), 1.0);
        assert_eq!(g.refined(10).n, 61);
    }

    #[test]
    fn grid_field_interpolates_and_clamps() {
        let g = Grid1::new(0.0, 2.0, 3).unwrap();
        let f = GridField::new(g, vec![0.0, 1.0, 0.0]).unwrap();
        assert_eq!(f.eval(0.5), 0.5);
        assert_eq!(f.eval(1.5), 0.5);
        assert_eq!(f.eval(-4.0), 0.0);
        assert_eq!(f.eval(9.0), 0.0);
        assert!(GridField::new(g, vec![0.0]).is_err());
    }

    #[test]
    fn spread_and_dominance() {
        let f = ScalarField::new(vec![1.0, 3.0, 2.0]);
        let g = ScalarField::new(vec![0.0, 3.0, 1.0]);
        assert_eq!(f.spread(), 2.0);
        assert!(f.dominates(&g));
        assert!(!g.dominates(&f));
        assert!(f.zip_with(&ScalarField::zeros(2), |a, b| a + b).is_err());
    }

    #[test]
    fn arctan_potential_matches_closed_form() {
        let phi = arctan_potential();
        let at_one = 1.0 - std::f64::consts::FRAC_PI_4;
        assert!((phi.eval1(1.0) - at_one).abs() < 1e-15);
        assert_eq!(phi.grad([1.0, 0.0]).unwrap()[0], 0.5);
    }

    #[test]
    fn named_fields_have_consistent_gradients() {
        for name in NAMED_FIELDS {
            let f = named_field(name).unwrap();
            for x in [-1.3, 0.0, 0.7] {
                let h = 1e-6;
                let fd = (f.eval1(x + h) - f.eval1(x - h)) / (2.0 * h);
                assert!((fd - f.grad([x, 0.0]).unwrap()[0]).abs() < 1e-8, "{name} at {x}");
            }
        }
        assert!(named_field("nope").is_none());
    }
}
