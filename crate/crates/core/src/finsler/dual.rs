//! Dual norms `‖ξ|_F = sup { ξ(v) : F(x, v) ≤ 1 }` and the sup of `‖df(x)|_F`
//! over a grid.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Domain, FinslerMetric};
use crate::error::{Error, Result};
use crate::field::SmoothField;
use crate::geom::{self, Point, TAU};

const COARSE_ANGLES: usize = 256;
const GOLDEN_TOL: f64 = 1e-10;

/// A linear functional on the tangent space at `point`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Covector {
    pub point: Point,
    pub components: Point,
}

impl Covector {
    pub fn new(point: Point, components: Point) -> Result<Self> {
        if !components.iter().chain(point.iter()).all(|c| c.is_finite()) {
            return Err(Error::InvalidArgument(format!("covector {components:?} at {point:?} is not finite")));
        }
        Ok(Self { point, components })
    }

    /// One-dimensional covector `ξ` at `x`.
    pub fn line(x: f64, xi: f64) -> Result<Self> {
        Self::new([x, 0.0], [xi, 0.0])
    }

    pub fn neg(self) -> Self {
        Self { point: self.point, components: geom::scale(self.components, -1.0) }
    }

    pub fn apply(&self, v: Point) -> f64 {
        geom::dot(self.components, v)
    }
}

/// `‖ξ|_F` at the covector's base point. In 1D this is `ξ / F(x, 1)` for
/// `ξ ≥ 0` and `|ξ| / F(x, -1)` otherwise; in 2D the ratio `ξ(v) / F(x, v)` is
/// maximized over the direction angle by a coarse scan and golden-section search.
pub fn asym_dual_norm<M: FinslerMetric + ?Sized>(metric: &M, xi: &Covector) -> Result<f64> {
    metric.check_point(xi.point)?;
    let x = xi.point;
    if metric.dim() == 1 {
        let c = xi.components[0];
        return Ok(if c > 0.0 {
            c / metric.eval(x, [1.0, 0.0])
        } else if c < 0.0 {
            -c / metric.eval(x, [-1.0, 0.0])
        } else {
            0.0
        });
    }
    if xi.components == [0.0, 0.0] {
        return Ok(0.0);
    }
    let ratio = |theta: f64| {
        let v = [theta.cos(), theta.sin()];
        xi.apply(v) / metric.eval(x, v)
    };
    let h = TAU / COARSE_ANGLES as f64;
    let (best_k, best) = (0..COARSE_ANGLES)
        .map(|k| (k, ratio(k as f64 * h)))
        .fold((0, f64::NEG_INFINITY), |acc, (k, r)| if r > acc.1 { (k, r) } else { acc });
    let center = best_k as f64 * h;
    Ok(golden_max(&ratio, center - h, center + h).max(best).max(0.0))
}

/// `max(‖ξ|_F, ‖-ξ|_F)`.
pub fn symmetric_dual_norm<M: FinslerMetric + ?Sized>(metric: &M, xi: &Covector) -> Result<f64> {
    Ok(asym_dual_norm(metric, xi)?.max(asym_dual_norm(metric, &xi.neg())?))
}

fn golden_max(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > GOLDEN_TOL {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    fc.max(fd).max(f(0.5 * (a + b)))
}

/// Largest `‖df(x)|_F` over the grid and where it is attained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlipSup {
    pub value: f64,
    pub argmax: Point,
    pub nodes: usize,
}

/// Grid nodes covering `domain`: `n` per axis, endpoints included on intervals,
/// `n` equally spaced angles on the circle.
pub(crate) fn grid_points(domain: &Domain, n: usize) -> Result<Vec<Point>> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("grid_n must be at least 2, got {n}")));
    }
    if !domain.is_bounded() {
        return Err(Error::UnboundedDomain);
    }
    let axis = |lo: f64, hi: f64| -> Vec<f64> {
        (0..n).map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 }).collect()
    };
    Ok(match *domain {
        Domain::Line { min, max } => axis(min, max).into_iter().map(|t| [t, 0.0]).collect(),
        Domain::Circle => (0..n).map(|i| [TAU * i as f64 / n as f64, 0.0]).collect(),
        Domain::Plane { min, max } => {
            let xs = axis(min[0], max[0]);
            let ys = axis(min[1], max[1]);
            ys.iter().flat_map(|&y| xs.iter().map(move |&x| [x, y])).collect()
        }
    })
}

/// `max_x ‖df(x)|_F` over a grid of `window` (or of the structure's own domain).
pub fn field_slip_sup<M: FinslerMetric + ?Sized>(metric: &M, f: &SmoothField, window: Option<&Domain>, grid_n: usize) -> Result<SlipSup> {
    if !f.has_grad() {
        return Err(Error::InvalidArgument(format!("field '{}' has no derivative", f.name())));
    }
    let domain = window.unwrap_or(metric.domain());
    let points = grid_points(domain, grid_n)?;
    let values: Vec<Result<f64>> = points
        .par_iter()
        .map(|&p| {
            let g = f.grad(p).expect("checked above");
            let g = if metric.dim() == 1 { [g[0], 0.0] } else { g };
            asym_dual_norm(metric, &Covector::new(p, g)?)
        })
        .collect();
    let mut best = SlipSup { value: 0.0, argmax: points[0], nodes: points.len() };
    for (p, v) in points.iter().zip(values) {
        let v = v?;
        if v > best.value {
            best.value = v;
            best.argmax = *p;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::arctan_potential;
    use crate::finsler::RandersStructure;

    /// Dual of `|v| + ω·v`: `(sqrt((1-|ω|²)|ξ|² + (ξ·ω)²) - ξ·ω) / (1 - |ω|²)`.
    fn randers_dual(omega: Point, xi: Point) -> f64 {
        let w2 = geom::dot(omega, omega);
        let xw = geom::dot(xi, omega);
        (((1.0 - w2) * geom::dot(xi, xi) + xw * xw).sqrt() - xw) / (1.0 - w2)
    }

    #[test]
    fn line_values() {
        let f = RandersStructure::arctan_line();
        // b(1) = 0.5
        assert!((asym_dual_norm(&f, &Covector::line(1.0, 1.0).unwrap()).unwrap() - 2.0).abs() < 1e-15);
        assert!((asym_dual_norm(&f, &Covector::line(1.0, -1.0).unwrap()).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(asym_dual_norm(&f, &Covector::line(1.0, 0.0).unwrap()).unwrap(), 0.0);
        assert!((symmetric_dual_norm(&f, &Covector::line(1.0, -1.0).unwrap()).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn plane_values() {
        let e = RandersStructure::euclidean_plane();
        let v = asym_dual_norm(&e, &Covector::new([0.0, 0.0], [3.0, 4.0]).unwrap()).unwrap();
        assert!((v - 5.0).abs() < 1e-12);
        for (omega, xi) in [([0.3, 0.0], [1.0, 0.0]), ([0.3, -0.4], [0.2, 1.5]), ([-0.6, 0.1], [-1.0, -2.0])] {
            let f = RandersStructure::constant_plane(omega);
            let got = asym_dual_norm(&f, &Covector::new([0.0, 0.0], xi).unwrap()).unwrap();
            let want = randers_dual(omega, xi);
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn arctan_potential_sup_on_windows() {
        let f = RandersStructure::euclidean_line();
        let phi = arctan_potential();
        for r in [1.0, 2.0, 5.0] {
            let s = field_slip_sup(&f, &phi, Some(&Domain::interval(-r, r)), 201).unwrap();
            assert!((s.value - r * r / (1.0 + r * r)).abs() < 1e-12);
            assert_eq!(s.argmax[0].abs(), r);
        }
        let half = SmoothField::line("x/2", |x| 0.5 * x, |_| 0.5);
        assert_eq!(field_slip_sup(&f, &half, Some(&Domain::interval(-1.0, 1.0)), 11).unwrap().value, 0.5);
        let c = SmoothField::constant(3.0);
        assert_eq!(field_slip_sup(&f, &c, Some(&Domain::interval(-1.0, 1.0)), 11).unwrap().value, 0.0);
        assert!(matches!(field_slip_sup(&f, &c, None, 11), Err(Error::UnboundedDomain)));
    }
}
