//! Smooth bump functions supported in coordinate balls and co-zero fields
//! built from them.

use serde::{Deserialize, Serialize};

use super::dual::field_slip_sup;
use super::{Domain, FinslerMetric};
use crate::error::{Error, Result};
use crate::field::SmoothField;
use crate::geom::{self, Point, TAU};

/// Largest `‖·|_S` a co-zero field is rescaled to.
pub const COZERO_TARGET: f64 = 0.9;

/// `β(t) = exp(-t² / (1 - t²))` for `|t| < 1`, else 0; `β(0) = 1`.
pub fn profile(t: f64) -> f64 {
    let t = t.abs();
    if t >= 1.0 {
        0.0
    } else {
        (-t * t / (1.0 - t * t)).exp()
    }
}

/// `β'(t)` for `t ≥ 0`.
pub fn profile_derivative(t: f64) -> f64 {
    if !(0.0..1.0).contains(&t) {
        return 0.0;
    }
    let s = 1.0 - t * t;
    -2.0 * t / (s * s) * profile(t)
}

/// Displacement from `center` to `x`, taking the short way round on the circle.
fn offset(domain: &Domain, center: Point, x: Point) -> Point {
    match domain {
        Domain::Circle => {
            let mut d = geom::wrap_angle(x[0]) - geom::wrap_angle(center[0]);
            if d > TAU / 2.0 {
                d -= TAU;
            } else if d < -TAU / 2.0 {
                d += TAU;
            }
            [d, 0.0]
        }
        Domain::Line { .. } => [x[0] - center[0], 0.0],
        Domain::Plane { .. } => geom::sub(x, center),
    }
}

/// `b(x) = height · β(|x - center| / radius)` with its measured `‖b|_S`.
#[derive(Debug, Clone)]
pub struct Bump {
    pub center: Point,
    pub radius: f64,
    pub height: f64,
    pub field: SmoothField,
    /// `max ‖db|_F` over a grid of the ball's bounding window.
    pub slip: f64,
}

impl Bump {
    pub fn eval(&self, x: Point) -> f64 {
        self.field.eval(x)
    }

    /// Same bump with `height` multiplied by `c > 0`; the constant scales by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            center: self.center,
            radius: self.radius,
            height: c * self.height,
            field: self.field.scaled(c),
            slip: c * self.slip,
        }
    }
}

fn bump_field(domain: Domain, center: Point, radius: f64, height: f64) -> SmoothField {
    let value = move |x: Point| height * profile(geom::norm(offset(&domain, center, x)) / radius);
    let grad = move |x: Point| {
        let d = offset(&domain, center, x);
        let r = geom::norm(d);
        if r == 0.0 || r >= radius {
            return [0.0, 0.0];
        }
        geom::scale(d, height * profile_derivative(r / radius) / (radius * r))
    };
    SmoothField::new(format!("bump({center:?}, {radius}, {height})"), value, grad)
}

fn ball_window(domain: &Domain, center: Point, radius: f64) -> Domain {
    match domain {
        Domain::Circle => Domain::Circle,
        Domain::Line { .. } => Domain::interval(center[0] - radius, center[0] + radius),
        Domain::Plane { .. } => Domain::Plane {
            min: [center[0] - radius, center[1] - radius],
            max: [center[0] + radius, center[1] + radius],
        },
    }
}

/// Bump centred at `center` on the structure's domain, with `‖b|_S` measured
/// on a `grid_n` grid (per axis) of the ball's bounding window.
pub fn bump_build<M: FinslerMetric + ?Sized>(metric: &M, center: Point, radius: f64, height: f64, grid_n: usize) -> Result<Bump> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidArgument(format!("bump radius must be positive, got {radius}")));
    }
    if !(height > 0.0 && height.is_finite()) {
        return Err(Error::InvalidArgument(format!("bump height must be positive, got {height}")));
    }
    let domain = *metric.domain();
    let field = bump_field(domain, center, radius, height);
    let slip = field_slip_sup(metric, &field, Some(&ball_window(&domain, center, radius)), grid_n)?.value;
    Ok(Bump { center, radius, height, field, slip })
}

/// Pointwise maximum of bumps, each rescaled to `‖b|_S = 0.9`, positive
/// exactly on the union of the open balls.
#[derive(Debug, Clone)]
pub struct CozeroField {
    pub bumps: Vec<Bump>,
    pub field: SmoothField,
    /// Measured `‖f|_S` of the maximum.
    pub slip: f64,
}

impl CozeroField {
    pub fn eval(&self, x: Point) -> f64 {
        self.field.eval(x)
    }
}

pub fn cozero_build<M: FinslerMetric + ?Sized>(metric: &M, balls: &[(Point, f64)], grid_n: usize) -> Result<CozeroField> {
    if balls.is_empty() {
        return Err(Error::InvalidArgument("co-zero field needs at least one ball".into()));
    }
    let mut bumps = Vec::with_capacity(balls.len());
    for &(center, radius) in balls {
        let unit = bump_build(metric, center, radius, 1.0, grid_n)?;
        bumps.push(unit.scaled(COZERO_TARGET / unit.slip));
    }
    let parts: Vec<SmoothField> = bumps.iter().map(|b| b.field.clone()).collect();
    let value_parts = parts.clone();
    let field = SmoothField::new(
        "cozero",
        move |x| value_parts.iter().map(|b| b.eval(x)).fold(0.0, f64::max),
        move |x| {
            let mut best = (0.0, [0.0, 0.0]);
            for b in &parts {
                let v = b.eval(x);
                if v > best.0 {
                    best = (v, b.grad(x).unwrap_or([0.0, 0.0]));
                }
            }
            best.1
        },
    );
    let domain = *metric.domain();
    let window = match domain {
        Domain::Circle => Domain::Circle,
        _ => {
            let mut lo = [f64::INFINITY; 2];
            let mut hi = [f64::NEG_INFINITY; 2];
            for &(c, r) in balls {
                for k in 0..domain.dim() {
                    lo[k] = lo[k].min(c[k] - r);
                    hi[k] = hi[k].max(c[k] + r);
                }
            }
            if domain.dim() == 1 {
                Domain::interval(lo[0], hi[0])
            } else {
                Domain::Plane { min: lo, max: hi }
            }
        }
    };
    let per_axis = if domain.dim() == 1 { grid_n * balls.len() } else { grid_n };
    let slip = field_slip_sup(metric, &field, Some(&window), per_axis)?.value;
    Ok(CozeroField { bumps, field, slip })
}

/// A ball as it appears in scenario files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallSpec {
    pub center: Point,
    pub radius: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finsler::RandersStructure;

    /// `max |β'|` by dense sampling, independent of the grid used by the builder.
    fn max_profile_slope() -> f64 {
        (0..200_000).map(|k| profile_derivative(k as f64 / 200_000.0).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn bump_shape() {
        let f = RandersStructure::euclidean_line();
        let b = bump_build(&f, [0.0, 0.0], 1.0, 1.0, 2001).unwrap();
        assert_eq!(b.eval([0.0, 0.0]), 1.0);
        assert_eq!(b.eval([1.0, 0.0]), 0.0);
        assert_eq!(b.eval([-1.0, 0.0]), 0.0);
        assert!(b.eval([0.999, 0.0]) > 0.0);
        assert!((b.slip - max_profile_slope()).abs() < 1e-4, "{}", b.slip);
        let half = bump_build(&f, [0.0, 0.0], 1.0, 0.5, 2001).unwrap();
        assert!((half.slip - 0.5 * b.slip).abs() < 1e-15);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        for t in [0.1, 0.4, 0.7, 0.95] {
            let h = 1e-6;
            let fd = (profile(t + h) - profile(t - h)) / (2.0 * h);
            assert!((fd - profile_derivative(t)).abs() < 1e-6);
        }
    }

    #[test]
    fn cozero_positivity_set() {
        let f = RandersStructure::euclidean_line();
        let c = cozero_build(&f, &[([-2.0, 0.0], 1.0), ([2.0, 0.0], 0.5)], 1001).unwrap();
        assert!(c.slip < 1.0);
        for k in 0..=800 {
            let x = -4.0 + 0.01 * k as f64;
            let inside = (x + 2.0).abs() < 1.0 || (x - 2.0).abs() < 0.5;
            assert_eq!(c.eval([x, 0.0]) > 0.0, inside, "x = {x}");
        }
        let nested = cozero_build(&f, &[([0.0, 0.0], 1.0), ([0.2, 0.0], 0.3)], 1001).unwrap();
        for k in 0..=300 {
            let x = -1.5 + 0.01 * k as f64;
            assert_eq!(nested.eval([x, 0.0]) > 0.0, x.abs() < 1.0, "x = {x}");
        }
    }

    #[test]
    fn plane_bump_on_randers_structure() {
        let f = RandersStructure::constant_plane([0.3, 0.0]);
        let b = bump_build(&f, [0.0, 0.0], 1.0, 1.0, 101).unwrap();
        let c = cozero_build(&f, &[([0.0, 0.0], 1.0)], 101).unwrap();
        assert!((c.bumps[0].slip - COZERO_TARGET).abs() < 1e-12);
        assert!(b.slip > 0.0);
        assert!(c.slip <= COZERO_TARGET + 1e-12);
    }
}
