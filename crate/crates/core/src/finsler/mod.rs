//! Finsler structures of Randers type on the line, the plane and the circle,
//! together with lengths, distances and derivative norms computed from them.
//!
//! A Randers structure is `F(x, v) = sqrt(v · A(x) v) + ω(x)(v)`; it is a
//! positive Minkowski norm at `x` exactly when the dual norm of `ω(x)` with
//! respect to `A(x)` is below 1.
//!
//! Potentials enter with the minus convention: the structure obtained from
//! `F` by a potential `φ` is `F - dφ`, whose distance is
//! `d(x, y) + φ(x) - φ(y)`. On the line, a "drift" `b` therefore means
//! `F(x, v) = |v| - b(x) v`, i.e. `ω = -b`.

mod bump;
mod distance;
mod dual;
mod mollify;
mod pushforward;
pub mod quad;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Grid1, GridField};
use crate::geom::{self, Point};

pub use bump::{bump_build, cozero_build, BallSpec, Bump, CozeroField};
pub use distance::{
    distance_matrix, finsler_distance, finsler_distance_with, line_distance_table, line_oracle, randers_line_distance,
    DistanceEstimate, LineDistances, SolverOptions,
};
pub use dual::{asym_dual_norm, field_slip_sup, symmetric_dual_norm, Covector, SlipSup};
pub use mollify::{mollifier, smooth_slip_approx, SmoothingResult, SmoothingSummary};
pub use pushforward::{pushforward_eval, Diffeo, ShiftedPushforward};
use quad::GaussLegendre;

/// Where a structure lives. Line and plane bounds may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Domain {
    Line { min: f64, max: f64 },
    Plane { min: Point, max: Point },
    /// Angles, period 2π.
    Circle,
}

impl Domain {
    pub fn real_line() -> Self {
        Domain::Line { min: f64::NEG_INFINITY, max: f64::INFINITY }
    }

    pub fn interval(min: f64, max: f64) -> Self {
        Domain::Line { min, max }
    }

    pub fn plane() -> Self {
        Domain::Plane { min: [f64::NEG_INFINITY; 2], max: [f64::INFINITY; 2] }
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Line { .. } | Domain::Circle => 1,
            Domain::Plane { .. } => 2,
        }
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self, Domain::Circle)
    }

    pub fn contains(&self, p: Point) -> bool {
        match *self {
            Domain::Line { min, max } => p[0].is_finite() && p[0] >= min && p[0] <= max,
            Domain::Plane { min, max } => {
                p.iter().all(|c| c.is_finite()) && (0..2).all(|k| p[k] >= min[k] && p[k] <= max[k])
            }
            Domain::Circle => p[0].is_finite(),
        }
    }

    pub fn is_bounded(&self) -> bool {
        match *self {
            Domain::Line { min, max } => min.is_finite() && max.is_finite(),
            Domain::Plane { min, max } => min.iter().chain(&max).all(|c| c.is_finite()),
            Domain::Circle => true,
        }
    }

    pub fn check(&self, p: Point) -> Result<()> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(Error::DomainExit { point: p })
        }
    }
}

/// A Finsler function `F(x, v)` on a domain.
pub trait FinslerMetric: Send + Sync {
    fn domain(&self) -> &Domain;

    fn eval(&self, x: Point, v: Point) -> f64;

    /// Errors when `F(x, ·)` fails to be positive at `x`.
    fn check_point(&self, x: Point) -> Result<()>;

    fn dim(&self) -> usize {
        self.domain().dim()
    }
}

/// Quadratic part `A(x)` of a Randers structure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Base {
    Euclidean,
    /// Constant symmetric positive-definite matrix (only `[0][0]` is used in 1D).
    Constant { a: [[f64; 2]; 2] },
}

impl Base {
    fn matrix(&self) -> [[f64; 2]; 2] {
        match *self {
            Base::Euclidean => [[1.0, 0.0], [0.0, 1.0]],
            Base::Constant { a } => a,
        }
    }

    fn norm(&self, dim: usize, v: Point) -> f64 {
        match *self {
            Base::Euclidean if dim == 1 => v[0].abs(),
            Base::Euclidean => geom::norm(v),
            Base::Constant { a } if dim == 1 => (a[0][0] * v[0] * v[0]).sqrt(),
            Base::Constant { a } => geom::dot(v, geom::mat_vec(a, v)).max(0.0).sqrt(),
        }
    }

    /// `sqrt(w · A^{-1} w)`.
    fn dual_norm(&self, dim: usize, w: Point) -> f64 {
        match *self {
            Base::Euclidean if dim == 1 => w[0].abs(),
            Base::Euclidean => geom::norm(w),
            Base::Constant { a } if dim == 1 => w[0].abs() / a[0][0].sqrt(),
            Base::Constant { a } => match geom::inverse(a) {
                Some(inv) => geom::dot(w, geom::mat_vec(inv, w)).max(0.0).sqrt(),
                None => f64::INFINITY,
            },
        }
    }
}

type DriftFn = dyn Fn(Point) -> Point + Send + Sync;

/// The one-form `ω(x)`.
#[derive(Clone)]
pub enum Drift {
    Zero,
    Constant(Point),
    /// `ω(x) = -x² / (1 + x²)` on the line: `F = |v| - φ'(x) v` with
    /// `φ(x) = x - arctan x`.
    ArctanPotential,
    /// `ω(θ) = -a cos θ` on the circle: `F = |v| - d(a sin θ)(v)`.
    SinePotential { amplitude: f64 },
    /// Piecewise-linear `ω` on a 1D grid, constant outside.
    Table(GridField),
    Custom(Arc<DriftFn>),
}

impl fmt::Debug for Drift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Drift::Zero => write!(f, "Zero"),
            Drift::Constant(w) => write!(f, "Constant({w:?})"),
            Drift::ArctanPotential => write!(f, "ArctanPotential"),
            Drift::SinePotential { amplitude } => write!(f, "SinePotential({amplitude})"),
            Drift::Table(t) => write!(f, "Table({:?})", t.grid),
            Drift::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl Drift {
    pub fn eval(&self, x: Point) -> Point {
        match self {
            Drift::Zero => [0.0, 0.0],
            Drift::Constant(w) => *w,
            Drift::ArctanPotential => {
                let t = x[0];
                [-t * t / (1.0 + t * t), 0.0]
            }
            Drift::SinePotential { amplitude } => [-amplitude * x[0].cos(), 0.0],
            Drift::Table(t) => [t.eval(x[0]), 0.0],
            Drift::Custom(w) => w(x),
        }
    }

    /// True when `ω` does not depend on the point.
    pub fn is_constant(&self) -> bool {
        matches!(self, Drift::Zero | Drift::Constant(_))
    }
}

/// `F(x, v) = sqrt(v · A v) + ω(x)(v)`.
#[derive(Debug, Clone)]
pub struct RandersStructure {
    domain: Domain,
    base: Base,
    drift: Drift,
}

impl RandersStructure {
    pub fn new(domain: Domain, base: Base, drift: Drift) -> Self {
        Self { domain, base, drift }
    }

    pub fn euclidean_line() -> Self {
        Self::new(Domain::real_line(), Base::Euclidean, Drift::Zero)
    }

    pub fn euclidean_plane() -> Self {
        Self::new(Domain::plane(), Base::Euclidean, Drift::Zero)
    }

    pub fn euclidean_circle() -> Self {
        Self::new(Domain::Circle, Base::Euclidean, Drift::Zero)
    }

    /// `F(x, v) = |v| - φ'(x) v` with `φ(x) = x - arctan x`.
    pub fn arctan_line() -> Self {
        Self::new(Domain::real_line(), Base::Euclidean, Drift::ArctanPotential)
    }

    pub fn constant_plane(omega: Point) -> Self {
        Self::new(Domain::plane(), Base::Euclidean, Drift::Constant(omega))
    }

    /// `F(x, v) = |v| + w v` on the line.
    pub fn constant_line(w: f64) -> Self {
        Self::new(Domain::real_line(), Base::Euclidean, Drift::Constant([w, 0.0]))
    }

    /// `F(θ, v) = |v| - a cos θ v` on the circle.
    pub fn sine_circle(amplitude: f64) -> Self {
        Self::new(Domain::Circle, Base::Euclidean, Drift::SinePotential { amplitude })
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    pub fn base(&self) -> &Base {
        &self.base
    }

    pub fn drift(&self) -> &Drift {
        &self.drift
    }

    /// Both `A` and `ω` are constant, so the structure is invariant under translations.
    pub fn is_translation_invariant(&self) -> bool {
        self.drift.is_constant() && !self.domain.is_periodic()
    }

    pub fn base_matrix(&self) -> [[f64; 2]; 2] {
        self.base.matrix()
    }

    pub fn base_norm(&self, v: Point) -> f64 {
        self.base.norm(self.dim(), v)
    }

    pub fn drift_at(&self, x: Point) -> Point {
        let x = if self.domain.is_periodic() { [geom::wrap_angle(x[0]), 0.0] } else { x };
        let w = self.drift.eval(x);
        if self.dim() == 1 {
            [w[0], 0.0]
        } else {
            w
        }
    }

    /// Dual norm of `ω(x)` with respect to `A(x)`.
    pub fn drift_norm(&self, x: Point) -> f64 {
        self.base.dual_norm(self.dim(), self.drift_at(x))
    }

    /// `F(x, ·)` on the line written as `|v| - b v`, returns `b(x)`.
    pub fn line_drift(&self, x: f64) -> f64 {
        -self.drift_at([x, 0.0])[0]
    }
}

impl FinslerMetric for RandersStructure {
    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn eval(&self, x: Point, v: Point) -> f64 {
        self.base_norm(v) + geom::dot(self.drift_at(x), v)
    }

    fn check_point(&self, x: Point) -> Result<()> {
        let norm = self.drift_norm(x);
        if !(norm < 1.0) {
            return Err(Error::DriftTooLarge { point: x, norm });
        }
        Ok(())
    }
}

/// Serialized structure: `{"dim": 1|2, "domain": …, "drift": {"kind": …}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureSpec {
    pub dim: usize,
    #[serde(default)]
    pub domain: Option<Domain>,
    #[serde(default)]
    pub base: Option<Base>,
    #[serde(default)]
    pub drift: DriftSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DriftSpec {
    #[default]
    Zero,
    #[serde(rename = "paper-example", alias = "arctan-potential")]
    ArctanPotential,
    Constant { omega: Vec<f64> },
    SinePotential { amplitude: f64 },
    Table { min: f64, max: f64, values: Vec<f64> },
}

impl StructureSpec {
    pub fn build(&self) -> Result<RandersStructure> {
        let domain = match (self.domain, self.dim) {
            (Some(d), dim) if d.dim() == dim => d,
            (Some(d), dim) => {
                return Err(Error::InvalidArgument(format!("domain of dimension {} for dim {dim}", d.dim())))
            }
            (None, 1) => Domain::real_line(),
            (None, 2) => Domain::plane(),
            (None, dim) => return Err(Error::InvalidArgument(format!("dim must be 1 or 2, got {dim}"))),
        };
        let drift = match &self.drift {
            DriftSpec::Zero => Drift::Zero,
            DriftSpec::ArctanPotential => Drift::ArctanPotential,
            DriftSpec::Constant { omega } => {
                if omega.len() != self.dim {
                    return Err(Error::InvalidArgument(format!(
                        "constant drift has {} components for dim {}",
                        omega.len(),
                        self.dim
                    )));
                }
                Drift::Constant([omega[0], omega.get(1).copied().unwrap_or(0.0)])
            }
            DriftSpec::SinePotential { amplitude } => Drift::SinePotential { amplitude: *amplitude },
            DriftSpec::Table { min, max, values } => {
                let grid = Grid1::new(*min, *max, values.len())?;
                Drift::Table(GridField::new(grid, values.clone())?)
            }
        };
        Ok(RandersStructure::new(domain, self.base.unwrap_or(Base::Euclidean), drift))
    }
}

/// Piecewise-linear path, uniformly parametrized on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    vertices: Vec<Point>,
}

impl Polyline {
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::InvalidArgument("polyline needs at least two vertices".into()));
        }
        if let Some(w) = vertices.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument(format!("repeated consecutive vertex {:?}", w[0])));
        }
        Ok(Self { vertices })
    }

    pub fn segment(a: Point, b: Point) -> Result<Self> {
        Self::new(vec![a, b])
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn start(&self) -> Point {
        self.vertices[0]
    }

    pub fn end(&self) -> Point {
        *self.vertices.last().unwrap()
    }

    /// Euclidean length of the path in coordinates.
    pub fn coordinate_length(&self) -> f64 {
        self.vertices.windows(2).map(|w| geom::norm(geom::sub(w[1], w[0]))).sum()
    }
}

/// `∫ F(σ(t), σ'(t)) dt` with `quad_n` Gauss–Legendre nodes per segment.
pub fn path_length<M: FinslerMetric + ?Sized>(metric: &M, path: &Polyline, quad_n: usize) -> Result<f64> {
    if quad_n == 0 {
        return Err(Error::InvalidArgument("quad_n must be at least 1".into()));
    }
    let domain = metric.domain();
    for &v in path.vertices() {
        domain.check(v)?;
    }
    let rule = GaussLegendre::new(quad_n);
    Ok(path.vertices.windows(2).map(|w| segment_length(metric, &rule, w[0], w[1])).sum())
}

/// Length of the straight segment `a -> b`; exact when `F` is constant along it.
pub(crate) fn segment_length<M: FinslerMetric + ?Sized>(metric: &M, rule: &GaussLegendre, a: Point, b: Point) -> f64 {
    let v = geom::sub(b, a);
    rule.integrate_unit(|t| metric.eval(geom::lerp(a, b, t), v))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomogeneityCheck {
    pub point: Point,
    pub vector: Point,
    pub max_rel_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinkowskiReport {
    pub max_homogeneity_error: f64,
    pub min_value: f64,
    pub min_triangle_slack: f64,
    pub min_hessian_eigenvalue: f64,
    pub homogeneity_ok: bool,
    pub positivity_ok: bool,
    pub triangle_ok: bool,
    pub convexity_ok: bool,
    pub pass: bool,
}

pub const HOMOGENEITY_TOL: f64 = 1e-9;
pub const TRIANGLE_TOL: f64 = -1e-9;
pub const HESSIAN_TOL: f64 = -1e-6;

/// Numerical check of the Minkowski-norm axioms of `F(x, ·)` at the sampled
/// points: positive homogeneity, positivity, the triangle inequality on
/// sampled pairs, and strong convexity through the finite-difference Hessian
/// of `F²`.
pub fn minkowski_validate<M: FinslerMetric + ?Sized>(metric: &M, points: &[Point], vectors: &[Point]) -> Result<MinkowskiReport> {
    let dim = metric.dim();
    let vectors: Vec<Point> = vectors.iter().map(|&v| if dim == 1 { [v[0], 0.0] } else { v }).collect();
    if vectors.iter().any(|v| geom::norm(*v) == 0.0) {
        return Err(Error::InvalidArgument("sample vectors must be nonzero".into()));
    }
    let mut max_h = 0.0f64;
    let mut min_value = f64::INFINITY;
    let mut min_slack = f64::INFINITY;
    let mut min_eig = f64::INFINITY;
    for &x in points {
        metric.check_point(x)?;
        for &v in &vectors {
            let fv = metric.eval(x, v);
            min_value = min_value.min(fv);
            for lambda in [0.5, 2.0, 10.0] {
                let scaled = metric.eval(x, geom::scale(v, lambda));
                let rel = (scaled - lambda * fv).abs() / (lambda * fv.abs()).max(f64::MIN_POSITIVE);
                max_h = max_h.max(rel);
            }
            min_eig = min_eig.min(hessian_min_eigenvalue(metric, x, v));
        }
        for (i, &u) in vectors.iter().enumerate() {
            for &w in &vectors[i..] {
                let slack = metric.eval(x, u) + metric.eval(x, w) - metric.eval(x, geom::add(u, w));
                min_slack = min_slack.min(slack);
            }
        }
    }
    let homogeneity_ok = max_h <= HOMOGENEITY_TOL;
    let positivity_ok = min_value > 0.0;
    let triangle_ok = min_slack >= TRIANGLE_TOL;
    let convexity_ok = min_eig > HESSIAN_TOL;
    Ok(MinkowskiReport {
        max_homogeneity_error: max_h,
        min_value,
        min_triangle_slack: min_slack,
        min_hessian_eigenvalue: min_eig,
        homogeneity_ok,
        positivity_ok,
        triangle_ok,
        convexity_ok,
        pass: homogeneity_ok && positivity_ok && triangle_ok && convexity_ok,
    })
}

/// Smallest eigenvalue of the central-difference Hessian of `v ↦ F(x, v)²`,
/// step `1e-4 |v|`.
pub fn hessian_min_eigenvalue<M: FinslerMetric + ?Sized>(metric: &M, x: Point, v: Point) -> f64 {
    let h = 1e-4 * geom::norm(v);
    let f2 = |w: Point| {
        let f = metric.eval(x, w);
        f * f
    };
    let e = [[h, 0.0], [0.0, h]];
    let c = f2(v);
    let second = |i: usize| (f2(geom::add(v, e[i])) - 2.0 * c + f2(geom::sub(v, e[i]))) / (h * h);
    if metric.dim() == 1 {
        return second(0);
    }
    let mixed = (f2(geom::add(geom::add(v, e[0]), e[1])) - f2(geom::sub(geom::add(v, e[0]), e[1]))
        - f2(geom::add(geom::sub(v, e[0]), e[1]))
        + f2(geom::sub(geom::sub(v, e[0]), e[1])))
        / (4.0 * h * h);
    geom::sym_eigenvalues([[second(0), mixed], [mixed, second(1)]]).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    fn sample_vectors() -> Vec<Point> {
        (0..12).map(|k| {
            let t = k as f64 * geom::TAU / 12.0 + 0.1;
            [t.cos() * (1.0 + 0.3 * k as f64), t.sin() * (1.0 + 0.3 * k as f64)]
        })
        .collect()
    }

    #[test]
    fn euclidean_plane_is_a_minkowski_norm() {
        let f = RandersStructure::euclidean_plane();
        let r = minkowski_validate(&f, &[[0.0, 0.0], [1.0, -2.0]], &sample_vectors()).unwrap();
        assert!(r.pass, "{r:?}");
        // Hessian of |v|² is 2 I
        assert!((r.min_hessian_eigenvalue - 2.0).abs() < 1e-6);
        assert!((hessian_min_eigenvalue(&f, [0.0, 0.0], [3.0, 4.0]) - 2.0).abs() < 1e-6);
    }

    #[test]
    fn constant_randers_plane_passes() {
        let f = RandersStructure::constant_plane([0.3, 0.0]);
        let r = minkowski_validate(&f, &[[0.0, 0.0], [5.0, 1.0]], &sample_vectors()).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(r.min_hessian_eigenvalue > 0.0);
    }

    #[test]
    fn unit_drift_is_too_large() {
        let f = RandersStructure::constant_plane([1.0, 0.0]);
        assert!(matches!(
            minkowski_validate(&f, &[[0.0, 0.0]], &sample_vectors()),
            Err(Error::DriftTooLarge { norm, .. }) if norm == 1.0
        ));
        assert_eq!(f.eval([0.0, 0.0], [-1.0, 0.0]), 0.0);
    }

    #[test]
    fn arctan_line_and_sine_circle_pass() {
        let f = RandersStructure::arctan_line();
        let pts: Vec<Point> = (-5..=5).map(|k| [k as f64, 0.0]).collect();
        let r = minkowski_validate(&f, &pts, &[[1.0, 0.0], [-2.0, 0.0], [0.5, 0.0]]).unwrap();
        assert!(r.pass, "{r:?}");
        let c = RandersStructure::sine_circle(0.9);
        let pts: Vec<Point> = (0..16).map(|k| [k as f64 * 0.4, 0.0]).collect();
        assert!(minkowski_validate(&c, &pts, &[[1.0, 0.0], [-1.0, 0.0]]).unwrap().pass);
    }

    #[test]
    fn path_lengths() {
        let e = RandersStructure::euclidean_line();
        let unit = Polyline::segment([0.0, 0.0], [1.0, 0.0]).unwrap();
        assert_eq!(path_length(&e, &unit, 1).unwrap(), 1.0);

        let c = RandersStructure::constant_plane([0.3, 0.0]);
        assert!((path_length(&c, &unit, 1).unwrap() - 1.3).abs() < 1e-15);
        let back = Polyline::segment([1.0, 0.0], [0.0, 0.0]).unwrap();
        assert!((path_length(&c, &back, 1).unwrap() - 0.7).abs() < 1e-15);

        let p = RandersStructure::arctan_line();
        let fine = Polyline::new((0..=64).map(|k| [k as f64 / 64.0, 0.0]).collect()).unwrap();
        assert!((path_length(&p, &fine, 4).unwrap() - FRAC_PI_4).abs() < 1e-13);
    }

    #[test]
    fn path_leaving_the_domain() {
        let f = RandersStructure::euclidean_line().with_domain(Domain::interval(0.0, 1.0));
        let p = Polyline::segment([0.5, 0.0], [2.0, 0.0]).unwrap();
        assert!(matches!(path_length(&f, &p, 2), Err(Error::DomainExit { .. })));
        assert!(Polyline::new(vec![[0.0, 0.0]]).is_err());
        assert!(Polyline::new(vec![[0.0, 0.0], [0.0, 0.0]]).is_err());
    }

    #[test]
    fn structure_spec_json() {
        let s: StructureSpec = serde_json::from_str(r#"{"dim": 1, "drift": {"kind": "paper-example"}}"#).unwrap();
        let f = s.build().unwrap();
        assert_eq!(f.line_drift(1.0), 0.5);
        let s: StructureSpec =
            serde_json::from_str(r#"{"dim": 2, "drift": {"kind": "constant", "omega": [0.3, 0.0]}}"#).unwrap();
        assert!((s.build().unwrap().eval([0.0, 0.0], [1.0, 0.0]) - 1.3).abs() < 1e-15);
        let s: StructureSpec = serde_json::from_str(
            r#"{"dim": 1, "domain": {"kind": "circle"}, "drift": {"kind": "sine-potential", "amplitude": 0.3}}"#,
        )
        .unwrap();
        assert!(s.build().unwrap().domain().is_periodic());
        let bad: StructureSpec =
            serde_json::from_str(r#"{"dim": 2, "drift": {"kind": "constant", "omega": [0.3]}}"#).unwrap();
        assert!(bad.build().is_err());
    }
}
