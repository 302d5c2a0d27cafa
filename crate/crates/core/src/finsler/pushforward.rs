//! Push-forwards of Finsler structures along diffeomorphisms, optionally
//! shifted by the differential of a potential.

use std::fmt;
use std::sync::Arc;

use super::{Domain, FinslerMetric};
use crate::error::{Error, Result};
use crate::field::SmoothField;
use crate::geom::{self, Point, TAU};

type PointMap = dyn Fn(Point) -> Point + Send + Sync;
type JacobianMap = dyn Fn(Point) -> [[f64; 2]; 2] + Send + Sync;

/// A diffeomorphism `τ` given with `τ⁻¹` and `dτ⁻¹`.
#[derive(Clone)]
pub enum Diffeo {
    Identity,
    /// `x ↦ c x`, `c ≠ 0`.
    Scale(f64),
    Translate(Point),
    /// `θ ↦ θ + α` on the circle.
    Rotate(f64),
    Custom {
        name: String,
        forward: Arc<PointMap>,
        inverse: Arc<PointMap>,
        inverse_jacobian: Arc<JacobianMap>,
    },
}

impl fmt::Debug for Diffeo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diffeo::Identity => write!(f, "Identity"),
            Diffeo::Scale(c) => write!(f, "Scale({c})"),
            Diffeo::Translate(t) => write!(f, "Translate({t:?})"),
            Diffeo::Rotate(a) => write!(f, "Rotate({a})"),
            Diffeo::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

const IDENTITY: [[f64; 2]; 2] = [[1.0, 0.0], [0.0, 1.0]];

impl Diffeo {
    pub fn scale(c: f64) -> Result<Self> {
        if c == 0.0 || !c.is_finite() {
            return Err(Error::InvalidArgument(format!("scale factor must be finite and nonzero, got {c}")));
        }
        Ok(Diffeo::Scale(c))
    }

    pub fn forward(&self, x: Point) -> Point {
        match self {
            Diffeo::Identity => x,
            Diffeo::Scale(c) => geom::scale(x, *c),
            Diffeo::Translate(t) => geom::add(x, *t),
            Diffeo::Rotate(a) => [geom::wrap_angle(x[0] + a), 0.0],
            Diffeo::Custom { forward, .. } => forward(x),
        }
    }

    pub fn inverse(&self, y: Point) -> Point {
        match self {
            Diffeo::Identity => y,
            Diffeo::Scale(c) => geom::scale(y, 1.0 / c),
            Diffeo::Translate(t) => geom::sub(y, *t),
            Diffeo::Rotate(a) => [geom::wrap_angle(y[0] - a), 0.0],
            Diffeo::Custom { inverse, .. } => inverse(y),
        }
    }

    /// `dτ⁻¹(y)`.
    pub fn inverse_jacobian(&self, y: Point) -> [[f64; 2]; 2] {
        match self {
            Diffeo::Scale(c) => [[1.0 / c, 0.0], [0.0, 1.0 / c]],
            Diffeo::Custom { inverse_jacobian, .. } => inverse_jacobian(y),
            _ => IDENTITY,
        }
    }

    /// Image `τ(D)` of a domain; custom maps are assumed to preserve it.
    pub fn image_domain(&self, domain: &Domain) -> Domain {
        match (self, *domain) {
            (Diffeo::Scale(c), Domain::Line { min, max }) => {
                let (a, b) = (c * min, c * max);
                Domain::Line { min: a.min(b), max: a.max(b) }
            }
            (Diffeo::Scale(c), Domain::Plane { min, max }) => {
                let (a, b) = (geom::scale(min, *c), geom::scale(max, *c));
                Domain::Plane { min: [a[0].min(b[0]), a[1].min(b[1])], max: [a[0].max(b[0]), a[1].max(b[1])] }
            }
            (Diffeo::Translate(t), Domain::Line { min, max }) => Domain::Line { min: min + t[0], max: max + t[0] },
            (Diffeo::Translate(t), Domain::Plane { min, max }) => Domain::Plane { min: geom::add(min, *t), max: geom::add(max, *t) },
            (_, d) => d,
        }
    }
}

/// `τ_*(F)(y, w) = F(τ⁻¹(y), dτ⁻¹(y) w)`.
pub fn pushforward_eval<M: FinslerMetric + ?Sized>(metric: &M, tau: &Diffeo, y: Point, w: Point) -> Result<f64> {
    let x = tau.inverse(y);
    metric.domain().check(x)?;
    Ok(metric.eval(x, geom::mat_vec(tau.inverse_jacobian(y), w)))
}

/// `G(y, w) = τ_*(F)(y, w) - d(φ ∘ τ⁻¹)(y)(w)` with `φ` a potential on the
/// source side. Its distance is `d_F(τ⁻¹y, τ⁻¹y') + φ(τ⁻¹y) - φ(τ⁻¹y')`.
#[derive(Debug, Clone)]
pub struct ShiftedPushforward<M> {
    base: M,
    tau: Diffeo,
    phi: SmoothField,
    domain: Domain,
}

/// Directions sampled when checking positivity of `G(y, ·)`.
const CHECK_DIRECTIONS: usize = 64;

impl<M: FinslerMetric> ShiftedPushforward<M> {
    pub fn new(base: M, tau: Diffeo, phi: SmoothField) -> Result<Self> {
        if !phi.has_grad() {
            return Err(Error::InvalidArgument(format!("potential '{}' has no derivative", phi.name())));
        }
        let domain = tau.image_domain(base.domain());
        Ok(Self { base, tau, phi, domain })
    }

    /// Push-forward without a potential.
    pub fn plain(base: M, tau: Diffeo) -> Self {
        let domain = tau.image_domain(base.domain());
        Self { base, tau, phi: SmoothField::constant(0.0), domain }
    }

    pub fn base(&self) -> &M {
        &self.base
    }

    pub fn tau(&self) -> &Diffeo {
        &self.tau
    }

    pub fn potential(&self) -> &SmoothField {
        &self.phi
    }

    /// Smallest sampled `G(y, v)` over unit directions `v`.
    pub fn min_unit_value(&self, y: Point) -> f64 {
        if self.dim() == 1 {
            return self.eval(y, [1.0, 0.0]).min(self.eval(y, [-1.0, 0.0]));
        }
        (0..CHECK_DIRECTIONS)
            .map(|k| {
                let t = TAU * k as f64 / CHECK_DIRECTIONS as f64;
                self.eval(y, [t.cos(), t.sin()])
            })
            .fold(f64::INFINITY, f64::min)
    }
}

impl<M: FinslerMetric> FinslerMetric for ShiftedPushforward<M> {
    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn eval(&self, y: Point, w: Point) -> f64 {
        let x = self.tau.inverse(y);
        let v = geom::mat_vec(self.tau.inverse_jacobian(y), w);
        let v = if self.base.dim() == 1 { [v[0], 0.0] } else { v };
        let dphi = self.phi.grad(x).unwrap_or([0.0, 0.0]);
        let dphi = if self.base.dim() == 1 { [dphi[0], 0.0] } else { dphi };
        self.base.eval(x, v) - geom::dot(dphi, v)
    }

    fn check_point(&self, y: Point) -> Result<()> {
        let x = self.tau.inverse(y);
        self.base.domain().check(x)?;
        self.base.check_point(x)?;
        let m = self.min_unit_value(y);
        if !(m > 0.0) {
            return Err(Error::InfeasibleDrift { point: y, value: m });
        }
        Ok(())
    }
}
