//! Composition operators `Tf = c·(f ∘ τ) + φ` between spaces of
//! semi-Lipschitz functions on finite quasi-metric spaces.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::isometry::FiniteBijection;
use crate::qspace::FiniteQuasiMetric;
use crate::slip::{order_convex_iso_check, slip_const, CheckReport};

/// Residual allowed in the exact-arithmetic identities of this module.
pub const EXACT_TOL: f64 = 1e-12;

/// `Tf(x) = c·f(τ(x)) + φ(x)` for `f` on `Y` and `τ: X → Y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct TransformSpec {
    c: f64,
    tau: FiniteBijection,
    phi: ScalarField,
}

#[derive(Serialize, Deserialize)]
struct RawSpec {
    c: f64,
    tau: FiniteBijection,
    phi: ScalarField,
}

impl TryFrom<RawSpec> for TransformSpec {
    type Error = Error;

    fn try_from(r: RawSpec) -> Result<Self> {
        Self::new(r.c, r.tau, r.phi)
    }
}

impl From<TransformSpec> for RawSpec {
    fn from(t: TransformSpec) -> Self {
        RawSpec { c: t.c, tau: t.tau, phi: t.phi }
    }
}

impl TransformSpec {
    pub fn new(c: f64, tau: FiniteBijection, phi: ScalarField) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidArgument(format!("c must be positive and finite, got {c}")));
        }
        phi.expect_len(tau.len())?;
        if let Some(v) = phi.values().iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("potential value {v} is not finite")));
        }
        Ok(Self { c, tau, phi })
    }

    pub fn identity(n: usize) -> Self {
        Self { c: 1.0, tau: FiniteBijection::identity(n), phi: ScalarField::zeros(n) }
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn tau(&self) -> &FiniteBijection {
        &self.tau
    }

    pub fn phi(&self) -> &ScalarField {
        &self.phi
    }

    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }

    pub fn apply(&self, f: &ScalarField) -> Result<ScalarField> {
        transform_apply(self, f)
    }
}

pub fn transform_apply(t: &TransformSpec, f: &ScalarField) -> Result<ScalarField> {
    f.expect_len(t.len())?;
    let v = f.values();
    Ok(ScalarField::new(
        (0..t.len()).map(|x| t.c * v[t.tau.apply(x)] + t.phi.get(x)).collect(),
    ))
}

/// `T⁻¹g = c⁻¹·(g - φ) ∘ τ⁻¹`, i.e. `(1/c, τ⁻¹, -(φ ∘ τ⁻¹)/c)`.
pub fn transform_invert(t: &TransformSpec) -> TransformSpec {
    let inv = t.tau.inverse();
    let phi = ScalarField::new((0..t.len()).map(|y| -t.phi.get(inv.apply(y)) / t.c).collect());
    TransformSpec { c: 1.0 / t.c, tau: inv, phi }
}

/// One of the three elementary operators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Factor {
    /// `f ↦ f ∘ τ`.
    Compose { tau: FiniteBijection },
    /// `g ↦ c·g`.
    Scale { c: f64 },
    /// `h ↦ h + φ`.
    Shift { phi: ScalarField },
}

impl Factor {
    pub fn apply(&self, f: &ScalarField) -> Result<ScalarField> {
        match self {
            Factor::Compose { tau } => {
                f.expect_len(tau.len())?;
                Ok(ScalarField::new((0..tau.len()).map(|x| f.get(tau.apply(x))).collect()))
            }
            Factor::Scale { c } => Ok(f.scale(*c)),
            Factor::Shift { phi } => f.zip_with(phi, |a, b| a + b),
        }
    }

    /// Quasi-metric on the codomain making this factor send the unit ball of
    /// `source` onto the unit ball of the result.
    fn push_metric(&self, source: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n = source.len();
        match self {
            Factor::Compose { tau } => (0..n).map(|a| (0..n).map(|b| source[tau.apply(a)][tau.apply(b)]).collect()).collect(),
            Factor::Scale { c } => source.iter().map(|row| row.iter().map(|v| c * v).collect()).collect(),
            Factor::Shift { phi } => (0..n)
                .map(|a| (0..n).map(|b| if a == b { 0.0 } else { source[a][b] - phi.get(a) + phi.get(b) }).collect())
                .collect(),
        }
    }
}

/// `T = T₃ ∘ T₂ ∘ T₁`, stored in application order, with trivial factors omitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Factorization {
    pub factors: Vec<Factor>,
}

impl Factorization {
    pub fn apply(&self, f: &ScalarField) -> Result<ScalarField> {
        self.factors.iter().try_fold(f.clone(), |acc, t| t.apply(&acc))
    }

    /// Each factor with the distance matrices of its domain and codomain,
    /// starting from `dy` on `Y`. The last target is
    /// `d(x, x') = c·d_Y(τx, τx') - φ(x) + φ(x')`.
    pub fn annotate(&self, dy: &FiniteQuasiMetric) -> Vec<FactorLeg> {
        let mut current: Vec<Vec<f64>> = dy.matrix().to_vec();
        self.factors
            .iter()
            .map(|f| {
                let target = f.push_metric(&current);
                let leg = FactorLeg { factor: f.clone(), source: current.clone(), target: target.clone() };
                current = target;
                leg
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorLeg {
    pub factor: Factor,
    pub source: Vec<Vec<f64>>,
    pub target: Vec<Vec<f64>>,
}

pub fn transform_factor(t: &TransformSpec) -> Factorization {
    let mut factors = Vec::new();
    if !t.tau.is_identity() {
        factors.push(Factor::Compose { tau: t.tau.clone() });
    }
    if t.c != 1.0 {
        factors.push(Factor::Scale { c: t.c });
    }
    if t.phi.values().iter().any(|&v| v != 0.0) {
        factors.push(Factor::Shift { phi: t.phi.clone() });
    }
    Factorization { factors }
}

/// `max |d_T(x, x') - d_X(x, x')|` where `d_T` is the annotated target metric of
/// the factorization; zero when `T` maps the unit ball of `d_Y` onto that of `d_X`.
pub fn annotation_gap(t: &TransformSpec, dx: &FiniteQuasiMetric, dy: &FiniteQuasiMetric) -> Result<f64> {
    if dx.len() != t.len() || dy.len() != t.len() {
        return Err(Error::SizeMismatch { x: dx.len(), y: dy.len() });
    }
    let legs = transform_factor(t).annotate(dy);
    let target = legs.last().map(|l| l.target.clone()).unwrap_or_else(|| dy.matrix().to_vec());
    let n = t.len();
    Ok(itertools::iproduct!(0..n, 0..n).map(|(a, b)| (target[a][b] - dx.d(a, b)).abs()).fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantEntry {
    pub lambda: f64,
    /// `max |Tλ - T0 - cλ|`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsReport {
    pub entries: Vec<ConstantEntry>,
    pub max_residual: f64,
    /// `T1 - T0 ≡ 1`.
    pub almost_unital: bool,
    pub pass: bool,
}

/// Checks `Tλ = T0 + c·λ` on constant fields.
pub fn constants_action_check(t: &TransformSpec, lambdas: &[f64]) -> Result<ConstantsReport> {
    let n = t.len();
    let t0 = transform_apply(t, &ScalarField::zeros(n))?;
    let mut entries = Vec::with_capacity(lambdas.len());
    for &l in lambdas {
        let tl = transform_apply(t, &ScalarField::constant(n, l))?;
        let residual = tl.values().iter().zip(t0.values()).map(|(a, b)| (a - b - t.c * l).abs()).fold(0.0, f64::max);
        entries.push(ConstantEntry { lambda: l, residual });
    }
    let t1 = transform_apply(t, &ScalarField::constant(n, 1.0))?;
    let almost_unital = t1.values().iter().zip(t0.values()).all(|(a, b)| (a - b - 1.0).abs() <= EXACT_TOL);
    let max_residual = entries.iter().map(|e| e.residual).fold(0.0, f64::max);
    Ok(ConstantsReport { pass: max_residual <= EXACT_TOL, entries, max_residual, almost_unital })
}

/// Whether `‖Tf|_S` on `d_X` equals `‖f|_S` on `d_Y` for every probe field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreservationReport {
    pub fields: usize,
    /// `max |‖Tf|_S - ‖f|_S|`.
    pub max_gap: f64,
    pub preserved: bool,
    /// `c = 1`, `φ` constant and `d_Y(τx, τx') = d_X(x, x')`.
    pub predicted: bool,
    pub consistent: bool,
}

pub fn slip_preservation_probe(t: &TransformSpec, dx: &FiniteQuasiMetric, dy: &FiniteQuasiMetric, fields: &[ScalarField]) -> Result<PreservationReport> {
    if dx.len() != t.len() || dy.len() != t.len() {
        return Err(Error::SizeMismatch { x: dx.len(), y: dy.len() });
    }
    let mut max_gap: f64 = 0.0;
    for f in fields {
        let k = slip_const(f, dy)?.forward;
        let tk = slip_const(&transform_apply(t, f)?, dx)?.forward;
        max_gap = max_gap.max((tk - k).abs());
    }
    let n = t.len();
    let isometric = itertools::iproduct!(0..n, 0..n).all(|(a, b)| (dy.d(t.tau.apply(a), t.tau.apply(b)) - dx.d(a, b)).abs() <= EXACT_TOL);
    let predicted = t.c == 1.0 && t.phi.spread() <= EXACT_TOL && isometric;
    let preserved = max_gap <= EXACT_TOL;
    Ok(PreservationReport { fields: fields.len(), max_gap, preserved, predicted, consistent: preserved == predicted })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WellPosedEntry {
    /// `‖f|_S` on `d_Y`.
    pub k: f64,
    /// `(1 + k) / 2`, so that `‖f/λ|_S < 1`.
    pub lambda: f64,
    /// `λ + (1 - λ)·‖T0|_S`.
    pub bound: f64,
    /// `‖Tf|_S` on `d_X`.
    pub image_const: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WellPosedReport {
    pub t0_const: f64,
    pub entries: Vec<WellPosedEntry>,
    pub pass: bool,
}

/// For `c = 1` and fields with `‖f|_S ≤ 1` on `d_Y`, checks
/// `‖Tf|_S ≤ λ + (1 - λ)‖T0|_S` with `λ = (1 + k)/2`, hence `< 1` when `k < 1`,
/// and `‖Tf|_S ≤ 1` when `k = 1`.
pub fn well_posedness_check(t: &TransformSpec, dx: &FiniteQuasiMetric, dy: &FiniteQuasiMetric, fields: &[ScalarField]) -> Result<WellPosedReport> {
    if t.c != 1.0 {
        return Err(Error::InvalidArgument(format!("well-posedness needs c = 1, got {}", t.c)));
    }
    let t0_const = slip_const(&transform_apply(t, &ScalarField::zeros(t.len()))?, dx)?.forward;
    let mut entries = Vec::new();
    for f in fields {
        let k = slip_const(f, dy)?.forward;
        if k > 1.0 {
            continue;
        }
        let lambda = (1.0 + k) / 2.0;
        let bound = lambda + (1.0 - lambda) * t0_const;
        let image_const = slip_const(&transform_apply(t, f)?, dx)?.forward;
        let pass = image_const <= bound + EXACT_TOL && if k < 1.0 { image_const < 1.0 } else { image_const <= 1.0 + EXACT_TOL };
        entries.push(WellPosedEntry { k, lambda, bound, image_const, pass });
    }
    Ok(WellPosedReport { t0_const, pass: entries.iter().all(|e| e.pass), entries })
}

/// Order and affinity probe of `T` on field pairs.
pub fn order_affinity_check(t: &TransformSpec, pairs: &[(ScalarField, ScalarField)], lambdas: &[f64]) -> Result<CheckReport> {
    let mut report = order_convex_iso_check(|f: &ScalarField| transform_apply(t, f), pairs, lambdas)?;
    report.pass = report.order_ok && report.max_residual <= EXACT_TOL;
    Ok(report)
}

/// Recovers `(c, τ, φ)` of a composition operator given as a black box from
/// its values on `0`, `1` and the indicator fields of single points.
pub fn reconstruct_spec<T>(n: usize, transform: T) -> Result<TransformSpec>
where
    T: Fn(&ScalarField) -> Result<ScalarField>,
{
    let t0 = transform(&ScalarField::zeros(n))?;
    let t1 = transform(&ScalarField::constant(n, 1.0))?;
    let c = t1.get(0) - t0.get(0);
    let mut image = vec![usize::MAX; n];
    for y in 0..n {
        let mut e = vec![0.0; n];
        e[y] = 1.0;
        let ty = transform(&ScalarField::new(e))?;
        for x in 0..n {
            if (ty.get(x) - t0.get(x)).abs() > 0.5 * c {
                if image[x] != usize::MAX {
                    return Err(Error::NotBijective(format!("point {x} responds to two indicators")));
                }
                image[x] = y;
            }
        }
    }
    if let Some(x) = image.iter().position(|&y| y == usize::MAX) {
        return Err(Error::NotBijective(format!("point {x} responds to no indicator")));
    }
    TransformSpec::new(c, FiniteBijection::new(image)?, t0)
}
