//! Almost isometries between quasi-metric spaces: recovery of the potential,
//! certification, exhaustive search and continuum scenarios.
//!
//! A bijection `τ: X → Y` is an almost isometry when it preserves triangular
//! functions; equivalently `d_Y(τx, τx') = d_X(x, x') + φ(x) - φ(x')` for a
//! potential `φ` on `X`. It is strict when both `φ` and the potential `ψ` of
//! `τ⁻¹` have forward constant below 1.

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{arctan_potential, ScalarField, SmoothField};
use crate::finsler::{
    distance_matrix, field_slip_sup, Diffeo, Domain, FinslerMetric, RandersStructure, ShiftedPushforward, SolverOptions,
};
use crate::geom::{Point, TAU};
use crate::qspace::{FiniteQuasiMetric, Potential};
use crate::slip::slip_const_by;

pub const FINITE_TOL: f64 = 1e-9;
pub const CONTINUUM_TOL: f64 = 5e-3;
pub const DEFAULT_TRIPLES: usize = 10_000;
pub const MAX_ENUMERATION: usize = 9;

/// A bijection of `{0, .., n-1}` onto the points of another space of size `n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct FiniteBijection {
    image: Vec<usize>,
}

impl TryFrom<Vec<usize>> for FiniteBijection {
    type Error = Error;

    fn try_from(image: Vec<usize>) -> Result<Self> {
        Self::new(image)
    }
}

impl From<FiniteBijection> for Vec<usize> {
    fn from(b: FiniteBijection) -> Self {
        b.image
    }
}

impl FiniteBijection {
    pub fn new(image: Vec<usize>) -> Result<Self> {
        let n = image.len();
        let mut seen = vec![false; n];
        for (i, &j) in image.iter().enumerate() {
            if j >= n {
                return Err(Error::NotBijective(format!("point {i} maps to {j}, outside 0..{n}")));
            }
            if std::mem::replace(&mut seen[j], true) {
                return Err(Error::NotBijective(format!("point {j} is hit twice")));
            }
        }
        Ok(Self { image })
    }

    pub fn identity(n: usize) -> Self {
        Self { image: (0..n).collect() }
    }

    pub fn len(&self) -> usize {
        self.image.len()
    }

    pub fn is_empty(&self) -> bool {
        self.image.is_empty()
    }

    #[inline]
    pub fn apply(&self, i: usize) -> usize {
        self.image[i]
    }

    pub fn image(&self) -> &[usize] {
        &self.image
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.image.len()];
        for (i, &j) in self.image.iter().enumerate() {
            inv[j] = i;
        }
        Self { image: inv }
    }

    /// `then ∘ self`: first `self`, then `then`.
    pub fn then(&self, then: &Self) -> Result<Self> {
        if then.len() != self.len() {
            return Err(Error::SizeMismatch { x: self.len(), y: then.len() });
        }
        Ok(Self { image: self.image.iter().map(|&j| then.image[j]).collect() })
    }

    pub fn is_identity(&self) -> bool {
        self.image.iter().enumerate().all(|(i, &j)| i == j)
    }
}

/// `φ(x) = d_Y(τx, τx₀) - d_X(x, x₀)`.
pub fn recover_phi(tau: &FiniteBijection, dx: &FiniteQuasiMetric, dy: &FiniteQuasiMetric, x0: usize) -> Result<Potential> {
    check_sizes(tau, dx.len(), dy.len())?;
    Ok(ScalarField::new(recover_phi_raw(tau, dx.matrix(), dy.matrix(), x0)?))
}

fn recover_phi_raw(tau: &FiniteBijection, dx: &[Vec<f64>], dy: &[Vec<f64>], x0: usize) -> Result<Vec<f64>> {
    let n = dx.len();
    if x0 >= n {
        return Err(Error::UnknownBasePoint { index: x0, len: n });
    }
    let t0 = tau.apply(x0);
    Ok((0..n).map(|x| dy[tau.apply(x)][t0] - dx[x][x0]).collect())
}

fn check_sizes(tau: &FiniteBijection, nx: usize, ny: usize) -> Result<()> {
    if nx != ny {
        return Err(Error::SizeMismatch { x: nx, y: ny });
    }
    if tau.len() != nx {
        return Err(Error::NotBijective(format!("map has {} entries for a space of {nx} points", tau.len())));
    }
    Ok(())
}

/// Which triples enter the triangular residual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TripleSampling {
    All,
    /// `count` triples from a seeded Kronecker sequence.
    Sampled { count: usize, seed: u64 },
}

/// Triples `(i, j, k)` from the additive recurrence with the generalized
/// golden ratio, offset by a seeded random start.
pub fn quasi_random_triples(n: usize, count: usize, seed: u64) -> Vec<[usize; 3]> {
    // 1/g, 1/g², 1/g³ for the real root g of x⁴ = x + 1
    let g = 1.220_744_084_605_759_5_f64;
    let alpha = [1.0 / g, 1.0 / (g * g), 1.0 / (g * g * g)];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start: [f64; 3] = [rng.gen(), rng.gen(), rng.gen()];
    (1..=count)
        .map(|k| {
            let mut t = [0; 3];
            for a in 0..3 {
                let u = (start[a] + k as f64 * alpha[a]).fract();
                t[a] = ((u * n as f64) as usize).min(n - 1);
            }
            t
        })
        .collect()
}

/// Everything learnt from an accepted almost isometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlmostIsometryCertificate {
    pub tau: FiniteBijection,
    pub base_point: usize,
    /// Potential on `X`, normalized to vanish at the base point.
    pub phi: Vec<f64>,
    /// Potential of `τ⁻¹` on `Y`, normalized to vanish at `τ(base_point)`.
    pub psi: Vec<f64>,
    pub tr_residual: f64,
    /// `max |d_Y(τx, τx') - d_X(x, x') - φ(x) + φ(x')|` over all pairs.
    pub displacement_residual: f64,
    pub triples_checked: usize,
    pub phi_forward_const: f64,
    pub psi_forward_const: f64,
    pub strict: bool,
    /// `1 / (1 - max(phi_forward_const, psi_forward_const))` when strict.
    pub c: Option<f64>,
}

impl AlmostIsometryCertificate {
    /// `max φ - min φ`; zero exactly when `τ` is an isometry.
    pub fn phi_spread(&self) -> f64 {
        ScalarField::new(self.phi.clone()).spread()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum Certification {
    Accepted(AlmostIsometryCertificate),
    Rejected { worst_triple: [usize; 3], tr_residual: f64, triples_checked: usize },
}

impl Certification {
    pub fn is_accepted(&self) -> bool {
        matches!(self, Certification::Accepted(_))
    }

    pub fn certificate(&self) -> Option<&AlmostIsometryCertificate> {
        match self {
            Certification::Accepted(c) => Some(c),
            Certification::Rejected { .. } => None,
        }
    }

    pub fn tr_residual(&self) -> f64 {
        match self {
            Certification::Accepted(c) => c.tr_residual,
            Certification::Rejected { tr_residual, .. } => *tr_residual,
        }
    }
}

#[inline]
fn tr(d: &[Vec<f64>], a: usize, b: usize, c: usize) -> f64 {
    d[a][b] + d[b][c] - d[a][c]
}

#[inline]
fn tr_gap(tau: &FiniteBijection, dx: &[Vec<f64>], dy: &[Vec<f64>], t: [usize; 3]) -> f64 {
    let [a, b, c] = t;
    (tr(dy, tau.apply(a), tau.apply(b), tau.apply(c)) - tr(dx, a, b, c)).abs()
}

/// Worst triangular gap over all triples; `None` if the space is empty.
fn worst_triple_all(tau: &FiniteBijection, dx: &[Vec<f64>], dy: &[Vec<f64>]) -> Option<([usize; 3], f64)> {
    let n = dx.len();
    let mut best: Option<([usize; 3], f64)> = None;
    for (a, b, c) in itertools::iproduct!(0..n, 0..n, 0..n) {
        let g = tr_gap(tau, dx, dy, [a, b, c]);
        if best.map_or(true, |(_, w)| g > w) {
            best = Some(([a, b, c], g));
        }
    }
    best
}

/// True as soon as one triple exceeds `tol`.
fn exceeds(tau: &FiniteBijection, dx: &[Vec<f64>], dy: &[Vec<f64>], tol: f64) -> bool {
    let n = dx.len();
    itertools::iproduct!(0..n, 0..n, 0..n).any(|(a, b, c)| !(tr_gap(tau, dx, dy, [a, b, c]) <= tol))
}

/// Certifies `τ` between two finite quasi-metrics using every triple.
pub fn certify_almost_isometry(tau: &FiniteBijection, dx: &FiniteQuasiMetric, dy: &FiniteQuasiMetric, tol: f64) -> Result<Certification> {
    check_sizes(tau, dx.len(), dy.len())?;
    certify_matrices(tau, dx.matrix(), dy.matrix(), tol, TripleSampling::All)
}

/// Certification on raw distance matrices (for instance sampled from a
/// continuum), with a choice of triples.
pub fn certify_matrices(tau: &FiniteBijection, dx: &[Vec<f64>], dy: &[Vec<f64>], tol: f64, sampling: TripleSampling) -> Result<Certification> {
    check_sizes(tau, dx.len(), dy.len())?;
    if !(tol >= 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be nonnegative, got {tol}")));
    }
    let n = dx.len();
    if n == 0 {
        return Err(Error::InvalidArgument("cannot certify maps between empty spaces".into()));
    }
    let (worst, tr_residual, triples_checked) = match sampling {
        TripleSampling::All => {
            let (w, r) = worst_triple_all(tau, dx, dy).expect("nonempty");
            (w, r, n * n * n)
        }
        TripleSampling::Sampled { count, seed } => {
            let triples = quasi_random_triples(n, count.max(1), seed);
            let (w, r) = triples
                .iter()
                .map(|&t| (t, tr_gap(tau, dx, dy, t)))
                .fold(([0; 3], f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
            (w, r, triples.len())
        }
    };
    if !(tr_residual <= tol) {
        return Ok(Certification::Rejected { worst_triple: worst, tr_residual, triples_checked });
    }
    Ok(Certification::Accepted(build_certificate(tau, dx, dy, tr_residual, triples_checked, 0)?))
}

fn build_certificate(
    tau: &FiniteBijection,
    dx: &[Vec<f64>],
    dy: &[Vec<f64>],
    tr_residual: f64,
    triples_checked: usize,
    x0: usize,
) -> Result<AlmostIsometryCertificate> {
    let n = dx.len();
    let phi = recover_phi_raw(tau, dx, dy, x0)?;
    let inv = tau.inverse();
    let psi = recover_phi_raw(&inv, dy, dx, tau.apply(x0))?;
    let displacement_residual = itertools::iproduct!(0..n, 0..n)
        .map(|(a, b)| (dy[tau.apply(a)][tau.apply(b)] - dx[a][b] - phi[a] + phi[b]).abs())
        .fold(0.0, f64::max);
    let phi_forward_const = slip_const_by(&phi, |a, b| dx[a][b]).forward;
    let psi_forward_const = slip_const_by(&psi, |a, b| dy[a][b]).forward;
    let alpha = phi_forward_const.max(psi_forward_const);
    let strict = phi_forward_const < 1.0 && psi_forward_const < 1.0;
    Ok(AlmostIsometryCertificate {
        tau: tau.clone(),
        base_point: x0,
        phi,
        psi,
        tr_residual,
        displacement_residual,
        triples_checked,
        phi_forward_const,
        psi_forward_const,
        strict,
        c: strict.then(|| 1.0 / (1.0 - alpha)),
    })
}

/// Every bijection accepted by [`certify_almost_isometry`], in lexicographic
/// order of the image vectors.
pub fn enumerate_almost_isometries(dx: &FiniteQuasiMetric, dy: &FiniteQuasiMetric, tol: f64) -> Result<Vec<AlmostIsometryCertificate>> {
    let n = dx.len();
    if n != dy.len() {
        return Err(Error::SizeMismatch { x: n, y: dy.len() });
    }
    if n > MAX_ENUMERATION {
        return Err(Error::TooLarge { n, max: MAX_ENUMERATION });
    }
    let perms: Vec<Vec<usize>> = (0..n).permutations(n).collect();
    let found: Vec<Option<Result<AlmostIsometryCertificate>>> = perms
        .into_par_iter()
        .map(|p| {
            let tau = FiniteBijection { image: p };
            if exceeds(&tau, dx.matrix(), dy.matrix(), tol) {
                return None;
            }
            Some(certify_almost_isometry(&tau, dx, dy, tol).map(|c| match c {
                Certification::Accepted(c) => c,
                Certification::Rejected { .. } => unreachable!("all triples were within tolerance"),
            }))
        })
        .collect();
    found.into_iter().flatten().collect()
}

/// Direct check of `c⁻¹ d_X ≤ d_Y ∘ (τ × τ) ≤ c d_X`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    /// Some finite `c` works: `d_Y/d_X` is bounded above and away from 0
    /// over pairs, and `d_X` and `d_Y` vanish on the same pairs.
    pub bi_lipschitz: bool,
    /// `min d_Y / d_X` over pairs with `d_X > 0`.
    pub min_ratio: f64,
    /// `max d_Y / d_X` over pairs with `d_X > 0`.
    pub max_ratio: f64,
    /// `1 / (1 - α)` when `α < 1`.
    pub c: Option<f64>,
    /// The sandwich holds at `c` (relative slack `1e-12`).
    pub holds_at_c: bool,
    /// `bi_lipschitz && holds_at_c`.
    pub verdict: bool,
}

/// Brute-force strictness check for `τ` with `α` the larger forward constant.
pub fn sandwich_check(tau: &FiniteBijection, dx: &FiniteQuasiMetric, dy: &FiniteQuasiMetric, alpha: f64) -> Result<SandwichReport> {
    check_sizes(tau, dx.len(), dy.len())?;
    let n = dx.len();
    let mut min_ratio = f64::INFINITY;
    let mut max_ratio: f64 = 0.0;
    let mut zero_mismatch = false;
    for (a, b) in itertools::iproduct!(0..n, 0..n) {
        if a == b {
            continue;
        }
        let (x, y) = (dx.d(a, b), dy.d(tau.apply(a), tau.apply(b)));
        if x > 0.0 {
            min_ratio = min_ratio.min(y / x);
            max_ratio = max_ratio.max(y / x);
        } else if y > 0.0 {
            zero_mismatch = true;
        }
    }
    let bi_lipschitz = !zero_mismatch && min_ratio > 0.0 && max_ratio.is_finite();
    let c = (alpha < 1.0).then(|| 1.0 / (1.0 - alpha));
    let slack = 1e-12;
    let holds_at_c = c.is_some_and(|c| {
        itertools::iproduct!(0..n, 0..n).all(|(a, b)| {
            let (x, y) = (dx.d(a, b), dy.d(tau.apply(a), tau.apply(b)));
            x / c <= y * (1.0 + slack) + slack * f64::MIN_POSITIVE && y <= c * x * (1.0 + slack)
        })
    });
    Ok(SandwichReport { bi_lipschitz, min_ratio, max_ratio, c, holds_at_c, verdict: bi_lipschitz && holds_at_c })
}

/// Summary of a certification run on points sampled from a continuum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuumReport {
    pub samples: Vec<Point>,
    pub certification: Certification,
    /// `max ‖dφ|_F` over a derivative grid, when `φ` is known in closed form.
    pub phi_derivative_sup: Option<f64>,
}

/// Identity map from the Euclidean line to the line `F = |v| - φ'(x) v`,
/// `φ(x) = x - arctan x`, sampled at `samples` points of `[-r, r]`.
pub fn randers_line_certification(r: f64, samples: usize, opts: &SolverOptions, tol: f64, seed: u64) -> Result<ContinuumReport> {
    if !(r > 0.0) || samples < 2 {
        return Err(Error::InvalidArgument(format!("need r > 0 and at least 2 samples (r = {r}, samples = {samples})")));
    }
    let pts: Vec<Point> = (0..samples).map(|k| [-r + 2.0 * r * k as f64 / (samples - 1) as f64, 0.0]).collect();
    let fx = RandersStructure::euclidean_line();
    let fy = RandersStructure::arctan_line();
    let dx = distance_matrix(&fx, &pts, opts)?;
    let dy = distance_matrix(&fy, &pts, opts)?;
    let certification = certify_matrices(
        &FiniteBijection::identity(samples),
        &dx,
        &dy,
        tol,
        TripleSampling::Sampled { count: DEFAULT_TRIPLES, seed },
    )?;
    let sup = field_slip_sup(&fx, &arctan_potential(), Some(&Domain::interval(-r, r)), 2 * samples - 1)?.value;
    Ok(ContinuumReport { samples: pts, certification, phi_derivative_sup: Some(sup) })
}

/// Outcome of the circle scan for one amplitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompactScanReport {
    pub amplitude: f64,
    pub rotation: f64,
    pub samples: usize,
    pub accepted: bool,
    pub tr_residual: f64,
    pub displacement_residual: f64,
    pub phi_forward_const: f64,
    pub psi_forward_const: f64,
    pub strict: bool,
    pub c: Option<f64>,
    /// `1 - max(phi_forward_const, psi_forward_const)`.
    pub margin: f64,
    /// `1 - amplitude`, the margin predicted from `sup |φ'|`.
    pub expected_margin: f64,
    /// Deviation of the recovered `φ` from `a sin θ` (after removing the base value).
    pub phi_error: f64,
}

/// `F` Euclidean on the circle, `τ` a rotation, `G = τ_*F - d(φ ∘ τ⁻¹)` with
/// `φ = a sin θ`; certifies `τ: (S¹, d_F) → (S¹, d_G)` from sampled distances.
pub fn compact_strictness_scan(amplitude: f64, rotation: f64, samples: usize, opts: &SolverOptions, tol: f64, seed: u64) -> Result<CompactScanReport> {
    if samples < 3 {
        return Err(Error::InvalidArgument(format!("need at least 3 samples, got {samples}")));
    }
    let f = RandersStructure::euclidean_circle();
    let a = amplitude;
    let phi = SmoothField::line(format!("{a} sin"), move |t| a * t.sin(), move |t| a * t.cos());
    let tau = Diffeo::Rotate(rotation);
    let g = ShiftedPushforward::new(f.clone(), tau.clone(), phi.clone())?;
    let xs: Vec<Point> = (0..samples).map(|k| [TAU * k as f64 / samples as f64, 0.0]).collect();
    let ys: Vec<Point> = xs.iter().map(|&x| tau.forward(x)).collect();
    for &y in &ys {
        g.check_point(y)?;
    }
    let dx = distance_matrix(&f, &xs, opts)?;
    let dy = distance_matrix(&g, &ys, opts)?;
    let cert = certify_matrices(
        &FiniteBijection::identity(samples),
        &dx,
        &dy,
        tol,
        TripleSampling::Sampled { count: DEFAULT_TRIPLES, seed },
    )?;
    let expected_margin = 1.0 - a.abs();
    Ok(match cert {
        Certification::Accepted(c) => {
            let p0 = phi.eval(xs[0]);
            let phi_error = xs.iter().zip(&c.phi).map(|(&x, &v)| (v - (phi.eval(x) - p0)).abs()).fold(0.0, f64::max);
            CompactScanReport {
                amplitude,
                rotation,
                samples,
                accepted: true,
                tr_residual: c.tr_residual,
                displacement_residual: c.displacement_residual,
                phi_forward_const: c.phi_forward_const,
                psi_forward_const: c.psi_forward_const,
                strict: c.strict,
                c: c.c,
                margin: 1.0 - c.phi_forward_const.max(c.psi_forward_const),
                expected_margin,
                phi_error,
            }
        }
        Certification::Rejected { tr_residual, .. } => CompactScanReport {
            amplitude,
            rotation,
            samples,
            accepted: false,
            tr_residual,
            displacement_residual: f64::NAN,
            phi_forward_const: f64::NAN,
            psi_forward_const: f64::NAN,
            strict: false,
            c: None,
            margin: f64::NAN,
            expected_margin,
            phi_error: f64::NAN,
        },
    })
}
