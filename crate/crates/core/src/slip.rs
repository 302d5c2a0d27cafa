//! Semi-Lipschitz constants on finite spaces and the convex-lattice
//! operations on fields.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::qspace::FiniteQuasiMetric;

/// Residual bound for the convexity half of [`order_convex_iso_check`].
pub const CONVEXITY_TOL: f64 = 1e-9;

const PAR_THRESHOLD: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlipConstants {
    /// `sup (f(y) - f(x)) / d(x, y)` over `d(x, y) > 0`, clamped at 0.
    pub forward: f64,
    /// `sup (f(x) - f(y)) / d(x, y)` over `d(x, y) > 0`, clamped at 0.
    pub backward: f64,
    pub lipschitz: f64,
    /// Pair `(x, y)` attaining the forward quotient, if any is positive.
    pub forward_witness: Option<(usize, usize)>,
    /// Pair `(x, y)` of `d` attaining the backward quotient.
    pub backward_witness: Option<(usize, usize)>,
}

type Best = Option<(usize, usize, f64)>;

fn better(a: Best, b: Best) -> Best {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(p), Some(q)) => {
            // larger ratio wins; ties go to the lexicographically smaller pair
            if q.2 > p.2 || (q.2 == p.2 && (q.0, q.1) < (p.0, p.1)) {
                Some(q)
            } else {
                Some(p)
            }
        }
    }
}

/// Largest quotient `(v[y] - v[x]) / dist(x, y)` over ordered pairs with
/// positive distance, unclamped. `None` when no pair has positive distance.
pub fn max_quotient_by<D>(values: &[f64], dist: D) -> Best
where
    D: Fn(usize, usize) -> f64 + Sync,
{
    let n = values.len();
    let row = |x: usize| -> Best {
        let mut best: Best = None;
        for y in 0..n {
            let d = dist(x, y);
            if x != y && d > 0.0 {
                best = better(best, Some((x, y, (values[y] - values[x]) / d)));
            }
        }
        best
    };
    if n >= PAR_THRESHOLD {
        (0..n).into_par_iter().map(row).reduce(|| None, better)
    } else {
        (0..n).map(row).fold(None, better)
    }
}

/// The steepest pair of `f` on `d`, unclamped.
pub fn forward_witness(f: &ScalarField, d: &FiniteQuasiMetric) -> Result<Best> {
    f.expect_len(d.len())?;
    Ok(max_quotient_by(f.values(), |x, y| d.d(x, y)))
}

/// Forward, backward and Lipschitz constants of `f` on `d`, by exact pair
/// enumeration. On grid samples of a continuum this is a lower bound.
pub fn slip_const(f: &ScalarField, d: &FiniteQuasiMetric) -> Result<SlipConstants> {
    f.expect_len(d.len())?;
    Ok(slip_const_by(f.values(), |x, y| d.d(x, y)))
}

pub fn slip_const_by<D>(values: &[f64], dist: D) -> SlipConstants
where
    D: Fn(usize, usize) -> f64 + Sync,
{
    let fwd = max_quotient_by(values, &dist);
    // backward on d is forward on the reverse distance
    let bwd = max_quotient_by(values, |x, y| dist(y, x));
    let clamp = |b: Best| match b {
        Some((x, y, r)) if r > 0.0 => (r, Some((x, y))),
        _ => (0.0, None),
    };
    let (forward, forward_witness) = clamp(fwd);
    let (backward, bw) = clamp(bwd);
    SlipConstants {
        forward,
        backward,
        lipschitz: forward.max(backward),
        forward_witness,
        backward_witness: bw.map(|(x, y)| (y, x)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode", content = "lambda")]
pub enum LatticeMode {
    Join,
    Meet,
    Convex(f64),
}

/// Pointwise max, min, or `lambda f + (1 - lambda) g`.
pub fn lattice_combine(f: &ScalarField, g: &ScalarField, mode: LatticeMode) -> Result<ScalarField> {
    match mode {
        LatticeMode::Join => f.zip_with(g, f64::max),
        LatticeMode::Meet => f.zip_with(g, f64::min),
        LatticeMode::Convex(l) => {
            if !(0.0..=1.0).contains(&l) {
                return Err(Error::LambdaOutOfRange(l));
            }
            f.zip_with(g, |a, b| l * a + (1.0 - l) * b)
        }
    }
}

/// `||f|_S < bound` (strict) or `<= bound`.
pub fn slip_ball_member(f: &ScalarField, d: &FiniteQuasiMetric, bound: f64, strict: bool) -> Result<bool> {
    if !(bound > 0.0) {
        return Err(Error::InvalidArgument(format!("ball radius must be positive, got {bound}")));
    }
    let k = slip_const(f, d)?.forward;
    Ok(if strict { k < bound } else { k <= bound })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsoCheckEntry {
    pub pair: usize,
    pub lambda: f64,
    pub order_ok: bool,
    pub convexity_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub entries: Vec<IsoCheckEntry>,
    pub max_residual: f64,
    pub order_ok: bool,
    pub pass: bool,
}

/// Probes a black-box transform for order preservation in both directions
/// and for affinity along convex combinations of each sample pair.
pub fn order_convex_iso_check<T>(transform: T, samples: &[(ScalarField, ScalarField)], lambdas: &[f64]) -> Result<CheckReport>
where
    T: Fn(&ScalarField) -> Result<ScalarField>,
{
    let apply = |f: &ScalarField, sample: usize| {
        transform(f).map_err(|e| Error::TransformFailure { sample, reason: e.to_string() })
    };
    let mut entries = Vec::new();
    for (k, (f, g)) in samples.iter().enumerate() {
        let tf = apply(f, k)?;
        let tg = apply(g, k)?;
        let order_ok = f.dominates(g) == tf.dominates(&tg) && g.dominates(f) == tg.dominates(&tf);
        for &l in lambdas {
            let mix = lattice_combine(f, g, LatticeMode::Convex(l))?;
            let t_mix = apply(&mix, k)?;
            let mix_t = lattice_combine(&tf, &tg, LatticeMode::Convex(l))?;
            let residual = t_mix.max_abs_diff(&mix_t);
            entries.push(IsoCheckEntry { pair: k, lambda: l, order_ok, convexity_residual: residual });
        }
    }
    let max_residual = entries.iter().map(|e| e.convexity_residual).fold(0.0, f64::max);
    let order_ok = entries.iter().all(|e| e.order_ok);
    Ok(CheckReport { pass: order_ok && max_residual <= CONVEXITY_TOL, entries, max_residual, order_ok })
}
