//! Smooth approximation of semi-Lipschitz fields on the line by convolution
//! with a compactly supported mollifier.

use std::sync::{Arc, OnceLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dual::{asym_dual_norm, Covector};
use super::quad::{adaptive_integrate, GaussLegendre};
use super::{line_distance_table, Domain, FinslerMetric};
use crate::error::{Error, Result};
use crate::field::{GridField, SmoothField};
use crate::slip::slip_const_by;

/// Verification grid refinement factor relative to the input grid.
pub const VERIFY_FACTOR: usize = 10;
/// Largest length of one quadrature panel in the kernel variable `t ∈ (-1, 1)`.
const MAX_PANEL: f64 = 1.0 / 32.0;
const PANEL_NODES: usize = 8;

fn kernel(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - t * t)).exp()
    }
}

fn kernel_mass() -> f64 {
    static MASS: OnceLock<f64> = OnceLock::new();
    *MASS.get_or_init(|| adaptive_integrate(&kernel, -1.0, 1.0, 1e-15))
}

/// `ρ(t) = exp(-1 / (1 - t²)) / Z` on `(-1, 1)`, zero elsewhere, `∫ρ = 1`.
pub fn mollifier(t: f64) -> f64 {
    kernel(t) / kernel_mass()
}

/// `ρ'(t)`.
pub fn mollifier_derivative(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        return 0.0;
    }
    let s = 1.0 - t * t;
    mollifier(t) * (-2.0 * t / (s * s))
}

/// `f ∗ ρ_δ` for a piecewise-linear grid field `f`.
#[derive(Debug, Clone)]
struct Convolution {
    f: Arc<GridField>,
    delta: f64,
    rule: Arc<GaussLegendre>,
}

impl Convolution {
    /// `(∫ f(x - δt) w(t) dt, ∫ w(t) dt)` over `(-1, 1)` with the same panels,
    /// split at the kinks of `t ↦ f(x - δt)`.
    fn integrate(&self, x: f64, w: impl Fn(f64) -> f64) -> (f64, f64) {
        let g = &self.f.grid;
        let h = g.spacing();
        // kinks at t = (x - node) / δ, restricted to (-1, 1), ascending in t
        let lo_node = (((x - self.delta - g.min) / h).ceil().max(0.0)) as usize;
        let hi_node = (((x + self.delta - g.min) / h).floor().min((g.n - 1) as f64)).max(-1.0);
        let mut cuts = vec![-1.0];
        if hi_node >= 0.0 {
            for k in (lo_node..=hi_node as usize).rev() {
                let t = (x - g.node(k)) / self.delta;
                if t > -1.0 && t < 1.0 {
                    cuts.push(t);
                }
            }
        }
        cuts.push(1.0);
        let mut total = 0.0;
        let mut mass = 0.0;
        for pair in cuts.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if b <= a {
                continue;
            }
            let pieces = ((b - a) / MAX_PANEL).ceil().max(1.0) as usize;
            let step = (b - a) / pieces as f64;
            for p in 0..pieces {
                let s = a + p as f64 * step;
                for (&node, &weight) in self.rule.nodes().iter().zip(self.rule.weights()) {
                    let t = s + step * node;
                    let wt = weight * step * w(t);
                    total += self.f.eval(x - self.delta * t) * wt;
                    mass += wt;
                }
            }
        }
        (total, mass)
    }

    /// Normalized by the discrete kernel mass, so constants are reproduced exactly.
    fn value(&self, x: f64) -> f64 {
        let (total, mass) = self.integrate(x, mollifier);
        total / mass
    }

    /// `g'(x) = (1/δ) ∫ (f(x - δt) - f(x)) ρ'(t) dt`, using `∫ρ' = 0`.
    fn derivative(&self, x: f64) -> f64 {
        let (total, mass) = self.integrate(x, mollifier_derivative);
        (total - self.f.eval(x) * mass) / self.delta
    }
}

#[derive(Debug, Clone)]
pub struct SmoothingResult {
    pub field: SmoothField,
    pub delta: f64,
    pub eps: f64,
    pub r: f64,
    /// `sup |g - f|` on the verification grid.
    pub sup_error: f64,
    /// Forward constant of `f` from pair quotients on the verification grid.
    pub f_slip: f64,
    /// Forward constant of `g` from pair quotients on the verification grid.
    pub g_slip: f64,
    /// `max ‖dg(x)|_F` over the verification grid.
    pub g_slip_derivative: f64,
    pub verification_nodes: usize,
    /// Widths tried, largest first.
    pub widths_tried: Vec<f64>,
}

/// Serializable summary of a [`SmoothingResult`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothingSummary {
    pub delta: f64,
    pub eps: f64,
    pub r: f64,
    pub sup_error: f64,
    pub f_slip: f64,
    pub g_slip: f64,
    pub g_slip_derivative: f64,
    pub verification_nodes: usize,
    pub bound_i: bool,
    pub bound_ii: bool,
}

impl SmoothingResult {
    /// `sup |g - f| ≤ ε`.
    pub fn bound_i(&self) -> bool {
        self.sup_error <= self.eps
    }

    /// `‖g|_S ≤ ‖f|_S + r`, with `‖g|_S` the larger of the two measurements.
    pub fn bound_ii(&self) -> bool {
        self.g_slip.max(self.g_slip_derivative) <= self.f_slip + self.r
    }

    pub fn summary(&self) -> SmoothingSummary {
        SmoothingSummary {
            delta: self.delta,
            eps: self.eps,
            r: self.r,
            sup_error: self.sup_error,
            f_slip: self.f_slip,
            g_slip: self.g_slip,
            g_slip_derivative: self.g_slip_derivative,
            verification_nodes: self.verification_nodes,
            bound_i: self.bound_i(),
            bound_ii: self.bound_ii(),
        }
    }
}

/// Mollifies `f` with the largest dyadic width whose measured `sup |g - f|`
/// on a 10× finer grid is at most `eps`, then measures both constants on that
/// grid with distances of `metric` (a line structure).
pub fn smooth_slip_approx<M: FinslerMetric + ?Sized>(metric: &M, f: &GridField, eps: f64, r: f64) -> Result<SmoothingResult> {
    if !(eps > 0.0 && eps.is_finite()) || !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidArgument(format!("eps and r must be positive, got {eps} and {r}")));
    }
    if !matches!(metric.domain(), Domain::Line { .. }) {
        return Err(Error::InvalidArgument("smoothing needs a line structure".into()));
    }
    let grid = f.grid;
    let spacing = grid.spacing();
    let verify = grid.refined(VERIFY_FACTOR);
    let nodes = verify.nodes();
    let f_values: Vec<f64> = nodes.iter().map(|&x| f.eval(x)).collect();
    let shared = Arc::new(f.clone());
    let rule = Arc::new(GaussLegendre::new(PANEL_NODES));

    let half_range = 0.5 * (grid.max - grid.min);
    let mut delta = 2f64.powi(half_range.log2().ceil() as i32);
    let mut widths_tried = Vec::new();
    let (conv, g_values, sup_error) = loop {
        if delta < spacing {
            return Err(Error::WidthUnderflow { spacing, eps });
        }
        widths_tried.push(delta);
        let conv = Convolution { f: shared.clone(), delta, rule: rule.clone() };
        let g_values: Vec<f64> = nodes.par_iter().map(|&x| conv.value(x)).collect();
        let err = g_values.iter().zip(&f_values).map(|(g, f)| (g - f).abs()).fold(0.0, f64::max);
        if err <= eps {
            break (conv, g_values, err);
        }
        delta *= 0.5;
    };

    let table = line_distance_table(metric, &nodes, 4)?;
    let f_slip = slip_const_by(&f_values, |i, j| table.d(i, j)).forward;
    let g_slip = slip_const_by(&g_values, |i, j| table.d(i, j)).forward;
    let derivs: Vec<Result<f64>> = nodes
        .par_iter()
        .map(|&x| asym_dual_norm(metric, &Covector::line(x, conv.derivative(x))?))
        .collect();
    let mut g_slip_derivative: f64 = 0.0;
    for d in derivs {
        g_slip_derivative = g_slip_derivative.max(d?);
    }

    let value_conv = conv.clone();
    let grad_conv = conv;
    let field = SmoothField::new(
        format!("mollified(delta = {delta})"),
        move |p| value_conv.value(p[0]),
        move |p| [grad_conv.derivative(p[0]), 0.0],
    );
    Ok(SmoothingResult {
        field,
        delta,
        eps,
        r,
        sup_error,
        f_slip,
        g_slip,
        g_slip_derivative,
        verification_nodes: nodes.len(),
        widths_tried,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Grid1;
    use crate::finsler::RandersStructure;

    #[test]
    fn mollifier_has_unit_mass() {
        let rule = GaussLegendre::new(12);
        let mass: f64 = (0..64).map(|k| {
            let a = -1.0 + k as f64 / 32.0;
            rule.integrate(a, a + 1.0 / 32.0, mollifier)
        }).sum();
        assert!((mass - 1.0).abs() < 1e-12, "{mass}");
        assert_eq!(mollifier(1.0), 0.0);
        assert!(mollifier(0.0) > mollifier(0.5));
    }

    #[test]
    fn ramp_is_smoothed_within_bounds() {
        let grid = Grid1::new(-2.0, 2.0, 81).unwrap();
        let f = GridField::sample(grid, |x| x.max(0.0));
        let line = RandersStructure::euclidean_line();
        let res = smooth_slip_approx(&line, &f, 0.1, 0.05).unwrap();
        assert!(res.bound_i() && res.bound_ii(), "{:?}", res.summary());
        assert!(res.g_slip <= 1.0 + 1e-9, "{}", res.g_slip);
        assert!((res.f_slip - 1.0).abs() < 1e-12);
        // the derivative obtained from ρ' matches a centred difference of g
        for x in [-0.3, 0.0, 0.2] {
            let h = 1e-5;
            let fd = (res.field.eval1(x + h) - res.field.eval1(x - h)) / (2.0 * h);
            assert!((fd - res.field.grad([x, 0.0]).unwrap()[0]).abs() < 1e-6);
        }
    }

    #[test]
    fn constant_field_is_reproduced() {
        let grid = Grid1::new(0.0, 1.0, 11).unwrap();
        let f = GridField::sample(grid, |_| 2.5);
        let res = smooth_slip_approx(&RandersStructure::euclidean_line(), &f, 1e-9, 0.1).unwrap();
        assert!(res.sup_error < 1e-12);
        assert_eq!(res.widths_tried.len(), 1);
    }

    #[test]
    fn smooth_input_error_scales_with_delta_squared() {
        let grid = Grid1::new(-1.0, 1.0, 2001).unwrap();
        let f = Arc::new(GridField::sample(grid, |x| x * x));
        let rule = Arc::new(GaussLegendre::new(PANEL_NODES));
        let m2 = adaptive_integrate(&|t| t * t * mollifier(t), -1.0, 1.0, 1e-14);
        for delta in [0.1, 0.05] {
            let c = Convolution { f: f.clone(), delta, rule: rule.clone() };
            // (x²) ∗ ρ_δ = x² + δ² ∫ t² ρ
            let err = c.value(0.2) - 0.04;
            assert!((err - delta * delta * m2).abs() < 1e-6, "{err}");
        }
    }

    #[test]
    fn impossible_accuracy_underflows() {
        let grid = Grid1::new(-1.0, 1.0, 5).unwrap();
        let f = GridField::sample(grid, |x| x.abs());
        assert!(matches!(
            smooth_slip_approx(&RandersStructure::euclidean_line(), &f, 1e-6, 0.1),
            Err(Error::WidthUnderflow { .. })
        ));
    }
}
