//! Seeded generators of finite quasi-metrics, admissible potentials and
//! semi-Lipschitz fields. Distances are small integers and weights are
//! dyadic, so shifts and triangular functions are exact in `f64`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::field::ScalarField;
use crate::isometry::FiniteBijection;
use crate::qspace::{shift_quasimetric, FiniteQuasiMetric, Potential};
use crate::Result;

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random T1 quasi-metric on `n` points: integer arc weights in `1..=9`
/// closed under shortest paths.
pub fn random_quasi_metric(rng: &mut SeededRng, n: usize, symmetric: bool) -> FiniteQuasiMetric {
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            if symmetric && j < i {
                d[i][j] = d[j][i];
            } else {
                d[i][j] = rng.gen_range(1..=9) as f64;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    FiniteQuasiMetric::new(d).expect("closure of a positive matrix is a valid quasi-metric")
}

/// `Σ w_k h_k + offset` with `h_k ∈ {d(x_k, ·), -d(·, x_k)}` (each of forward
/// constant at most 1) and dyadic weights summing to at most `budget`.
pub fn combination(rng: &mut SeededRng, d: &FiniteQuasiMetric, budget: f64, offset: f64) -> ScalarField {
    let n = d.len();
    let terms = rng.gen_range(1..=3usize);
    let mut values = vec![offset; n];
    let mut left = budget;
    for _ in 0..terms {
        // weights on the 1/16 grid
        let max_units = (left * 16.0).floor() as i64;
        if max_units <= 0 {
            break;
        }
        let w = rng.gen_range(0..=max_units) as f64 / 16.0;
        left -= w;
        let xk = rng.gen_range(0..n);
        let outgoing = rng.gen_bool(0.5);
        for (y, v) in values.iter_mut().enumerate() {
            *v += if outgoing { w * d.d(xk, y) } else { -w * d.d(y, xk) };
        }
    }
    ScalarField::new(values)
}

/// Potential with forward constant at most 7/8, vanishing at point 0.
pub fn strict_potential(rng: &mut SeededRng, d: &FiniteQuasiMetric) -> Potential {
    let p = combination(rng, d, 0.875, 0.0);
    let base = p.get(0);
    p.map(|v| v - base)
}

/// `d(x₀, ·)`, the steepest admissible potential: the shift by it has
/// `d'(x₀, y) = 0` for every `y`.
pub fn extremal_potential(d: &FiniteQuasiMetric, x0: usize) -> Potential {
    ScalarField::new((0..d.len()).map(|y| d.d(x0, y)).collect())
}

/// Field with forward constant at most `bound` (a multiple of 1/16 up to 1).
pub fn slip_field(rng: &mut SeededRng, d: &FiniteQuasiMetric, bound: f64) -> ScalarField {
    let offset = rng.gen_range(-8..=8) as f64 / 4.0;
    combination(rng, d, bound, offset)
}

/// Arbitrary field with values on the 1/8 grid in `[-4, 4]`.
pub fn random_field(rng: &mut SeededRng, n: usize) -> ScalarField {
    ScalarField::new((0..n).map(|_| rng.gen_range(-32..=32) as f64 / 8.0).collect())
}

pub fn random_bijection(rng: &mut SeededRng, n: usize) -> FiniteBijection {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    FiniteBijection::new(p).expect("shuffled identity is a bijection")
}

/// `Y` with `d_Y(τx, τx') = d_X(x, x') + φ(x) - φ(x')`.
pub fn shifted_image(dx: &FiniteQuasiMetric, phi: &Potential, tau: &FiniteBijection) -> Result<FiniteQuasiMetric> {
    let shifted = shift_quasimetric(dx, phi)?;
    shifted.permuted(tau.inverse().image())
}

/// A random almost-isometry scenario `(d_X, d_Y, τ, φ)`.
#[derive(Debug, Clone)]
pub struct ShiftScenario {
    pub dx: FiniteQuasiMetric,
    pub dy: FiniteQuasiMetric,
    pub tau: FiniteBijection,
    pub phi: Potential,
}

/// `extremal` picks `φ = d(x₀, ·)`; otherwise a strict potential.
pub fn shift_scenario(rng: &mut SeededRng, n: usize, extremal: bool, permute: bool) -> Result<ShiftScenario> {
    let dx = random_quasi_metric(rng, n, false);
    let phi = if extremal { extremal_potential(&dx, rng.gen_range(0..n)) } else { strict_potential(rng, &dx) };
    let tau = if permute { random_bijection(rng, n) } else { FiniteBijection::identity(n) };
    let dy = shifted_image(&dx, &phi, &tau)?;
    Ok(ShiftScenario { dx, dy, tau, phi })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qspace::validate_axioms;
    use crate::slip::slip_const;

    #[test]
    fn generated_spaces_are_valid() {
        let mut r = rng(11);
        for n in 1..=8 {
            let d = random_quasi_metric(&mut r, n, false);
            assert!(validate_axioms(&d).is_valid());
            let s = random_quasi_metric(&mut r, n, true);
            assert!(s.is_symmetric() && validate_axioms(&s).is_valid());
        }
    }

    #[test]
    fn potentials_respect_their_budget() {
        let mut r = rng(5);
        for _ in 0..50 {
            let d = random_quasi_metric(&mut r, 6, false);
            assert!(slip_const(&strict_potential(&mut r, &d), &d).unwrap().forward <= 0.875);
            assert!(slip_const(&slip_field(&mut r, &d, 1.0), &d).unwrap().forward <= 1.0);
            assert_eq!(slip_const(&extremal_potential(&d, 2), &d).unwrap().forward, 1.0);
        }
    }

    #[test]
    fn scenarios_satisfy_the_displacement_identity() {
        let mut r = rng(9);
        for extremal in [false, true] {
            let s = shift_scenario(&mut r, 5, extremal, true).unwrap();
            for (a, b) in itertools::iproduct!(0..5, 0..5) {
                let lhs = s.dy.d(s.tau.apply(a), s.tau.apply(b));
                let rhs = if a == b { 0.0 } else { s.dx.d(a, b) + s.phi.get(a) - s.phi.get(b) };
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn same_seed_same_output() {
        let a = random_quasi_metric(&mut rng(3), 6, false);
        let b = random_quasi_metric(&mut rng(3), 6, false);
        assert_eq!(a, b);
    }
}
