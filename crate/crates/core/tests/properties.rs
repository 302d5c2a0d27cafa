//! Property tests of the algebraic invariants, over seeded random spaces.

use itertools::iproduct;
use proptest::prelude::*;
use qmetric::field::ScalarField;
use qmetric::finsler::{asym_dual_norm, randers_line_distance, symmetric_dual_norm, Covector, RandersStructure};
use qmetric::gen;
use qmetric::isometry::{certify_almost_isometry, FINITE_TOL};
use qmetric::qspace::{derive, shift_quasimetric, triangular, validate_axioms, DeriveMode};
use qmetric::slip::{lattice_combine, slip_const, LatticeMode};
use qmetric::transform::{order_affinity_check, transform_apply, transform_invert, TransformSpec};

/// `‖ξ|` for `F = |v| + ω·v`, by Lagrange multipliers on the unit ball.
fn randers_dual_oracle(omega: [f64; 2], xi: [f64; 2]) -> f64 {
    let w2 = omega[0] * omega[0] + omega[1] * omega[1];
    let x2 = xi[0] * xi[0] + xi[1] * xi[1];
    let xw = xi[0] * omega[0] + xi[1] * omega[1];
    (((1.0 - w2) * x2 + xw * xw).sqrt() - xw) / (1.0 - w2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generated_spaces_have_nonnegative_triangular_functions(seed: u64, n in 1usize..8, symmetric: bool) {
        let d = gen::random_quasi_metric(&mut gen::rng(seed), n, symmetric);
        prop_assert!(validate_axioms(&d).is_valid());
        for (a, b, c) in iproduct!(0..n, 0..n, 0..n) {
            prop_assert!(triangular(&d, a, b, c).unwrap() >= 0.0);
        }
    }

    #[test]
    fn shifting_preserves_triangular_functions(seed: u64, n in 2usize..8) {
        let mut rng = gen::rng(seed);
        let d = gen::random_quasi_metric(&mut rng, n, false);
        let phi = gen::slip_field(&mut rng, &d, 1.0);
        let s = shift_quasimetric(&d, &phi).unwrap();
        for (a, b, c) in iproduct!(0..n, 0..n, 0..n) {
            prop_assert_eq!(triangular(&s, a, b, c).unwrap(), triangular(&d, a, b, c).unwrap());
        }
    }

    #[test]
    fn shift_then_unshift_is_identity(seed: u64, n in 2usize..8) {
        let mut rng = gen::rng(seed);
        let d = gen::random_quasi_metric(&mut rng, n, false);
        let phi = gen::strict_potential(&mut rng, &d);
        let back = shift_quasimetric(&shift_quasimetric(&d, &phi).unwrap(), &phi.neg()).unwrap();
        prop_assert_eq!(back.matrix(), d.matrix());
    }

    #[test]
    fn reverse_is_an_involution_and_symmetrization_is_symmetric(seed: u64, n in 1usize..8) {
        let d = gen::random_quasi_metric(&mut gen::rng(seed), n, false);
        let rr = derive(&derive(&d, DeriveMode::Reverse).unwrap(), DeriveMode::Reverse).unwrap();
        prop_assert_eq!(rr.matrix(), d.matrix());
        let s = derive(&d, DeriveMode::Symmetric).unwrap();
        prop_assert!(s.is_symmetric() && validate_axioms(&s).is_valid());
    }

    #[test]
    fn unit_ball_is_a_convex_lattice(seed: u64, n in 2usize..8, l in 0.0f64..=1.0) {
        let mut rng = gen::rng(seed);
        let d = gen::random_quasi_metric(&mut rng, n, false);
        let f = gen::slip_field(&mut rng, &d, 1.0);
        let g = gen::slip_field(&mut rng, &d, 1.0);
        for mode in [LatticeMode::Join, LatticeMode::Meet, LatticeMode::Convex(l)] {
            let k = slip_const(&lattice_combine(&f, &g, mode).unwrap(), &d).unwrap().forward;
            prop_assert!(k <= 1.0 + 1e-15, "{:?}: {}", mode, k);
        }
    }

    #[test]
    fn forward_constant_of_f_is_backward_constant_of_minus_f(seed: u64, n in 2usize..8) {
        let mut rng = gen::rng(seed);
        let d = gen::random_quasi_metric(&mut rng, n, false);
        let f = gen::random_field(&mut rng, n);
        prop_assert_eq!(slip_const(&f, &d).unwrap().forward, slip_const(&f.neg(), &d).unwrap().backward);
    }

    #[test]
    fn randers_dual_norm_matches_closed_form(
        r in 0.0f64..0.9, a in 0.0f64..std::f64::consts::TAU,
        xi in prop::array::uniform2(-3.0f64..3.0), t in 0.1f64..10.0,
    ) {
        let omega = [r * a.cos(), r * a.sin()];
        let plane = RandersStructure::constant_plane(omega);
        let cv = Covector::new([0.3, -0.2], xi).unwrap();
        let norm = asym_dual_norm(&plane, &cv).unwrap();
        prop_assert!((norm - randers_dual_oracle(omega, xi)).abs() <= 1e-8 * (1.0 + norm));
        let scaled = asym_dual_norm(&plane, &Covector::new([0.3, -0.2], [t * xi[0], t * xi[1]]).unwrap()).unwrap();
        prop_assert!((scaled - t * norm).abs() <= 1e-8 * (1.0 + scaled));
        prop_assert!(norm <= symmetric_dual_norm(&plane, &cv).unwrap());
    }

    #[test]
    fn randers_line_round_trip_costs_twice_the_length(x in -4.0f64..4.0, y in -4.0f64..4.0, amp in 0.0f64..0.95) {
        let b = move |t: f64| amp * t.sin();
        let phi = move |t: f64| -amp * t.cos();
        let there = randers_line_distance(&b, Some(&phi), x, y).unwrap();
        let back = randers_line_distance(&b, Some(&phi), y, x).unwrap();
        prop_assert!((there + back - 2.0 * (x - y).abs()).abs() <= 1e-12);
    }

    #[test]
    fn composed_almost_isometries_add_potentials(seed: u64, n in 2usize..7) {
        let mut rng = gen::rng(seed);
        let first = gen::shift_scenario(&mut rng, n, false, true).unwrap();
        let phi2 = gen::strict_potential(&mut rng, &first.dy);
        let tau2 = gen::random_bijection(&mut rng, n);
        let dz = gen::shifted_image(&first.dy, &phi2, &tau2).unwrap();
        let tau = first.tau.then(&tau2).unwrap();
        let cert = certify_almost_isometry(&tau, &first.dx, &dz, FINITE_TOL).unwrap();
        let cert = cert.certificate().expect("composition is an almost isometry");
        // φ = φ₁ + φ₂ ∘ τ₁, normalized at the base point
        let total: Vec<f64> = (0..n).map(|x| first.phi.get(x) + phi2.get(first.tau.apply(x))).collect();
        let base = total[cert.base_point];
        for x in 0..n {
            prop_assert!((cert.phi[x] - (total[x] - base)).abs() <= 1e-12);
        }
    }

    #[test]
    fn transforms_invert_and_preserve_order(seed: u64, n in 1usize..8, c in prop::sample::select(vec![0.5, 1.0, 2.0, 4.0])) {
        let mut rng = gen::rng(seed);
        let t = TransformSpec::new(c, gen::random_bijection(&mut rng, n), gen::random_field(&mut rng, n)).unwrap();
        let f = gen::random_field(&mut rng, n);
        let g = f.zip_with(&gen::random_field(&mut rng, n), f64::min).unwrap();
        let round = transform_apply(&transform_invert(&t), &transform_apply(&t, &f).unwrap()).unwrap();
        prop_assert_eq!(round, f.clone());
        let report = order_affinity_check(&t, &[(g, f)], &[0.0, 0.25, 0.5, 0.75, 1.0]).unwrap();
        prop_assert!(report.pass);
        prop_assert_eq!(transform_apply(&t, &ScalarField::zeros(n)).unwrap(), t.phi().clone());
    }
}
