//! Property tests of the invariants that hold for every input, not just the
//! acceptance configurations.

use num_complex::Complex64;
use proptest::prelude::*;

use plate_lab::counterexample::BlowupSchedule;
use plate_lab::grid::apply_radial_multiplier;
use plate_lab::kato_ponce::{validate_kp_indices, KpIndices};
use plate_lab::norms::{enumerate_admissible, fractional_derivative, is_admissible, lebesgue_norm};
use plate_lab::propagators::{free_plate_solution, schrodinger_flow};
use plate_lab::{dual_exponent, Exponent, Field, Grid, Rational};

fn recip(num: i64, den: i64) -> Exponent {
    Exponent::from_reciprocal(Rational::new(num, den)).unwrap()
}

fn bump(grid: Grid, cx: f64, cy: f64, w: f64, k: f64) -> Field {
    Field::from_fn(grid, |x| {
        let r2 = (x[0] - cx).powi(2) + (x[1] - cy).powi(2);
        Complex64::from_polar((-r2 / (2.0 * w * w)).exp(), k * x[0])
    })
}

fn rel(a: &Field, b: &Field) -> f64 {
    let num: f64 = a.data().iter().zip(b.data()).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.data().iter().map(|y| y.norm_sqr()).sum();
    (num / den).sqrt()
}

proptest! {
    #[test]
    fn dual_is_an_involution(den in 1i64..500, frac in 0.0f64..=1.0) {
        let num = (frac * den as f64).floor() as i64;
        let p = recip(num, den);
        let q = dual_exponent(p).unwrap();
        prop_assert_eq!(dual_exponent(q).unwrap(), p);
        prop_assert_eq!(p.reciprocal() + q.reciprocal(), Rational::from_integer(1));
    }

    #[test]
    fn exponent_display_roundtrips(den in 1i64..200, num in 0i64..400) {
        let p = recip(num, den);
        prop_assert_eq!(Exponent::parse(&p.to_string()).unwrap(), p);
    }

    #[test]
    fn sharp_line_pairs_are_admissible(d in 1usize..8, den in 1i64..60, frac in 0.0f64..=0.5) {
        // 1/r = 1/2 - 2/(dq), admissible exactly when 1/r lands in [0, 1/2]
        let iq = Rational::new((frac * den as f64).floor() as i64, den);
        let ir = Rational::new(1, 2) - Rational::from_integer(2) * iq / Rational::from_integer(d as i64);
        prop_assume!(ir >= Rational::from_integer(0));
        let (q, r) = (Exponent::from_reciprocal(iq).unwrap(), Exponent::from_reciprocal(ir).unwrap());
        let excluded = d == 2 && q == Exponent::int(2);
        prop_assert_eq!(is_admissible(q, r, d).ok, !excluded);
        // perturbing 1/r off the line always fails
        let off = Exponent::from_reciprocal(ir + Rational::new(1, 97)).unwrap();
        prop_assert!(!is_admissible(q, off, d).ok);
    }

    #[test]
    fn enumerated_pairs_pass_the_validator(d in 1usize..7, den in 1i64..30) {
        for pair in enumerate_admissible(d, den) {
            prop_assert!(is_admissible(pair.q, pair.r, d).ok);
        }
    }

    #[test]
    fn kato_ponce_swap_preserves_validity(den in 2i64..40, x in 0.0f64..1.0, y in 0.0f64..1.0, z in 0.0f64..1.0) {
        // 0 < 1/r2 < 1, 0 <= 1/r1 with 1/r = 1/r1 + 1/r2 < 1, 0 < 1/r3 <= 1/r
        let a2 = 1 + (x * (den - 1) as f64) as i64 % (den - 1);
        let a1 = (y * (den - a2) as f64) as i64 % (den - a2);
        let a3 = 1 + (z * (a1 + a2) as f64) as i64 % (a1 + a2);
        let r = recip(a1 + a2, den);
        let idx = KpIndices::new(r, recip(a1, den), recip(a2, den), recip(a3, den), recip(a1 + a2 - a3, den));
        prop_assert!(idx.is_ok(), "{:?}", idx);
        let sw = idx.unwrap().swapped();
        prop_assert!(validate_kp_indices(sw.r, sw.r1, sw.r2, sw.r3, sw.r4).ok);
    }

    #[test]
    fn schrodinger_flow_is_a_unitary_group(
        cx in -2.0f64..2.0, cy in -2.0f64..2.0, w in 0.8f64..2.0, k in -2.0f64..2.0,
        t in -50.0f64..50.0, s in -50.0f64..50.0,
    ) {
        let grid = Grid::new(2, 32, 10.0).unwrap();
        let u = bump(grid, cx, cy, w, k);
        let n0 = lebesgue_norm(&u, Exponent::int(2)).unwrap();
        let ut = schrodinger_flow(&u, t);
        prop_assert!((lebesgue_norm(&ut, Exponent::int(2)).unwrap() / n0 - 1.0).abs() < 1e-12);
        let two = schrodinger_flow(&ut, s);
        prop_assert!(rel(&two, &schrodinger_flow(&u, t + s)) < 1e-11);
        prop_assert!(rel(&schrodinger_flow(&ut, -t), &u) < 1e-12);
    }

    #[test]
    fn plate_energy_is_conserved(
        cx in -2.0f64..2.0, w in 0.8f64..2.0, k in -1.0f64..1.0, t in -20.0f64..20.0,
    ) {
        let grid = Grid::new(2, 32, 10.0).unwrap();
        let u0 = bump(grid, cx, 0.0, w, k);
        let u1 = bump(grid, 0.0, cx, w, -k);
        let e0 = free_plate_solution(&u0, &u1, 0.0).unwrap().energy();
        let et = free_plate_solution(&u0, &u1, t).unwrap().energy();
        prop_assert!((et / e0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fractional_derivatives_compose(a in 0.0f64..2.0, b in 0.0f64..2.0, w in 0.8f64..2.0) {
        let grid = Grid::new(2, 32, 10.0).unwrap();
        let u = bump(grid, 0.3, -0.2, w, 0.5);
        let ab = fractional_derivative(&fractional_derivative(&u, a).unwrap(), b).unwrap();
        let direct = fractional_derivative(&u, a + b).unwrap();
        prop_assert!(rel(&ab.to_space(), &direct.to_space()) < 1e-12);
        // |D|^2 is -Δ
        let lap = apply_radial_multiplier(&u, |k2| Complex64::new(k2, 0.0)).unwrap();
        let d2 = fractional_derivative(&u, 2.0).unwrap();
        prop_assert!(rel(&d2.to_space(), &lap.to_space()) < 1e-12);
    }

    #[test]
    fn discrete_holder_holds_exactly(
        cx in -2.0f64..2.0, w1 in 0.5f64..3.0, w2 in 0.5f64..3.0, k in -2.0f64..2.0, i1 in 1i64..6, i2 in 1i64..6,
    ) {
        // the grid quadrature is a weighted sum, so Hölder holds with constant 1
        let grid = Grid::new(2, 32, 10.0).unwrap();
        let f = bump(grid, cx, 0.0, w1, k);
        let g = bump(grid, 0.0, -cx, w2, -k);
        let (r1, r2) = (recip(i1, 12), recip(i2, 12));
        let r = recip(i1 + i2, 12);
        let lhs = lebesgue_norm(&f.pointwise_mul(&g).unwrap(), r).unwrap();
        let rhs = lebesgue_norm(&f, r1).unwrap() * lebesgue_norm(&g, r2).unwrap();
        prop_assert!(lhs <= rhs * (1.0 + 1e-12));
    }

    #[test]
    fn schedules_are_monotone(num in 9i64..40, extra in 1i64..20) {
        // g0 = 2 for (2, 3), s = 2, d = 3: any a > b > 1 is allowed
        let b = Rational::new(num, 8);
        let a = b + Rational::new(extra, 8);
        let sched = BlowupSchedule::new(Exponent::int(2), Exponent::int(3), Rational::from_integer(2), 3, a, b).unwrap();
        let starts = sched.start_times(200);
        prop_assert!(starts.windows(2).all(|p| p[1] > p[0]));
        let eps: Vec<f64> = (1..=200).map(|k| sched.epsilon(k).unwrap()).collect();
        prop_assert!(eps.windows(2).all(|p| p[1] < p[0]));
        prop_assert!(sched.epsilon(0).is_err());
    }
}
