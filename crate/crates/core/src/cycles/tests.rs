use super::*;
use crate::curve::HyperellipticModel;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn genus2() -> HyperellipticModel {
    HyperellipticModel::from_i64(&[0, 24, -50, 35, -10, 1]).unwrap()
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn w(a: i64) -> PointLabel {
    PointLabel::Weierstrass(rat(a))
}

#[test]
fn divisors_of_linear_factors_have_the_expected_shape() {
    let m = genus2();
    // Branch factor: 2(a,0) - 2 inf.
    let d = divisor_of(&m, &FactoredFunction::linear(rat(3))).unwrap();
    assert_eq!(d.coeff(&w(3)), 2);
    assert_eq!(d.coeff(&PointLabel::Infinity), -2);
    assert_eq!(d.0.len(), 2);
    // Generic factor: (c,+) + (c,-) - 2 inf.
    let d = divisor_of(&m, &FactoredFunction::linear(rat(7))).unwrap();
    assert_eq!(d.coeff(&PointLabel::Generic(rat(7), Sheet::Plus)), 1);
    assert_eq!(d.coeff(&PointLabel::Generic(rat(7), Sheet::Minus)), 1);
    assert_eq!(d.coeff(&PointLabel::Infinity), -2);
    // div(y): all five Weierstrass points minus 5 inf.
    let d = divisor_of(&m, &FactoredFunction::new(vec![], 1)).unwrap();
    for a in 0..5 {
        assert_eq!(d.coeff(&w(a)), 1);
    }
    assert_eq!(d.coeff(&PointLabel::Infinity), -5);
    assert_eq!(d.degree(), 0);
}

#[test]
fn divisors_are_principal_and_multiplicative() {
    let m = genus2();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let mk = |rng: &mut ChaCha8Rng| {
            let factors = (0..rng.gen_range(1..4))
                .map(|_| (rat(rng.gen_range(-3..8)), rng.gen_range(-2..3i64)))
                .collect();
            FactoredFunction::new(factors, 2 * rng.gen_range(-1..2i64))
        };
        let f = mk(&mut rng);
        let g = mk(&mut rng);
        let df = divisor_of(&m, &f).unwrap();
        let dg = divisor_of(&m, &g).unwrap();
        assert_eq!(df.degree(), 0);
        let mut sum = df.clone();
        sum.add(&dg, 1);
        assert_eq!(sum, divisor_of(&m, &f.product(&g)).unwrap());
    }
}

#[test]
fn bloch_cycle_satisfies_the_cocycle_condition() {
    let m = genus2();
    let p = CurvePoint::finite(c(7.0, 0.0), m.y_principal(c(7.0, 0.0)));
    let z = build_z_qr(&m, &rat(0), &rat(1), &p).unwrap();
    assert_eq!(z.n, 2);
    let (ok, witness) = cocycle_check(&m, &z).unwrap();
    assert!(ok, "witness: {witness}");
    // Normalization survived the round trip.
    let (f, _) = z.diagonal_function().unwrap();
    assert!((f.eval(c(7.0, 0.0), p.y) - c(1.0, 0.0)).norm() < 1e-12);
    // Coincident points are rejected.
    assert!(matches!(
        build_z_qr(&m, &rat(1), &rat(1), &p),
        Err(CycleError::CoincidentPoints)
    ));
    assert!(matches!(
        build_z_qr(&m, &rat(0), &rat(7), &p),
        Err(CycleError::NotABranchPoint(_))
    ));
}

#[test]
fn dropping_a_component_breaks_the_cocycle() {
    let m = genus2();
    let p = CurvePoint::finite(c(7.0, 0.0), m.y_principal(c(7.0, 0.0)));
    let mut z = build_z_qr(&m, &rat(0), &rat(1), &p).unwrap();
    z.components.pop();
    let (ok, witness) = cocycle_check(&m, &z).unwrap();
    assert!(!ok);
    assert!(!witness.is_zero());
}

#[test]
fn tame_symbol_of_x_and_one_minus_x_at_zero_is_one() {
    // On the rational line: f = x, g = 1 - x = -(x - 1).
    let f = FactoredFunction::linear(rat(0));
    let g = FactoredFunction::linear(rat(1)).with_scale(c(-1.0, 0.0));
    let z = PointLabel::Generic(rat(0), Sheet::Plus);
    let v = tame_symbol(None, &f, &g, &z).unwrap();
    assert!((v - c(1.0, 0.0)).norm() < 1e-14);
    // Where neither vanishes the symbol collapses to 1.
    let z = PointLabel::Generic(rat(5), Sheet::Plus);
    let v = tame_symbol(None, &f, &g, &z).unwrap();
    assert!((v - c(1.0, 0.0)).norm() < 1e-14);
}

#[test]
fn tame_symbol_is_bilinear_in_the_second_slot() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..40 {
        let mk = |rng: &mut ChaCha8Rng| {
            let factors = (0..rng.gen_range(1..3))
                .map(|_| (rat(rng.gen_range(-2..6)), rng.gen_range(-2..3i64)))
                .collect();
            FactoredFunction::new(factors, 0)
        };
        let f = mk(&mut rng);
        let g1 = mk(&mut rng);
        let g2 = mk(&mut rng);
        for a in -2..6 {
            let z = PointLabel::Generic(rat(a), Sheet::Plus);
            let lhs = tame_symbol(None, &f, &g1.product(&g2), &z).unwrap();
            let rhs = tame_symbol(None, &f, &g1, &z).unwrap() * tame_symbol(None, &f, &g2, &z).unwrap();
            assert!(
                (lhs - rhs).norm() < 1e-9 * (1.0 + rhs.norm()),
                "at {a}: {lhs} vs {rhs}"
            );
        }
    }
}

#[test]
fn weil_reciprocity_on_the_line() {
    // The product of all local tame symbols of {f, g} is 1.
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    for _ in 0..60 {
        let mk = |rng: &mut ChaCha8Rng| {
            let factors = (0..rng.gen_range(1..4))
                .map(|_| (rat(rng.gen_range(-3..7)), rng.gen_range(-2..3i64)))
                .collect();
            FactoredFunction::new(factors, 0)
        };
        let f = mk(&mut rng);
        let g = mk(&mut rng);
        let mut prod = c(1.0, 0.0);
        for (_, v) in tame_symbol_all(None, &f, &g).unwrap() {
            prod *= v;
        }
        assert!((prod - c(1.0, 0.0)).norm() < 1e-9, "product = {prod}");
    }
}

#[test]
fn weil_reciprocity_on_the_curve_with_a_y_factor() {
    // f = y, g = x - c for generic c.  The local symbols multiply to 1, and
    // the individual values are known in closed form:
    //   at (c,+/-): +/- sqrt(h(c)); at (e_i, 0): 1/(e_i - c); at inf: 1.
    let m = genus2();
    let f = FactoredFunction::new(vec![], 1);
    for cval in [7i64, -2, 11] {
        let g = FactoredFunction::linear(rat(cval));
        let symbols = tame_symbol_all(Some(&m), &f, &g).unwrap();
        let mut prod = c(1.0, 0.0);
        for (z, v) in &symbols {
            prod *= v;
            match z {
                PointLabel::Generic(_, sheet) => {
                    let want = m.y_principal(c(cval as f64, 0.0));
                    let want = if *sheet == Sheet::Plus { want } else { -want };
                    assert!((v - want).norm() < 1e-9);
                }
                PointLabel::Weierstrass(a) => {
                    let want = 1.0 / (crate::curve::rat_to_f64(a) - cval as f64);
                    assert!((v - c(want, 0.0)).norm() < 1e-9);
                }
                PointLabel::Infinity => {
                    assert!((v - c(1.0, 0.0)).norm() < 1e-12);
                }
            }
        }
        assert!((prod - c(1.0, 0.0)).norm() < 1e-9, "c = {cval}: product = {prod}");
    }
}

#[test]
fn greedy_decomposition_conserves_the_divisor() {
    let order2 = |_: &PointLabel, _: &PointLabel| 2i64;
    // Single pair: D = 2Q - 2R gives one pair and k = 1.
    let mut d = Divisor::zero();
    d.add_point(w(0), 2);
    d.add_point(w(1), -2);
    let dec = decompose_simple(&d, &order2).unwrap();
    assert_eq!(dec.k, 1);
    assert_eq!(dec.pairs.len(), 1);
    // Two-pair shape: D = 2(P1 - P2 - P3 + P6).
    let mut d = Divisor::zero();
    d.add_point(w(0), 2);
    d.add_point(w(1), -2);
    d.add_point(w(2), -2);
    d.add_point(w(3), 2);
    let dec = decompose_simple(&d, &order2).unwrap();
    assert_eq!(dec.pairs.len(), 2);
    let mut audit = dec.total_divisor();
    audit.add(&d, -dec.k);
    assert!(audit.is_zero());
    // Odd coefficients force k = 2.
    let mut d = Divisor::zero();
    d.add_point(w(0), 1);
    d.add_point(w(1), -1);
    let dec = decompose_simple(&d, &order2).unwrap();
    assert_eq!(dec.k, 2);
    // Degree mismatch rejected.
    let mut d = Divisor::zero();
    d.add_point(w(0), 1);
    assert!(matches!(
        decompose_simple(&d, &order2),
        Err(CycleError::NotDegreeZero(1))
    ));
}

#[test]
fn assembled_cycle_of_a_decomposed_function_is_valid() {
    let m = genus2();
    let order2 = |_: &PointLabel, _: &PointLabel| 2i64;
    // f = x(x-3) / ((x-1)(x-2)): divisor 2(P0 - P1 - P2 + P3).
    let f = FactoredFunction::new(vec![(rat(0), 1), (rat(3), 1), (rat(1), -1), (rat(2), -1)], 0);
    let d = divisor_of(&m, &f).unwrap();
    let dec = decompose_simple(&d, &order2).unwrap();
    assert_eq!(dec.pairs.len(), 2);
    let z = build_z_f(&m, &f, &dec).unwrap();
    let (ok, witness) = cocycle_check(&m, &z).unwrap();
    assert!(ok, "witness: {witness}");
    // Single-pair case reproduces the simple-cycle data.
    let f = FactoredFunction::simple(rat(0), rat(1));
    let d = divisor_of(&m, &f).unwrap();
    let dec = decompose_simple(&d, &order2).unwrap();
    let z = build_z_f(&m, &f, &dec).unwrap();
    assert_eq!(z.components.len(), 3);
    let (ok, _) = cocycle_check(&m, &z).unwrap();
    assert!(ok);
    // A decomposition for the wrong function is rejected.
    let g = FactoredFunction::simple(rat(0), rat(2));
    assert!(matches!(
        build_z_f(&m, &g, &dec),
        Err(CycleError::DecompositionMismatch)
    ));
}
