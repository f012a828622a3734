use super::*;
use crate::curve::analyze;
use std::sync::Arc;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// y^2 = x(x-1)(x-2)(x-3)(x-4), the standard genus-2 instance.
fn genus2() -> Arc<HyperellipticModel> {
    Arc::new(HyperellipticModel::from_i64(&[0, 24, -50, 35, -10, 1]).unwrap())
}

fn simple_cycle(model: &Arc<HyperellipticModel>) -> SimpleCycle {
    let p = CurvePoint::finite(c(7.0, 0.0), model.y_principal(c(7.0, 0.0)));
    SimpleCycle::build(model, &crate::exact::rat(0), &crate::exact::rat(3), &p).unwrap()
}

#[test]
fn simple_cycle_construction_and_guards() {
    let model = genus2();
    let cyc = simple_cycle(&model);
    assert_eq!(cyc.n, 2);
    assert!((cyc.scale - 4.0 / 7.0).abs() < 1e-12);
    assert_eq!(cyc.gamma.len(), 2);
    // The normalization fixes f = 1 at the base point.
    assert!((cyc.f(c(7.0, 0.0)) - c(1.0, 0.0)).norm() < 1e-12);
    // f is 0 at Q and has a pole at R, so gamma runs between them.
    assert!(cyc.f(c(0.0, 0.0)).norm() < 1e-12);

    // Endpoints must be distinct branch x-values.
    let p = CurvePoint::finite(c(7.0, 0.0), model.y_principal(c(7.0, 0.0)));
    assert!(matches!(
        SimpleCycle::build(&model, &crate::exact::rat(0), &crate::exact::rat(0), &p),
        Err(RegError::BadEndpoints)
    ));
    assert!(matches!(
        SimpleCycle::build(&model, &crate::exact::rat(0), &crate::exact::rat(5), &p),
        Err(RegError::BadEndpoints)
    ));
    // A base point between the endpoints gives a negative scale.
    let bad = CurvePoint::finite(c(1.5, 0.0), model.y_principal(c(1.5, 0.0)));
    assert!(matches!(
        SimpleCycle::build(&model, &crate::exact::rat(0), &crate::exact::rat(3), &bad),
        Err(RegError::BadScale(_))
    ));
}

#[test]
fn branch_cut_log_has_argument_in_upper_range() {
    let model = genus2();
    let cyc = simple_cycle(&model);
    // Sample away from the level set: the argument must lie in (0, 2 pi]
    // and log_cut must exponentiate back to f.
    for &(re, im) in &[(0.5, 0.4), (0.5, -0.4), (-2.0, 1.0), (4.0, -0.3), (1.7, 0.01)] {
        let x = c(re, im);
        let l = cyc.log_cut(x);
        assert!(l.im > 0.0 && l.im <= 2.0 * PI + 1e-12, "arg {} out of range", l.im);
        assert!((l.exp() - cyc.f(x)).norm() < 1e-10 * (1.0 + cyc.f(x).norm()));
    }
}

#[test]
fn shuffle_identity_on_gamma_components() {
    let model = genus2();
    let an = analyze(&model, 1e-10).unwrap();
    let cyc = simple_cycle(&model);
    let duals = harmonic_dual_basis(&an).unwrap();
    let dz0 = normalized_form(&an, 0);
    for comp in &cyc.gamma {
        let i1 = paths::integrate_1form(comp, &dz0, 1e-9).unwrap();
        let i2 = paths::integrate_1form(comp, &duals[0], 1e-9).unwrap();
        let it = paths::iterated_integral(comp, &[&dz0, &duals[0]], 1e-9).unwrap();
        let it_rev = paths::iterated_integral(comp, &[&duals[0], &dz0], 1e-9).unwrap();
        assert!((it + it_rev - i1 * i2).norm() < 1e-8);
    }
}

#[test]
fn reversal_identity_packages_the_gamma_term() {
    // N pi i times the (psi, phi) iterated integral over the reversed
    // components equals 2 pi i times the (phi, psi) integral over the
    // components themselves (N = 2 components of equal contribution).
    let model = genus2();
    let an = analyze(&model, 1e-10).unwrap();
    let cyc = simple_cycle(&model);
    let duals = harmonic_dual_basis(&an).unwrap();
    let dz0 = normalized_form(&an, 0);
    let fwd = gamma_iterated(&cyc, &duals[0], &dz0, 1e-9).unwrap();
    let mut rev = Complex64::new(0.0, 0.0);
    for comp in &cyc.gamma {
        rev += paths::iterated_integral(&comp.reversed(), &[&dz0, &duals[0]], 1e-9).unwrap();
    }
    let lhs = c(0.0, PI * cyc.n as f64) * rev;
    let rhs = c(0.0, 2.0 * PI) * fwd;
    assert!((lhs - rhs).norm() < 1e-8, "lhs {lhs} rhs {rhs}");
}

#[test]
fn disc_quadrature_matches_iterated_integral_on_a_join() {
    // Cheap disc-lemma check on the two-segment Weierstrass join; the full
    // gamma components are exercised by the acceptance suite.
    let model = genus2();
    let an = analyze(&model, 1e-10).unwrap();
    let duals = harmonic_dual_basis(&an).unwrap();
    let dz0 = normalized_form(&an, 0);
    let j = crate::curve::weierstrass_join(&model, &crate::exact::rat(0), &crate::exact::rat(1))
        .unwrap();
    let it = paths::iterated_integral(&j, &[&dz0, &duals[1]], 1e-9).unwrap();
    let disc = disc_integral(&j, &dz0, &duals[1], 1e-7).unwrap();
    assert!((disc - it).norm() < 1e-6, "disc {disc} iterated {it}");
}

#[test]
fn wedge_pairing_matches_surface_quadrature() {
    let model = genus2();
    let an = analyze(&model, 1e-10).unwrap();
    let duals = harmonic_dual_basis(&an).unwrap();
    let dz0 = normalized_form(&an, 0);
    let exact = wedge_pairing(&an, &duals[0], &dz0);
    let quad = wedge_quadrature(&model, &duals[0], &dz0, 1e-4).unwrap();
    assert!((exact - quad).norm() < 1e-3, "exact {exact} quad {quad}");
}

#[test]
fn decomposable_regulator_is_log_linear_and_vanishes_at_one() {
    let model = genus2();
    let an = analyze(&model, 1e-10).unwrap();
    let duals = harmonic_dual_basis(&an).unwrap();
    let dz1 = normalized_form(&an, 1);
    let one = decomposable_regulator(&an, 1.0, &duals[0], &dz1).unwrap();
    assert_eq!(one, Complex64::new(0.0, 0.0));
    let two = decomposable_regulator(&an, 2.0, &duals[0], &dz1).unwrap();
    let four = decomposable_regulator(&an, 4.0, &duals[0], &dz1).unwrap();
    assert!((four - two * 2.0).norm() < 1e-12 * (1.0 + two.norm()));
    assert!(decomposable_regulator(&an, -1.0, &duals[0], &dz1).is_err());
    assert!(decomposable_regulator(&an, 0.0, &duals[0], &dz1).is_err());
}

#[test]
fn real_regulator_entries_are_finite() {
    let model = genus2();
    let an = analyze(&model, 1e-10).unwrap();
    let cyc = simple_cycle(&model);
    for i in 0..2 {
        let v = real_regulator_entry(&an, &cyc, i, 0, 1e-7).unwrap();
        assert!(v.is_finite());
    }
}
