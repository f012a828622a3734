use super::*;
use crate::exact::rat;
use num_complex::Complex64;
use std::sync::Arc;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn lemniscatic() -> Arc<HyperellipticModel> {
    // y^2 = x^3 - x, genus 1.
    Arc::new(HyperellipticModel::from_i64(&[0, -1, 0, 1]).unwrap())
}

fn genus2() -> Arc<HyperellipticModel> {
    // y^2 = x(x-1)(x-2)(x-3)(x-4), genus 2.
    Arc::new(HyperellipticModel::from_i64(&[0, 24, -50, 35, -10, 1]).unwrap())
}

fn agm(mut a: f64, mut b: f64) -> f64 {
    for _ in 0..60 {
        let an = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = an;
    }
    a
}

/// SL(2, Z)-reduce tau into the standard fundamental domain.
fn reduce_tau(mut t: Complex64) -> Complex64 {
    for _ in 0..200 {
        t = c(t.re - t.re.round(), t.im);
        if t.norm() < 1.0 - 1e-12 {
            t = -c(1.0, 0.0) / t;
        } else {
            break;
        }
    }
    t
}

#[test]
fn model_rejects_repeated_roots_and_low_degree() {
    assert!(matches!(
        HyperellipticModel::from_i64(&[0, 0, 1, 1]), // x^2(x + 1)
        Err(CurveError::NotSquarefree)
    ));
    assert!(matches!(
        HyperellipticModel::from_i64(&[1, 0, 1]),
        Err(CurveError::DegreeTooSmall(2))
    ));
}

#[test]
fn branch_points_of_the_test_curves_are_exact() {
    let m = genus2();
    assert_eq!(m.genus(), 2);
    assert!(m.infinity_is_branch());
    let b = m.branch_points();
    for (i, want) in [0.0, 1.0, 2.0, 3.0, 4.0].iter().enumerate() {
        assert!((b[i] - c(*want, 0.0)).norm() < 1e-12);
    }
    assert!(m.is_exact_branch(&rat(3)));
    assert!(!m.is_exact_branch(&rat(5)));
    assert!((m.branch_separation() - 1.0).abs() < 1e-12);
}

#[test]
fn symplectic_reduction_of_the_tridiagonal_form() {
    for g in 1..=4usize {
        let n = 2 * g;
        let mut j = vec![vec![0i64; n]; n];
        for i in 0..n - 1 {
            j[i][i + 1] = 1;
            j[i + 1][i] = -1;
        }
        // symplectic_transform panics if S J S^T is not the standard form.
        let s = symplectic_transform(&j);
        assert_eq!(s.len(), n);
    }
}

#[test]
fn elliptic_periods_match_the_arithmetic_geometric_mean() {
    let model = lemniscatic();
    let an = analyze(&model, 1e-10).unwrap();
    // |loop period of dx/y| = 2 pi / agm(1, sqrt(2)) for y^2 = x^3 - x.
    let want = 2.0 * std::f64::consts::PI / agm(1.0, 2.0f64.sqrt());
    for i in 0..2 {
        let p = an.periods.raw[(i, 0)].norm();
        assert!((p - want).abs() < 1e-8, "loop {i}: {p} vs {want}");
    }
    // The curve has complex multiplication by i: tau reduces to i.
    let tau = reduce_tau(an.periods.tau[(0, 0)]);
    assert!((tau - c(0.0, 1.0)).norm() < 1e-8, "reduced tau = {tau}");
}

#[test]
fn genus_two_tau_is_symmetric_with_positive_imaginary_part() {
    let model = genus2();
    let an = analyze(&model, 1e-10).unwrap();
    let tau = &an.periods.tau;
    for i in 0..2 {
        for j in 0..2 {
            assert!(
                (tau[(i, j)] - tau[(j, i)]).norm() < 1e-7,
                "tau not symmetric: {:?}",
                tau
            );
        }
    }
    let im = nalgebra::DMatrix::<f64>::from_fn(2, 2, |i, j| {
        0.5 * (tau[(i, j)].im + tau[(j, i)].im)
    });
    let eigs = im.symmetric_eigen().eigenvalues;
    assert!(eigs.iter().all(|&e| e > 0.0), "Im tau not positive definite");
    // Normalizer audit: N A^T = I.
    let prod = &an.periods.normalizer * an.periods.a.transpose();
    for i in 0..2 {
        for j in 0..2 {
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((prod[(i, j)] - c(want, 0.0)).norm() < 1e-9);
        }
    }
}

#[test]
fn period_reintegration_consistency() {
    // Integrating a combination form over a loop agrees with assembling the
    // period from the raw matrix.
    let model = genus2();
    let an = analyze(&model, 1e-10).unwrap();
    let form = DifferentialForm::Harmonic(vec![c(0.3, 0.1), c(-0.2, 0.5)], vec![c(1.0, -0.4), c(0.0, 0.2)]);
    for k in 0..4 {
        let assembled = an.period_of(&form, k);
        // Direct: integrate over each dumbbell loop with the transform row.
        let mut direct = c(0.0, 0.0);
        for (i, &coeff) in an.homology.transform[k].iter().enumerate() {
            if coeff != 0 {
                let v = crate::paths::integrate_1form(&an.homology.loops[i], &form, 1e-10).unwrap();
                direct += c(coeff as f64, 0.0) * v;
            }
        }
        assert!((assembled - direct).norm() < 1e-7, "cycle {k}: {assembled} vs {direct}");
    }
}

#[test]
fn harmonic_dual_basis_has_kronecker_periods() {
    let model = genus2();
    let an = analyze(&model, 1e-10).unwrap();
    let duals = harmonic_dual_basis(&an).unwrap();
    assert_eq!(duals.len(), 4);
    for (i, eta) in duals.iter().enumerate() {
        for k in 0..4 {
            let p = an.period_of(eta, k);
            let want = if i == k { 1.0 } else { 0.0 };
            assert!(
                (p - c(want, 0.0)).norm() < 1e-8,
                "period of eta_{i} over c_{k} = {p}"
            );
        }
    }
}

#[test]
fn weierstrass_differences_are_two_torsion_in_the_jacobian() {
    let model = genus2();
    let an = analyze(&model, 1e-10).unwrap();
    for (q, r) in [(0i64, 1i64), (1, 2), (0, 2)] {
        let path = weierstrass_join(&model, &rat(q), &rat(r)).unwrap();
        let v = abel_jacobi_path(&an, &path, 1e-10).unwrap();
        assert!(
            !is_lattice_point(&an, &v, 1e-4),
            "({q},0) - ({r},0) trivial in the Jacobian?"
        );
        let order = torsion_order(&an, &v, 64, 1e-6);
        assert_eq!(order, Some(2), "({q},0) - ({r},0)");
    }
}

#[test]
fn abel_jacobi_is_additive_along_concatenation() {
    let model = genus2();
    let an = analyze(&model, 1e-10).unwrap();
    let p1 = weierstrass_join(&model, &rat(0), &rat(1)).unwrap();
    // A path 1 -> 2 continuing on the sheet where p1 ended.
    let xp = XPath {
        segments: vec![Segment::Arc {
            center: c(1.5, 0.0),
            radius: 0.5,
            t0: std::f64::consts::PI,
            t1: 0.0,
        }],
    };
    let p2 = crate::paths::LiftedPath::lift(&model, &xp, p1.end(), 1.0).unwrap();
    let joined = p1.then(&p2).unwrap();
    let v1 = abel_jacobi_path(&an, &p1, 1e-10).unwrap();
    let v2 = abel_jacobi_path(&an, &p2, 1e-10).unwrap();
    let v = abel_jacobi_path(&an, &joined, 1e-10).unwrap();
    for j in 0..2 {
        assert!((v[j] - v1[j] - v2[j]).norm() < 1e-8);
    }
}

#[test]
fn branch_pair_cycles_close_with_unit_crossings() {
    let model = genus2();
    let hom = homology_basis(&model).unwrap();
    assert_eq!(hom.loops.len(), 4);
    for (i, lp) in hom.loops.iter().enumerate() {
        // Closed: both ends are the Weierstrass point over e_i.
        let sx = lp.start().x_value().unwrap();
        let ex = lp.end().x_value().unwrap();
        assert!((sx - ex).norm() < 1e-9, "loop {i} not closed");
        assert!(lp.end_y().norm() < 1e-4);
    }
    // Tridiagonal, antisymmetric, unit crossings.
    for i in 0..4 {
        for j in 0..4 {
            let v = hom.intersections[i][j];
            assert_eq!(v, -hom.intersections[j][i]);
            if j == i + 1 {
                assert_eq!(v.abs(), 1, "({i},{j})");
            } else if j > i {
                assert_eq!(v, 0, "({i},{j})");
            }
        }
    }
}
