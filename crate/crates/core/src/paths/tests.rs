use super::*;
use crate::curve::{DifferentialForm, HyperellipticModel};
use crate::exact::rat;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// y^2 = x(x-1)(x-2)(x-3)(x-4), genus 2, branch point at infinity.
fn genus2() -> Arc<HyperellipticModel> {
    Arc::new(HyperellipticModel::from_i64(&[0, 24, -50, 35, -10, 1]).unwrap())
}

/// A random polyline inside a disk well away from the branch locus.
fn random_polyline(rng: &mut ChaCha8Rng, nseg: usize) -> XPath {
    let center = c(7.0, 2.0);
    let pt = |rng: &mut ChaCha8Rng| {
        center + c(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5))
    };
    let mut prev = pt(rng);
    let mut segs = Vec::new();
    for _ in 0..nseg {
        let next = pt(rng);
        segs.push(Segment::Line { a: prev, b: next });
        prev = next;
    }
    XPath { segments: segs }
}

fn random_form(rng: &mut ChaCha8Rng) -> DifferentialForm {
    DifferentialForm::Holomorphic(vec![
        c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
        c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
    ])
}

fn lift_from_principal(model: &Arc<HyperellipticModel>, xp: &XPath) -> LiftedPath {
    let x0 = match xp.segments[0] {
        Segment::Line { a, .. } => a,
        Segment::Arc { center, radius, t0, .. } => center + Complex64::from_polar(radius, t0),
        Segment::SChart { .. } => panic!("test helper: x-plane paths only"),
    };
    let start = crate::curve::CurvePoint::finite(x0, model.y_principal(x0));
    LiftedPath::lift(model, xp, &start, 1.0).unwrap()
}

#[test]
fn monodromy_around_one_branch_point_flips_the_sheet() {
    let model = genus2();
    let circle = XPath::circle(c(2.0, 0.0), 0.4, 0.0);
    let lp = lift_from_principal(&model, &circle);
    let y0 = lp.point(0.0).y;
    let y1 = lp.end_y();
    assert!((y1 + y0).norm() < 1e-9 * y0.norm(), "expected a sign flip");
}

#[test]
fn monodromy_around_two_branch_points_is_trivial() {
    let model = genus2();
    // Encloses 0 and 1, stays clear of 2.
    let circle = XPath::circle(c(0.5, 0.0), 1.2, 0.3);
    let lp = lift_from_principal(&model, &circle);
    let y0 = lp.point(0.0).y;
    let y1 = lp.end_y();
    assert!((y1 - y0).norm() < 1e-9 * y0.norm(), "expected the same sheet");
}

#[test]
fn residue_of_a_simple_pole_is_two_pi_i() {
    let model = genus2();
    let center = c(7.0, 2.0);
    let circle = XPath::circle(center, 0.8, 0.0);
    let lp = lift_from_principal(&model, &circle);
    let form = move |p: &PathPoint| p.dx / (p.x - center);
    let v = integrate_1form(&lp, &form, 1e-11).unwrap();
    let want = c(0.0, 2.0 * PI);
    assert!((v - want).norm() < 1e-9, "got {v}");
}

#[test]
fn reversal_negates_line_integrals() {
    let model = genus2();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..5 {
        let xp = random_polyline(&mut rng, 3);
        let lp = lift_from_principal(&model, &xp);
        let form = random_form(&mut rng);
        let fwd = integrate_1form(&lp, &form, 1e-11).unwrap();
        let bwd = integrate_1form(&lp.reversed(), &form, 1e-11).unwrap();
        assert!((fwd + bwd).norm() < 1e-9, "fwd {fwd}, bwd {bwd}");
    }
}

#[test]
fn out_and_back_concatenation_cancels() {
    let model = genus2();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let xp = random_polyline(&mut rng, 2);
    let lp = lift_from_principal(&model, &xp);
    let loop_path = lp.then(&lp.reversed()).unwrap();
    let form = random_form(&mut rng);
    let v = integrate_1form(&loop_path, &form, 1e-11).unwrap();
    assert!(v.norm() < 1e-9, "got {v}");
}

#[test]
fn single_form_iterated_integral_matches_line_integral() {
    let model = genus2();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let xp = random_polyline(&mut rng, 2);
    let lp = lift_from_principal(&model, &xp);
    let form = random_form(&mut rng);
    let line = integrate_1form(&lp, &form, 1e-11).unwrap();
    let iter = iterated_integral(&lp, &[&form], 1e-11).unwrap();
    assert!((line - iter).norm() < 1e-9, "line {line}, iterated {iter}");
}

#[test]
fn shuffle_product_identity_for_two_forms() {
    let model = genus2();
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..5 {
        let xp = random_polyline(&mut rng, 2);
        let lp = lift_from_principal(&model, &xp);
        let w1 = random_form(&mut rng);
        let w2 = random_form(&mut rng);
        let i1 = integrate_1form(&lp, &w1, 1e-11).unwrap();
        let i2 = integrate_1form(&lp, &w2, 1e-11).unwrap();
        let i12 = iterated_integral(&lp, &[&w1, &w2], 1e-11).unwrap();
        let i21 = iterated_integral(&lp, &[&w2, &w1], 1e-11).unwrap();
        assert!(
            (i12 + i21 - i1 * i2).norm() < 1e-8,
            "shuffle defect {}",
            (i12 + i21 - i1 * i2).norm()
        );
    }
}

#[test]
fn shuffle_product_identity_for_three_forms() {
    let model = genus2();
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let xp = random_polyline(&mut rng, 2);
    let lp = lift_from_principal(&model, &xp);
    let w1 = random_form(&mut rng);
    let w2 = random_form(&mut rng);
    let w3 = random_form(&mut rng);
    // w1 shuffled with (w2 w3): three interleavings.
    let lhs = integrate_1form(&lp, &w1, 1e-11).unwrap()
        * iterated_integral(&lp, &[&w2, &w3], 1e-11).unwrap();
    let rhs = iterated_integral(&lp, &[&w1, &w2, &w3], 1e-11).unwrap()
        + iterated_integral(&lp, &[&w2, &w1, &w3], 1e-11).unwrap()
        + iterated_integral(&lp, &[&w2, &w3, &w1], 1e-11).unwrap();
    assert!((lhs - rhs).norm() < 1e-8, "defect {}", (lhs - rhs).norm());
}

#[test]
fn chen_composition_rule() {
    let model = genus2();
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    for _ in 0..3 {
        let xa = random_polyline(&mut rng, 2);
        let alpha = lift_from_principal(&model, &xa);
        // beta starts where alpha ends, on the same sheet.
        let end_x = alpha.end().x_value().unwrap();
        let target = c(7.0, 2.0) + c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let xb = XPath::line(end_x, target);
        let beta = LiftedPath::lift(&model, &xb, alpha.end(), 1.0).unwrap();
        let ab = alpha.then(&beta).unwrap();
        let w1 = random_form(&mut rng);
        let w2 = random_form(&mut rng);
        let lhs = iterated_integral(&ab, &[&w1, &w2], 1e-11).unwrap();
        let rhs = iterated_integral(&alpha, &[&w1, &w2], 1e-11).unwrap()
            + iterated_integral(&beta, &[&w1, &w2], 1e-11).unwrap()
            + integrate_1form(&alpha, &w1, 1e-11).unwrap()
                * integrate_1form(&beta, &w2, 1e-11).unwrap();
        assert!((lhs - rhs).norm() < 1e-8, "defect {}", (lhs - rhs).norm());
    }
}

#[test]
fn reversal_rule_for_iterated_integrals() {
    let model = genus2();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let xp = random_polyline(&mut rng, 2);
    let lp = lift_from_principal(&model, &xp);
    let rev = lp.reversed();
    let w1 = random_form(&mut rng);
    let w2 = random_form(&mut rng);
    let fwd = iterated_integral(&lp, &[&w1, &w2], 1e-11).unwrap();
    let bwd = iterated_integral(&rev, &[&w2, &w1], 1e-11).unwrap();
    assert!((fwd - bwd).norm() < 1e-8, "fwd {fwd}, reversed {bwd}");
}

#[test]
fn branched_log_tracks_winding() {
    let model = genus2();
    let center = c(7.0, 2.0);
    let circle = XPath::circle(center, 0.6, 0.0);
    let lp = lift_from_principal(&model, &circle);
    let f = move |x: Complex64| x - center;
    let start = f(lp.point(0.0).x).ln();
    let log = BranchedLog::track(&lp, &f, start).unwrap();
    assert!((log.winding() - 1.0).abs() < 1e-9);
    assert!((log.end_value() - log.start_value() - c(0.0, 2.0 * PI)).norm() < 1e-9);
}

#[test]
fn lift_through_infinity_continues_the_sheet() {
    let model = genus2();
    // Out to large |x| on the negative real axis, through infinity on the
    // s-chart, back in on the positive side.
    let big = 200.0;
    let s_neg = (Complex64::new(-1.0 / big, 0.0)).sqrt(); // ~ i/sqrt(big)
    let s_pos = Complex64::new(1.0 / big.sqrt(), 0.0);
    let xp = XPath {
        segments: vec![
            Segment::Line { a: c(-20.0, 0.0), b: c(-big, 0.0) },
            Segment::SChart { a: s_neg, b: c(0.0, 0.0) },
            Segment::SChart { a: c(0.0, 0.0), b: s_pos },
            Segment::Line { a: c(big, 0.0), b: c(20.0, 0.0) },
        ],
    };
    let x0 = c(-20.0, 0.0);
    let start = crate::curve::CurvePoint::finite(x0, model.y_principal(x0));
    let lp = LiftedPath::lift(&model, &xp, &start, 1.0).unwrap();
    // The endpoint lies over x = 20 on one of the two sheets, exactly.
    let y_end = lp.end_y();
    let resid = model.residual(c(20.0, 0.0), y_end);
    assert!(resid < 1e-6, "residual {resid}");
    // And every sampled point satisfies the curve equation.
    for k in 1..200 {
        let p = lp.point(k as f64 / 200.0);
        if p.x.norm() < 1e6 {
            assert!(model.residual(p.x, p.y) < 1e-4 * (1.0 + p.x.norm().powi(5)));
        }
    }
}

#[test]
fn traced_level_set_runs_from_zero_to_pole_through_infinity() {
    let model = genus2();
    let comps = trace_gamma(&model, &rat(0), &rat(1)).unwrap();
    assert_eq!(comps.len(), 2);
    let f = |x: Complex64| x / (x - c(1.0, 0.0));
    for comp in &comps {
        // Endpoints: the Weierstrass points over x = 0 and x = 1.
        let sx = comp.start().x_value().unwrap();
        let ex = comp.end().x_value().unwrap();
        assert!(sx.norm() < 1e-9);
        assert!((ex - c(1.0, 0.0)).norm() < 1e-7, "end at {ex}");
        assert!(comp.start().y.norm() < 1e-6);
        assert!(comp.end().y.norm() < 1e-4);
        // f stays in [0, +infinity] along the trace.
        for k in 0..=400 {
            let p = comp.point(k as f64 / 400.0);
            let v = f(p.x);
            assert!(v.im.abs() < 1e-6 * (1.0 + v.norm()), "Im f = {} at t={}", v.im, p.t);
            assert!(v.re > -1e-9, "Re f = {} at t={}", v.re, p.t);
        }
    }
    // The two components are the two sheet resolutions: opposite y over the
    // same base points.
    for k in [40, 111, 222, 333] {
        let p0 = comps[0].point(k as f64 / 400.0);
        let p1 = comps[1].point(k as f64 / 400.0);
        assert!((p0.x - p1.x).norm() < 1e-9 * (1.0 + p0.x.norm()));
        if p0.y.norm() > 1e-6 && p0.x.norm() < 1e5 {
            assert!(
                (p0.y + p1.y).norm() < 1e-5 * (1.0 + p0.y.norm()),
                "sheets not opposite at t = {}",
                p0.t
            );
        }
    }
}

#[test]
fn quadrature_handles_endpoint_square_root_singularities() {
    // int_0^1 dt / sqrt(t(1-t)) = pi, via the lifted-path machinery on the
    // curve y^2 = x(x-1)(x-2)(x-3)(x-4): the form dx/y along the straight
    // segment [0, 1] has inverse square-root singularities at both ends.
    let model = genus2();
    let xp = XPath::line(c(0.0, 0.0), c(1.0, 0.0));
    let start = crate::curve::CurvePoint::weierstrass(rat(0));
    let lp = LiftedPath::lift(&model, &xp, &start, 1.0).unwrap();
    let form = |p: &PathPoint| p.dx / p.y;
    let v = integrate_1form(&lp, &form, 1e-10).unwrap();
    // Oracle: int_0^1 dx / sqrt(|x(x-1)(x-2)(x-3)(x-4)|) with the endpoint
    // singularities removed exactly by x = sin^2(theta), then dense midpoint.
    let mut oracle = 0.0f64;
    let n = 2_000_000u64;
    for k in 0..n {
        let th = (k as f64 + 0.5) / n as f64 * std::f64::consts::FRAC_PI_2;
        let x = th.sin().powi(2);
        oracle += 2.0 / ((2.0 - x) * (3.0 - x) * (4.0 - x)).sqrt();
    }
    oracle *= std::f64::consts::FRAC_PI_2 / n as f64;
    assert!(
        (v.norm() - oracle).abs() < 1e-8 * oracle,
        "got |v| = {}, oracle {}",
        v.norm(),
        oracle
    );
}
