use super::*;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn tau_g2() -> DMatrix<Complex64> {
    DMatrix::from_row_slice(2, 2, &[c(0.1, 1.0), c(0.05, 0.3), c(0.05, 0.3), c(-0.2, 2.0)])
}

fn rand_lift(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(rows, cols, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

#[test]
fn standard_lattices_validate() {
    HodgeLattice::tate(1).validate().unwrap();
    HodgeLattice::tate(-2).validate().unwrap();
    let h1 = HodgeLattice::weight_one(&tau_g2());
    h1.validate().unwrap();
    assert_eq!(h1.rank, 4);
    assert_eq!(rank_of(&h1.f_span(1)), 2);
    assert_eq!(rank_of(&h1.f_span(0)), 4);
    assert_eq!(h1.f_span(2).ncols(), 0);
}

#[test]
fn tensor_square_has_the_right_hodge_numbers() {
    let h1 = HodgeLattice::weight_one(&tau_g2());
    let t = h1.tensor(&h1);
    t.validate().unwrap();
    assert_eq!(t.rank, 16);
    assert_eq!(t.weights(), vec![2]);
    assert_eq!(rank_of(&t.f_span(2)), 4); // (2,0)
    assert_eq!(rank_of(&t.f_span(1)), 12); // everything but (0,2)
    assert_eq!(rank_of(&t.f_span(0)), 16);
    // Tate twists multiply: Z(1) (x) Z(1) = Z(2).
    let z2 = HodgeLattice::tate(1).tensor(&HodgeLattice::tate(1));
    assert_eq!(z2.weights(), vec![-4]);
    assert_eq!(rank_of(&z2.f_span(-2)), 1);
    assert_eq!(z2.f_span(-1).ncols(), 0);
}

#[test]
fn intermediate_jacobian_examples() {
    // Z(1): C / Z with F^0 = 0 (the lattice stands for (2 pi i) Z).
    let j = intermediate_jacobian(&HodgeLattice::tate(1)).unwrap();
    assert_eq!(j.ambient_dim, 1);
    assert_eq!(j.f0.ncols(), 0);
    // Nonnegative weight rejected.
    assert!(matches!(
        intermediate_jacobian(&HodgeLattice::tate(0)),
        Err(HodgeError::NonNegativeWeight(0))
    ));
    // Hom(Z(-1), H^1) for genus 2: dim 4, F^0 of dim 2, lattice rank 4.
    let h1 = HodgeLattice::weight_one(&tau_g2());
    let j = hom_jacobian(&HodgeLattice::tate(-1), &h1).unwrap();
    assert_eq!(j.ambient_dim, 4);
    assert_eq!(rank_of(&j.f0), 2);
    assert_eq!(j.lattice.ncols(), 4);
}

#[test]
fn degenerate_jacobian_with_full_f0_kills_everything() {
    let v = HodgeLattice {
        rank: 1,
        weight_steps: vec![WeightStep { weight: -2, span: vec![vec![1]] }],
        hodge_steps: vec![HodgeStep {
            p: 0,
            span: vec![DVector::from_element(1, c(1.0, 0.0))],
        }],
        twist: 0,
    };
    let amb = intermediate_jacobian(&v).unwrap();
    let a = JacobianElement { v: DVector::from_element(1, c(0.37, -1.2)), ambient: amb.clone() };
    let zero = JacobianElement { v: DVector::from_element(1, c(0.0, 0.0)), ambient: amb };
    assert!(j_equal(&a, &zero, 1e-9).unwrap());
}

#[test]
fn tate_extension_encodes_its_defining_number() {
    // 0 -> Z(1) -> H -> Z(0) -> 0 with lift u: the class is u mod the lattice.
    let a = HodgeLattice::tate(1);
    let b = HodgeLattice::tate(0);
    let u = c(0.3, 0.7);
    let e = standard_extension(&a, &b, &DMatrix::from_element(1, 1, u));
    e.verify().unwrap();
    assert!(e.is_separated());
    let rep = carlson_representative(&e).unwrap();
    assert!((rep.v[0] - u).norm() < 1e-12);
    // Shifting the lift by a lattice vector gives the same class...
    let e2 = standard_extension(&a, &b, &DMatrix::from_element(1, 1, u + c(3.0, 0.0)));
    let rep2 = carlson_representative(&e2).unwrap();
    assert!(j_equal(&rep, &rep2, 1e-9).unwrap());
    // ...but a half-lattice shift does not.
    let e3 = standard_extension(&a, &b, &DMatrix::from_element(1, 1, u + c(0.5, 0.0)));
    let rep3 = carlson_representative(&e3).unwrap();
    assert!(!j_equal(&rep, &rep3, 1e-6).unwrap());
    // The split extension has zero class.
    let e0 = standard_extension(&a, &b, &DMatrix::from_element(1, 1, c(0.0, 0.0)));
    let rep0 = carlson_representative(&e0).unwrap();
    assert!(rep0.v[0].norm() < 1e-12);
}

#[test]
fn j_equal_decides_with_margin() {
    let amb = intermediate_jacobian(&HodgeLattice::tate(1)).unwrap();
    let mk = |z: Complex64| JacobianElement {
        v: DVector::from_element(1, z),
        ambient: amb.clone(),
    };
    let a = mk(c(0.3, 0.4));
    assert!(j_equal(&a, &a, 1e-9).unwrap());
    assert!(j_equal(&a, &mk(c(2.3, 0.4)), 1e-9).unwrap());
    assert!(!j_equal(&a, &mk(c(0.8, 0.4)), 1e-6).unwrap());
    // A residual just above tolerance is flagged, not guessed.
    assert!(matches!(
        j_equal(&a, &mk(c(0.3 + 5e-6, 0.4)), 1e-6),
        Err(HodgeError::Indeterminate(_))
    ));
}

#[test]
fn representative_is_well_defined_and_additive() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let tau1 = DMatrix::from_element(1, 1, c(0.2, 1.3));
    let a = HodgeLattice::weight_one(&tau1);
    let b = a.tensor(&a); // pure weight 2, rank 4: separated over weight 1
    for _ in 0..10 {
        let l1 = rand_lift(&mut rng, a.rank, b.rank);
        let l2 = rand_lift(&mut rng, a.rank, b.rank);
        let e1 = standard_extension(&a, &b, &l1);
        let e2 = standard_extension(&a, &b, &l2);
        e1.verify().unwrap();
        assert!(e1.is_separated());
        let r1 = carlson_representative(&e1).unwrap();
        let r2 = carlson_representative(&e2).unwrap();
        // Changing the integral retraction shifts by a lattice vector;
        // changing the filtered section shifts by F^0.  Both must vanish in
        // the Jacobian.
        let mut shifted = r1.clone();
        for i in 0..shifted.v.len() {
            shifted.v[i] += c(rng.gen_range(-3..4i32) as f64, 0.0);
        }
        if r1.ambient.f0.ncols() > 0 {
            let col = rng.gen_range(0..r1.ambient.f0.ncols());
            let coef = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            for i in 0..shifted.v.len() {
                shifted.v[i] += coef * r1.ambient.f0[(i, col)];
            }
        }
        assert!(j_equal(&r1, &shifted, 1e-9).unwrap());
        // Baer sum adds representatives.
        let sum = baer_sum(&e1, &e2).unwrap();
        let rsum = carlson_representative(&sum).unwrap();
        assert!(j_equal(&rsum, &r1.add(&r2), 1e-9).unwrap());
        // Pushforward along multiplication by 2 doubles the class.
        let g = Mat::from_fn(a.rank, a.rank, |i, j| crate::exact::rat(2 * ((i == j) as i64)));
        let pushed = pushforward(&e1, &g, &a).unwrap();
        let rp = carlson_representative(&pushed).unwrap();
        let mut doubled = r1.clone();
        doubled.v *= c(2.0, 0.0);
        doubled.ambient = rp.ambient.clone();
        assert!(j_equal(&rp, &doubled, 1e-9).unwrap());
    }
}

