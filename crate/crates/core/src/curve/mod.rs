//! Hyperelliptic curve models `y^2 = h(x)` with exact rational coefficients:
//! branch data, homology loops, period matrices, the harmonic dual basis and
//! Abel-Jacobi maps.
//!
//! The model itself is exact (squarefreeness is an exact gcd test); branch
//! points and all periods are floating point with certified refinement.

use crate::exact::Rat;
use crate::paths::{self, LiftedPath, OneForm, PathPoint, Segment, XPath};
use nalgebra::{Complex, DMatrix};
use num_complex::Complex64;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CurveError {
    #[error("h must have degree >= 3, got {0}")]
    DegreeTooSmall(usize),
    #[error("h has a repeated root (exact gcd(h, h') is nonconstant)")]
    NotSquarefree,
    #[error("branch-point refinement failed to reach 1e-14")]
    RootIsolation,
    #[error("branch points closer than {0:.1e}; homology construction ill-conditioned")]
    Conditioning(f64),
    #[error("period quadrature failed: {0}")]
    Quadrature(String),
    #[error("operation needs an odd-degree model (branch point at infinity)")]
    NeedsOddDegree,
    #[error("point is not on the curve: |y^2 - h(x)| = {0:.3e}")]
    NotOnCurve(f64),
    #[error("divisor must have degree zero")]
    NonzeroDegree,
}

pub type Result<T> = std::result::Result<T, CurveError>;

/// Dense univariate polynomial with exact rational coefficients, ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatPoly(Vec<Rat>);

impl RatPoly {
    pub fn new(mut coeffs: Vec<Rat>) -> Self {
        while coeffs.len() > 1 && coeffs.last().map_or(false, |c| c.is_zero()) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(Rat::zero());
        }
        RatPoly(coeffs)
    }

    pub fn from_i64(coeffs: &[i64]) -> Self {
        RatPoly::new(coeffs.iter().map(|&c| crate::exact::rat(c)).collect())
    }

    /// `(x - r_1)(x - r_2)...` from exact roots.
    pub fn from_roots(roots: &[Rat]) -> Self {
        let mut p = RatPoly(vec![Rat::one()]);
        for r in roots {
            let factor = RatPoly(vec![-r.clone(), Rat::one()]);
            p = p.mul(&factor);
        }
        p
    }

    pub fn coeffs(&self) -> &[Rat] {
        &self.0
    }

    pub fn degree(&self) -> usize {
        self.0.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|c| c.is_zero())
    }

    pub fn leading(&self) -> &Rat {
        self.0.last().unwrap()
    }

    pub fn derivative(&self) -> RatPoly {
        if self.0.len() <= 1 {
            return RatPoly(vec![Rat::zero()]);
        }
        RatPoly::new(
            self.0[1..]
                .iter()
                .enumerate()
                .map(|(i, c)| c * Rat::from_integer((i as i64 + 1).into()))
                .collect(),
        )
    }

    pub fn mul(&self, other: &RatPoly) -> RatPoly {
        let mut out = vec![Rat::zero(); self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                let t = &out[i + j] + &(a * b);
                out[i + j] = t;
            }
        }
        RatPoly::new(out)
    }

    /// Euclidean remainder.
    fn rem(&self, other: &RatPoly) -> RatPoly {
        assert!(!other.is_zero());
        let d = other.degree();
        let lead = other.leading();
        let mut r = self.0.clone();
        while r.len() > d && !(r.len() == 1 && r[0].is_zero()) {
            let rd = r.len() - 1;
            let q = &r[rd] / lead;
            for i in 0..=d {
                let t = &r[rd - d + i] - &(&q * &other.0[i]);
                r[rd - d + i] = t;
            }
            r.pop();
            while r.len() > 1 && r.last().unwrap().is_zero() {
                r.pop();
            }
        }
        RatPoly::new(r)
    }

    /// Exact polynomial gcd (monic).
    pub fn gcd(&self, other: &RatPoly) -> RatPoly {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let r = a.rem(&b);
            a = b;
            b = r;
        }
        // normalize monic
        let lead = a.leading().clone();
        if !lead.is_zero() {
            RatPoly::new(a.0.iter().map(|c| c / &lead).collect())
        } else {
            a
        }
    }

    pub fn eval_c(&self, x: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for c in self.0.iter().rev() {
            acc = acc * x + Complex64::new(rat_to_f64(c), 0.0);
        }
        acc
    }

    pub fn eval_rat(&self, x: &Rat) -> Rat {
        let mut acc = Rat::zero();
        for c in self.0.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }
}

pub fn rat_to_f64(r: &Rat) -> f64 {
    r.to_f64().expect("rational fits in f64")
}

/// The x-coordinate of a curve point: finite or the point at infinity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum XCoord {
    Finite(Complex64),
    Infinity,
}

/// A point on the double cover, with its sheet recorded through `y`.
/// Weierstrass points carry their exact rational `x` (and `y = 0` exactly).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub x: XCoord,
    pub y: Complex64,
    pub exact_x: Option<Rat>,
}

impl CurvePoint {
    pub fn finite(x: Complex64, y: Complex64) -> Self {
        CurvePoint { x: XCoord::Finite(x), y, exact_x: None }
    }

    pub fn weierstrass(x: Rat) -> Self {
        let xf = rat_to_f64(&x);
        CurvePoint {
            x: XCoord::Finite(Complex64::new(xf, 0.0)),
            y: Complex64::new(0.0, 0.0),
            exact_x: Some(x),
        }
    }

    pub fn infinity() -> Self {
        CurvePoint { x: XCoord::Infinity, y: Complex64::new(0.0, 0.0), exact_x: None }
    }

    pub fn is_infinity(&self) -> bool {
        matches!(self.x, XCoord::Infinity)
    }

    pub fn is_weierstrass(&self) -> bool {
        self.exact_x.is_some() || self.is_infinity()
    }

    pub fn x_value(&self) -> Option<Complex64> {
        match self.x {
            XCoord::Finite(x) => Some(x),
            XCoord::Infinity => None,
        }
    }
}

/// Exact plane model `y^2 = h(x)`.
#[derive(Debug, Clone)]
pub struct HyperellipticModel {
    h: RatPoly,
    genus: usize,
    branch: Vec<Complex64>,
    odd: bool,
}

impl HyperellipticModel {
    pub fn new(coeffs: Vec<Rat>) -> Result<Self> {
        let h = RatPoly::new(coeffs);
        let d = h.degree();
        if d < 3 {
            return Err(CurveError::DegreeTooSmall(d));
        }
        // Exact squarefreeness: gcd(h, h') constant.
        if h.gcd(&h.derivative()).degree() > 0 {
            return Err(CurveError::NotSquarefree);
        }
        let branch = refined_roots(&h)?;
        let genus = (d - 1) / 2;
        Ok(HyperellipticModel { h, genus, branch, odd: d % 2 == 1 })
    }

    pub fn from_i64(coeffs: &[i64]) -> Result<Self> {
        Self::new(coeffs.iter().map(|&c| crate::exact::rat(c)).collect())
    }

    pub fn h(&self) -> &RatPoly {
        &self.h
    }

    pub fn genus(&self) -> usize {
        self.genus
    }

    pub fn degree(&self) -> usize {
        self.h.degree()
    }

    /// Finite branch points, sorted by (re, im); infinity is a branch point
    /// exactly when the degree is odd.
    pub fn branch_points(&self) -> &[Complex64] {
        &self.branch
    }

    pub fn infinity_is_branch(&self) -> bool {
        self.odd
    }

    pub fn h_eval(&self, x: Complex64) -> Complex64 {
        self.h.eval_c(x)
    }

    /// `y` on some sheet at `x` (principal square root).
    pub fn y_principal(&self, x: Complex64) -> Complex64 {
        self.h_eval(x).sqrt()
    }

    /// Residual `|y^2 - h(x)|` for an on-curve check.
    pub fn residual(&self, x: Complex64, y: Complex64) -> f64 {
        (y * y - self.h_eval(x)).norm()
    }

    /// Verify that `x` is an exact branch point (rational root of h).
    pub fn is_exact_branch(&self, x: &Rat) -> bool {
        self.h.eval_rat(x).is_zero()
    }

    /// The Weierstrass point above an exact rational root of h.
    pub fn weierstrass_point(&self, x: Rat) -> Result<CurvePoint> {
        if !self.is_exact_branch(&x) {
            return Err(CurveError::NotOnCurve(rat_to_f64(&self.h.eval_rat(&x)).abs()));
        }
        Ok(CurvePoint::weierstrass(x))
    }

    /// Minimal pairwise distance between finite branch points.
    pub fn branch_separation(&self) -> f64 {
        let mut sep = f64::INFINITY;
        for i in 0..self.branch.len() {
            for j in i + 1..self.branch.len() {
                sep = sep.min((self.branch[i] - self.branch[j]).norm());
            }
        }
        sep
    }
}

/// Branch points: companion-matrix eigenvalues refined by Newton iteration
/// on the exact coefficients until the step is below 1e-14 (relative).
fn refined_roots(h: &RatPoly) -> Result<Vec<Complex64>> {
    let d = h.degree();
    let lead = h.leading();
    let mut companion = DMatrix::<f64>::zeros(d, d);
    for i in 1..d {
        companion[(i, i - 1)] = 1.0;
    }
    for i in 0..d {
        companion[(i, d - 1)] = -rat_to_f64(&(&h.coeffs()[i] / lead));
    }
    let eig = companion.complex_eigenvalues();
    let hp = h.derivative();
    let mut roots: Vec<Complex64> = Vec::with_capacity(d);
    for k in 0..d {
        let e: Complex<f64> = eig[k];
        let mut z = Complex64::new(e.re, e.im);
        let scale = z.norm().max(1.0);
        let mut converged = false;
        for _ in 0..100 {
            let f = h.eval_c(z);
            let df = hp.eval_c(z);
            if df.norm() == 0.0 {
                break;
            }
            let step = f / df;
            z -= step;
            if step.norm() <= 1e-14 * scale {
                converged = true;
                break;
            }
        }
        if !converged {
            // Accept if the residual is already at rounding level.
            if h.eval_c(z).norm() > 1e-10 * scale.powi(d as i32) {
                return Err(CurveError::RootIsolation);
            }
        }
        roots.push(z);
    }
    roots.sort_by(|a, b| {
        (a.re, a.im)
            .partial_cmp(&(b.re, b.im))
            .expect("no NaN roots")
    });
    Ok(roots)
}

/// A 1-form on the curve, as coefficients over the holomorphic basis
/// `omega_j = x^{j-1} dx / y` (j = 1..g) and its conjugates.
///
/// `Harmonic(a, b)` pulls back along a lifted path as
/// `sum a_j x^{j-1} x'/y + conj(sum b_j x^{j-1} x'/y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DifferentialForm {
    /// `sum c_j x^{j-1} dx / y`.
    Holomorphic(Vec<Complex64>),
    /// Conjugate pullback of the holomorphic form with these coefficients.
    AntiHolomorphic(Vec<Complex64>),
    /// Holomorphic part plus antiholomorphic part.
    Harmonic(Vec<Complex64>, Vec<Complex64>),
}

impl DifferentialForm {
    pub fn basis(genus: usize, j: usize) -> Self {
        assert!(j >= 1 && j <= genus);
        let mut c = vec![Complex64::new(0.0, 0.0); genus];
        c[j - 1] = Complex64::new(1.0, 0.0);
        DifferentialForm::Holomorphic(c)
    }

    pub fn conjugated(&self) -> Self {
        match self {
            DifferentialForm::Holomorphic(c) => DifferentialForm::AntiHolomorphic(c.clone()),
            DifferentialForm::AntiHolomorphic(c) => DifferentialForm::Holomorphic(c.clone()),
            DifferentialForm::Harmonic(a, b) => DifferentialForm::Harmonic(b.clone(), a.clone()),
        }
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        let sc = |v: &[Complex64]| v.iter().map(|c| c * s).collect::<Vec<_>>();
        let scb = |v: &[Complex64]| v.iter().map(|c| c * s.conj()).collect::<Vec<_>>();
        match self {
            DifferentialForm::Holomorphic(c) => DifferentialForm::Holomorphic(sc(c)),
            // Conjugate pullback: scaling the form by s scales the pullback
            // by s, which is conj-coefficient scaling inside the conjugate.
            DifferentialForm::AntiHolomorphic(c) => DifferentialForm::AntiHolomorphic(scb(c)),
            DifferentialForm::Harmonic(a, b) => DifferentialForm::Harmonic(sc(a), scb(b)),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let (a1, b1) = self.parts();
        let (a2, b2) = other.parts();
        let g = a1.len().max(a2.len());
        let mut a = vec![Complex64::new(0.0, 0.0); g];
        let mut b = vec![Complex64::new(0.0, 0.0); g];
        for j in 0..g {
            a[j] = a1.get(j).copied().unwrap_or_default() + a2.get(j).copied().unwrap_or_default();
            b[j] = b1.get(j).copied().unwrap_or_default() + b2.get(j).copied().unwrap_or_default();
        }
        DifferentialForm::Harmonic(a, b)
    }

    /// (holomorphic coefficients, antiholomorphic coefficients)
    pub fn parts(&self) -> (Vec<Complex64>, Vec<Complex64>) {
        match self {
            DifferentialForm::Holomorphic(c) => (c.clone(), vec![]),
            DifferentialForm::AntiHolomorphic(c) => (vec![], c.clone()),
            DifferentialForm::Harmonic(a, b) => (a.clone(), b.clone()),
        }
    }
}

impl OneForm for DifferentialForm {
    fn eval(&self, p: &PathPoint) -> Complex64 {
        let hol = |c: &[Complex64]| -> Complex64 {
            let mut poly = Complex64::new(0.0, 0.0);
            for cj in c.iter().rev() {
                poly = poly * p.x + *cj;
            }
            poly * p.dx / p.y
        };
        match self {
            DifferentialForm::Holomorphic(c) => hol(c),
            DifferentialForm::AntiHolomorphic(c) => hol(c).conj(),
            DifferentialForm::Harmonic(a, b) => hol(a) + hol(b).conj(),
        }
    }
}

// ---------------------------------------------------------------------------
// Homology: dumbbell loops and an exact symplectic basis
// ---------------------------------------------------------------------------

/// A basis of H_1 of the curve: 2g lifted loops, their (combinatorial)
/// intersection matrix, and an exact integer change of basis bringing the
/// intersection form to the standard symplectic form.
pub struct HomologyBasis {
    pub loops: Vec<LiftedPath>,
    /// `intersections[i][j]` = loop_i . loop_j (antisymmetric, unimodular).
    pub intersections: Vec<Vec<i64>>,
    /// Rows are the canonical cycles in loop coordinates: first the `a_k`,
    /// then the `b_k`, so that `S J S^T` is the standard symplectic form.
    pub transform: Vec<Vec<i64>>,
}

/// The closed loop over the consecutive branch pair `(e_i, e_{i+1})`: the
/// connecting segment traversed on one sheet and back on the other, turning
/// at the two Weierstrass points.  Consecutive loops meet exactly once, at
/// the shared Weierstrass point, where they cross transversally.
fn branch_pair_cycle(model: &Arc<HyperellipticModel>, i: usize) -> paths::Result<LiftedPath> {
    let e0 = model.branch_points()[i];
    let e1 = model.branch_points()[i + 1];
    let zero = Complex64::new(0.0, 0.0);
    let fwd = LiftedPath::lift(
        model,
        &XPath::line(e0, e1),
        &CurvePoint::finite(e0, zero),
        1.0,
    )?;
    let back = LiftedPath::lift(
        model,
        &XPath::line(e1, e0),
        &CurvePoint::finite(e1, zero),
        -1.0,
    )?;
    fwd.then(&back)
}

/// Sign of the transversal crossing of `li` (through its mid-turn) and `lj`
/// (through its start/end) at the shared Weierstrass point, in the complex
/// orientation.  Near a Weierstrass point `y` is a multiple of the local
/// coordinate, so tangent directions can be read off from `y` differences.
fn crossing_sign(li: &LiftedPath, lj: &LiftedPath) -> Result<i64> {
    let d = 1e-3;
    let tau1 = li.point(0.5 + d).y - li.point(0.5 - d).y;
    let tau2 = lj.point(d).y - lj.point(1.0 - d).y;
    let det = (tau1.conj() * tau2).im;
    if det.abs() < 0.3 * tau1.norm() * tau2.norm() {
        // The crossing should be essentially orthogonal.
        return Err(CurveError::Conditioning(det.abs()));
    }
    Ok(if det > 0.0 { 1 } else { -1 })
}

/// Intersection pairing `u^T J v` for integer vectors in loop coordinates.
fn pairing(j: &[Vec<i64>], u: &[i64], v: &[i64]) -> i64 {
    let n = j.len();
    let mut s = 0;
    for a in 0..n {
        if u[a] != 0 {
            for b in 0..n {
                s += u[a] * j[a][b] * v[b];
            }
        }
    }
    s
}

/// Exact symplectic Gram-Schmidt over the integers: given a unimodular
/// antisymmetric `J` (2g x 2g), return `S` with `S J S^T` the standard form
/// `[[0, I], [-I, 0]]`.  Panics if the form is degenerate.
pub fn symplectic_transform(j: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let n = j.len();
    assert!(n % 2 == 0);
    let mut pool: Vec<Vec<i64>> = (0..n)
        .map(|i| {
            let mut row = vec![0i64; n];
            row[i] = 1;
            row
        })
        .collect();
    let mut a_rows: Vec<Vec<i64>> = Vec::new();
    let mut b_rows: Vec<Vec<i64>> = Vec::new();
    while pool.len() >= 2 {
        // Minimal nonzero pairing among remaining basis vectors.
        let (mut p, mut q, mut d) = (0usize, 0usize, 0i64);
        for x in 0..pool.len() {
            for y in 0..pool.len() {
                if x == y {
                    continue;
                }
                let v = pairing(j, &pool[x], &pool[y]);
                if v != 0 && (d == 0 || v.abs() < d.abs()) {
                    p = x;
                    q = y;
                    d = v;
                }
            }
        }
        assert!(d != 0, "degenerate intersection form");
        if d < 0 {
            std::mem::swap(&mut p, &mut q);
            d = -d;
        }
        // Our combinatorial forms are unimodular with unit minimal pairing;
        // a general gcd-descent step is not needed.
        assert_eq!(d, 1, "non-unimodular intersection form");
        let e = pool.remove(p);
        let f = pool.remove(if q > p { q - 1 } else { q });
        for g in pool.iter_mut() {
            let ce = pairing(j, &e, g);
            let cf = pairing(j, &f, g);
            for a in 0..n {
                g[a] = g[a] - ce * f[a] + cf * e[a];
            }
        }
        a_rows.push(e);
        b_rows.push(f);
    }
    let mut s = a_rows;
    s.extend(b_rows);
    // Audit: S J S^T is exactly the standard form.
    let g = n / 2;
    for x in 0..n {
        for y in 0..n {
            let v = pairing(j, &s[x], &s[y]);
            let want = if x < g && y == x + g {
                1
            } else if x >= g && y == x - g {
                -1
            } else {
                0
            };
            assert_eq!(v, want, "symplectic reduction audit failed at ({x}, {y})");
        }
    }
    s
}

/// Build the 2g loops over consecutive sorted branch pairs, read off their
/// tridiagonal intersection matrix from the transversal crossings, and
/// reduce it exactly to the standard symplectic form.
pub fn homology_basis(model: &Arc<HyperellipticModel>) -> Result<HomologyBasis> {
    let g = model.genus();
    let n = 2 * g;
    let sep = model.branch_separation();
    if sep < 1e-6 {
        return Err(CurveError::Conditioning(sep));
    }
    let mut loops = Vec::with_capacity(n);
    for i in 0..n {
        let lp = branch_pair_cycle(model, i)
            .map_err(|e| CurveError::Quadrature(e.to_string()))?;
        loops.push(lp);
    }
    // Consecutive loops share one Weierstrass point and meet transversally
    // once there; all other pairs are disjoint.
    let mut j = vec![vec![0i64; n]; n];
    for i in 0..n.saturating_sub(1) {
        let s = crossing_sign(&loops[i], &loops[i + 1])?;
        j[i][i + 1] = s;
        j[i + 1][i] = -s;
    }
    let transform = symplectic_transform(&j);
    Ok(HomologyBasis { loops, intersections: j, transform })
}

// ---------------------------------------------------------------------------
// Periods
// ---------------------------------------------------------------------------

/// Raw and canonical period matrices of the holomorphic basis
/// `omega_j = x^{j-1} dx / y`.
pub struct PeriodMatrices {
    /// `raw[(i, j)]` = integral of omega_j over loop_i (2g x g).
    pub raw: DMatrix<Complex64>,
    /// a-periods (g x g): `a[(k, j)]` = integral of omega_j over a_k.
    pub a: DMatrix<Complex64>,
    /// b-periods (g x g).
    pub b: DMatrix<Complex64>,
    /// Normalized period matrix `tau` (symmetric, Im positive definite).
    pub tau: DMatrix<Complex64>,
    /// `dz_m = sum_j normalizer[(m, j)] omega_j` has a-periods `delta_{mk}`.
    pub normalizer: DMatrix<Complex64>,
}

/// The analytic package for one curve: homology plus periods.
pub struct CurveAnalytics {
    pub model: Arc<HyperellipticModel>,
    pub homology: HomologyBasis,
    pub periods: PeriodMatrices,
}

fn int_combination(rows: &DMatrix<Complex64>, coeffs: &[Vec<i64>]) -> DMatrix<Complex64> {
    let g = rows.ncols();
    DMatrix::from_fn(coeffs.len(), g, |k, j| {
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, &c) in coeffs[k].iter().enumerate() {
            if c != 0 {
                acc += Complex64::new(c as f64, 0.0) * rows[(i, j)];
            }
        }
        acc
    })
}

/// Compute periods over the homology basis and the canonical `tau`.
/// If the first symplectic orientation yields `Im tau` negative definite,
/// the (a, b) pairs are swapped to `(b, -a)`, which fixes it.
pub fn period_matrices(
    model: &Arc<HyperellipticModel>,
    homology: &mut HomologyBasis,
    tol: f64,
) -> Result<PeriodMatrices> {
    let g = model.genus();
    let n = 2 * g;
    let mut raw = DMatrix::from_element(n, g, Complex64::new(0.0, 0.0));
    for (i, lp) in homology.loops.iter().enumerate() {
        for j in 1..=g {
            let form = DifferentialForm::basis(g, j);
            let v = paths::integrate_1form(lp, &form, tol)
                .map_err(|e| CurveError::Quadrature(e.to_string()))?;
            raw[(i, j - 1)] = v;
        }
    }
    let build = |transform: &[Vec<i64>]| -> Result<PeriodMatrices> {
        let a = int_combination(&raw, &transform[..g]);
        let b = int_combination(&raw, &transform[g..]);
        // tau = A^{-T} B^{T}: solve A^T X = B^T.
        let lu = a.transpose().lu();
        let tau = lu
            .solve(&b.transpose())
            .ok_or_else(|| CurveError::Quadrature("singular a-period matrix".into()))?;
        let normalizer = a
            .transpose()
            .lu()
            .solve(&DMatrix::identity(g, g))
            .ok_or_else(|| CurveError::Quadrature("singular a-period matrix".into()))?;
        Ok(PeriodMatrices { raw: raw.clone(), a, b, tau, normalizer })
    };
    let first = build(&homology.transform)?;
    let im = DMatrix::<f64>::from_fn(g, g, |i, j| {
        0.5 * (first.tau[(i, j)].im + first.tau[(j, i)].im)
    });
    let eigs = im.symmetric_eigen().eigenvalues;
    if eigs.iter().all(|&e| e > 0.0) {
        return Ok(first);
    }
    if eigs.iter().all(|&e| e < 0.0) {
        // Symplectic substitutions preserve the sign of Im tau; a negative
        // definite Im tau means the orientation convention of the
        // intersection form is opposite to the complex orientation.  Flip
        // it: negate the pairing and swap the (a, b) halves, which is
        // symplectic for the negated form.
        for row in &mut homology.intersections {
            for v in row.iter_mut() {
                *v = -*v;
            }
        }
        let mut t2: Vec<Vec<i64>> = homology.transform[g..].to_vec();
        t2.extend(homology.transform[..g].iter().cloned());
        homology.transform = t2;
        return build(&homology.transform);
    }
    Err(CurveError::Quadrature(format!(
        "Im tau indefinite (eigenvalues {:?})",
        eigs.iter().copied().collect::<Vec<_>>()
    )))
}

/// Full analytic package: homology, periods, canonical tau.
pub fn analyze(model: &Arc<HyperellipticModel>, tol: f64) -> Result<CurveAnalytics> {
    let mut homology = homology_basis(model)?;
    let periods = period_matrices(model, &mut homology, tol)?;
    Ok(CurveAnalytics { model: Arc::clone(model), homology, periods })
}

impl CurveAnalytics {
    /// The canonical cycle `a_k` (k < g) or `b_{k-g}` (k >= g) as a formal
    /// integer combination of the dumbbell loops.
    pub fn canonical_cycle(&self, k: usize) -> &[i64] {
        &self.homology.transform[k]
    }

    /// Period of an arbitrary harmonic form over canonical cycle `k`,
    /// assembled from the raw holomorphic periods (no re-integration).
    pub fn period_of(&self, form: &DifferentialForm, k: usize) -> Complex64 {
        let (a, b) = form.parts();
        let g = self.model.genus();
        let coeffs = &self.homology.transform[k];
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, &c) in coeffs.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let mut hol = Complex64::new(0.0, 0.0);
            let mut anti = Complex64::new(0.0, 0.0);
            for j in 0..g {
                if let Some(&aj) = a.get(j) {
                    hol += aj * self.periods.raw[(i, j)];
                }
                if let Some(&bj) = b.get(j) {
                    anti += bj * self.periods.raw[(i, j)];
                }
            }
            acc += Complex64::new(c as f64, 0.0) * (hol + anti.conj());
        }
        acc
    }
}

// ---------------------------------------------------------------------------
// Harmonic dual basis
// ---------------------------------------------------------------------------

/// The 2g harmonic forms `eta_i` with `int_{c_k} eta_i = delta_{ik}` over
/// the canonical cycles `c_1..c_{2g} = a_1..a_g, b_1..b_g`.
pub fn harmonic_dual_basis(an: &CurveAnalytics) -> Result<Vec<DifferentialForm>> {
    let g = an.model.genus();
    let n = 2 * g;
    // Periods of omega_j over the canonical cycles: stack A over B.
    let pi = {
        let a = int_combination(&an.periods.raw, &an.homology.transform[..g]);
        let b = int_combination(&an.periods.raw, &an.homology.transform[g..]);
        let mut m = DMatrix::from_element(n, g, Complex64::new(0.0, 0.0));
        m.view_mut((0, 0), (g, g)).copy_from(&a);
        m.view_mut((g, 0), (g, g)).copy_from(&b);
        m
    };
    // int_c (sum a_j omega_j + conj(sum b_j omega_j)) =
    //   sum_j a_j Pi_{cj} + sum_j conj(b_j) conj(Pi_{cj});
    // unknowns (a, conj b) solve [Pi | conj Pi] x = e_i.
    let m = DMatrix::from_fn(n, n, |k, j| {
        if j < g {
            pi[(k, j)]
        } else {
            pi[(k, j - g)].conj()
        }
    });
    let sol = m
        .lu()
        .solve(&DMatrix::identity(n, n))
        .ok_or_else(|| CurveError::Quadrature("period matrix singular over R".into()))?;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let hol: Vec<Complex64> = (0..g).map(|j| sol[(j, i)]).collect();
        let anti: Vec<Complex64> = (0..g).map(|j| sol[(g + j, i)].conj()).collect();
        out.push(DifferentialForm::Harmonic(hol, anti));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Abel-Jacobi
// ---------------------------------------------------------------------------

/// Integral of the normalized basis `dz_1..dz_g` along a lifted path.
pub fn abel_jacobi_path(an: &CurveAnalytics, path: &LiftedPath, tol: f64) -> Result<Vec<Complex64>> {
    let g = an.model.genus();
    let mut omegas = Vec::with_capacity(g);
    for j in 1..=g {
        let form = DifferentialForm::basis(g, j);
        omegas.push(
            paths::integrate_1form(path, &form, tol)
                .map_err(|e| CurveError::Quadrature(e.to_string()))?,
        );
    }
    Ok((0..g)
        .map(|m| {
            (0..g)
                .map(|j| an.periods.normalizer[(m, j)] * omegas[j])
                .sum()
        })
        .collect())
}

/// Decompose `v = x + tau y` with `x`, `y` real (period lattice coordinates
/// for the lattice `Z^g + tau Z^g`).
pub fn lattice_coordinates(an: &CurveAnalytics, v: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
    let g = an.model.genus();
    let im_tau = DMatrix::<f64>::from_fn(g, g, |i, j| an.periods.tau[(i, j)].im);
    let im_v = nalgebra::DVector::from_fn(g, |i, _| v[i].im);
    let y = im_tau
        .lu()
        .solve(&im_v)
        .expect("Im tau positive definite");
    let x: Vec<f64> = (0..g)
        .map(|i| {
            v[i].re
                - (0..g)
                    .map(|j| an.periods.tau[(i, j)].re * y[j])
                    .sum::<f64>()
        })
        .collect();
    (x, y.iter().copied().collect())
}

/// Is `v` in the period lattice `Z^g + tau Z^g`, to the given tolerance?
pub fn is_lattice_point(an: &CurveAnalytics, v: &[Complex64], tol: f64) -> bool {
    let (x, y) = lattice_coordinates(an, v);
    x.iter()
        .chain(y.iter())
        .all(|&c| (c - c.round()).abs() <= tol)
}

/// Smallest `n <= bound` with `n v` in the period lattice, if any.
pub fn torsion_order(an: &CurveAnalytics, v: &[Complex64], bound: usize, tol: f64) -> Option<usize> {
    for n in 1..=bound {
        let nv: Vec<Complex64> = v.iter().map(|&c| c * n as f64).collect();
        if is_lattice_point(an, &nv, tol * n as f64) {
            return Some(n);
        }
    }
    None
}

/// An x-plane path joining two Weierstrass points by a semicircle through
/// the upper half plane (avoids collinear interior branch points).
pub fn weierstrass_join(model: &Arc<HyperellipticModel>, q: &Rat, r: &Rat) -> Result<LiftedPath> {
    let qf = rat_to_f64(q);
    let rf = rat_to_f64(r);
    let center = Complex64::new(0.5 * (qf + rf), 0.0);
    let radius = 0.5 * (rf - qf).abs();
    let (t0, t1) = if qf < rf { (PI, 0.0) } else { (0.0, PI) };
    let xp = XPath {
        segments: vec![Segment::Arc { center, radius, t0, t1 }],
    };
    let start = model
        .weierstrass_point(q.clone())
        .map_err(|_| CurveError::NotOnCurve(rat_to_f64(&model.h().eval_rat(q)).abs()))?;
    LiftedPath::lift(model, &xp, &start, 1.0)
        .map_err(|e| CurveError::Quadrature(e.to_string()))
}

#[cfg(test)]
mod tests;
