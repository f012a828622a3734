//! Regulator evaluation for simple cycles on odd-degree hyperelliptic curves.
//!
//! A *simple cycle* is attached to two Weierstrass points `Q = (q, 0)` and
//! `R = (r, 0)` together with the normalized function
//! `f = s (x - q)/(x - r)`, where the positive scale `s` is fixed by
//! `f(P) = 1` at a chosen real base point.  Since `2(Q - R)` is principal,
//! the level set `gamma = f^{-1}([0, infinity])` consists of `N = 2` lifted
//! components running from `Q` to `R` through infinity, and the regulator
//! pairing against a 2-form `phi (x) psi` splits into
//!
//! * a surface term: the integral of `log f  phi ^ psi` over the curve cut
//!   along `gamma`, with the branch of the logarithm taken with argument in
//!   `(0, 2 pi)` (continuous off the level set), and
//! * a correction term supported on `gamma`: `N pi i` times the length-two
//!   iterated integral of `psi, phi` over the reversed components, which by
//!   the reversal identity equals `2 pi i` times the iterated integral of
//!   `phi, psi` over the components with their own orientation.
//!
//! The same two ingredients, evaluated on the harmonic dual basis element
//! `dx_j` against a normalized holomorphic `dz_i` and multiplied by the
//! curve degree `2g + 1`, give the closed form of the extension-class
//! pairing ([`carlson_pairing`]); [`main_theorem_check`] compares the two
//! routes modulo the `2 pi i`-period ambiguity and reports the fitted
//! proportionality factor.
//!
//! Supporting oracles: [`disc_integral`] evaluates the Bloch disc spanned
//! between the diagonal and `gamma` by genuine 2-D quadrature, which must
//! reproduce the iterated integral; [`colombo_identity_check`] verifies the
//! loop/surface exchange identity `int_alpha Theta = int_{C - gamma}
//! phi_alpha ^ Theta + 2 pi i int_gamma phi_alpha psi` for `Theta = log f
//! dz_i` and `alpha` a loop disjoint from `gamma`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

use crate::curve::{
    self, harmonic_dual_basis, rat_to_f64, CurveAnalytics, CurvePoint, DifferentialForm,
    HyperellipticModel,
};
use crate::exact::Rat;
use crate::paths::{self, integrate_1form, iterated_integral, trace_gamma, LiftedPath, PathPoint};

#[cfg(test)]
mod tests;

#[derive(Debug, Error)]
pub enum RegError {
    #[error("curve error: {0}")]
    Curve(#[from] curve::CurveError),
    #[error("path error: {0}")]
    Path(#[from] paths::PathError),
    #[error("endpoints must be distinct branch x-values of the model")]
    BadEndpoints,
    #[error("base point gives normalization scale {0}, which is not positive real")]
    BadScale(Complex64),
    #[error("2-D quadrature stalled at error {achieved} (requested {requested})")]
    Tolerance { requested: f64, achieved: f64 },
    #[error("loop is not an integer homology class (period {0})")]
    NotIntegral(Complex64),
    #[error("form or cycle index out of range")]
    BadIndex,
    #[error("decomposable parameter must be positive, got {0}")]
    BadParameter(f64),
}

pub type Result<T> = std::result::Result<T, RegError>;

// ---------------------------------------------------------------------------
// The simple cycle and its branch-cut logarithm
// ---------------------------------------------------------------------------

/// Geometric data of a simple cycle: the two Weierstrass endpoints, the
/// positive normalization scale, and the traced components of the level set
/// `gamma = f^{-1}([0, infinity])`, each lifted from `Q` to `R`.
pub struct SimpleCycle {
    pub model: Arc<HyperellipticModel>,
    pub q: Rat,
    pub r: Rat,
    /// `f = scale (x - q)/(x - r)` with `f(base point) = 1`.
    pub scale: f64,
    /// Order of `Q - R` in the Jacobian (2 for distinct Weierstrass points).
    pub n: i64,
    pub gamma: Vec<LiftedPath>,
}

impl SimpleCycle {
    /// Build the cycle for branch x-values `q`, `r` and a base point `P`
    /// off the level set.  The normalization `f(P) = 1` must yield a
    /// positive real scale, so that scaling does not move the cut.
    pub fn build(
        model: &Arc<HyperellipticModel>,
        q: &Rat,
        r: &Rat,
        p: &CurvePoint,
    ) -> Result<Self> {
        if q == r || !model.is_exact_branch(q) || !model.is_exact_branch(r) {
            return Err(RegError::BadEndpoints);
        }
        let px = p.x_value().ok_or(RegError::BadEndpoints)?;
        let s = (px - Complex64::new(rat_to_f64(r), 0.0)) / (px - Complex64::new(rat_to_f64(q), 0.0));
        if s.im.abs() > 1e-9 * (1.0 + s.norm()) || s.re <= 0.0 {
            return Err(RegError::BadScale(s));
        }
        let gamma = trace_gamma(model, q, r)?;
        Ok(SimpleCycle {
            model: Arc::clone(model),
            q: q.clone(),
            r: r.clone(),
            scale: s.re,
            n: 2,
            gamma,
        })
    }

    /// `f(x) = scale (x - q)/(x - r)` (a function of `x` only).
    pub fn f(&self, x: Complex64) -> Complex64 {
        let qf = Complex64::new(rat_to_f64(&self.q), 0.0);
        let rf = Complex64::new(rat_to_f64(&self.r), 0.0);
        Complex64::new(self.scale, 0.0) * (x - qf) / (x - rf)
    }

    /// `log f` with argument in `(0, 2 pi]`: continuous off the level set,
    /// jumping by `2 pi i` across it.
    pub fn log_cut(&self, x: Complex64) -> Complex64 {
        let w = self.f(x);
        let mut th = w.arg();
        if th <= 0.0 {
            th += 2.0 * PI;
        }
        Complex64::new(w.norm().ln(), th)
    }
}

// ---------------------------------------------------------------------------
// Adaptive 2-D quadrature on the unit square
// ---------------------------------------------------------------------------

const G5X: [f64; 5] = [
    -0.9061798459386640,
    -0.5384693101056831,
    0.0,
    0.5384693101056831,
    0.9061798459386640,
];
const G5W: [f64; 5] = [
    0.2369268850561891,
    0.4786286704993665,
    0.5688888888888889,
    0.4786286704993665,
    0.2369268850561891,
];
const G8X: [f64; 8] = [
    -0.9602898564975363,
    -0.7966664774136267,
    -0.5255324099163290,
    -0.1834346424956498,
    0.1834346424956498,
    0.5255324099163290,
    0.7966664774136267,
    0.9602898564975363,
];
const G8W: [f64; 8] = [
    0.1012285362903763,
    0.2223810344533745,
    0.3137066458778873,
    0.3626837833783620,
    0.3626837833783620,
    0.3137066458778873,
    0.2223810344533745,
    0.1012285362903763,
];

fn tensor_rule<F: FnMut(f64, f64) -> Complex64>(
    f: &mut F,
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    nodes: &[f64],
    weights: &[f64],
) -> Complex64 {
    let hx = 0.5 * (x1 - x0);
    let hy = 0.5 * (y1 - y0);
    let cx = 0.5 * (x1 + x0);
    let cy = 0.5 * (y1 + y0);
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, &xi) in nodes.iter().enumerate() {
        let x = cx + hx * xi;
        let mut row = Complex64::new(0.0, 0.0);
        for (j, &yj) in nodes.iter().enumerate() {
            row += f(x, cy + hy * yj) * weights[j];
        }
        acc += row * weights[i];
    }
    acc * hx * hy
}

struct Patch {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    val: Complex64,
    err: f64,
}

impl Patch {
    fn eval<F: FnMut(f64, f64) -> Complex64>(
        f: &mut F,
        x0: f64,
        x1: f64,
        y0: f64,
        y1: f64,
    ) -> Patch {
        let fine = tensor_rule(f, x0, x1, y0, y1, &G8X, &G8W);
        let coarse = tensor_rule(f, x0, x1, y0, y1, &G5X, &G5W);
        Patch { x0, x1, y0, y1, val: fine, err: (fine - coarse).norm() }
    }
}

impl PartialEq for Patch {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Patch {}
impl PartialOrd for Patch {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Patch {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Adaptive tensor-Gauss quadrature of a complex integrand over the unit
/// square: embedded 5/8-point error estimate, worst-patch-first quadrant
/// subdivision.
pub fn integrate_2d<F: FnMut(f64, f64) -> Complex64>(
    f: &mut F,
    tol: f64,
    max_patches: usize,
) -> Result<Complex64> {
    let (value, total_err) = integrate_2d_est(f, tol, max_patches);
    if total_err > 16.0 * tol.max(1e-14 * (1.0 + value.norm())) {
        return Err(RegError::Tolerance { requested: tol, achieved: total_err });
    }
    Ok(value)
}

/// Like [`integrate_2d`] but always returns the value together with the
/// accumulated error estimate, leaving the accept/reject decision to the
/// caller (useful when several sub-integrals share one error budget).
pub fn integrate_2d_est<F: FnMut(f64, f64) -> Complex64>(
    f: &mut F,
    tol: f64,
    max_patches: usize,
) -> (Complex64, f64) {
    use std::collections::BinaryHeap;
    let mut heap = BinaryHeap::new();
    let mut total_err = 0.0;
    let init = 4usize;
    for i in 0..init {
        for j in 0..init {
            let p = Patch::eval(
                f,
                i as f64 / init as f64,
                (i + 1) as f64 / init as f64,
                j as f64 / init as f64,
                (j + 1) as f64 / init as f64,
            );
            total_err += p.err;
            heap.push(p);
        }
    }
    while total_err > tol && heap.len() < max_patches {
        let worst = heap.pop().unwrap();
        total_err -= worst.err;
        let mx = 0.5 * (worst.x0 + worst.x1);
        let my = 0.5 * (worst.y0 + worst.y1);
        if mx <= worst.x0 || my <= worst.y0 {
            // Rounding level reached; keep the estimate.
            total_err += worst.err;
            heap.push(worst);
            break;
        }
        for (a, b) in [(worst.x0, mx), (mx, worst.x1)] {
            for (c, d) in [(worst.y0, my), (my, worst.y1)] {
                let p = Patch::eval(f, a, b, c, d);
                total_err += p.err;
                heap.push(p);
            }
        }
    }
    let value = heap
        .iter()
        .fold(Complex64::new(0.0, 0.0), |acc, p| acc + p.val);
    (value, total_err)
}

// ---------------------------------------------------------------------------
// Surface integrals over the curve
// ---------------------------------------------------------------------------

fn poly_eval(c: &[Complex64], x: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for v in c.iter().rev() {
        acc = acc * x + v;
    }
    acc
}

fn all_zero(c: &[Complex64]) -> bool {
    c.iter().all(|v| v.norm() == 0.0)
}

/// `int_C  w(x) phi ^ psi` over the whole curve, by adaptive 2-D quadrature
/// in the x-plane.  Writing `phi = PA dx/y + conj(PB dx/y)` and `psi = QA
/// dx/y + conj(QB dx/y)`, the (1,1)-density is sheet-independent:
///
/// `phi ^ psi = [PA conj(QB) - conj(PB) QA] / |h|  dx ^ dxbar`,
///
/// and `dx ^ dxbar = -2i dA`, so summing the two sheets gives a factor
/// `-4i`.  The plane is covered by two polar half-plane charts about a real
/// center (so that a branch cut of `w` on the real axis never crosses a
/// chart) with the radial compactification `rho = R t/(1 - t)`.
fn surface_core(
    model: &HyperellipticModel,
    weight: &dyn Fn(Complex64) -> Complex64,
    phi: &DifferentialForm,
    psi: &DifferentialForm,
    tol: f64,
) -> Result<Complex64> {
    let (pa, pb) = phi.parts();
    let (qa, qb) = psi.parts();
    if (all_zero(&pa) || all_zero(&qb)) && (all_zero(&pb) || all_zero(&qa)) {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let branches = model.branch_points();
    let c0 = branches.iter().map(|e| e.re).sum::<f64>() / branches.len() as f64;
    let c0 = Complex64::new(c0, 0.0);
    let r0 = 2.0
        * (1.0
            + branches
                .iter()
                .map(|e| (e - c0).norm())
                .fold(0.0f64, f64::max));
    let mut total = Complex64::new(0.0, 0.0);
    for (th0, th1) in [(0.0, PI), (PI, 2.0 * PI)] {
        let mut f2 = |t: f64, v: f64| {
            let rho = r0 * t / (1.0 - t);
            let theta = th0 + (th1 - th0) * v;
            let x = c0 + Complex64::from_polar(rho, theta);
            let habs = model.h_eval(x).norm();
            if habs == 0.0 || rho == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let w = poly_eval(&pa, x) * poly_eval(&qb, x).conj()
                - poly_eval(&pb, x).conj() * poly_eval(&qa, x);
            let jac = rho * (r0 / ((1.0 - t) * (1.0 - t))) * (th1 - th0);
            weight(x) * w / habs * Complex64::new(0.0, -4.0) * jac
        };
        total += integrate_2d(&mut f2, 0.5 * tol, 60_000)?;
    }
    Ok(total)
}

/// Surface term of the regulator: `int_{C - gamma} log f  phi ^ psi` with
/// the cut branch of the logarithm.
pub fn log_surface_integral(
    cyc: &SimpleCycle,
    phi: &DifferentialForm,
    psi: &DifferentialForm,
    tol: f64,
) -> Result<Complex64> {
    surface_core(&cyc.model, &|x| cyc.log_cut(x), phi, psi, tol)
}

/// `int_C phi ^ psi` by quadrature (an independent cross-check of
/// [`wedge_pairing`]).
pub fn wedge_quadrature(
    model: &HyperellipticModel,
    phi: &DifferentialForm,
    psi: &DifferentialForm,
    tol: f64,
) -> Result<Complex64> {
    surface_core(model, &|_| Complex64::new(1.0, 0.0), phi, psi, tol)
}

/// `int_C xi ^ eta` from the canonical periods via the Riemann bilinear
/// identity `sum_m A_m(xi) B_m(eta) - B_m(xi) A_m(eta)`.
pub fn wedge_pairing(
    an: &CurveAnalytics,
    xi: &DifferentialForm,
    eta: &DifferentialForm,
) -> Complex64 {
    let g = an.model.genus();
    (0..g)
        .map(|m| {
            an.period_of(xi, m) * an.period_of(eta, g + m)
                - an.period_of(xi, g + m) * an.period_of(eta, m)
        })
        .sum()
}

// ---------------------------------------------------------------------------
// Iterated integrals along gamma and the two pairing routes
// ---------------------------------------------------------------------------

/// Sum over the components of `gamma` of the length-two iterated integral
/// of `(phi, psi)`, each component taken with its own `Q -> R` orientation.
pub fn gamma_iterated(
    cyc: &SimpleCycle,
    phi: &DifferentialForm,
    psi: &DifferentialForm,
    tol: f64,
) -> Result<Complex64> {
    let mut acc = Complex64::new(0.0, 0.0);
    for comp in &cyc.gamma {
        acc += iterated_integral(comp, &[phi, psi], tol)?;
    }
    Ok(acc)
}

/// One evaluated pairing: surface term, level-set correction term, total.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct PairingValue {
    pub surface: Complex64,
    pub gamma_term: Complex64,
    pub total: Complex64,
}

/// Regulator pairing of the simple cycle against `phi (x) psi`:
///
/// `int_{C - gamma} log f  phi ^ psi  +  N pi i int_{gamma^-} psi phi`,
///
/// the correction summed over the reversed components.  Components over
/// `{point} x C` and `C x {point}` contribute nothing against forms of type
/// (1,1) on the product and are omitted.
pub fn regulator_pairing(
    cyc: &SimpleCycle,
    phi: &DifferentialForm,
    psi: &DifferentialForm,
    tol_surface: f64,
    tol_path: f64,
) -> Result<PairingValue> {
    let surface = log_surface_integral(cyc, phi, psi, tol_surface)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for comp in &cyc.gamma {
        acc += iterated_integral(&comp.reversed(), &[psi, phi], tol_path)?;
    }
    let gamma_term = Complex64::new(0.0, PI * cyc.n as f64) * acc;
    Ok(PairingValue { surface, gamma_term, total: surface + gamma_term })
}

/// The normalized holomorphic form `dz_i` (a-periods `delta_{ik}`),
/// zero-based `i`.
pub fn normalized_form(an: &CurveAnalytics, i: usize) -> DifferentialForm {
    let g = an.model.genus();
    DifferentialForm::Holomorphic((0..g).map(|j| an.periods.normalizer[(i, j)]).collect())
}

/// Closed form of the extension-class pairing on `alpha_j (x) zeta_i`:
///
/// `(2g + 1) ( int_{C - gamma} log f  dx_j ^ dz_i
///             + 2 pi i int_gamma dx_j dz_i )`,
///
/// with `dx_j` the harmonic dual basis element of the canonical cycle `j`
/// (zero-based) and `dz_i` normalized holomorphic.
pub fn carlson_pairing(
    an: &CurveAnalytics,
    cyc: &SimpleCycle,
    j: usize,
    i: usize,
    tol_surface: f64,
    tol_path: f64,
) -> Result<PairingValue> {
    let g = an.model.genus();
    if j >= 2 * g || i >= g {
        return Err(RegError::BadIndex);
    }
    let duals = harmonic_dual_basis(an)?;
    let dxj = &duals[j];
    let dzi = normalized_form(an, i);
    let factor = Complex64::new(an.model.degree() as f64, 0.0);
    let surface = log_surface_integral(cyc, dxj, &dzi, tol_surface)?;
    let it = gamma_iterated(cyc, dxj, &dzi, tol_path)?;
    let gamma_term = Complex64::new(0.0, 2.0 * PI) * it;
    Ok(PairingValue {
        surface: factor * surface,
        gamma_term: factor * gamma_term,
        total: factor * (surface + gamma_term),
    })
}

// ---------------------------------------------------------------------------
// Main comparison: extension class vs (2g + 1) x regulator
// ---------------------------------------------------------------------------

/// One `(j, i)` entry of the comparison.
#[derive(Debug, Clone, serde::Serialize)]
pub struct MainTheoremPair {
    pub j: usize,
    pub i: usize,
    pub carlson: Complex64,
    pub regulator: Complex64,
    /// `carlson - (2g + 1) regulator` before lattice adjustment.
    pub raw_difference: Complex64,
    /// Chosen multiples of the ambiguity generators
    /// `2 pi i, 2 pi i tau_{i1}, ..., 2 pi i tau_{ig}`.
    pub lattice_coeffs: Vec<i64>,
    /// `|raw_difference - lattice part|`.
    pub residual: f64,
    /// Comparison scale: `max(|carlson|, |2 pi i|)`.
    pub scale: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct MainTheoremReport {
    pub expected_factor: f64,
    /// Least-squares fit of `carlson - lattice part = c x regulator`.
    pub fitted_factor: Complex64,
    pub pairs: Vec<MainTheoremPair>,
}

impl MainTheoremReport {
    pub fn max_relative_residual(&self) -> f64 {
        self.pairs
            .iter()
            .map(|p| p.residual / p.scale)
            .fold(0.0, f64::max)
    }
}

/// Evaluate both routes on the listed `(j, i)` index pairs and compare them
/// modulo the `2 pi i`-period ambiguity lattice of `dz_i` (integer
/// coefficients searched in `[-3, 3]`).
pub fn main_theorem_check(
    an: &CurveAnalytics,
    cyc: &SimpleCycle,
    pairs: &[(usize, usize)],
    tol_surface: f64,
    tol_path: f64,
) -> Result<MainTheoremReport> {
    let g = an.model.genus();
    let factor = an.model.degree() as f64;
    let duals = harmonic_dual_basis(an)?;
    let mut out = Vec::with_capacity(pairs.len());
    let mut num = Complex64::new(0.0, 0.0);
    let mut den = 0.0f64;
    for &(j, i) in pairs {
        if j >= 2 * g || i >= g {
            return Err(RegError::BadIndex);
        }
        let dzi = normalized_form(an, i);
        let reg = regulator_pairing(cyc, &duals[j], &dzi, tol_surface, tol_path)?;
        let car = carlson_pairing(an, cyc, j, i, tol_surface, tol_path)?;
        let raw = car.total - factor * reg.total;
        // Ambiguity generators: 2 pi i and 2 pi i tau_{ik}.
        let mut gens = vec![Complex64::new(0.0, 2.0 * PI)];
        for k in 0..g {
            gens.push(Complex64::new(0.0, 2.0 * PI) * an.periods.tau[(i, k)]);
        }
        let mut best = (raw.norm(), vec![0i64; gens.len()]);
        let range = -3i64..=3;
        let mut coeffs = vec![0i64; gens.len()];
        search(&gens, &mut coeffs, 0, raw, &mut best, &range);
        let lattice: Complex64 = best
            .1
            .iter()
            .zip(&gens)
            .map(|(&n, gnr)| gnr * n as f64)
            .sum();
        let adjusted = car.total - lattice;
        num += reg.total.conj() * adjusted;
        den += reg.total.norm_sqr();
        out.push(MainTheoremPair {
            j,
            i,
            carlson: car.total,
            regulator: reg.total,
            raw_difference: raw,
            lattice_coeffs: best.1,
            residual: best.0,
            scale: car.total.norm().max(2.0 * PI),
        });
    }
    Ok(MainTheoremReport {
        expected_factor: factor,
        fitted_factor: if den > 0.0 { num / den } else { Complex64::new(0.0, 0.0) },
        pairs: out,
    })
}

fn search(
    gens: &[Complex64],
    coeffs: &mut Vec<i64>,
    k: usize,
    target: Complex64,
    best: &mut (f64, Vec<i64>),
    range: &std::ops::RangeInclusive<i64>,
) {
    if k == gens.len() {
        let s: Complex64 = coeffs
            .iter()
            .zip(gens)
            .map(|(&n, g)| g * n as f64)
            .sum();
        let r = (target - s).norm();
        if r < best.0 {
            *best = (r, coeffs.clone());
        }
        return;
    }
    for n in range.clone() {
        coeffs[k] = n;
        search(gens, coeffs, k + 1, target, best, range);
    }
    coeffs[k] = 0;
}

// ---------------------------------------------------------------------------
// The Bloch disc: 2-D quadrature oracle for the iterated integral
// ---------------------------------------------------------------------------

/// Integral of `phi (x) psi` over the disc `(s, t) -> (gamma(t),
/// gamma(t(1-s)/(1-s(1-t))))` spanned between the diagonal and the path,
/// by adaptive 2-D quadrature.  The pullback density is `phi(gamma'(t))
/// psi(gamma'(b)) t^2 / (1 - s(1-t))^2`, and a cosine warp in both
/// variables tames the square-root endpoint singularities of the forms at
/// branch-point endpoints.  Equals the length-two iterated integral of
/// `(phi, psi)` along the path.
pub fn disc_integral(
    path: &LiftedPath,
    phi: &DifferentialForm,
    psi: &DifferentialForm,
    tol: f64,
) -> Result<Complex64> {
    use crate::paths::OneForm;
    // The disc map sends (s, t) to (gamma(b), gamma(t)) with
    // b = t (1 - s) / (1 - s (1 - t)), so b runs over [0, t]; the pulled-back
    // 2-form is phi(gamma'(b)) psi(gamma'(t)) t^2 / D^2 ds dt with
    // D = 1 - s (1 - t), matching the time-ordered iterated integral of
    // (phi, psi) over the path.
    // Nested adaptive quadrature handles the piecewise path: for fixed t
    // the inner integrand has isolated kinks wherever b crosses a segment
    // junction, which Gauss-Kronrod bisection resolves locally; the outer
    // integrand is then smooth on each parameter strip between junctions.
    // The cosine warp (in both variables) absorbs the square-root behaviour
    // at the branch-point ends of the path and the (s -> 1, t -> 0) corner.
    let nseg = path.segment_count();
    let strip_tol = tol / (4.0 * nseg as f64);
    let mut total = Complex64::new(0.0, 0.0);
    let mut total_err = 0.0;
    for strip in 0..nseg {
        // Preimages of the strip boundaries under the global warp
        // t = sin^2(pi w / 2).
        let w0 = 2.0 / PI * ((strip as f64 / nseg as f64).sqrt()).asin();
        let w1 = 2.0 / PI * (((strip + 1) as f64 / nseg as f64).sqrt()).asin();
        let mut inner_bad = false;
        let mut outer = |u: f64| {
            let w = w0 + (w1 - w0) * u;
            let t = 0.5 * (1.0 - (PI * w).cos());
            let dt = 0.5 * PI * (PI * w).sin() * (w1 - w0);
            if t <= 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let mut inner = |v: f64| {
                let s = 0.5 * (1.0 - (PI * v).cos());
                let ds = 0.5 * PI * (PI * v).sin();
                let d = 1.0 - s * (1.0 - t);
                if d <= 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                let b = (t * (1.0 - s) / d).clamp(0.0, 1.0);
                phi.eval(&path.point(b)) * (t * t / (d * d)) * ds
            };
            let iv = match paths::integrate_adaptive(&mut inner, 0.0, 1.0, strip_tol) {
                Ok((v, _)) => v,
                Err(_) => {
                    inner_bad = true;
                    Complex64::new(0.0, 0.0)
                }
            };
            psi.eval(&path.point(t)) * iv * dt
        };
        let (val, err) = paths::integrate_adaptive(&mut outer, 0.0, 1.0, strip_tol)?;
        if inner_bad {
            return Err(RegError::Tolerance { requested: tol, achieved: f64::INFINITY });
        }
        total += val;
        total_err += err;
    }
    if total_err > tol.max(1e-13 * (1.0 + total.norm())) {
        return Err(RegError::Tolerance { requested: tol, achieved: total_err });
    }
    Ok(total)
}

// ---------------------------------------------------------------------------
// Loop/surface exchange identity
// ---------------------------------------------------------------------------

/// Report of one exchange-identity check: for a loop `alpha` disjoint from
/// `gamma`, with `phi_alpha` its harmonic Poincare dual and `Theta = log f
/// dz_i` (closed off `gamma` since both factors are of type (1,0)):
///
/// `int_alpha Theta = int_{C - gamma} phi_alpha ^ Theta
///                    + 2 pi i int_gamma phi_alpha dz_i`.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ColomboReport {
    /// Coordinates of `alpha` in the canonical homology basis.
    pub loop_coords: Vec<i64>,
    pub lhs: Complex64,
    pub surface: Complex64,
    pub gamma_term: Complex64,
    pub residual: f64,
}

/// Run the exchange identity for the loop `alpha` (which must not meet
/// `gamma`; its x-image must avoid the real cut outside `(q, r)`) and the
/// normalized form `dz_i`.
pub fn colombo_identity_check(
    an: &CurveAnalytics,
    cyc: &SimpleCycle,
    alpha: &LiftedPath,
    i: usize,
    tol_surface: f64,
    tol_path: f64,
) -> Result<ColomboReport> {
    let g = an.model.genus();
    if i >= g {
        return Err(RegError::BadIndex);
    }
    let duals = harmonic_dual_basis(an)?;
    // Coordinates of alpha read off by duality against the eta basis.
    let mut coords = Vec::with_capacity(2 * g);
    for eta in &duals {
        let v = integrate_1form(alpha, eta, tol_path)?;
        let n = v.re.round();
        if (v - Complex64::new(n, 0.0)).norm() > 1e-6 * (1.0 + n.abs()) {
            return Err(RegError::NotIntegral(v));
        }
        coords.push(n as i64);
    }
    // Poincare dual: with int_C eta_j ^ eta_k the standard symplectic form,
    // phi_alpha = sum_{m < g} v_{g+m} eta_m - sum_{m < g} v_m eta_{g+m}.
    let mut phi = DifferentialForm::Harmonic(vec![Complex64::new(0.0, 0.0); g], vec![
        Complex64::new(0.0, 0.0);
        g
    ]);
    for m in 0..g {
        phi = phi.add(&duals[m].scaled(Complex64::new(coords[g + m] as f64, 0.0)));
        phi = phi.add(&duals[g + m].scaled(Complex64::new(-(coords[m] as f64), 0.0)));
    }
    let dzi = normalized_form(an, i);
    use crate::paths::OneForm;
    let theta = |p: &PathPoint| cyc.log_cut(p.x) * dzi.eval(p);
    let lhs = integrate_1form(alpha, &theta, tol_path)?;
    let surface = log_surface_integral(cyc, &phi, &dzi, tol_surface)?;
    let gamma_term = Complex64::new(0.0, 2.0 * PI) * gamma_iterated(cyc, &phi, &dzi, tol_path)?;
    let residual = (lhs - surface - gamma_term).norm();
    Ok(ColomboReport { loop_coords: coords, lhs, surface, gamma_term, residual })
}

// ---------------------------------------------------------------------------
// Real regulator and the decomposable baseline
// ---------------------------------------------------------------------------

/// `int_{zetabar_j} log|f|  dz_i`: the real-regulator matrix entry, where
/// `zetabar_j` is the Poincare dual cycle of `conj(dz_j)` expanded in the
/// canonical homology basis (coefficients from the bilinear pairing) and
/// the integrand is the single-valued `log|f|`.
pub fn real_regulator_entry(
    an: &CurveAnalytics,
    cyc: &SimpleCycle,
    i: usize,
    j: usize,
    tol: f64,
) -> Result<Complex64> {
    let g = an.model.genus();
    if i >= g || j >= g {
        return Err(RegError::BadIndex);
    }
    let duals = harmonic_dual_basis(an)?;
    let dzj_bar = normalized_form(an, j).conjugated();
    // zetabar_j = sum_k m_k c_k with m_k = int_C conj(dz_j) ^ eta_k.
    let m: Vec<Complex64> = duals
        .iter()
        .map(|eta| wedge_pairing(an, &dzj_bar, eta))
        .collect();
    let dzi = normalized_form(an, i);
    use crate::paths::OneForm;
    let integrand = |p: &PathPoint| {
        let a = cyc.f(p.x).norm();
        let v = Complex64::new(a.ln(), 0.0) * dzi.eval(p);
        // The loops pass through the zero and the pole of f, where the
        // integrand has an integrable logarithmic singularity; an exact hit
        // (a measure-zero event of the quadrature) must not poison the sum.
        if v.is_finite() {
            v
        } else {
            Complex64::new(0.0, 0.0)
        }
    };
    // Per-loop integrals of log|f| dz_i, then the canonical combinations.
    let mut loop_int = Vec::with_capacity(2 * g);
    for lp in &an.homology.loops {
        loop_int.push(integrate_1form(lp, &integrand, tol)?);
    }
    let mut total = Complex64::new(0.0, 0.0);
    for k in 0..2 * g {
        let mut cyc_val = Complex64::new(0.0, 0.0);
        for (l, &c) in an.canonical_cycle(k).iter().enumerate() {
            if c != 0 {
                cyc_val += Complex64::new(c as f64, 0.0) * loop_int[l];
            }
        }
        total += m[k] * cyc_val;
    }
    Ok(total)
}

/// Regulator of the decomposable element `(C, a)` against `phi (x) psi`:
/// `log(a) int_C phi ^ psi`, with the wedge period from the exact bilinear
/// identity.  Exactly zero for `a = 1`.
pub fn decomposable_regulator(
    an: &CurveAnalytics,
    a: f64,
    phi: &DifferentialForm,
    psi: &DifferentialForm,
) -> Result<Complex64> {
    if a <= 0.0 {
        return Err(RegError::BadParameter(a));
    }
    Ok(Complex64::new(a.ln(), 0.0) * wedge_pairing(an, phi, psi))
}
