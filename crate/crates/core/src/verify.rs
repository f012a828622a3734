//! Randomized property suite for the iterated-integral layer.
//!
//! Four clauses are exercised on randomized (path, form) instances over a
//! hyperelliptic model: linearity in each slot, the shuffle identity, path
//! reversal, and path concatenation.  The suite is deterministic for a fixed
//! seed and reports the worst residual per clause, so it doubles as the
//! margin printout behind the `verify-identities` subcommand and as an
//! acceptance gate.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::sync::Arc;

use crate::curve::{weierstrass_join, CurveError, DifferentialForm, HyperellipticModel};
use crate::exact::Rat;
use crate::paths::{integrate_1form, iterated_integral, LiftedPath, PathError};

#[derive(Debug, thiserror::Error)]
pub enum VerifyError {
    #[error("curve error: {0}")]
    Curve(#[from] CurveError),
    #[error("path error: {0}")]
    Path(#[from] PathError),
    #[error("model must have at least two rational branch points")]
    NoJoins,
}

type Result<T> = std::result::Result<T, VerifyError>;

/// Outcome of one clause: the number of instances run, the worst absolute
/// residual seen, and whether that stayed within tolerance.
#[derive(Debug, Clone, Serialize)]
pub struct ClauseReport {
    pub clause: String,
    pub instances: usize,
    pub max_residual: f64,
    pub tol: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BasicPropertiesReport {
    pub seed: u64,
    pub clauses: Vec<ClauseReport>,
}

impl BasicPropertiesReport {
    pub fn all_pass(&self) -> bool {
        self.clauses.iter().all(|c| c.pass)
    }
}

fn random_form(rng: &mut ChaCha8Rng, genus: usize) -> DifferentialForm {
    let coeff = |rng: &mut ChaCha8Rng| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let a: Vec<Complex64> = (0..genus).map(|_| coeff(rng)).collect();
    let b: Vec<Complex64> = (0..genus).map(|_| coeff(rng)).collect();
    DifferentialForm::Harmonic(a, b)
}

/// Candidate paths: Weierstrass joins between rational branch values (and
/// their two-segment concatenations through a shared endpoint), plus the
/// homology basis loops when available.
fn candidate_paths(model: &Arc<HyperellipticModel>) -> Result<Vec<LiftedPath>> {
    let rational: Vec<Rat> = model
        .branch_points()
        .iter()
        .filter_map(|e| {
            if e.im != 0.0 && e.im.abs() > 1e-12 {
                return None;
            }
            let r = e.re;
            if (r - r.round()).abs() < 1e-12 {
                let cand = crate::exact::rat(r.round() as i64);
                if model.is_exact_branch(&cand) {
                    return Some(cand);
                }
            }
            None
        })
        .collect();
    let mut paths = Vec::new();
    for i in 0..rational.len() {
        for j in (i + 1)..rational.len() {
            paths.push(weierstrass_join(model, &rational[i], &rational[j])?);
        }
    }
    if paths.is_empty() {
        return Err(VerifyError::NoJoins);
    }
    if let Ok(h) = crate::curve::homology_basis(model) {
        paths.extend(h.loops);
    }
    Ok(paths)
}

/// Run the four-clause suite: `n` randomized instances per clause, residuals
/// measured against `tol` (quadrature runs one decade tighter).
pub fn basic_properties_suite(
    model: &Arc<HyperellipticModel>,
    n: usize,
    tol: f64,
    seed: u64,
) -> Result<BasicPropertiesReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = model.genus();
    let paths = candidate_paths(model)?;
    let qtol = tol / 10.0;
    let mut clauses = Vec::new();

    // Clause 1: linearity in each slot of a length-2 iterated integral.
    let mut worst = 0.0f64;
    for _ in 0..n {
        let p = &paths[rng.gen_range(0..paths.len())];
        let phi = random_form(&mut rng, g);
        let psi = random_form(&mut rng, g);
        let chi = random_form(&mut rng, g);
        let s = Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let combo = phi.add(&chi.scaled(s));
        let lhs = iterated_integral(p, &[&combo, &psi], qtol)?;
        let rhs = iterated_integral(p, &[&phi, &psi], qtol)?
            + iterated_integral(p, &[&chi, &psi], qtol)? * s;
        worst = worst.max((lhs - rhs).norm());
        let lhs2 = iterated_integral(p, &[&psi, &combo], qtol)?;
        let rhs2 = iterated_integral(p, &[&psi, &phi], qtol)?
            + iterated_integral(p, &[&psi, &chi], qtol)? * s;
        worst = worst.max((lhs2 - rhs2).norm());
    }
    clauses.push(ClauseReport {
        clause: "linearity".into(),
        instances: n,
        max_residual: worst,
        tol,
        pass: worst < tol,
    });

    // Clause 2: shuffle product  I(phi) I(psi) = I(phi psi) + I(psi phi).
    let mut worst = 0.0f64;
    for _ in 0..n {
        let p = &paths[rng.gen_range(0..paths.len())];
        let phi = random_form(&mut rng, g);
        let psi = random_form(&mut rng, g);
        let i1 = integrate_1form(p, &phi, qtol)?;
        let i2 = integrate_1form(p, &psi, qtol)?;
        let lhs = i1 * i2;
        let rhs = iterated_integral(p, &[&phi, &psi], qtol)?
            + iterated_integral(p, &[&psi, &phi], qtol)?;
        worst = worst.max((lhs - rhs).norm());
    }
    clauses.push(ClauseReport {
        clause: "shuffle".into(),
        instances: n,
        max_residual: worst,
        tol,
        pass: worst < tol,
    });

    // Clause 3: reversal  I_{p^-}(phi) = -I_p(phi)  and
    // I_{p^-}(phi psi) = I_p(psi phi)  (sign (-1)^2).
    let mut worst = 0.0f64;
    for _ in 0..n {
        let p = &paths[rng.gen_range(0..paths.len())];
        let rev = p.reversed();
        let phi = random_form(&mut rng, g);
        let psi = random_form(&mut rng, g);
        let d1 = (integrate_1form(&rev, &phi, qtol)? + integrate_1form(p, &phi, qtol)?).norm();
        let d2 = (iterated_integral(&rev, &[&phi, &psi], qtol)?
            - iterated_integral(p, &[&psi, &phi], qtol)?)
        .norm();
        worst = worst.max(d1).max(d2);
    }
    clauses.push(ClauseReport {
        clause: "reversal".into(),
        instances: n,
        max_residual: worst,
        tol,
        pass: worst < tol,
    });

    // Clause 4: concatenation (Chen):
    // I_{ab}(phi psi) = I_a(phi psi) + I_a(phi) I_b(psi) + I_b(phi psi).
    let mut worst = 0.0f64;
    let mut runs = 0usize;
    let mut guard = 0usize;
    while runs < n && guard < 50 * n {
        guard += 1;
        let a = &paths[rng.gen_range(0..paths.len())];
        // A composable partner: the reverse of a (always composable) or any
        // candidate starting where a ends.
        let b = if rng.gen_bool(0.5) {
            a.reversed()
        } else {
            paths[rng.gen_range(0..paths.len())].clone()
        };
        let Ok(ab) = a.then(&b) else { continue };
        let phi = random_form(&mut rng, g);
        let psi = random_form(&mut rng, g);
        let lhs = iterated_integral(&ab, &[&phi, &psi], qtol)?;
        let rhs = iterated_integral(a, &[&phi, &psi], qtol)?
            + integrate_1form(a, &phi, qtol)? * integrate_1form(&b, &psi, qtol)?
            + iterated_integral(&b, &[&phi, &psi], qtol)?;
        worst = worst.max((lhs - rhs).norm());
        runs += 1;
    }
    clauses.push(ClauseReport {
        clause: "concatenation".into(),
        instances: runs,
        max_residual: worst,
        tol,
        pass: worst < tol && runs == n,
    });

    Ok(BasicPropertiesReport { seed, clauses })
}
