//! Finite-dimensional mixed-Hodge-structure data.
//!
//! A `HodgeLattice` is an integral lattice with a weight filtration (integer
//! spans) and a Hodge filtration (complex spans).  Extensions of such lattices
//! are classified by their Carlson representative: the class of an integral
//! retraction composed with a filtered section, living in the intermediate
//! Jacobian of Hom(B, A).  Everything here is plain linear algebra; subspace
//! tests go through rank-revealing decompositions with tolerance 1e-10.

use crate::exact::Mat;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

const RANK_TOL: f64 = 1e-10;

#[derive(Debug, thiserror::Error)]
pub enum HodgeError {
    #[error("filtration data inconsistent: {0}")]
    BadFiltration(String),
    #[error("weight {0} is not negative")]
    NonNegativeWeight(i32),
    #[error("extension is not separated")]
    NotSeparated,
    #[error("maps do not form a filtered short exact sequence: {0}")]
    NotExact(String),
    #[error("no integral retraction exists")]
    NoRetraction,
    #[error("no filtered section exists (residual {0:.3e})")]
    NoFilteredSection(f64),
    #[error("lattice membership indeterminate (residual {0:.3e} near decision boundary)")]
    Indeterminate(f64),
}

type Result<T> = std::result::Result<T, HodgeError>;

fn cmat(rows: usize, cols: usize) -> DMatrix<Complex64> {
    DMatrix::from_element(rows, cols, Complex64::new(0.0, 0.0))
}

fn rank_of(m: &DMatrix<Complex64>) -> usize {
    if m.ncols() == 0 || m.nrows() == 0 {
        return 0;
    }
    let svd = m.clone().svd(false, false);
    let smax = svd.singular_values.max();
    if smax <= RANK_TOL {
        return 0;
    }
    svd.singular_values
        .iter()
        .filter(|&&s| s > RANK_TOL * smax.max(1.0))
        .count()
}

/// Does span(inner) lie inside span(outer)?
fn contained_in(inner: &DMatrix<Complex64>, outer: &DMatrix<Complex64>) -> bool {
    if inner.ncols() == 0 {
        return true;
    }
    let mut joint = cmat(inner.nrows(), inner.ncols() + outer.ncols());
    joint.view_mut((0, 0), (inner.nrows(), outer.ncols())).copy_from(outer);
    joint
        .view_mut((0, outer.ncols()), (inner.nrows(), inner.ncols()))
        .copy_from(inner);
    rank_of(&joint) == rank_of(outer)
}

/// Orthonormal basis of the orthogonal complement of span(m) in C^n.
fn orthogonal_complement(m: &DMatrix<Complex64>, n: usize) -> DMatrix<Complex64> {
    if m.ncols() == 0 {
        return DMatrix::identity(n, n);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.as_ref().unwrap();
    let smax = svd.singular_values.max().max(1.0);
    let r = svd
        .singular_values
        .iter()
        .filter(|&&s| s > RANK_TOL * smax)
        .count();
    let mut full = DMatrix::<Complex64>::identity(n, n);
    // Complete u's first r columns to a unitary basis by projecting out.
    let ur = u.columns(0, r).clone_owned();
    let proj = &ur * ur.adjoint();
    full -= proj;
    let svd2 = full.svd(true, false);
    let u2 = svd2.u.unwrap();
    let r2 = svd2
        .singular_values
        .iter()
        .filter(|&&s| s > 0.5)
        .count();
    u2.columns(0, r2).clone_owned()
}

/// One step of a filtration: every vector of `span` lies in the filtration
/// level indexed by `level`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightStep {
    pub weight: i32,
    /// Integer spanning vectors (columns, as rows of i64 for serialization).
    pub span: Vec<Vec<i64>>,
}

#[derive(Debug, Clone)]
pub struct HodgeStep {
    pub p: i32,
    /// Complex spanning vectors.
    pub span: Vec<DVector<Complex64>>,
}

/// An integral lattice with weight and Hodge filtrations.
#[derive(Debug, Clone)]
pub struct HodgeLattice {
    pub rank: usize,
    /// Ascending weight steps; the last one spans everything.
    pub weight_steps: Vec<WeightStep>,
    /// Descending Hodge steps F^p; F^p is everything for p below the first
    /// listed level and zero above the last.
    pub hodge_steps: Vec<HodgeStep>,
    /// Tate-twist bookkeeping tag (purely informational).
    pub twist: i32,
}

impl HodgeLattice {
    /// The Tate structure Z(n): rank 1, weight -2n, F^{-n} everything.
    pub fn tate(n: i32) -> Self {
        HodgeLattice {
            rank: 1,
            weight_steps: vec![WeightStep { weight: -2 * n, span: vec![vec![1]] }],
            hodge_steps: vec![HodgeStep {
                p: -n,
                span: vec![DVector::from_element(1, Complex64::new(1.0, 0.0))],
            }],
            twist: n,
        }
    }

    /// A pure weight-1 structure of rank 2g from a normalized period matrix:
    /// F^1 is spanned by the columns of [I; tau] (periods of the normalized
    /// holomorphic forms over the symplectic basis).
    pub fn weight_one(tau: &DMatrix<Complex64>) -> Self {
        let g = tau.nrows();
        assert_eq!(g, tau.ncols());
        let mut span = Vec::new();
        for j in 0..g {
            let mut v = DVector::from_element(2 * g, Complex64::new(0.0, 0.0));
            v[j] = Complex64::new(1.0, 0.0);
            for i in 0..g {
                v[g + i] = tau[(i, j)];
            }
            span.push(v);
        }
        HodgeLattice {
            rank: 2 * g,
            weight_steps: vec![WeightStep {
                weight: 1,
                span: (0..2 * g)
                    .map(|i| (0..2 * g).map(|j| (i == j) as i64).collect())
                    .collect(),
            }],
            hodge_steps: vec![HodgeStep { p: 1, span }],
            twist: 0,
        }
    }

    pub fn is_pure(&self) -> bool {
        self.weight_steps.len() == 1
    }

    pub fn weights(&self) -> Vec<i32> {
        self.weight_steps.iter().map(|w| w.weight).collect()
    }

    pub fn lowest_weight(&self) -> i32 {
        self.weight_steps.first().map(|w| w.weight).unwrap_or(0)
    }

    pub fn highest_weight(&self) -> i32 {
        self.weight_steps.last().map(|w| w.weight).unwrap_or(0)
    }

    /// Span of F^p as a matrix of column vectors.  Levels below the first
    /// listed step are the full space; levels above the last are zero.
    pub fn f_span(&self, p: i32) -> DMatrix<Complex64> {
        match self.hodge_steps.first() {
            None => DMatrix::identity(self.rank, self.rank),
            Some(first) if p < first.p => DMatrix::identity(self.rank, self.rank),
            _ => {
                for step in &self.hodge_steps {
                    if step.p >= p {
                        return span_matrix(self.rank, &step.span);
                    }
                }
                cmat(self.rank, 0)
            }
        }
    }

    /// Everything for p at or below the lowest listed level.
    fn f_levels(&self) -> Vec<i32> {
        self.hodge_steps.iter().map(|s| s.p).collect()
    }

    /// Filtration sanity: nested spans, and for pure structures the rank
    /// arithmetic dim F^p + dim conj(F^{w+1-p}) = rank for each level.
    pub fn validate(&self) -> Result<()> {
        for w in self.weight_steps.windows(2) {
            if w[0].weight >= w[1].weight || w[0].span.len() > w[1].span.len() {
                return Err(HodgeError::BadFiltration("weight steps not ascending".into()));
            }
        }
        for pair in self.hodge_steps.windows(2) {
            if pair[0].p >= pair[1].p {
                return Err(HodgeError::BadFiltration("hodge steps not ascending in p".into()));
            }
            let inner = span_matrix(self.rank, &pair[1].span);
            let outer = span_matrix(self.rank, &pair[0].span);
            if !contained_in(&inner, &outer) {
                return Err(HodgeError::BadFiltration("hodge steps not nested".into()));
            }
        }
        if self.is_pure() {
            let w = self.weight_steps[0].weight;
            for &p in &self.f_levels() {
                let fp = self.f_span(p);
                let fq = self.f_span(w + 1 - p).map(|z| z.conj());
                let dim = rank_of(&fp) + rank_of(&fq);
                if dim != self.rank {
                    return Err(HodgeError::BadFiltration(format!(
                        "pure weight {w}: dim F^{p} + dim conj F^{} = {dim} != {}",
                        w + 1 - p,
                        self.rank
                    )));
                }
            }
        }
        Ok(())
    }

    /// Tensor product of pure structures.
    pub fn tensor(&self, other: &HodgeLattice) -> HodgeLattice {
        assert!(self.is_pure() && other.is_pure(), "tensor is for pure structures");
        let rank = self.rank * other.rank;
        let w = self.weight_steps[0].weight + other.weight_steps[0].weight;
        // F^p(A (x) B) = sum_{r+s=p} F^r A (x) F^s B.  Extend each factor's
        // level list with its "full space" level, then enumerate the sums.
        let extend = |l: &HodgeLattice| -> Vec<i32> {
            let mut v = l.f_levels();
            let low = v.iter().min().copied().unwrap_or(0) - 1;
            v.push(low);
            v.sort();
            v
        };
        let ea = extend(self);
        let eb = extend(other);
        let mut levels: Vec<i32> = Vec::new();
        for &r in &ea {
            for &s in &eb {
                if !levels.contains(&(r + s)) {
                    levels.push(r + s);
                }
            }
        }
        levels.sort();
        let mut steps = Vec::new();
        for &p in &levels {
            let mut span: Vec<DVector<Complex64>> = Vec::new();
            let mut acc = cmat(rank, 0);
            for &r in &ea {
                let fa = self.f_span(r);
                let fb = other.f_span(p - r);
                for i in 0..fa.ncols() {
                    for j in 0..fb.ncols() {
                        let mut v = DVector::from_element(rank, Complex64::new(0.0, 0.0));
                        for a in 0..self.rank {
                            for b in 0..other.rank {
                                v[a * other.rank + b] = fa[(a, i)] * fb[(b, j)];
                            }
                        }
                        let m = span_matrix(rank, &[v.clone()]);
                        if !contained_in(&m, &acc) {
                            span.push(v);
                            acc = span_matrix(rank, &span);
                        }
                    }
                }
            }
            if !span.is_empty() {
                steps.push(HodgeStep { p, span });
            }
        }
        let ident: Vec<Vec<i64>> = (0..rank)
            .map(|i| (0..rank).map(|j| (i == j) as i64).collect())
            .collect();
        HodgeLattice {
            rank,
            weight_steps: vec![WeightStep { weight: w, span: ident }],
            hodge_steps: steps,
            twist: self.twist + other.twist,
        }
    }
}

fn span_matrix(rank: usize, span: &[DVector<Complex64>]) -> DMatrix<Complex64> {
    let mut m = cmat(rank, span.len());
    for (j, v) in span.iter().enumerate() {
        m.column_mut(j).copy_from(v);
    }
    m
}

/// A filtered short exact sequence 0 -> A -> H -> B -> 0 of Hodge lattices,
/// with integral structure maps.
#[derive(Debug, Clone)]
pub struct MHSExtension {
    pub sub: HodgeLattice,
    pub total: HodgeLattice,
    pub quot: HodgeLattice,
    /// rank(total) x rank(sub) injection.
    pub inject: Mat,
    /// rank(quot) x rank(total) projection.
    pub project: Mat,
}

impl MHSExtension {
    /// Exactness over the integers plus strict filtration preservation.
    pub fn verify(&self) -> Result<()> {
        let comp = self.project.mul(&self.inject);
        if !comp.is_zero() {
            return Err(HodgeError::NotExact("pi . iota != 0".into()));
        }
        if self.inject.rank() != self.sub.rank || self.project.rank() != self.quot.rank {
            return Err(HodgeError::NotExact("structure maps not of full rank".into()));
        }
        if self.sub.rank + self.quot.rank != self.total.rank {
            return Err(HodgeError::NotExact("ranks do not add up".into()));
        }
        // Strictness: dim F^p H = dim F^p A + dim F^p B at every level.
        let iota = mat_to_c(&self.inject);
        let pi = mat_to_c(&self.project);
        let mut levels = self.total.f_levels();
        levels.extend(self.sub.f_levels());
        levels.extend(self.quot.f_levels());
        levels.sort();
        levels.dedup();
        for &p in &levels {
            let fa = self.sub.f_span(p);
            let fh = self.total.f_span(p);
            let fb = self.quot.f_span(p);
            if !contained_in(&(&iota * &fa), &fh) {
                return Err(HodgeError::NotExact(format!("iota(F^{p} A) not in F^{p} H")));
            }
            if !contained_in(&(&pi * &fh), &fb) {
                return Err(HodgeError::NotExact(format!("pi(F^{p} H) not in F^{p} B")));
            }
            if rank_of(&fh) != rank_of(&fa) + rank_of(&fb) {
                return Err(HodgeError::NotExact(format!("F^{p} not strict")));
            }
        }
        Ok(())
    }

    /// Lowest nonzero weight of B exceeds the highest nonzero weight of A.
    pub fn is_separated(&self) -> bool {
        self.quot.lowest_weight() > self.sub.highest_weight()
    }
}

fn mat_to_c(m: &Mat) -> DMatrix<Complex64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
        Complex64::new(crate::curve::rat_to_f64(&m[(i, j)]), 0.0)
    })
}

/// Quotient data of an intermediate Jacobian V_C / (F^0 V_C + V_Z), with the
/// lattice in standard coordinates.
#[derive(Debug, Clone)]
pub struct JacobianDescription {
    pub ambient_dim: usize,
    /// Columns spanning F^0.
    pub f0: DMatrix<Complex64>,
    /// Columns of the lattice basis (integer vectors over C).
    pub lattice: DMatrix<Complex64>,
}

/// An element of an intermediate Jacobian: a complex vector modulo
/// F^0 + lattice.
#[derive(Debug, Clone)]
pub struct JacobianElement {
    pub v: DVector<Complex64>,
    pub ambient: JacobianDescription,
}

impl JacobianElement {
    pub fn add(&self, other: &JacobianElement) -> JacobianElement {
        JacobianElement { v: &self.v + &other.v, ambient: self.ambient.clone() }
    }

    pub fn sub(&self, other: &JacobianElement) -> JacobianElement {
        JacobianElement { v: &self.v - &other.v, ambient: self.ambient.clone() }
    }

    pub fn map(&self, g: &DMatrix<Complex64>, target: JacobianDescription) -> JacobianElement {
        JacobianElement { v: g * &self.v, ambient: target }
    }
}

/// The intermediate Jacobian of a negative-weight structure, in the
/// structure's own coordinates (lattice = standard basis).
pub fn intermediate_jacobian(v: &HodgeLattice) -> Result<JacobianDescription> {
    for w in v.weights() {
        if w >= 0 {
            return Err(HodgeError::NonNegativeWeight(w));
        }
    }
    Ok(JacobianDescription {
        ambient_dim: v.rank,
        f0: v.f_span(0),
        lattice: DMatrix::identity(v.rank, v.rank),
    })
}

/// The Jacobian of Hom(B, A) for pure lattices: ambient dimension
/// rank(A)rank(B) (row-major vectorization phi[(a,b)] = phi[a*rb + b]),
/// lattice all integer matrices, and F^0 Hom = {phi : phi(F^p B) in F^p A}.
pub fn hom_jacobian(b: &HodgeLattice, a: &HodgeLattice) -> Result<JacobianDescription> {
    // Weight check: Hom(B, A) has weights wa - wb.
    for wa in a.weights() {
        for wb in b.weights() {
            if wa - wb >= 0 {
                return Err(HodgeError::NonNegativeWeight(wa - wb));
            }
        }
    }
    let n = a.rank * b.rank;
    // Constraints: for each level p of B, N_p^H phi F^p(B) = 0 where N_p
    // spans the complement of F^p A.
    let mut rows: Vec<DVector<Complex64>> = Vec::new();
    let mut levels = b.f_levels();
    levels.extend(a.f_levels());
    levels.sort();
    levels.dedup();
    for &p in &levels {
        let fb = b.f_span(p);
        let fa = a.f_span(p);
        if fb.ncols() == 0 {
            continue;
        }
        let np = orthogonal_complement(&fa, a.rank);
        if np.ncols() == 0 {
            continue;
        }
        for jb in 0..fb.ncols() {
            for jn in 0..np.ncols() {
                // Row: sum_{a0,b0} conj(np[a0,jn]) * fb[b0,jb] * phi[a0,b0].
                let mut row = DVector::from_element(n, Complex64::new(0.0, 0.0));
                for a0 in 0..a.rank {
                    for b0 in 0..b.rank {
                        row[a0 * b.rank + b0] = np[(a0, jn)].conj() * fb[(b0, jb)];
                    }
                }
                rows.push(row);
            }
        }
    }
    let constraint = if rows.is_empty() {
        cmat(0, n)
    } else {
        DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j])
    };
    let f0 = nullspace(&constraint, n);
    Ok(JacobianDescription { ambient_dim: n, f0, lattice: DMatrix::identity(n, n) })
}

fn nullspace(m: &DMatrix<Complex64>, n: usize) -> DMatrix<Complex64> {
    if m.nrows() == 0 {
        return DMatrix::identity(n, n);
    }
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t.unwrap();
    let smax = svd.singular_values.max().max(1.0);
    let r = svd
        .singular_values
        .iter()
        .filter(|&&s| s > RANK_TOL * smax)
        .count();
    // Row space = first r right singular vectors; nullspace = its complement.
    let rowspace = vt.adjoint().columns(0, r).clone_owned();
    orthogonal_complement(&rowspace, n)
}

/// The Carlson representative of a separated filtered extension: the class of
/// r_Z . s_F in J(Hom(B, A)).
pub fn carlson_representative(e: &MHSExtension) -> Result<JacobianElement> {
    if !e.is_separated() {
        return Err(HodgeError::NotSeparated);
    }
    e.verify()?;
    let ra = e.sub.rank;
    let rb = e.quot.rank;
    let rh = e.total.rank;
    // Integral retraction r: solve r . iota = I column by column over Z,
    // i.e. iota^T r^T = I.
    let it = e.inject.transpose();
    let rt = it
        .solve_int(&Mat::identity(ra))
        .ok_or(HodgeError::NoRetraction)?;
    let r = mat_to_c(&rt.transpose());
    // Filtered section s: for a filtration-adapted basis of B, lift each
    // basis vector b at level p to F^p H.
    let pi = mat_to_c(&e.project);
    let mut s = cmat(rh, rb);
    let mut basis_b = cmat(rb, rb);
    let mut filled = 0usize;
    let mut levels = e.quot.f_levels();
    levels.sort();
    levels.reverse(); // deepest first
    levels.push(levels.last().copied().unwrap_or(0) - 1); // catch-all: full space
    for &p in &levels {
        let fb = e.quot.f_span(p);
        // Extend the adapted basis by new vectors of F^p B.
        for j in 0..fb.ncols() {
            let cand = fb.column(j).clone_owned();
            let cur = basis_b.columns(0, filled).clone_owned();
            let cm = DMatrix::from_fn(rb, 1, |i, _| cand[i]);
            if contained_in(&cm, &cur) {
                continue;
            }
            // Lift: x = F^p(H) c with pi x = cand.
            let fh = e.total.f_span(p);
            let a = &pi * &fh;
            let sol = least_squares(&a, &cand);
            let resid = (&a * &sol - &cand).norm();
            if resid > 1e-9 {
                return Err(HodgeError::NoFilteredSection(resid));
            }
            let x = &fh * sol;
            basis_b.column_mut(filled).copy_from(&cand);
            s.column_mut(filled).copy_from(&x);
            filled += 1;
            if filled == rb {
                break;
            }
        }
        if filled == rb {
            break;
        }
    }
    if filled != rb {
        return Err(HodgeError::NoFilteredSection(f64::INFINITY));
    }
    // Change to the standard basis of B: s_std = s . basis_b^{-1}.
    let binv = basis_b
        .clone()
        .try_inverse()
        .ok_or(HodgeError::NoFilteredSection(f64::INFINITY))?;
    let s_std = &s * binv;
    let m = &r * s_std; // ra x rb
    let amb = hom_jacobian(&e.quot, &e.sub)?;
    let mut v = DVector::from_element(ra * rb, Complex64::new(0.0, 0.0));
    for a0 in 0..ra {
        for b0 in 0..rb {
            v[a0 * rb + b0] = m[(a0, b0)];
        }
    }
    Ok(JacobianElement { v, ambient: amb })
}

fn least_squares(a: &DMatrix<Complex64>, b: &DVector<Complex64>) -> DVector<Complex64> {
    if a.ncols() == 0 {
        return DVector::from_element(0, Complex64::new(0.0, 0.0));
    }
    // The columns of `a` may be dependent (lifts of vectors killed by the
    // projection), so use a rank-revealing solve.
    let svd = a.clone().svd(true, true);
    svd.solve(b, 1e-12)
        .unwrap_or_else(|_| DVector::from_element(a.ncols(), Complex64::new(0.0, 0.0)))
}

/// Decide whether two Jacobian elements agree, i.e. whether their difference
/// lies in F^0 + lattice (to `tol`).  Projects out F^0, rounds against the
/// projected lattice basis, and reports indeterminate when the residual falls
/// in the gray zone just above `tol`.
pub fn j_equal(a: &JacobianElement, b: &JacobianElement, tol: f64) -> Result<bool> {
    let n = a.ambient.ambient_dim;
    assert_eq!(n, b.ambient.ambient_dim, "elements from different Jacobians");
    let d = &a.v - &b.v;
    // Real picture: R^{2n}, F^0 contributes spans {f, i f}.
    let f0 = &a.ambient.f0;
    let s = 2 * f0.ncols();
    let mut sreal = DMatrix::<f64>::zeros(2 * n, s);
    for j in 0..f0.ncols() {
        for i in 0..n {
            sreal[(i, 2 * j)] = f0[(i, j)].re;
            sreal[(n + i, 2 * j)] = f0[(i, j)].im;
            sreal[(i, 2 * j + 1)] = -f0[(i, j)].im;
            sreal[(n + i, 2 * j + 1)] = f0[(i, j)].re;
        }
    }
    let lat = &a.ambient.lattice;
    let mut lreal = DMatrix::<f64>::zeros(2 * n, lat.ncols());
    for j in 0..lat.ncols() {
        for i in 0..n {
            lreal[(i, j)] = lat[(i, j)].re;
            lreal[(n + i, j)] = lat[(i, j)].im;
        }
    }
    let mut dreal = DVector::<f64>::zeros(2 * n);
    for i in 0..n {
        dreal[i] = d[i].re;
        dreal[n + i] = d[i].im;
    }
    // Project out the F^0 directions (orthonormalize first).
    let q = if s > 0 {
        let qr = sreal.clone().qr();
        let qm = qr.q();
        let rm = qr.r();
        let rk = (0..s.min(2 * n)).filter(|&i| rm[(i, i)].abs() > 1e-12).count();
        qm.columns(0, rk).clone_owned()
    } else {
        DMatrix::<f64>::zeros(2 * n, 0)
    };
    let proj = |v: &DVector<f64>| -> DVector<f64> {
        if q.ncols() == 0 {
            v.clone()
        } else {
            v - &q * (q.transpose() * v)
        }
    };
    let dp = proj(&dreal);
    let mut lp = DMatrix::<f64>::zeros(2 * n, lat.ncols());
    for j in 0..lat.ncols() {
        let col = proj(&lreal.column(j).clone_owned());
        lp.column_mut(j).copy_from(&col);
    }
    // Least-squares integer rounding against the projected lattice.
    let gram = lp.transpose() * &lp;
    let rhs = lp.transpose() * &dp;
    let scale = 1.0 + dreal.norm();
    let sol = gram.clone().svd(true, true).solve(&rhs, 1e-12).map_err(|_| {
        HodgeError::Indeterminate(f64::INFINITY)
    })?;
    let rounded: DVector<f64> = sol.map(|x| x.round());
    let resid = (&dp - &lp * &rounded).norm();
    if resid <= tol * scale {
        return Ok(true);
    }
    if resid <= 10.0 * tol * scale {
        return Err(HodgeError::Indeterminate(resid));
    }
    Ok(false)
}

/// Build a standard-presentation extension of B by A: lattice A (+) B with
/// the canonical maps, and F^p H = iota(F^p A) + {(L F^p B, F^p B)} for a
/// complex lift matrix L.
pub fn standard_extension(a: &HodgeLattice, b: &HodgeLattice, lift: &DMatrix<Complex64>) -> MHSExtension {
    let ra = a.rank;
    let rb = b.rank;
    let rh = ra + rb;
    let mut levels = a.f_levels();
    levels.extend(b.f_levels());
    levels.sort();
    levels.dedup();
    let mut steps = Vec::new();
    for &p in &levels {
        let fa = a.f_span(p);
        let fb = b.f_span(p);
        let mut span = Vec::new();
        for j in 0..fa.ncols() {
            let mut v = DVector::from_element(rh, Complex64::new(0.0, 0.0));
            for i in 0..ra {
                v[i] = fa[(i, j)];
            }
            span.push(v);
        }
        for j in 0..fb.ncols() {
            let lifted = lift * fb.column(j).clone_owned();
            let mut v = DVector::from_element(rh, Complex64::new(0.0, 0.0));
            for i in 0..ra {
                v[i] = lifted[i];
            }
            for i in 0..rb {
                v[ra + i] = fb[(i, j)];
            }
            span.push(v);
        }
        if !span.is_empty() {
            steps.push(HodgeStep { p, span });
        }
    }
    let mut weight_steps = Vec::new();
    for ws in &a.weight_steps {
        weight_steps.push(WeightStep {
            weight: ws.weight,
            span: ws
                .span
                .iter()
                .map(|v| {
                    let mut e = v.clone();
                    e.resize(rh, 0);
                    e
                })
                .collect(),
        });
    }
    for ws in &b.weight_steps {
        let mut span: Vec<Vec<i64>> = weight_steps.last().map(|w: &WeightStep| w.span.clone()).unwrap_or_default();
        for v in &ws.span {
            let mut e = vec![0i64; ra];
            e.extend(v.iter().copied());
            span.push(e);
        }
        weight_steps.push(WeightStep { weight: ws.weight, span });
    }
    let total = HodgeLattice { rank: rh, weight_steps, hodge_steps: steps, twist: 0 };
    let inject = Mat::from_fn(rh, ra, |i, j| crate::exact::rat((i == j) as i64));
    let project = Mat::from_fn(rb, rh, |i, j| crate::exact::rat((j == i + ra) as i64));
    MHSExtension { sub: a.clone(), total, quot: b.clone(), inject, project }
}

/// Baer sum of two standard-presentation extensions of the same B by the same
/// A: extract the section datum of each at every level and add.
pub fn baer_sum(e1: &MHSExtension, e2: &MHSExtension) -> Result<MHSExtension> {
    let l1 = extension_datum(e1)?;
    let l2 = extension_datum(e2)?;
    Ok(standard_extension(&e1.sub, &e1.quot, &(l1 + l2)))
}

/// Pushforward along an integral morphism g: A -> A' of pure lattices
/// preserving filtrations.
pub fn pushforward(e: &MHSExtension, g: &Mat, target: &HodgeLattice) -> Result<MHSExtension> {
    let l = extension_datum(e)?;
    let gc = mat_to_c(g);
    Ok(standard_extension(target, &e.quot, &(gc * l)))
}

/// Recover a lift matrix L with F^p H = iota(F^p A) + graph(L) over F^p B.
/// Works for any extension whose lattice splits as A (+) B via the standard
/// maps (true of everything this module constructs).
pub fn extension_datum(e: &MHSExtension) -> Result<DMatrix<Complex64>> {
    let ra = e.sub.rank;
    let rb = e.quot.rank;
    let pi = mat_to_c(&e.project);
    let mut l = cmat(ra, rb);
    let mut basis = cmat(rb, rb);
    let mut lifts = cmat(ra, rb);
    let mut filled = 0usize;
    let mut levels = e.quot.f_levels();
    levels.sort();
    levels.reverse();
    levels.push(levels.last().copied().unwrap_or(0) - 1);
    for &p in &levels {
        let fb = e.quot.f_span(p);
        let fh = e.total.f_span(p);
        for j in 0..fb.ncols() {
            let cand = fb.column(j).clone_owned();
            let cur = basis.columns(0, filled).clone_owned();
            let cm = DMatrix::from_fn(rb, 1, |i, _| cand[i]);
            if contained_in(&cm, &cur) {
                continue;
            }
            let a = &pi * &fh;
            let sol = least_squares(&a, &cand);
            let resid = (&a * &sol - &cand).norm();
            if resid > 1e-9 {
                return Err(HodgeError::NoFilteredSection(resid));
            }
            let x = &fh * sol;
            basis.column_mut(filled).copy_from(&cand);
            for i in 0..ra {
                lifts[(i, filled)] = x[i];
            }
            filled += 1;
            if filled == rb {
                break;
            }
        }
        if filled == rb {
            break;
        }
    }
    if filled != rb {
        return Err(HodgeError::NoFilteredSection(f64::INFINITY));
    }
    let binv = basis.try_inverse().ok_or(HodgeError::NoFilteredSection(f64::INFINITY))?;
    let full = lifts * binv;
    for i in 0..ra {
        for j in 0..rb {
            l[(i, j)] = full[(i, j)];
        }
    }
    Ok(l)
}

#[cfg(test)]
mod tests;
