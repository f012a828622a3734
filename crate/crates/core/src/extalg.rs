//! Short exact sequences of finitely generated abelian groups and rational
//! vector spaces: Baer sums and differences, pushforward/pullback, splitting
//! retractions, and the generalised Baer difference with its obstruction
//! sequence.
//!
//! A module is presented as the cokernel of an integer (or rational) matrix;
//! every exactness or congruence question reduces to integer solvability
//! through the Smith normal form, never floating point.

use crate::exact::{Mat, Rat};
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExtAlgError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("scalar ring mismatch between operands")]
    RingMismatch,
    #[error("matrix does not respect relations (not a module map)")]
    IllFormedMap,
    #[error("sequence ends do not match: {0}")]
    EndMismatch(String),
    #[error("non-integer entries in an integral presentation")]
    NonIntegral,
    #[error("diagram invariant failure: {0}")]
    DiagramInvariant(String),
    #[error("element has no preimage under a map assumed surjective")]
    NoPreimage,
}

pub type Result<T> = std::result::Result<T, ExtAlgError>;

/// Scalar ring of a presentation: exact integers or rationals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Ring {
    Int,
    Rat,
}

impl Ring {
    fn solve(self, a: &Mat, b: &Mat) -> Option<Mat> {
        match self {
            Ring::Int => a.solve_int(b),
            Ring::Rat => a.solve_rat(b),
        }
    }

    fn kernel(self, a: &Mat) -> Mat {
        match self {
            Ring::Int => a.kernel_int(),
            Ring::Rat => a.kernel_rat(),
        }
    }
}

/// Finitely generated module presented as the cokernel of `rels`:
/// generators `0..gens`, relations the columns of `rels` (a `gens x k` matrix).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FgModule {
    ring: Ring,
    gens: usize,
    #[serde(with = "crate::exact::serde_mat")]
    rels: Mat,
}

impl FgModule {
    pub fn new(ring: Ring, gens: usize, rels: Mat) -> Result<Self> {
        if rels.nrows() != gens {
            return Err(ExtAlgError::DimensionMismatch(format!(
                "relations have {} rows for {} generators",
                rels.nrows(),
                gens
            )));
        }
        if ring == Ring::Int && !rels.is_integer() {
            return Err(ExtAlgError::NonIntegral);
        }
        Ok(FgModule { ring, gens, rels })
    }

    /// Free module of the given rank.
    pub fn free(ring: Ring, rank: usize) -> Self {
        FgModule { ring, gens: rank, rels: Mat::zeros(rank, 0) }
    }

    /// `Z/n` (or the zero space over the rationals when n != 0).
    pub fn cyclic(n: i64) -> Self {
        FgModule { ring: Ring::Int, gens: 1, rels: Mat::from_rows(&[&[n]]) }
    }

    /// Direct sum of cyclic groups `Z/d` for the listed orders (0 meaning `Z`).
    pub fn diagonal(ring: Ring, orders: &[i64]) -> Self {
        let n = orders.len();
        let torsion: Vec<usize> = (0..n).filter(|&i| orders[i] != 0).collect();
        let mut rels = Mat::zeros(n, torsion.len());
        for (j, &i) in torsion.iter().enumerate() {
            rels[(i, j)] = crate::exact::rat(orders[i]);
        }
        FgModule { ring, gens: n, rels }
    }

    pub fn zero(ring: Ring) -> Self {
        FgModule::free(ring, 0)
    }

    pub fn ring(&self) -> Ring {
        self.ring
    }

    pub fn gens(&self) -> usize {
        self.gens
    }

    pub fn rels(&self) -> &Mat {
        &self.rels
    }

    pub fn direct_sum(&self, other: &FgModule) -> Result<FgModule> {
        if self.ring != other.ring {
            return Err(ExtAlgError::RingMismatch);
        }
        Ok(FgModule {
            ring: self.ring,
            gens: self.gens + other.gens,
            rels: Mat::block_diag(&[&self.rels, &other.rels]),
        })
    }

    /// Free rank and torsion invariant factors (> 1), from the Smith form.
    pub fn invariants(&self) -> (usize, Vec<i64>) {
        match self.ring {
            Ring::Rat => (self.gens - self.rels.rank(), vec![]),
            Ring::Int => {
                let snf = self.rels.snf();
                let dim = self.rels.nrows().min(self.rels.ncols());
                let mut torsion = Vec::new();
                let mut rank_rel = 0;
                for i in 0..dim {
                    let d = &snf.s[(i, i)];
                    if d.is_zero() {
                        break;
                    }
                    rank_rel += 1;
                    let di: i64 = d.to_integer().try_into().unwrap_or(i64::MAX);
                    if di.abs() > 1 {
                        torsion.push(di.abs());
                    }
                }
                (self.gens - rank_rel, torsion)
            }
        }
    }

    /// Is the module zero (every generator a relation)?
    pub fn is_zero_module(&self) -> bool {
        let (rank, torsion) = self.invariants();
        rank == 0 && torsion.is_empty()
    }

    /// Does `v` (a column vector on the generators) lie in the submodule
    /// spanned by the columns of `span` together with the relations?
    fn contains(&self, span: &Mat, v: &Mat) -> bool {
        let sys = Mat::hstack(&[span, &self.rels]);
        self.ring.solve(&sys, v).is_some()
    }

    /// Express columns of `vectors` in terms of the columns of `span`
    /// (modulo relations); returns the coefficient block or `None`.
    fn express_in(&self, span: &Mat, vectors: &Mat) -> Option<Mat> {
        let sys = Mat::hstack(&[span, &self.rels]);
        let x = self.ring.solve(&sys, vectors)?;
        Some(x.submatrix(0..span.ncols(), 0..vectors.ncols()))
    }

    /// Canonical diagonal presentation (invariant factors) together with the
    /// isomorphism pair `(to, from)`: `to` maps old generators to new ones,
    /// `from` maps back, and both are inverse modulo relations.  Quotient
    /// constructions produce heavily redundant presentations; reducing first
    /// keeps the linear systems behind congruence and splitting tiny.
    pub fn reduced(&self) -> (FgModule, Mat, Mat) {
        // Scale relation columns to integers (harmless over either ring).
        let mut rels = self.rels.clone();
        for j in 0..rels.ncols() {
            let mut lcm = num_bigint::BigInt::one();
            for i in 0..rels.nrows() {
                lcm = num_integer::lcm(lcm, rels[(i, j)].denom().clone());
            }
            let f = Rat::from_integer(lcm);
            for i in 0..rels.nrows() {
                let t = &rels[(i, j)] * &f;
                rels[(i, j)] = t;
            }
        }
        let snf = rels.snf();
        let m = self.gens;
        let dim = m.min(rels.ncols());
        let mut keep: Vec<(usize, Rat)> = Vec::new();
        for i in 0..m {
            let d = if i < dim { snf.s[(i, i)].clone() } else { Rat::zero() };
            let trivial = match self.ring {
                Ring::Int => !d.is_zero() && d.numer().magnitude().is_one(),
                Ring::Rat => !d.is_zero(),
            };
            if !trivial {
                keep.push((i, d));
            }
        }
        let orders: Vec<i64> = keep
            .iter()
            .map(|(_, d)| i64::try_from(d.to_integer()).expect("small invariant factor"))
            .collect();
        let red = FgModule::diagonal(self.ring, &orders);
        let uinv = snf.u.solve_rat(&Mat::identity(m)).expect("U is unimodular");
        let to = Mat::from_fn(keep.len(), m, |r, c| snf.u[(keep[r].0, c)].clone());
        let from = Mat::from_fn(m, keep.len(), |r, c| uinv[(r, keep[c].0)].clone());
        (red, to, from)
    }
}

/// Map of finitely presented modules, as a matrix on chosen generators.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModuleMap {
    pub source: FgModule,
    pub target: FgModule,
    #[serde(with = "crate::exact::serde_mat")]
    pub mat: Mat,
}

impl ModuleMap {
    pub fn new(source: FgModule, target: FgModule, mat: Mat) -> Result<Self> {
        if source.ring != target.ring {
            return Err(ExtAlgError::RingMismatch);
        }
        if mat.nrows() != target.gens || mat.ncols() != source.gens {
            return Err(ExtAlgError::DimensionMismatch(format!(
                "map matrix is {}x{}, expected {}x{}",
                mat.nrows(),
                mat.ncols(),
                target.gens,
                source.gens
            )));
        }
        if source.ring == Ring::Int && !mat.is_integer() {
            return Err(ExtAlgError::NonIntegral);
        }
        let m = ModuleMap { source, target, mat };
        if !m.respects_relations() {
            return Err(ExtAlgError::IllFormedMap);
        }
        Ok(m)
    }

    pub fn identity(module: &FgModule) -> Self {
        ModuleMap {
            source: module.clone(),
            target: module.clone(),
            mat: Mat::identity(module.gens),
        }
    }

    pub fn zero(source: &FgModule, target: &FgModule) -> Self {
        ModuleMap {
            source: source.clone(),
            target: target.clone(),
            mat: Mat::zeros(target.gens, source.gens),
        }
    }

    fn ring(&self) -> Ring {
        self.source.ring
    }

    fn respects_relations(&self) -> bool {
        if self.source.rels.ncols() == 0 {
            return true;
        }
        let image_of_rels = self.mat.mul(&self.source.rels);
        self.target.ring.solve(&self.target.rels, &image_of_rels).is_some()
            || {
                // A relation may also map to zero directly when the target is free.
                image_of_rels.is_zero()
            }
    }

    pub fn compose(&self, inner: &ModuleMap) -> Result<ModuleMap> {
        if inner.target.gens != self.source.gens {
            return Err(ExtAlgError::DimensionMismatch("compose".into()));
        }
        ModuleMap::new(inner.source.clone(), self.target.clone(), self.mat.mul(&inner.mat))
    }

    pub fn negated(&self) -> ModuleMap {
        ModuleMap { source: self.source.clone(), target: self.target.clone(), mat: self.mat.neg() }
    }

    /// Generators (columns, in source coordinates) of the preimage of the
    /// relation submodule of the target, i.e. of ker(source -> target).
    fn kernel_preimage(&self) -> Mat {
        let sys = Mat::hstack(&[&self.mat, &self.target.rels]);
        let k = self.ring().kernel(&sys);
        let proj = k.submatrix(0..self.source.gens, 0..k.ncols());
        // Source relations always land in the kernel; include them so the
        // columns generate the full preimage lattice.
        Mat::hstack(&[&proj, &self.source.rels])
    }

    /// Injectivity, with a witness generator of the kernel on failure.
    pub fn is_injective(&self) -> (bool, Option<Mat>) {
        let pre = self.kernel_preimage();
        for j in 0..pre.ncols() {
            let v = pre.column(j);
            if !self.source.contains(&Mat::zeros(self.source.gens, 0), &v) {
                return (false, Some(v));
            }
        }
        (true, None)
    }

    /// Surjectivity, with a witness target generator not reached on failure.
    pub fn is_surjective(&self) -> (bool, Option<Mat>) {
        let span = Mat::hstack(&[&self.mat, &self.target.rels]);
        for i in 0..self.target.gens {
            let mut e = Mat::zeros(self.target.gens, 1);
            e[(i, 0)] = Rat::one();
            if self.ring().solve(&span, &e).is_none() {
                return (false, Some(e));
            }
        }
        (true, None)
    }

    /// The image as a submodule of the target, with its inclusion.
    pub fn image(&self) -> (FgModule, ModuleMap) {
        submodule(&self.target, &self.mat)
    }

    /// The kernel as a submodule of the source, with its inclusion.
    pub fn kernel(&self) -> (FgModule, ModuleMap) {
        let pre = self.kernel_preimage();
        submodule(&self.source, &pre)
    }
}

/// Present the submodule of `ambient` generated by the columns of `span`,
/// together with its inclusion map.
fn submodule(ambient: &FgModule, span: &Mat) -> (FgModule, ModuleMap) {
    let sys = Mat::hstack(&[span, &ambient.rels]);
    let k = ambient.ring.kernel(&sys);
    let rels = k.submatrix(0..span.ncols(), 0..k.ncols());
    let sub = FgModule { ring: ambient.ring, gens: span.ncols(), rels };
    let incl = ModuleMap { source: sub.clone(), target: ambient.clone(), mat: span.clone() };
    (sub, incl)
}

/// A short exact sequence `0 -> left -> mid -> right -> 0`
/// (exactness is a property checked by [`ShortExactSequence::verify_exact`],
/// not enforced at construction).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShortExactSequence {
    pub left: FgModule,
    pub mid: FgModule,
    pub right: FgModule,
    pub inject: ModuleMap,
    pub project: ModuleMap,
}

/// Outcome of [`ShortExactSequence::verify_exact`], with witnesses on failure.
#[derive(Debug, Clone)]
pub struct ExactnessReport {
    pub injective: bool,
    pub surjective: bool,
    pub middle_exact: bool,
    /// Nonzero kernel element of the injection, when not injective.
    pub kernel_witness: Option<Mat>,
    /// Target generator not reached by the projection, when not surjective.
    pub cokernel_witness: Option<Mat>,
    /// Element of ker(project) outside im(inject), when middle exactness fails.
    pub middle_witness: Option<Mat>,
}

impl ExactnessReport {
    pub fn all_exact(&self) -> bool {
        self.injective && self.surjective && self.middle_exact
    }
}

impl ShortExactSequence {
    pub fn new(inject: ModuleMap, project: ModuleMap) -> Result<Self> {
        if inject.target != project.source {
            return Err(ExtAlgError::EndMismatch("inject target != project source".into()));
        }
        Ok(ShortExactSequence {
            left: inject.source.clone(),
            mid: inject.target.clone(),
            right: project.target.clone(),
            inject,
            project,
        })
    }

    fn ring(&self) -> Ring {
        self.left.ring
    }

    pub fn verify_exact(&self) -> ExactnessReport {
        let (injective, kernel_witness) = self.inject.is_injective();
        let (surjective, cokernel_witness) = self.project.is_surjective();

        // im(inject) == ker(project), both as submodules of mid.
        let ker_gens = self.project.kernel_preimage();
        let im_gens = &self.inject.mat;
        let mut middle_exact = true;
        let mut middle_witness = None;
        for j in 0..ker_gens.ncols() {
            let v = ker_gens.column(j);
            if !self.mid.contains(im_gens, &v) {
                middle_exact = false;
                middle_witness = Some(v);
                break;
            }
        }
        if middle_exact {
            // Reverse containment: inject must land inside ker(project),
            // i.e. project o inject = 0 modulo relations.
            let comp = self.project.mat.mul(&self.inject.mat);
            if !comp.is_zero()
                && self.ring().solve(&self.right.rels, &comp).is_none()
            {
                middle_exact = false;
                middle_witness = Some(comp.column(0));
            }
        }
        ExactnessReport {
            injective,
            surjective,
            middle_exact,
            kernel_witness,
            cokernel_witness,
            middle_witness,
        }
    }

    /// Split sequence `0 -> A -> A + C -> C -> 0`.
    pub fn split(a: &FgModule, c: &FgModule) -> Result<Self> {
        let mid = a.direct_sum(c)?;
        let mut inj = Mat::zeros(mid.gens, a.gens);
        for i in 0..a.gens {
            inj[(i, i)] = Rat::one();
        }
        let mut proj = Mat::zeros(c.gens, mid.gens);
        for i in 0..c.gens {
            proj[(i, a.gens + i)] = Rat::one();
        }
        let inject = ModuleMap { source: a.clone(), target: mid.clone(), mat: inj };
        let project = ModuleMap { source: mid, target: c.clone(), mat: proj };
        ShortExactSequence::new(inject, project)
    }

    /// The same sequence with the injection negated; represents the inverse
    /// extension class.
    pub fn negated(&self) -> ShortExactSequence {
        ShortExactSequence {
            left: self.left.clone(),
            mid: self.mid.clone(),
            right: self.right.clone(),
            inject: self.inject.negated(),
            project: self.project.clone(),
        }
    }
}

fn check_same_ends(e1: &ShortExactSequence, e2: &ShortExactSequence) -> Result<()> {
    if e1.left != e2.left {
        return Err(ExtAlgError::EndMismatch("left terms differ".into()));
    }
    if e1.right != e2.right {
        return Err(ExtAlgError::EndMismatch("right terms differ".into()));
    }
    Ok(())
}

/// Baer difference `E1 (-) E2`: the sequence `H/D` with
/// `H = ker(p1 - p2) in B1 + B2` and `D` the image of the diagonal
/// `a -> (f1 a, f2 a)`.
pub fn baer_difference(
    e1: &ShortExactSequence,
    e2: &ShortExactSequence,
) -> Result<ShortExactSequence> {
    check_same_ends(e1, e2)?;
    let a = &e1.left;
    let c = &e1.right;
    let bsum = e1.mid.direct_sum(&e2.mid)?;

    // psi(b1, b2) = p1(b1) - p2(b2)
    let psi_mat = Mat::hstack(&[&e1.project.mat, &e2.project.mat.neg()]);
    let psi = ModuleMap { source: bsum.clone(), target: c.clone(), mat: psi_mat };
    let (h_mod, h_incl) = psi.kernel();

    // Diagonal image of A inside H.
    let diag = Mat::vstack(&[&e1.inject.mat, &e2.inject.mat]);
    let d_in_h = bsum
        .express_in(&h_incl.mat, &diag)
        .ok_or_else(|| ExtAlgError::DiagramInvariant("diagonal does not land in H".into()))?;

    let quot = FgModule {
        ring: a.ring,
        gens: h_mod.gens,
        rels: Mat::hstack(&[&h_mod.rels, &d_in_h]),
    };

    // a -> (f1 a, 0) expressed on H generators.
    let left_vec = Mat::vstack(&[&e1.inject.mat, &Mat::zeros(e2.mid.gens(), a.gens())]);
    let inj_mat = bsum
        .express_in(&h_incl.mat, &left_vec)
        .ok_or_else(|| ExtAlgError::DiagramInvariant("(f1 a, 0) does not land in H".into()))?;
    let inject = ModuleMap { source: a.clone(), target: quot.clone(), mat: inj_mat };

    // Projection via p1 on the first block of the H generators.
    let h_top = h_incl.mat.submatrix(0..e1.mid.gens(), 0..h_incl.mat.ncols());
    let project =
        ModuleMap { source: quot, target: c.clone(), mat: e1.project.mat.mul(&h_top) };
    ShortExactSequence::new(inject, project)
}

/// Baer sum, obtained from the difference by negating the second injection
/// (so `H = ker(p1 - p2)` and `D` is the antidiagonal image of A).
pub fn baer_sum(e1: &ShortExactSequence, e2: &ShortExactSequence) -> Result<ShortExactSequence> {
    baer_difference(e1, &e2.negated())
}

/// Pushforward of `E` along `g: A -> A'`: the pushout `(A' + B) / (g a, -i a)`.
pub fn pushforward(e: &ShortExactSequence, g: &ModuleMap) -> Result<ShortExactSequence> {
    if g.source != e.left {
        return Err(ExtAlgError::EndMismatch("pushforward map source != left term".into()));
    }
    let aprime = &g.target;
    let sum = aprime.direct_sum(&e.mid)?;
    let glue = Mat::vstack(&[&g.mat, &e.inject.mat.neg()]);
    let mid = FgModule {
        ring: sum.ring,
        gens: sum.gens,
        rels: Mat::hstack(&[&sum.rels, &glue]),
    };
    let inj_mat = Mat::vstack(&[
        &Mat::identity(aprime.gens()),
        &Mat::zeros(e.mid.gens(), aprime.gens()),
    ]);
    let proj_mat = Mat::hstack(&[&Mat::zeros(e.right.gens(), aprime.gens()), &e.project.mat]);
    let inject = ModuleMap { source: aprime.clone(), target: mid.clone(), mat: inj_mat };
    let project = ModuleMap { source: mid, target: e.right.clone(), mat: proj_mat };
    ShortExactSequence::new(inject, project)
}

/// Pullback of `E` along `g: C' -> C`: `{(b, c') : p(b) = g(c')}`.
pub fn pullback(e: &ShortExactSequence, g: &ModuleMap) -> Result<ShortExactSequence> {
    if g.target != e.right {
        return Err(ExtAlgError::EndMismatch("pullback map target != right term".into()));
    }
    let cprime = &g.source;
    let sum = e.mid.direct_sum(cprime)?;
    let diff = Mat::hstack(&[&e.project.mat, &g.mat.neg()]);
    let psi = ModuleMap { source: sum.clone(), target: e.right.clone(), mat: diff };
    let (mid, incl) = psi.kernel();

    // a -> (i a, 0) expressed on the kernel generators.
    let vec = Mat::vstack(&[&e.inject.mat, &Mat::zeros(cprime.gens(), e.left.gens())]);
    let inj_mat = sum
        .express_in(&incl.mat, &vec)
        .ok_or_else(|| ExtAlgError::DiagramInvariant("(i a, 0) does not land in pullback".into()))?;
    let proj_mat = incl.mat.submatrix(e.mid.gens()..sum.gens(), 0..incl.mat.ncols());
    let inject = ModuleMap { source: e.left.clone(), target: mid.clone(), mat: inj_mat };
    let project = ModuleMap { source: mid, target: cprime.clone(), mat: proj_mat };
    ShortExactSequence::new(inject, project)
}

/// Linear-system builder over a ring: unknowns are matrix entries of several
/// unknown blocks, equations are entrywise identities of matrix products.
struct MapSolver {
    ring: Ring,
    ncols: usize,
    rows: Vec<Vec<(usize, Rat)>>,
    rhs: Vec<Rat>,
}

/// An unknown matrix block with shape (nrows, ncols) at unknown-vector offset.
#[derive(Clone, Copy)]
struct Block {
    offset: usize,
    nrows: usize,
    ncols: usize,
}

impl Block {
    fn idx(&self, i: usize, j: usize) -> usize {
        self.offset + i * self.ncols + j
    }
}

impl MapSolver {
    fn new(ring: Ring) -> Self {
        MapSolver { ring, ncols: 0, rows: Vec::new(), rhs: Vec::new() }
    }

    fn block(&mut self, nrows: usize, ncols: usize) -> Block {
        let b = Block { offset: self.ncols, nrows, ncols };
        self.ncols += nrows * ncols;
        b
    }

    /// Add equations `sum_k terms[k].1 * X_{terms[k].0} * terms[k].2 = rhs`
    /// where each term contributes `L * X * R` entrywise.
    fn add_product_eq(&mut self, terms: &[(Block, Mat, Mat)], rhs: &Mat) {
        let (m, n) = (rhs.nrows(), rhs.ncols());
        for i in 0..m {
            for j in 0..n {
                let mut row: Vec<(usize, Rat)> = Vec::new();
                for (block, l, r) in terms {
                    // (L X R)[i][j] = sum_{p,q} L[i][p] X[p][q] R[q][j]
                    for p in 0..block.nrows {
                        let lip = &l[(i, p)];
                        if lip.is_zero() {
                            continue;
                        }
                        for q in 0..block.ncols {
                            let c = lip * &r[(q, j)];
                            if !c.is_zero() {
                                row.push((block.idx(p, q), c));
                            }
                        }
                    }
                }
                self.rows.push(row);
                self.rhs.push(rhs[(i, j)].clone());
            }
        }
    }

    fn solve(self) -> Option<Mat> {
        let m = self.rows.len();
        let mut a = Mat::zeros(m, self.ncols);
        let mut b = Mat::zeros(m, 1);
        for (i, row) in self.rows.iter().enumerate() {
            for (j, c) in row {
                let t = &a[(i, *j)] + c;
                a[(i, *j)] = t;
            }
            b[(i, 0)] = self.rhs[i].clone();
        }
        self.ring.solve(&a, &b)
    }
}

fn extract_block(sol: &Mat, block: Block) -> Mat {
    Mat::from_fn(block.nrows, block.ncols, |i, j| sol[(block.idx(i, j), 0)].clone())
}

/// The sequence transported to canonical diagonal presentations of all three
/// terms; same congruence class, far smaller matrices.
fn reduce_seq(
    e: &ShortExactSequence,
    lred: &(FgModule, Mat, Mat),
    rred: &(FgModule, Mat, Mat),
) -> (ShortExactSequence, (FgModule, Mat, Mat)) {
    let mred = e.mid.reduced();
    let inject = ModuleMap {
        source: lred.0.clone(),
        target: mred.0.clone(),
        mat: mred.1.mul(&e.inject.mat).mul(&lred.2),
    };
    let project = ModuleMap {
        source: mred.0.clone(),
        target: rred.0.clone(),
        mat: rred.1.mul(&e.project.mat).mul(&mred.2),
    };
    let seq = ShortExactSequence {
        left: lred.0.clone(),
        mid: mred.0.clone(),
        right: rred.0.clone(),
        inject,
        project,
    };
    (seq, mred)
}

/// A retraction `r: mid -> left` with `r o inject = id` (as module maps),
/// when the sequence splits over its ring; `None` otherwise.
pub fn is_split(e: &ShortExactSequence) -> Option<ModuleMap> {
    let lred = e.left.reduced();
    let rred = e.right.reduced();
    let (er, mred) = reduce_seq(e, &lred, &rred);
    let r_red = is_split_core(&er)?;
    // Transport the retraction back to the original presentations.
    Some(ModuleMap {
        source: e.mid.clone(),
        target: e.left.clone(),
        mat: lred.2.mul(&r_red.mat).mul(&mred.1),
    })
}

fn is_split_core(e: &ShortExactSequence) -> Option<ModuleMap> {
    let ring = e.left.ring;
    let ra = &e.left.rels; // m_A x k_A
    let rb = &e.mid.rels; // m_B x k_B
    let (ma, mb) = (e.left.gens(), e.mid.gens());
    let mut sys = MapSolver::new(ring);
    let r = sys.block(ma, mb);
    let y = sys.block(ra.ncols(), rb.ncols());
    let z = sys.block(ra.ncols(), ma);
    // r * Rb - Ra * Y = 0
    sys.add_product_eq(
        &[
            (r, Mat::identity(ma), rb.clone()),
            (y, ra.neg(), Mat::identity(rb.ncols())),
        ],
        &Mat::zeros(ma, rb.ncols()),
    );
    // r * inject - Ra * Z = I
    sys.add_product_eq(
        &[
            (r, Mat::identity(ma), e.inject.mat.clone()),
            (z, ra.neg(), Mat::identity(ma)),
        ],
        &Mat::identity(ma),
    );
    let sol = sys.solve()?;
    Some(ModuleMap { source: e.mid.clone(), target: e.left.clone(), mat: extract_block(&sol, r) })
}

/// Congruence of extensions with identical end presentations: existence of a
/// middle map commuting with both ends (an isomorphism by the five lemma),
/// decided by exact linear solvability over the ring.
pub fn congruent(e1: &ShortExactSequence, e2: &ShortExactSequence) -> Result<bool> {
    check_same_ends(e1, e2)?;
    // Reduce with a shared change of presentation on the common ends.
    let lred = e1.left.reduced();
    let rred = e1.right.reduced();
    let (r1, _) = reduce_seq(e1, &lred, &rred);
    let (r2, _) = reduce_seq(e2, &lred, &rred);
    congruent_core(&r1, &r2)
}

fn congruent_core(e1: &ShortExactSequence, e2: &ShortExactSequence) -> Result<bool> {
    let ring = e1.left.ring;
    let ma = e1.left.gens();
    let (mb1, mb2) = (e1.mid.gens(), e2.mid.gens());
    let rb1 = &e1.mid.rels;
    let rb2 = &e2.mid.rels;
    let rc = &e1.right.rels;
    let mut sys = MapSolver::new(ring);
    let phi = sys.block(mb2, mb1);
    let y = sys.block(rb2.ncols(), rb1.ncols());
    let z = sys.block(rb2.ncols(), ma);
    let w = sys.block(rc.ncols(), mb1);
    // phi * Rb1 - Rb2 * Y = 0
    sys.add_product_eq(
        &[
            (phi, Mat::identity(mb2), rb1.clone()),
            (y, rb2.neg(), Mat::identity(rb1.ncols())),
        ],
        &Mat::zeros(mb2, rb1.ncols()),
    );
    // phi * i1 - Rb2 * Z = i2
    sys.add_product_eq(
        &[
            (phi, Mat::identity(mb2), e1.inject.mat.clone()),
            (z, rb2.neg(), Mat::identity(ma)),
        ],
        &e2.inject.mat,
    );
    // p2 * phi - Rc * W = p1
    sys.add_product_eq(
        &[
            (phi, e2.project.mat.clone(), Mat::identity(mb1)),
            (w, rc.neg(), Mat::identity(mb1)),
        ],
        &e1.project.mat,
    );
    Ok(sys.solve().is_some())
}

/// An extension class: a sequence together with its splitting retraction when
/// one exists over the ring.
#[derive(Debug, Clone)]
pub struct ExtensionClass {
    pub seq: ShortExactSequence,
    pub retraction: Option<ModuleMap>,
}

impl ExtensionClass {
    pub fn of(seq: ShortExactSequence) -> Self {
        let retraction = is_split(&seq);
        ExtensionClass { seq, retraction }
    }

    pub fn is_split(&self) -> bool {
        self.retraction.is_some()
    }
}

/// Two horizontal exact sequences sharing the right term `B3`, with common
/// vertical data `0 -> A1 -> B1^j -> C1 -> 0` through their left terms.
#[derive(Debug, Clone)]
pub struct RabiDiagram {
    /// Horizontal sequences `0 -> B1^j -> B2^j -> B3 -> 0`.
    pub horiz: [ShortExactSequence; 2],
    /// Vertical injections `A1 -> B1^j`.
    pub vert_inject: [ModuleMap; 2],
    /// Vertical projections `B1^j -> C1`.
    pub vert_project: [ModuleMap; 2],
}

impl RabiDiagram {
    pub fn new(
        horiz: [ShortExactSequence; 2],
        vert_inject: [ModuleMap; 2],
        vert_project: [ModuleMap; 2],
    ) -> Result<Self> {
        if horiz[0].right != horiz[1].right {
            return Err(ExtAlgError::EndMismatch("horizontal sequences must share B3".into()));
        }
        if vert_inject[0].source != vert_inject[1].source {
            return Err(ExtAlgError::EndMismatch("vertical injections must share A1".into()));
        }
        if vert_project[0].target != vert_project[1].target {
            return Err(ExtAlgError::EndMismatch("vertical projections must share C1".into()));
        }
        for j in 0..2 {
            if vert_inject[j].target != horiz[j].left || vert_project[j].source != horiz[j].left {
                return Err(ExtAlgError::EndMismatch(
                    "vertical data must run through the horizontal left term".into(),
                ));
            }
        }
        let d = RabiDiagram { horiz, vert_inject, vert_project };
        d.validate()?;
        Ok(d)
    }

    /// Exactness of all four sequences in the diagram.
    pub fn validate(&self) -> Result<()> {
        for j in 0..2 {
            if !self.horiz[j].verify_exact().all_exact() {
                return Err(ExtAlgError::DiagramInvariant(format!(
                    "horizontal sequence {} is not exact",
                    j + 1
                )));
            }
            if !self.vertical(j)?.verify_exact().all_exact() {
                return Err(ExtAlgError::DiagramInvariant(format!(
                    "vertical sequence {} is not exact",
                    j + 1
                )));
            }
        }
        Ok(())
    }

    /// The vertical sequence `0 -> A1 -> B1^j -> C1 -> 0`.
    pub fn vertical(&self, j: usize) -> Result<ShortExactSequence> {
        ShortExactSequence::new(self.vert_inject[j].clone(), self.vert_project[j].clone())
    }

    pub fn a1(&self) -> &FgModule {
        &self.vert_inject[0].source
    }

    pub fn c1(&self) -> &FgModule {
        &self.vert_project[0].target
    }

    pub fn b3(&self) -> &FgModule {
        &self.horiz[0].right
    }
}

/// Output of the generalised Baer difference.
#[derive(Debug, Clone)]
pub struct GeneralizedBaerDifference {
    /// Baer difference of the vertical middles, `B1^1 (-) B1^2`, as a class
    /// in Ext(C1, A1).
    pub bb1: ExtensionClass,
    /// The generalised difference `H2 / D2` of the horizontal middles.
    pub bb2: FgModule,
    /// The obstruction sequence `0 -> C1 -> F -> B3 -> 0` with `F = BB2/BB1`.
    pub obstruction: ShortExactSequence,
}

/// The generalised Baer difference of a valid diagram, together with the
/// exact obstruction sequence.
pub fn generalized_baer_difference(d: &RabiDiagram) -> Result<GeneralizedBaerDifference> {
    let ring = d.a1().ring;
    let b21 = &d.horiz[0].mid;
    let b22 = &d.horiz[1].mid;
    let bsum = b21.direct_sum(b22)?;

    // BB1: ordinary Baer difference of the vertical sequences.
    let bb1_seq = baer_difference(&d.vertical(0)?, &d.vertical(1)?)?;
    let bb1 = ExtensionClass::of(bb1_seq.clone());

    // H2 = ker(psi), psi(b1, b2) = p1(b1) - p2(b2) into B3.
    let psi_mat = Mat::hstack(&[&d.horiz[0].project.mat, &d.horiz[1].project.mat.neg()]);
    let psi = ModuleMap { source: bsum.clone(), target: d.b3().clone(), mat: psi_mat };
    let (h2, h2_incl) = psi.kernel();

    // D2 = image of a -> (f1 i1 a, f2 i2 a).
    let col1 = d.horiz[0].inject.mat.mul(&d.vert_inject[0].mat);
    let col2 = d.horiz[1].inject.mat.mul(&d.vert_inject[1].mat);
    let diag = Mat::vstack(&[&col1, &col2]);
    let d2 = bsum
        .express_in(&h2_incl.mat, &diag)
        .ok_or_else(|| ExtAlgError::DiagramInvariant("D2 does not land in H2".into()))?;
    let bb2 = FgModule {
        ring,
        gens: h2.gens,
        rels: Mat::hstack(&[&h2.rels, &d2]),
    };

    // Image of BB1 in BB2 under f1 + f2; its generators are the BB1
    // generators (pairs in B1^1 + B1^2) pushed through the injections.
    let bb1_gens_in_bsum = {
        // BB1 generators were produced as kernel generators of the vertical
        // difference map; recover them by mapping through f1 + f2.
        let psi_v_mat =
            Mat::hstack(&[&d.vert_project[0].mat, &d.vert_project[1].mat.neg()]);
        let b1sum = d.horiz[0].left.direct_sum(&d.horiz[1].left)?;
        let psi_v = ModuleMap { source: b1sum, target: d.c1().clone(), mat: psi_v_mat };
        let (_, hv_incl) = psi_v.kernel();
        let m11 = d.horiz[0].left.gens();
        let top = hv_incl.mat.submatrix(0..m11, 0..hv_incl.mat.ncols());
        let bot = hv_incl.mat.submatrix(m11..hv_incl.mat.nrows(), 0..hv_incl.mat.ncols());
        Mat::vstack(&[&d.horiz[0].inject.mat.mul(&top), &d.horiz[1].inject.mat.mul(&bot)])
    };
    let bb1_in_bb2 = bsum
        .express_in(&h2_incl.mat, &bb1_gens_in_bsum)
        .ok_or_else(|| ExtAlgError::DiagramInvariant("BB1 does not land in H2".into()))?;

    // F = BB2 / BB1.
    let f_mod = FgModule {
        ring,
        gens: bb2.gens,
        rels: Mat::hstack(&[&bb2.rels, &bb1_in_bb2]),
    };

    // phi: C1 -> F, c -> class of (f1(pi1^{-1}(c)), 0).
    let c1 = d.c1();
    let mut phi_cols = Mat::zeros(f_mod.gens, c1.gens());
    for t in 0..c1.gens() {
        let mut e = Mat::zeros(c1.gens(), 1);
        e[(t, 0)] = Rat::one();
        let sys = Mat::hstack(&[&d.vert_project[0].mat, &c1.rels]);
        let x = ring.solve(&sys, &e).ok_or(ExtAlgError::NoPreimage)?;
        let b1 = x.submatrix(0..d.horiz[0].left.gens(), 0..1);
        let lifted = Mat::vstack(&[
            &d.horiz[0].inject.mat.mul(&b1),
            &Mat::zeros(b22.gens(), 1),
        ]);
        let coords = bsum
            .express_in(&h2_incl.mat, &lifted)
            .ok_or_else(|| ExtAlgError::DiagramInvariant("phi image not in H2".into()))?;
        for i in 0..f_mod.gens {
            phi_cols[(i, t)] = coords[(i, 0)].clone();
        }
    }
    let phi = ModuleMap { source: c1.clone(), target: f_mod.clone(), mat: phi_cols };

    // p-bar: F -> B3 via p1 on the first block of the H2 generators.
    let h2_top = h2_incl.mat.submatrix(0..b21.gens(), 0..h2_incl.mat.ncols());
    let pbar = ModuleMap {
        source: f_mod,
        target: d.b3().clone(),
        mat: d.horiz[0].project.mat.mul(&h2_top),
    };
    let obstruction = ShortExactSequence::new(phi, pbar)?;
    Ok(GeneralizedBaerDifference { bb1, bb2, obstruction })
}

/// Corollary check: the obstruction sequence is congruent to the Baer
/// difference of the pushforwards `e_j = (pi_j)_* E_j`.
pub fn rabi_corollary_check(d: &RabiDiagram) -> Result<bool> {
    let out = generalized_baer_difference(d)?;
    let e1 = pushforward(&d.horiz[0], &d.vert_project[0])?;
    let e2 = pushforward(&d.horiz[1], &d.vert_project[1])?;
    let diff = baer_difference(&e1, &e2)?;
    congruent(&diff, &out.obstruction)
}

pub mod sample;

#[cfg(test)]
mod tests;
