//! Dense matrices over the rationals with exact integer linear algebra.
//!
//! Everything in [`crate::extalg`] reduces to four primitives implemented here:
//! rational rank/solve/kernel by Gaussian elimination, and integer solve/kernel
//! through the Smith normal form. Matrices are small (tens of rows), so a dense
//! `BigRational` representation is exact and fast enough.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::fmt;

pub type Rat = BigRational;

pub fn rat(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Row-major dense matrix over `BigRational`.
#[derive(Clone, PartialEq, Eq)]
pub struct Mat {
    nrows: usize,
    ncols: usize,
    data: Vec<Rat>,
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Mat {}x{} [", self.nrows, self.ncols)?;
        for i in 0..self.nrows {
            let row: Vec<String> = (0..self.ncols).map(|j| self[(i, j)].to_string()).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = Rat;
    fn index(&self, (i, j): (usize, usize)) -> &Rat {
        &self.data[i * self.ncols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Rat {
        &mut self.data[i * self.ncols + j]
    }
}

impl Mat {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Mat { nrows, ncols, data: vec![Rat::zero(); nrows * ncols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Rat::one();
        }
        m
    }

    pub fn from_fn(nrows: usize, ncols: usize, mut f: impl FnMut(usize, usize) -> Rat) -> Self {
        let mut m = Mat::zeros(nrows, ncols);
        for i in 0..nrows {
            for j in 0..ncols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn from_rows(rows: &[&[i64]]) -> Self {
        let nrows = rows.len();
        let ncols = if nrows == 0 { 0 } else { rows[0].len() };
        Mat::from_fn(nrows, ncols, |i, j| rat(rows[i][j]))
    }

    /// Column vector from integer entries.
    pub fn col_vec(entries: &[i64]) -> Self {
        Mat::from_fn(entries.len(), 1, |i, _| rat(entries[i]))
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    pub fn is_integer(&self) -> bool {
        self.data.iter().all(|x| x.is_integer())
    }

    pub fn column(&self, j: usize) -> Mat {
        Mat::from_fn(self.nrows, 1, |i, _| self[(i, j)].clone())
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.ncols, self.nrows, |i, j| self[(j, i)].clone())
    }

    pub fn hstack(blocks: &[&Mat]) -> Mat {
        assert!(!blocks.is_empty());
        let nrows = blocks[0].nrows;
        assert!(blocks.iter().all(|b| b.nrows == nrows));
        let ncols = blocks.iter().map(|b| b.ncols).sum();
        let mut m = Mat::zeros(nrows, ncols);
        let mut off = 0;
        for b in blocks {
            for i in 0..nrows {
                for j in 0..b.ncols {
                    m[(i, off + j)] = b[(i, j)].clone();
                }
            }
            off += b.ncols;
        }
        m
    }

    pub fn vstack(blocks: &[&Mat]) -> Mat {
        assert!(!blocks.is_empty());
        let ncols = blocks[0].ncols;
        assert!(blocks.iter().all(|b| b.ncols == ncols));
        let nrows = blocks.iter().map(|b| b.nrows).sum();
        let mut m = Mat::zeros(nrows, ncols);
        let mut off = 0;
        for b in blocks {
            for i in 0..b.nrows {
                for j in 0..ncols {
                    m[(off + i, j)] = b[(i, j)].clone();
                }
            }
            off += b.nrows;
        }
        m
    }

    /// Block-diagonal assembly.
    pub fn block_diag(blocks: &[&Mat]) -> Mat {
        let nrows = blocks.iter().map(|b| b.nrows).sum();
        let ncols = blocks.iter().map(|b| b.ncols).sum();
        let mut m = Mat::zeros(nrows, ncols);
        let (mut ro, mut co) = (0, 0);
        for b in blocks {
            for i in 0..b.nrows {
                for j in 0..b.ncols {
                    m[(ro + i, co + j)] = b[(i, j)].clone();
                }
            }
            ro += b.nrows;
            co += b.ncols;
        }
        m
    }

    pub fn submatrix(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Mat {
        Mat::from_fn(rows.len(), cols.len(), |i, j| self[(rows.start + i, cols.start + j)].clone())
    }

    pub fn mul(&self, other: &Mat) -> Mat {
        assert_eq!(self.ncols, other.nrows, "dimension mismatch in mul");
        let mut m = Mat::zeros(self.nrows, other.ncols);
        for i in 0..self.nrows {
            for k in 0..self.ncols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.ncols {
                    let t = a * &other[(k, j)];
                    m[(i, j)] += t;
                }
            }
        }
        m
    }

    pub fn add(&self, other: &Mat) -> Mat {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        Mat::from_fn(self.nrows, self.ncols, |i, j| &self[(i, j)] + &other[(i, j)])
    }

    pub fn sub(&self, other: &Mat) -> Mat {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        Mat::from_fn(self.nrows, self.ncols, |i, j| &self[(i, j)] - &other[(i, j)])
    }

    pub fn neg(&self) -> Mat {
        Mat::from_fn(self.nrows, self.ncols, |i, j| -self[(i, j)].clone())
    }

    pub fn scale(&self, s: &Rat) -> Mat {
        Mat::from_fn(self.nrows, self.ncols, |i, j| &self[(i, j)] * s)
    }

    /// Rational rank by fraction-free Gaussian elimination.
    pub fn rank(&self) -> usize {
        let mut a = self.clone();
        let mut rank = 0;
        for col in 0..a.ncols {
            if rank == a.nrows {
                break;
            }
            let pivot = (rank..a.nrows).find(|&i| !a[(i, col)].is_zero());
            let Some(p) = pivot else { continue };
            a.swap_rows(rank, p);
            let inv = a[(rank, col)].recip();
            for j in col..a.ncols {
                let t = &a[(rank, j)] * &inv;
                a[(rank, j)] = t;
            }
            for i in 0..a.nrows {
                if i != rank && !a[(i, col)].is_zero() {
                    let f = a[(i, col)].clone();
                    for j in col..a.ncols {
                        let t = &a[(i, j)] - &(&a[(rank, j)] * &f);
                        a[(i, j)] = t;
                    }
                }
            }
            rank += 1;
        }
        rank
    }

    fn swap_rows(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for c in 0..self.ncols {
            self.data.swap(i * self.ncols + c, j * self.ncols + c);
        }
    }

    /// Solve `A X = B` over the rationals; `None` if inconsistent.
    pub fn solve_rat(&self, b: &Mat) -> Option<Mat> {
        assert_eq!(self.nrows, b.nrows);
        let mut aug = Mat::hstack(&[self, b]);
        let n = self.ncols;
        let mut pivots: Vec<(usize, usize)> = Vec::new();
        let mut row = 0;
        for col in 0..n {
            if row == aug.nrows {
                break;
            }
            let Some(p) = (row..aug.nrows).find(|&i| !aug[(i, col)].is_zero()) else { continue };
            aug.swap_rows(row, p);
            let inv = aug[(row, col)].recip();
            for j in col..aug.ncols {
                let t = &aug[(row, j)] * &inv;
                aug[(row, j)] = t;
            }
            for i in 0..aug.nrows {
                if i != row && !aug[(i, col)].is_zero() {
                    let f = aug[(i, col)].clone();
                    for j in col..aug.ncols {
                        let t = &aug[(i, j)] - &(&aug[(row, j)] * &f);
                        aug[(i, j)] = t;
                    }
                }
            }
            pivots.push((row, col));
            row += 1;
        }
        // Consistency: rows with zero coefficient part must have zero rhs.
        for i in row..aug.nrows {
            for j in n..aug.ncols {
                if !aug[(i, j)].is_zero() {
                    return None;
                }
            }
        }
        let mut x = Mat::zeros(n, b.ncols);
        for &(r, c) in &pivots {
            for j in 0..b.ncols {
                x[(c, j)] = aug[(r, n + j)].clone();
            }
        }
        Some(x)
    }

    /// Basis of the rational kernel as matrix columns.
    pub fn kernel_rat(&self) -> Mat {
        let mut a = self.clone();
        let n = a.ncols;
        let mut pivots: Vec<(usize, usize)> = Vec::new();
        let mut row = 0;
        for col in 0..n {
            if row == a.nrows {
                break;
            }
            let Some(p) = (row..a.nrows).find(|&i| !a[(i, col)].is_zero()) else { continue };
            a.swap_rows(row, p);
            let inv = a[(row, col)].recip();
            for j in col..n {
                let t = &a[(row, j)] * &inv;
                a[(row, j)] = t;
            }
            for i in 0..a.nrows {
                if i != row && !a[(i, col)].is_zero() {
                    let f = a[(i, col)].clone();
                    for j in col..n {
                        let t = &a[(i, j)] - &(&a[(row, j)] * &f);
                        a[(i, j)] = t;
                    }
                }
            }
            pivots.push((row, col));
            row += 1;
        }
        let pivot_cols: Vec<usize> = pivots.iter().map(|&(_, c)| c).collect();
        let free_cols: Vec<usize> = (0..n).filter(|c| !pivot_cols.contains(c)).collect();
        let mut k = Mat::zeros(n, free_cols.len());
        for (idx, &fc) in free_cols.iter().enumerate() {
            k[(fc, idx)] = Rat::one();
            for &(r, c) in &pivots {
                k[(c, idx)] = -a[(r, fc)].clone();
            }
        }
        k
    }

    /// Smith normal form `U * A * V = S` with `U`, `V` unimodular.
    /// Requires integer entries.
    pub fn snf(&self) -> Snf {
        assert!(self.is_integer(), "snf requires an integer matrix");
        let mut s = self.clone();
        let mut u = Mat::identity(self.nrows);
        let mut v = Mat::identity(self.ncols);
        let dim = self.nrows.min(self.ncols);
        let mut t = 0;
        while t < dim {
            // Pivot: nonzero entry of minimal absolute numerator in s[t.., t..].
            let mut pivot: Option<(usize, usize)> = None;
            let mut best: Option<BigInt> = None;
            for i in t..s.nrows {
                for j in t..s.ncols {
                    if !s[(i, j)].is_zero() {
                        let a = s[(i, j)].numer().abs();
                        if best.as_ref().map_or(true, |b| &a < b) {
                            best = Some(a);
                            pivot = Some((i, j));
                        }
                    }
                }
            }
            let Some((pi, pj)) = pivot else { break };
            s.swap_rows(t, pi);
            u.swap_rows(t, pi);
            s.swap_cols(t, pj);
            v.swap_cols(t, pj);

            // Eliminate row/column t; restarts when a smaller remainder appears.
            let mut clean = true;
            for i in t + 1..s.nrows {
                if !s[(i, t)].is_zero() {
                    let q = div_round(&s[(i, t)], &s[(t, t)]);
                    s.row_axpy(i, t, &-q.clone());
                    u.row_axpy(i, t, &-q);
                    if !s[(i, t)].is_zero() {
                        clean = false;
                    }
                }
            }
            for j in t + 1..s.ncols {
                if !s[(t, j)].is_zero() {
                    let q = div_round(&s[(t, j)], &s[(t, t)]);
                    s.col_axpy(j, t, &-q.clone());
                    v.col_axpy(j, t, &-q);
                    if !s[(t, j)].is_zero() {
                        clean = false;
                    }
                }
            }
            if !clean {
                continue; // smaller pivot now available; redo this index
            }
            // Divisibility: s[t][t] must divide every later entry.
            let mut fixed = true;
            'outer: for i in t + 1..s.nrows {
                for j in t + 1..s.ncols {
                    if !(&s[(i, j)] / &s[(t, t)]).is_integer() {
                        // Fold row i into row t to expose a gcd, then redo.
                        s.row_axpy(t, i, &Rat::one());
                        u.row_axpy(t, i, &Rat::one());
                        fixed = false;
                        break 'outer;
                    }
                }
            }
            if !fixed {
                continue;
            }
            if s[(t, t)].numer().is_negative() {
                s.scale_row(t, -1);
                u.scale_row(t, -1);
            }
            t += 1;
        }
        Snf { u, s, v }
    }

    fn swap_cols(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for r in 0..self.nrows {
            self.data.swap(r * self.ncols + i, r * self.ncols + j);
        }
    }

    /// row[i] += q * row[j]
    fn row_axpy(&mut self, i: usize, j: usize, q: &Rat) {
        for c in 0..self.ncols {
            let t = &self[(i, c)] + &(q * &self[(j, c)]);
            self[(i, c)] = t;
        }
    }

    /// col[i] += q * col[j]
    fn col_axpy(&mut self, i: usize, j: usize, q: &Rat) {
        for r in 0..self.nrows {
            let t = &self[(r, i)] + &(q * &self[(r, j)]);
            self[(r, i)] = t;
        }
    }

    fn scale_row(&mut self, i: usize, s: i64) {
        for c in 0..self.ncols {
            let t = &self[(i, c)] * rat(s);
            self[(i, c)] = t;
        }
    }

    /// Solve `A X = B` over the integers; `None` if no integral solution.
    pub fn solve_int(&self, b: &Mat) -> Option<Mat> {
        assert!(self.is_integer() && b.is_integer(), "solve_int requires integer data");
        assert_eq!(self.nrows, b.nrows);
        let Snf { u, s, v } = self.snf();
        let ub = u.mul(b);
        let mut y = Mat::zeros(self.ncols, b.ncols);
        let dim = self.nrows.min(self.ncols);
        for j in 0..b.ncols {
            for i in 0..self.nrows {
                let d = if i < dim { s[(i, i)].clone() } else { Rat::zero() };
                if d.is_zero() {
                    if !ub[(i, j)].is_zero() {
                        return None;
                    }
                } else {
                    let q = &ub[(i, j)] / &d;
                    if !q.is_integer() {
                        return None;
                    }
                    y[(i, j)] = q;
                }
            }
        }
        Some(v.mul(&y))
    }

    /// Integer basis of the kernel (columns); saturated by construction.
    pub fn kernel_int(&self) -> Mat {
        assert!(self.is_integer(), "kernel_int requires integer data");
        let Snf { u: _, s, v } = self.snf();
        let dim = self.nrows.min(self.ncols);
        let mut rank = 0;
        for i in 0..dim {
            if !s[(i, i)].is_zero() {
                rank += 1;
            }
        }
        let cols: Vec<usize> = (rank..self.ncols).collect();
        let mut k = Mat::zeros(self.ncols, cols.len());
        for (idx, &c) in cols.iter().enumerate() {
            for r in 0..self.ncols {
                k[(r, idx)] = v[(r, c)].clone();
            }
        }
        k
    }
}

/// Round-to-nearest integer quotient; keeps SNF remainders small.
fn div_round(a: &Rat, b: &Rat) -> Rat {
    let q = a / b;
    Rat::from_integer(q.round().to_integer())
}

/// Result of a Smith normal form computation: `u * a * v = s`.
pub struct Snf {
    pub u: Mat,
    pub s: Mat,
    pub v: Mat,
}

/// Serde adapter: matrices as `{ nrows, ncols, data }` with row-major entries
/// rendered exactly as decimal strings (`"-3/7"`).
pub mod serde_mat {
    use super::{Mat, Rat};
    use serde::de::Error as DeError;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use std::str::FromStr;

    #[derive(Serialize, Deserialize)]
    struct Wire {
        nrows: usize,
        ncols: usize,
        data: Vec<String>,
    }

    pub fn serialize<S: Serializer>(mat: &Mat, ser: S) -> Result<S::Ok, S::Error> {
        let wire = Wire {
            nrows: mat.nrows(),
            ncols: mat.ncols(),
            data: (0..mat.nrows())
                .flat_map(|i| (0..mat.ncols()).map(move |j| (i, j)))
                .map(|(i, j)| mat[(i, j)].to_string())
                .collect(),
        };
        wire.serialize(ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Mat, D::Error> {
        let wire = Wire::deserialize(de)?;
        if wire.data.len() != wire.nrows * wire.ncols {
            return Err(D::Error::custom("matrix entry count does not match shape"));
        }
        let mut mat = Mat::zeros(wire.nrows, wire.ncols);
        for i in 0..wire.nrows {
            for j in 0..wire.ncols {
                let s = &wire.data[i * wire.ncols + j];
                mat[(i, j)] =
                    Rat::from_str(s).map_err(|e| D::Error::custom(format!("bad entry {s}: {e}")))?;
            }
        }
        Ok(mat)
    }
}
