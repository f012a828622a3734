//! Seeded random generators for extension-calculus stress tests: finite
//! abelian groups built from explicit cocycles, and twisted split sequences
//! of rational vector spaces.  Exactness of every generated sequence is a
//! consequence of the construction, which the test suites re-verify.

use super::{FgModule, ModuleMap, RabiDiagram, Result, Ring, ShortExactSequence};
use crate::exact::{rat, Mat, Rat};
use num_traits::{One, Zero};
use rand::Rng;

/// Random finite abelian group as a diagonal presentation; the product of
/// the cyclic orders stays at or below `max_order`.
pub fn random_finite_diagonal(rng: &mut impl Rng, max_order: i64) -> FgModule {
    let choices = [2i64, 2, 3, 3, 4, 5, 8, 9];
    let mut orders = Vec::new();
    let mut total = 1i64;
    let gens = rng.gen_range(1..=3);
    for _ in 0..gens {
        let d = choices[rng.gen_range(0..choices.len())];
        if total * d <= max_order {
            total *= d;
            orders.push(d);
        }
    }
    if orders.is_empty() {
        orders.push(2);
    }
    FgModule::diagonal(Ring::Int, &orders)
}

/// Extension of a diagonally presented `right` by an arbitrary `left`,
/// glued by the cocycle `w` (one column per relation of `right`, entries in
/// `left` generator coordinates).  The resulting sequence is exact because
/// the relation matrix of `right` has trivial integer kernel.
pub fn cocycle_extension(
    left: &FgModule,
    right: &FgModule,
    w: &Mat,
) -> Result<ShortExactSequence> {
    let (ml, mr) = (left.gens(), right.gens());
    let rels = Mat::vstack(&[
        &Mat::hstack(&[left.rels(), w]),
        &Mat::hstack(&[&Mat::zeros(mr, left.rels().ncols()), right.rels()]),
    ]);
    let mid = FgModule::new(left.ring(), ml + mr, rels)?;
    let inj = Mat::vstack(&[&Mat::identity(ml), &Mat::zeros(mr, ml)]);
    let proj = Mat::hstack(&[&Mat::zeros(mr, ml), &Mat::identity(mr)]);
    let inject = ModuleMap { source: left.clone(), target: mid.clone(), mat: inj };
    let project = ModuleMap { source: mid, target: right.clone(), mat: proj };
    ShortExactSequence::new(inject, project)
}

/// Random cocycle extension of `right` (diagonal) by `left`.
pub fn random_extension(
    rng: &mut impl Rng,
    left: &FgModule,
    right: &FgModule,
) -> Result<ShortExactSequence> {
    let w = Mat::from_fn(left.gens(), right.rels().ncols(), |_, _| {
        rat(rng.gen_range(-4..=4))
    });
    cocycle_extension(left, right, &w)
}

/// Random unimodular integer matrix: a product of elementary shears and
/// row swaps applied to the identity.
pub fn random_unimodular(rng: &mut impl Rng, n: usize) -> Mat {
    let mut u = Mat::identity(n);
    if n < 2 {
        return u;
    }
    for _ in 0..3 * n {
        let i = rng.gen_range(0..n);
        let mut j = rng.gen_range(0..n);
        while j == i {
            j = rng.gen_range(0..n);
        }
        let q = rat(rng.gen_range(-2..=2));
        // row i += q * row j, always det +-1
        for c in 0..n {
            let t = &u[(i, c)] + &(&q * &u[(j, c)]);
            u[(i, c)] = t;
        }
    }
    u
}

/// Split sequence `0 -> A -> A + C -> C -> 0` of free modules, conjugated by
/// a random unimodular change of basis on the middle (so the maps look
/// generic while the class stays trivial).
pub fn twisted_split(
    rng: &mut impl Rng,
    a: &FgModule,
    c: &FgModule,
) -> Result<ShortExactSequence> {
    let (da, dc) = (a.gens(), c.gens());
    let n = da + dc;
    let u = random_unimodular(rng, n);
    let uinv = u
        .solve_rat(&Mat::identity(n))
        .expect("unimodular matrix is invertible");
    let mid = FgModule::free(a.ring(), n);
    let inj = Mat::from_fn(n, da, |i, j| u[(i, j)].clone());
    let proj = Mat::from_fn(dc, n, |i, j| uinv[(da + i, j)].clone());
    let inject = ModuleMap { source: a.clone(), target: mid.clone(), mat: inj };
    let project = ModuleMap { source: mid, target: c.clone(), mat: proj };
    ShortExactSequence::new(inject, project)
}

/// Random diagram of finite abelian groups (every corner of order at most
/// `max_order`): two cocycle verticals `0 -> A1 -> B1^j -> C1 -> 0` and two
/// cocycle horizontals `0 -> B1^j -> B2^j -> B3 -> 0` over a shared `B3`.
pub fn random_rabi_diagram_int(rng: &mut impl Rng, max_order: i64) -> Result<RabiDiagram> {
    let a1 = random_finite_diagonal(rng, max_order);
    let c1 = random_finite_diagonal(rng, max_order);
    let b3 = random_finite_diagonal(rng, max_order);
    let v1 = random_extension(rng, &a1, &c1)?;
    let v2 = random_extension(rng, &a1, &c1)?;
    let h1 = random_extension(rng, &v1.mid, &b3)?;
    let h2 = random_extension(rng, &v2.mid, &b3)?;
    RabiDiagram::new(
        [h1, h2],
        [v1.inject, v2.inject],
        [v1.project, v2.project],
    )
}

/// Random diagram of rational vector spaces with every corner of dimension
/// at most `max_dim` (at least 1 each for `A1`, `C1`, `B3`).
pub fn random_rabi_diagram_rat(rng: &mut impl Rng, max_dim: usize) -> Result<RabiDiagram> {
    let budget = max_dim.max(3);
    let da = rng.gen_range(1..=budget - 2);
    let dc = rng.gen_range(1..=(budget - da - 1));
    let db = rng.gen_range(1..=(budget - da - dc));
    let a1 = FgModule::free(Ring::Rat, da);
    let c1 = FgModule::free(Ring::Rat, dc);
    let b3 = FgModule::free(Ring::Rat, db);
    let v1 = twisted_split(rng, &a1, &c1)?;
    let v2 = twisted_split(rng, &a1, &c1)?;
    let h1 = twisted_split(rng, &v1.mid, &b3)?;
    let h2 = twisted_split(rng, &v2.mid, &b3)?;
    RabiDiagram::new(
        [h1, h2],
        [v1.inject, v2.inject],
        [v1.project, v2.project],
    )
}

/// A random column vector with small integer entries; handy for witnesses.
pub fn random_int_vector(rng: &mut impl Rng, n: usize) -> Mat {
    Mat::from_fn(n, 1, |_, _| rat(rng.gen_range(-5..=5)))
}

/// Random rational matrix with small numerators and denominators.
pub fn random_rat_matrix(rng: &mut impl Rng, nrows: usize, ncols: usize) -> Mat {
    Mat::from_fn(nrows, ncols, |_, _| {
        let n = rng.gen_range(-6i64..=6);
        let d = rng.gen_range(1i64..=3);
        Rat::new(n.into(), d.into())
    })
}

/// Random well-defined map between diagonally presented integral modules:
/// generator `j` of order `d_j` maps to a random multiple of a generator
/// whose order divides a compatible target, scaled to respect relations.
pub fn random_diag_map(
    rng: &mut impl Rng,
    source: &FgModule,
    target: &FgModule,
) -> ModuleMap {
    // Entry (i, j) must satisfy d_source_j * m_ij = 0 in Z/d_target_i, i.e.
    // d_target_i | d_source_j * m_ij; pick m_ij = k * d_i / gcd(d_i, d_j).
    let order = |m: &FgModule, g: usize| -> i64 {
        for c in 0..m.rels().ncols() {
            let v = &m.rels()[(g, c)];
            if !v.is_zero() {
                return i64::try_from(v.to_integer()).unwrap_or(0).abs();
            }
        }
        0
    };
    let mat = Mat::from_fn(target.gens(), source.gens(), |i, j| {
        let di = order(target, i);
        let dj = order(source, j);
        let step = if di == 0 {
            if dj == 0 {
                Rat::one() // free to free: any integer
            } else {
                return rat(0); // torsion cannot map to a free generator
            }
        } else if dj == 0 {
            rat(1)
        } else {
            rat(di / num_integer::gcd(di, dj))
        };
        &rat(rng.gen_range(-3..=3)) * &step
    });
    ModuleMap::new(source.clone(), target.clone(), mat)
        .expect("construction respects relations")
}
