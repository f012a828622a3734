//! Exact q-series arithmetic for Delta, Delta_N and E_N, and the exact
//! modular-unit decomposition of div(Delta_N) into simple units.
//!
//! Series coefficients are exact rationals; exponents are integer multiples
//! of `1/denom` so substitutions like `q -> q^{1/m}` stay exact.  Every
//! identity in this module is checked coefficient by coefficient, never
//! numerically.

use crate::exact::Rat;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModularError {
    #[error("level {0} is not squarefree")]
    NotSquarefree(u64),
    #[error("{0} is not a prime divisor of the level {1}")]
    BadPrime(u64, u64),
    #[error("series has zero leading coefficient; cannot invert")]
    ZeroLeading,
    #[error("series truncation orders are incompatible: {0}")]
    Truncation(String),
    #[error("the cusp-divisor formula needs a level with at least one prime")]
    TrivialLevel,
}

pub type Result<T> = std::result::Result<T, ModularError>;

/// Truncated power series `sum c_e q^{e/denom}` with exact coefficients,
/// known exactly for exponents `lo/denom <= e/denom < hi/denom`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QSeries {
    denom: i64,
    lo: i64,
    coeffs: Vec<Rat>,
}

impl QSeries {
    pub fn new(denom: i64, lo: i64, coeffs: Vec<Rat>) -> Self {
        assert!(denom >= 1);
        QSeries { denom, lo, coeffs }
    }

    /// The constant series 1, known through exponent `< hi`.
    pub fn one(hi: i64) -> Self {
        let mut coeffs = vec![Rat::zero(); hi.max(1) as usize];
        coeffs[0] = Rat::one();
        QSeries { denom: 1, lo: 0, coeffs }
    }

    pub fn denom(&self) -> i64 {
        self.denom
    }

    /// Exponent bound: coefficients are exact for exponents `< hi/denom`.
    pub fn hi(&self) -> i64 {
        self.lo + self.coeffs.len() as i64
    }

    /// Leading exponent as `(numerator, denominator)`, after trimming zeros.
    pub fn leading_exponent(&self) -> Option<(i64, i64)> {
        self.coeffs
            .iter()
            .position(|c| !c.is_zero())
            .map(|k| (self.lo + k as i64, self.denom))
    }

    pub fn leading_coefficient(&self) -> Option<&Rat> {
        self.coeffs.iter().find(|c| !c.is_zero())
    }

    /// Coefficient of `q^{n/d}` (zero if the exponent is not representable;
    /// panics if it is beyond the truncation order).
    pub fn coefficient(&self, n: i64, d: i64) -> Rat {
        // n/d = e/self.denom  =>  e = n * self.denom / d
        if (n * self.denom) % d != 0 {
            return Rat::zero();
        }
        let e = n * self.denom / d;
        assert!(e < self.hi(), "coefficient beyond truncation order");
        if e < self.lo {
            return Rat::zero();
        }
        self.coeffs[(e - self.lo) as usize].clone()
    }

    /// Rewrite with a larger exponent denominator (a multiple of the current).
    pub fn with_denom(&self, denom: i64) -> QSeries {
        assert!(denom % self.denom == 0);
        let k = denom / self.denom;
        if k == 1 {
            return self.clone();
        }
        let mut coeffs = vec![Rat::zero(); (self.coeffs.len() as i64 * k) as usize];
        for (i, c) in self.coeffs.iter().enumerate() {
            coeffs[i * k as usize] = c.clone();
        }
        QSeries { denom, lo: self.lo * k, coeffs }
    }

    /// Substitute `q -> q^{num/den}`, scaling every exponent by `num/den`.
    pub fn substitute(&self, num: i64, den: i64) -> QSeries {
        assert!(num >= 1 && den >= 1);
        let mut out = self.clone();
        out.denom *= den;
        out.lo *= num;
        let mut coeffs = vec![Rat::zero(); (self.coeffs.len() as i64 * num) as usize];
        for (i, c) in self.coeffs.iter().enumerate() {
            coeffs[i * num as usize] = c.clone();
        }
        out.coeffs = coeffs;
        out.normalize()
    }

    /// Reduce the exponent denominator when all exponents share a factor.
    fn normalize(mut self) -> QSeries {
        'outer: loop {
            if self.denom == 1 {
                break;
            }
            for p in [2i64, 3, 5, 7] {
                if self.denom % p == 0
                    && self.lo % p == 0
                    && self
                        .coeffs
                        .iter()
                        .enumerate()
                        .all(|(i, c)| c.is_zero() || (self.lo + i as i64) % p == 0)
                {
                    let hi = self.hi();
                    // Shrink: keep exponents divisible by p; the new bound is
                    // the largest multiple of p not above hi.
                    let new_hi = hi.div_euclid(p);
                    let new_lo = self.lo / p;
                    let mut coeffs = vec![Rat::zero(); (new_hi - new_lo).max(0) as usize];
                    for (i, c) in self.coeffs.iter().enumerate() {
                        let e = self.lo + i as i64;
                        if e % p == 0 && e / p < new_hi {
                            coeffs[(e / p - new_lo) as usize] = c.clone();
                        }
                    }
                    self = QSeries { denom: self.denom / p, lo: new_lo, coeffs };
                    continue 'outer;
                }
            }
            break;
        }
        self
    }

    fn aligned(&self, other: &QSeries) -> (QSeries, QSeries) {
        let d = num_integer::lcm(self.denom, other.denom);
        (self.with_denom(d), other.with_denom(d))
    }

    pub fn add(&self, other: &QSeries) -> QSeries {
        let (a, b) = self.aligned(other);
        let lo = a.lo.min(b.lo);
        let hi = a.hi().min(b.hi());
        let mut coeffs = vec![Rat::zero(); (hi - lo).max(0) as usize];
        for s in [&a, &b] {
            for (i, c) in s.coeffs.iter().enumerate() {
                let e = s.lo + i as i64;
                if e < hi {
                    let slot = &mut coeffs[(e - lo) as usize];
                    *slot = &*slot + c;
                }
            }
        }
        QSeries { denom: a.denom, lo, coeffs }
    }

    pub fn neg(&self) -> QSeries {
        QSeries {
            denom: self.denom,
            lo: self.lo,
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }

    pub fn sub(&self, other: &QSeries) -> QSeries {
        self.add(&other.neg())
    }

    pub fn scale(&self, s: &Rat) -> QSeries {
        QSeries {
            denom: self.denom,
            lo: self.lo,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn mul(&self, other: &QSeries) -> QSeries {
        let (a, b) = self.aligned(other);
        let lo = a.lo + b.lo;
        // Precision: unknown tails start at a.hi and b.hi respectively.
        let hi = (a.hi() + b.lo).min(b.hi() + a.lo);
        let mut coeffs = vec![Rat::zero(); (hi - lo).max(0) as usize];
        for (i, ca) in a.coeffs.iter().enumerate() {
            if ca.is_zero() {
                continue;
            }
            for (j, cb) in b.coeffs.iter().enumerate() {
                let e = a.lo + i as i64 + b.lo + j as i64;
                if e >= hi {
                    break;
                }
                let slot = &mut coeffs[(e - lo) as usize];
                *slot = &*slot + &(ca * cb);
            }
        }
        QSeries { denom: a.denom, lo, coeffs }
    }

    /// Multiplicative inverse; requires a nonzero leading coefficient.
    pub fn inverse(&self) -> Result<QSeries> {
        let (le, _) = self.leading_exponent().ok_or(ModularError::ZeroLeading)?;
        let shift = (le - self.lo) as usize;
        let u = &self.coeffs[shift..];
        let c0 = &u[0];
        let n = u.len();
        let mut v = vec![Rat::zero(); n];
        v[0] = c0.recip();
        for k in 1..n {
            let mut acc = Rat::zero();
            for j in 1..=k {
                acc = acc + &u[j] * &v[k - j];
            }
            v[k] = -(acc / c0);
        }
        Ok(QSeries { denom: self.denom, lo: -le, coeffs: v })
    }

    /// Integer power, negative exponents via the inverse.
    pub fn pow(&self, e: i64) -> Result<QSeries> {
        if e < 0 {
            return self.inverse()?.pow(-e);
        }
        let hi_rel = self.coeffs.len() as i64;
        let mut acc = QSeries { denom: self.denom, lo: 0, coeffs: vec![Rat::one()] };
        // Keep the accumulator's relative precision at the factor's.
        acc.coeffs.resize(hi_rel.max(1) as usize, Rat::zero());
        let mut base = self.clone();
        let mut e = e as u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        Ok(acc)
    }

    /// The operator `q d/dq`.
    pub fn q_d_dq(&self) -> QSeries {
        let d = self.denom;
        QSeries {
            denom: d,
            lo: self.lo,
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| c * &Rat::new((self.lo + i as i64).into(), d.into()))
                .collect(),
        }
    }

    /// Drop coefficients at exponents `>= hi/denom`.
    pub fn truncated(&self, hi: i64) -> QSeries {
        let mut out = self.clone();
        let keep = (hi - out.lo).clamp(0, out.coeffs.len() as i64) as usize;
        out.coeffs.truncate(keep);
        out
    }

    /// Is this the constant series 1 up to the truncation order?
    pub fn is_one(&self) -> bool {
        self.coeffs.iter().enumerate().all(|(i, c)| {
            let e = self.lo + i as i64;
            if e == 0 { c.is_one() } else { c.is_zero() }
        })
    }
}

/// All divisors of `n`, ascending.
pub fn divisors(n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 1;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            if d != n / d {
                out.push(n / d);
            }
        }
        d += 1;
    }
    out.sort_unstable();
    out
}

/// Prime factorization (squarefree levels only get distinct primes anyway).
pub fn prime_factors(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn is_squarefree(n: u64) -> bool {
    prime_factors(n).iter().all(|&(_, e)| e == 1)
}

/// Moebius function.
pub fn moebius(n: u64) -> i64 {
    let f = prime_factors(n);
    if f.iter().any(|&(_, e)| e > 1) {
        0
    } else if f.len() % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Ramanujan Delta: `q prod (1-q^n)^24`, exact through exponent `order`.
pub fn delta_series(order: i64) -> QSeries {
    assert!(order >= 1);
    let m = order as usize; // know coefficients of the unit part through q^{m-1}
    let mut eta = vec![Rat::zero(); m];
    eta[0] = Rat::one();
    for n in 1..m {
        // multiply by (1 - q^n)
        for i in (n..m).rev() {
            let t = &eta[i] - &eta[i - n];
            eta[i] = t;
        }
    }
    let unit = QSeries { denom: 1, lo: 0, coeffs: eta };
    let mut d = unit.pow(24).expect("positive power");
    d.lo += 1; // multiply by q
    d
}

/// `E2 = 1 - 24 sum sigma_1(n) q^n`, exact through exponent `order`.
pub fn eisenstein_e2(order: i64) -> QSeries {
    let m = (order + 1) as usize;
    let mut coeffs = vec![Rat::zero(); m];
    coeffs[0] = Rat::one();
    for n in 1..m as u64 {
        let sigma: u64 = divisors(n).iter().sum();
        coeffs[n as usize] = crate::exact::rat(-24 * sigma as i64);
    }
    QSeries { denom: 1, lo: 0, coeffs }
}

/// `Delta_N(z) = prod_{d|N} Delta(Nz/d)^{mu(d)}`, exact through exponent
/// `order` in q.  Requires squarefree N, so every `N/d` is an integer and no
/// fractional exponents appear.
pub fn delta_n_series(n: u64, order: i64) -> Result<QSeries> {
    if !is_squarefree(n) {
        return Err(ModularError::NotSquarefree(n));
    }
    // Relative precision bookkeeping: each factor Delta(kz)^{mu} is a unit
    // times q^{+-k}; build everything with enough terms that the final
    // product is exact through `order`.
    // Worst-case leading-exponent drift during the product; build with this
    // much slack and trim at the end.
    let slack: i64 = divisors(n).iter().map(|&d| (n / d) as i64).sum();
    let mut acc = QSeries::one(order + 1 + slack);
    for d in divisors(n) {
        let mu = moebius(d);
        if mu == 0 {
            continue;
        }
        let k = (n / d) as i64;
        let delta = delta_series(order + slack)
            .substitute(k, 1)
            .truncated(order + 1 + slack);
        acc = acc.mul(&delta.pow(mu)?);
    }
    if acc.hi() <= order {
        return Err(ModularError::Truncation(format!(
            "requested order {order}, achieved {}",
            acc.hi()
        )));
    }
    // Trim to the requested order.
    let keep = (order + 1 - acc.lo).max(0) as usize;
    acc.coeffs.truncate(keep);
    Ok(acc)
}

/// Divisor supported on the cusps `P_d` of `X_0(N)`, `d | N` squarefree.
/// The cusp at infinity is `P_N`; the cusp `0` is `P_1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CuspDivisor {
    pub level: u64,
    pub coeffs: BTreeMap<u64, i64>,
}

impl CuspDivisor {
    pub fn zero(level: u64) -> Self {
        CuspDivisor { level, coeffs: BTreeMap::new() }
    }

    pub fn add_term(&mut self, d: u64, c: i64) {
        assert!(self.level % d == 0, "P_{d} is not a cusp of X_0({})", self.level);
        let e = self.coeffs.entry(d).or_insert(0);
        *e += c;
        if *e == 0 {
            self.coeffs.remove(&d);
        }
    }

    pub fn coefficient(&self, d: u64) -> i64 {
        *self.coeffs.get(&d).unwrap_or(&0)
    }

    pub fn degree(&self) -> i64 {
        self.coeffs.values().sum()
    }

    pub fn scale(&self, k: i64) -> CuspDivisor {
        let mut out = CuspDivisor::zero(self.level);
        for (&d, &c) in &self.coeffs {
            out.add_term(d, c * k);
        }
        out
    }

    pub fn add(&self, other: &CuspDivisor) -> CuspDivisor {
        assert_eq!(self.level, other.level);
        let mut out = self.clone();
        for (&d, &c) in &other.coeffs {
            out.add_term(d, c);
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }
}

/// `div(Delta_N) = prod_{p|N}(p-1) * sum_{d|N} mu(N/d) P_d`, exact.
pub fn div_delta_n(n: u64) -> Result<CuspDivisor> {
    if !is_squarefree(n) {
        return Err(ModularError::NotSquarefree(n));
    }
    if n < 2 {
        // Needs sum mu(d) = 0, which fails at level 1 (Delta has weight 12
        // and is not a modular unit).
        return Err(ModularError::TrivialLevel);
    }
    let c: i64 = prime_factors(n).iter().map(|&(p, _)| p as i64 - 1).product();
    let mut div = CuspDivisor::zero(n);
    for d in divisors(n) {
        let mu = moebius(n / d);
        if mu != 0 {
            div.add_term(d, c * mu);
        }
    }
    Ok(div)
}

/// The exact modular-unit decomposition at an auxiliary prime `p0 | N`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LambdaDecomposition {
    pub level: u64,
    pub p0: u64,
    /// `kappa = prod_{p | N, p != p0} (p + 1)`.
    pub kappa: i64,
    /// `(d, Lambda_d)` for each `d | N/p0`; the simple unit `F_d` has divisor
    /// `Lambda_d (P_d - P_{d p0})`.
    pub lambdas: Vec<(u64, i64)>,
    /// Whether `kappa * div(Delta_N) = sum Lambda_d (P_d - P_{d p0})` holds.
    pub identity_holds: bool,
}

/// `kappa` and the multipliers `Lambda_d = (p0-1) mu(N/d) prod (p_i^2 - 1)`,
/// with the exact divisor identity checked and reported.
pub fn lambda_decomposition(n: u64, p0: u64) -> Result<LambdaDecomposition> {
    if !is_squarefree(n) {
        return Err(ModularError::NotSquarefree(n));
    }
    let primes: Vec<u64> = prime_factors(n).iter().map(|&(p, _)| p).collect();
    if !primes.contains(&p0) {
        return Err(ModularError::BadPrime(p0, n));
    }
    let others: Vec<u64> = primes.iter().copied().filter(|&p| p != p0).collect();
    let kappa: i64 = others.iter().map(|&p| p as i64 + 1).product();
    let prod_sq: i64 = others.iter().map(|&p| (p * p) as i64 - 1).product();
    let mut lambdas = Vec::new();
    let mut rhs = CuspDivisor::zero(n);
    for d in divisors(n / p0) {
        let lam = (p0 as i64 - 1) * moebius(n / d) * prod_sq;
        lambdas.push((d, lam));
        rhs.add_term(d, lam);
        rhs.add_term(d * p0, -lam);
    }
    let lhs = div_delta_n(n)?.scale(kappa);
    let identity_holds = lhs == rhs;
    Ok(LambdaDecomposition { level: n, p0, kappa, lambdas, identity_holds })
}

/// `E_N` as the logarithmic derivative route: `q d/dq log Delta_N`.
/// The dual route `sum_{d|N} mu(d) (N/d) E2((N/d) z)` is available through
/// [`eisenstein_en_via_e2`]; their agreement is a test, not an assumption.
pub fn eisenstein_en(n: u64, order: i64) -> Result<QSeries> {
    // Dividing by the leading monomial q^L costs L exponents of precision.
    let lead: i64 = prime_factors(n).iter().map(|&(p, _)| p as i64 - 1).product();
    let dn = delta_n_series(n, order + lead)?;
    Ok(dn.q_d_dq().mul(&dn.inverse()?).truncated(order + 1))
}

/// `E_N` as the Moebius combination of weight-2 Eisenstein series.
pub fn eisenstein_en_via_e2(n: u64, order: i64) -> Result<QSeries> {
    if !is_squarefree(n) {
        return Err(ModularError::NotSquarefree(n));
    }
    let mut acc = QSeries {
        denom: 1,
        lo: 0,
        coeffs: vec![Rat::zero(); (order + 1) as usize],
    };
    for d in divisors(n) {
        let mu = moebius(d);
        if mu == 0 {
            continue;
        }
        let k = (n / d) as i64;
        let e2 = eisenstein_e2(order).substitute(k, 1);
        acc = acc.add(&e2.scale(&crate::exact::rat(mu * k)));
    }
    Ok(acc)
}

#[cfg(test)]
mod tests;
