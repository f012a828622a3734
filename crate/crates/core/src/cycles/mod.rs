//! Divisor and function bookkeeping for the cycle machinery.
//!
//! The objects here are formal sums of labeled points, rational functions kept
//! in factored form, and cycles on the self-product of a curve given as lists
//! of (component curve, function, multiplicity) triples.  Everything that can
//! be exact is exact: divisors carry integer coefficients on exact rational
//! labels, and the cocycle condition is verified in integer arithmetic.

use crate::curve::{CurvePoint, HyperellipticModel, XCoord};
use crate::exact::{rat, Rat};
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, thiserror::Error)]
pub enum CycleError {
    #[error("factor data incompatible with the curve model: {0}")]
    IncompatibleFactor(String),
    #[error("divisor has degree {0}, expected 0")]
    NotDegreeZero(i64),
    #[error("the two points must be distinct")]
    CoincidentPoints,
    #[error("x = {0} is not a branch point of the model")]
    NotABranchPoint(String),
    #[error("tame symbol limit is indeterminate at {0}")]
    IndeterminateSymbol(String),
    #[error("normalization failed: |f(P) - 1| = {0:.3e}")]
    NormalizationFailed(f64),
    #[error("decomposition does not match the divisor of f")]
    DecompositionMismatch,
    #[error(transparent)]
    Curve(#[from] crate::curve::CurveError),
}

type Result<T> = std::result::Result<T, CycleError>;

/// Which of the two preimages of a generic x-value a point sits on.  The
/// labels are symbolic: `Plus` is the principal square root of h(x).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sheet {
    Plus,
    Minus,
}

/// An exact label for a point entering a divisor.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PointLabel {
    /// The Weierstrass point (a, 0) over an exact branch value.
    Weierstrass(Rat),
    /// One of the two points over a generic rational x-value.
    Generic(Rat, Sheet),
    /// The point at infinity (a single branch point for odd-degree models).
    Infinity,
}

impl fmt::Display for PointLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PointLabel::Weierstrass(a) => write!(f, "({a}, 0)"),
            PointLabel::Generic(a, Sheet::Plus) => write!(f, "({a}, +)"),
            PointLabel::Generic(a, Sheet::Minus) => write!(f, "({a}, -)"),
            PointLabel::Infinity => write!(f, "inf"),
        }
    }
}

impl PointLabel {
    /// Resolve the label to a numerical point on the model.
    pub fn to_point(&self, model: &HyperellipticModel) -> CurvePoint {
        match self {
            PointLabel::Weierstrass(a) => {
                let x = Complex64::new(crate::curve::rat_to_f64(a), 0.0);
                CurvePoint {
                    x: XCoord::Finite(x),
                    y: Complex64::new(0.0, 0.0),
                    exact_x: Some(a.clone()),
                }
            }
            PointLabel::Generic(a, sheet) => {
                let x = Complex64::new(crate::curve::rat_to_f64(a), 0.0);
                let y = model.y_principal(x);
                let y = if *sheet == Sheet::Plus { y } else { -y };
                CurvePoint {
                    x: XCoord::Finite(x),
                    y,
                    exact_x: Some(a.clone()),
                }
            }
            PointLabel::Infinity => CurvePoint::infinity(),
        }
    }
}

/// A formal integer combination of labeled points on the curve.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Divisor(pub BTreeMap<PointLabel, i64>);

impl Divisor {
    pub fn zero() -> Self {
        Divisor(BTreeMap::new())
    }

    pub fn add_point(&mut self, p: PointLabel, mult: i64) {
        if mult == 0 {
            return;
        }
        let slot = self.0.entry(p.clone()).or_insert(0);
        *slot += mult;
        if *slot == 0 {
            self.0.remove(&p);
        }
    }

    pub fn add(&mut self, other: &Divisor, scale: i64) {
        for (p, &m) in &other.0 {
            self.add_point(p.clone(), m * scale);
        }
    }

    pub fn degree(&self) -> i64 {
        self.0.values().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn coeff(&self, p: &PointLabel) -> i64 {
        *self.0.get(p).unwrap_or(&0)
    }
}

impl fmt::Display for Divisor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (p, m) in &self.0 {
            if !first {
                write!(f, " ")?;
            }
            if *m >= 0 && !first {
                write!(f, "+ {m}*{p}")?;
            } else {
                write!(f, "{m}*{p}")?;
            }
            first = false;
        }
        Ok(())
    }
}

/// A formal integer combination of point pairs on C x C (used for cocycle
/// witnesses).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurfaceDivisor(pub BTreeMap<(PointLabel, PointLabel), i64>);

impl SurfaceDivisor {
    pub fn zero() -> Self {
        SurfaceDivisor(BTreeMap::new())
    }

    pub fn add_point(&mut self, p: (PointLabel, PointLabel), mult: i64) {
        if mult == 0 {
            return;
        }
        let slot = self.0.entry(p.clone()).or_insert(0);
        *slot += mult;
        if *slot == 0 {
            self.0.remove(&p);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for SurfaceDivisor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for ((p, q), m) in &self.0 {
            if !first {
                write!(f, " ")?;
            }
            write!(f, "{m}*({p}; {q})")?;
            first = false;
        }
        Ok(())
    }
}

/// A rational function on the curve kept in factored form:
///
///   f = scale * prod (x - a_i)^{e_i} * y^{y_power}
///
/// The scale only enters evaluation, never divisor arithmetic, so it is kept
/// as a complex number (normalization constants are transcendental in
/// general).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FactoredFunction {
    pub scale: Complex64,
    /// (root, exponent) pairs; roots need not be distinct on input but are
    /// merged by `new`.
    pub factors: Vec<(Rat, i64)>,
    pub y_power: i64,
}

impl FactoredFunction {
    pub fn new(factors: Vec<(Rat, i64)>, y_power: i64) -> Self {
        let mut merged: BTreeMap<Rat, i64> = BTreeMap::new();
        for (a, e) in factors {
            *merged.entry(a).or_insert(0) += e;
        }
        merged.retain(|_, e| *e != 0);
        FactoredFunction {
            scale: Complex64::new(1.0, 0.0),
            factors: merged.into_iter().collect(),
            y_power,
        }
    }

    pub fn one() -> Self {
        FactoredFunction::new(vec![], 0)
    }

    /// (x - a)
    pub fn linear(a: Rat) -> Self {
        FactoredFunction::new(vec![(a, 1)], 0)
    }

    /// (x - a)/(x - b)
    pub fn simple(a: Rat, b: Rat) -> Self {
        FactoredFunction::new(vec![(a, 1), (b, -1)], 0)
    }

    pub fn with_scale(mut self, s: Complex64) -> Self {
        self.scale = s;
        self
    }

    pub fn inverse(&self) -> Self {
        FactoredFunction {
            scale: Complex64::new(1.0, 0.0) / self.scale,
            factors: self.factors.iter().map(|(a, e)| (a.clone(), -e)).collect(),
            y_power: -self.y_power,
        }
    }

    pub fn product(&self, other: &Self) -> Self {
        let mut factors = self.factors.clone();
        factors.extend(other.factors.iter().cloned());
        let mut f = FactoredFunction::new(factors, self.y_power + other.y_power);
        f.scale = self.scale * other.scale;
        f
    }

    pub fn pow(&self, k: i64) -> Self {
        let mut f = FactoredFunction::new(
            self.factors.iter().map(|(a, e)| (a.clone(), e * k)).collect(),
            self.y_power * k,
        );
        f.scale = self.scale.powi(k as i32);
        f
    }

    /// Evaluate at a finite point of the curve.
    pub fn eval(&self, x: Complex64, y: Complex64) -> Complex64 {
        let mut v = self.scale;
        for (a, e) in &self.factors {
            v *= (x - Complex64::new(crate::curve::rat_to_f64(a), 0.0)).powi(*e as i32);
        }
        if self.y_power != 0 {
            v *= y.powi(self.y_power as i32);
        }
        v
    }

    pub fn eval_at(&self, p: &CurvePoint) -> Option<Complex64> {
        p.x_value().map(|x| self.eval(x, p.y))
    }
}

/// The exact divisor of a factored function on the curve.
///
/// For an odd-degree model with branch value a, div(x - a) = 2(a,0) - 2 inf;
/// for generic rational c, div(x - c) = (c,+) + (c,-) - 2 inf; and
/// div(y) = sum of the Weierstrass points minus (2g+1) inf.  The y-power case
/// therefore needs every branch value to be an exact rational.
pub fn divisor_of(model: &HyperellipticModel, f: &FactoredFunction) -> Result<Divisor> {
    let mut d = Divisor::zero();
    for (a, e) in &f.factors {
        if model.is_exact_branch(a) {
            d.add_point(PointLabel::Weierstrass(a.clone()), 2 * e);
            d.add_point(PointLabel::Infinity, -2 * e);
        } else {
            d.add_point(PointLabel::Generic(a.clone(), Sheet::Plus), *e);
            d.add_point(PointLabel::Generic(a.clone(), Sheet::Minus), *e);
            d.add_point(PointLabel::Infinity, -2 * e);
        }
    }
    if f.y_power != 0 {
        let roots = rational_branch_values(model)?;
        for a in roots {
            d.add_point(PointLabel::Weierstrass(a), f.y_power);
        }
        d.add_point(
            PointLabel::Infinity,
            -(model.degree() as i64) * f.y_power,
        );
    }
    Ok(d)
}

/// Recognize every finite branch value of the model as an exact rational.
fn rational_branch_values(model: &HyperellipticModel) -> Result<Vec<Rat>> {
    let mut out = Vec::new();
    for b in model.branch_points() {
        if b.im.abs() > 1e-9 {
            return Err(CycleError::IncompatibleFactor(
                "y-divisor needs all branch values rational".into(),
            ));
        }
        let a = recognize_rational(b.re).ok_or_else(|| {
            CycleError::IncompatibleFactor(format!(
                "branch value {} not recognized as rational",
                b.re
            ))
        })?;
        if !model.is_exact_branch(&a) {
            return Err(CycleError::IncompatibleFactor(format!(
                "branch value {} not recognized as rational",
                b.re
            )));
        }
        out.push(a);
    }
    Ok(out)
}

/// Continued-fraction recognition of a floating value as a small rational.
fn recognize_rational(x: f64) -> Option<Rat> {
    let mut p0 = rat(1);
    let mut q0 = rat(0);
    let mut p1 = rat(x.floor() as i64);
    let mut q1 = rat(1);
    let mut frac = x - x.floor();
    for _ in 0..24 {
        let cand = &p1 / &q1;
        if (cand.to_f64().unwrap_or(f64::NAN) - x).abs() < 1e-10 {
            return Some(cand);
        }
        if frac.abs() < 1e-12 {
            break;
        }
        let inv = 1.0 / frac;
        let a = inv.floor();
        if a.abs() > 1e12 {
            break;
        }
        frac = inv - a;
        let ar = rat(a as i64);
        let p2 = &ar * &p1 + &p0;
        let q2 = &ar * &q1 + &q0;
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
    }
    let cand = &p1 / &q1;
    if (cand.to_f64().unwrap_or(f64::NAN) - x).abs() < 1e-10 {
        Some(cand)
    } else {
        None
    }
}

/// Order of vanishing of f at a labeled point, on the model or (with
/// `model = None`) on the rational line where ord is just the exponent.
pub fn order_at(
    model: Option<&HyperellipticModel>,
    f: &FactoredFunction,
    z: &PointLabel,
) -> Result<i64> {
    match model {
        None => {
            if f.y_power != 0 {
                return Err(CycleError::IncompatibleFactor(
                    "y-powers are meaningless on the rational line".into(),
                ));
            }
            Ok(match z {
                PointLabel::Weierstrass(a) | PointLabel::Generic(a, _) => f
                    .factors
                    .iter()
                    .find(|(b, _)| b == a)
                    .map(|(_, e)| *e)
                    .unwrap_or(0),
                PointLabel::Infinity => -f.factors.iter().map(|(_, e)| e).sum::<i64>(),
            })
        }
        Some(m) => Ok(divisor_of(m, f)?.coeff(z)),
    }
}

/// The tame symbol of {f, g} at the point z:
///
///   tau_z({f, g}) = (-1)^{mn} f^n / g^m  evaluated at z,
///
/// with m = ord_z f and n = ord_z g.  The unit part is computed by exact
/// cancellation of the vanishing factors, so no numerical limit is taken.
pub fn tame_symbol(
    model: Option<&HyperellipticModel>,
    f: &FactoredFunction,
    g: &FactoredFunction,
    z: &PointLabel,
) -> Result<Complex64> {
    let m = order_at(model, f, z)?;
    let n = order_at(model, g, z)?;
    // F = f^n / g^m has order 0 at z; the symbol is (+/-) its unit value.
    let ff = f.pow(n).product(&g.pow(-m));
    let sign = if (m * n) % 2 == 0 { 1.0 } else { -1.0 };
    let v = unit_value(model, &ff, z)?;
    Ok(sign * v)
}

/// The tame symbol at every point in the support of div(f) + div(g).
pub fn tame_symbol_all(
    model: Option<&HyperellipticModel>,
    f: &FactoredFunction,
    g: &FactoredFunction,
) -> Result<Vec<(PointLabel, Complex64)>> {
    let mut support: Vec<PointLabel> = Vec::new();
    match model {
        Some(mm) => {
            let mut d = divisor_of(mm, f)?;
            d.add(&divisor_of(mm, g)?, 1);
            support.extend(d.0.keys().cloned());
        }
        None => {
            let mut seen = std::collections::BTreeSet::new();
            for (a, _) in f.factors.iter().chain(g.factors.iter()) {
                seen.insert(a.clone());
            }
            support.extend(seen.into_iter().map(|a| PointLabel::Generic(a, Sheet::Plus)));
            support.push(PointLabel::Infinity);
        }
    }
    let mut out = Vec::new();
    for z in support {
        out.push((z.clone(), tame_symbol(model, f, g, &z)?));
    }
    Ok(out)
}

/// Value of a function of order 0 at z, with vanishing factors canceled
/// exactly against powers of y (using h(x) = (x-a) h1(x), h1(a) = h'(a) for
/// squarefree h).
fn unit_value(
    model: Option<&HyperellipticModel>,
    f: &FactoredFunction,
    z: &PointLabel,
) -> Result<Complex64> {
    let ord = order_at(model, f, z)?;
    if ord != 0 {
        return Err(CycleError::IndeterminateSymbol(format!("{z}")));
    }
    match (model, z) {
        (None, PointLabel::Weierstrass(a)) | (None, PointLabel::Generic(a, _)) => {
            let mut v = f.scale;
            let x = Complex64::new(crate::curve::rat_to_f64(a), 0.0);
            for (b, e) in &f.factors {
                if b == a {
                    continue; // exponent is 0 by the order check
                }
                v *= (x - Complex64::new(crate::curve::rat_to_f64(b), 0.0)).powi(*e as i32);
            }
            Ok(v)
        }
        (None, PointLabel::Infinity) => {
            // Leading coefficients are all 1, so the unit value is the scale.
            Ok(f.scale)
        }
        (Some(m), PointLabel::Weierstrass(a)) => {
            // Net local order: 2p + q = 0 with p the (x - a)-exponent and q
            // the y-power, so q is even and (x-a)^p y^q = ((x-a)/h)^p with
            // limit h'(a)^{-p}.
            let p = f
                .factors
                .iter()
                .find(|(b, _)| b == a)
                .map(|(_, e)| *e)
                .unwrap_or(0);
            let q = f.y_power;
            if 2 * p + q != 0 {
                return Err(CycleError::IndeterminateSymbol(format!("{z}")));
            }
            let hp = m.h().derivative().eval_rat(a);
            if hp.is_zero() {
                return Err(CycleError::IncompatibleFactor("repeated branch value".into()));
            }
            let hp = Complex64::new(crate::curve::rat_to_f64(&hp), 0.0);
            let mut v = f.scale * hp.powi(-p as i32);
            // Remaining factors and the rest of y^q = h(x)^{q/2} are units;
            // the h-part was absorbed above.
            let x = Complex64::new(crate::curve::rat_to_f64(a), 0.0);
            for (b, e) in &f.factors {
                if b == a {
                    continue;
                }
                v *= (x - Complex64::new(crate::curve::rat_to_f64(b), 0.0)).powi(*e as i32);
            }
            // y^q against (x-a)^{-q/2}: y^q = (x-a)^{q/2} h1(x)^{q/2}; the
            // (x-a) part canceled, leaving h1(a)^{q/2} = h'(a)^{q/2}, which is
            // exactly hp^{-p}; already handled.  Nothing further.
            Ok(v)
        }
        (Some(m), PointLabel::Generic(a, sheet)) => {
            // (x - a) has order 1 here; the order-0 check forces its exponent
            // to be 0 when y carries nothing, and y is a unit.
            let p = f
                .factors
                .iter()
                .find(|(b, _)| b == a)
                .map(|(_, e)| *e)
                .unwrap_or(0);
            if p != 0 {
                return Err(CycleError::IndeterminateSymbol(format!("{z}")));
            }
            let x = Complex64::new(crate::curve::rat_to_f64(a), 0.0);
            let mut y = m.y_principal(x);
            if *sheet == Sheet::Minus {
                y = -y;
            }
            Ok(f.eval(x, y))
        }
        (Some(m), PointLabel::Infinity) => {
            // ord_inf(x - b) = -2, ord_inf y = -(2g+1).  The order-0 check
            // forces q even, and the limit is lc(h)^{q/2} (lc = 1 for monic
            // h) — every polynomial factor tends to x^{e} against the
            // compensating power.
            let q = f.y_power;
            if q % 2 != 0 {
                return Err(CycleError::IndeterminateSymbol("inf".into()));
            }
            let lc = crate::curve::rat_to_f64(m.h().leading());
            Ok(f.scale * Complex64::new(lc, 0.0).powi((q / 2) as i32))
        }
    }
}

/// One of the three kinds of component curve a cycle can live on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ComponentCurve {
    /// The diagonal; the attached function depends on the common coordinate.
    Diagonal,
    /// C x {pt}; the attached function depends on the first coordinate.
    CTimesPoint(PointLabel),
    /// {pt} x C; the attached function depends on the second coordinate.
    PointTimesC(PointLabel),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CycleComponent {
    pub curve: ComponentCurve,
    pub function: FactoredFunction,
    pub multiplicity: i64,
}

/// A formal cycle sum((C_i, f_i)) on C x C, together with the degree N of the
/// underlying simple function when one exists.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CycleElement {
    pub components: Vec<CycleComponent>,
    pub n: i64,
}

impl CycleElement {
    /// The function attached to the diagonal component, with its cycle
    /// multiplicity.
    pub fn diagonal_function(&self) -> Option<(&FactoredFunction, i64)> {
        self.components
            .iter()
            .find(|c| c.curve == ComponentCurve::Diagonal)
            .map(|c| (&c.function, c.multiplicity))
    }
}

/// Push the divisor of a component's function onto C x C.
fn component_surface_divisor(
    model: &HyperellipticModel,
    comp: &CycleComponent,
) -> Result<SurfaceDivisor> {
    let d = divisor_of(model, &comp.function)?;
    let mut out = SurfaceDivisor::zero();
    for (p, m) in &d.0 {
        let pair = match &comp.curve {
            ComponentCurve::Diagonal => (p.clone(), p.clone()),
            ComponentCurve::CTimesPoint(q) => (p.clone(), q.clone()),
            ComponentCurve::PointTimesC(q) => (q.clone(), p.clone()),
        };
        out.add_point(pair, m * comp.multiplicity);
    }
    Ok(out)
}

/// Verify the cocycle condition sum(div f_i) = 0 on C x C, returning the
/// witness divisor (zero iff the cycle is valid).
pub fn cocycle_check(model: &HyperellipticModel, z: &CycleElement) -> Result<(bool, SurfaceDivisor)> {
    let mut w = SurfaceDivisor::zero();
    for comp in &z.components {
        let d = component_surface_divisor(model, comp)?;
        for (p, m) in &d.0 {
            w.add_point(p.clone(), *m);
        }
    }
    Ok((w.is_zero(), w))
}

/// Construct the Bloch cycle for a pair of Weierstrass points:
///
///   Z = (C x Q, 1/f) + (Diag, f) + (R x C, 1/f),
///
/// with f = (x - q)/(x - r) of divisor 2Q - 2R, scaled so that f(P) = 1.
pub fn build_z_qr(
    model: &HyperellipticModel,
    q: &Rat,
    r: &Rat,
    p: &CurvePoint,
) -> Result<CycleElement> {
    if q == r {
        return Err(CycleError::CoincidentPoints);
    }
    for a in [q, r] {
        if !model.is_exact_branch(a) {
            return Err(CycleError::NotABranchPoint(format!("{a}")));
        }
    }
    let raw = FactoredFunction::simple(q.clone(), r.clone());
    let xp = p
        .x_value()
        .ok_or(CycleError::IncompatibleFactor("P at infinity".into()))?;
    let v = raw.eval(xp, p.y);
    if v.norm() < 1e-14 || !v.is_finite() {
        return Err(CycleError::NormalizationFailed(f64::INFINITY));
    }
    let f = raw.with_scale(Complex64::new(1.0, 0.0) / v);
    let err = (f.eval(xp, p.y) - Complex64::new(1.0, 0.0)).norm();
    if err > 1e-12 {
        return Err(CycleError::NormalizationFailed(err));
    }
    let ql = PointLabel::Weierstrass(q.clone());
    let rl = PointLabel::Weierstrass(r.clone());
    Ok(CycleElement {
        components: vec![
            CycleComponent {
                curve: ComponentCurve::CTimesPoint(ql),
                function: f.inverse(),
                multiplicity: 1,
            },
            CycleComponent {
                curve: ComponentCurve::Diagonal,
                function: f.clone(),
                multiplicity: 1,
            },
            CycleComponent {
                curve: ComponentCurve::PointTimesC(rl),
                function: f.inverse(),
                multiplicity: 1,
            },
        ],
        n: 2,
    })
}

/// One emitted term of a simple-function decomposition: a function with
/// divisor n(Q - R), raised to the given multiplicity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimplePair {
    pub q: PointLabel,
    pub r: PointLabel,
    /// Order of Q - R in the Jacobian: div(f_QR) = n Q - n R.
    pub n: i64,
    pub multiplicity: i64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimpleDecomposition {
    pub k: i64,
    pub pairs: Vec<SimplePair>,
}

impl SimpleDecomposition {
    /// The signed sum of the emitted simple divisors (should equal k * D).
    pub fn total_divisor(&self) -> Divisor {
        let mut d = Divisor::zero();
        for p in &self.pairs {
            d.add_point(p.q.clone(), p.n * p.multiplicity);
            d.add_point(p.r.clone(), -p.n * p.multiplicity);
        }
        d
    }
}

/// Greedily decompose a degree-0 divisor into simple differences.  The caller
/// supplies the order of Q - R in the Jacobian for each pair (2 for pairs of
/// Weierstrass points).  Returns the smallest k with k*D expressible through
/// the emitted pairs; conservation k*D = sum is exact by construction and
/// asserted.
pub fn decompose_simple(
    d: &Divisor,
    pair_order: &dyn Fn(&PointLabel, &PointLabel) -> i64,
) -> Result<SimpleDecomposition> {
    let deg = d.degree();
    if deg != 0 {
        return Err(CycleError::NotDegreeZero(deg));
    }
    let mut work = d.clone();
    let mut matched: Vec<(PointLabel, PointLabel, i64)> = Vec::new();
    loop {
        let pos = work.0.iter().find(|(_, &m)| m > 0).map(|(p, &m)| (p.clone(), m));
        let neg = work.0.iter().find(|(_, &m)| m < 0).map(|(p, &m)| (p.clone(), m));
        match (pos, neg) {
            (Some((q, mq)), Some((r, mr))) => {
                let m = mq.min(-mr);
                work.add_point(q.clone(), -m);
                work.add_point(r.clone(), m);
                matched.push((q, r, m));
            }
            (None, None) => break,
            _ => unreachable!("degree-0 divisor with one-sided support"),
        }
    }
    let mut k: i64 = 1;
    for (q, r, m) in &matched {
        let n = pair_order(q, r);
        assert!(n > 0, "pair order must be positive");
        k = k.lcm(&(n / n.gcd(m)));
    }
    let pairs = matched
        .into_iter()
        .map(|(q, r, m)| {
            let n = pair_order(&q, &r);
            SimplePair {
                multiplicity: k * m / n,
                q,
                r,
                n,
            }
        })
        .collect();
    let dec = SimpleDecomposition { k, pairs };
    // Conservation audit: k * D = total exactly.
    let mut audit = dec.total_divisor();
    audit.add(d, -k);
    assert!(audit.is_zero(), "decomposition failed to conserve the divisor");
    Ok(dec)
}

/// Assemble the cycle of a function with torsion-supported divisor:
///
///   Z_f = k (Diag, f) - sum( (Q x C, f_QR) + (C x R, f_QR) ),
///
/// restricted here to decompositions whose pairs are Weierstrass points, so
/// that each simple function is ((x - q)/(x - r))^{n/2}.
pub fn build_z_f(
    model: &HyperellipticModel,
    f: &FactoredFunction,
    dec: &SimpleDecomposition,
) -> Result<CycleElement> {
    // Consistency: k * div(f) must equal the decomposition total.
    let df = divisor_of(model, f)?;
    let mut audit = dec.total_divisor();
    audit.add(&df, -dec.k);
    if !audit.is_zero() {
        return Err(CycleError::DecompositionMismatch);
    }
    let mut components = vec![CycleComponent {
        curve: ComponentCurve::Diagonal,
        function: f.clone(),
        multiplicity: dec.k,
    }];
    for pair in &dec.pairs {
        let (qa, ra) = match (&pair.q, &pair.r) {
            (PointLabel::Weierstrass(a), PointLabel::Weierstrass(b)) => (a.clone(), b.clone()),
            _ => {
                return Err(CycleError::IncompatibleFactor(
                    "only Weierstrass pairs are supported".into(),
                ))
            }
        };
        if pair.n % 2 != 0 {
            return Err(CycleError::DecompositionMismatch);
        }
        let f_qr = FactoredFunction::simple(qa, ra).pow(pair.n / 2);
        components.push(CycleComponent {
            curve: ComponentCurve::PointTimesC(pair.q.clone()),
            function: f_qr.clone(),
            multiplicity: -pair.multiplicity,
        });
        components.push(CycleComponent {
            curve: ComponentCurve::CTimesPoint(pair.r.clone()),
            function: f_qr,
            multiplicity: -pair.multiplicity,
        });
    }
    let z = CycleElement { components, n: 0 };
    let (ok, _) = cocycle_check(model, &z)?;
    if !ok {
        return Err(CycleError::DecompositionMismatch);
    }
    Ok(z)
}

#[cfg(test)]
mod tests;
