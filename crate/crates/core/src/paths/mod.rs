//! Path lifting on the double cover, branch-tracked logarithms, level-set
//! tracing of `gamma = f^{-1}([0, infinity])`, and adaptive quadrature for
//! line and iterated integrals.
//!
//! Paths live in the x-plane (or the `s`-chart `x = 1/s^2` through infinity
//! on odd-degree models) as piecewise segments; the lift stores enough
//! sheet checkpoints that `y = +-sqrt(h(x))` can be continued unambiguously
//! between them.

use crate::curve::{rat_to_f64, CurvePoint, HyperellipticModel, XCoord};
use crate::exact::Rat;
use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PathError {
    #[error("path passes through a branch point (|h(x)| = {0:.3e} at an interior checkpoint)")]
    BranchClearance(f64),
    #[error("sheet continuation ambiguous even at maximal refinement")]
    ContinuationAmbiguous,
    #[error("path start does not match the given point (residual {0:.3e})")]
    StartMismatch(f64),
    #[error("concatenation endpoints/sheets do not match")]
    ConcatMismatch,
    #[error("quadrature did not reach the requested tolerance ({achieved:.3e} > {requested:.3e})")]
    Tolerance { requested: f64, achieved: f64 },
    #[error("iterated integral did not converge (last change {0:.3e})")]
    IteratedNonconvergence(f64),
    #[error("function has a zero or pole on the path interior (|f| = {0:.3e})")]
    LogSingularity(f64),
    #[error("level-set tracing stalled at x = {0}")]
    TraceStall(Complex64),
    #[error("the s-chart through infinity needs an odd-degree model")]
    NeedsOddDegree,
    #[error("at most {0} forms supported in an iterated integral")]
    TooManyForms(usize),
}

pub type Result<T> = std::result::Result<T, PathError>;

/// A smooth piece of an x-plane (or s-chart) path, parameter in [0, 1].
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum Segment {
    /// Straight segment in the x-plane.
    Line { a: Complex64, b: Complex64 },
    /// Circular arc `center + r e^{i theta}`, theta from t0 to t1 (radians,
    /// t1 may differ from t0 by any multiple of 2 pi; orientation by sign).
    Arc { center: Complex64, radius: f64, t0: f64, t1: f64 },
    /// Straight segment in the `s`-chart, `x = 1/s^2` (odd-degree models
    /// only); may pass through `s = 0`, the point at infinity.
    SChart { a: Complex64, b: Complex64 },
}

impl Segment {
    /// Position in the chart parameter (x, or s for `SChart`).
    fn chart_pos(&self, t: f64) -> Complex64 {
        match *self {
            Segment::Line { a, b } => a + (b - a) * t,
            Segment::Arc { center, radius, t0, t1 } => {
                let th = t0 + (t1 - t0) * t;
                center + Complex64::from_polar(radius, th)
            }
            Segment::SChart { a, b } => a + (b - a) * t,
        }
    }

    fn chart_vel(&self, t: f64) -> Complex64 {
        match *self {
            Segment::Line { a, b } => b - a,
            Segment::Arc { center: _, radius, t0, t1 } => {
                let th = t0 + (t1 - t0) * t;
                Complex64::new(0.0, 1.0) * Complex64::from_polar(radius, th) * (t1 - t0)
            }
            Segment::SChart { a, b } => b - a,
        }
    }

    /// x-plane position (may be effectively infinite on an `SChart`).
    pub fn x_at(&self, t: f64) -> Complex64 {
        match self {
            Segment::SChart { .. } => {
                let s = self.chart_pos(t);
                Complex64::new(1.0, 0.0) / (s * s)
            }
            _ => self.chart_pos(t),
        }
    }

    pub fn x_vel(&self, t: f64) -> Complex64 {
        match self {
            Segment::SChart { .. } => {
                let s = self.chart_pos(t);
                let ds = self.chart_vel(t);
                -2.0 * ds / (s * s * s)
            }
            _ => self.chart_vel(t),
        }
    }

    pub fn reversed(&self) -> Segment {
        match *self {
            Segment::Line { a, b } => Segment::Line { a: b, b: a },
            Segment::Arc { center, radius, t0, t1 } => {
                Segment::Arc { center, radius, t0: t1, t1: t0 }
            }
            Segment::SChart { a, b } => Segment::SChart { a: b, b: a },
        }
    }

    fn is_schart(&self) -> bool {
        matches!(self, Segment::SChart { .. })
    }
}

/// An x-plane path: a chain of segments (endpoint continuity assumed).
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct XPath {
    pub segments: Vec<Segment>,
}

impl XPath {
    pub fn line(a: Complex64, b: Complex64) -> Self {
        XPath { segments: vec![Segment::Line { a, b }] }
    }

    /// Full counterclockwise circle.
    pub fn circle(center: Complex64, radius: f64, start_angle: f64) -> Self {
        XPath {
            segments: vec![Segment::Arc {
                center,
                radius,
                t0: start_angle,
                t1: start_angle + 2.0 * PI,
            }],
        }
    }

    pub fn then(mut self, other: XPath) -> Self {
        self.segments.extend(other.segments);
        self
    }

    pub fn reversed(&self) -> XPath {
        XPath { segments: self.segments.iter().rev().map(Segment::reversed).collect() }
    }
}

/// A point of a lifted path: x-plane position, velocity of the global
/// parametrization, and the tracked sheet value `y`.
#[derive(Debug, Clone, Copy)]
pub struct PathPoint {
    pub x: Complex64,
    pub dx: Complex64,
    pub y: Complex64,
    /// Global parameter in [0, 1].
    pub t: f64,
}

/// A 1-form pulled back to a path: `eval` returns the integrand value g(t)
/// such that the integral is `int g(t) dt` in the global parameter.
pub trait OneForm {
    fn eval(&self, p: &PathPoint) -> Complex64;
}

impl<F: Fn(&PathPoint) -> Complex64> OneForm for F {
    fn eval(&self, p: &PathPoint) -> Complex64 {
        self(p)
    }
}

/// Per-segment sheet data: checkpoints of the continued square root.
/// For ordinary segments the tracked value is `y`; on an `SChart` it is the
/// desingularized `w = y s^{2g+1}`, which is smooth through infinity.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
struct SheetTrack {
    values: Vec<Complex64>,
}

/// A path lifted to the curve: x-plane segments plus continuously tracked
/// sheet state, with certified checkpoints.
#[derive(Debug, Clone)]
pub struct LiftedPath {
    pub model: Arc<HyperellipticModel>,
    pub segments: Vec<Segment>,
    tracks: Vec<SheetTrack>,
    start: CurvePoint,
    end: CurvePoint,
}

/// Value of `w^2 = s^{4g+2} h(1/s^2)` as a polynomial in `s^2`
/// (finite and nonzero at s = 0 for odd-degree models).
fn w_squared(model: &HyperellipticModel, s: Complex64) -> Complex64 {
    let coeffs = model.h().coeffs();
    let d = model.degree(); // 2g + 1
    let u = s * s;
    // sum_i h_i s^{4g+2-2i} = sum_j h_{d-j} u^j ... with an extra factor u
    // because 4g+2 = 2d: s^{2d} h(1/s^2) = sum_i h_i u^{d-i}.
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..=d {
        acc = acc * u + Complex64::new(rat_to_f64(&coeffs[i]), 0.0);
    }
    acc
}

/// The tracked quantity whose square root we continue on a segment.
fn track_target(model: &HyperellipticModel, seg: &Segment, t: f64) -> Complex64 {
    match seg {
        Segment::SChart { .. } => w_squared(model, seg.chart_pos(t)),
        _ => model.h_eval(seg.chart_pos(t)),
    }
}

/// Continue `sqrt(target)` from `prev`; `None` when the choice is ambiguous.
fn continue_sqrt(target: Complex64, prev: Complex64) -> Option<Complex64> {
    let r = target.sqrt();
    let (keep, flip) = ((r - prev).norm(), (r + prev).norm());
    if keep <= flip {
        if keep < 0.75 * flip || prev.norm() == 0.0 {
            Some(r)
        } else {
            None
        }
    } else if flip < 0.75 * keep {
        Some(-r)
    } else {
        None
    }
}

const MAX_CHECKPOINTS: usize = 1 << 14;

impl LiftedPath {
    /// Lift an x-path starting at `start`; if the start is a Weierstrass
    /// point (`y = 0`), `sheet_hint` (+1/-1 relative to the principal root)
    /// selects the sheet immediately after the start.
    pub fn lift(
        model: &Arc<HyperellipticModel>,
        xpath: &XPath,
        start: &CurvePoint,
        sheet_hint: f64,
    ) -> Result<LiftedPath> {
        assert!(!xpath.segments.is_empty());
        if xpath.segments.iter().any(Segment::is_schart) && !model.infinity_is_branch() {
            return Err(PathError::NeedsOddDegree);
        }
        // Verify the declared start against the first segment.
        if let (Some(x0), XCoord::Finite(xs)) =
            (first_finite_x(&xpath.segments[0]), start.x.clone())
        {
            let d = (x0 - xs).norm();
            if d > 1e-9 * (1.0 + xs.norm()) {
                return Err(PathError::StartMismatch(d));
            }
        }

        let nseg = xpath.segments.len();
        let mut tracks = Vec::with_capacity(nseg);
        // Tracked sheet value carried across segment junctions, expressed in
        // the chart of the segment about to be lifted (y in the x-plane,
        // w = y s^{2g+1} on an s-chart; the latter stays finite at infinity).
        let mut incoming: Option<Complex64> = if start.y.norm() > 0.0 {
            Some(into_chart(model, &xpath.segments[0], start.y))
        } else {
            None
        };
        for (i, seg) in xpath.segments.iter().enumerate() {
            let track = lift_segment(model, seg, incoming, sheet_hint)?;
            incoming = if i + 1 < nseg {
                Some(carry_over(model, seg, &track, &xpath.segments[i + 1])?)
            } else {
                None
            };
            tracks.push(track);
        }
        let start = start.clone();
        let end = endpoint(model, xpath.segments.last().unwrap(), tracks.last().unwrap());
        Ok(LiftedPath {
            model: Arc::clone(model),
            segments: xpath.segments.clone(),
            tracks,
            start,
            end,
        })
    }

    pub fn start(&self) -> &CurvePoint {
        &self.start
    }

    pub fn end(&self) -> &CurvePoint {
        &self.end
    }

    pub fn segment_count(&self) -> usize {
        self.segments.len()
    }

    /// Sheet value at a local parameter of a segment: nearest checkpoint,
    /// then one continuation step.
    fn tracked_at(&self, seg_idx: usize, t: f64) -> Complex64 {
        let track = &self.tracks[seg_idx];
        let n = track.values.len() - 1;
        let mut k = ((t * n as f64).round() as usize).min(n);
        // A checkpoint at a branch point carries no sign information; defer
        // to the nearest neighbor on the same side of the zero.
        let mut prev = track.values[k];
        for _ in 0..2 {
            let neighbor = if k == 0 {
                1
            } else if k == n {
                n - 1
            } else if track.values[k - 1].norm() > track.values[k + 1].norm() {
                k - 1
            } else {
                k + 1
            };
            if prev.norm() < 1e-3 * track.values[neighbor].norm() {
                k = neighbor;
                prev = track.values[k];
            } else {
                break;
            }
        }
        let target = track_target(&self.model, &self.segments[seg_idx], t);
        let r = target.sqrt();
        if (r - prev).norm() <= (r + prev).norm() {
            r
        } else {
            -r
        }
    }

    /// The lifted point at global parameter `t` in [0, 1] (uniform across
    /// segments), with velocity in the global parameter.
    pub fn point(&self, t: f64) -> PathPoint {
        let n = self.segments.len() as f64;
        let scaled = (t.clamp(0.0, 1.0) * n).min(n - 1e-12);
        let idx = scaled.floor() as usize;
        let local = scaled - idx as f64;
        self.point_local(idx, local, n)
    }

    fn point_local(&self, idx: usize, local: f64, vel_scale: f64) -> PathPoint {
        let seg = &self.segments[idx];
        let tracked = self.tracked_at(idx, local);
        let (x, dx, y) = match seg {
            Segment::SChart { .. } => {
                // Evaluation exactly at s = 0 (the point at infinity) is
                // nudged along the segment: x, dx and y are each infinite
                // there, though integrands built from them stay finite.
                let mut local = local;
                if seg.chart_pos(local).norm() < 1e-9 {
                    local += if local < 0.5 { 1e-9 } else { -1e-9 };
                }
                let s = seg.chart_pos(local);
                let g = self.model.genus();
                let spow = s.powu(2 * g as u32 + 1);
                let x = Complex64::new(1.0, 0.0) / (s * s);
                let dx = seg.x_vel(local) * vel_scale;
                // y = w / s^{2g+1}
                (x, dx, tracked / spow)
            }
            _ => (seg.chart_pos(local), seg.x_vel(local) * vel_scale, tracked),
        };
        PathPoint { x, dx, y, t: (idx as f64 + local) / vel_scale }
    }

    /// Does the path endpoint at the given end touch the branch locus
    /// (so integrands like dx/y need the u^2 endpoint substitution)?
    fn end_singular(&self, seg_idx: usize, at_end: bool) -> bool {
        let t = if at_end { 1.0 } else { 0.0 };
        let target = track_target(&self.model, &self.segments[seg_idx], t);
        target.norm() < 1e-12
    }

    /// Reverse the path (including the tracked sheets).
    pub fn reversed(&self) -> LiftedPath {
        let segments: Vec<Segment> =
            self.segments.iter().rev().map(Segment::reversed).collect();
        let tracks: Vec<SheetTrack> = self
            .tracks
            .iter()
            .rev()
            .map(|tr| SheetTrack { values: tr.values.iter().rev().cloned().collect() })
            .collect();
        LiftedPath {
            model: Arc::clone(&self.model),
            segments,
            tracks,
            start: self.end.clone(),
            end: self.start.clone(),
        }
    }

    /// Concatenate with another lifted path; endpoints and sheets must match.
    pub fn then(&self, other: &LiftedPath) -> Result<LiftedPath> {
        let e = &self.end;
        let s = &other.start;
        let ok = match (&e.x, &s.x) {
            (XCoord::Infinity, XCoord::Infinity) => true,
            (XCoord::Finite(a), XCoord::Finite(b)) => {
                (a - b).norm() <= 1e-8 * (1.0 + a.norm())
                    && (e.y - s.y).norm() <= 1e-6 * (1.0 + e.y.norm())
            }
            _ => false,
        };
        if !ok {
            return Err(PathError::ConcatMismatch);
        }
        let mut segments = self.segments.clone();
        segments.extend(other.segments.iter().cloned());
        let mut tracks = self.tracks.clone();
        tracks.extend(other.tracks.iter().cloned());
        Ok(LiftedPath {
            model: Arc::clone(&self.model),
            segments,
            tracks,
            start: self.start.clone(),
            end: other.end.clone(),
        })
    }

    /// Endpoint sheet sanity: y at t=1 of the last segment.
    pub fn end_y(&self) -> Complex64 {
        self.end.y
    }
}

fn first_finite_x(seg: &Segment) -> Option<Complex64> {
    match seg {
        Segment::SChart { a, .. } => {
            if a.norm() == 0.0 {
                None
            } else {
                Some(Complex64::new(1.0, 0.0) / (a * a))
            }
        }
        _ => Some(seg.chart_pos(0.0)),
    }
}

fn endpoint(model: &HyperellipticModel, seg: &Segment, track: &SheetTrack) -> CurvePoint {
    let tlast = track.values.last().copied().unwrap_or_default();
    match seg {
        Segment::SChart { b, .. } if b.norm() == 0.0 => CurvePoint::infinity(),
        Segment::SChart { b, .. } => {
            let g2 = 2 * model.genus() as u32 + 1;
            let x = Complex64::new(1.0, 0.0) / (b * b);
            CurvePoint::finite(x, tlast / b.powu(g2))
        }
        _ => CurvePoint::finite(seg.chart_pos(1.0), tlast),
    }
}

/// Incoming x-plane `y` expressed in the chart of `seg` at its start.
fn into_chart(model: &HyperellipticModel, seg: &Segment, y: Complex64) -> Complex64 {
    match seg {
        Segment::SChart { a, .. } => {
            let g2 = 2 * model.genus() as u32 + 1;
            y * a.powu(g2)
        }
        _ => y,
    }
}

/// Sheet value at the end of `prev_seg` (from its track), converted into the
/// chart of `next_seg` at its start.
fn carry_over(
    model: &HyperellipticModel,
    prev_seg: &Segment,
    prev_track: &SheetTrack,
    next_seg: &Segment,
) -> Result<Complex64> {
    let v = *prev_track.values.last().unwrap();
    let g2 = 2 * model.genus() as u32 + 1;
    match (prev_seg, next_seg) {
        (Segment::SChart { b, .. }, Segment::SChart { a, .. }) => {
            // Same chart: w carries over directly when the s-values agree;
            // the deck transformation s -> -s (same x) flips w's sign.
            if (a - b).norm() <= 1e-12 * (1.0 + b.norm()) {
                Ok(v)
            } else if (a + b).norm() <= 1e-12 * (1.0 + b.norm()) {
                Ok(-v)
            } else if b.norm() > 0.0 {
                Ok(v / b.powu(g2) * a.powu(g2))
            } else {
                Err(PathError::ConcatMismatch)
            }
        }
        (Segment::SChart { b, .. }, _) => {
            if b.norm() == 0.0 {
                // Leaving an s-chart exactly at infinity into an x-chart
                // segment is not representable.
                Err(PathError::ConcatMismatch)
            } else {
                Ok(v / b.powu(g2))
            }
        }
        (_, Segment::SChart { a, .. }) => Ok(v * a.powu(g2)),
        _ => Ok(v),
    }
}

/// Build the checkpoint track for one segment, refining until every
/// continuation step is unambiguous.  `incoming` is the sheet value at the
/// segment start, already expressed in the segment's chart.
fn lift_segment(
    model: &HyperellipticModel,
    seg: &Segment,
    incoming: Option<Complex64>,
    sheet_hint: f64,
) -> Result<SheetTrack> {
    let mut n = 64usize;
    'refine: loop {
        let mut values = Vec::with_capacity(n + 1);
        let t0_target = track_target(model, seg, 0.0);
        let mut start_from = incoming;
        if t0_target.norm() < 1e-10 {
            if let Some(v) = start_from {
                if v.norm() < 1e-4 {
                    // Segment starts at a branch point: continuation restarts
                    // from the hint rather than a vanishing sheet value.
                    start_from = None;
                }
            }
        }
        // A segment that starts (within rounding) at a branch point cannot
        // continue a sheet out of the vanishing value: the first step is
        // re-seeded from the hint instead.
        let mut fresh = t0_target.norm() < 1e-10;
        let mut prev = match start_from {
            Some(v) => {
                // Snap onto the actual square root (the handed-in value may
                // come from a coarser representation).
                match continue_sqrt(t0_target, v) {
                    Some(w) => w,
                    None => v,
                }
            }
            None => sheet_hint * t0_target.sqrt(),
        };
        values.push(prev);
        let mut ambiguous = false;
        for k in 1..=n {
            let t = k as f64 / n as f64;
            let target = track_target(model, seg, t);
            // Branch clearance at interior checkpoints (endpoints may be
            // Weierstrass points).
            if k < n && target.norm() < 1e-20 {
                return Err(PathError::BranchClearance(target.norm()));
            }
            if fresh {
                // Leaving a branch point: pick the hinted sheet.
                prev = sheet_hint * target.sqrt();
                values.push(prev);
                fresh = false;
                continue;
            }
            let r = target.sqrt();
            if k == n && r.norm() <= (1e-4 * prev.norm()).max(1e-6) {
                // Arriving at a branch point: the value is ~0 and the sign
                // immaterial at this scale.
                values.push(r);
                break;
            }
            match continue_sqrt(target, prev) {
                Some(v) => {
                    prev = v;
                    values.push(v);
                }
                None => {
                    ambiguous = true;
                    break;
                }
            }
        }
        if ambiguous {
            n *= 2;
            if n > MAX_CHECKPOINTS {
                return Err(PathError::ContinuationAmbiguous);
            }
            continue 'refine;
        }
        return Ok(SheetTrack { values });
    }
}

// ---------------------------------------------------------------------------
// Gauss-Kronrod quadrature (7-15 pair) for complex integrands
// ---------------------------------------------------------------------------

const XGK15: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
const WG7: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];
const WGK15: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// One 7-15 Gauss-Kronrod panel; returns (kronrod value, error estimate).
fn gk15<F: FnMut(f64) -> Complex64>(f: &mut F, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK15[7];
    let mut gauss = fc * WG7[3];
    for j in 0..7 {
        let dx = h * XGK15[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        kron += (f1 + f2) * WGK15[j];
        if j % 2 == 1 {
            gauss += (f1 + f2) * WG7[j / 2];
        }
    }
    kron *= h;
    gauss *= h;
    let err = (kron - gauss).norm();
    (kron, err)
}

/// Adaptive Gauss-Kronrod integration of a complex integrand on [a, b].
pub fn integrate_adaptive<F: FnMut(f64) -> Complex64>(
    f: &mut F,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<(Complex64, f64)> {
    // Interval heap ordered by error contribution.
    struct Iv {
        a: f64,
        b: f64,
        val: Complex64,
        err: f64,
    }
    let (val, err) = gk15(f, a, b);
    let mut ivs = vec![Iv { a, b, val, err }];
    let mut total_err: f64 = err;
    let max_iv = 4000;
    while total_err > tol && ivs.len() < max_iv {
        // Split the worst interval.
        let worst = ivs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.partial_cmp(&y.1.err).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        let iv = ivs.swap_remove(worst);
        total_err -= iv.err;
        let m = 0.5 * (iv.a + iv.b);
        if m <= iv.a || m >= iv.b {
            // Interval at rounding level; keep its estimate.
            total_err += iv.err;
            ivs.push(iv);
            break;
        }
        let (v1, e1) = gk15(f, iv.a, m);
        let (v2, e2) = gk15(f, m, iv.b);
        total_err += e1 + e2;
        ivs.push(Iv { a: iv.a, b: m, val: v1, err: e1 });
        ivs.push(Iv { a: m, b: iv.b, val: v2, err: e2 });
    }
    let value = ivs.iter().fold(Complex64::new(0.0, 0.0), |acc, iv| acc + iv.val);
    if total_err > tol.max(1e-15 * (1.0 + value.norm())) * 16.0 {
        return Err(PathError::Tolerance { requested: tol, achieved: total_err });
    }
    Ok((value, total_err))
}

/// Line integral of a 1-form along a lifted path, adaptive per segment,
/// with the `t = u^2` substitution at branch-point endpoints.
pub fn integrate_1form(path: &LiftedPath, form: &dyn OneForm, tol: f64) -> Result<Complex64> {
    let nseg = path.segments.len();
    let per_seg_tol = tol / nseg as f64;
    let mut total = Complex64::new(0.0, 0.0);
    for idx in 0..nseg {
        let sing_start = path.end_singular(idx, false);
        let sing_end = path.end_singular(idx, true);
        let vel = nseg as f64;
        // Integrand in local t, velocity scaled so that the sum over
        // segments is the global integral: int_0^1 g(local) dlocal.
        let mut g = |t: f64| {
            let p = path.point_local(idx, t, vel);
            form.eval(&p) / vel
        };
        let val = match (sing_start, sing_end) {
            (false, false) => integrate_adaptive(&mut g, 0.0, 1.0, per_seg_tol)?.0,
            _ => {
                // Split at 1/2 and regularize the singular end(s) by t = u^2.
                let mut v = Complex64::new(0.0, 0.0);
                if sing_start {
                    let mut gs = |u: f64| g(u * u) * 2.0 * u;
                    v += integrate_adaptive(&mut gs, 0.0, (0.5f64).sqrt(), per_seg_tol / 2.0)?.0;
                } else {
                    v += integrate_adaptive(&mut g, 0.0, 0.5, per_seg_tol / 2.0)?.0;
                }
                if sing_end {
                    let mut ge = |u: f64| g(1.0 - u * u) * 2.0 * u;
                    v += integrate_adaptive(&mut ge, 0.0, (0.5f64).sqrt(), per_seg_tol / 2.0)?.0;
                } else {
                    v += integrate_adaptive(&mut g, 0.5, 1.0, per_seg_tol / 2.0)?.0;
                }
                v
            }
        };
        total += val;
    }
    Ok(total)
}

// ---------------------------------------------------------------------------
// Iterated integrals via Chebyshev panels
// ---------------------------------------------------------------------------

/// Chebyshev-Lobatto nodes on [0, 1], ascending.
fn cheb_nodes(m: usize) -> Vec<f64> {
    (0..=m)
        .map(|i| 0.5 * (1.0 - (PI * i as f64 / m as f64).cos()))
        .collect()
}

/// Values at Lobatto nodes -> Chebyshev coefficients (O(m^2) DCT).
fn cheb_coeffs(vals: &[Complex64]) -> Vec<Complex64> {
    let m = vals.len() - 1;
    let mut coeffs = vec![Complex64::new(0.0, 0.0); m + 1];
    for (k, c) in coeffs.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, v) in vals.iter().enumerate() {
            // vals are at x_i = -cos(pi i / m) mapped ascending; use the
            // standard formula with weight 1/2 at both ends.
            let w = if i == 0 || i == m { 0.5 } else { 1.0 };
            let ang = PI * (k * i) as f64 / m as f64;
            // T_k at node i in the ascending order: cos(k (pi - pi i / m))
            let _ = ang;
            let theta = PI * (1.0 - i as f64 / m as f64);
            acc += v * ((k as f64) * theta).cos() * w;
        }
        *c = acc * (2.0 / m as f64);
    }
    coeffs[0] *= 0.5;
    let last = coeffs.len() - 1;
    coeffs[last] *= 0.5;
    coeffs
}

/// Antiderivative values at the same nodes, normalized to 0 at the panel
/// start, for a panel of width `h` (in the global parameter).
fn cheb_antiderivative(vals: &[Complex64], h: f64) -> Vec<Complex64> {
    let m = vals.len() - 1;
    let a = cheb_coeffs(vals);
    // Antiderivative coefficients on [-1, 1]:
    // b_k = (a_{k-1} - a_{k+1}) / (2k), scaled by h/2.
    let mut b = vec![Complex64::new(0.0, 0.0); m + 2];
    for k in 1..=m + 1 {
        // The uniform recurrence assumes the constant coefficient is stored
        // doubled (int T_0 = T_1 contributes a_0, not a_0 / 2).
        let prev = if k == 1 { a[0] * 2.0 } else { a[k - 1] };
        let next = if k + 1 <= m { a[k + 1] } else { Complex64::new(0.0, 0.0) };
        b[k] = (prev - next) / (2.0 * k as f64) * (h * 0.5);
    }
    // Evaluate at the ascending Lobatto nodes and subtract the start value.
    let mut out = Vec::with_capacity(m + 1);
    for i in 0..=m {
        let theta = PI * (1.0 - i as f64 / m as f64);
        let x = theta.cos(); // in [-1, 1], ascending with i
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, bk) in b.iter().enumerate() {
            acc += bk * ((k as f64) * x.acos()).cos();
        }
        out.push(acc);
    }
    let first = out[0];
    for v in &mut out {
        *v -= first;
    }
    out
}

/// Iterated integral of up to three 1-forms along a lifted path, via the
/// triangular running-integral system on Chebyshev panels.  The global
/// parameter is warped by a smoothstep so that square-root endpoint
/// singularities (paths starting or ending at branch points) are tamed.
pub fn iterated_integral(path: &LiftedPath, forms: &[&dyn OneForm], tol: f64) -> Result<Complex64> {
    if forms.len() > 3 {
        return Err(PathError::TooManyForms(3));
    }
    if forms.is_empty() {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let mut prev: Option<Complex64> = None;
    let mut last_change = f64::NAN;
    let mut panels_per_seg = 4usize;
    let m = 24usize; // Lobatto order per panel
    while panels_per_seg <= 512 {
        let value = iterated_once(path, forms, panels_per_seg, m);
        if let Some(p) = prev {
            last_change = (value - p).norm();
            if last_change <= tol.max(1e-12 * (1.0 + value.norm())) {
                return Ok(value);
            }
        }
        prev = Some(value);
        panels_per_seg *= 2;
    }
    Err(PathError::IteratedNonconvergence(last_change))
}

/// Per-segment warp of the local parameter.  Segments with a branch-point
/// end get the cosine map, whose vanishing derivative tames the square-root
/// pullback singularity of forms like `dx/y` there; plain segments keep the
/// identity.
fn seg_warp(singular: bool, v: f64) -> (f64, f64) {
    if singular {
        (0.5 * (1.0 - (PI * v).cos()), 0.5 * PI * (PI * v).sin())
    } else {
        (v, 1.0)
    }
}

fn iterated_once(
    path: &LiftedPath,
    forms: &[&dyn OneForm],
    panels_per_seg: usize,
    m: usize,
) -> Complex64 {
    let nseg = path.segments.len();
    let nodes = cheb_nodes(m);
    // Running values of I_k at the current position, k = 1..=len.
    let mut running = vec![Complex64::new(0.0, 0.0); forms.len()];
    for segk in 0..nseg {
        let singular = path.end_singular(segk, false) || path.end_singular(segk, true);
        // A warped sample: the path point at local parameter `w(v)`, with
        // the velocity in the global panel parameter.
        let sample = |v: f64| -> PathPoint {
            let (lam, dw) = seg_warp(singular, v);
            let mut p = path.point_local(segk, lam.clamp(0.0, 1.0), nseg as f64);
            p.dx *= dw;
            p.t = (segk as f64 + v) / nseg as f64;
            p
        };
        for panel in 0..panels_per_seg {
            let v0 = panel as f64 / panels_per_seg as f64;
            let v1 = (panel + 1) as f64 / panels_per_seg as f64;
            // Panel width in the global parameter.
            let h = (v1 - v0) / nseg as f64;
            let vs: Vec<f64> = nodes.iter().map(|&xi| v0 + (v1 - v0) * xi).collect();
            let pts: Vec<PathPoint> = vs.iter().map(|&v| sample(v)).collect();
            // Triangular system: I_k' = g_k I_{k-1}.
            let mut lower: Vec<Complex64> = vec![Complex64::new(1.0, 0.0); m + 1];
            let mut new_running = running.clone();
            for (k, form) in forms.iter().enumerate() {
                // Form values at the nodes.  At a branch-point segment end
                // both the warp factor and `y` degenerate and direct
                // evaluation is 0/0 (or a mismatched rounding artifact); the
                // warped integrand extends smoothly, so those nodes are
                // filled afterwards by evaluating the Chebyshev interpolant
                // of the remaining nodes there (spectrally accurate).
                let mut fvals: Vec<Complex64> = pts
                    .iter()
                    .zip(vs.iter())
                    .map(|(p, &v)| {
                        let at_branch_end = (v == 0.0 && path.end_singular(segk, false))
                            || (v == 1.0 && path.end_singular(segk, true));
                        if at_branch_end {
                            Complex64::new(f64::NAN, 0.0)
                        } else {
                            form.eval(p)
                        }
                    })
                    .collect();
                let bad: Vec<usize> = (0..=m)
                    .filter(|&i| !fvals[i].re.is_finite() || !fvals[i].im.is_finite())
                    .collect();
                for &i in &bad {
                    // Barycentric extrapolation from the good nodes of this
                    // panel (Chebyshev-Lobatto weights (-1)^j, halved ends).
                    let mut num = Complex64::new(0.0, 0.0);
                    let mut den = 0.0;
                    for j in 0..=m {
                        if bad.contains(&j) {
                            continue;
                        }
                        let mut w = if j % 2 == 0 { 1.0 } else { -1.0 };
                        if j == 0 || j == m {
                            w *= 0.5;
                        }
                        let t = w / (nodes[i] - nodes[j]);
                        num += fvals[j] * t;
                        den += t;
                    }
                    fvals[i] = num / den;
                }
                let integrand: Vec<Complex64> = fvals
                    .iter()
                    .zip(lower.iter())
                    .map(|(f, low)| f * low)
                    .collect();
                let anti = cheb_antiderivative(&integrand, h);
                // I_k along this panel = running[k] + anti.
                let ik: Vec<Complex64> = anti.iter().map(|a| running[k] + a).collect();
                new_running[k] = *ik.last().unwrap();
                lower = ik;
            }
            running = new_running;
        }
    }
    *running.last().unwrap()
}

// ---------------------------------------------------------------------------
// Branch-tracked logarithm
// ---------------------------------------------------------------------------

/// A continuous branch of `log f(x)` along a lifted path.
#[derive(Debug, Clone)]
pub struct BranchedLog {
    /// log f at the checkpoints t_k = k/n (global parameter).
    values: Vec<Complex64>,
}

impl BranchedLog {
    /// Track `log f` along the path, starting from `start_value` (a branch
    /// of log f at t = 0).  Steps refine until each increment is below pi/2.
    pub fn track(
        path: &LiftedPath,
        f: &dyn Fn(Complex64) -> Complex64,
        start_value: Complex64,
    ) -> Result<BranchedLog> {
        let mut n = 64usize.max(16 * path.segments.len());
        loop {
            let mut values = Vec::with_capacity(n + 1);
            let mut ok = true;
            let mut prev_f = f(path.point(0.0).x);
            let mut acc = start_value;
            values.push(acc);
            for k in 1..=n {
                let t = k as f64 / n as f64;
                let fx = f(path.point(t).x);
                if fx.norm() < 1e-300 {
                    return Err(PathError::LogSingularity(fx.norm()));
                }
                let ratio = fx / prev_f;
                let inc = ratio.ln();
                if inc.im.abs() > PI / 2.0 {
                    ok = false;
                    break;
                }
                acc += inc;
                values.push(acc);
                prev_f = fx;
            }
            if ok {
                return Ok(BranchedLog { values });
            }
            n *= 2;
            if n > MAX_CHECKPOINTS {
                return Err(PathError::ContinuationAmbiguous);
            }
        }
    }

    pub fn start_value(&self) -> Complex64 {
        self.values[0]
    }

    pub fn end_value(&self) -> Complex64 {
        *self.values.last().unwrap()
    }

    /// Total winding (increase of the imaginary part) divided by 2 pi.
    pub fn winding(&self) -> f64 {
        (self.end_value().im - self.start_value().im) / (2.0 * PI)
    }

    /// The tracked branch at global parameter t, continued from the nearest
    /// checkpoint by a principal-log step against `f`.
    pub fn at(&self, t: f64, f: &dyn Fn(Complex64) -> Complex64, path: &LiftedPath) -> Complex64 {
        let n = self.values.len() - 1;
        let k = ((t * n as f64).round() as usize).min(n);
        let tk = k as f64 / n as f64;
        let fk = f(path.point(tk).x);
        let ft = f(path.point(t).x);
        self.values[k] + (ft / fk).ln()
    }
}

// ---------------------------------------------------------------------------
// Level-set tracing of gamma = f^{-1}([0, infinity])
// ---------------------------------------------------------------------------

/// The traced level set for `f = (x - a)/(x - b)`: the two lifted components
/// of `f^{-1}([0, infinity])`, each running from `(a, 0)` to `(b, 0)` on the
/// curve through the point at infinity (odd-degree models).
pub fn trace_gamma(
    model: &Arc<HyperellipticModel>,
    a: &Rat,
    b: &Rat,
) -> Result<Vec<LiftedPath>> {
    if !model.infinity_is_branch() {
        return Err(PathError::NeedsOddDegree);
    }
    let af = Complex64::new(rat_to_f64(a), 0.0);
    let bf = Complex64::new(rat_to_f64(b), 0.0);
    let dir = bf - af; // f = (x-a)/(x-b) is in [0, inf] on the line outside (a, b)

    // Predictor-corrector trace of {Im f = 0, Re f in [0, 1)} from a going
    // away from b, until |x| is large; then the s-chart through infinity;
    // then the incoming ray to b.
    let xmax = 40.0 * (1.0 + af.norm().max(bf.norm()) + dir.norm());
    // The level set may run straight through further Weierstrass points;
    // split the polylines there so each crossing is a segment boundary where
    // the sheet continuation restarts deterministically.
    let out_pts = insert_branch_crossings(model, &trace_branch(af, bf, af, -dir, xmax)?);
    let in_pts = insert_branch_crossings(model, &trace_branch(af, bf, bf, dir, xmax)?);

    // s-chart endpoints: the outgoing ray ends at x_out (x -> a - t dir),
    // the incoming ray at x_in (x -> b + t dir).
    let x_out = *out_pts.last().unwrap();
    let x_in = *in_pts.last().unwrap();
    let s_out = (Complex64::new(1.0, 0.0) / x_out).sqrt();
    let s_in = (Complex64::new(1.0, 0.0) / x_in).sqrt();

    let mut components = Vec::new();
    for hint in [1.0f64, -1.0] {
        // Outgoing polyline a -> x_out.
        let mut segs: Vec<Segment> = Vec::new();
        for w in out_pts.windows(2) {
            segs.push(Segment::Line { a: w[0], b: w[1] });
        }
        let out_path = XPath { segments: segs };
        let start = CurvePoint::weierstrass(a.clone());
        let lifted_out = LiftedPath::lift(model, &out_path, &start, hint)?;

        // Through infinity: s from +-s_out to 0, then 0 to s_sign_in.
        // The s-sign on the far side is chosen for sheet continuity and does
        // not change x; both choices give the same x-path.
        let end_y = lifted_out.end().y;
        let mut best: Option<LiftedPath> = None;
        for (so, si) in [
            (s_out, s_in),
            (s_out, -s_in),
            (-s_out, s_in),
            (-s_out, -s_in),
        ] {
            let sp = XPath {
                segments: vec![
                    Segment::SChart { a: so, b: Complex64::new(0.0, 0.0) },
                    Segment::SChart { a: Complex64::new(0.0, 0.0), b: si },
                ],
            };
            let start_pt = CurvePoint::finite(x_out, end_y);
            if let Ok(lift) = LiftedPath::lift(model, &sp, &start_pt, hint) {
                // Need y continuity at the junction.
                let y0 = lift_y_at_start(&lift);
                if (y0 - end_y).norm() <= 1e-6 * (1.0 + end_y.norm()) {
                    best = Some(lift);
                    break;
                }
            }
        }
        let through_inf =
            best.ok_or(PathError::TraceStall(x_out))?;

        // Incoming polyline x_in -> b (reverse of the trace from b).
        let mut segs_in: Vec<Segment> = Vec::new();
        let rev: Vec<Complex64> = in_pts.iter().rev().cloned().collect();
        for w in rev.windows(2) {
            segs_in.push(Segment::Line { a: w[0], b: w[1] });
        }
        let in_path = XPath { segments: segs_in };
        let inf_end = through_inf.end().clone();
        let lifted_in = LiftedPath::lift(model, &in_path, &inf_end, hint)?;

        components.push(lifted_out.then(&through_inf)?.then(&lifted_in)?);
    }
    Ok(components)
}

fn lift_y_at_start(path: &LiftedPath) -> Complex64 {
    path.point(0.0).y
}

/// Insert the exact x-coordinates of branch points that lie on interior
/// points of polyline segments, so they become segment boundaries.
fn insert_branch_crossings(model: &HyperellipticModel, pts: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![pts[0]];
    for w in pts.windows(2) {
        let (p, q) = (w[0], w[1]);
        let d = q - p;
        let mut crossings: Vec<(f64, Complex64)> = Vec::new();
        if d.norm() > 0.0 {
            for &e in model.branch_points() {
                let t = ((e - p) * d.conj()).re / d.norm_sqr();
                if t > 1e-9 && t < 1.0 - 1e-9 {
                    let proj = p + d * t;
                    if (proj - e).norm() < 1e-9 * (1.0 + e.norm()) {
                        crossings.push((t, e));
                    }
                }
            }
        }
        crossings.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
        for (_, e) in crossings {
            out.push(e);
        }
        out.push(q);
    }
    out
}

/// Trace the level set `Im f = 0` from `from` in direction `dir0` until
/// `|x| > xmax`; predictor along the ray, corrector by Newton on Im f
/// in the transverse direction.
fn trace_branch(
    a: Complex64,
    b: Complex64,
    from: Complex64,
    dir0: Complex64,
    xmax: f64,
) -> Result<Vec<Complex64>> {
    let f = |x: Complex64| (x - a) / (x - b);
    let fp = |x: Complex64| (a - b) / ((x - b) * (x - b));
    let dir = dir0 / dir0.norm();
    let normal = dir * Complex64::new(0.0, 1.0);
    let mut pts = vec![from];
    let mut x = from;
    let mut step = 0.05 * (b - a).norm().max(1e-3);
    let mut stall = 0;
    while x.norm() < xmax {
        // Predictor.
        let mut xn = x + dir * step;
        // Corrector: Newton on Im f along the normal direction.
        for _ in 0..8 {
            let v = f(xn);
            if v.im.abs() < 1e-13 * (1.0 + v.norm()) {
                break;
            }
            let d = fp(xn);
            let dn = (d * normal).im; // d Im f / d (normal displacement)
            if dn.abs() < 1e-300 {
                break;
            }
            xn -= normal * (v.im / dn);
        }
        let v = f(xn);
        if v.im.abs() > 1e-9 * (1.0 + v.norm()) {
            stall += 1;
            step *= 0.5;
            if stall > 60 {
                return Err(PathError::TraceStall(x));
            }
            continue;
        }
        x = xn;
        pts.push(x);
        // Arclength-adaptive growth away from the endpoints.
        step = (step * 1.5).min(0.3 * (1.0 + x.norm()));
    }
    Ok(pts)
}

#[cfg(test)]
mod tests;
