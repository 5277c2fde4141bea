//! Level curves of convex fields over a rectangle and their intersections.
//!
//! Curves are extracted by contouring a uniform sample grid. Every vertex of a
//! traced polyline lies on a grid edge and is refined there by bisection, so
//! it satisfies `|g - level| < tol`. Because the fields are convex, two extra
//! situations that plain contouring misses are detected and handled: a curve
//! that enters and leaves through the same grid edge, and a sublevel set that
//! fits inside a single cell.
//!
//! Crossings of two curves traced on the same grid are searched cell by cell
//! and then refined with Newton's method on the pair of level equations.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::mixed_distance::{combine, BranchTag, Orientation, SegmentFrame};
use crate::model::{OdPair, PlanarPoint, ProblemInstance};
use crate::preprocess::DistanceForm;

pub const DEFAULT_TRACE_RES: usize = 256;
pub const DEFAULT_TRACE_TOL: f64 = 1e-10;
pub const DEFAULT_REFINE_TOL: f64 = 1e-9;
pub const DEFAULT_DEDUPE_RADIUS: f64 = 1e-7;
/// Maximum number of crossings between two boundary curves.
pub const BEZOUT_BOUND: usize = 12;
pub const MIN_TRACE_RES: usize = 16;

const BOUNDARY_EPS: f64 = 1e-9;
const SUBCELL_RES: usize = 16;
const MAX_SUBCELL_DEPTH: usize = 8;
const NEWTON_ITERS: usize = 50;

/// A convex, continuous field on the plane.
pub trait ScalarField {
    fn value(&self, x: f64, y: f64) -> f64;

    /// Any subgradient at `(x, y)`.
    fn gradient(&self, x: f64, y: f64) -> [f64; 2];

    /// Upper bounds on `|dg/dx|` and `|dg/dy|`.
    fn lipschitz(&self) -> [f64; 2];
}

/// `g(x, y) = c0 + cx * x + cy * y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineField {
    pub c0: f64,
    pub cx: f64,
    pub cy: f64,
}

impl ScalarField for AffineField {
    fn value(&self, x: f64, y: f64) -> f64 {
        self.c0 + self.cx * x + self.cy * y
    }

    fn gradient(&self, _x: f64, _y: f64) -> [f64; 2] {
        [self.cx, self.cy]
    }

    fn lipschitz(&self) -> [f64; 2] {
        [self.cx.abs(), self.cy.abs()]
    }
}

/// Travel length of one O/D pair along one branch of the network distance,
/// as a function of the two segment parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchField {
    pub origin: PlanarPoint,
    pub dest: PlanarPoint,
    pub p: SegmentFrame,
    pub q: SegmentFrame,
    pub alpha: f64,
    pub orientation: Orientation,
    pub form: DistanceForm,
}

impl BranchField {
    pub fn new(
        inst: &ProblemInstance,
        pair: &OdPair,
        p: SegmentFrame,
        q: SegmentFrame,
        orientation: Orientation,
        form: DistanceForm,
    ) -> Self {
        Self {
            origin: inst.facility(pair.origin),
            dest: inst.facility(pair.dest),
            p,
            q,
            alpha: inst.alpha,
            orientation,
            form,
        }
    }

    /// Facilities attached to the `x` and `y` parameters.
    pub fn anchors(&self) -> (PlanarPoint, PlanarPoint) {
        match self.orientation {
            Orientation::Forward => (self.origin, self.dest),
            Orientation::Reverse => (self.dest, self.origin),
        }
    }

    /// Whether both fields describe the same function.
    pub fn same_function(&self, other: &BranchField) -> bool {
        self.anchors() == other.anchors()
            && self.form == other.form
            && self.alpha == other.alpha
            && self.p == other.p
            && self.q == other.q
    }

    /// Lower bound of the field over the rectangle.
    pub fn lower_bound(&self) -> f64 {
        let (ax, ay) = self.anchors();
        point_segment_distance(&ax, &self.p.at(0.0), &self.p.at(self.p.len))
            + point_segment_distance(&ay, &self.q.at(0.0), &self.q.at(self.q.len))
    }
}

fn point_segment_distance(pt: &PlanarPoint, a: &PlanarPoint, b: &PlanarPoint) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((pt.x - a.x) * dx + (pt.y - a.y) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    pt.dist(&PlanarPoint::lerp(a, b, t))
}

fn norm_gradient(anchor: &PlanarPoint, at: &PlanarPoint, dir: [f64; 2]) -> f64 {
    let (dx, dy) = (at.x - anchor.x, at.y - anchor.y);
    let r = dx.hypot(dy);
    if r > 0.0 {
        (dx * dir[0] + dy * dir[1]) / r
    } else {
        0.0
    }
}

impl ScalarField for BranchField {
    fn value(&self, x: f64, y: f64) -> f64 {
        let (x1, x2) = (self.p.at(x), self.q.at(y));
        let net = self.alpha * self.form.eval(x, y);
        match self.orientation {
            Orientation::Forward => combine(self.origin.dist(&x1), net, x2.dist(&self.dest)),
            Orientation::Reverse => combine(self.origin.dist(&x2), net, x1.dist(&self.dest)),
        }
    }

    fn gradient(&self, x: f64, y: f64) -> [f64; 2] {
        let (ax, ay) = self.anchors();
        let [fx, fy] = self.form.gradient(x, y);
        [
            norm_gradient(&ax, &self.p.at(x), self.p.direction()) + self.alpha * fx,
            norm_gradient(&ay, &self.q.at(y), self.q.direction()) + self.alpha * fy,
        ]
    }

    fn lipschitz(&self) -> [f64; 2] {
        [self.p.speed() + self.alpha, self.q.speed() + self.alpha]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(width: f64, height: f64) -> Self {
        Self {
            x0: 0.0,
            y0: 0.0,
            x1: width,
            y1: height,
        }
    }

    pub fn clamp(&self, p: [f64; 2]) -> [f64; 2] {
        [p[0].clamp(self.x0, self.x1), p[1].clamp(self.y0, self.y1)]
    }

    pub fn on_boundary(&self, p: [f64; 2], eps: f64) -> bool {
        (p[0] - self.x0).abs() <= eps
            || (p[0] - self.x1).abs() <= eps
            || (p[1] - self.y0).abs() <= eps
            || (p[1] - self.y1).abs() <= eps
    }

    pub fn corners(&self) -> [[f64; 2]; 4] {
        [
            [self.x0, self.y0],
            [self.x1, self.y0],
            [self.x1, self.y1],
            [self.x0, self.y1],
        ]
    }

    fn grid_coord(lo: f64, hi: f64, i: usize, n: usize) -> f64 {
        if i == n {
            hi
        } else {
            lo + (hi - lo) * i as f64 / n as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    pub vertices: Vec<[f64; 2]>,
    /// Grid cell of each segment (`vertices[k]` to `vertices[k + 1]`).
    pub cells: Vec<u32>,
    pub closed: bool,
}

impl Polyline {
    pub fn segments(&self) -> impl Iterator<Item = ([f64; 2], [f64; 2], u32)> + '_ {
        self.vertices
            .windows(2)
            .zip(&self.cells)
            .map(|(w, &c)| (w[0], w[1], c))
    }
}

/// Polyline approximation of `{g = level}` inside a rectangle.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelCurve {
    pub level: f64,
    pub rect: Rect,
    /// Grid cells per axis used for tracing.
    pub res: usize,
    pub polylines: Vec<Polyline>,
}

impl LevelCurve {
    pub fn is_empty(&self) -> bool {
        self.polylines.is_empty()
    }

    pub fn first_vertex(&self) -> Option<[f64; 2]> {
        self.polylines
            .first()
            .and_then(|p| p.vertices.first().copied())
    }

    pub fn vertices(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        self.polylines
            .iter()
            .flat_map(|p| p.vertices.iter().copied())
    }

    pub fn vertex_count(&self) -> usize {
        self.polylines.iter().map(|p| p.vertices.len()).sum()
    }
}

// ---------------------------------------------------------------------------
// Tracing

#[derive(Debug, Clone, Copy, Default)]
struct EdgeCrossings {
    n: u8,
    pts: [[f64; 2]; 2],
}

#[derive(Debug, Clone, Copy)]
struct RawSegment {
    a: [f64; 2],
    b: [f64; 2],
    ka: u64,
    kb: u64,
    cell: u32,
}

fn at(a: [f64; 2], b: [f64; 2], t: f64) -> [f64; 2] {
    [a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t]
}

fn eval<F: ScalarField>(field: &F, p: [f64; 2]) -> Result<f64> {
    let v = field.value(p[0], p[1]);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite { x: p[0], y: p[1] })
    }
}

/// Point on `[inside, outside]` where the field meets `level`.
fn bisect<F: ScalarField>(
    field: &F,
    level: f64,
    inside: [f64; 2],
    outside: [f64; 2],
    tol: f64,
) -> Result<[f64; 2]> {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut best = (f64::INFINITY, inside);
    for _ in 0..200 {
        let t = 0.5 * (lo + hi);
        let p = at(inside, outside, t);
        let r = eval(field, p)? - level;
        if r.abs() < best.0 {
            best = (r.abs(), p);
        }
        if r.abs() < tol || hi <= lo + f64::EPSILON {
            break;
        }
        if r < 0.0 {
            lo = t;
        } else {
            hi = t;
        }
    }
    Ok(best.1)
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Minimum of a convex function of one variable on `[lo, hi]`.
fn golden_min(
    mut f: impl FnMut(f64) -> Result<f64>,
    lo: f64,
    hi: f64,
    iters: usize,
) -> Result<(f64, f64)> {
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    for _ in 0..iters {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
    }
    let (fa, fb) = (f(lo)?, f(hi)?);
    let mut best = if fc <= fd { (c, fc) } else { (d, fd) };
    if fa < best.1 {
        best = (lo, fa);
    }
    if fb < best.1 {
        best = (hi, fb);
    }
    Ok(best)
}

/// Minimizer of a convex field over a rectangle by nested golden sections.
fn minimize_convex<F: ScalarField>(field: &F, rect: Rect) -> Result<([f64; 2], f64)> {
    let inner = |x: f64| golden_min(|y| eval(field, [x, y]), rect.y0, rect.y1, 60);
    let (x, _) = golden_min(|x| inner(x).map(|r| r.1), rect.x0, rect.x1, 60)?;
    let (y, v) = inner(x)?;
    Ok(([x, y], v))
}

#[allow(clippy::too_many_arguments)]
fn edge_crossings<F: ScalarField>(
    field: &F,
    level: f64,
    a: [f64; 2],
    b: [f64; 2],
    ga: f64,
    gb: f64,
    lip_len: f64,
    tol: f64,
) -> Result<EdgeCrossings> {
    let (ia, ib) = (ga < level, gb < level);
    let mut out = EdgeCrossings::default();
    if ia != ib {
        let p = if ia {
            bisect(field, level, a, b, tol)?
        } else {
            bisect(field, level, b, a, tol)?
        };
        out.n = 1;
        out.pts[0] = p;
        return Ok(out);
    }
    if ia || ga + gb - 2.0 * level >= lip_len {
        return Ok(out);
    }
    // Both ends outside but close to the level: the curve may dip across
    // this edge twice. Supporting lines at both ends bound the minimum.
    let dir = [b[0] - a[0], b[1] - a[1]];
    let (da, db) = (field.gradient(a[0], a[1]), field.gradient(b[0], b[1]));
    let sa = da[0] * dir[0] + da[1] * dir[1];
    let sb = db[0] * dir[0] + db[1] * dir[1];
    if sa >= 0.0 || sb <= 0.0 {
        return Ok(out);
    }
    let t_star = ((gb - sb - ga) / (sa - sb)).clamp(0.0, 1.0);
    if ga + sa * t_star >= level {
        return Ok(out);
    }
    let (tm, gm) = golden_min(|t| eval(field, at(a, b, t)), 0.0, 1.0, 80)?;
    if gm < level {
        let m = at(a, b, tm);
        out.n = 2;
        out.pts[0] = bisect(field, level, m, a, tol)?;
        out.pts[1] = bisect(field, level, m, b, tol)?;
    }
    Ok(out)
}

fn grid_segments<F: ScalarField>(
    field: &F,
    level: f64,
    rect: Rect,
    nx: usize,
    ny: usize,
    tol: f64,
    depth: usize,
) -> Result<Vec<RawSegment>> {
    let xs: Vec<f64> = (0..=nx)
        .map(|i| Rect::grid_coord(rect.x0, rect.x1, i, nx))
        .collect();
    let ys: Vec<f64> = (0..=ny)
        .map(|j| Rect::grid_coord(rect.y0, rect.y1, j, ny))
        .collect();
    let stride = nx + 1;
    let mut vals = Vec::with_capacity(stride * (ny + 1));
    for &y in &ys {
        for &x in &xs {
            vals.push(eval(field, [x, y])?);
        }
    }
    let val = |i: usize, j: usize| vals[j * stride + i];
    let (hx, hy) = (
        (rect.x1 - rect.x0) / nx as f64,
        (rect.y1 - rect.y0) / ny as f64,
    );
    let [lx, ly] = field.lipschitz();

    // Horizontal edges (i, j)-(i+1, j) then vertical edges (i, j)-(i, j+1).
    let mut hcross = vec![EdgeCrossings::default(); nx * (ny + 1)];
    for j in 0..=ny {
        for i in 0..nx {
            hcross[j * nx + i] = edge_crossings(
                field,
                level,
                [xs[i], ys[j]],
                [xs[i + 1], ys[j]],
                val(i, j),
                val(i + 1, j),
                lx * hx,
                tol,
            )?;
        }
    }
    let mut vcross = vec![EdgeCrossings::default(); stride * ny];
    for j in 0..ny {
        for i in 0..=nx {
            vcross[j * stride + i] = edge_crossings(
                field,
                level,
                [xs[i], ys[j]],
                [xs[i], ys[j + 1]],
                val(i, j),
                val(i, j + 1),
                ly * hy,
                tol,
            )?;
        }
    }

    let h_total = (nx * (ny + 1)) as u64;
    let hkey = |i: usize, j: usize, k: usize| ((j * nx + i) as u64) * 2 + k as u64;
    let vkey = |i: usize, j: usize, k: usize| (h_total + (j * stride + i) as u64) * 2 + k as u64;

    let mut segments = Vec::new();
    let mut ring: Vec<([f64; 2], u64)> = Vec::with_capacity(8);
    for j in 0..ny {
        for i in 0..nx {
            ring.clear();
            let bottom = &hcross[j * nx + i];
            for k in 0..bottom.n as usize {
                ring.push((bottom.pts[k], hkey(i, j, k)));
            }
            let right = &vcross[j * stride + i + 1];
            for k in 0..right.n as usize {
                ring.push((right.pts[k], vkey(i + 1, j, k)));
            }
            let top = &hcross[(j + 1) * nx + i];
            for k in (0..top.n as usize).rev() {
                ring.push((top.pts[k], hkey(i, j + 1, k)));
            }
            let left = &vcross[j * stride + i];
            for k in (0..left.n as usize).rev() {
                ring.push((left.pts[k], vkey(i, j, k)));
            }
            if ring.is_empty() {
                continue;
            }
            // Walk the cell boundary counter-clockwise from its lower-left
            // corner; each crossing leaving the sublevel set is joined to
            // the next crossing, which re-enters it.
            let mut inside = val(i, j) < level;
            let cell = (j * nx + i) as u32;
            let m = ring.len();
            for k in 0..m {
                if inside {
                    let (a, ka) = ring[k];
                    let (b, kb) = ring[(k + 1) % m];
                    segments.push(RawSegment { a, b, ka, kb, cell });
                }
                inside = !inside;
            }
        }
    }

    if segments.is_empty() && depth < MAX_SUBCELL_DEPTH {
        let grid_min = vals.iter().copied().fold(f64::INFINITY, f64::min);
        if grid_min >= level && grid_min - level < lx * hx + ly * hy {
            let (m, gm) = minimize_convex(field, rect)?;
            if gm < level {
                // The whole sublevel set sits inside one cell.
                let ci = (((m[0] - rect.x0) / hx).floor() as usize).min(nx - 1);
                let cj = (((m[1] - rect.y0) / hy).floor() as usize).min(ny - 1);
                let sub = Rect {
                    x0: xs[ci],
                    y0: ys[cj],
                    x1: xs[ci + 1],
                    y1: ys[cj + 1],
                };
                let cell = (cj * nx + ci) as u32;
                let mut inner =
                    grid_segments(field, level, sub, SUBCELL_RES, SUBCELL_RES, tol, depth + 1)?;
                for s in &mut inner {
                    s.cell = cell;
                }
                return Ok(inner);
            }
        }
    }
    Ok(segments)
}

fn link(segments: &[RawSegment]) -> Vec<Polyline> {
    let mut by_key: HashMap<u64, Vec<usize>> = HashMap::new();
    for (s, seg) in segments.iter().enumerate() {
        by_key.entry(seg.ka).or_default().push(s);
        by_key.entry(seg.kb).or_default().push(s);
    }
    let mut ends: Vec<u64> = by_key
        .iter()
        .filter(|(_, v)| v.len() == 1)
        .map(|(&k, _)| k)
        .collect();
    ends.sort_unstable();

    let mut used = vec![false; segments.len()];
    let mut out = Vec::new();
    let mut walk = |start_seg: usize, start_key: u64, used: &mut Vec<bool>| {
        let first = segments[start_seg];
        let first_pt = if first.ka == start_key {
            first.a
        } else {
            first.b
        };
        let mut poly = Polyline {
            vertices: vec![first_pt],
            cells: Vec::new(),
            closed: false,
        };
        let (mut s, mut key) = (start_seg, start_key);
        loop {
            used[s] = true;
            let seg = segments[s];
            let (next_key, next_pt) = if seg.ka == key {
                (seg.kb, seg.b)
            } else {
                (seg.ka, seg.a)
            };
            poly.vertices.push(next_pt);
            poly.cells.push(seg.cell);
            key = next_key;
            match by_key[&key].iter().copied().find(|&o| !used[o]) {
                Some(o) => s = o,
                None => break,
            }
        }
        poly.closed = key == start_key && poly.vertices.len() > 2;
        out.push(poly);
    };
    for k in ends {
        let s = by_key[&k][0];
        if !used[s] {
            walk(s, k, &mut used);
        }
    }
    for s in 0..segments.len() {
        if !used[s] {
            walk(s, segments[s].ka, &mut used);
        }
    }
    out
}

/// Traces `{g = level}` on a `res x res` cell grid over `rect`.
pub fn trace_level_curve<F: ScalarField>(
    field: &F,
    level: f64,
    rect: Rect,
    res: usize,
    tol: f64,
) -> Result<LevelCurve> {
    if res < MIN_TRACE_RES {
        return Err(Error::Parameter(format!(
            "trace resolution {res} below minimum {MIN_TRACE_RES}"
        )));
    }
    if level.is_nan() || level < 0.0 {
        return Err(Error::Parameter(format!(
            "level must be nonnegative: {level}"
        )));
    }
    let segments = grid_segments(field, level, rect, res, res, tol, 0)?;
    Ok(LevelCurve {
        level,
        rect,
        res,
        polylines: link(&segments),
    })
}

/// Endpoints of open polylines that lie on the rectangle boundary.
pub fn rectangle_boundary_points(curve: &LevelCurve) -> Vec<[f64; 2]> {
    curve
        .polylines
        .iter()
        .filter(|p| !p.closed)
        .flat_map(|p| [p.vertices[0], p.vertices[p.vertices.len() - 1]])
        .filter(|&v| curve.rect.on_boundary(v, BOUNDARY_EPS))
        .collect()
}

// ---------------------------------------------------------------------------
// Intersections

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntersectParams {
    pub refine_tol: f64,
    pub dedupe_radius: f64,
    /// Used when curves are re-traced.
    pub trace_tol: f64,
}

impl Default for IntersectParams {
    fn default() -> Self {
        Self {
            refine_tol: DEFAULT_REFINE_TOL,
            dedupe_radius: DEFAULT_DEDUPE_RADIUS,
            trace_tol: DEFAULT_TRACE_TOL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntersectionPoint {
    pub x: f64,
    pub y: f64,
    /// `max(|g1 - level1|, |g2 - level2|)`.
    pub residual: f64,
    /// False when Newton refinement did not converge.
    pub refined: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IntersectionSet {
    pub points: Vec<IntersectionPoint>,
    /// The curves were traced again at twice the resolution.
    pub retraced: bool,
    /// More than [`BEZOUT_BOUND`] points remained after re-tracing.
    pub bound_exceeded: bool,
}

type Chord = ([f64; 2], [f64; 2]);

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn segment_intersection(
    p0: [f64; 2],
    p1: [f64; 2],
    q0: [f64; 2],
    q1: [f64; 2],
) -> Option<[f64; 2]> {
    let r = [p1[0] - p0[0], p1[1] - p0[1]];
    let s = [q1[0] - q0[0], q1[1] - q0[1]];
    let denom = cross(r, s);
    if denom == 0.0 {
        return None;
    }
    let qp = [q0[0] - p0[0], q0[1] - p0[1]];
    let t = cross(qp, s) / denom;
    let u = cross(qp, r) / denom;
    const EPS: f64 = 1e-12;
    if (-EPS..=1.0 + EPS).contains(&t) && (-EPS..=1.0 + EPS).contains(&u) {
        Some(at(p0, p1, t.clamp(0.0, 1.0)))
    } else {
        None
    }
}

struct Pair<'a, F1, F2> {
    f1: &'a F1,
    l1: f64,
    f2: &'a F2,
    l2: f64,
    rect: Rect,
}

impl<F1: ScalarField, F2: ScalarField> Pair<'_, F1, F2> {
    fn residual(&self, p: [f64; 2]) -> [f64; 2] {
        [
            self.f1.value(p[0], p[1]) - self.l1,
            self.f2.value(p[0], p[1]) - self.l2,
        ]
    }

    fn newton(&self, start: [f64; 2], tol: f64) -> ([f64; 2], f64) {
        let mut p = start;
        let mut r = self.residual(p);
        let norm = |r: [f64; 2]| r[0].abs().max(r[1].abs());
        for _ in 0..NEWTON_ITERS {
            if norm(r) < tol || !norm(r).is_finite() {
                break;
            }
            let g1 = self.f1.gradient(p[0], p[1]);
            let g2 = self.f2.gradient(p[0], p[1]);
            let det = g1[0] * g2[1] - g1[1] * g2[0];
            if det.abs() < 1e-14 {
                break;
            }
            let dx = -(g2[1] * r[0] - g1[1] * r[1]) / det;
            let dy = -(-g2[0] * r[0] + g1[0] * r[1]) / det;
            let mut lambda = 1.0;
            let mut accepted = false;
            for _ in 0..30 {
                let cand = self.rect.clamp([p[0] + lambda * dx, p[1] + lambda * dy]);
                let rc = self.residual(cand);
                if norm(rc) < norm(r) {
                    p = cand;
                    r = rc;
                    accepted = true;
                    break;
                }
                lambda *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        (p, norm(r))
    }

    /// Refines a polyline crossing found on chord `(c0, c1)` of the first curve.
    fn refine(
        &self,
        start: [f64; 2],
        c0: [f64; 2],
        c1: [f64; 2],
        tol: f64,
        reach: f64,
    ) -> IntersectionPoint {
        let moved = |p: [f64; 2]| (p[0] - start[0]).hypot(p[1] - start[1]);
        let (p, res) = self.newton(start, tol);
        if res < tol && moved(p) <= reach {
            return IntersectionPoint {
                x: p[0],
                y: p[1],
                residual: res,
                refined: true,
            };
        }
        // Fallback: bisect the second level equation along the chord, then
        // polish again.
        let mut best = (
            start,
            self.residual(start)[0]
                .abs()
                .max(self.residual(start)[1].abs()),
        );
        if res < best.1 && moved(p) <= reach {
            best = (p, res);
        }
        let s0 = self.residual(c0)[1];
        let s1 = self.residual(c1)[1];
        if s0.signum() != s1.signum() {
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..100 {
                let t = 0.5 * (lo + hi);
                if self.residual(at(c0, c1, t))[1].signum() == s0.signum() {
                    lo = t;
                } else {
                    hi = t;
                }
            }
            let (q, rq) = self.newton(at(c0, c1, 0.5 * (lo + hi)), tol);
            if rq < best.1 && moved(q) <= reach {
                best = (q, rq);
            }
        }
        IntersectionPoint {
            x: best.0[0],
            y: best.0[1],
            residual: best.1,
            refined: best.1 < tol,
        }
    }
}

fn dedupe(mut points: Vec<IntersectionPoint>, radius: f64) -> Vec<IntersectionPoint> {
    points.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    let mut out: Vec<IntersectionPoint> = Vec::new();
    for p in points {
        match out
            .iter_mut()
            .find(|q| (q.x - p.x).hypot(q.y - p.y) < radius)
        {
            Some(q) => {
                if p.residual < q.residual {
                    *q = p;
                }
            }
            None => out.push(p),
        }
    }
    out
}

fn crossings<F1: ScalarField, F2: ScalarField>(
    f1: &F1,
    c1: &LevelCurve,
    f2: &F2,
    c2: &LevelCurve,
    params: &IntersectParams,
) -> Vec<IntersectionPoint> {
    if c1.is_empty() || c2.is_empty() {
        return Vec::new();
    }
    let pair = Pair {
        f1,
        l1: c1.level,
        f2,
        l2: c2.level,
        rect: c1.rect,
    };
    let res = c1.res.max(c2.res) as f64;
    let reach = 2.0 * (c1.rect.x1 - c1.rect.x0).hypot(c1.rect.y1 - c1.rect.y0) / res;

    let mut raw = Vec::new();
    if c1.rect == c2.rect && c1.res == c2.res {
        let mut buckets: HashMap<u32, Vec<Chord>> = HashMap::new();
        for poly in &c2.polylines {
            for (a, b, cell) in poly.segments() {
                buckets.entry(cell).or_default().push((a, b));
            }
        }
        for poly in &c1.polylines {
            for (a, b, cell) in poly.segments() {
                if let Some(list) = buckets.get(&cell) {
                    for &(c, d) in list {
                        if let Some(x) = segment_intersection(a, b, c, d) {
                            raw.push((x, a, b));
                        }
                    }
                }
            }
        }
    } else {
        let segs2: Vec<_> = c2.polylines.iter().flat_map(|p| p.segments()).collect();
        for poly in &c1.polylines {
            for (a, b, _) in poly.segments() {
                for &(c, d, _) in &segs2 {
                    if let Some(x) = segment_intersection(a, b, c, d) {
                        raw.push((x, a, b));
                    }
                }
            }
        }
    }
    let refined = raw
        .into_iter()
        .map(|(x, a, b)| pair.refine(x, a, b, params.refine_tol, reach))
        .collect();
    dedupe(refined, params.dedupe_radius)
}

/// Crossing points of two level curves over the same rectangle. When more
/// than [`BEZOUT_BOUND`] points survive deduplication both curves are traced
/// again at twice the resolution and intersected once more.
pub fn intersect_curves<F1: ScalarField, F2: ScalarField>(
    f1: &F1,
    c1: &LevelCurve,
    f2: &F2,
    c2: &LevelCurve,
    params: &IntersectParams,
) -> Result<IntersectionSet> {
    let points = crossings(f1, c1, f2, c2, params);
    if points.len() <= BEZOUT_BOUND {
        return Ok(IntersectionSet {
            points,
            retraced: false,
            bound_exceeded: false,
        });
    }
    let res = 2 * c1.res.max(c2.res);
    let r1 = trace_level_curve(f1, c1.level, c1.rect, res, params.trace_tol)?;
    let r2 = trace_level_curve(f2, c2.level, c2.rect, res, params.trace_tol)?;
    let points = crossings(f1, &r1, f2, &r2, params);
    Ok(IntersectionSet {
        bound_exceeded: points.len() > BEZOUT_BOUND,
        points,
        retraced: true,
    })
}

// ---------------------------------------------------------------------------
// Export

pub const CURVE_CSV_HEADER: &str = "pair_i,pair_j,orientation,branch,polyline_id,vertex_index,x,y";

/// Appends CSV rows (no header) describing one curve.
pub fn write_curve_rows(
    out: &mut String,
    pair: (usize, usize),
    orientation: Orientation,
    branch: BranchTag,
    curve: &LevelCurve,
) {
    for (pid, poly) in curve.polylines.iter().enumerate() {
        for (vid, v) in poly.vertices.iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                pair.0,
                pair.1,
                orientation.label(),
                branch.label(),
                pid,
                vid,
                v[0],
                v[1]
            )
            .expect("writing to a String cannot fail");
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Disk {
        cx: f64,
        cy: f64,
    }

    impl ScalarField for Disk {
        fn value(&self, x: f64, y: f64) -> f64 {
            (x - self.cx).hypot(y - self.cy)
        }
        fn gradient(&self, x: f64, y: f64) -> [f64; 2] {
            let r = self.value(x, y);
            if r > 0.0 {
                [(x - self.cx) / r, (y - self.cy) / r]
            } else {
                [0.0, 0.0]
            }
        }
        fn lipschitz(&self) -> [f64; 2] {
            [1.0, 1.0]
        }
    }

    const SUM: AffineField = AffineField {
        c0: 0.0,
        cx: 1.0,
        cy: 1.0,
    };

    #[test]
    fn affine_line() {
        let c = trace_level_curve(&SUM, 5.0, Rect::new(5.0, 5.0), 64, DEFAULT_TRACE_TOL).unwrap();
        assert_eq!(c.polylines.len(), 1);
        for v in c.vertices() {
            assert!((v[0] + v[1] - 5.0).abs() < 1e-9);
        }
        let mut ends = rectangle_boundary_points(&c);
        ends.sort_by(|a, b| a[0].total_cmp(&b[0]));
        assert_eq!(ends.len(), 2);
        assert!((ends[0][0]).abs() < 1e-9 && (ends[0][1] - 5.0).abs() < 1e-9);
        assert!((ends[1][0] - 5.0).abs() < 1e-9 && ends[1][1].abs() < 1e-9);
    }

    #[test]
    fn level_below_minimum_is_empty() {
        let c = trace_level_curve(&SUM, 0.0, Rect::new(5.0, 5.0), 64, DEFAULT_TRACE_TOL).unwrap();
        assert!(c.is_empty());
        let d = Disk { cx: 2.0, cy: 2.0 };
        assert!(
            trace_level_curve(&d, 100.0, Rect::new(5.0, 5.0), 32, DEFAULT_TRACE_TOL)
                .unwrap()
                .is_empty()
        );
    }

    #[test]
    fn rejects_small_resolution_and_negative_level() {
        assert!(trace_level_curve(&SUM, 1.0, Rect::new(1.0, 1.0), 8, 1e-10).is_err());
        assert!(trace_level_curve(&SUM, -1.0, Rect::new(1.0, 1.0), 16, 1e-10).is_err());
    }

    #[test]
    fn non_finite_field_is_an_error() {
        let bad = AffineField {
            c0: f64::NAN,
            cx: 0.0,
            cy: 0.0,
        };
        assert!(matches!(
            trace_level_curve(&bad, 1.0, Rect::new(1.0, 1.0), 16, 1e-10),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn interior_circle_is_closed() {
        let d = Disk { cx: 2.5, cy: 2.5 };
        let c = trace_level_curve(&d, 1.0, Rect::new(5.0, 5.0), 64, DEFAULT_TRACE_TOL).unwrap();
        assert_eq!(c.polylines.len(), 1);
        assert!(c.polylines[0].closed);
        assert!(rectangle_boundary_points(&c).is_empty());
        for v in c.vertices() {
            assert!((d.value(v[0], v[1]) - 1.0).abs() < DEFAULT_TRACE_TOL);
        }
    }

    #[test]
    fn tiny_circle_inside_one_cell_is_found() {
        let d = Disk { cx: 1.23, cy: 3.71 };
        let c = trace_level_curve(&d, 0.01, Rect::new(5.0, 5.0), 16, DEFAULT_TRACE_TOL).unwrap();
        assert_eq!(c.polylines.len(), 1);
        assert!(c.polylines[0].closed);
        for v in c.vertices() {
            assert!((d.value(v[0], v[1]) - 0.01).abs() < DEFAULT_TRACE_TOL);
        }
    }

    #[test]
    fn circle_dipping_across_one_edge_is_found() {
        // Grid lines at multiples of 5/16 = 0.3125; the disk crosses the
        // line y = 0.3125 between two samples without containing either.
        let d = Disk { cx: 1.1, cy: 0.2 };
        let c = trace_level_curve(&d, 0.15, Rect::new(5.0, 5.0), 16, DEFAULT_TRACE_TOL).unwrap();
        assert!(!c.is_empty());
        assert!(c.vertices().any(|v| v[1] > 0.3));
    }

    #[test]
    fn affine_lines_cross_once() {
        let diff = AffineField {
            c0: 0.0,
            cx: 1.0,
            cy: -1.0,
        };
        let rect = Rect::new(5.0, 5.0);
        let c1 = trace_level_curve(&SUM, 5.0, rect, 32, DEFAULT_TRACE_TOL).unwrap();
        let c2 = trace_level_curve(&diff, 0.0, rect, 32, DEFAULT_TRACE_TOL);
        // level 0 is allowed; x - y = 0 passes through grid vertices.
        let c2 = c2.unwrap();
        let set = intersect_curves(&SUM, &c1, &diff, &c2, &IntersectParams::default()).unwrap();
        assert_eq!(set.points.len(), 1);
        assert!((set.points[0].x - 2.5).abs() < 1e-9);
        assert!((set.points[0].y - 2.5).abs() < 1e-9);
        let back = intersect_curves(&diff, &c2, &SUM, &c1, &IntersectParams::default()).unwrap();
        assert_eq!(back.points.len(), 1);
    }

    #[test]
    fn two_circles_cross_twice() {
        let rect = Rect::new(5.0, 5.0);
        let a = Disk { cx: 2.0, cy: 2.5 };
        let b = Disk { cx: 3.0, cy: 2.5 };
        let ca = trace_level_curve(&a, 1.0, rect, 64, DEFAULT_TRACE_TOL).unwrap();
        let cb = trace_level_curve(&b, 1.0, rect, 64, DEFAULT_TRACE_TOL).unwrap();
        let set = intersect_curves(&a, &ca, &b, &cb, &IntersectParams::default()).unwrap();
        assert_eq!(set.points.len(), 2);
        let h = (1.0f64 - 0.25).sqrt();
        for p in &set.points {
            assert!(p.refined);
            assert!((p.x - 2.5).abs() < 1e-8);
            assert!(((p.y - 2.5).abs() - h).abs() < 1e-8);
        }
    }

    #[test]
    fn csv_rows() {
        let c = trace_level_curve(&SUM, 5.0, Rect::new(5.0, 5.0), 16, DEFAULT_TRACE_TOL).unwrap();
        let mut s = String::new();
        write_curve_rows(&mut s, (0, 1), Orientation::Forward, BranchTag::A, &c);
        assert_eq!(s.lines().count(), c.vertex_count());
        assert!(s.starts_with("0,1,12,a,0,0,"));
    }
}
