//! Shortest distances, arc bottleneck points, linear arc segments and the
//! classification of segment pairs by the shape of the network distance.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::Network;

const EPS: f64 = 1e-9;

/// Square matrix of shortest network distances between vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data
            .chunks(self.n.max(1))
            .map(|r| r.to_vec())
            .collect()
    }
}

#[derive(Clone, Copy, PartialEq)]
struct HeapEntry {
    dist: f64,
    vertex: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn dijkstra(adj: &[Vec<(usize, f64)>], source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; adj.len()];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(HeapEntry {
        dist: 0.0,
        vertex: source,
    });
    while let Some(HeapEntry { dist: d, vertex }) = heap.pop() {
        if d > dist[vertex] {
            continue;
        }
        for &(nb, len) in &adj[vertex] {
            let nd = d + len;
            if nd < dist[nb] {
                dist[nb] = nd;
                heap.push(HeapEntry {
                    dist: nd,
                    vertex: nb,
                });
            }
        }
    }
    dist
}

/// One Dijkstra run per vertex; the result is symmetrized so that
/// `get(i, j) == get(j, i)` holds exactly.
pub fn all_pairs_shortest_paths(net: &Network) -> Result<DistanceMatrix> {
    let n = net.vertices.len();
    let mut adj = vec![Vec::new(); n];
    for e in &net.edges {
        adj[e.u].push((e.w, e.length));
        adj[e.w].push((e.u, e.length));
    }
    let mut data = Vec::with_capacity(n * n);
    for s in 0..n {
        let row = dijkstra(&adj, s);
        if let Some(t) = row.iter().position(|d| !d.is_finite()) {
            return Err(Error::Disconnected(s, t));
        }
        data.extend(row);
    }
    for i in 0..n {
        data[i * n + i] = 0.0;
        for j in (i + 1)..n {
            let m = data[i * n + j].min(data[j * n + i]);
            data[i * n + j] = m;
            data[j * n + i] = m;
        }
    }
    Ok(DistanceMatrix { n, data })
}

/// Arc length on `edge` of the point farthest (in network distance) from
/// vertex `v`.
pub fn antipode(net: &Network, dist: &DistanceMatrix, edge: usize, v: usize) -> f64 {
    let e = &net.edges[edge];
    ((dist.get(v, e.w) - dist.get(v, e.u) + e.length) / 2.0).clamp(0.0, e.length)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BottleneckPoint {
    pub edge: usize,
    /// Every vertex whose antipode on the edge is this point.
    pub vertices: Vec<usize>,
    pub arc: f64,
}

/// Interior antipodes of all vertices on `edge`, sorted, with coincident
/// points merged.
pub fn arc_bottleneck_points(
    net: &Network,
    edge: usize,
    dist: &DistanceMatrix,
) -> Vec<BottleneckPoint> {
    let len = net.edges[edge].length;
    let mut cands: Vec<(f64, usize)> = (0..net.vertices.len())
        .map(|v| (antipode(net, dist, edge, v), v))
        .filter(|&(x, _)| x > EPS && x < len - EPS)
        .collect();
    cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut out: Vec<BottleneckPoint> = Vec::new();
    for (x, v) in cands {
        match out.last_mut() {
            Some(last) if x - last.arc <= EPS => last.vertices.push(v),
            _ => out.push(BottleneckPoint {
                edge,
                vertices: vec![v],
                arc: x,
            }),
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearArcSegment {
    pub edge: usize,
    pub start: f64,
    pub end: f64,
    /// Position within the edge's ordered sequence of segments.
    pub index: usize,
}

impl LinearArcSegment {
    pub fn len(&self) -> f64 {
        self.end - self.start
    }

    fn within(&self, lo: f64, hi: f64) -> bool {
        self.start >= lo - EPS && self.end <= hi + EPS
    }
}

pub fn linear_arc_segments(
    net: &Network,
    edge: usize,
    bottlenecks: &[BottleneckPoint],
) -> Vec<LinearArcSegment> {
    let cuts: Vec<f64> = std::iter::once(0.0)
        .chain(bottlenecks.iter().map(|b| b.arc))
        .chain(std::iter::once(net.edges[edge].length))
        .collect();
    cuts.windows(2)
        .enumerate()
        .map(|(index, w)| LinearArcSegment {
            edge,
            start: w[0],
            end: w[1],
            index,
        })
        .collect()
}

/// `c0 + cx * x + cy * y` in segment-local coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AffineForm {
    pub c0: f64,
    pub cx: i8,
    pub cy: i8,
}

impl AffineForm {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.c0 + f64::from(self.cx) * x + f64::from(self.cy) * y
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistanceForm {
    Affine(AffineForm),
    /// `|x - y|` for two points of one segment.
    SameSegment,
}

impl DistanceForm {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            DistanceForm::Affine(f) => f.eval(x, y),
            DistanceForm::SameSegment => (x - y).abs(),
        }
    }

    /// A subgradient of the form.
    pub fn gradient(&self, x: f64, y: f64) -> [f64; 2] {
        match self {
            DistanceForm::Affine(f) => [f64::from(f.cx), f64::from(f.cy)],
            DistanceForm::SameSegment => {
                let s = if x > y {
                    1.0
                } else if x < y {
                    -1.0
                } else {
                    0.0
                };
                [s, -s]
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PairType {
    Type1,
    Type2,
}

/// Network distance between `x` on one segment and `y` on another, both
/// measured from the segment start.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "type")]
pub enum PairClass {
    /// Concave: `min(a, b)` with opposite slopes.
    Type1 { a: AffineForm, b: AffineForm },
    /// Affine or convex.
    Type2 { form: DistanceForm },
}

impl PairClass {
    pub fn pair_type(&self) -> PairType {
        match self {
            PairClass::Type1 { .. } => PairType::Type1,
            PairClass::Type2 { .. } => PairType::Type2,
        }
    }

    pub fn distance(&self, x: f64, y: f64) -> f64 {
        match self {
            PairClass::Type1 { a, b } => a.eval(x, y).min(b.eval(x, y)),
            PairClass::Type2 { form } => form.eval(x, y),
        }
    }

    /// The branch forms: two for type 1, one for type 2.
    pub fn branches(&self) -> Vec<DistanceForm> {
        match *self {
            PairClass::Type1 { a, b } => vec![DistanceForm::Affine(a), DistanceForm::Affine(b)],
            PairClass::Type2 { form } => vec![form],
        }
    }
}

/// Classifies the segment pair and returns the distance forms in local
/// coordinates (`x` from `lp.start`, `y` from `lq.start`).
pub fn classify_segment_pair(
    lp: &LinearArcSegment,
    lq: &LinearArcSegment,
    dist: &DistanceMatrix,
    net: &Network,
) -> PairClass {
    if lp.edge == lq.edge {
        classify_same_edge(lp, lq, dist, net)
    } else {
        classify_different_edges(lp, lq, dist, net)
    }
}

/// Form `c0 + sx * x_edge + sy * y_edge` shifted to local coordinates.
fn local(c0: f64, sx: i8, sy: i8, lp: &LinearArcSegment, lq: &LinearArcSegment) -> AffineForm {
    AffineForm {
        c0: c0 + f64::from(sx) * lp.start + f64::from(sy) * lq.start,
        cx: sx,
        cy: sy,
    }
}

/// The candidate form that is smallest at the rectangle centre. Used only when
/// the distance is affine on the rectangle, where that form is exact.
fn affine_at_centre(
    forms: &[AffineForm],
    lp: &LinearArcSegment,
    lq: &LinearArcSegment,
) -> AffineForm {
    let (cx, cy) = (lp.len() / 2.0, lq.len() / 2.0);
    *forms
        .iter()
        .min_by(|a, b| a.eval(cx, cy).total_cmp(&b.eval(cx, cy)))
        .expect("at least one candidate form")
}

fn classify_different_edges(
    lp: &LinearArcSegment,
    lq: &LinearArcSegment,
    dist: &DistanceMatrix,
    net: &Network,
) -> PairClass {
    let ep = net.edges[lp.edge];
    let eq = net.edges[lq.edge];
    let (lenp, lenq) = (ep.length, eq.length);

    let f_uu = local(dist.get(ep.u, eq.u), 1, 1, lp, lq);
    let f_uw = local(dist.get(ep.u, eq.w) + lenq, 1, -1, lp, lq);
    let f_wu = local(lenp + dist.get(ep.w, eq.u), -1, 1, lp, lq);
    let f_ww = local(lenp + dist.get(ep.w, eq.w) + lenq, -1, -1, lp, lq);

    // Antipodes of q's endpoints on edge p and of p's endpoints on edge q.
    let anti_uq = antipode(net, dist, lp.edge, eq.u);
    let anti_wq = antipode(net, dist, lp.edge, eq.w);
    let anti_up = antipode(net, dist, lq.edge, ep.u);
    let anti_wp = antipode(net, dist, lq.edge, ep.w);

    let p_inside = lp.within(anti_uq.min(anti_wq), anti_uq.max(anti_wq));
    let q_inside = lq.within(anti_up.min(anti_wp), anti_up.max(anti_wp));

    if p_inside && q_inside {
        // With the antipode of w_q before that of u_q, points of L_p reach u_q
        // through u_p and w_q through w_p; otherwise the roles cross.
        if anti_wq <= anti_uq {
            PairClass::Type1 { a: f_uu, b: f_ww }
        } else {
            PairClass::Type1 { a: f_uw, b: f_wu }
        }
    } else {
        PairClass::Type2 {
            form: DistanceForm::Affine(affine_at_centre(&[f_uu, f_uw, f_wu, f_ww], lp, lq)),
        }
    }
}

fn classify_same_edge(
    lp: &LinearArcSegment,
    lq: &LinearArcSegment,
    dist: &DistanceMatrix,
    net: &Network,
) -> PairClass {
    if lp.index == lq.index {
        return PairClass::Type2 {
            form: DistanceForm::SameSegment,
        };
    }
    let e = net.edges[lp.edge];
    let (len, duw) = (e.length, dist.get(e.u, e.w));
    // Antipodes of w and u on their own edge.
    let anti_w = (len - duw) / 2.0;
    let anti_u = (len + duw) / 2.0;
    let p_left = lp.index < lq.index;

    let (direct, around) = if p_left {
        (local(0.0, -1, 1, lp, lq), local(duw + len, 1, -1, lp, lq))
    } else {
        (local(0.0, 1, -1, lp, lq), local(duw + len, -1, 1, lp, lq))
    };

    let (left, right) = if p_left { (lp, lq) } else { (lq, lp) };
    let concave = duw < len - EPS && left.within(0.0, anti_w) && right.within(anti_u, len);
    if concave {
        PairClass::Type1 {
            a: direct,
            b: around,
        }
    } else {
        PairClass::Type2 {
            form: DistanceForm::Affine(affine_at_centre(&[direct, around], lp, lq)),
        }
    }
}

/// Output of the preprocessing phase for a whole network.
#[derive(Debug, Clone)]
pub struct Preprocessed {
    pub distances: DistanceMatrix,
    pub bottlenecks: Vec<Vec<BottleneckPoint>>,
    /// All linear arc segments, edge by edge in edge order.
    pub segments: Vec<LinearArcSegment>,
}

impl Preprocessed {
    /// Unordered segment pairs `(p, q)` with `p <= q`, in lexicographic order.
    pub fn segment_pairs(&self) -> Vec<(usize, usize)> {
        let n = self.segments.len();
        (0..n).flat_map(|p| (p..n).map(move |q| (p, q))).collect()
    }

    pub fn classify(&self, net: &Network, p: usize, q: usize) -> PairClass {
        classify_segment_pair(&self.segments[p], &self.segments[q], &self.distances, net)
    }

    /// Global index of the first segment of `edge` containing `arc`.
    pub fn segment_at(&self, edge: usize, arc: f64) -> Option<usize> {
        self.segments
            .iter()
            .position(|s| s.edge == edge && arc >= s.start - EPS && arc <= s.end + EPS)
    }
}

pub fn preprocess(net: &Network) -> Result<Preprocessed> {
    let distances = all_pairs_shortest_paths(net)?;
    let bottlenecks: Vec<Vec<BottleneckPoint>> = (0..net.edges.len())
        .map(|e| arc_bottleneck_points(net, e, &distances))
        .collect();
    let segments = bottlenecks
        .iter()
        .enumerate()
        .flat_map(|(e, b)| linear_arc_segments(net, e, b))
        .collect();
    Ok(Preprocessed {
        distances,
        bottlenecks,
        segments,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Edge, PlanarPoint, Vertex};

    fn figure2() -> Network {
        let h = 2.0 * 6f64.sqrt();
        let pts = [(0.0, h), (5.0, h), (-1.0, 0.0), (6.0, 0.0)];
        let vertices = pts
            .iter()
            .enumerate()
            .map(|(id, &(x, y))| Vertex {
                id,
                position: PlanarPoint::new(x, y),
            })
            .collect();
        let edges = [(0, 1, 5.0), (2, 3, 7.0), (2, 0, 5.0), (3, 1, 5.0)]
            .iter()
            .map(|&(u, w, length)| Edge { u, w, length })
            .collect();
        Network { vertices, edges }
    }

    #[test]
    fn figure2_distances() {
        let d = all_pairs_shortest_paths(&figure2()).unwrap();
        assert_eq!(d.get(0, 2), 5.0);
        // w_p -> u_p -> u_q
        assert_eq!(d.get(1, 2), 10.0);
        assert_eq!(d.get(2, 3), 7.0);
    }

    #[test]
    fn single_edge() {
        let net = Network {
            vertices: vec![
                Vertex {
                    id: 0,
                    position: PlanarPoint::new(0.0, 0.0),
                },
                Vertex {
                    id: 1,
                    position: PlanarPoint::new(3.0, 0.0),
                },
            ],
            edges: vec![Edge {
                u: 0,
                w: 1,
                length: 3.0,
            }],
        };
        let d = all_pairs_shortest_paths(&net).unwrap();
        assert_eq!(d.rows(), vec![vec![0.0, 3.0], vec![3.0, 0.0]]);
        assert!(arc_bottleneck_points(&net, 0, &d).is_empty());
        let segs = linear_arc_segments(&net, 0, &[]);
        assert_eq!(segs.len(), 1);
        assert_eq!((segs[0].start, segs[0].end), (0.0, 3.0));
    }

    #[test]
    fn disconnected_network_is_an_error() {
        let mut net = figure2();
        net.edges = vec![net.edges[0], net.edges[1]];
        assert!(matches!(
            all_pairs_shortest_paths(&net),
            Err(Error::Disconnected(_, _))
        ));
    }

    #[test]
    fn figure2_bottlenecks_and_segments() {
        let net = figure2();
        let d = all_pairs_shortest_paths(&net).unwrap();
        let bottom = arc_bottleneck_points(&net, 1, &d);
        let arcs: Vec<f64> = bottom.iter().map(|b| b.arc).collect();
        assert_eq!(arcs, vec![1.0, 6.0]);
        assert_eq!(bottom[0].vertices, vec![1]);
        assert_eq!(bottom[1].vertices, vec![0]);
        for (arc, x) in [(1.0, 0.0), (6.0, 5.0)] {
            let pt = net.point_on_edge(1, arc);
            assert!((pt.x - x).abs() < 1e-12 && pt.y.abs() < 1e-12);
        }
        assert!(arc_bottleneck_points(&net, 0, &d).is_empty());
        // Each slanted side carries the antipode of the far bottom vertex:
        // from (6, 0) the left side is reached at min(7 + x, 15 - x).
        let left = arc_bottleneck_points(&net, 2, &d);
        assert_eq!(left.len(), 1);
        assert!((left[0].arc - 4.0).abs() < 1e-12);
        assert_eq!(left[0].vertices, vec![3]);

        let segs = linear_arc_segments(&net, 1, &bottom);
        let spans: Vec<(f64, f64)> = segs.iter().map(|s| (s.start, s.end)).collect();
        assert_eq!(spans, vec![(0.0, 1.0), (1.0, 6.0), (6.0, 7.0)]);
        assert_eq!(linear_arc_segments(&net, 0, &[]).len(), 1);
    }

    #[test]
    fn midpoint_bottleneck_splits_in_two() {
        let net = figure2();
        let b = [BottleneckPoint {
            edge: 1,
            vertices: vec![0],
            arc: 3.5,
        }];
        assert_eq!(linear_arc_segments(&net, 1, &b).len(), 2);
    }

    #[test]
    fn figure2_antipodal_pair_is_type1() {
        let net = figure2();
        let pre = preprocess(&net).unwrap();
        assert_eq!(pre.segments.len(), 8);
        let top = pre.segment_at(0, 2.0).unwrap();
        let mid = pre.segment_at(1, 3.0).unwrap();
        let class = pre.classify(&net, top, mid);
        let expected = PairClass::Type1 {
            a: AffineForm {
                c0: 6.0,
                cx: 1,
                cy: 1,
            },
            b: AffineForm {
                c0: 16.0,
                cx: -1,
                cy: -1,
            },
        };
        assert_eq!(class, expected);
        assert_eq!(pre.classify(&net, mid, top).pair_type(), PairType::Type1);
    }

    #[test]
    fn same_segment_is_convex() {
        let net = figure2();
        let pre = preprocess(&net).unwrap();
        for p in 0..pre.segments.len() {
            assert_eq!(
                pre.classify(&net, p, p),
                PairClass::Type2 {
                    form: DistanceForm::SameSegment
                }
            );
        }
    }

    #[test]
    fn bottom_left_with_top_is_affine() {
        let net = figure2();
        let pre = preprocess(&net).unwrap();
        let left = pre.segment_at(1, 0.5).unwrap();
        let top = pre.segment_at(0, 2.0).unwrap();
        let class = pre.classify(&net, left, top);
        assert_eq!(class.pair_type(), PairType::Type2);
        assert!(matches!(
            class,
            PairClass::Type2 {
                form: DistanceForm::Affine(_)
            }
        ));
    }
}
