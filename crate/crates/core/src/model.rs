//! Instances, network points and solutions.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanarPoint {
    pub x: f64,
    pub y: f64,
}

impl PlanarPoint {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(&self, other: &PlanarPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// `(1 - t) a + t b`; reproduces `a` and `b` exactly at `t = 0` and `t = 1`.
    pub fn lerp(a: &PlanarPoint, b: &PlanarPoint, t: f64) -> PlanarPoint {
        PlanarPoint::new((1.0 - t) * a.x + t * b.x, (1.0 - t) * a.y + t * b.y)
    }

    fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Facility {
    pub id: usize,
    pub position: PlanarPoint,
}

/// An ordered origin/destination pair with trip weight and acceptance level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdPair {
    pub origin: usize,
    pub dest: usize,
    pub weight: f64,
    pub acceptance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vertex {
    pub id: usize,
    pub position: PlanarPoint,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub w: usize,
    pub length: f64,
}

/// Undirected network embedded with straight-line edges. Vertex ids equal
/// their index once validated.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub vertices: Vec<Vertex>,
    pub edges: Vec<Edge>,
}

impl Network {
    pub fn position(&self, v: usize) -> PlanarPoint {
        self.vertices[v].position
    }

    /// Planar point at arc length `arc` from the edge's first vertex.
    pub fn point_on_edge(&self, edge: usize, arc: f64) -> PlanarPoint {
        let e = &self.edges[edge];
        PlanarPoint::lerp(&self.position(e.u), &self.position(e.w), arc / e.length)
    }

    pub fn is_connected(&self) -> bool {
        first_unreachable(self).is_none()
    }
}

/// Returns a vertex unreachable from vertex 0, if any.
pub(crate) fn first_unreachable(net: &Network) -> Option<usize> {
    let n = net.vertices.len();
    if n == 0 {
        return None;
    }
    let mut adj = vec![Vec::new(); n];
    for e in &net.edges {
        if e.u < n && e.w < n {
            adj[e.u].push(e.w);
            adj[e.w].push(e.u);
        }
    }
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    while let Some(v) = queue.pop_front() {
        for &nb in &adj[v] {
            if !seen[nb] {
                seen[nb] = true;
                queue.push_back(nb);
            }
        }
    }
    seen.iter().position(|s| !s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub facilities: Vec<Facility>,
    pub pairs: Vec<OdPair>,
    pub network: Network,
    pub alpha: f64,
}

impl ProblemInstance {
    pub fn facility(&self, id: usize) -> PlanarPoint {
        self.facilities[id].position
    }
}

/// A point of the network given by its edge and arc length from the edge's
/// first vertex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkPoint {
    pub edge: usize,
    pub arc: f64,
    pub point: PlanarPoint,
}

impl NetworkPoint {
    pub fn on_edge(net: &Network, edge: usize, arc: f64) -> Result<Self> {
        let e = net
            .edges
            .get(edge)
            .ok_or_else(|| Error::Parameter(format!("edge {edge} does not exist")))?;
        if !(0.0..=e.length).contains(&arc) {
            return Err(Error::Parameter(format!(
                "arc length {arc} outside edge {edge} of length {}",
                e.length
            )));
        }
        Ok(Self {
            edge,
            arc,
            point: net.point_on_edge(edge, arc),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub x1: NetworkPoint,
    pub x2: NetworkPoint,
    pub objective: f64,
    /// Covered pairs as (origin, dest) facility ids, in instance order.
    pub covered: Vec<(usize, usize)>,
}

// ---------------------------------------------------------------------------
// Instance document

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointDoc {
    pub id: usize,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeDoc {
    pub u: usize,
    pub w: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairDoc {
    pub i: usize,
    pub j: usize,
    pub t: f64,
    pub d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDoc {
    pub alpha: f64,
    pub vertices: Vec<PointDoc>,
    pub edges: Vec<EdgeDoc>,
    pub facilities: Vec<PointDoc>,
    pub pairs: Vec<PairDoc>,
}

impl From<&InstanceDoc> for ProblemInstance {
    /// Missing edge lengths default to the Euclidean length of the edge; an
    /// edge naming an unknown vertex gets a NaN length and fails validation.
    fn from(doc: &InstanceDoc) -> Self {
        let pos: HashMap<usize, PlanarPoint> = doc
            .vertices
            .iter()
            .map(|v| (v.id, PlanarPoint::new(v.x, v.y)))
            .collect();
        let edges = doc
            .edges
            .iter()
            .map(|e| {
                let length = e
                    .length
                    .unwrap_or_else(|| match (pos.get(&e.u), pos.get(&e.w)) {
                        (Some(a), Some(b)) => a.dist(b),
                        _ => f64::NAN,
                    });
                Edge {
                    u: e.u,
                    w: e.w,
                    length,
                }
            })
            .collect();
        ProblemInstance {
            alpha: doc.alpha,
            network: Network {
                vertices: doc
                    .vertices
                    .iter()
                    .map(|v| Vertex {
                        id: v.id,
                        position: PlanarPoint::new(v.x, v.y),
                    })
                    .collect(),
                edges,
            },
            facilities: doc
                .facilities
                .iter()
                .map(|f| Facility {
                    id: f.id,
                    position: PlanarPoint::new(f.x, f.y),
                })
                .collect(),
            pairs: doc
                .pairs
                .iter()
                .map(|p| OdPair {
                    origin: p.i,
                    dest: p.j,
                    weight: p.t,
                    acceptance: p.d,
                })
                .collect(),
        }
    }
}

impl From<&ProblemInstance> for InstanceDoc {
    fn from(inst: &ProblemInstance) -> Self {
        InstanceDoc {
            alpha: inst.alpha,
            vertices: inst
                .network
                .vertices
                .iter()
                .map(|v| PointDoc {
                    id: v.id,
                    x: v.position.x,
                    y: v.position.y,
                })
                .collect(),
            edges: inst
                .network
                .edges
                .iter()
                .map(|e| EdgeDoc {
                    u: e.u,
                    w: e.w,
                    length: Some(e.length),
                })
                .collect(),
            facilities: inst
                .facilities
                .iter()
                .map(|f| PointDoc {
                    id: f.id,
                    x: f.position.x,
                    y: f.position.y,
                })
                .collect(),
            pairs: inst
                .pairs
                .iter()
                .map(|p| PairDoc {
                    i: p.origin,
                    j: p.dest,
                    t: p.weight,
                    d: p.acceptance,
                })
                .collect(),
        }
    }
}

pub fn parse_instance(text: &str) -> Result<ProblemInstance> {
    let doc: InstanceDoc = serde_json::from_str(text)?;
    Ok(ProblemInstance::from(&doc))
}

pub fn instance_to_json(inst: &ProblemInstance) -> String {
    serde_json::to_string_pretty(&InstanceDoc::from(inst)).expect("instance document serializes")
}

// ---------------------------------------------------------------------------
// Validation

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub warnings: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn fail(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation {
            path: path.into(),
            message: message.into(),
        });
    }

    fn warn(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.warnings.push(Violation {
            path: path.into(),
            message: message.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "error: {}: {}", v.path, v.message)?;
        }
        for v in &self.warnings {
            writeln!(f, "warning: {}: {}", v.path, v.message)?;
        }
        Ok(())
    }
}

pub fn validate_instance(inst: &ProblemInstance) -> ValidationReport {
    let mut report = ValidationReport::default();

    if !(inst.alpha.is_finite() && inst.alpha > 0.0 && inst.alpha < 1.0) {
        report.fail("alpha", format!("alpha not in (0,1): {}", inst.alpha));
    }

    let net = &inst.network;
    let nv = net.vertices.len();
    if nv == 0 {
        report.fail("vertices", "network has no vertices");
    }
    for (k, v) in net.vertices.iter().enumerate() {
        if v.id != k {
            report.fail(
                format!("vertices[{k}].id"),
                format!(
                    "vertex ids must be contiguous from 0; expected {k}, found {}",
                    v.id
                ),
            );
        }
        if !v.position.is_finite() {
            report.fail(format!("vertices[{k}]"), "coordinates not finite");
        }
    }

    if net.edges.is_empty() {
        report.fail("edges", "network has no edges");
    }
    let mut seen_edges = HashSet::new();
    let mut endpoints_ok = true;
    for (k, e) in net.edges.iter().enumerate() {
        if e.u >= nv || e.w >= nv {
            report.fail(format!("edges[{k}]"), "edge references an unknown vertex");
            endpoints_ok = false;
            continue;
        }
        if e.u == e.w {
            report.fail(format!("edges[{k}]"), "self-loop");
        }
        if !(e.length.is_finite() && e.length > 0.0) {
            report.fail(
                format!("edges[{k}].length"),
                format!("edge length must be positive and finite: {}", e.length),
            );
        }
        if !seen_edges.insert((e.u.min(e.w), e.u.max(e.w))) {
            report.fail(
                format!("edges[{k}]"),
                "duplicate edge between the same vertices",
            );
        }
    }
    if endpoints_ok && nv > 0 {
        if let Some(v) = first_unreachable(net) {
            report.fail(
                "edges",
                format!("network not connected: vertex {v} unreachable from vertex 0"),
            );
        }
    }

    let nf = inst.facilities.len();
    for (k, f) in inst.facilities.iter().enumerate() {
        if f.id != k {
            report.fail(
                format!("facilities[{k}].id"),
                format!(
                    "facility ids must be contiguous from 0; expected {k}, found {}",
                    f.id
                ),
            );
        }
        if !f.position.is_finite() {
            report.fail(format!("facilities[{k}]"), "coordinates not finite");
        }
    }

    let mut seen_pairs: HashMap<(usize, usize), usize> = HashMap::new();
    for (k, p) in inst.pairs.iter().enumerate() {
        let path = format!("pairs[{k}]");
        if p.origin >= nf || p.dest >= nf {
            report.fail(&path, "pair references an unknown facility");
            continue;
        }
        if p.origin == p.dest {
            report.fail(&path, "origin equals destination");
        }
        if !(p.weight.is_finite() && p.weight >= 0.0) {
            report.fail(
                format!("{path}.t"),
                format!("weight must be nonnegative: {}", p.weight),
            );
        }
        let euclid = inst.facility(p.origin).dist(&inst.facility(p.dest));
        if !(p.acceptance.is_finite() && p.acceptance >= 0.0) {
            report.fail(
                format!("{path}.d"),
                format!("acceptance must be nonnegative: {}", p.acceptance),
            );
        } else if p.acceptance >= euclid {
            report.fail(
                format!("{path}.d"),
                format!(
                    "acceptance not strictly below Euclidean distance: {} >= {euclid}",
                    p.acceptance
                ),
            );
        }
        if let Some(first) = seen_pairs.insert((p.origin, p.dest), k) {
            report.fail(
                &path,
                format!(
                    "duplicate pair ({}, {}), first at pairs[{first}]",
                    p.origin, p.dest
                ),
            );
        }
    }
    for (k, p) in inst.pairs.iter().enumerate() {
        if p.origin < p.dest {
            if let Some(&r) = seen_pairs.get(&(p.dest, p.origin)) {
                if inst.pairs[r].acceptance != p.acceptance {
                    report.warn(
                        format!("pairs[{k}].d"),
                        format!("acceptance matrix asymmetric: pairs[{r}] has a different level"),
                    );
                }
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn figure2_doc() -> String {
        let h = 2.0 * 6f64.sqrt();
        format!(
            r#"{{
  "alpha": 0.3,
  "vertices": [{{"id":0,"x":0,"y":{h}}},{{"id":1,"x":5,"y":{h}}},{{"id":2,"x":-1,"y":0}},{{"id":3,"x":6,"y":0}}],
  "edges": [{{"u":0,"w":1}},{{"u":2,"w":3}},{{"u":2,"w":0}},{{"u":3,"w":1}}],
  "facilities": [{{"id":0,"x":2.5,"y":6}},{{"id":1,"x":1,"y":-4}}],
  "pairs": [{{"i":0,"j":1,"t":1,"d":10}}]
}}"#
        )
    }

    #[test]
    fn figure2_is_valid() {
        let inst = parse_instance(&figure2_doc()).unwrap();
        let report = validate_instance(&inst);
        assert!(report.violations.is_empty(), "{report}");
        assert!((inst.network.edges[2].length - 5.0).abs() < 1e-12);
        assert!((inst.network.edges[1].length - 7.0).abs() < 1e-12);
    }

    #[test]
    fn alpha_out_of_range() {
        let mut inst = parse_instance(&figure2_doc()).unwrap();
        inst.alpha = 1.2;
        let report = validate_instance(&inst);
        assert!(report
            .violations
            .iter()
            .any(|v| v.message.contains("alpha not in (0,1)")));
    }

    #[test]
    fn acceptance_equal_to_euclidean_rejected() {
        let mut inst = parse_instance(&figure2_doc()).unwrap();
        inst.pairs[0].acceptance = inst.facility(0).dist(&inst.facility(1));
        let report = validate_instance(&inst);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].path, "pairs[0].d");
        assert!(report.violations[0]
            .message
            .contains("acceptance not strictly below Euclidean distance"));
    }

    #[test]
    fn duplicate_pairs_and_disconnected() {
        let mut inst = parse_instance(&figure2_doc()).unwrap();
        inst.pairs.push(inst.pairs[0]);
        inst.network.edges.truncate(1);
        let report = validate_instance(&inst);
        assert!(report
            .violations
            .iter()
            .any(|v| v.message.contains("duplicate pair")));
        assert!(report
            .violations
            .iter()
            .any(|v| v.message.contains("not connected")));
    }

    #[test]
    fn asymmetric_acceptance_only_warns() {
        let mut inst = parse_instance(&figure2_doc()).unwrap();
        inst.pairs.push(OdPair {
            origin: 1,
            dest: 0,
            weight: 1.0,
            acceptance: 9.0,
        });
        let report = validate_instance(&inst);
        assert!(report.is_valid());
        assert_eq!(report.warnings.len(), 1);
    }

    #[test]
    fn edge_endpoints_reproduced_exactly() {
        let inst = parse_instance(&figure2_doc()).unwrap();
        let net = &inst.network;
        for (k, e) in net.edges.iter().enumerate() {
            assert_eq!(net.point_on_edge(k, 0.0), net.position(e.u));
            assert_eq!(net.point_on_edge(k, e.length), net.position(e.w));
        }
        assert!(NetworkPoint::on_edge(net, 0, 5.5).is_err());
    }

    #[test]
    fn unknown_field_rejected() {
        let text = figure2_doc().replace("\"alpha\"", "\"speed\": 1, \"alpha\"");
        assert!(parse_instance(&text).is_err());
    }
}
