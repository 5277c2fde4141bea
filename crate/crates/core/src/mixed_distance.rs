//! Travel-path lengths, the mixed distance and pair coverage on one segment
//! pair.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Network, OdPair, PlanarPoint, ProblemInstance};
use crate::preprocess::{LinearArcSegment, PairClass, Preprocessed};

/// Coverage tolerance: pair (i, j) is covered when `f_ij <= d_ij + tol`.
pub const DEFAULT_COVERAGE_TOL: f64 = 1e-9;

/// Which transfer point is the access point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Orientation {
    /// Enter at X1, leave at X2.
    #[serde(rename = "12")]
    Forward,
    /// Enter at X2, leave at X1.
    #[serde(rename = "21")]
    Reverse,
}

impl Orientation {
    pub const BOTH: [Orientation; 2] = [Orientation::Forward, Orientation::Reverse];

    pub fn label(&self) -> &'static str {
        match self {
            Orientation::Forward => "12",
            Orientation::Reverse => "21",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum BranchTag {
    #[serde(rename = "a")]
    A,
    #[serde(rename = "b")]
    B,
}

impl BranchTag {
    pub fn label(&self) -> &'static str {
        match self {
            BranchTag::A => "a",
            BranchTag::B => "b",
        }
    }
}

/// Placement of a linear arc segment in the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentFrame {
    pub edge: usize,
    pub start: f64,
    pub len: f64,
    u: PlanarPoint,
    w: PlanarPoint,
    edge_len: f64,
}

impl SegmentFrame {
    pub fn new(net: &Network, seg: &LinearArcSegment) -> Self {
        let e = net.edges[seg.edge];
        Self {
            edge: seg.edge,
            start: seg.start,
            len: seg.len(),
            u: net.position(e.u),
            w: net.position(e.w),
            edge_len: e.length,
        }
    }

    /// Planar point at local parameter `t` (arc length from the segment start).
    pub fn at(&self, t: f64) -> PlanarPoint {
        PlanarPoint::lerp(&self.u, &self.w, (self.start + t) / self.edge_len)
    }

    /// Planar displacement per unit of arc length.
    pub fn direction(&self) -> [f64; 2] {
        [
            (self.w.x - self.u.x) / self.edge_len,
            (self.w.y - self.u.y) / self.edge_len,
        ]
    }

    pub fn speed(&self) -> f64 {
        let [dx, dy] = self.direction();
        dx.hypot(dy)
    }
}

/// A classified segment pair with its parameter rectangle `[0, p.len] x [0, q.len]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairGeometry {
    pub p: SegmentFrame,
    pub q: SegmentFrame,
    pub class: PairClass,
}

impl PairGeometry {
    pub fn new(net: &Network, pre: &Preprocessed, p: usize, q: usize) -> Self {
        Self {
            p: SegmentFrame::new(net, &pre.segments[p]),
            q: SegmentFrame::new(net, &pre.segments[q]),
            class: pre.classify(net, p, q),
        }
    }

    pub fn width(&self) -> f64 {
        self.p.len
    }

    pub fn height(&self) -> f64 {
        self.q.len
    }

    fn check(&self, x: f64, y: f64) -> Result<()> {
        if (0.0..=self.p.len).contains(&x) && (0.0..=self.q.len).contains(&y) {
            Ok(())
        } else {
            Err(Error::OutsideRectangle {
                x,
                y,
                width: self.p.len,
                height: self.q.len,
            })
        }
    }

    /// Network distance between X1 at `x` and X2 at `y`.
    pub fn network_distance(&self, x: f64, y: f64) -> Result<f64> {
        self.check(x, y)?;
        Ok(self.class.distance(x, y).max(0.0))
    }

    pub fn path_length(
        &self,
        inst: &ProblemInstance,
        pair: &OdPair,
        x: f64,
        y: f64,
        orient: Orientation,
    ) -> Result<f64> {
        let d = self.network_distance(x, y)?;
        let (x1, x2) = (self.p.at(x), self.q.at(y));
        let (a, b) = (inst.facility(pair.origin), inst.facility(pair.dest));
        Ok(match orient {
            Orientation::Forward => travel(&a, &x1, &x2, &b, inst.alpha, d),
            Orientation::Reverse => travel(&a, &x2, &x1, &b, inst.alpha, d),
        })
    }

    /// `f_ij`: the shorter of the two orientations.
    pub fn mixed_distance(
        &self,
        inst: &ProblemInstance,
        pair: &OdPair,
        x: f64,
        y: f64,
    ) -> Result<f64> {
        let d = self.network_distance(x, y)?;
        let (x1, x2) = (self.p.at(x), self.q.at(y));
        let (a, b) = (inst.facility(pair.origin), inst.facility(pair.dest));
        Ok(travel(&a, &x1, &x2, &b, inst.alpha, d).min(travel(&a, &x2, &x1, &b, inst.alpha, d)))
    }

    pub fn coverage(&self, inst: &ProblemInstance, x: f64, y: f64, tol: f64) -> Result<Coverage> {
        let d = self.network_distance(x, y)?;
        let (x1, x2) = (self.p.at(x), self.q.at(y));
        let mut cov = Coverage::default();
        for (k, pair) in inst.pairs.iter().enumerate() {
            let (a, b) = (inst.facility(pair.origin), inst.facility(pair.dest));
            let f = travel(&a, &x1, &x2, &b, inst.alpha, d)
                .min(travel(&a, &x2, &x1, &b, inst.alpha, d));
            if f <= pair.acceptance + tol {
                cov.covered.push(k);
                cov.objective += pair.weight;
            }
        }
        Ok(cov)
    }
}

/// Length of the path origin -> access -> (network) -> egress -> dest.
#[inline]
pub fn travel(
    origin: &PlanarPoint,
    access: &PlanarPoint,
    egress: &PlanarPoint,
    dest: &PlanarPoint,
    alpha: f64,
    d: f64,
) -> f64 {
    combine(origin.dist(access), alpha * d, egress.dist(dest))
}

/// Sum of the three legs in a fixed order, shared by every evaluator so that
/// identical inputs give bitwise identical lengths.
#[inline]
pub fn combine(access_leg: f64, network_leg: f64, egress_leg: f64) -> f64 {
    access_leg + network_leg + egress_leg
}

/// Covered pair indices (instance order) and their total weight.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Coverage {
    pub covered: Vec<usize>,
    pub objective: f64,
}

pub fn coverage_and_objective(
    inst: &ProblemInstance,
    geom: &PairGeometry,
    x: f64,
    y: f64,
    tol: f64,
) -> Result<Coverage> {
    geom.coverage(inst, x, y, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_instance;
    use crate::preprocess::preprocess;

    fn figure2(alpha: f64, d: f64) -> ProblemInstance {
        let h = 2.0 * 6f64.sqrt();
        let text = format!(
            r#"{{"alpha": {alpha},
  "vertices": [{{"id":0,"x":0,"y":{h}}},{{"id":1,"x":5,"y":{h}}},{{"id":2,"x":-1,"y":0}},{{"id":3,"x":6,"y":0}}],
  "edges": [{{"u":0,"w":1}},{{"u":2,"w":3}},{{"u":2,"w":0}},{{"u":3,"w":1}}],
  "facilities": [{{"id":0,"x":2.5,"y":6}},{{"id":1,"x":1,"y":-4}}],
  "pairs": [{{"i":0,"j":1,"t":1,"d":{d}}}, {{"i":1,"j":0,"t":1,"d":{d}}}]}}"#
        );
        parse_instance(&text).unwrap()
    }

    fn antipodal(inst: &ProblemInstance) -> PairGeometry {
        let pre = preprocess(&inst.network).unwrap();
        let top = pre.segment_at(0, 2.0).unwrap();
        let mid = pre.segment_at(1, 3.0).unwrap();
        PairGeometry::new(&inst.network, &pre, top, mid)
    }

    #[test]
    fn distance_examples() {
        let inst = figure2(0.3, 10.0);
        let g = antipodal(&inst);
        assert_eq!(g.network_distance(0.0, 0.0).unwrap(), 6.0);
        assert_eq!(g.network_distance(5.0, 5.0).unwrap(), 6.0);
        assert!(g.network_distance(5.1, 0.0).is_err());

        let pre = preprocess(&inst.network).unwrap();
        let diag = PairGeometry::new(&inst.network, &pre, 0, 0);
        assert_eq!(diag.network_distance(2.0, 3.5).unwrap(), 1.5);
    }

    #[test]
    fn path_length_example() {
        let inst = figure2(0.3, 10.0);
        let g = antipodal(&inst);
        let h = g
            .path_length(&inst, &inst.pairs[0], 2.5, 1.0, Orientation::Forward)
            .unwrap();
        let expected = (6.0 - 2.0 * 6f64.sqrt()) + 0.3 * 9.5 + 4.0;
        assert!((h - expected).abs() < 1e-12);
        assert!((h - 7.951).abs() < 1e-3);
    }

    #[test]
    fn swapping_facilities_swaps_orientation() {
        let inst = figure2(0.3, 10.0);
        let g = antipodal(&inst);
        for &(x, y) in &[(0.3, 4.1), (2.5, 1.0), (5.0, 0.0)] {
            let fwd = g
                .path_length(&inst, &inst.pairs[0], x, y, Orientation::Forward)
                .unwrap();
            let rev = g
                .path_length(&inst, &inst.pairs[1], x, y, Orientation::Reverse)
                .unwrap();
            assert_eq!(fwd, rev);
        }
    }

    #[test]
    fn coincident_points_have_no_network_leg() {
        let inst = figure2(0.3, 10.0);
        let pre = preprocess(&inst.network).unwrap();
        let g = PairGeometry::new(&inst.network, &pre, 0, 0);
        let h = g
            .path_length(&inst, &inst.pairs[0], 1.5, 1.5, Orientation::Forward)
            .unwrap();
        let x = g.p.at(1.5);
        assert_eq!(h, inst.facility(0).dist(&x) + x.dist(&inst.facility(1)));
    }

    #[test]
    fn figure4a_only_forward_orientation_reaches_level() {
        let inst = figure2(0.4, 10.0);
        let g = antipodal(&inst);
        let n = 200;
        let (mut fwd, mut rev) = (false, false);
        for i in 0..=n {
            for j in 0..=n {
                let (x, y) = (5.0 * i as f64 / n as f64, 5.0 * j as f64 / n as f64);
                fwd |= g
                    .path_length(&inst, &inst.pairs[0], x, y, Orientation::Forward)
                    .unwrap()
                    <= 10.0;
                rev |= g
                    .path_length(&inst, &inst.pairs[0], x, y, Orientation::Reverse)
                    .unwrap()
                    <= 10.0;
            }
        }
        assert!(fwd);
        assert!(!rev);
    }

    #[test]
    fn coverage_examples() {
        let inst = figure2(0.4, 10.0);
        let g = antipodal(&inst);
        // (2.5, 1.0): f is well below 10.
        let f = g.mixed_distance(&inst, &inst.pairs[0], 2.5, 1.0).unwrap();
        assert!(f < 10.0 - 1e-3);
        let cov = g.coverage(&inst, 2.5, 1.0, DEFAULT_COVERAGE_TOL).unwrap();
        assert_eq!(cov.covered, vec![0, 1]);
        assert_eq!(cov.objective, 2.0);

        let none = g.coverage(&inst, 0.0, 5.0, DEFAULT_COVERAGE_TOL).unwrap();
        assert!(none.covered.is_empty());
        assert_eq!(none.objective, 0.0);

        let mut zero = figure2(0.4, 0.0);
        zero.pairs.truncate(1);
        let g0 = antipodal(&zero);
        assert!(g0
            .coverage(&zero, 2.5, 1.0, DEFAULT_COVERAGE_TOL)
            .unwrap()
            .covered
            .is_empty());
    }
}
