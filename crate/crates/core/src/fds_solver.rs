//! Finite dominating sets for the restricted problems, the global solve and
//! the brute-force grid oracle.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::level_curves::{
    intersect_curves, rectangle_boundary_points, trace_level_curve, BranchField, IntersectParams,
    IntersectionPoint, LevelCurve, Rect, DEFAULT_DEDUPE_RADIUS, DEFAULT_REFINE_TOL,
    DEFAULT_TRACE_RES, DEFAULT_TRACE_TOL,
};
use crate::mixed_distance::{combine, BranchTag, Orientation, PairGeometry, DEFAULT_COVERAGE_TOL};
use crate::model::{NetworkPoint, ProblemInstance, Solution};
use crate::preprocess::{preprocess, Preprocessed};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverParams {
    pub trace_res: usize,
    pub trace_tol: f64,
    pub refine_tol: f64,
    pub dedupe_radius: f64,
    pub cov_tol: f64,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            trace_res: DEFAULT_TRACE_RES,
            trace_tol: DEFAULT_TRACE_TOL,
            refine_tol: DEFAULT_REFINE_TOL,
            dedupe_radius: DEFAULT_DEDUPE_RADIUS,
            cov_tol: DEFAULT_COVERAGE_TOL,
        }
    }
}

impl SolverParams {
    fn intersect(&self) -> IntersectParams {
        IntersectParams {
            refine_tol: self.refine_tol,
            dedupe_radius: self.dedupe_radius,
            trace_tol: self.trace_tol,
        }
    }
}

/// Problem (x, y) in `[0, len_p] x [0, len_q]` for segments `p` and `q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RestrictedProblem {
    pub p: usize,
    pub q: usize,
    pub geom: PairGeometry,
}

impl RestrictedProblem {
    pub fn new(inst: &ProblemInstance, pre: &Preprocessed, p: usize, q: usize) -> Self {
        Self {
            p,
            q,
            geom: PairGeometry::new(&inst.network, pre, p, q),
        }
    }

    pub fn rect(&self) -> Rect {
        Rect::new(self.geom.width(), self.geom.height())
    }
}

/// One boundary curve `g = d_ij` of an O/D pair for one orientation and branch.
#[derive(Debug, Clone)]
pub struct TracedCurve {
    /// Index of the O/D pair in the instance.
    pub pair: usize,
    pub orientation: Orientation,
    pub branch: BranchTag,
    pub field: BranchField,
    pub curve: LevelCurve,
}

impl TracedCurve {
    fn coincides(&self, other: &TracedCurve) -> bool {
        self.curve.level == other.curve.level && self.field.same_function(&other.field)
    }
}

/// Traces every orientation/branch curve of pair `k`. Curves whose field
/// provably stays above the level are returned empty without tracing.
pub fn trace_pair_curves(
    inst: &ProblemInstance,
    rp: &RestrictedProblem,
    k: usize,
    params: &SolverParams,
) -> Result<Vec<TracedCurve>> {
    let pair = &inst.pairs[k];
    let rect = rp.rect();
    let branches = rp.geom.class.branches();
    let mut out = Vec::with_capacity(2 * branches.len());
    for orientation in Orientation::BOTH {
        for (form, branch) in branches.iter().zip([BranchTag::A, BranchTag::B]) {
            let field = BranchField::new(inst, pair, rp.geom.p, rp.geom.q, orientation, *form);
            let curve = if field.lower_bound() > pair.acceptance {
                LevelCurve {
                    level: pair.acceptance,
                    rect,
                    res: params.trace_res,
                    polylines: Vec::new(),
                }
            } else {
                trace_level_curve(
                    &field,
                    pair.acceptance,
                    rect,
                    params.trace_res,
                    params.trace_tol,
                )?
            };
            out.push(TracedCurve {
                pair: k,
                orientation,
                branch,
                field,
                curve,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CurveStats {
    pub curves: usize,
    pub intersections: usize,
    /// Curve pairs re-traced at doubled resolution.
    pub retraced: usize,
    /// Curve pairs still above the Bezout bound after re-tracing.
    pub bound_exceeded: usize,
    /// Largest deduplicated crossing count seen for one curve pair.
    pub max_per_curve_pair: usize,
}

impl CurveStats {
    fn absorb(&mut self, other: &CurveStats) {
        self.curves += other.curves;
        self.intersections += other.intersections;
        self.retraced += other.retraced;
        self.bound_exceeded += other.bound_exceeded;
        self.max_per_curve_pair = self.max_per_curve_pair.max(other.max_per_curve_pair);
    }
}

fn intersect(
    c1: &TracedCurve,
    c2: &TracedCurve,
    params: &SolverParams,
    stats: &mut CurveStats,
) -> Result<Vec<IntersectionPoint>> {
    if c1.curve.is_empty() || c2.curve.is_empty() || c1.coincides(c2) {
        return Ok(Vec::new());
    }
    let set = intersect_curves(
        &c1.field,
        &c1.curve,
        &c2.field,
        &c2.curve,
        &params.intersect(),
    )?;
    stats.intersections += set.points.len();
    stats.retraced += usize::from(set.retraced);
    stats.bound_exceeded += usize::from(set.bound_exceeded);
    stats.max_per_curve_pair = stats.max_per_curve_pair.max(set.points.len());
    Ok(set.points)
}

/// Candidate set Q for one pair: per orientation, the crossings of the two
/// branch curves, or one point from each nonempty curve when they do not
/// cross.
pub fn build_q(
    curves: &[TracedCurve],
    params: &SolverParams,
    stats: &mut CurveStats,
) -> Result<Vec<[f64; 2]>> {
    let mut out = Vec::new();
    for orientation in Orientation::BOTH {
        let branch: Vec<&TracedCurve> = curves
            .iter()
            .filter(|c| c.orientation == orientation && !c.curve.is_empty())
            .collect();
        let crossings = match branch.as_slice() {
            [a, b] => intersect(a, b, params, stats)?
                .into_iter()
                .map(|p| [p.x, p.y])
                .collect(),
            _ => Vec::new(),
        };
        if crossings.is_empty() {
            out.extend(branch.iter().filter_map(|c| c.curve.first_vertex()));
        } else {
            out.extend(crossings);
        }
    }
    Ok(out)
}

/// Candidate set P for two distinct pairs: crossings over all combinations of
/// their curves, deduplicated.
pub fn build_p(
    first: &[TracedCurve],
    second: &[TracedCurve],
    params: &SolverParams,
    stats: &mut CurveStats,
) -> Result<Vec<IntersectionPoint>> {
    if let (Some(a), Some(b)) = (first.first(), second.first()) {
        if a.pair == b.pair {
            return Err(Error::SamePair);
        }
    }
    let mut out: Vec<IntersectionPoint> = Vec::new();
    for c1 in first {
        for c2 in second {
            for p in intersect(c1, c2, params, stats)? {
                if !out
                    .iter()
                    .any(|q| (q.x - p.x).hypot(q.y - p.y) < params.dedupe_radius)
                {
                    out.push(p);
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Q,
    P,
    BoundaryAugment,
    Fallback,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Candidate {
    pub x: f64,
    pub y: f64,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FdsSolution {
    pub omega: Vec<Candidate>,
    /// Index into `omega` of the best candidate.
    pub best: usize,
    pub objective: f64,
    /// Covered pair indices at the best candidate.
    pub covered: Vec<usize>,
    pub stats: CurveStats,
}

impl FdsSolution {
    pub fn best_point(&self) -> Candidate {
        self.omega[self.best]
    }
}

fn push_unique(omega: &mut Vec<Candidate>, p: [f64; 2], provenance: Provenance, radius: f64) {
    if !omega
        .iter()
        .any(|c| (c.x - p[0]).hypot(c.y - p[1]) < radius)
    {
        omega.push(Candidate {
            x: p[0],
            y: p[1],
            provenance,
        });
    }
}

pub fn solve_restricted(
    inst: &ProblemInstance,
    rp: &RestrictedProblem,
    params: &SolverParams,
) -> Result<FdsSolution> {
    let rect = rp.rect();
    let mut stats = CurveStats::default();
    let mut curves = Vec::new();
    for k in 0..inst.pairs.len() {
        let traced = trace_pair_curves(inst, rp, k, params)?;
        if traced.iter().any(|c| !c.curve.is_empty()) {
            stats.curves += traced.iter().filter(|c| !c.curve.is_empty()).count();
            curves.push(traced);
        }
    }

    let mut raw: Vec<([f64; 2], Provenance)> = Vec::new();
    for set in &curves {
        raw.extend(
            build_q(set, params, &mut stats)?
                .into_iter()
                .map(|p| (p, Provenance::Q)),
        );
    }
    for (a, first) in curves.iter().enumerate() {
        for second in &curves[a + 1..] {
            raw.extend(
                build_p(first, second, params, &mut stats)?
                    .into_iter()
                    .map(|p| ([p.x, p.y], Provenance::P)),
            );
        }
    }
    if !curves.is_empty() {
        for c in curves.iter().flatten() {
            raw.extend(
                rectangle_boundary_points(&c.curve)
                    .into_iter()
                    .map(|p| (p, Provenance::BoundaryAugment)),
            );
        }
        raw.extend(
            rect.corners()
                .into_iter()
                .map(|p| (p, Provenance::BoundaryAugment)),
        );
    }

    let mut omega = Vec::with_capacity(raw.len() + 1);
    for (p, provenance) in raw {
        push_unique(&mut omega, rect.clamp(p), provenance, params.dedupe_radius);
    }
    let delta = rect.x1.min(rect.y1) * 1e-3;
    let mut fallback = [rect.x1 / 2.0, rect.y1 / 2.0];
    while omega
        .iter()
        .any(|c| (c.x - fallback[0]).hypot(c.y - fallback[1]) < params.dedupe_radius)
    {
        fallback = rect.clamp([fallback[0] + delta, fallback[1] - delta]);
    }
    omega.push(Candidate {
        x: fallback[0],
        y: fallback[1],
        provenance: Provenance::Fallback,
    });

    let mut best = 0;
    let mut best_cov = rp
        .geom
        .coverage(inst, omega[0].x, omega[0].y, params.cov_tol)?;
    for (k, c) in omega.iter().enumerate().skip(1) {
        let cov = rp.geom.coverage(inst, c.x, c.y, params.cov_tol)?;
        let b = &omega[best];
        let better = cov.objective > best_cov.objective
            || (cov.objective == best_cov.objective && (c.x, c.y) < (b.x, b.y));
        if better {
            best = k;
            best_cov = cov;
        }
    }
    Ok(FdsSolution {
        omega,
        best,
        objective: best_cov.objective,
        covered: best_cov.covered,
        stats,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct GlobalStats {
    pub segments: usize,
    pub restricted_problems: usize,
    pub omega_total: usize,
    pub curves: usize,
    pub intersections: usize,
    pub bezout_retraces: usize,
    pub bezout_exceeded: usize,
    pub max_intersections_per_curve_pair: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalSolution {
    pub solution: Solution,
    /// Segment pair `(p, q)` of the best restricted problem.
    pub segment_pair: (usize, usize),
    pub local: (f64, f64),
    pub provenance: Provenance,
    pub stats: GlobalStats,
}

fn pool(jobs: Option<usize>) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::Parameter(format!("cannot start worker pool: {e}")))
}

fn to_solution(
    inst: &ProblemInstance,
    rp: &RestrictedProblem,
    pre: &Preprocessed,
    x: f64,
    y: f64,
    covered: &[usize],
    objective: f64,
) -> Solution {
    let (sp, sq) = (&pre.segments[rp.p], &pre.segments[rp.q]);
    Solution {
        x1: NetworkPoint {
            edge: sp.edge,
            arc: sp.start + x,
            point: rp.geom.p.at(x),
        },
        x2: NetworkPoint {
            edge: sq.edge,
            arc: sq.start + y,
            point: rp.geom.q.at(y),
        },
        objective,
        covered: covered
            .iter()
            .map(|&k| (inst.pairs[k].origin, inst.pairs[k].dest))
            .collect(),
    }
}

/// Solves every unordered segment pair with `jobs` worker threads (all cores
/// when `None`). Ties are broken by segment-pair index, then local `x`, `y`,
/// so the result does not depend on scheduling.
pub fn solve_global(
    inst: &ProblemInstance,
    params: &SolverParams,
    jobs: Option<usize>,
) -> Result<GlobalSolution> {
    let pre = preprocess(&inst.network)?;
    let pairs = pre.segment_pairs();
    let results: Vec<FdsSolution> = pool(jobs)?.install(|| {
        pairs
            .par_iter()
            .map(|&(p, q)| {
                solve_restricted(inst, &RestrictedProblem::new(inst, &pre, p, q), params)
            })
            .collect::<Result<_>>()
    })?;

    let mut stats = GlobalStats {
        segments: pre.segments.len(),
        restricted_problems: pairs.len(),
        ..Default::default()
    };
    let mut curve_stats = CurveStats::default();
    let mut best = 0;
    for (k, r) in results.iter().enumerate() {
        stats.omega_total += r.omega.len();
        curve_stats.absorb(&r.stats);
        if r.objective > results[best].objective {
            best = k;
        }
    }
    stats.curves = curve_stats.curves;
    stats.intersections = curve_stats.intersections;
    stats.bezout_retraces = curve_stats.retraced;
    stats.bezout_exceeded = curve_stats.bound_exceeded;
    stats.max_intersections_per_curve_pair = curve_stats.max_per_curve_pair;

    let (p, q) = pairs[best];
    let rp = RestrictedProblem::new(inst, &pre, p, q);
    let r = &results[best];
    let c = r.best_point();
    Ok(GlobalSolution {
        solution: to_solution(inst, &rp, &pre, c.x, c.y, &r.covered, r.objective),
        segment_pair: (p, q),
        local: (c.x, c.y),
        provenance: c.provenance,
        stats,
    })
}

// ---------------------------------------------------------------------------
// Oracle

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub x: f64,
    pub y: f64,
    pub objective: f64,
    pub covered: Vec<usize>,
}

fn grid_axis(len: f64, res: usize) -> Vec<f64> {
    let n = res - 1;
    (0..res)
        .map(|i| {
            if i == n {
                len
            } else {
                len * i as f64 / n as f64
            }
        })
        .collect()
}

/// Best coverage over a `res x res` sample grid of the rectangle, corners
/// included. Grids of `res` and `2 res - 1` points nest exactly. Coverage is
/// computed with the same arithmetic as [`PairGeometry::coverage`].
pub fn oracle_rect(
    inst: &ProblemInstance,
    rp: &RestrictedProblem,
    res: usize,
    cov_tol: f64,
) -> Result<OracleResult> {
    if res < 2 {
        return Err(Error::Parameter(format!("oracle resolution {res} below 2")));
    }
    let g = &rp.geom;
    let xs = grid_axis(g.width(), res);
    let ys = grid_axis(g.height(), res);
    let leg = |frame: &crate::mixed_distance::SegmentFrame, axis: &[f64], fac: usize| -> Vec<f64> {
        let a = inst.facility(fac);
        axis.iter().map(|&t| a.dist(&frame.at(t))).collect()
    };
    let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);

    // Per live pair: legs from origin and destination to X1(x) and X2(y).
    struct Live {
        k: usize,
        ox: Vec<f64>,
        dx: Vec<f64>,
        oy: Vec<f64>,
        dy: Vec<f64>,
    }
    let mut live = Vec::new();
    for (k, pair) in inst.pairs.iter().enumerate() {
        let (ox, dx) = (leg(&g.p, &xs, pair.origin), leg(&g.p, &xs, pair.dest));
        let (oy, dy) = (leg(&g.q, &ys, pair.origin), leg(&g.q, &ys, pair.dest));
        let bound = (min(&ox) + min(&dy)).min(min(&oy) + min(&dx));
        if bound <= pair.acceptance + cov_tol {
            live.push(Live { k, ox, dx, oy, dy });
        }
    }

    let mut best = OracleResult {
        x: xs[0],
        y: ys[0],
        objective: f64::NEG_INFINITY,
        covered: Vec::new(),
    };
    let mut covered = Vec::with_capacity(live.len());
    for (i, &x) in xs.iter().enumerate() {
        for (j, &y) in ys.iter().enumerate() {
            let d = inst.alpha * g.class.distance(x, y).max(0.0);
            covered.clear();
            let mut objective = 0.0;
            for l in &live {
                let f = combine(l.ox[i], d, l.dy[j]).min(combine(l.oy[j], d, l.dx[i]));
                let pair = &inst.pairs[l.k];
                if f <= pair.acceptance + cov_tol {
                    covered.push(l.k);
                    objective += pair.weight;
                }
            }
            if objective > best.objective {
                best = OracleResult {
                    x,
                    y,
                    objective,
                    covered: covered.clone(),
                };
            }
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub solution: Solution,
    pub segment_pair: (usize, usize),
    pub res: usize,
}

/// Grid oracle over every unordered segment pair.
pub fn oracle_grid(
    inst: &ProblemInstance,
    res: usize,
    cov_tol: f64,
    jobs: Option<usize>,
) -> Result<OracleSolution> {
    let pre = preprocess(&inst.network)?;
    let pairs = pre.segment_pairs();
    let results: Vec<OracleResult> = pool(jobs)?.install(|| {
        pairs
            .par_iter()
            .map(|&(p, q)| {
                oracle_rect(
                    inst,
                    &RestrictedProblem::new(inst, &pre, p, q),
                    res,
                    cov_tol,
                )
            })
            .collect::<Result<_>>()
    })?;
    let mut best = 0;
    for (k, r) in results.iter().enumerate() {
        if r.objective > results[best].objective {
            best = k;
        }
    }
    let (p, q) = pairs[best];
    let rp = RestrictedProblem::new(inst, &pre, p, q);
    let r = &results[best];
    Ok(OracleSolution {
        solution: to_solution(inst, &rp, &pre, r.x, r.y, &r.covered, r.objective),
        segment_pair: (p, q),
        res,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_instance;

    fn figure4(alpha: f64, d_ij: f64, d_kr: Option<f64>) -> ProblemInstance {
        let h = 2.0 * 6f64.sqrt();
        let extra = d_kr
            .map(|d| format!(r#", {{"i":2,"j":3,"t":1,"d":{d}}}"#))
            .unwrap_or_default();
        let text = format!(
            r#"{{"alpha": {alpha},
  "vertices": [{{"id":0,"x":0,"y":{h}}},{{"id":1,"x":5,"y":{h}}},{{"id":2,"x":-1,"y":0}},{{"id":3,"x":6,"y":0}}],
  "edges": [{{"u":0,"w":1}},{{"u":2,"w":3}},{{"u":2,"w":0}},{{"u":3,"w":1}}],
  "facilities": [{{"id":0,"x":2.5,"y":6}},{{"id":1,"x":1,"y":-4}},{{"id":2,"x":-2,"y":-4.5}},{{"id":3,"x":3,"y":5.5}}],
  "pairs": [{{"i":0,"j":1,"t":1,"d":{d_ij}}}{extra}]}}"#
        );
        parse_instance(&text).unwrap()
    }

    fn antipodal(inst: &ProblemInstance) -> RestrictedProblem {
        let pre = preprocess(&inst.network).unwrap();
        let p = pre.segment_at(0, 2.0).unwrap();
        let q = pre.segment_at(1, 3.0).unwrap();
        RestrictedProblem::new(inst, &pre, p, q)
    }

    #[test]
    fn figure4_intersection_counts() {
        let params = SolverParams::default();
        for (d_kr, expected) in [(10.5, 3), (9.8, 0)] {
            let inst = figure4(0.4, 10.0, Some(d_kr));
            let rp = antipodal(&inst);
            let a = trace_pair_curves(&inst, &rp, 0, &params).unwrap();
            let b = trace_pair_curves(&inst, &rp, 1, &params).unwrap();
            let mut stats = CurveStats::default();
            let pts = build_p(&a, &b, &params, &mut stats).unwrap();
            assert_eq!(pts.len(), expected, "d_kr = {d_kr}");
            assert!(pts.iter().all(|p| p.residual < 1e-6));
            assert!(build_p(&a, &a, &params, &mut stats).is_err());
        }
    }

    #[test]
    fn figure4a_q_uses_branch_crossings() {
        let inst = figure4(0.4, 10.0, None);
        let rp = antipodal(&inst);
        let params = SolverParams::default();
        let curves = trace_pair_curves(&inst, &rp, 0, &params).unwrap();
        let fwd: Vec<_> = curves
            .iter()
            .filter(|c| c.orientation == Orientation::Forward)
            .collect();
        assert!(fwd.iter().all(|c| !c.curve.is_empty()));
        assert!(curves
            .iter()
            .filter(|c| c.orientation == Orientation::Reverse)
            .all(|c| c.curve.is_empty()));
        let mut stats = CurveStats::default();
        let q = build_q(&curves, &params, &mut stats).unwrap();
        assert!(!q.is_empty());
        assert!(stats.intersections > 0);
    }

    #[test]
    fn single_pair_is_covered() {
        let inst = figure4(0.4, 10.0, None);
        let rp = antipodal(&inst);
        let sol = solve_restricted(&inst, &rp, &SolverParams::default()).unwrap();
        assert_eq!(sol.objective, 1.0);
        assert_ne!(sol.best_point().provenance, Provenance::Fallback);
        let c = sol.best_point();
        let cov = rp
            .geom
            .coverage(&inst, c.x, c.y, DEFAULT_COVERAGE_TOL)
            .unwrap();
        assert_eq!(cov.covered, sol.covered);
    }

    #[test]
    fn uncoverable_gives_fallback() {
        let inst = figure4(0.4, 1.0, None);
        let rp = antipodal(&inst);
        let sol = solve_restricted(&inst, &rp, &SolverParams::default()).unwrap();
        assert_eq!(sol.objective, 0.0);
        assert_eq!(sol.omega.len(), 1);
        assert_eq!(sol.best_point().provenance, Provenance::Fallback);
        assert_eq!((sol.best_point().x, sol.best_point().y), (2.5, 2.5));
    }

    #[test]
    fn figure2_counts_and_oracle() {
        let inst = figure4(0.4, 10.0, Some(10.5));
        let sol = solve_global(&inst, &SolverParams::default(), Some(2)).unwrap();
        assert_eq!(sol.stats.segments, 8);
        assert_eq!(sol.stats.restricted_problems, 36);
        let oracle = oracle_grid(&inst, 100, DEFAULT_COVERAGE_TOL, Some(2)).unwrap();
        assert!(oracle.solution.objective <= sol.solution.objective);
    }

    #[test]
    fn oracle_corners_and_nesting() {
        let inst = figure4(0.4, 10.0, Some(10.5));
        let rp = antipodal(&inst);
        let two = oracle_rect(&inst, &rp, 2, DEFAULT_COVERAGE_TOL).unwrap();
        let corners = rp
            .rect()
            .corners()
            .iter()
            .map(|c| {
                rp.geom
                    .coverage(&inst, c[0], c[1], DEFAULT_COVERAGE_TOL)
                    .unwrap()
                    .objective
            })
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(two.objective, corners);
        let mut prev = two.objective;
        for res in [3, 5, 9, 17, 33] {
            let r = oracle_rect(&inst, &rp, res, DEFAULT_COVERAGE_TOL).unwrap();
            assert!(r.objective >= prev);
            prev = r.objective;
        }
        assert!(oracle_rect(&inst, &rp, 1, DEFAULT_COVERAGE_TOL).is_err());
    }
}
