//! Command-line front end.
//!
//! Exit statuses: 0 success, 1 invalid arguments, invalid instance or empty
//! selection, 2 I/O failure.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fds_solver::{
    oracle_grid, solve_global, trace_pair_curves, GlobalStats, Provenance, RestrictedProblem,
    SolverParams,
};
use crate::level_curves::{
    write_curve_rows, CURVE_CSV_HEADER, DEFAULT_REFINE_TOL, DEFAULT_TRACE_RES, MIN_TRACE_RES,
};
use crate::mixed_distance::{BranchTag, Orientation, PairGeometry, DEFAULT_COVERAGE_TOL};
use crate::model::{parse_instance, validate_instance, NetworkPoint, ProblemInstance, Solution};
use crate::preprocess::{preprocess, BottleneckPoint, LinearArcSegment, PairClass};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_IO: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "netcover",
    version,
    about = "Locate two transfer points on a network to cover O/D trips"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the location problem exactly.
    Solve(SolveArgs),
    /// Brute-force grid search over every segment pair.
    Oracle(OracleArgs),
    /// Dump distances, bottleneck points, segments and pair classes.
    Preprocess(IoArgs),
    /// Export boundary curves of selected O/D pairs on one segment pair.
    Curves(CurvesArgs),
    /// Evaluate travel lengths and coverage at a given point pair.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
struct IoArgs {
    /// Instance document (JSON).
    #[arg(long)]
    instance: PathBuf,
    /// Output path; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    io: IoArgs,
    #[arg(long, default_value_t = DEFAULT_TRACE_RES, value_parser = trace_res)]
    trace_res: usize,
    #[arg(long, default_value_t = DEFAULT_COVERAGE_TOL, value_parser = positive)]
    cov_tol: f64,
    #[arg(long, default_value_t = DEFAULT_REFINE_TOL, value_parser = positive)]
    refine_tol: f64,
    /// Worker threads; all cores when omitted.
    #[arg(long, value_parser = clap::value_parser!(u16).range(1..))]
    jobs: Option<u16>,
    /// Include wall-clock time in the result document.
    #[arg(long)]
    timing: bool,
}

#[derive(Debug, Args)]
struct OracleArgs {
    #[command(flatten)]
    io: IoArgs,
    /// Samples per rectangle axis.
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u32).range(2..))]
    grid_res: u32,
    #[arg(long, default_value_t = DEFAULT_COVERAGE_TOL, value_parser = positive)]
    cov_tol: f64,
    #[arg(long, value_parser = clap::value_parser!(u16).range(1..))]
    jobs: Option<u16>,
    #[arg(long)]
    timing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct CurvesArgs {
    #[command(flatten)]
    io: IoArgs,
    /// Segment index carrying X1 (as listed by `preprocess`).
    #[arg(long)]
    seg_p: usize,
    /// Segment index carrying X2.
    #[arg(long)]
    seg_q: usize,
    /// O/D pair `i,j`; repeatable. All pairs when omitted.
    #[arg(long = "pair", value_parser = facility_pair)]
    pairs: Vec<(usize, usize)>,
    #[arg(long, default_value_t = DEFAULT_TRACE_RES, value_parser = trace_res)]
    trace_res: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write one CSV file per pair, orientation and branch into this directory.
    #[arg(long, conflicts_with = "out")]
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[command(flatten)]
    io: IoArgs,
    /// X1 as `edge:arc_length`.
    #[arg(long, value_parser = edge_point)]
    x1: (usize, f64),
    /// X2 as `edge:arc_length`.
    #[arg(long, value_parser = edge_point)]
    x2: (usize, f64),
    #[arg(long, default_value_t = DEFAULT_COVERAGE_TOL, value_parser = positive)]
    cov_tol: f64,
}

fn positive(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
        _ => Err(format!("expected a positive number, got `{s}`")),
    }
}

fn trace_res(s: &str) -> std::result::Result<usize, String> {
    match s.parse::<usize>() {
        Ok(v) if v >= MIN_TRACE_RES => Ok(v),
        _ => Err(format!("expected an integer >= {MIN_TRACE_RES}, got `{s}`")),
    }
}

fn facility_pair(s: &str) -> std::result::Result<(usize, usize), String> {
    let (i, j) = s
        .split_once(',')
        .ok_or_else(|| format!("expected `i,j`, got `{s}`"))?;
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("`{t}`: {e}"));
    Ok((parse(i)?, parse(j)?))
}

fn edge_point(s: &str) -> std::result::Result<(usize, f64), String> {
    let (e, a) = s
        .split_once(':')
        .ok_or_else(|| format!("expected `edge:arc`, got `{s}`"))?;
    let edge = e
        .trim()
        .parse::<usize>()
        .map_err(|err| format!("`{e}`: {err}"))?;
    let arc = a
        .trim()
        .parse::<f64>()
        .map_err(|err| format!("`{a}`: {err}"))?;
    Ok((edge, arc))
}

// ---------------------------------------------------------------------------
// Documents

#[derive(Debug, Serialize)]
struct PointOut {
    edge: usize,
    arc_length: f64,
    x: f64,
    y: f64,
}

impl From<&NetworkPoint> for PointOut {
    fn from(p: &NetworkPoint) -> Self {
        Self {
            edge: p.edge,
            arc_length: p.arc,
            x: p.point.x,
            y: p.point.y,
        }
    }
}

#[derive(Debug, Serialize)]
struct ResultDoc<S: Serialize> {
    objective: f64,
    #[serde(rename = "X1")]
    x1: PointOut,
    #[serde(rename = "X2")]
    x2: PointOut,
    covered: Vec<[usize; 2]>,
    stats: S,
}

impl<S: Serialize> ResultDoc<S> {
    fn new(sol: &Solution, stats: S) -> Self {
        Self {
            objective: sol.objective,
            x1: PointOut::from(&sol.x1),
            x2: PointOut::from(&sol.x2),
            covered: sol.covered.iter().map(|&(i, j)| [i, j]).collect(),
            stats,
        }
    }
}

#[derive(Debug, Serialize)]
struct SolveStats {
    #[serde(flatten)]
    global: GlobalStats,
    segment_pair: [usize; 2],
    provenance: Provenance,
    #[serde(skip_serializing_if = "Option::is_none")]
    runtime_ms: Option<u128>,
}

#[derive(Debug, Serialize)]
struct OracleStats {
    segments: usize,
    restricted_problems: usize,
    grid_res: usize,
    segment_pair: [usize; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    runtime_ms: Option<u128>,
}

#[derive(Debug, Serialize)]
struct ClassRow {
    p: usize,
    q: usize,
    class: PairClass,
}

#[derive(Debug, Serialize)]
struct PreprocessDoc {
    distances: Vec<Vec<f64>>,
    bottlenecks: Vec<Vec<BottleneckPoint>>,
    segments: Vec<LinearArcSegment>,
    pairs: Vec<ClassRow>,
}

#[derive(Debug, Serialize)]
struct CurveOut {
    pair: [usize; 2],
    orientation: Orientation,
    branch: BranchTag,
    level: f64,
    closed: Vec<bool>,
    polylines: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Serialize)]
struct PairEval {
    pair: [usize; 2],
    h12: f64,
    h21: f64,
    f: f64,
    acceptance: f64,
    covered: bool,
}

#[derive(Debug, Serialize)]
struct EvaluateDoc {
    #[serde(rename = "X1")]
    x1: PointOut,
    #[serde(rename = "X2")]
    x2: PointOut,
    network_distance: f64,
    objective: f64,
    pairs: Vec<PairEval>,
}

// ---------------------------------------------------------------------------

enum Failure {
    Invalid(String),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) => Failure::Io(e.to_string()),
            other => Failure::Invalid(other.to_string()),
        }
    }
}

fn load(path: &Path) -> std::result::Result<ProblemInstance, Failure> {
    let text =
        fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    let inst =
        parse_instance(&text).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
    let report = validate_instance(&inst);
    for w in &report.warnings {
        eprintln!("warning: {}: {}", w.path, w.message);
    }
    if !report.is_valid() {
        return Err(Failure::Invalid(format!(
            "invalid instance {}:\n{report}",
            path.display()
        )));
    }
    Ok(inst)
}

fn emit(out: Option<&Path>, text: &str) -> std::result::Result<(), Failure> {
    let res = match out {
        Some(path) => fs::write(path, text).map_err(|e| format!("{}: {e}", path.display())),
        None => io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| e.to_string()),
    };
    res.map_err(Failure::Io)
}

fn json<T: Serialize>(value: &T) -> std::result::Result<String, Failure> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Failure::Invalid(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn jobs(j: Option<u16>) -> Option<usize> {
    j.map(usize::from)
}

fn solve(args: &SolveArgs) -> std::result::Result<(), Failure> {
    let inst = load(&args.io.instance)?;
    let params = SolverParams {
        trace_res: args.trace_res,
        refine_tol: args.refine_tol,
        cov_tol: args.cov_tol,
        ..SolverParams::default()
    };
    let start = Instant::now();
    let sol = solve_global(&inst, &params, jobs(args.jobs))?;
    let stats = SolveStats {
        global: sol.stats,
        segment_pair: [sol.segment_pair.0, sol.segment_pair.1],
        provenance: sol.provenance,
        runtime_ms: args.timing.then(|| start.elapsed().as_millis()),
    };
    emit(
        args.io.out.as_deref(),
        &json(&ResultDoc::new(&sol.solution, stats))?,
    )
}

fn oracle(args: &OracleArgs) -> std::result::Result<(), Failure> {
    let inst = load(&args.io.instance)?;
    let start = Instant::now();
    let res = args.grid_res as usize;
    let sol = oracle_grid(&inst, res, args.cov_tol, jobs(args.jobs))?;
    let pre = preprocess(&inst.network)?;
    let stats = OracleStats {
        segments: pre.segments.len(),
        restricted_problems: pre.segment_pairs().len(),
        grid_res: res,
        segment_pair: [sol.segment_pair.0, sol.segment_pair.1],
        runtime_ms: args.timing.then(|| start.elapsed().as_millis()),
    };
    emit(
        args.io.out.as_deref(),
        &json(&ResultDoc::new(&sol.solution, stats))?,
    )
}

fn dump_preprocess(args: &IoArgs) -> std::result::Result<(), Failure> {
    let inst = load(&args.instance)?;
    let pre = preprocess(&inst.network)?;
    let pairs = pre
        .segment_pairs()
        .into_iter()
        .map(|(p, q)| ClassRow {
            p,
            q,
            class: pre.classify(&inst.network, p, q),
        })
        .collect();
    let doc = PreprocessDoc {
        distances: pre.distances.rows(),
        bottlenecks: pre.bottlenecks.clone(),
        segments: pre.segments.clone(),
        pairs,
    };
    emit(args.out.as_deref(), &json(&doc)?)
}

fn curves(args: &CurvesArgs) -> std::result::Result<(), Failure> {
    let inst = load(&args.io.instance)?;
    let pre = preprocess(&inst.network)?;
    let n = pre.segments.len();
    if args.seg_p >= n || args.seg_q >= n {
        return Err(Error::EmptySelection(format!(
            "segment pair ({}, {}) out of range; the network has {n} segments",
            args.seg_p, args.seg_q
        ))
        .into());
    }
    let selected: Vec<usize> = if args.pairs.is_empty() {
        (0..inst.pairs.len()).collect()
    } else {
        inst.pairs
            .iter()
            .enumerate()
            .filter(|(_, p)| args.pairs.contains(&(p.origin, p.dest)))
            .map(|(k, _)| k)
            .collect()
    };
    if selected.is_empty() {
        return Err(Error::EmptySelection("no O/D pair matches the selector".into()).into());
    }
    let rp = RestrictedProblem::new(&inst, &pre, args.seg_p, args.seg_q);
    let params = SolverParams {
        trace_res: args.trace_res,
        ..SolverParams::default()
    };
    let mut traced = Vec::new();
    for &k in &selected {
        traced.extend(trace_pair_curves(&inst, &rp, k, &params)?);
    }
    let ids = |k: usize| (inst.pairs[k].origin, inst.pairs[k].dest);

    if let Some(dir) = &args.out_dir {
        fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
        for c in &traced {
            let (i, j) = ids(c.pair);
            let mut text = format!("{CURVE_CSV_HEADER}\n");
            write_curve_rows(&mut text, (i, j), c.orientation, c.branch, &c.curve);
            let name = format!(
                "curve_{i}_{j}_{}_{}.csv",
                c.orientation.label(),
                c.branch.label()
            );
            emit(Some(&dir.join(name)), &text)?;
        }
        return Ok(());
    }
    let text = match args.format {
        Format::Csv => {
            let mut text = format!("{CURVE_CSV_HEADER}\n");
            for c in &traced {
                write_curve_rows(&mut text, ids(c.pair), c.orientation, c.branch, &c.curve);
            }
            text
        }
        Format::Json => {
            let docs: Vec<CurveOut> = traced
                .iter()
                .map(|c| {
                    let (i, j) = ids(c.pair);
                    CurveOut {
                        pair: [i, j],
                        orientation: c.orientation,
                        branch: c.branch,
                        level: c.curve.level,
                        closed: c.curve.polylines.iter().map(|p| p.closed).collect(),
                        polylines: c
                            .curve
                            .polylines
                            .iter()
                            .map(|p| p.vertices.clone())
                            .collect(),
                    }
                })
                .collect();
            json(&docs)?
        }
    };
    emit(args.io.out.as_deref(), &text)
}

fn evaluate(args: &EvaluateArgs) -> std::result::Result<(), Failure> {
    let inst = load(&args.io.instance)?;
    let pre = preprocess(&inst.network)?;
    let x1 = NetworkPoint::on_edge(&inst.network, args.x1.0, args.x1.1)?;
    let x2 = NetworkPoint::on_edge(&inst.network, args.x2.0, args.x2.1)?;
    let locate = |p: &NetworkPoint| -> Result<(usize, f64)> {
        let s = pre
            .segment_at(p.edge, p.arc)
            .ok_or_else(|| Error::Parameter(format!("no segment contains {}:{}", p.edge, p.arc)))?;
        let seg = &pre.segments[s];
        Ok((s, (p.arc - seg.start).clamp(0.0, seg.len())))
    };
    let (p, x) = locate(&x1)?;
    let (q, y) = locate(&x2)?;
    let geom = PairGeometry::new(&inst.network, &pre, p, q);
    let cov = geom.coverage(&inst, x, y, args.cov_tol)?;
    let mut pairs = Vec::with_capacity(inst.pairs.len());
    for (k, pair) in inst.pairs.iter().enumerate() {
        pairs.push(PairEval {
            pair: [pair.origin, pair.dest],
            h12: geom.path_length(&inst, pair, x, y, Orientation::Forward)?,
            h21: geom.path_length(&inst, pair, x, y, Orientation::Reverse)?,
            f: geom.mixed_distance(&inst, pair, x, y)?,
            acceptance: pair.acceptance,
            covered: cov.covered.contains(&k),
        });
    }
    let doc = EvaluateDoc {
        x1: PointOut::from(&x1),
        x2: PointOut::from(&x2),
        network_distance: geom.network_distance(x, y)?,
        objective: cov.objective,
        pairs,
    };
    emit(args.io.out.as_deref(), &json(&doc)?)
}

/// Runs the command line `argv` (program name first) and returns the exit
/// status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            };
        }
    };
    let outcome = match &cli.command {
        Command::Solve(a) => solve(a),
        Command::Oracle(a) => oracle(a),
        Command::Preprocess(a) => dump_preprocess(a),
        Command::Curves(a) => curves(a),
        Command::Evaluate(a) => evaluate(a),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            EXIT_INVALID
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            EXIT_IO
        }
    }
}
