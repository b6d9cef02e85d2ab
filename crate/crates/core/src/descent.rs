//! Step-by-step descent of the coupling function toward a common point, with
//! trace verification, and an alternating-projections harness.

use std::cmp::Ordering;
use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Point, Scene};
use crate::slopes::{coupling_value, fmt_num, nonlocal_candidates, SlopeConfig, SlopeError};

pub const DEFAULT_MAX_ITER: usize = 10_000;
pub const DEFAULT_GAP_TOL: f64 = 1e-8;
pub const TRACE_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum DescentError {
    #[error("start point {which} is not in its set")]
    InfeasibleStart { which: &'static str },
    #[error("invalid descent input: {0}")]
    Input(String),
    #[error(transparent)]
    Slope(#[from] SlopeError),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepProposal {
    pub theta: f64,
    #[serde(rename = "xA_next")]
    pub xa_next: Point,
    #[serde(rename = "xB_next")]
    pub xb_next: Point,
}

struct Scored {
    decrease: f64,
    ratio: f64,
    motion: f64,
    u: Point,
    v: Point,
}

fn prefer(a: Scored, b: Scored) -> Scored {
    let ord = a
        .decrease
        .total_cmp(&b.decrease)
        .then(a.ratio.total_cmp(&b.ratio))
        .then(b.motion.total_cmp(&a.motion))
        .then_with(|| b.u.lex_cmp(&a.u).then_with(|| b.v.lex_cmp(&a.v)));
    if ord == Ordering::Less {
        b
    } else {
        a
    }
}

/// A decreasing joint move with both displacements at most `M * theta`,
/// chosen from the nonlocal-slope candidate set. Largest decrease wins.
pub fn step_oracle(
    scene: &Scene,
    xa: &Point,
    xb: &Point,
    m: f64,
    cfg: &SlopeConfig,
) -> Result<Option<StepProposal>, DescentError> {
    if !(m.is_finite() && m > 0.0) {
        return Err(DescentError::Input(format!("M must be positive, got {m}")));
    }
    if !scene.in_a(xa) {
        return Err(DescentError::InfeasibleStart { which: "xA" });
    }
    if !scene.in_b(xb) {
        return Err(DescentError::InfeasibleStart { which: "xB" });
    }
    cfg.validate()?;
    let gap = xa.dist(xb);
    if gap == 0.0 {
        return Ok(None);
    }
    let best = nonlocal_candidates(scene, xa, xb, cfg)
        .into_par_iter()
        .filter_map(|(u, v)| {
            let decrease = gap - coupling_value(scene, &u, &v);
            if !(decrease > 0.0) {
                return None;
            }
            let (ma, mb) = (xa.dist(&u), xb.dist(&v));
            let motion = ma.max(mb);
            if motion > m * decrease {
                return None;
            }
            Some(Scored { decrease, ratio: decrease / (ma + mb), motion, u, v })
        })
        .reduce_with(prefer);
    Ok(best.map(|b| StepProposal { theta: b.decrease, xa_next: b.u, xb_next: b.v }))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceRow {
    pub k: usize,
    pub t: f64,
    #[serde(rename = "xA")]
    pub xa: Point,
    #[serde(rename = "xB")]
    pub xb: Point,
    pub gap: f64,
    #[serde(rename = "moveA")]
    pub move_a: f64,
    #[serde(rename = "moveB")]
    pub move_b: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DescentTrace {
    pub rows: Vec<TraceRow>,
    #[serde(rename = "M")]
    pub m: f64,
    pub converged: bool,
    #[serde(rename = "xAB")]
    pub xab: Option<Point>,
    pub gap_tol: f64,
}

impl DescentTrace {
    pub fn iterations(&self) -> usize {
        self.rows.len().saturating_sub(1)
    }

    pub fn last(&self) -> &TraceRow {
        self.rows.last().expect("trace has a start row")
    }
}

pub fn run_descent(
    scene: &Scene,
    xa0: &Point,
    xb0: &Point,
    m: f64,
    gap_tol: f64,
    max_iter: usize,
    cfg: &SlopeConfig,
) -> Result<DescentTrace, DescentError> {
    if !(gap_tol > 0.0) {
        return Err(DescentError::Input("gap_tol must be positive".into()));
    }
    if max_iter == 0 {
        return Err(DescentError::Input("max_iter must be >= 1".into()));
    }
    if !scene.in_a(xa0) {
        return Err(DescentError::InfeasibleStart { which: "xA0" });
    }
    if !scene.in_b(xb0) {
        return Err(DescentError::InfeasibleStart { which: "xB0" });
    }
    let mut rows =
        vec![TraceRow { k: 0, t: 0.0, xa: xa0.clone(), xb: xb0.clone(), gap: xa0.dist(xb0), move_a: 0.0, move_b: 0.0 }];
    let mut stalled = false;
    while rows.last().unwrap().gap > gap_tol && rows.len() <= max_iter {
        let cur = rows.last().unwrap();
        match step_oracle(scene, &cur.xa, &cur.xb, m, cfg)? {
            Some(p) => {
                log::debug!("descent step {}: theta = {}", cur.k + 1, p.theta);
                let row = TraceRow {
                    k: cur.k + 1,
                    t: cur.t + p.theta,
                    move_a: cur.xa.dist(&p.xa_next),
                    move_b: cur.xb.dist(&p.xb_next),
                    gap: p.xa_next.dist(&p.xb_next),
                    xa: p.xa_next,
                    xb: p.xb_next,
                };
                rows.push(row);
            }
            None => {
                stalled = true;
                break;
            }
        }
    }
    let last = rows.last().unwrap();
    let mut converged = false;
    let mut xab = None;
    if !stalled && last.gap <= gap_tol {
        let cand = scene.a.project(&last.xa.midpoint(&last.xb));
        if scene.b.contains(&cand, 10.0 * gap_tol) {
            converged = true;
            xab = Some(cand);
        }
    }
    Ok(DescentTrace { rows, m, converged, xab, gap_tol })
}

/// Checks the descent invariants of `trace` at tolerance [`TRACE_TOL`].
/// Returns one message per violation.
pub fn verify_trace(trace: &DescentTrace, xbar: &Point, start_a: &Point, start_b: &Point) -> Vec<String> {
    let tol = TRACE_TOL;
    let m = trace.m;
    let mut out = Vec::new();
    let Some(first) = trace.rows.first() else {
        return vec!["empty trace".into()];
    };
    if &first.xa != start_a || &first.xb != start_b {
        out.push("row 0 does not match the start pair".into());
    }
    let gap0 = start_a.dist(start_b);
    let (da0, db0) = (start_a.dist(xbar), start_b.dist(xbar));
    for (k, r) in trace.rows.iter().enumerate() {
        if k > 0 && r.t <= trace.rows[k - 1].t {
            out.push(format!("t not increasing at row {k}"));
        }
        if r.gap > gap0 - r.t + tol {
            out.push(format!("(S1) at row {k}"));
        }
        if r.xa.dist(xbar) > da0 + r.t * m + tol || r.xb.dist(xbar) > db0 + r.t * m + tol {
            out.push(format!("(S2) at row {k}"));
        }
        for (j, q) in trace.rows[..k].iter().enumerate() {
            let bound = m * (r.t - q.t) + tol;
            if r.xa.dist(&q.xa) > bound || r.xb.dist(&q.xb) > bound {
                out.push(format!("(S3) at rows {j},{k}"));
            }
        }
    }
    if trace.converged {
        match &trace.xab {
            Some(p) => {
                if p.dist(start_a) > m * gap0 + tol || p.dist(start_b) > m * gap0 + tol {
                    out.push("common point too far from the start pair".into());
                }
            }
            None => out.push("converged without a common point".into()),
        }
    }
    out
}

pub fn write_trace_csv<W: Write>(trace: &DescentTrace, out: &mut W) -> io::Result<()> {
    let dim = trace.rows.first().map_or(0, |r| r.xa.dim());
    let mut header = vec!["k".to_string(), "t".to_string()];
    header.extend((1..=dim).map(|i| format!("xA_{i}")));
    header.extend((1..=dim).map(|i| format!("xB_{i}")));
    header.extend(["gap".into(), "moveA".into(), "moveB".into()]);
    writeln!(out, "{}", header.join(","))?;
    for r in &trace.rows {
        let mut cells = vec![r.k.to_string(), fmt_num(r.t)];
        cells.extend(r.xa.coords().iter().chain(r.xb.coords()).map(|v| fmt_num(*v)));
        cells.extend([fmt_num(r.gap), fmt_num(r.move_a), fmt_num(r.move_b)]);
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SetTag {
    A,
    B,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ApRow {
    pub k: usize,
    pub point: Point,
    pub dist_other: f64,
    pub set: SetTag,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ApTrace {
    pub rows: Vec<ApRow>,
    pub rate_estimate: f64,
    pub converged: bool,
}

impl ApTrace {
    /// Completed A -> B -> A cycles.
    pub fn cycles(&self) -> usize {
        self.rows.len().saturating_sub(1) / 2
    }
}

/// Alternating projections. Row 0 is the projection of `start` onto A, so
/// even rows lie in A and odd rows in B. Stops when a step moves at most `tol`.
pub fn run_alternating_projections(
    scene: &Scene,
    start: &Point,
    max_iter: usize,
    tol: f64,
) -> Result<ApTrace, DescentError> {
    if max_iter < 2 {
        return Err(DescentError::Input("max_iter must be >= 2".into()));
    }
    if start.dim() != scene.dimension {
        return Err(DescentError::Input("start has the wrong dimension".into()));
    }
    let p0 = scene.a.project(start);
    let mut rows = vec![ApRow { k: 0, dist_other: scene.b.distance(&p0), point: p0, set: SetTag::A }];
    let mut converged = false;
    while rows.len() < max_iter {
        let prev = rows.last().unwrap();
        let (point, set, other) = match prev.set {
            SetTag::A => (scene.b.project(&prev.point), SetTag::B, &scene.a),
            SetTag::B => (scene.a.project(&prev.point), SetTag::A, &scene.b),
        };
        let step = point.dist(&prev.point);
        let k = prev.k + 1;
        rows.push(ApRow { k, dist_other: other.distance(&point), point, set });
        if step <= tol {
            converged = true;
            break;
        }
    }
    let rate_estimate = rate_from_rows(&rows);
    Ok(ApTrace { rows, rate_estimate, converged })
}

/// Geometric mean of successive A-row displacement ratios over the last half.
fn rate_from_rows(rows: &[ApRow]) -> f64 {
    let a_rows: Vec<&Point> = rows.iter().filter(|r| r.set == SetTag::A).map(|r| &r.point).collect();
    let disp: Vec<f64> = a_rows.windows(2).map(|w| w[1].dist(w[0])).collect();
    let ratios: Vec<f64> = disp.windows(2).filter(|w| w[0] > 0.0).map(|w| w[1] / w[0]).collect();
    if ratios.is_empty() {
        return 0.0;
    }
    let tail = &ratios[ratios.len() / 2..];
    if tail.contains(&0.0) {
        return 0.0;
    }
    let mean_log = tail.iter().map(|r| r.ln()).sum::<f64>() / tail.len() as f64;
    mean_log.exp().clamp(0.0, 1.0 - 1e-12)
}

pub fn write_ap_csv<W: Write>(trace: &ApTrace, out: &mut W) -> io::Result<()> {
    let dim = trace.rows.first().map_or(0, |r| r.point.dim());
    let mut header = vec!["k".to_string()];
    header.extend((1..=dim).map(|i| format!("x_{i}")));
    header.extend(["dist_other".into(), "set".into()]);
    writeln!(out, "{}", header.join(","))?;
    for r in &trace.rows {
        let mut cells = vec![r.k.to_string()];
        cells.extend(r.point.coords().iter().map(|v| fmt_num(*v)));
        cells.push(fmt_num(r.dist_other));
        cells.push(format!("{:?}", r.set));
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}
