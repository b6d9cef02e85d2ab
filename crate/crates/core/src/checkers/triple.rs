use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{ball_cloud, dykstra, flatten, sample_near, unit_directions, Piece, Point, Scene, Shape};

use super::{require_common_point, CheckError, CheckerConfig, Property, PropertyReport, Verdict};

const RHO_LEVELS: i32 = 8;
const BISECTOR_STEPS: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TripleBudget {
    /// Points of the `rho`-ball tried as starting points.
    pub cloud: usize,
    /// Averaged-projection refinement steps from the best starting point.
    pub refine_iter: usize,
    pub seed: u64,
}

impl Default for TripleBudget {
    fn default() -> Self {
        TripleBudget { cloud: 64, refine_iter: 50, seed: 0 }
    }
}

enum Part {
    Whole(Piece),
    Clipped(Piece, Piece),
}

impl Part {
    fn project(&self, x: &Point) -> Option<Point> {
        match self {
            Part::Whole(p) => Some(p.project(x)),
            Part::Clipped(p, ball) => dykstra(p, ball, x, 2000, 1e-9),
        }
    }
}

/// `shape ∩ B(center, lambda)` as convex parts; `None` when empty.
fn clip(shape: &Shape, center: &Point, lambda: f64) -> Option<Vec<Part>> {
    if shape.distance(center) > lambda {
        return None;
    }
    let mut parts = Vec::new();
    for piece in flatten(shape) {
        if lambda.is_infinite() {
            parts.push(Part::Whole(piece));
            continue;
        }
        match piece.clip_to_ball(center, lambda) {
            Some(Some(p)) => parts.push(Part::Whole(p)),
            Some(None) => {}
            None if piece.distance(center) <= lambda => {
                parts.push(Part::Clipped(piece, Piece::Ball { center: center.clone(), radius: lambda }))
            }
            None => {}
        }
    }
    (!parts.is_empty()).then_some(parts)
}

fn nearest(parts: &[Part], x: &Point) -> Option<(f64, Point)> {
    parts.iter().filter_map(|p| p.project(x)).map(|q| (q.dist(x), q)).min_by(|a, b| a.0.total_cmp(&b.0))
}

/// Estimate of `inf over x in B(omega, rho) of max(d(x, A'), d(x, B'))` with
/// `A' = A ∩ B(center_a, lambda)` and `B' = B ∩ B(center_b, lambda)`.
/// `+inf` when either constrained set is empty; `lambda = +inf` uses the whole sets.
/// For `rho > 0` the value is the best of the sampled points, an upper bound of the infimum.
pub fn triple_distance(
    scene: &Scene,
    center_a: &Point,
    center_b: &Point,
    lambda: f64,
    omega: &Point,
    rho: f64,
    budget: &TripleBudget,
) -> f64 {
    let (Some(pa), Some(pb)) = (clip(&scene.a, center_a, lambda), clip(&scene.b, center_b, lambda)) else {
        return f64::INFINITY;
    };
    let eval = |x: &Point| -> Option<(f64, Point, Point)> {
        let (da, qa) = nearest(&pa, x)?;
        let (db, qb) = nearest(&pb, x)?;
        Some((da.max(db), qa, qb))
    };
    if rho == 0.0 {
        return eval(omega).map_or(f64::INFINITY, |e| e.0);
    }
    let mut best: Option<(f64, Point)> = None;
    for x in ball_cloud(omega, rho, budget.cloud.max(1), budget.seed) {
        if let Some((v, ..)) = eval(&x) {
            if best.as_ref().is_none_or(|(b, _)| v < *b) {
                best = Some((v, x));
            }
        }
    }
    let Some((mut val, mut x)) = best else {
        return f64::INFINITY;
    };
    for _ in 0..budget.refine_iter {
        let Some((_, qa, qb)) = eval(&x) else { break };
        let y = qa.midpoint(&qb).clamp_to_ball(omega, rho);
        match eval(&y) {
            Some((v, ..)) if v < val => {
                val = v;
                x = y;
            }
            _ => break,
        }
    }
    val
}

/// Offsets `w` perpendicular to `n` with `|w| <= eps`.
fn bisector_offsets(n: &Point, eps: f64) -> Vec<Point> {
    let dim = n.dim();
    let Some(n) = n.normalized() else { return vec![] };
    let perps: Vec<Point> = match dim {
        1 => vec![],
        2 => vec![Point::from([-n[1], n[0]])],
        _ => {
            unit_directions(dim, 8).into_iter().filter_map(|d| d.offset(-d.dot(&n), &n).normalized()).take(2).collect()
        }
    };
    let mut out = vec![Point::zeros(dim)];
    for p in &perps {
        for i in 0..BISECTOR_STEPS {
            let s = eps * (2.0 * i as f64 / (BISECTOR_STEPS - 1) as f64 - 1.0);
            if s != 0.0 {
                out.push(p * s);
            }
        }
    }
    out
}

/// Samples `(a, b, x)` with `a ∈ A \ B`, `b ∈ B \ A` near the reference point and
/// `x` on their bisector, and asks for some `rho_k` in a halving schedule with
/// `d(A ∩ B(a, lambda), B ∩ B(b, lambda), B(x, rho)) + alpha * rho <= |x - a|`,
/// `lambda = (alpha + 1/sqrt(eps)) * rho`.
pub fn check_property_p(
    scene: &Scene,
    alpha: f64,
    eps: f64,
    cfg: &CheckerConfig,
) -> Result<PropertyReport, CheckError> {
    cfg.validate()?;
    if !(alpha > 0.0 && alpha < 1.0) || !(eps > 0.0 && eps.is_finite()) {
        return Err(CheckError::Config(format!("need alpha in (0,1) and eps > 0, got {alpha}, {eps}")));
    }
    if let Some(r) = require_common_point(scene, Property::PropertyP) {
        return Ok(r.constant("alpha", alpha).constant("epsilon", eps));
    }
    let xbar = &scene.xbar;
    let seed = scene.seed ^ 0x7e;
    let a_pts: Vec<Point> =
        sample_near(&scene.a, xbar, eps, cfg.grid_count, seed).into_iter().filter(|a| !scene.in_b(a)).collect();
    let b_pts: Vec<Point> =
        sample_near(&scene.b, xbar, eps, cfg.grid_count, seed ^ 1).into_iter().filter(|b| !scene.in_a(b)).collect();
    let mut pairs: Vec<(Point, Point)> = Vec::new();
    for a in &a_pts {
        for b in &b_pts {
            pairs.push((a.clone(), b.clone()));
        }
        let b = scene.b.project(a);
        if !scene.in_a(&b) && b.dist(xbar) <= eps {
            pairs.push((a.clone(), b));
        }
    }
    for b in &b_pts {
        let a = scene.a.project(b);
        if !scene.in_b(&a) && a.dist(xbar) <= eps {
            pairs.push((a, b.clone()));
        }
    }
    let lambda_factor = alpha + 1.0 / eps.sqrt();
    let rho0 = 0.5 * cfg.delta.min(eps);
    let budget = TripleBudget { seed: scene.seed, ..TripleBudget::default() };
    let triples: Vec<(Point, Point, Point)> = pairs
        .iter()
        .flat_map(|(a, b)| {
            let mid = a.midpoint(b);
            bisector_offsets(&(b - a), eps)
                .into_iter()
                .map(move |w| &mid + &w)
                .filter(|x| x.dist(xbar) <= eps)
                .map(move |x| (a.clone(), b.clone(), x))
                .collect::<Vec<_>>()
        })
        .collect();
    let failures: Vec<&(Point, Point, Point)> = triples
        .par_iter()
        .filter(|(a, b, x)| {
            !(0..RHO_LEVELS).any(|k| {
                let rho = rho0 * 2f64.powi(-k);
                let d = triple_distance(scene, a, b, lambda_factor * rho, x, rho, &budget);
                d + alpha * rho <= x.dist(a) + 1e-12
            })
        })
        .collect();
    let verdict = if failures.is_empty() { Verdict::HoldsAtResolution } else { Verdict::Inconclusive };
    let mut r = PropertyReport::new(Property::PropertyP, verdict)
        .constant("alpha", alpha)
        .constant("epsilon", eps)
        .constant("lambda_factor", lambda_factor)
        .note("pairs", pairs.len())
        .note("triples", triples.len())
        .note("rho_schedule", format!("{rho0} * 2^-k, k < {RHO_LEVELS}"))
        .note("bisector_offsets", format!("|w| <= eps, {BISECTOR_STEPS} steps per direction"))
        .note("failed_triples", failures.len());
    if triples.is_empty() {
        r = r.note("vacuous", "no eligible pairs");
    }
    if let Some((a, b, x)) = failures.first() {
        r = r.note("first_failure", format!("a={a} b={b} x={x}"));
    }
    Ok(r)
}
