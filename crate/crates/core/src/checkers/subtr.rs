use std::cmp::Ordering;

use rayon::prelude::*;

use crate::geometry::{flatten, unit_directions, Piece, Point, Scene};

use super::certificate::Certificate;
use super::proxy::IntersectionProxy;
use super::{require_common_point, CheckError, CheckerConfig, Property, PropertyReport, Verdict};

/// Smallest grid radius.
pub const RADIUS_FLOOR: f64 = 1e-7;
/// Denominators below this are skipped.
pub const DEN_FLOOR: f64 = 1e-12;
pub const GROWTH_FACTOR: f64 = 1.8;
pub const GROWTH_LEVELS: usize = 12;
const FAMILY_LEVELS: i32 = 24;

/// `d(x, A ∩ B) / (d(x, A) + d(x, B))`, `None` for a vanishing denominator.
pub(crate) fn subtr_ratio(scene: &Scene, proxy: &IntersectionProxy, x: &Point) -> Option<f64> {
    let den = scene.a.distance(x) + scene.b.distance(x);
    (den >= DEN_FLOOR).then(|| proxy.distance(x) / den)
}

/// Radii `2^(k/2)` in `[RADIUS_FLOOR, delta]`, largest first. The lattice does
/// not depend on `delta`, so grids for nested balls are nested.
fn lattice_radii(delta: f64) -> Vec<f64> {
    let hi = (2.0 * delta.log2()).floor() as i32;
    let lo = (2.0 * RADIUS_FLOOR.log2()).ceil() as i32;
    (lo..=hi)
        .rev()
        .map(|k| {
            let half = 2f64.powi(k.div_euclid(2));
            if k.rem_euclid(2) == 1 {
                half * std::f64::consts::SQRT_2
            } else {
                half
            }
        })
        .collect()
}

/// Grid of the `delta`-ball around `xbar`: directions times lattice radii.
pub fn subtransversality_grid(xbar: &Point, delta: f64, grid_count: usize) -> Vec<Point> {
    let dirs = unit_directions(xbar.dim(), 2 * grid_count);
    let mut out = Vec::new();
    for r in lattice_radii(delta) {
        for d in &dirs {
            out.push(xbar.offset(r, d));
        }
    }
    out
}

/// Minimum growth factor if every consecutive ratio grows by at least
/// [`GROWTH_FACTOR`] over at least [`GROWTH_LEVELS`] halvings.
pub(crate) fn divergence_run(samples: &[(f64, f64)]) -> Option<f64> {
    if samples.len() < GROWTH_LEVELS + 1 {
        return None;
    }
    let mut min = f64::INFINITY;
    for w in samples.windows(2) {
        let g = w[1].1 / w[0].1;
        if !(w[0].1 > 0.0 && g >= GROWTH_FACTOR && (w[1].0 - 0.5 * w[0].0).abs() <= 1e-15 * w[0].0) {
            return None;
        }
        min = min.min(g);
    }
    Some(min)
}

fn family_directions(scene: &Scene) -> Vec<Point> {
    let dim = scene.dimension;
    let axes: Vec<Point> = (0..dim)
        .map(|i| {
            let mut e = vec![0.0; dim];
            e[i] = 1.0;
            Point::new(e)
        })
        .collect();
    let mut dirs = axes.clone();
    let tangent_axes = |n: &Point, dirs: &mut Vec<Point>| {
        dirs.extend(axes.iter().filter_map(|e| e.offset(-e.dot(n), n).normalized()));
    };
    for piece in flatten(&scene.a).iter().chain(flatten(&scene.b).iter()) {
        match piece {
            Piece::Linear { dir, .. } => dirs.push(dir.clone()),
            Piece::Ball { center, .. } => {
                if let Some(n) = (&scene.xbar - center).normalized() {
                    tangent_axes(&n, &mut dirs);
                }
            }
            Piece::Halfspace { normal, .. } => tangent_axes(normal, &mut dirs),
            _ => {}
        }
    }
    let mut out: Vec<Point> = Vec::new();
    for d in dirs.into_iter().flat_map(|d| [d.clone(), &d * -1.0]) {
        if !out.iter().any(|o| o.dist(&d) < 1e-12) {
            out.push(d);
        }
    }
    out
}

/// Longest sustained-growth run along a fixed direction through `xbar`.
fn find_divergence(scene: &Scene, proxy: &IntersectionProxy, translation: &Point) -> Option<Certificate> {
    let mut best: Option<(usize, Certificate)> = None;
    for dir in family_directions(scene) {
        let mut run: Vec<(f64, f64)> = Vec::new();
        let mut longest: Vec<(f64, f64)> = Vec::new();
        for j in 1..=FAMILY_LEVELS {
            let t = 2f64.powi(-j);
            let r = subtr_ratio(scene, proxy, &scene.xbar.offset(t, &dir));
            match r {
                Some(r) if r.is_finite() && run.last().is_some_and(|&(_, p)| p > 0.0 && r / p >= GROWTH_FACTOR) => {
                    run.push((t, r))
                }
                Some(r) if r.is_finite() => run = vec![(t, r)],
                _ => run.clear(),
            }
            if run.len() > longest.len() {
                longest = run.clone();
            }
        }
        if let Some(g) = divergence_run(&longest) {
            if best.as_ref().is_none_or(|(n, _)| longest.len() > *n) {
                let cert = Certificate::RatioDivergence {
                    translation: translation.clone(),
                    base: scene.xbar.clone(),
                    direction: dir,
                    min_growth: g,
                    samples: longest.clone(),
                };
                best = Some((longest.len(), cert));
            }
        }
    }
    best.map(|(_, c)| c)
}

pub(crate) struct SubtrOutcome {
    pub k: f64,
    pub witness: Option<Point>,
    pub certificate: Option<Certificate>,
    pub exact: bool,
    pub points: usize,
}

/// Subtransversality ratio over the grid for `A` and `B - translation`.
pub(crate) fn subtr_core(scene: &Scene, cfg: &CheckerConfig, translation: &Point) -> SubtrOutcome {
    let s = scene.translated(&Point::zeros(scene.dimension), translation);
    let proxy = IntersectionProxy::build(&s);
    let exact = proxy.is_exact();
    if exact && proxy.is_empty() {
        let certificate = Some(Certificate::EmptyIntersection { translation: translation.clone() });
        return SubtrOutcome { k: f64::INFINITY, witness: None, certificate, exact, points: 0 };
    }
    let certificate = if exact { find_divergence(&s, &proxy, translation) } else { None };
    let grid = subtransversality_grid(&s.xbar, cfg.delta, cfg.grid_count);
    let best = grid.par_iter().filter_map(|x| subtr_ratio(&s, &proxy, x).map(|r| (r, x))).reduce_with(|a, b| {
        match a.0.total_cmp(&b.0) {
            Ordering::Greater => a,
            Ordering::Less => b,
            Ordering::Equal => {
                if b.1.lex_cmp(a.1) == Ordering::Less {
                    b
                } else {
                    a
                }
            }
        }
    });
    let (k, witness) = best.map_or((0.0, None), |(r, x)| (r, Some(x.clone())));
    SubtrOutcome { k, witness, certificate, exact, points: grid.len() }
}

pub fn check_subtransversality(scene: &Scene, cfg: &CheckerConfig) -> Result<PropertyReport, CheckError> {
    cfg.validate()?;
    if let Some(r) = require_common_point(scene, Property::Subtransversality) {
        return Ok(r.constant("delta", cfg.delta));
    }
    let out = subtr_core(scene, cfg, &Point::zeros(scene.dimension));
    let report = match out.certificate {
        Some(c) => PropertyReport::failing(
            Property::Subtransversality,
            c,
            "distance to the intersection grows without bound relative to the distances to A and B",
        ),
        None if out.k <= cfg.k_max => PropertyReport::new(Property::Subtransversality, Verdict::HoldsAtResolution),
        None => PropertyReport::new(Property::Subtransversality, Verdict::Inconclusive),
    };
    let mut report = report
        .constant("K", out.k)
        .constant("delta", cfg.delta)
        .note("grid_points", out.points)
        .note("radius_floor", RADIUS_FLOOR)
        .note("intersection_proxy", if out.exact { "exact" } else { "dykstra" });
    if let Some(x) = out.witness {
        report = report.note("worst_point", x);
    }
    Ok(report)
}
