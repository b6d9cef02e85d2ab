//! The coupling function on `A x B` (sum metric on the product) and sampled
//! lower bounds for its local and nonlocal slopes.

use std::cmp::Ordering;
use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{sample_near, GeometryError, Point, Scene};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SlopeConfig {
    pub radii: Vec<f64>,
    pub samples_per_radius: usize,
    pub nonlocal_search_radius: f64,
    pub seed: u64,
}

impl Default for SlopeConfig {
    fn default() -> Self {
        SlopeConfig {
            radii: vec![0.1, 0.03, 0.01, 0.003, 0.001],
            samples_per_radius: 4096,
            nonlocal_search_radius: 10.0,
            seed: 0,
        }
    }
}

impl SlopeConfig {
    pub fn validate(&self) -> Result<(), SlopeError> {
        if self.radii.is_empty() {
            return Err(SlopeError::Config("radii must be nonempty".into()));
        }
        if self.radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(SlopeError::Config("radii must be positive and finite".into()));
        }
        if self.radii.windows(2).any(|w| w[1] >= w[0]) {
            return Err(SlopeError::Config("radii must be strictly decreasing".into()));
        }
        if self.samples_per_radius == 0 {
            return Err(SlopeError::Config("samples_per_radius must be >= 1".into()));
        }
        if !(self.nonlocal_search_radius.is_finite() && self.nonlocal_search_radius > 0.0) {
            return Err(SlopeError::Config("nonlocal_search_radius must be positive".into()));
        }
        Ok(())
    }

    /// Points drawn per set and tier; the pair budget is its square.
    pub fn per_set(&self) -> usize {
        ((self.samples_per_radius as f64).sqrt().ceil() as usize).max(1)
    }
}

#[derive(Debug, Error)]
pub enum SlopeError {
    #[error("base pair is infeasible: x in A = {x_in_a}, y in B = {y_in_b}")]
    Infeasible { x_in_a: bool, y_in_b: bool },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("invalid slope config: {0}")]
    Config(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlopeKind {
    Local,
    Nonlocal,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlopeEstimate {
    pub value: f64,
    pub kind: SlopeKind,
    pub best_witness: (Point, Point),
    /// `(radius, best ratio)` per tier that had candidates.
    pub per_radius: Vec<(f64, f64)>,
    pub config: SlopeConfig,
    pub is_lower_bound: bool,
}

/// `||x - y||` on `A x B`, `+inf` elsewhere.
pub fn coupling_value(scene: &Scene, x: &Point, y: &Point) -> f64 {
    if scene.in_a(x) && scene.in_b(y) {
        x.dist(y)
    } else {
        f64::INFINITY
    }
}

/// Normalized decrease `max(phi(x,y) - phi(u,v), 0) / (|x-u| + |y-v|)`,
/// capped at 1. Zero for a zero denominator or an infeasible `(u, v)`.
pub fn decrease_ratio(scene: &Scene, x: &Point, y: &Point, u: &Point, v: &Point) -> f64 {
    let den = x.dist(u) + y.dist(v);
    if den == 0.0 {
        return 0.0;
    }
    let num = coupling_value(scene, x, y) - coupling_value(scene, u, v);
    if num.is_nan() || num <= 0.0 {
        0.0
    } else {
        (num / den).min(1.0)
    }
}

fn check_base(scene: &Scene, x: &Point, y: &Point) -> Result<(), SlopeError> {
    for p in [x, y] {
        if p.dim() != scene.dimension {
            return Err(GeometryError::DimensionMismatch {
                expected: scene.dimension,
                found: p.dim(),
                context: "slope base pair".into(),
            }
            .into());
        }
    }
    let (x_in_a, y_in_b) = (scene.in_a(x), scene.in_b(y));
    if x_in_a && y_in_b {
        Ok(())
    } else {
        Err(SlopeError::Infeasible { x_in_a, y_in_b })
    }
}

fn mix(seed: u64, salt: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Steered points land on the tier sphere up to rounding.
const RADIUS_SLACK: f64 = 1.0 + 1e-12;

/// Candidate pairs for one radius tier.
fn tier_candidates(scene: &Scene, x: &Point, y: &Point, r: f64, m: usize, salt: u64) -> Vec<(Point, Point)> {
    let mut us = sample_near(&scene.a, x, r, m, mix(scene.seed, salt.wrapping_mul(2)));
    let mut vs = sample_near(&scene.b, y, r, m, mix(scene.seed, salt.wrapping_mul(2) | 1));
    // Keeping one point fixed is a legal move.
    us.push(x.clone());
    vs.push(y.clone());
    if let Some(e) = (y - x).normalized() {
        let u = scene.a.project(&x.offset(r, &e));
        if u.dist(x) <= r * RADIUS_SLACK {
            us.push(u);
        }
        let v = scene.b.project(&y.offset(-r, &e));
        if v.dist(y) <= r * RADIUS_SLACK {
            vs.push(v);
        }
    }
    let mut out = Vec::with_capacity(us.len() * vs.len());
    for u in &us {
        for v in &vs {
            if !(u == x && v == y) {
                out.push((u.clone(), v.clone()));
            }
        }
    }
    out
}

/// Alternating-projection chains and common points: far candidates that
/// uniform sampling tends to miss.
fn structural_candidates(scene: &Scene, x: &Point, y: &Point, radius: f64, m: usize) -> Vec<(Point, Point)> {
    let mut out = Vec::new();
    let u = scene.a.project(y);
    out.push((u.clone(), scene.b.project(&u)));
    for start in [x.clone(), x.midpoint(y)] {
        let mut u = scene.a.project(&start);
        for _ in 0..32 {
            let v = scene.b.project(&u);
            out.push((u.clone(), v.clone()));
            let next = scene.a.project(&v);
            out.push((next.clone(), v));
            if next == u {
                break;
            }
            u = next;
        }
    }
    let us = sample_near(&scene.a, x, radius, m, mix(scene.seed, 0xA11));
    let vs = sample_near(&scene.b, y, radius, m, mix(scene.seed, 0xB11));
    for c in us.into_iter().filter(|c| scene.in_b(c)).chain(vs.into_iter().filter(|c| scene.in_a(c))) {
        out.push((c.clone(), c));
    }
    out.retain(|(u, v)| u.dist(x) <= radius && v.dist(y) <= radius && !(u == x && v == y));
    out
}

#[derive(Clone)]
struct Best {
    ratio: f64,
    u: Point,
    v: Point,
}

fn better(a: Best, b: Best) -> Best {
    match a.ratio.total_cmp(&b.ratio) {
        Ordering::Greater => a,
        Ordering::Less => b,
        Ordering::Equal => {
            let ord = a.u.lex_cmp(&b.u).then_with(|| a.v.lex_cmp(&b.v));
            if ord == Ordering::Greater {
                b
            } else {
                a
            }
        }
    }
}

/// Order-independent maximum of the ratio over `cands`.
fn best_of(scene: &Scene, x: &Point, y: &Point, cands: &[(Point, Point)]) -> Option<Best> {
    cands
        .par_iter()
        .map(|(u, v)| Best { ratio: decrease_ratio(scene, x, y, u, v), u: u.clone(), v: v.clone() })
        .reduce_with(better)
}

fn estimate(
    kind: SlopeKind,
    x: &Point,
    y: &Point,
    best: Option<Best>,
    per_radius: Vec<(f64, f64)>,
    cfg: &SlopeConfig,
) -> SlopeEstimate {
    let (value, best_witness) = match best {
        Some(b) => (b.ratio, (b.u, b.v)),
        None => (0.0, (x.clone(), y.clone())),
    };
    SlopeEstimate { value, kind, best_witness, per_radius, config: cfg.clone(), is_lower_bound: true }
}

/// Configured radii, then `gap/4` and `gap/16` when the pair is closer than
/// the finest configured radius allows to resolve.
fn tier_radii(cfg: &SlopeConfig, gap: f64) -> Vec<f64> {
    let mut radii = cfg.radii.clone();
    let finest = *radii.last().expect("validated nonempty");
    for r in [gap / 4.0, gap / 16.0] {
        if r > 0.0 && r < finest && radii.last().is_some_and(|l| r < *l) {
            radii.push(r);
        }
    }
    radii
}

fn tiers(scene: &Scene, x: &Point, y: &Point, cfg: &SlopeConfig) -> Vec<(f64, Vec<(Point, Point)>)> {
    let m = cfg.per_set();
    tier_radii(cfg, x.dist(y))
        .into_iter()
        .enumerate()
        .map(|(i, r)| (r, tier_candidates(scene, x, y, r, m, mix(cfg.seed, i as u64 + 1))))
        .collect()
}

/// Local slope of the coupling function at `(x, y)`, read from the smallest
/// radius tier that has candidates.
pub fn local_slope(scene: &Scene, x: &Point, y: &Point, cfg: &SlopeConfig) -> Result<SlopeEstimate, SlopeError> {
    cfg.validate()?;
    check_base(scene, x, y)?;
    let mut per_radius = Vec::new();
    let mut last = None;
    for (r, cands) in tiers(scene, x, y, cfg) {
        if let Some(b) = best_of(scene, x, y, &cands) {
            per_radius.push((r, b.ratio));
            last = Some(b);
        }
    }
    Ok(estimate(SlopeKind::Local, x, y, last, per_radius, cfg))
}

/// `local_slope(..).value` without evaluating the coarser tiers.
pub fn local_slope_value(scene: &Scene, x: &Point, y: &Point, cfg: &SlopeConfig) -> Result<f64, SlopeError> {
    cfg.validate()?;
    check_base(scene, x, y)?;
    let m = cfg.per_set();
    for (i, r) in tier_radii(cfg, x.dist(y)).into_iter().enumerate().rev() {
        if let Some(b) = best_of(scene, x, y, &tier_candidates(scene, x, y, r, m, mix(cfg.seed, i as u64 + 1))) {
            return Ok(b.ratio);
        }
    }
    Ok(0.0)
}

/// Nonlocal slope of the coupling function at `(x, y)`, searched within
/// `nonlocal_search_radius`. The candidate set contains every local-tier
/// candidate, so the result never falls below `local_slope`.
pub fn nonlocal_slope(scene: &Scene, x: &Point, y: &Point, cfg: &SlopeConfig) -> Result<SlopeEstimate, SlopeError> {
    cfg.validate()?;
    check_base(scene, x, y)?;
    let big = cfg.nonlocal_search_radius;
    let m = cfg.per_set();
    let mut per_radius = Vec::new();
    let mut best: Option<Best> = None;
    let mut groups = vec![(big, tier_candidates(scene, x, y, big, m, mix(cfg.seed, 0)))];
    groups.extend(tiers(scene, x, y, cfg));
    for (r, cands) in groups {
        if let Some(b) = best_of(scene, x, y, &cands) {
            per_radius.push((r, b.ratio));
            best = Some(match best {
                Some(a) => better(a, b),
                None => b,
            });
        }
    }
    if let Some(b) = best_of(scene, x, y, &structural_candidates(scene, x, y, big, m)) {
        best = Some(match best {
            Some(a) => better(a, b),
            None => b,
        });
    }
    Ok(estimate(SlopeKind::Nonlocal, x, y, best, per_radius, cfg))
}

/// Every candidate pair the nonlocal estimator evaluates at `(x, y)`.
pub(crate) fn nonlocal_candidates(scene: &Scene, x: &Point, y: &Point, cfg: &SlopeConfig) -> Vec<(Point, Point)> {
    let m = cfg.per_set();
    let big = cfg.nonlocal_search_radius;
    let mut out = tier_candidates(scene, x, y, big, m, mix(cfg.seed, 0));
    for (_, c) in tiers(scene, x, y, cfg) {
        out.extend(c);
    }
    out.extend(structural_candidates(scene, x, y, big, m));
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub center: Point,
    pub radius: f64,
    pub grid_count: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairFilter {
    AllDistinct,
    ExcludeCommonPoints,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FieldRow {
    pub x: Point,
    pub y: Point,
    pub phi: f64,
    pub local: SlopeEstimate,
    pub nonlocal: SlopeEstimate,
}

/// Feasible pairs near `region.center`: `grid_count` sampled points of each set.
pub fn field_pairs(scene: &Scene, region: &Region, filter: PairFilter) -> Vec<(Point, Point)> {
    let xs = sample_near(&scene.a, &region.center, region.radius, region.grid_count, mix(scene.seed, 0xF1));
    let ys = sample_near(&scene.b, &region.center, region.radius, region.grid_count, mix(scene.seed, 0xF2));
    let mut out = Vec::new();
    for x in &xs {
        for y in &ys {
            let keep = match filter {
                PairFilter::AllDistinct => x != y,
                PairFilter::ExcludeCommonPoints => !scene.in_b(x) && !scene.in_a(y),
            };
            if keep {
                out.push((x.clone(), y.clone()));
            }
        }
    }
    out
}

/// Nearly proximal pairs: each sampled point with its projection onto the
/// other set, and that projection with its projection back.
pub fn proximal_pairs(scene: &Scene, region: &Region, filter: PairFilter) -> Vec<(Point, Point)> {
    let xs = sample_near(&scene.a, &region.center, region.radius, region.grid_count, mix(scene.seed, 0xF1));
    let ys = sample_near(&scene.b, &region.center, region.radius, region.grid_count, mix(scene.seed, 0xF2));
    let mut out = Vec::new();
    for x in &xs {
        let y = scene.b.project(x);
        let x2 = scene.a.project(&y);
        out.push((x.clone(), y.clone()));
        out.push((x2, y));
    }
    for y in &ys {
        let x = scene.a.project(y);
        let y2 = scene.b.project(&x);
        out.push((x.clone(), y.clone()));
        out.push((x, y2));
    }
    out.retain(|(x, y)| match filter {
        PairFilter::AllDistinct => x != y,
        PairFilter::ExcludeCommonPoints => !scene.in_b(x) && !scene.in_a(y),
    });
    out.sort_by(|a, b| a.0.lex_cmp(&b.0).then_with(|| a.1.lex_cmp(&b.1)));
    out.dedup();
    out
}

pub fn slope_field(
    scene: &Scene,
    region: &Region,
    cfg: &SlopeConfig,
    filter: PairFilter,
) -> Result<Vec<FieldRow>, SlopeError> {
    if region.grid_count == 0 {
        return Err(SlopeError::Config("grid_count must be >= 1".into()));
    }
    field_pairs(scene, region, filter)
        .into_iter()
        .map(|(x, y)| {
            let local = local_slope(scene, &x, &y, cfg)?;
            let nonlocal = nonlocal_slope(scene, &x, &y, cfg)?;
            Ok(FieldRow { phi: coupling_value(scene, &x, &y), x, y, local, nonlocal })
        })
        .collect()
}

pub fn write_field_csv<W: Write>(rows: &[FieldRow], dim: usize, out: &mut W) -> io::Result<()> {
    let cols = |p: &'static str| (1..=dim).map(move |i| format!("{p}_{i}"));
    let header: Vec<String> = cols("xA")
        .chain(cols("xB"))
        .chain(["phi".into(), "local_slope".into(), "nonlocal_slope".into()])
        .chain(cols("local_uA"))
        .chain(cols("local_vB"))
        .chain(cols("nonlocal_uA"))
        .chain(cols("nonlocal_vB"))
        .collect();
    writeln!(out, "{}", header.join(","))?;
    for r in rows {
        let mut vals: Vec<f64> = Vec::new();
        vals.extend(r.x.coords());
        vals.extend(r.y.coords());
        vals.extend([r.phi, r.local.value, r.nonlocal.value]);
        vals.extend(r.local.best_witness.0.coords());
        vals.extend(r.local.best_witness.1.coords());
        vals.extend(r.nonlocal.best_witness.0.coords());
        vals.extend(r.nonlocal.best_witness.1.coords());
        let cells: Vec<String> = vals.iter().map(|v| fmt_num(*v)).collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}

/// 17 significant digits.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}
