use std::cmp::Ordering;

use rayon::prelude::*;

use crate::geometry::{Point, Scene};
use crate::slopes::{field_pairs, local_slope_value, proximal_pairs, PairFilter, Region};

use super::certificate::zero_slope_certificate;
use super::{require_common_point, CheckError, CheckerConfig, Property, PropertyReport, Verdict};

/// Sampling radii `delta * SCALE_FACTOR^k`, `k < SCALE_LEVELS`.
pub const SCALE_LEVELS: i32 = 6;
pub const SCALE_FACTOR: f64 = 0.25;
/// A value changing by this factor over each of the last `TREND_LEVELS`
/// radii is read as drifting to zero or infinity.
pub const TREND_FACTOR: f64 = 1.8;
pub const TREND_LEVELS: usize = 3;

struct MinSlope {
    kappa: f64,
    pair: (Point, Point),
}

fn min_local_slope(
    scene: &Scene,
    pairs: &[(Point, Point)],
    cfg: &CheckerConfig,
) -> Result<Option<MinSlope>, CheckError> {
    let values = pairs
        .par_iter()
        .map(|(x, y)| {
            local_slope_value(scene, x, y, &cfg.slope).map(|kappa| MinSlope { kappa, pair: (x.clone(), y.clone()) })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(values.into_iter().reduce(|a, b| match b.kappa.total_cmp(&a.kappa) {
        Ordering::Less => b,
        _ => a,
    }))
}

fn slope_check(scene: &Scene, cfg: &CheckerConfig, property: Property) -> Result<PropertyReport, CheckError> {
    cfg.validate()?;
    if let Some(r) = require_common_point(scene, property) {
        return Ok(r.constant("delta", cfg.delta));
    }
    let exclusive = property == Property::Intrinsic;
    if let Some(cert) = zero_slope_certificate(scene, cfg.delta, exclusive) {
        return Ok(PropertyReport::failing(
            property,
            cert,
            "isolated point whose partner is a nearest point of the other set: no local decrease exists",
        )
        .constant("kappa", 0.0)
        .constant("delta", cfg.delta));
    }
    let filter = if exclusive { PairFilter::ExcludeCommonPoints } else { PairFilter::AllDistinct };
    let mut levels: Vec<(f64, usize, Option<MinSlope>)> = Vec::new();
    for k in 0..SCALE_LEVELS {
        let radius = cfg.delta * SCALE_FACTOR.powi(k);
        let region = Region { center: scene.xbar.clone(), radius, grid_count: cfg.grid_count };
        let mut pairs = field_pairs(scene, &region, filter);
        pairs.extend(proximal_pairs(scene, &region, filter));
        levels.push((radius, pairs.len(), min_local_slope(scene, &pairs, cfg)?));
    }
    let total: usize = levels.iter().map(|l| l.1).sum();
    let per_level = levels
        .iter()
        .map(|(r, _, m)| format!("{r}: {}", m.as_ref().map_or("none".to_string(), |m| m.kappa.to_string())))
        .collect::<Vec<_>>()
        .join(", ");
    let base = |verdict| {
        PropertyReport::new(property, verdict)
            .constant("delta", cfg.delta)
            .note("pairs", total)
            .note("points_per_set", cfg.grid_count)
            .note("samples_per_radius", cfg.slope.samples_per_radius)
            .note("pair_filter", if exclusive { "exclude_common_points" } else { "all_distinct" })
            .note("min_slope_by_radius", &per_level)
    };
    let minima: Vec<f64> = levels.iter().filter_map(|l| l.2.as_ref().map(|m| m.kappa)).collect();
    let Some(min) = levels.into_iter().filter_map(|l| l.2).reduce(|a, b| if b.kappa < a.kappa { b } else { a }) else {
        return Ok(base(Verdict::HoldsAtResolution).note("vacuous", "no eligible pairs"));
    };
    let shrinking =
        minima.len() > TREND_LEVELS && minima.windows(2).rev().take(TREND_LEVELS).all(|w| w[1] * TREND_FACTOR <= w[0]);
    let verdict =
        if min.kappa >= cfg.kappa_min && !shrinking { Verdict::HoldsAtResolution } else { Verdict::Inconclusive };
    let mut r = base(verdict).constant("kappa", min.kappa).note("worst_pair", format!("{} {}", min.pair.0, min.pair.1));
    if shrinking {
        r = r.note("trend", "minimum slope keeps shrinking toward the reference point");
    }
    Ok(r)
}

/// Minimum local slope of the coupling function over distinct sampled pairs
/// near the reference point.
pub fn check_tangential(scene: &Scene, cfg: &CheckerConfig) -> Result<PropertyReport, CheckError> {
    slope_check(scene, cfg, Property::Tangential)
}

/// As [`check_tangential`] with pairs restricted to `(A \ B) x (B \ A)`.
pub fn check_intrinsic(scene: &Scene, cfg: &CheckerConfig) -> Result<PropertyReport, CheckError> {
    slope_check(scene, cfg, Property::Intrinsic)
}
