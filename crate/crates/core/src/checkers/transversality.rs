use rayon::prelude::*;

use crate::geometry::{sample_near, Point, Scene};
use crate::slopes::{coupling_value, field_pairs, PairFilter, Region};

use super::certificate::zero_slope_certificate;
use super::property_t::M_LADDER;
use super::subtr::subtr_core;
use super::{require_common_point, CheckError, CheckerConfig, Property, PropertyReport, Verdict};

const DIRECTIONAL_LEVELS: i32 = 6;
const DIRECTIONAL_SAMPLES: usize = 16;

/// Translations of `B`: per axis `delta/2 * (2j/(count-1) - 1)`, kept when
/// shorter than `delta`, ordered by norm (ties: lexicographically largest first).
pub fn translation_grid(dim: usize, delta: f64, count: usize) -> Vec<Point> {
    let axis: Vec<f64> = if count == 1 {
        vec![0.0]
    } else {
        (0..count).map(|j| 0.5 * delta * (2.0 * j as f64 / (count - 1) as f64 - 1.0)).collect()
    };
    let mut coords: Vec<Vec<f64>> = vec![Vec::new()];
    for _ in 0..dim {
        coords = coords.iter().flat_map(|c| axis.iter().map(move |&v| [c.as_slice(), &[v]].concat())).collect();
    }
    let mut out: Vec<Point> = coords.into_iter().map(Point::new).filter(|b| b.norm() < delta).collect();
    out.sort_by(|a, b| a.norm().total_cmp(&b.norm()).then_with(|| b.lex_cmp(a)));
    out.dedup();
    out
}

/// Move from `x` toward `z` by at most `r`.
fn capped_step(x: &Point, z: &Point, r: f64) -> Option<Point> {
    let d = x.dist(z);
    (d > 0.0).then(|| x.offset(r.min(d) / d, &(z - x)))
}

/// Least ladder `M` such that some move of both points by at most `M * t`
/// lowers the distance by `min(t, gap)`.
fn directional_constant(scene: &Scene, x: &Point, y: &Point, t: f64, seed: u64) -> Option<f64> {
    let gap = x.dist(y);
    let target = t.min(gap);
    let e = (y - x).normalized()?;
    M_LADDER.iter().copied().find(|m| {
        let r = m * t;
        let mut us = sample_near(&scene.a, x, r, DIRECTIONAL_SAMPLES, seed);
        let mut vs = sample_near(&scene.b, y, r, DIRECTIONAL_SAMPLES, seed ^ 1);
        let mid = x.midpoint(y);
        for s in [r, 0.5 * gap.min(r)] {
            us.push(scene.a.project(&x.offset(s, &e)));
            vs.push(scene.b.project(&y.offset(-s, &e)));
        }
        us.extend([scene.a.project(y), scene.a.project(&mid)]);
        vs.extend([scene.b.project(x), scene.b.project(&mid)]);
        for z in [y.clone(), scene.a.project(y), mid.clone(), scene.xbar.clone()] {
            us.extend(capped_step(x, &z, r).filter(|u| scene.in_a(u)));
        }
        for z in [x.clone(), scene.b.project(x), mid.clone(), scene.xbar.clone()] {
            vs.extend(capped_step(y, &z, r).filter(|v| scene.in_b(v)));
        }
        us.retain(|u| u.dist(x) <= r * (1.0 + 1e-12));
        vs.retain(|v| v.dist(y) <= r * (1.0 + 1e-12));
        us.iter().any(|u| vs.iter().any(|v| gap - coupling_value(scene, u, v) >= target * (1.0 - 1e-12)))
    })
}

/// Subtransversality of `A` and `B - b` for a grid of small translations `b`,
/// plus a directional decrease test on sampled pairs.
pub fn check_transversality(scene: &Scene, cfg: &CheckerConfig) -> Result<PropertyReport, CheckError> {
    cfg.validate()?;
    if let Some(r) = require_common_point(scene, Property::Transversality) {
        return Ok(r.constant("delta", cfg.delta));
    }
    if let Some(cert) = zero_slope_certificate(scene, cfg.delta, false) {
        return Ok(PropertyReport::failing(
            Property::Transversality,
            cert,
            "a pair near the reference point admits no local decrease",
        )
        .constant("delta", cfg.delta));
    }
    let grid = translation_grid(scene.dimension, cfg.delta, cfg.translation_count);
    let mut k_worst = 0.0f64;
    let mut exact = true;
    for b in &grid {
        let out = subtr_core(scene, cfg, b);
        exact &= out.exact;
        if let Some(cert) = out.certificate {
            return Ok(PropertyReport::failing(
                Property::Transversality,
                cert,
                format!("translated sets A and B - ({b}) are not subtransversal"),
            )
            .constant("delta", cfg.delta)
            .note("translations", grid.len()));
        }
        k_worst = k_worst.max(out.k);
    }

    let region = Region { center: scene.xbar.clone(), radius: cfg.delta, grid_count: cfg.grid_count };
    let pairs = field_pairs(scene, &region, PairFilter::AllDistinct);
    let lambda = cfg.delta / 4.0;
    let m_dir: Vec<Option<f64>> = pairs
        .par_iter()
        .map(|(x, y)| {
            (0..DIRECTIONAL_LEVELS)
                .map(|j| directional_constant(scene, x, y, lambda * 2f64.powi(-j), scene.seed ^ j as u64))
                .try_fold(0.0f64, |acc, m| m.map(|m| acc.max(m)))
        })
        .collect();
    let m_worst = m_dir.iter().try_fold(0.0f64, |acc, m| m.map(|m| acc.max(m)));
    let verdict =
        if k_worst <= cfg.k_max && m_worst.is_some() { Verdict::HoldsAtResolution } else { Verdict::Inconclusive };
    let mut r = PropertyReport::new(Property::Transversality, verdict)
        .constant("K", k_worst)
        .constant("delta", cfg.delta)
        .note("translations", grid.len())
        .note("directional_pairs", pairs.len())
        .note("directional_steps", format!("delta/4 * 2^-j, j < {DIRECTIONAL_LEVELS}"))
        .note("intersection_proxy", if exact { "exact" } else { "dykstra" });
    if let Some(m) = m_worst {
        r = r.constant("M", m);
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checkers::Certificate;
    use crate::geometry::fixtures;

    fn cfg() -> CheckerConfig {
        let mut c = CheckerConfig { grid_count: 8, ..CheckerConfig::default() };
        c.slope.samples_per_radius = 256;
        c
    }

    #[test]
    fn grid_shape() {
        let g = translation_grid(2, 1.0, 3);
        assert_eq!(g.len(), 9);
        assert_eq!(g[0], Point::from([0.0, 0.0]));
        assert_eq!(g[1], Point::from([0.5, 0.0]));
        assert_eq!(g[2], Point::from([0.0, 0.5]));
        assert_eq!(translation_grid(3, 1.0, 1), vec![Point::zeros(3)]);
    }

    #[test]
    fn axes_hold() {
        let r = check_transversality(&fixtures::axes(), &cfg()).unwrap();
        assert!(r.holds(), "{r:?}");
        assert!((r.get("K").unwrap() - 1.0).abs() < 0.02);
    }

    #[test]
    fn coincident_lines_fail_at_vertical_shift() {
        let s = fixtures::coincident_lines();
        let r = check_transversality(&s, &cfg()).unwrap();
        assert!(r.fails());
        let cert = r.witness.unwrap().certificate;
        assert_eq!(cert, Certificate::EmptyIntersection { translation: Point::from([0.0, 0.5]) });
        cert.validate(&s).unwrap();
    }

    #[test]
    fn balls() {
        let s = fixtures::tangent_balls();
        let r = check_transversality(&s, &CheckerConfig { delta: 0.5, ..cfg() }).unwrap();
        assert!(r.fails());
        r.witness.unwrap().certificate.validate(&s).unwrap();
        let r = check_transversality(&fixtures::nested_balls(), &CheckerConfig { delta: 0.5, ..cfg() }).unwrap();
        assert!(r.holds(), "{r:?}");
    }
}
