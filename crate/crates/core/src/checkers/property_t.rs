use rayon::prelude::*;

use crate::geometry::{Point, Scene};
use crate::slopes::{
    coupling_value, field_pairs, nonlocal_candidates, proximal_pairs, PairFilter, Region, SlopeConfig,
};

use super::certificate::Certificate;
use super::slope_checks::{SCALE_FACTOR, SCALE_LEVELS, TREND_FACTOR, TREND_LEVELS};
use super::{require_common_point, CheckError, CheckerConfig, Property, PropertyReport, Verdict};

/// Candidate values of `M`: `1, 2, 4, ..., 2^20`.
pub const M_LADDER: [f64; 21] = {
    let mut l = [1.0; 21];
    let mut i = 1;
    while i < 21 {
        l[i] = l[i - 1] * 2.0;
        i += 1;
    }
    l
};

/// Smallest `max(|x - u|, |y - v|) / decrease` over decreasing candidates.
fn step_constant(scene: &Scene, x: &Point, y: &Point, cfg: &SlopeConfig) -> f64 {
    let gap = x.dist(y);
    nonlocal_candidates(scene, x, y, cfg)
        .iter()
        .filter_map(|(u, v)| {
            let dec = gap - coupling_value(scene, u, v);
            (dec > 0.0).then(|| x.dist(u).max(y.dist(v)) / dec)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Least `M` on [`M_LADDER`] for which every sampled distinct pair near the
/// reference point admits a decreasing step with displacements at most `M * theta`.
pub fn check_property_t(scene: &Scene, cfg: &CheckerConfig) -> Result<PropertyReport, CheckError> {
    cfg.validate()?;
    let dist_a = scene.a.distance(&scene.xbar);
    if dist_a > cfg.delta / 6.0 {
        return Ok(PropertyReport::failing(
            Property::PropertyT,
            Certificate::NonemptinessClause { delta: cfg.delta, dist_a },
            "A misses the clause ball for every M >= 1",
        )
        .constant("delta", cfg.delta));
    }
    if let Some(r) = require_common_point(scene, Property::PropertyT) {
        return Ok(r.constant("delta", cfg.delta));
    }
    let mut pairs: Vec<(Point, Point)> = Vec::new();
    let mut needed: Vec<f64> = Vec::new();
    let mut level_worst = Vec::new();
    for k in 0..SCALE_LEVELS {
        let radius = cfg.delta * SCALE_FACTOR.powi(k);
        let region = Region { center: scene.xbar.clone(), radius, grid_count: cfg.grid_count };
        let mut level = field_pairs(scene, &region, PairFilter::AllDistinct);
        level.extend(proximal_pairs(scene, &region, PairFilter::AllDistinct));
        let n: Vec<f64> = level.par_iter().map(|(x, y)| step_constant(scene, x, y, &cfg.slope)).collect();
        if !n.is_empty() {
            level_worst.push(n.iter().copied().fold(0.0, f64::max));
        }
        pairs.extend(level);
        needed.extend(n);
    }
    let (worst, idx) =
        needed.iter().enumerate().fold((0.0f64, None), |(w, i), (j, &n)| if n > w { (n, Some(j)) } else { (w, i) });
    let growing = level_worst.len() > TREND_LEVELS
        && level_worst.windows(2).rev().take(TREND_LEVELS).all(|w| w[1] >= TREND_FACTOR * w[0]);
    let base = |v| {
        PropertyReport::new(Property::PropertyT, v)
            .constant("delta", cfg.delta)
            .note("pairs", pairs.len())
            .note("m_ladder", "1, 2, 4, ..., 2^20")
            .note("samples_per_radius", cfg.slope.samples_per_radius)
            .note("m_needed_by_level", level_worst.iter().map(|w| w.to_string()).collect::<Vec<_>>().join(", "))
    };
    let m = M_LADDER.iter().copied().find(|m| *m >= worst && dist_a <= cfg.delta / (2.0 * (1.0 + 2.0 * m)));
    Ok(match m {
        Some(m) if !growing => base(Verdict::HoldsAtResolution).constant("M", m).constant("M_needed", worst),
        _ => {
            let mut r = base(Verdict::Inconclusive).constant("M_needed", worst);
            if growing {
                r = r.note("trend", "required M keeps growing toward the reference point");
            }
            if let Some(i) = idx {
                r = r.note("worst_pair", format!("{} {}", pairs[i].0, pairs[i].1));
            }
            r
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{fixtures, Shape};

    fn cfg() -> CheckerConfig {
        let mut c = CheckerConfig { grid_count: 8, ..CheckerConfig::default() };
        c.slope.samples_per_radius = 256;
        c
    }

    #[test]
    fn ladder() {
        assert_eq!(M_LADDER[0], 1.0);
        assert_eq!(M_LADDER[20], 1048576.0);
    }

    #[test]
    fn axes_hold_with_small_m() {
        let r = check_property_t(&fixtures::axes(), &cfg()).unwrap();
        assert!(r.holds());
        assert!(r.get("M").unwrap() <= 2.0);
    }

    #[test]
    fn paper_example_holds() {
        let r = check_property_t(&fixtures::paper_example(30), &cfg()).unwrap();
        assert!(r.holds(), "{r:?}");
    }

    #[test]
    fn clause_failure() {
        let s =
            Scene::new(Shape::line([0.0, 1.0], [1.0, 0.0]), Shape::line([0.0, 0.0], [0.0, 1.0]), [0.0, 0.0]).unwrap();
        let r = check_property_t(&s, &cfg()).unwrap();
        assert!(r.fails());
        r.witness.unwrap().certificate.validate(&s).unwrap();
    }

    #[test]
    fn tangent_balls_need_unbounded_m() {
        let r = check_property_t(&fixtures::tangent_balls(), &cfg()).unwrap();
        assert_eq!(r.verdict, Verdict::Inconclusive, "{r:?}");
        assert!(r.sampling.contains_key("trend"));
    }
}
