use serde::Serialize;

use crate::geometry::{flatten, intersect, Piece, Point, Scene};

use super::proxy::IntersectionProxy;
use super::subtr::{divergence_run, subtr_ratio};

const CERT_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Side {
    A,
    B,
}

/// Failure certificates. Each one re-validates against a scene with exact
/// distance and intersection oracles only.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Certificate {
    NotCommonPoint {
        xbar: Point,
        dist_a: f64,
        dist_b: f64,
    },
    /// `A ∩ (B - translation)` is empty: every piece pair intersects emptily.
    EmptyIntersection {
        translation: Point,
    },
    /// Subtransversality ratio along `base + t * direction` for the sets
    /// `A` and `B - translation`, growing by at least the recorded factor per halving of `t`.
    RatioDivergence {
        translation: Point,
        base: Point,
        direction: Point,
        samples: Vec<(f64, f64)>,
        min_growth: f64,
    },
    /// The point on `side` is isolated in its set within `radius`, and no point
    /// of the other set within `radius` of its partner is closer to it.
    ZeroLocalSlope {
        x: Point,
        y: Point,
        side: Side,
        radius: f64,
        delta: f64,
    },
    /// `A` misses the ball `B(xbar, delta / 6)`, the largest radius of the nonemptiness clause.
    NonemptinessClause {
        delta: f64,
        dist_a: f64,
    },
}

fn isolation(pieces: &[Piece], p: &Point, tol: f64) -> f64 {
    pieces
        .iter()
        .filter_map(|q| {
            let d = q.distance(p);
            (!(q.is_point() && d <= tol)).then_some(d)
        })
        .fold(f64::INFINITY, f64::min)
}

impl Certificate {
    pub fn validate(&self, scene: &Scene) -> Result<(), String> {
        let tol = scene.tol_membership;
        match self {
            Certificate::NotCommonPoint { xbar, dist_a, dist_b } => {
                let (da, db) = (scene.a.distance(xbar), scene.b.distance(xbar));
                if xbar != &scene.xbar {
                    return Err("certificate point differs from the reference point".into());
                }
                if (da - dist_a).abs() > CERT_TOL || (db - dist_b).abs() > CERT_TOL {
                    return Err("recorded distances do not match".into());
                }
                if da <= tol && db <= tol {
                    return Err("reference point is common to both sets".into());
                }
                Ok(())
            }
            Certificate::EmptyIntersection { translation } => {
                let s = scene.translated(&Point::zeros(scene.dimension), translation);
                let (pa, pb) = (flatten(&s.a), flatten(&s.b));
                for a in &pa {
                    for b in &pb {
                        match intersect(a, b, tol) {
                            Some(v) if v.is_empty() => {}
                            Some(_) => return Err("a piece pair intersects".into()),
                            None => return Err("a piece pair has no closed-form intersection".into()),
                        }
                    }
                }
                Ok(())
            }
            Certificate::RatioDivergence { translation, base, direction, samples, min_growth } => {
                let s = scene.translated(&Point::zeros(scene.dimension), translation);
                let proxy = IntersectionProxy::build(&s);
                if !proxy.is_exact() {
                    return Err("intersection has no closed form".into());
                }
                let mut recomputed = Vec::new();
                for &(t, r) in samples {
                    let x = base.offset(t, direction);
                    let r2 = subtr_ratio(&s, &proxy, &x).ok_or("zero denominator")?;
                    if (r2 - r).abs() > CERT_TOL * r.abs().max(1.0) {
                        return Err(format!("ratio mismatch at t = {t}"));
                    }
                    recomputed.push((t, r2));
                }
                match divergence_run(&recomputed) {
                    Some(g) if g >= *min_growth - CERT_TOL => Ok(()),
                    _ => Err("recorded samples do not show sustained growth".into()),
                }
            }
            Certificate::ZeroLocalSlope { x, y, side, radius, delta } => {
                if !(scene.in_a(x) && scene.in_b(y)) {
                    return Err("pair is not in A x B".into());
                }
                if x == y || !(*radius > 0.0) {
                    return Err("degenerate pair or radius".into());
                }
                if x.dist(&scene.xbar) > *delta || y.dist(&scene.xbar) > *delta {
                    return Err("pair lies outside the quantifier ball".into());
                }
                let (pa, pb) = (flatten(&scene.a), flatten(&scene.b));
                let (own, other, iso_pt, partner) = match side {
                    Side::A => (&pa, &pb, x, y),
                    Side::B => (&pb, &pa, y, x),
                };
                if isolation(own, iso_pt, tol) < *radius - CERT_TOL {
                    return Err("isolated point has a neighbour inside the radius".into());
                }
                let gap = x.dist(y);
                for c in other.iter().filter(|c| c.distance(partner) < *radius) {
                    if c.distance(iso_pt) < gap - CERT_TOL {
                        return Err("a nearby point of the other set is closer".into());
                    }
                }
                Ok(())
            }
            Certificate::NonemptinessClause { delta, dist_a } => {
                let d = scene.a.distance(&scene.xbar);
                if (d - dist_a).abs() > CERT_TOL {
                    return Err("recorded distance does not match".into());
                }
                if d <= delta / 6.0 {
                    return Err("A meets the clause ball".into());
                }
                Ok(())
            }
        }
    }
}

/// Searches for a pair `(x, y)` in the `delta`-ball around `xbar` where one
/// point is an isolated point of its set and the other is a nearest point
/// of a piece of the other set, so that the local slope vanishes exactly.
/// With `exclusive`, only pairs in `(A \ B) x (B \ A)` qualify.
/// Returns the certificate with the largest radius.
pub fn zero_slope_certificate(scene: &Scene, delta: f64, exclusive: bool) -> Option<Certificate> {
    let tol = scene.tol_membership;
    let (pa, pb) = (flatten(&scene.a), flatten(&scene.b));
    let mut best: Option<(f64, Certificate)> = None;
    for side in [Side::A, Side::B] {
        let (own, other) = match side {
            Side::A => (&pa, &pb),
            Side::B => (&pb, &pa),
        };
        for p in own.iter().filter_map(|q| match q {
            Piece::Point(p) => Some(p),
            _ => None,
        }) {
            if p.dist(&scene.xbar) > delta {
                continue;
            }
            let iso = isolation(own, p, tol);
            if iso <= tol {
                continue;
            }
            for c in other.iter() {
                let q = c.project(p);
                let gap = q.dist(p);
                if gap <= tol || q.dist(&scene.xbar) > delta {
                    continue;
                }
                let rb = other
                    .iter()
                    .filter(|k| k.distance(p) < gap - CERT_TOL)
                    .map(|k| k.distance(&q))
                    .fold(f64::INFINITY, f64::min);
                let (x, y) = match side {
                    Side::A => (p, &q),
                    Side::B => (&q, p),
                };
                if exclusive && (scene.in_b(x) || scene.in_a(y)) {
                    continue;
                }
                let radius = iso.min(rb);
                if radius <= tol {
                    continue;
                }
                if best.as_ref().is_some_and(|(r, _)| radius <= r * (1.0 + 1e-9)) {
                    continue;
                }
                let (x, y) = match side {
                    Side::A => (p.clone(), q),
                    Side::B => (q, p.clone()),
                };
                best = Some((radius, Certificate::ZeroLocalSlope { x, y, side, radius, delta }));
            }
        }
    }
    best.map(|(_, c)| c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::fixtures;

    #[test]
    fn paper_example_certificate() {
        let s = fixtures::paper_example(30);
        let c = zero_slope_certificate(&s, 1.25, false).expect("certificate");
        c.validate(&s).unwrap();
        match c {
            Certificate::ZeroLocalSlope { x, y, side, radius, .. } => {
                assert_eq!(side, Side::A);
                assert_eq!(x, Point::from([0.5, 1.0]));
                assert!(y.dist(&Point::from([0.75, 0.75])) < 1e-15);
                assert!((radius - 0.5 / 10f64.sqrt()).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn no_certificate_for_lines() {
        assert!(zero_slope_certificate(&fixtures::axes(), 1.0, false).is_none());
        assert!(zero_slope_certificate(&fixtures::crossing_lines(), 1.0, false).is_none());
        assert!(zero_slope_certificate(&fixtures::paper_example(30), 1.25, true).is_none());
    }

    #[test]
    fn tampered_certificates_are_rejected() {
        let s = fixtures::paper_example(30);
        let bad = Certificate::ZeroLocalSlope {
            x: Point::from([0.5, 1.0]),
            y: Point::from([0.75, 0.75]),
            side: Side::A,
            radius: 0.2,
            delta: 1.25,
        };
        assert!(bad.validate(&s).is_err());
        let axes = fixtures::axes();
        assert!(Certificate::EmptyIntersection { translation: Point::from([0.0, 0.0]) }.validate(&axes).is_err());
        let nc = Certificate::NotCommonPoint { xbar: Point::from([0.0, 0.0]), dist_a: 0.0, dist_b: 0.0 };
        assert!(nc.validate(&axes).is_err());
    }
}
