//! Shapes flattened into convex primitive pieces with translations applied.
//!
//! A shape is the union of its pieces. Pieces support exact pairwise
//! intersection for the combinations that have a closed form.

use serde::{Deserialize, Serialize};

use super::{Point, Shape};

/// A convex primitive. `Linear` is `{origin + t*dir : lo <= t <= hi}` with unit `dir`;
/// infinite bounds give rays and lines.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Piece {
    Point(Point),
    Linear { origin: Point, dir: Point, lo: f64, hi: f64 },
    Halfspace { normal: Point, offset: f64 },
    Ball { center: Point, radius: f64 },
    Box { min: Point, max: Point },
}

pub fn flatten(shape: &Shape) -> Vec<Piece> {
    let mut out = Vec::new();
    flatten_into(shape, None, &mut out);
    out
}

fn shift(p: &Point, by: Option<&Point>) -> Point {
    match by {
        Some(v) => p + v,
        None => p.clone(),
    }
}

fn flatten_into(shape: &Shape, by: Option<&Point>, out: &mut Vec<Piece>) {
    match shape {
        Shape::Line { point, direction } => out.push(Piece::Linear {
            origin: shift(point, by),
            dir: direction.clone(),
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }),
        Shape::Ray { origin, direction } => {
            out.push(Piece::Linear { origin: shift(origin, by), dir: direction.clone(), lo: 0.0, hi: f64::INFINITY })
        }
        Shape::Segment { from, to } => {
            let d = to - from;
            let len = d.norm();
            match d.normalized() {
                Some(dir) => out.push(Piece::Linear { origin: shift(from, by), dir, lo: 0.0, hi: len }),
                None => out.push(Piece::Point(shift(from, by))),
            }
        }
        Shape::Halfspace { normal, offset } => {
            let off = by.map_or(0.0, |v| normal.dot(v));
            out.push(Piece::Halfspace { normal: normal.clone(), offset: offset + off })
        }
        Shape::Ball { center, radius } => out.push(Piece::Ball { center: shift(center, by), radius: *radius }),
        Shape::Box { min, max } => out.push(Piece::Box { min: shift(min, by), max: shift(max, by) }),
        Shape::Points(list) => out.extend(list.iter().map(|p| Piece::Point(shift(p, by)))),
        Shape::Union(branches) => branches.iter().for_each(|b| flatten_into(b, by, out)),
        Shape::Translate { shape, by: inner } => {
            let total = match by {
                Some(v) => v + inner,
                None => inner.clone(),
            };
            flatten_into(shape, Some(&total), out)
        }
    }
}

impl Piece {
    pub fn project(&self, p: &Point) -> Point {
        match self {
            Piece::Point(q) => q.clone(),
            Piece::Linear { origin, dir, lo, hi } => {
                let t = (p - origin).dot(dir).clamp(*lo, *hi);
                origin.offset(t, dir)
            }
            other => other.to_shape().project(p),
        }
    }

    pub fn distance(&self, p: &Point) -> f64 {
        p.dist(&self.project(p))
    }

    pub fn is_point(&self) -> bool {
        matches!(self, Piece::Point(_))
    }

    /// Equivalent shape (used to reuse the shape oracles and samplers).
    pub fn to_shape(&self) -> Shape {
        match self {
            Piece::Point(p) => Shape::Points(vec![p.clone()]),
            Piece::Linear { origin, dir, lo, hi } => match (lo.is_finite(), hi.is_finite()) {
                (false, false) => Shape::Line { point: origin.clone(), direction: dir.clone() },
                (true, false) => Shape::Ray { origin: origin.offset(*lo, dir), direction: dir.clone() },
                (false, true) => Shape::Ray { origin: origin.offset(*hi, dir), direction: dir * -1.0 },
                (true, true) => Shape::Segment { from: origin.offset(*lo, dir), to: origin.offset(*hi, dir) },
            },
            Piece::Halfspace { normal, offset } => Shape::Halfspace { normal: normal.clone(), offset: *offset },
            Piece::Ball { center, radius } => Shape::Ball { center: center.clone(), radius: *radius },
            Piece::Box { min, max } => Shape::Box { min: min.clone(), max: max.clone() },
        }
    }

    /// Intersection with the closed ball `B(center, radius)` when it has a closed form:
    /// points and linear pieces. `None` otherwise.
    pub fn clip_to_ball(&self, center: &Point, radius: f64) -> Option<Option<Piece>> {
        match self {
            Piece::Point(p) => Some((p.dist(center) <= radius).then(|| self.clone())),
            Piece::Linear { origin, dir, lo, hi } => Some(linear_ball(origin, dir, *lo, *hi, center, radius, 0.0)),
            _ => None,
        }
    }
}

fn finish_interval(origin: &Point, dir: &Point, lo: f64, hi: f64, tol: f64) -> Option<Piece> {
    if lo > hi + tol || lo.is_nan() || hi.is_nan() {
        return None;
    }
    if lo >= hi {
        let t = if lo.is_finite() { 0.5 * (lo + hi) } else { hi };
        return Some(Piece::Point(origin.offset(t, dir)));
    }
    Some(Piece::Linear { origin: origin.clone(), dir: dir.clone(), lo, hi })
}

fn linear_ball(origin: &Point, dir: &Point, lo: f64, hi: f64, center: &Point, radius: f64, tol: f64) -> Option<Piece> {
    let q = origin - center;
    let b = dir.dot(&q);
    let disc = b * b - (q.dot(&q) - radius * radius);
    if disc < 0.0 {
        let foot = (-b).clamp(lo, hi);
        let pt = origin.offset(foot, dir);
        return (pt.dist(center) <= radius + tol).then_some(Piece::Point(pt));
    }
    let s = disc.sqrt();
    finish_interval(origin, dir, lo.max(-b - s), hi.min(-b + s), tol)
}

/// Exact intersection of two pieces as a list of pieces, or `None` when no
/// closed form is implemented for the pair.
pub fn intersect(a: &Piece, b: &Piece, tol: f64) -> Option<Vec<Piece>> {
    use Piece::*;
    match (a, b) {
        (Point(p), other) | (other, Point(p)) => {
            Some(if other.distance(p) <= tol { vec![Point(p.clone())] } else { vec![] })
        }
        (Linear { origin: o1, dir: d1, lo: l1, hi: h1 }, Linear { origin: o2, dir: d2, lo: l2, hi: h2 }) => {
            Some(linear_linear(o1, d1, *l1, *h1, o2, d2, *l2, *h2, tol).into_iter().collect())
        }
        (Linear { origin, dir, lo, hi }, Halfspace { normal, offset })
        | (Halfspace { normal, offset }, Linear { origin, dir, lo, hi }) => {
            let nd = normal.dot(dir);
            let no = normal.dot(origin) - offset;
            let (mut l, mut h) = (*lo, *hi);
            if nd.abs() < 1e-15 {
                if no > tol {
                    return Some(vec![]);
                }
            } else if nd > 0.0 {
                h = h.min(-no / nd);
            } else {
                l = l.max(-no / nd);
            }
            Some(finish_interval(origin, dir, l, h, tol).into_iter().collect())
        }
        (Linear { origin, dir, lo, hi }, Ball { center, radius })
        | (Ball { center, radius }, Linear { origin, dir, lo, hi }) => {
            Some(linear_ball(origin, dir, *lo, *hi, center, *radius, tol).into_iter().collect())
        }
        (Linear { origin, dir, lo, hi }, Box { min, max }) | (Box { min, max }, Linear { origin, dir, lo, hi }) => {
            let (mut l, mut h) = (*lo, *hi);
            for i in 0..origin.dim() {
                if dir[i].abs() < 1e-15 {
                    if origin[i] < min[i] - tol || origin[i] > max[i] + tol {
                        return Some(vec![]);
                    }
                } else {
                    let t1 = (min[i] - origin[i]) / dir[i];
                    let t2 = (max[i] - origin[i]) / dir[i];
                    l = l.max(t1.min(t2));
                    h = h.min(t1.max(t2));
                }
            }
            Some(finish_interval(origin, dir, l, h, tol).into_iter().collect())
        }
        (Box { min: a0, max: a1 }, Box { min: b0, max: b1 }) => {
            let n = a0.dim();
            let lo: Vec<f64> = (0..n).map(|i| a0[i].max(b0[i])).collect();
            let hi: Vec<f64> = (0..n).map(|i| a1[i].min(b1[i])).collect();
            if (0..n).any(|i| lo[i] > hi[i] + tol) {
                return Some(vec![]);
            }
            let hi: Vec<f64> = (0..n).map(|i| hi[i].max(lo[i])).collect();
            Some(vec![Box { min: lo.into(), max: hi.into() }])
        }
        (Ball { center: c1, radius: r1 }, Ball { center: c2, radius: r2 }) => {
            let d = c1.dist(c2);
            if d > r1 + r2 + tol {
                Some(vec![])
            } else if (d - (r1 + r2)).abs() <= tol {
                let t = if d > 0.0 { r1 / d } else { 0.0 };
                Some(vec![Point(c1.offset(t, &(c2 - c1)))])
            } else if d + r2 <= *r1 {
                Some(vec![b.clone()])
            } else if d + r1 <= *r2 {
                Some(vec![a.clone()])
            } else {
                None
            }
        }
        _ => None,
    }
}

#[allow(clippy::too_many_arguments)]
fn linear_linear(
    o1: &Point,
    d1: &Point,
    l1: f64,
    h1: f64,
    o2: &Point,
    d2: &Point,
    l2: f64,
    h2: f64,
    tol: f64,
) -> Option<Piece> {
    let c = d1.dot(d2);
    let w = o2 - o1;
    if 1.0 - c.abs() < 1e-12 {
        let along = w.dot(d1);
        let perp = w.offset(-along, d1);
        if perp.norm() > tol {
            return None;
        }
        let (a, b) = (along + c.signum() * l2, along + c.signum() * h2);
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        return finish_interval(o1, d1, l1.max(a), h1.min(b), tol);
    }
    let r = o1 - o2;
    let d = d1.dot(&r);
    let f = d2.dot(&r);
    let t = (c * f - d) / (1.0 - c * c);
    let s = f + c * t;
    let p1 = o1.offset(t, d1);
    let p2 = o2.offset(s, d2);
    if p1.dist(&p2) > tol || t < l1 - tol || t > h1 + tol || s < l2 - tol || s > h2 + tol {
        return None;
    }
    Some(Piece::Point(o1.offset(t.clamp(l1, h1), d1)))
}

/// Distance from `pieces[idx]`'s point `p` to the rest of the set.
/// Pieces that are the same point are skipped; a non-point piece through `p`
/// gives radius 0.
pub fn isolation_radius(pieces: &[Piece], idx: usize, p: &Point, tol: f64) -> f64 {
    pieces
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != idx)
        .filter_map(|(_, q)| {
            let d = q.distance(p);
            if q.is_point() && d <= tol {
                None
            } else {
                Some(d)
            }
        })
        .fold(f64::INFINITY, f64::min)
}

/// Projection of `x` onto `a ∩ b` by Dykstra's algorithm. `None` when the
/// iterates do not reach a common point within `tol` (empty or ill-posed).
pub fn dykstra(a: &Piece, b: &Piece, x: &Point, max_iter: usize, tol: f64) -> Option<Point> {
    let mut y = x.clone();
    let mut p = Point::zeros(x.dim());
    let mut q = Point::zeros(x.dim());
    for _ in 0..max_iter {
        let ya = a.project(&(&y + &p));
        p = &(&y + &p) - &ya;
        let yb = b.project(&(&ya + &q));
        q = &(&ya + &q) - &yb;
        let step = yb.dist(&y);
        y = yb;
        if step <= 1e-15 * (1.0 + y.norm()) {
            break;
        }
    }
    (a.distance(&y) <= tol && b.distance(&y) <= tol).then_some(y)
}
