use serde::{Deserialize, Serialize};

use super::{GeometryError, Point};

/// Tolerance on the Euclidean norm of direction and normal vectors.
pub const UNIT_TOL: f64 = 1e-12;

/// A closed nonempty subset of R^n with an exact closed-form projection.
///
/// Halfspaces are `{x : <normal, x> <= offset}`. A `Translate` represents
/// `{s + by : s in shape}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Shape {
    Line { point: Point, direction: Point },
    Ray { origin: Point, direction: Point },
    Segment { from: Point, to: Point },
    Halfspace { normal: Point, offset: f64 },
    Ball { center: Point, radius: f64 },
    Box { min: Point, max: Point },
    Points(Vec<Point>),
    Union(Vec<Shape>),
    Translate { shape: Box<Shape>, by: Point },
}

fn check_dim(p: &Point, dim: usize, what: &str) -> Result<(), GeometryError> {
    if p.dim() != dim {
        return Err(GeometryError::DimensionMismatch { expected: dim, found: p.dim(), context: what.to_string() });
    }
    if !p.is_finite() {
        return Err(GeometryError::InvalidShape(format!("{what}: non-finite coordinate")));
    }
    Ok(())
}

fn check_unit(p: &Point, what: &str) -> Result<(), GeometryError> {
    let n = p.norm();
    if (n - 1.0).abs() > UNIT_TOL {
        return Err(GeometryError::InvalidShape(format!("{what}: expected unit vector, norm is {n}")));
    }
    Ok(())
}

impl Shape {
    pub fn line(point: impl Into<Point>, direction: impl Into<Point>) -> Self {
        Shape::Line { point: point.into(), direction: direction.into() }
    }

    pub fn ray(origin: impl Into<Point>, direction: impl Into<Point>) -> Self {
        Shape::Ray { origin: origin.into(), direction: direction.into() }
    }

    pub fn segment(from: impl Into<Point>, to: impl Into<Point>) -> Self {
        Shape::Segment { from: from.into(), to: to.into() }
    }

    pub fn halfspace(normal: impl Into<Point>, offset: f64) -> Self {
        Shape::Halfspace { normal: normal.into(), offset }
    }

    pub fn ball(center: impl Into<Point>, radius: f64) -> Self {
        Shape::Ball { center: center.into(), radius }
    }

    pub fn bbox(min: impl Into<Point>, max: impl Into<Point>) -> Self {
        Shape::Box { min: min.into(), max: max.into() }
    }

    pub fn points(list: Vec<Point>) -> Self {
        Shape::Points(list)
    }

    pub fn union(branches: Vec<Shape>) -> Self {
        Shape::Union(branches)
    }

    /// Line through `point` along `direction`, normalizing the direction.
    pub fn line_through(point: impl Into<Point>, direction: impl Into<Point>) -> Self {
        let d: Point = direction.into();
        Shape::Line { point: point.into(), direction: d.normalized().unwrap_or(d) }
    }

    /// Ray from `origin` along `direction`, normalizing the direction.
    pub fn ray_along(origin: impl Into<Point>, direction: impl Into<Point>) -> Self {
        let d: Point = direction.into();
        Shape::Ray { origin: origin.into(), direction: d.normalized().unwrap_or(d) }
    }

    /// Checks the invariants and returns the ambient dimension.
    pub fn validate(&self) -> Result<usize, GeometryError> {
        let dim = self.probe_dim().ok_or_else(|| GeometryError::InvalidShape("empty shape".into()))?;
        self.validate_dim(dim)?;
        Ok(dim)
    }

    fn probe_dim(&self) -> Option<usize> {
        match self {
            Shape::Line { point, .. } => Some(point.dim()),
            Shape::Ray { origin, .. } => Some(origin.dim()),
            Shape::Segment { from, .. } => Some(from.dim()),
            Shape::Halfspace { normal, .. } => Some(normal.dim()),
            Shape::Ball { center, .. } => Some(center.dim()),
            Shape::Box { min, .. } => Some(min.dim()),
            Shape::Points(list) => list.first().map(Point::dim),
            Shape::Union(branches) => branches.first().and_then(Shape::probe_dim),
            Shape::Translate { by, .. } => Some(by.dim()),
        }
    }

    pub fn validate_dim(&self, dim: usize) -> Result<(), GeometryError> {
        match self {
            Shape::Line { point, direction } => {
                check_dim(point, dim, "line.point")?;
                check_dim(direction, dim, "line.direction")?;
                check_unit(direction, "line.direction")
            }
            Shape::Ray { origin, direction } => {
                check_dim(origin, dim, "ray.origin")?;
                check_dim(direction, dim, "ray.direction")?;
                check_unit(direction, "ray.direction")
            }
            Shape::Segment { from, to } => {
                check_dim(from, dim, "segment.from")?;
                check_dim(to, dim, "segment.to")
            }
            Shape::Halfspace { normal, offset } => {
                check_dim(normal, dim, "halfspace.normal")?;
                check_unit(normal, "halfspace.normal")?;
                if !offset.is_finite() {
                    return Err(GeometryError::InvalidShape("halfspace.offset: not finite".into()));
                }
                Ok(())
            }
            Shape::Ball { center, radius } => {
                check_dim(center, dim, "ball.center")?;
                if !(radius.is_finite() && *radius >= 0.0) {
                    return Err(GeometryError::InvalidShape(format!(
                        "ball.radius: must be finite and >= 0, got {radius}"
                    )));
                }
                Ok(())
            }
            Shape::Box { min, max } => {
                check_dim(min, dim, "box.min")?;
                check_dim(max, dim, "box.max")?;
                if let Some(i) = (0..dim).find(|&i| min[i] > max[i]) {
                    return Err(GeometryError::InvalidShape(format!(
                        "box: min[{i}] = {} exceeds max[{i}] = {}",
                        min[i], max[i]
                    )));
                }
                Ok(())
            }
            Shape::Points(list) => {
                if list.is_empty() {
                    return Err(GeometryError::InvalidShape("points: empty list".into()));
                }
                list.iter().try_for_each(|p| check_dim(p, dim, "points.list"))
            }
            Shape::Union(branches) => {
                if branches.is_empty() {
                    return Err(GeometryError::InvalidShape("union: no branches".into()));
                }
                branches.iter().try_for_each(|b| b.validate_dim(dim))
            }
            Shape::Translate { shape, by } => {
                check_dim(by, dim, "translate.by")?;
                shape.validate_dim(dim)
            }
        }
    }

    /// Nearest point of the set to `p`. Union ties go to the smallest branch index.
    pub fn project(&self, p: &Point) -> Point {
        match self {
            Shape::Line { point, direction } => {
                let t = (p - point).dot(direction);
                point.offset(t, direction)
            }
            Shape::Ray { origin, direction } => {
                let t = (p - origin).dot(direction).max(0.0);
                origin.offset(t, direction)
            }
            Shape::Segment { from, to } => {
                let d = to - from;
                let len2 = d.dot(&d);
                if len2 == 0.0 {
                    return from.clone();
                }
                let t = ((p - from).dot(&d) / len2).clamp(0.0, 1.0);
                from.offset(t, &d)
            }
            Shape::Halfspace { normal, offset } => {
                let s = normal.dot(p) - offset;
                if s <= 0.0 {
                    p.clone()
                } else {
                    p.offset(-s, normal)
                }
            }
            Shape::Ball { center, radius } => {
                let v = p - center;
                let n = v.norm();
                if n <= *radius {
                    p.clone()
                } else {
                    center.offset(radius / n, &v)
                }
            }
            Shape::Box { min, max } => Point::new((0..p.dim()).map(|i| p[i].clamp(min[i], max[i])).collect()),
            Shape::Points(list) => nearest(list.iter().cloned(), p),
            Shape::Union(branches) => nearest(branches.iter().map(|b| b.project(p)), p),
            Shape::Translate { shape, by } => {
                let q = shape.project(&(p - by));
                &q + by
            }
        }
    }

    /// Euclidean distance from `p` to the set, `|p - project(p)|`.
    pub fn distance(&self, p: &Point) -> f64 {
        p.dist(&self.project(p))
    }

    pub fn contains(&self, p: &Point, tol: f64) -> bool {
        self.distance(p) <= tol
    }

    /// The set translated by `v`: `{s + v : s in self}`.
    pub fn translated(&self, v: &Point) -> Shape {
        match self {
            Shape::Translate { shape, by } => Shape::Translate { shape: shape.clone(), by: by + v },
            other => Shape::Translate { shape: Box::new(other.clone()), by: v.clone() },
        }
    }

    /// True for the single convex primitives (not point lists, unions or translates of those).
    pub fn is_convex_primitive(&self) -> bool {
        match self {
            Shape::Line { .. }
            | Shape::Ray { .. }
            | Shape::Segment { .. }
            | Shape::Halfspace { .. }
            | Shape::Ball { .. }
            | Shape::Box { .. } => true,
            Shape::Points(list) => list.len() == 1,
            Shape::Union(b) => b.len() == 1 && b[0].is_convex_primitive(),
            Shape::Translate { shape, .. } => shape.is_convex_primitive(),
        }
    }
}

/// First candidate at minimal distance from `p`.
fn nearest(candidates: impl Iterator<Item = Point>, p: &Point) -> Point {
    let mut best: Option<(f64, Point)> = None;
    for q in candidates {
        let d = p.dist(&q);
        match &best {
            Some((bd, _)) if *bd <= d => {}
            _ => best = Some((d, q)),
        }
    }
    best.expect("validated shapes are nonempty").1
}

/// `translate_shape`: the translate of `shape` by `v`.
pub fn translate_shape(shape: &Shape, v: &Point) -> Shape {
    shape.translated(v)
}
