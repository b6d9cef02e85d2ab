use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::shape::UNIT_TOL;
use super::{Point, Shape};

pub const DEFAULT_TOL_MEMBERSHIP: f64 = 1e-9;
pub const SEQUENCE_GENERATOR: &str = "paper_example_sequence";

/// A pair of closed sets, a reference point and the membership tolerance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Scene {
    pub dimension: usize,
    pub a: Shape,
    pub b: Shape,
    pub xbar: Point,
    pub tol_membership: f64,
    pub seed: u64,
    /// Set when a point sequence was generated: distance from `xbar` to the
    /// first omitted sequence point. Inside this radius the truncated set
    /// differs from the infinite one.
    pub truncation_radius: Option<f64>,
}

#[derive(Debug, Error)]
#[error("scene error at `{path}`: {message}")]
pub struct LoadError {
    pub path: String,
    pub message: String,
}

impl LoadError {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        LoadError { path: path.into(), message: message.into() }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneDoc {
    dimension: usize,
    xbar: Vec<f64>,
    #[serde(rename = "A")]
    a: ShapeDoc,
    #[serde(rename = "B")]
    b: ShapeDoc,
    #[serde(default)]
    tol_membership: Option<f64>,
    #[serde(default)]
    seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum ShapeDoc {
    Line { point: Vec<f64>, direction: Vec<f64> },
    Ray { origin: Vec<f64>, direction: Vec<f64> },
    Segment { from: Vec<f64>, to: Vec<f64> },
    Halfspace { normal: Vec<f64>, offset: f64 },
    Ball { center: Vec<f64>, radius: f64 },
    Box { min: Vec<f64>, max: Vec<f64> },
    Points(PointsDoc),
    Union(Vec<ShapeDoc>),
    Translate { shape: Box<ShapeDoc>, by: Vec<f64> },
}

#[derive(Debug, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
enum PointsDoc {
    List { list: Vec<Vec<f64>> },
    Generator { generator: String, count: usize },
}

/// `{(1/n, 2/n) : 1 <= n <= count}`.
pub fn paper_example_sequence(count: usize) -> Vec<Point> {
    (1..=count).map(|n| Point::from([1.0 / n as f64, 2.0 / n as f64])).collect()
}

struct Builder {
    dim: usize,
    generated: Option<usize>,
}

impl Builder {
    fn point(&self, v: Vec<f64>, path: &str) -> Result<Point, LoadError> {
        if v.len() != self.dim {
            return Err(LoadError::new(path, format!("dimension mismatch: expected {}, found {}", self.dim, v.len())));
        }
        if v.iter().any(|c| !c.is_finite()) {
            return Err(LoadError::new(path, "non-finite coordinate"));
        }
        Ok(Point::new(v))
    }

    fn unit(&self, v: Vec<f64>, path: &str) -> Result<Point, LoadError> {
        let p = self.point(v, path)?;
        let n = p.norm();
        if (n - 1.0).abs() > UNIT_TOL {
            return Err(LoadError::new(path, format!("expected a unit vector, norm is {n}")));
        }
        Ok(p)
    }

    fn shape(&mut self, doc: ShapeDoc, path: &str) -> Result<Shape, LoadError> {
        Ok(match doc {
            ShapeDoc::Line { point, direction } => Shape::Line {
                point: self.point(point, &format!("{path}.line.point"))?,
                direction: self.unit(direction, &format!("{path}.line.direction"))?,
            },
            ShapeDoc::Ray { origin, direction } => Shape::Ray {
                origin: self.point(origin, &format!("{path}.ray.origin"))?,
                direction: self.unit(direction, &format!("{path}.ray.direction"))?,
            },
            ShapeDoc::Segment { from, to } => Shape::Segment {
                from: self.point(from, &format!("{path}.segment.from"))?,
                to: self.point(to, &format!("{path}.segment.to"))?,
            },
            ShapeDoc::Halfspace { normal, offset } => {
                if !offset.is_finite() {
                    return Err(LoadError::new(format!("{path}.halfspace.offset"), "not finite"));
                }
                Shape::Halfspace { normal: self.unit(normal, &format!("{path}.halfspace.normal"))?, offset }
            }
            ShapeDoc::Ball { center, radius } => {
                if !(radius.is_finite() && radius >= 0.0) {
                    return Err(LoadError::new(format!("{path}.ball.radius"), "must be finite and >= 0"));
                }
                Shape::Ball { center: self.point(center, &format!("{path}.ball.center"))?, radius }
            }
            ShapeDoc::Box { min, max } => {
                let min = self.point(min, &format!("{path}.box.min"))?;
                let max = self.point(max, &format!("{path}.box.max"))?;
                if let Some(i) = (0..self.dim).find(|&i| min[i] > max[i]) {
                    return Err(LoadError::new(
                        format!("{path}.box"),
                        format!("min[{i}] = {} exceeds max[{i}] = {}", min[i], max[i]),
                    ));
                }
                Shape::Box { min, max }
            }
            ShapeDoc::Points(PointsDoc::List { list }) => {
                if list.is_empty() {
                    return Err(LoadError::new(format!("{path}.points.list"), "empty point list"));
                }
                let pts = list
                    .into_iter()
                    .enumerate()
                    .map(|(i, v)| self.point(v, &format!("{path}.points.list[{i}]")))
                    .collect::<Result<Vec<_>, _>>()?;
                Shape::Points(pts)
            }
            ShapeDoc::Points(PointsDoc::Generator { generator, count }) => {
                let gpath = format!("{path}.points.generator");
                if generator != SEQUENCE_GENERATOR {
                    return Err(LoadError::new(gpath, format!("unknown generator `{generator}`")));
                }
                if self.dim != 2 {
                    return Err(LoadError::new(gpath, "the sequence generator is two-dimensional"));
                }
                if count == 0 {
                    return Err(LoadError::new(format!("{path}.points.count"), "count must be >= 1"));
                }
                self.generated = Some(self.generated.map_or(count, |c| c.min(count)));
                Shape::Points(paper_example_sequence(count))
            }
            ShapeDoc::Union(branches) => {
                if branches.is_empty() {
                    return Err(LoadError::new(format!("{path}.union"), "union has no branches"));
                }
                Shape::Union(
                    branches
                        .into_iter()
                        .enumerate()
                        .map(|(i, b)| self.shape(b, &format!("{path}.union[{i}]")))
                        .collect::<Result<_, _>>()?,
                )
            }
            ShapeDoc::Translate { shape, by } => {
                let by = self.point(by, &format!("{path}.translate.by"))?;
                let inner = self.shape(*shape, &format!("{path}.translate.shape"))?;
                Shape::Translate { shape: Box::new(inner), by }
            }
        })
    }
}

/// Parses and validates a scene document (JSON).
pub fn load_scene(document: &str) -> Result<Scene, LoadError> {
    let de = &mut serde_json::Deserializer::from_str(document);
    let doc: SceneDoc = serde_path_to_error::deserialize(de)
        .map_err(|e| LoadError::new(e.path().to_string(), e.inner().to_string()))?;
    if doc.dimension == 0 {
        return Err(LoadError::new("dimension", "must be positive"));
    }
    let mut b = Builder { dim: doc.dimension, generated: None };
    let xbar = b.point(doc.xbar, "xbar")?;
    let a = b.shape(doc.a, "A")?;
    let bshape = b.shape(doc.b, "B")?;
    let tol = doc.tol_membership.unwrap_or(DEFAULT_TOL_MEMBERSHIP);
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(LoadError::new("tol_membership", "must be positive"));
    }
    let truncation_radius = b.generated.map(|n| {
        let m = (n + 1) as f64;
        Point::from([1.0 / m, 2.0 / m]).dist(&xbar)
    });
    Ok(Scene {
        dimension: doc.dimension,
        a,
        b: bshape,
        xbar,
        tol_membership: tol,
        seed: doc.seed.unwrap_or(0),
        truncation_radius,
    })
}

impl Scene {
    /// Builds a scene from validated shapes with default tolerance and seed.
    pub fn new(a: Shape, b: Shape, xbar: impl Into<Point>) -> Result<Scene, LoadError> {
        let xbar = xbar.into();
        let dim = xbar.dim();
        a.validate_dim(dim).map_err(|e| LoadError::new("A", e.to_string()))?;
        b.validate_dim(dim).map_err(|e| LoadError::new("B", e.to_string()))?;
        Ok(Scene {
            dimension: dim,
            a,
            b,
            xbar,
            tol_membership: DEFAULT_TOL_MEMBERSHIP,
            seed: 0,
            truncation_radius: None,
        })
    }

    /// The same scene with `A` and `B` replaced by `A - a_shift` and `B - b_shift`.
    pub fn translated(&self, a_shift: &Point, b_shift: &Point) -> Scene {
        let mut s = self.clone();
        s.a = self.a.translated(&(a_shift * -1.0));
        s.b = self.b.translated(&(b_shift * -1.0));
        s
    }

    pub fn in_a(&self, p: &Point) -> bool {
        self.a.contains(p, self.tol_membership)
    }

    pub fn in_b(&self, p: &Point) -> bool {
        self.b.contains(p, self.tol_membership)
    }
}

/// The fixture scenes used throughout the tests and docs.
pub mod fixtures {
    use super::*;

    fn s(a: Shape, b: Shape) -> Scene {
        Scene::new(a, b, [0.0, 0.0]).expect("fixture is valid")
    }

    pub fn x_axis() -> Shape {
        Shape::line([0.0, 0.0], [1.0, 0.0])
    }

    pub fn y_axis() -> Shape {
        Shape::line([0.0, 0.0], [0.0, 1.0])
    }

    pub fn axes() -> Scene {
        s(x_axis(), y_axis())
    }

    /// Full lines `y = x` and `y = 3x`.
    pub fn crossing_lines() -> Scene {
        s(Shape::line_through([0.0, 0.0], [1.0, 1.0]), Shape::line_through([0.0, 0.0], [1.0, 3.0]))
    }

    pub fn coincident_lines() -> Scene {
        s(x_axis(), x_axis())
    }

    /// `y = 0` and `y = 1` with reference point at the origin.
    pub fn disjoint_parallel_lines() -> Scene {
        s(x_axis(), Shape::line([0.0, 1.0], [1.0, 0.0]))
    }

    /// Rays `y = 3x` and `y = x` (x >= 0), each united with `{(1/n, 2/n)}_{n <= count}`.
    pub fn paper_example(count: usize) -> Scene {
        let seq = Shape::Points(paper_example_sequence(count));
        let mut scene = s(
            Shape::union(vec![Shape::ray_along([0.0, 0.0], [1.0, 3.0]), seq.clone()]),
            Shape::union(vec![Shape::ray_along([0.0, 0.0], [1.0, 1.0]), seq]),
        );
        let m = (count + 1) as f64;
        scene.truncation_radius = Some(Point::from([1.0 / m, 2.0 / m]).norm());
        scene
    }

    /// Balls of radius 1 centred at `(-1, 0)` and `(1, 0)`, touching at the origin.
    pub fn tangent_balls() -> Scene {
        s(Shape::ball([-1.0, 0.0], 1.0), Shape::ball([1.0, 0.0], 1.0))
    }

    /// Ball of radius 1 inside a ball of radius 2, touching at the origin.
    pub fn nested_balls() -> Scene {
        s(Shape::ball([0.0, -2.0], 2.0), Shape::ball([0.0, -1.0], 1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axes_document() {
        let doc = r#"{"dimension":2,"xbar":[0,0],
            "A":{"line":{"point":[0,0],"direction":[1,0]}},
            "B":{"line":{"point":[0,0],"direction":[0,1]}}}"#;
        let s = load_scene(doc).unwrap();
        assert_eq!(s, fixtures::axes());
    }

    #[test]
    fn paper_example_document() {
        let doc = r#"{"dimension":2,"xbar":[0,0],
            "A":{"union":[{"ray":{"origin":[0,0],"direction":[0.31622776601683794,0.9486832980505138]}},
                          {"points":{"generator":"paper_example_sequence","count":30}}]},
            "B":{"union":[{"ray":{"origin":[0,0],"direction":[0.7071067811865476,0.7071067811865476]}},
                          {"points":{"generator":"paper_example_sequence","count":30}}]}}"#;
        let s = load_scene(doc).unwrap();
        match &s.a {
            Shape::Union(b) => match &b[1] {
                Shape::Points(p) => {
                    assert_eq!(p.len(), 30);
                    assert_eq!(p[1], Point::from([0.5, 1.0]));
                }
                other => panic!("{other:?}"),
            },
            other => panic!("{other:?}"),
        }
        assert!((s.truncation_radius.unwrap() - 5f64.sqrt() / 31.0).abs() < 1e-15);
    }

    #[test]
    fn bad_box_reports_path() {
        let doc = r#"{"dimension":2,"xbar":[0,0],
            "A":{"box":{"min":[1,0],"max":[0,1]}},
            "B":{"line":{"point":[0,0],"direction":[0,1]}}}"#;
        let e = load_scene(doc).unwrap_err();
        assert_eq!(e.path, "A.box");
    }

    #[test]
    fn non_unit_direction_and_dimension_mismatch() {
        let doc = r#"{"dimension":2,"xbar":[0,0],
            "A":{"union":[{"line":{"point":[0,0],"direction":[1,1]}}]},
            "B":{"line":{"point":[0,0],"direction":[0,1]}}}"#;
        assert_eq!(load_scene(doc).unwrap_err().path, "A.union[0].line.direction");
        let doc = r#"{"dimension":2,"xbar":[0,0,0],
            "A":{"line":{"point":[0,0],"direction":[1,0]}},
            "B":{"line":{"point":[0,0],"direction":[0,1]}}}"#;
        assert_eq!(load_scene(doc).unwrap_err().path, "xbar");
    }

    #[test]
    fn schema_violation_has_path() {
        let doc = r#"{"dimension":2,"xbar":[0,0],
            "A":{"cone":{}},
            "B":{"line":{"point":[0,0],"direction":[0,1]}}}"#;
        let e = load_scene(doc).unwrap_err();
        assert!(e.path.starts_with('A'), "{}", e.path);
    }
}
