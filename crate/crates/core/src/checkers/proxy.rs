use serde::Serialize;

use crate::geometry::{dykstra, flatten, intersect, Piece, Point, Scene};

const DYKSTRA_ITER: usize = 2000;
const DYKSTRA_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProxySource {
    /// Every piece pair has a closed-form intersection.
    Exact,
    /// Some pairs are handled by Dykstra projection onto the pair intersection.
    Dykstra,
}

#[derive(Clone, Debug)]
enum Part {
    Exact(Piece),
    Convex(Piece, Piece),
}

/// `A ∩ B` as a union over pairs of convex pieces.
#[derive(Clone, Debug)]
pub struct IntersectionProxy {
    parts: Vec<Part>,
    source: ProxySource,
}

impl IntersectionProxy {
    pub fn build(scene: &Scene) -> Self {
        let tol = scene.tol_membership;
        let (pa, pb) = (flatten(&scene.a), flatten(&scene.b));
        let mut parts = Vec::new();
        let mut source = ProxySource::Exact;
        for a in &pa {
            for b in &pb {
                match intersect(a, b, tol) {
                    Some(list) => parts.extend(list.into_iter().map(Part::Exact)),
                    None => {
                        source = ProxySource::Dykstra;
                        let start = a.project(&scene.xbar);
                        if dykstra(a, b, &start, DYKSTRA_ITER, DYKSTRA_TOL).is_some() {
                            parts.push(Part::Convex(a.clone(), b.clone()));
                        }
                    }
                }
            }
        }
        IntersectionProxy { parts, source }
    }

    pub fn source(&self) -> ProxySource {
        self.source
    }

    pub fn is_exact(&self) -> bool {
        self.source == ProxySource::Exact
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// `d(x, A ∩ B)`; `+inf` for an empty proxy.
    pub fn distance(&self, x: &Point) -> f64 {
        self.parts
            .iter()
            .map(|p| match p {
                Part::Exact(piece) => piece.distance(x),
                Part::Convex(a, b) => dykstra(a, b, x, DYKSTRA_ITER, DYKSTRA_TOL).map_or(f64::INFINITY, |y| y.dist(x)),
            })
            .fold(f64::INFINITY, f64::min)
    }
}
