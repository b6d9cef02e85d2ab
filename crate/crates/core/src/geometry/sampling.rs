use std::collections::HashSet;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Point, Shape};

fn nth_prime(k: usize) -> u64 {
    let mut found = 0;
    let mut n = 1u64;
    loop {
        n += 1;
        if (2..).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d)) {
            if found == k {
                return n;
            }
            found += 1;
        }
    }
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

/// `count` points of the closed ball `B(center, radius)`: the center first,
/// then a seed-rotated Halton sequence restricted to the ball.
pub fn ball_cloud(center: &Point, radius: f64, count: usize, seed: u64) -> Vec<Point> {
    let dim = center.dim();
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return out;
    }
    out.push(center.clone());
    if dim == 0 || radius == 0.0 {
        return out;
    }
    let primes: Vec<u64> = (0..dim).map(nth_prime).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
    let mut i = 1u64;
    // Rejection from the cube; bounded so degenerate dimensions cannot spin forever.
    let max_draws = (count as u64).saturating_mul(1 << dim.min(20)).saturating_add(64);
    while out.len() < count && i <= max_draws {
        let u: Vec<f64> = (0..dim)
            .map(|k| {
                let v = radical_inverse(i, primes[k]) + shift[k];
                2.0 * (v - v.floor()) - 1.0
            })
            .collect();
        i += 1;
        if u.iter().map(|c| c * c).sum::<f64>() <= 1.0 {
            out.push(center.offset(radius, &Point::new(u)));
        }
    }
    out
}

/// Deterministic unit directions: evenly spaced angles in 2-D, Halton points
/// projected to the sphere otherwise.
pub fn unit_directions(dim: usize, count: usize) -> Vec<Point> {
    match dim {
        0 => vec![],
        1 => vec![Point::from([1.0]), Point::from([-1.0])],
        2 => (0..count)
            .map(|k| {
                let a = std::f64::consts::TAU * k as f64 / count as f64;
                Point::from([a.cos(), a.sin()])
            })
            .collect(),
        _ => ball_cloud(&Point::zeros(dim), 1.0, count + 1, 0)
            .into_iter()
            .skip(1)
            .filter_map(|p| p.normalized())
            .collect(),
    }
}

/// Feasible points of `shape` within `radius` of `center`: projections of a
/// low-discrepancy cloud in the ball, deduplicated, starting with the
/// projection of `center` itself. Empty when the shape misses the ball.
pub fn sample_near(shape: &Shape, center: &Point, radius: f64, count: usize, seed: u64) -> Vec<Point> {
    let mut seen = HashSet::new();
    ball_cloud(center, radius, count.max(1), seed)
        .into_iter()
        .map(|p| shape.project(&p))
        .filter(|q| q.dist(center) <= radius)
        .filter(|q| seen.insert(q.bits()))
        .collect()
}
