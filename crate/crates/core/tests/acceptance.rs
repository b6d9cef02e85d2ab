//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use transversal::checkers::{
    check_intrinsic, check_tangential, run_hierarchy, triple_distance, Certificate, CheckerConfig, TripleBudget,
};
use transversal::constants::{eval_f, eval_g, lt_to_p, p_to_lt, subtr_to_t, t_to_kappa, t_to_subtr};
use transversal::descent::{run_alternating_projections, run_descent, verify_trace};
use transversal::geometry::{fixtures, load_scene, Point, Scene, Shape};
use transversal::slopes::{field_pairs, local_slope, nonlocal_slope, PairFilter, Region, SlopeConfig};

const TIME_LIMIT: Duration = Duration::from_secs(60);

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn p(x: f64, y: f64) -> Point {
    Point::from([x, y])
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn scene_file(name: &str) -> Scene {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenes").join(name);
    load_scene(&std::fs::read_to_string(&path).expect("scene file")).expect("scene loads")
}

fn criterion_1() -> Outcome {
    let scenes = [
        ("axes", fixtures::axes()),
        ("crossing_lines", fixtures::crossing_lines()),
        ("coincident_lines", fixtures::coincident_lines()),
        ("paper_example_30", fixtures::paper_example(30)),
        ("disjoint_parallel_lines", fixtures::disjoint_parallel_lines()),
    ];
    let cfg = CheckerConfig::default();
    let mut summary = Vec::new();
    for (name, scene) in &scenes {
        let h = run_hierarchy(scene, &cfg).map_err(|e| format!("{name}: {e}"))?;
        ensure(h.inconsistencies.is_empty(), format!("{name}: {:?}", h.inconsistencies))?;
        for r in &h.reports {
            if let Some(w) = &r.witness {
                w.certificate
                    .validate(scene)
                    .map_err(|e| format!("{name}/{}: certificate rejected: {e}", r.property.name()))?;
            }
        }
        let fails = h.reports.iter().filter(|r| r.fails()).count();
        summary.push(format!("{name}: {fails} fail"));
    }
    Ok(format!("zero inconsistencies ({})", summary.join(", ")))
}

/// Minimum over pairs of points on the two rays of the best first-order
/// decrease rate. With the sum metric on `A x B` the rate at `(x, y)` is
/// `max(|g . e_a|, |g . e_b|)` for `g = (y - x)/|y - x|`, both directions
/// being feasible away from the apex.
fn ray_pair_oracle(delta: f64, n: usize) -> f64 {
    let ea = p(1.0, 3.0).normalized().unwrap();
    let eb = p(1.0, 1.0).normalized().unwrap();
    let mut best = f64::INFINITY;
    for i in 1..=n {
        for j in 1..=n {
            let x = &ea * (delta * i as f64 / n as f64);
            let y = &eb * (delta * j as f64 / n as f64);
            let g = (&y - &x).normalized().unwrap();
            best = best.min(g.dot(&ea).abs().max(g.dot(&eb).abs()));
        }
    }
    best
}

fn criterion_2() -> Outcome {
    let scene = fixtures::paper_example(30);
    let oracle = ray_pair_oracle(0.1, 400);
    ensure(oracle >= 0.1, format!("ray-pair oracle {oracle} below 0.1"))?;

    let cfg = CheckerConfig { delta: 0.1, ..CheckerConfig::default() };
    let intr = check_intrinsic(&scene, &cfg).map_err(|e| e.to_string())?;
    let kappa = intr.get("kappa").ok_or("intrinsic report has no kappa")?;
    ensure(intr.holds() && kappa >= 0.1, format!("intrinsic: {:?} kappa {kappa}", intr.verdict))?;

    // (0.5, 1) is the n = 2 term; it lies in both sets but is isolated in A.
    let x = p(0.5, 1.0);
    let y = p(0.75, 0.75);
    let to_ray_a = (3.0 * x[0] - x[1]).abs() / 10f64.sqrt();
    let to_other_terms =
        (1..=30).filter(|&n| n != 2).map(|n| x.dist(&p(1.0 / n as f64, 2.0 / n as f64))).fold(f64::INFINITY, f64::min);
    let isolation = to_ray_a.min(to_other_terms);
    ensure(isolation >= 0.15, format!("isolation radius {isolation}"))?;
    ensure(
        (isolation - 0.5 / 10f64.sqrt()).abs() < 1e-15,
        format!("isolation radius {isolation} is not 0.5/sqrt(10)"),
    )?;
    // y is the foot of x on the ray y = x, so nearby points of B are no closer.
    ensure(((x[0] + x[1]) / 2.0 - y[0]).abs() < 1e-15, "partner is not the foot of the perpendicular")?;

    let cfg = CheckerConfig { delta: 1.25, ..CheckerConfig::default() };
    let tang = check_tangential(&scene, &cfg).map_err(|e| e.to_string())?;
    ensure(tang.fails(), format!("tangential verdict {:?}", tang.verdict))?;
    let cert = &tang.witness.as_ref().ok_or("no witness")?.certificate;
    match cert {
        Certificate::ZeroLocalSlope { x: cx, y: cy, radius, .. } => {
            ensure(cx.dist(&x) < 1e-12 && cy.dist(&y) < 1e-12, format!("certificate at {cx} {cy}"))?;
            ensure(*radius >= 0.15, format!("certificate radius {radius}"))?;
        }
        other => return Err(format!("unexpected certificate {other:?}")),
    }
    cert.validate(&scene)?;
    let slope = local_slope(&scene, &x, &y, &SlopeConfig::default()).map_err(|e| e.to_string())?.value;
    ensure(slope == 0.0, format!("local slope at the certificate pair is {slope}"))?;
    Ok(format!("intrinsic kappa {kappa:.4} (ray oracle {oracle:.4}), tangential certificate at {x} {y}, isolation {isolation:.4}"))
}

fn criterion_3() -> Outcome {
    let scene = fixtures::axes();
    let (a0, b0) = (p(1.0, 0.0), p(0.0, 1.0));
    let tr = run_descent(&scene, &a0, &b0, 3.0, 1e-8, 200, &SlopeConfig::default()).map_err(|e| e.to_string())?;
    ensure(tr.converged, "descent did not converge")?;
    ensure(tr.iterations() <= 200, format!("{} iterations", tr.iterations()))?;
    let gap = tr.last().gap;
    ensure(gap <= 1e-8, format!("final gap {gap}"))?;
    let violations = verify_trace(&tr, &scene.xbar, &a0, &b0);
    ensure(violations.is_empty(), format!("trace violations: {violations:?}"))?;
    let xab = tr.xab.as_ref().ok_or("no common point reported")?;
    let travel = xab.dist(&a0);
    ensure(travel <= 3.0 * 2f64.sqrt() + 1e-6, format!("|xAB - xA0| = {travel}"))?;
    Ok(format!("{} iterations, gap {gap:.2e}, |xAB - xA0| = {travel:.4}", tr.iterations()))
}

/// Best decrease ratio on the axes for moves `(1,0) -> (a,0)`, `(0,1) -> (0,b)`
/// with `(a, b)` on a grid of the given half-width around `(1, 1)`.
fn axes_grid_oracle(half_width: f64, n: i32) -> f64 {
    let base = 2f64.sqrt();
    let mut best = 0.0f64;
    for i in -n..=n {
        for j in -n..=n {
            let (s, t) = (half_width * i as f64 / n as f64, half_width * j as f64 / n as f64);
            let den = s.abs() + t.abs();
            if den == 0.0 {
                continue;
            }
            let (a, b) = (1.0 + s, 1.0 + t);
            let r = (base - (a * a + b * b).sqrt()) / den;
            best = best.max(r.min(1.0));
        }
    }
    best
}

fn criterion_4() -> Outcome {
    let scene = fixtures::axes();
    let (x, y) = (p(1.0, 0.0), p(0.0, 1.0));
    let cfg = SlopeConfig::default();
    let local = local_slope(&scene, &x, &y, &cfg).map_err(|e| e.to_string())?.value;
    let nonlocal = nonlocal_slope(&scene, &x, &y, &cfg).map_err(|e| e.to_string())?.value;
    let local_oracle = axes_grid_oracle(1e-3, 200);
    let nonlocal_oracle = axes_grid_oracle(3.0, 600);
    let target = 0.5f64.sqrt();
    for (name, v) in
        [("local", local), ("nonlocal", nonlocal), ("local oracle", local_oracle), ("nonlocal oracle", nonlocal_oracle)]
    {
        ensure((v - target).abs() <= 1e-2, format!("{name} {v} vs 1/sqrt(2)"))?;
    }
    ensure(
        (local - local_oracle).abs() <= 1e-2 && (nonlocal - nonlocal_oracle).abs() <= 1e-2,
        "estimate and oracle disagree",
    )?;

    let scenes = [
        fixtures::axes(),
        fixtures::crossing_lines(),
        fixtures::paper_example(30),
        fixtures::tangent_balls(),
        scene_file("box_segment_3d.json"),
    ];
    let small = SlopeConfig { samples_per_radius: 16, ..SlopeConfig::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for k in 0..10_000 {
        let s = &scenes[k % scenes.len()];
        let c = s.xbar.clone();
        let mut pick = |shape: &Shape| {
            let z = Point::new((0..s.dimension).map(|_| rng.gen_range(-2.0..2.0)).collect());
            shape.project(&(&c + &z))
        };
        let (u, v) = (pick(&s.a), pick(&s.b));
        let l = local_slope(s, &u, &v, &small).map_err(|e| e.to_string())?.value;
        let n = nonlocal_slope(s, &u, &v, &small).map_err(|e| e.to_string())?.value;
        ensure(l <= 1.0 && n <= 1.0, format!("slope above 1 at {u} {v}: {l}, {n}"))?;
        worst = worst.max(l).max(n);
    }
    Ok(format!("local {local:.5}, nonlocal {nonlocal:.5}, oracle {local_oracle:.5}/{nonlocal_oracle:.5}; 10000 pairs capped (max {worst})"))
}

fn criterion_5() -> Outcome {
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * (1.0 + b.abs());
    let (k, d) = t_to_subtr(3.0, 1.0).map_err(|e| e.to_string())?;
    ensure(close(k, 4.0) && close(d, 1.0 / 56.0), format!("t_to_subtr(3,1) = ({k}, {d})"))?;
    let (m, r) = subtr_to_t(1.0, 14.0).map_err(|e| e.to_string())?;
    ensure(close(m, 3.0) && close(r, 1.0), format!("subtr_to_t(1,14) = ({m}, {r})"))?;
    let kappa = t_to_kappa(3.0).map_err(|e| e.to_string())?;
    ensure(close(kappa, 1.0 / 6.0), format!("t_to_kappa(3) = {kappa}"))?;
    let theta = p_to_lt(0.5, 0.25).map_err(|e| e.to_string())?;
    ensure(close(theta, 0.2), format!("p_to_lt(0.5,0.25) = {theta}"))?;

    let (alpha, _) = lt_to_p(0.5, 0.25).map_err(|e| e.to_string())?;
    let f = |s: f64| s / (2.0 * (s * s + 1.0).sqrt());
    let g = |s: f64, t: f64| (t - 4.0 * s) / (3.0 * (1.0 + 2.0 * s) * (s * s + 1.0).sqrt());
    let expected = (0.25f64).min(f(0.1)).min(g(0.1, 0.5));
    ensure(close(alpha, expected), format!("lt_to_p alpha {alpha} vs recomputed {expected}"))?;
    ensure((alpha - 0.027640).abs() <= 1e-5, format!("lt_to_p alpha {alpha}"))?;

    let grid: Vec<f64> = (0..1000).map(|i| 10.0 * i as f64 / 999.0).collect();
    ensure(grid.windows(2).all(|w| eval_f(w[1]) > eval_f(w[0])), "f is not increasing")?;
    for theta in [0.1, 0.5, 1.0] {
        let psis: Vec<f64> = (0..1000).map(|i| theta / 4.0 * i as f64 / 999.0).collect();
        ensure(
            psis.windows(2).all(|w| eval_g(w[1], theta) < eval_g(w[0], theta)),
            format!("g(., {theta}) is not decreasing"),
        )?;
    }
    Ok(format!("all transfers exact; alpha = {alpha:.6}; f, g monotone on 1000-point grids"))
}

fn criterion_6() -> Outcome {
    let lines = fixtures::crossing_lines();
    let tr = run_alternating_projections(&lines, &p(1.0, 0.0), 200, 1e-15).map_err(|e| e.to_string())?;
    let (da, db) = (p(1.0, 1.0), p(1.0, 3.0));
    let cos = da.dot(&db) / (da.norm() * db.norm());
    let oracle = cos * cos;
    ensure(tr.rows.len() >= 50, format!("only {} iterations", tr.rows.len()))?;
    ensure((tr.rate_estimate - oracle).abs() <= 0.02, format!("rate {} vs {oracle}", tr.rate_estimate))?;
    ensure((oracle - 0.8).abs() < 1e-12, format!("oracle {oracle}"))?;

    let axes = fixtures::axes();
    let ax = run_alternating_projections(&axes, &p(1.0, 1.0), 200, 1e-15).map_err(|e| e.to_string())?;
    ensure(ax.converged && ax.cycles() <= 1, format!("axes: converged {} after {} cycles", ax.converged, ax.cycles()))?;
    Ok(format!(
        "rate {:.4} over {} rows (oracle {oracle:.4}); axes converged in {} cycle",
        tr.rate_estimate,
        tr.rows.len(),
        ax.cycles()
    ))
}

fn criterion_7() -> Outcome {
    let scenes = [
        ("axes", fixtures::axes()),
        ("crossing_lines", fixtures::crossing_lines()),
        ("nested_balls", fixtures::nested_balls()),
        ("ball_halfspace", scene_file("ball_halfspace.json")),
        ("box_segment_3d", scene_file("box_segment_3d.json")),
    ];
    let cfg = SlopeConfig::default();
    let mut worst = 0.0f64;
    for (name, s) in &scenes {
        let region = Region { center: s.xbar.clone(), radius: 1.0, grid_count: 10 };
        let pairs = field_pairs(s, &region, PairFilter::AllDistinct);
        ensure(pairs.len() >= 90, format!("{name}: only {} pairs", pairs.len()))?;
        for (x, y) in &pairs {
            let l = local_slope(s, x, y, &cfg).map_err(|e| e.to_string())?.value;
            let n = nonlocal_slope(s, x, y, &cfg).map_err(|e| e.to_string())?.value;
            ensure((n - l).abs() <= 0.05, format!("{name}: local {l} nonlocal {n} at {x} {y}"))?;
            worst = worst.max((n - l).abs());
        }
    }
    Ok(format!("max |nonlocal - local| = {worst:.4} over five convex scenes"))
}

fn criterion_8() -> Outcome {
    let s = fixtures::axes();
    let b = TripleBudget::default();
    let v1 = triple_distance(&s, &p(0.0, 0.0), &p(0.0, 0.0), f64::INFINITY, &p(1.0, 1.0), 0.0, &b);
    let v2 = triple_distance(&s, &p(0.0, 5.0), &p(0.0, 0.0), 1.0, &p(1.0, 1.0), 0.0, &b);
    let v3 = triple_distance(&s, &p(2.0, 0.0), &p(0.0, 2.0), 0.5, &p(0.0, 0.0), 0.0, &b);
    ensure(v1 == 1.0, format!("full sets: {v1}"))?;
    ensure(v2 == f64::INFINITY, format!("empty constrained set: {v2}"))?;
    ensure(v3 == 1.5, format!("segments: {v3}"))?;
    Ok(format!("values {v1}, {v2}, {v3}"))
}

fn run_cli(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_transversal")).args(args).output().map_err(|e| e.to_string())?;
    match out.status.code() {
        Some(0) | Some(3) => Ok(()),
        c => Err(format!("{args:?} exited with {c:?}: {}", String::from_utf8_lossy(&out.stderr))),
    }
}

fn criterion_9() -> Outcome {
    let scenes = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenes");
    let axes = scenes.join("axes.json");
    let lines = scenes.join("crossing_lines.json");
    let seq_scene = scenes.join("paper_example_30.json");
    let dirs = [tempfile::tempdir().map_err(|e| e.to_string())?, tempfile::tempdir().map_err(|e| e.to_string())?];
    for dir in &dirs {
        let out = dir.path().to_str().ok_or("temp path")?;
        let axes = axes.to_str().unwrap();
        run_cli(&["slopes", "--scene", axes, "--out", out, "--grid_count", "6", "--samples_per_radius", "256"])?;
        run_cli(&[
            "check",
            "--scene",
            seq_scene.to_str().unwrap(),
            "--out",
            out,
            "--grid_count",
            "6",
            "--samples_per_radius",
            "256",
        ])?;
        run_cli(&["hierarchy", "--scene", axes, "--out", out, "--grid_count", "6", "--samples_per_radius", "256"])?;
        run_cli(&[
            "descent",
            "--startA",
            "1,0",
            "--startB",
            "0,1",
            "--M",
            "3",
            "--max-iter",
            "200",
            "--scene",
            axes,
            "--out",
            out,
        ])?;
        run_cli(&["altproj", "--start", "1,0", "--scene", lines.to_str().unwrap(), "--out", out])?;
        run_cli(&["constants", "--theta", "0.5", "--eps", "0.25", "--out", out])?;
    }
    let mut names: Vec<_> = std::fs::read_dir(dirs[0].path())
        .map_err(|e| e.to_string())?
        .map(|e| e.map(|e| e.file_name()))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    names.sort();
    ensure(names.len() >= 11, format!("expected at least 11 output files, found {}", names.len()))?;
    for name in &names {
        let a = std::fs::read(dirs[0].path().join(name)).map_err(|e| e.to_string())?;
        let b = std::fs::read(dirs[1].path().join(name)).map_err(|e| format!("{name:?}: {e}"))?;
        ensure(a == b, format!("{name:?} differs between runs"))?;
    }
    Ok(format!("{} files byte-identical across two runs", names.len()))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("hierarchy consistency", criterion_1),
        ("sequence example reproduction", criterion_2),
        ("descent engine", criterion_3),
        ("slope oracle agreement", criterion_4),
        ("constant-transfer exactness", criterion_5),
        ("alternating projections", criterion_6),
        ("convex coincidence", criterion_7),
        ("triple distance", criterion_8),
        ("determinism", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(msg) if elapsed > TIME_LIMIT => Err(format!("{msg}; took {elapsed:.1?}, over the one-minute budget")),
            other => other,
        };
        match outcome {
            Ok(msg) => println!("PASS criterion {} ({name}): {msg} [{elapsed:.1?}]", i + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL criterion {} ({name}): {msg} [{elapsed:.1?}]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
