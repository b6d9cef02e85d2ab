use proptest::prelude::*;

use transversal::checkers::{check_subtransversality, check_tangential, run_hierarchy, CheckerConfig};
use transversal::constants::{eval_f, kappa_to_t, lt_to_p, p_to_lt, subtr_to_t, t_to_kappa};
use transversal::descent::{run_alternating_projections, run_descent, step_oracle, verify_trace};
use transversal::geometry::{fixtures, Point, Scene, Shape};
use transversal::slopes::{field_pairs, local_slope, nonlocal_slope, PairFilter, Region, SlopeConfig};

fn lines_at(angle_a: f64, angle_b: f64) -> Scene {
    Scene::new(
        Shape::line_through([0.0, 0.0], [angle_a.cos(), angle_a.sin()]),
        Shape::line_through([0.0, 0.0], [angle_b.cos(), angle_b.sin()]),
        [0.0, 0.0],
    )
    .unwrap()
}

fn small_cfg() -> CheckerConfig {
    let mut c = CheckerConfig { grid_count: 6, ..CheckerConfig::default() };
    c.slope.samples_per_radius = 64;
    c
}

/// Two lines through the origin at an angle of at least 0.2 rad.
fn crossing() -> impl Strategy<Value = (f64, f64)> {
    (0.0..std::f64::consts::PI, 0.2..(std::f64::consts::PI - 0.2)).prop_map(|(a, gap)| (a, a + gap))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn slopes_are_ordered_and_capped((a, b) in crossing(), s in -2.0..2.0f64, t in -2.0..2.0f64) {
        let scene = lines_at(a, b);
        let x = Point::from([s * a.cos(), s * a.sin()]);
        let y = Point::from([t * b.cos(), t * b.sin()]);
        prop_assume!(x.dist(&y) > 1e-6);
        let cfg = SlopeConfig { samples_per_radius: 64, ..SlopeConfig::default() };
        let l = local_slope(&scene, &x, &y, &cfg).unwrap().value;
        let n = nonlocal_slope(&scene, &x, &y, &cfg).unwrap().value;
        prop_assert!((0.0..=1.0).contains(&l));
        prop_assert!(l <= n && n <= 1.0);
    }

    #[test]
    fn subtransversality_constant_grows_with_delta((a, b) in crossing(), d in 0.05..1.0f64, scale in 1.0..4.0f64) {
        let scene = lines_at(a, b);
        let c1 = CheckerConfig { delta: d, ..small_cfg() };
        let c2 = CheckerConfig { delta: d * scale, ..small_cfg() };
        let k1 = check_subtransversality(&scene, &c1).unwrap().get("K").unwrap();
        let k2 = check_subtransversality(&scene, &c2).unwrap().get("K").unwrap();
        prop_assert!(k1 <= k2, "K({}) = {} > K({}) = {}", d, k1, d * scale, k2);
    }

    #[test]
    fn failure_certificates_revalidate(offset in 0.01..2.0f64, angle in -0.3..0.3f64) {
        // A misses the reference point, so every failing report carries a certificate.
        let a = Shape::line([0.0, offset], [1.0, 0.0]);
        let b = Shape::line_through([0.0, 0.0], [angle.cos(), angle.sin()]);
        let scene = Scene::new(a, b, [0.0, 0.0]).unwrap();
        let h = run_hierarchy(&scene, &small_cfg()).unwrap();
        prop_assert!(h.inconsistencies.is_empty());
        for r in &h.reports {
            if let Some(w) = &r.witness {
                prop_assert!(w.certificate.validate(&scene).is_ok(), "{:?}", w);
            }
        }
    }

    #[test]
    fn larger_budget_never_turns_holds_into_fails((a, b) in crossing()) {
        let scene = lines_at(a, b);
        let lo = check_tangential(&scene, &small_cfg()).unwrap();
        let mut big = small_cfg();
        big.slope.samples_per_radius = 256;
        big.grid_count = 8;
        let hi = check_tangential(&scene, &big).unwrap();
        prop_assert!(!(lo.holds() && hi.fails()));
    }

    #[test]
    fn descent_traces_verify((a, b) in crossing(), s in 0.2..2.0f64, t in 0.2..2.0f64) {
        let scene = lines_at(a, b);
        let xa = Point::from([s * a.cos(), s * a.sin()]);
        let xb = Point::from([t * b.cos(), t * b.sin()]);
        let cfg = SlopeConfig { samples_per_radius: 64, ..SlopeConfig::default() };
        // Jumping both points to the apex decreases at rate >= sin(angle / 2).
        let acute = (b - a).min(std::f64::consts::PI - (b - a));
        let m = 1.5 / (acute / 2.0).sin();
        let tr = run_descent(&scene, &xa, &xb, m, 1e-8, 500, &cfg).unwrap();
        prop_assert!(tr.converged);
        prop_assert!(verify_trace(&tr, &scene.xbar, &xa, &xb).is_empty());
    }

    #[test]
    fn projection_rate_is_squared_cosine((a, b) in crossing()) {
        let scene = lines_at(a, b);
        let cos2 = (b - a).cos().powi(2);
        prop_assume!(cos2 > 0.3 && cos2 < 0.95);
        let start = Point::from([(a + 1.0).cos(), (a + 1.0).sin()]);
        let tr = run_alternating_projections(&scene, &start, 400, 1e-15).unwrap();
        prop_assert!((tr.rate_estimate - cos2).abs() < 0.02, "{} vs {}", tr.rate_estimate, cos2);
    }

    #[test]
    fn constant_transfers_round_trip(m in 1.0..1e3f64, k in 0.0..1e3f64, delta in 1e-3..10.0f64) {
        let kappa = t_to_kappa(m).unwrap();
        prop_assert!((kappa_to_t(kappa).unwrap() - 4.0 * m).abs() <= 1e-9 * m);
        let (m2, r) = subtr_to_t(k, delta).unwrap();
        prop_assert!(m2 == k + 2.0 && r > 0.0 && r < delta);
    }

    #[test]
    fn lt_and_p_constants_are_in_range(theta in 1e-4..1.0f64, eps in 1e-3..0.999f64) {
        let (alpha, lambda) = lt_to_p(theta, eps).unwrap();
        prop_assert!(alpha > 0.0 && alpha <= theta / 2.0);
        prop_assert!((lambda - (alpha + 1.0 / eps.sqrt())).abs() < 1e-12 * lambda);
        let back = p_to_lt(alpha, eps).unwrap();
        prop_assert!(back > 0.0 && back < 1.0);
        let f = eval_f(theta);
        prop_assert!(f > 0.0 && f < 0.5);
    }
}

#[test]
fn measured_k_gives_an_admissible_step_on_axes() {
    let scene = fixtures::axes();
    let cfg = small_cfg();
    let k = check_subtransversality(&scene, &cfg).unwrap().get("K").unwrap();
    let (m, _) = subtr_to_t(k, cfg.delta).unwrap();
    let region = Region { center: scene.xbar.clone(), radius: cfg.delta, grid_count: cfg.grid_count };
    for (x, y) in field_pairs(&scene, &region, PairFilter::AllDistinct) {
        let step = step_oracle(&scene, &x, &y, m, &cfg.slope).unwrap();
        assert!(step.is_some(), "no step at {x} {y} with M = {m}");
    }
}
