mod common;

use common::{band_point, fixture};
use hybridnav::controller::{
    blend, control_input, decide_direction, proximity, rotational_vector, ControllerParams, HybridState,
};
use hybridnav::regions::{gate_extreme_point, DELTA_SET};
use hybridnav::sim::step_flow;
use hybridnav::{Mode, SetParams, Turn, Vec2, WorldModel};
use proptest::prelude::*;

#[test]
fn rotational_vector_is_orthogonal_and_norm_preserving() {
    for name in ["scenario_a.json", "multi_start.json"] {
        let sc = fixture(name);
        let world = sc.world.clone();
        proptest!(ProptestConfig::with_cases(3000), |((_i, x) in band_point(&sc.world, sc.sets.eps_d))| {
            let n = world.nearest_obstacle(x).unwrap();
            let normal = x - n.projection;
            for turn in [Turn::Clockwise, Turn::CounterClockwise] {
                let v = rotational_vector(x, turn, &world).unwrap();
                prop_assert!(v.dot(normal).abs() <= 1e-12 * v.norm() * normal.norm());
                prop_assert!((v.norm() - x.norm()).abs() <= 1e-12 * x.norm());
            }
        });
    }
}

/// At a gate the rotation agrees with heading straight for the target.
#[test]
fn rotation_matches_target_direction_at_gates() {
    for name in ["scenario_a.json", "multi_start.json", "single_disc.json"] {
        let sc = fixture(name);
        let world = &sc.world;
        for i in 0..world.len() {
            for k in 0..=20 {
                let y = world.inflation() + sc.sets.eps_d * k as f64 / 20.0;
                for turn in [Turn::Clockwise, Turn::CounterClockwise] {
                    let g = gate_extreme_point(y, turn, i, world).unwrap();
                    let v = rotational_vector(g, turn, world).unwrap();
                    assert!((v + g).norm() <= 1e-6 * g.norm(), "{name} {i} {y} {turn:?}: {v:?} vs {g:?}");
                    let p = ControllerParams::new(sc.gamma, Vec2::new(0.0, -1.0), sc.sets).unwrap();
                    let u = control_input(&HybridState { x: g, mode: Mode::Avoid(turn), k: i }, world, &p).unwrap();
                    assert!((u + sc.gamma * g).norm() <= 1e-6 * sc.gamma * g.norm());
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn decision_ignores_scale(x in common::vec2(50.0), a in 0.0..6.3f64, scale in 1e-2..1e2f64) {
        let s = Vec2::from_angle(a);
        let p = ControllerParams::new(0.2, s, SetParams::new(0.35, 0.3, 0.1).unwrap()).unwrap();
        prop_assume!(x.dot(s).abs() * scale.min(1.0) > 10.0 * DELTA_SET);
        prop_assert_eq!(decide_direction(x * scale, &p), decide_direction(x, &p));
    }

    /// Across the inner and outer layer edges the blended input changes at
    /// most as fast as its Lipschitz bound allows.
    #[test]
    fn blend_is_continuous_across_layers(a in 0.0..6.3f64, which in 0..2usize, h in 1e-6..1e-3f64) {
        let world = WorldModel::new(vec![hybridnav::ConvexShape::disc(Vec2::new(5.0, 0.0), 1.0).unwrap()], 0.3, 0.1);
        let sets = SetParams::new(0.35, 0.3, 0.1).unwrap();
        let p = ControllerParams::new(0.2, Vec2::new(0.0, -1.0), sets).unwrap();
        let edge = [sets.eps, sets.eps_s][which];
        let n = Vec2::from_angle(a);
        let at = |rho: f64| Vec2::new(5.0, 0.0) + n * (1.0 + world.inflation() + rho);
        let (lo, hi) = (at(edge - h), at(edge + h));
        for turn in [Turn::Clockwise, Turn::CounterClockwise] {
            let u = |x: Vec2| {
                let proj = world.nearest_obstacle(x).unwrap().projection;
                blend(x, turn, proximity(x, &world), proj, &p).unwrap()
            };
            let lip = p.gamma * (1.0 + 2.0 * hi.norm() / (sets.eps_s - sets.eps) + 2.0);
            prop_assert!((u(hi) - u(lo)).norm() <= lip * 2.0 * h * 1.01);
        }
    }

    /// With m = 0 the squared norm decays at rate 2 gamma.
    #[test]
    fn target_mode_descends(x in common::vec2(20.0)) {
        let world = WorldModel::new(vec![], 0.3, 0.1);
        let p = ControllerParams::new(0.2, Vec2::new(0.0, -1.0), SetParams::new(0.35, 0.3, 0.1).unwrap()).unwrap();
        prop_assume!(x.norm() > 1e-3);
        let h = 1e-3;
        let s = HybridState { x, mode: Mode::MoveToTarget, k: 0 };
        let next = step_flow(&s, &world, &p, h).unwrap();
        let rate = (next.x.norm_sq() - x.norm_sq()) / h;
        let mean_rate = x.norm_sq() * ((-2.0 * p.gamma * h).exp() - 1.0) / h;
        prop_assert!((rate - mean_rate).abs() <= 1e-6 * mean_rate.abs());
        // and the mean rate over one step is -2 gamma |x|^2 up to O(gamma h).
        let expect = -2.0 * p.gamma * x.norm_sq();
        prop_assert!((rate - expect).abs() <= 1.01 * p.gamma * h * expect.abs());
        prop_assert!(next.x.norm() < x.norm());
    }
}
