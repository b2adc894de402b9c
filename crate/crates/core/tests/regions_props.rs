mod common;

use common::{at_clearance, band_point, fixture};
use hybridnav::regions::{classify_region, gate_extreme_point, in_flow_set, in_jump_set, DELTA_SET};
use hybridnav::{Mode, RegionKind, Turn, Vec2, WorldModel};
use proptest::prelude::*;

const MODES: [Mode; 3] = [
    Mode::MoveToTarget,
    Mode::Avoid(Turn::Clockwise),
    Mode::Avoid(Turn::CounterClockwise),
];

fn worlds() -> Vec<hybridnav::scenario::Scenario> {
    ["scenario_a.json", "multi_start.json", "single_disc.json"].map(fixture).into()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn flow_and_jump_cover_the_free_space(w in 0..3usize, seed in any::<prop::sample::Index>(), a in 0.0..6.3f64, f in 0.0..=1.0f64) {
        let sc = &worlds()[w];
        let world = &sc.world;
        let i = seed.index(world.len());
        let o = &world.obstacles()[i];
        let q = o.interior_point() + Vec2::from_angle(a) * (o.bounding_radius() + 1.0);
        // Slightly past the outer layer too, where only mode 0 flows.
        let y = world.inflation() + f * (sc.sets.eps_d + 0.1);
        let x = at_clearance(world, i, q, y).unwrap();
        prop_assume!(world.distance(x) >= world.inflation());
        for m in MODES {
            let covered = in_flow_set(x, m, world, &sc.sets).unwrap() || in_jump_set(x, m, world, &sc.sets).unwrap();
            prop_assert!(covered, "{x:?} uncovered in mode {m:?}");
        }
    }
}

fn band_case(name: &str) -> (hybridnav::scenario::Scenario, impl Strategy<Value = (usize, Vec2)>) {
    let sc = fixture(name);
    let s = band_point(&sc.world, sc.sets.eps_d);
    (sc, s)
}

#[test]
fn exactly_one_obstacle_per_band() {
    for name in ["scenario_a.json", "multi_start.json"] {
        let (sc, strategy) = band_case(name);
        let reach = sc.world.inflation() + sc.sets.eps_d;
        proptest!(ProptestConfig::with_cases(2000), |((i, x) in strategy)| {
            let near: Vec<usize> = (0..sc.world.len())
                .filter(|&j| sc.world.obstacles()[j].distance_to(x) <= reach + DELTA_SET)
                .collect();
            prop_assert_eq!(near, vec![i]);
        });
    }
}

#[test]
fn avoidance_flow_sets_are_disjoint() {
    for name in ["scenario_a.json", "multi_start.json"] {
        let (sc, strategy) = band_case(name);
        // The avoidance flow set of obstacle j alone is the flow set of the
        // world that keeps only obstacle j.
        let alone: Vec<WorldModel> = sc
            .world
            .obstacles()
            .iter()
            .map(|o| WorldModel::new(vec![o.clone()], sc.world.robot_radius(), sc.world.safety_margin()))
            .collect();
        proptest!(ProptestConfig::with_cases(2000), |((_i, x) in strategy)| {
            for turn in [Turn::Clockwise, Turn::CounterClockwise] {
                let flowing = alone
                    .iter()
                    .filter(|w| in_flow_set(x, Mode::Avoid(turn), w, &sc.sets).unwrap())
                    .count();
                prop_assert!(flowing <= 1);
            }
        });
    }
}

#[test]
fn outside_back_region_points_away_from_target() {
    for name in ["scenario_a.json", "multi_start.json", "single_disc.json"] {
        let (sc, strategy) = band_case(name);
        proptest!(ProptestConfig::with_cases(2000), |((i, x) in strategy)| {
            let label = classify_region(x, i, &sc.world, &sc.sets).unwrap();
            if label.kind != RegionKind::Back {
                let p = sc.world.obstacles()[i].project_point(x);
                let n = (x - p).normalized().unwrap();
                prop_assert!(x.dot(n) > -1e-6, "{x:?} {label:?}");
            }
        });
    }
}

/// Back-region positions around one obstacle form a single arc.
#[test]
fn back_region_is_one_arc() {
    for name in ["scenario_a.json", "multi_start.json", "single_disc.json"] {
        let sc = fixture(name);
        let world: &WorldModel = &sc.world;
        for i in 0..world.len() {
            // Stop short of the outer edge, where rounding moves outline points out of the band.
            for f in [0.0, 0.3, 0.7, 0.99] {
                let y = world.inflation() + f * sc.sets.eps_d;
                let outline = world.obstacles()[i].dilated_outline(y, 0.01);
                let back: Vec<bool> = outline
                    .iter()
                    .map(|x| classify_region(*x, i, world, &sc.sets).unwrap().kind == RegionKind::Back)
                    .collect();
                let changes = (0..back.len()).filter(|&k| back[k] != back[(k + 1) % back.len()]).count();
                assert!(changes <= 2, "{name} obstacle {i} at y = {y}: {changes} boundaries");
                assert!(back.iter().any(|b| *b), "{name} obstacle {i} has no back region");
            }
        }
    }
}

#[test]
fn gate_points_are_tangent_and_between_front_and_side() {
    for name in ["scenario_a.json", "multi_start.json", "single_disc.json"] {
        let sc = fixture(name);
        let world = &sc.world;
        for i in 0..world.len() {
            for f in [0.0, 0.5, 0.99] {
                let y = world.inflation() + f * sc.sets.eps_d;
                for turn in [Turn::Clockwise, Turn::CounterClockwise] {
                    let g = gate_extreme_point(y, turn, i, world).unwrap();
                    let p = world.obstacles()[i].project_point(g);
                    let n = (g - p).normalized().unwrap();
                    assert!(g.dot(n).abs() <= 1e-6 * g.norm(), "{name} {i} {turn:?}");
                    let label = classify_region(g, i, world, &sc.sets).unwrap();
                    assert_eq!(label.kind, RegionKind::Gate(turn), "{name} {i} {y}");
                    // Along the boundary the gate separates the back region
                    // from the front (on the inner layer) or a side region.
                    let outline = world.obstacles()[i].dilated_outline(y, 0.005);
                    let k = (0..outline.len())
                        .min_by(|&a, &b| outline[a].distance(g).total_cmp(&outline[b].distance(g)))
                        .unwrap();
                    let kinds: Vec<RegionKind> = [k + outline.len() - 3, k + 3]
                        .iter()
                        .map(|&j| classify_region(outline[j % outline.len()], i, world, &sc.sets).unwrap().kind)
                        .collect();
                    assert!(kinds.contains(&RegionKind::Back), "{name} {i} {kinds:?}");
                    assert!(
                        kinds.iter().any(|k| matches!(k, RegionKind::Front | RegionKind::Side(_))),
                        "{name} {i} {kinds:?}"
                    );
                }
            }
        }
    }
}
