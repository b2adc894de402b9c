mod common;

use common::vec2;
use hybridnav::{ConvexShape, WorldModel};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    /// Shrinking the robot or the neighbourhood never invalidates a world.
    #[test]
    fn validation_is_monotone(
        a in vec2(10.0), b in vec2(10.0), ra in 0.2..2.0f64, rb in 0.2..2.0f64,
        r in 0.0..1.0f64, margin in 0.01..0.3f64, eps_d in 0.05..1.0f64,
        shrink_r in 0.0..=1.0f64, shrink_eps in 0.0..=1.0f64,
    ) {
        let shapes = vec![ConvexShape::disc(a, ra).unwrap(), ConvexShape::disc(b, rb).unwrap()];
        let world = WorldModel::new(shapes.clone(), r, margin);
        prop_assume!(world.validate(eps_d).is_valid());
        let smaller = WorldModel::new(shapes, r * shrink_r, margin);
        let eps_small = eps_d * shrink_eps.max(1e-3);
        prop_assert!(smaller.validate(eps_small).is_valid(), "{:?}", smaller.validate(eps_small));
    }

    #[test]
    fn nearest_obstacle_is_the_minimum(a in vec2(10.0), b in vec2(10.0), c in vec2(10.0), x in vec2(15.0)) {
        let shapes = vec![
            ConvexShape::disc(a, 1.0).unwrap(),
            ConvexShape::rectangle(b, b + hybridnav::Vec2::new(1.0, 2.0)).unwrap(),
            ConvexShape::disc(c, 0.5).unwrap(),
        ];
        let world = WorldModel::new(shapes, 0.3, 0.1);
        let n = world.nearest_obstacle(x).unwrap();
        for o in world.obstacles() {
            let d = o.distance_to(x);
            prop_assert!(n.distance <= d + 1e-12);
        }
        prop_assert!((n.distance - world.distance(x)).abs() <= 1e-12);
    }
}
