#![allow(dead_code)]

use std::f64::consts::TAU;
use std::path::Path;

use hybridnav::scenario::Scenario;
use hybridnav::{ConvexShape, Vec2};
use proptest::prelude::*;

pub fn fixture(name: &str) -> Scenario {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name);
    Scenario::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn vec2(range: f64) -> impl Strategy<Value = Vec2> {
    (-range..range, -range..range).prop_map(|(x, y)| Vec2::new(x, y))
}

/// Vertices on a circle at sorted angles, so the polygon is convex and
/// counter-clockwise. Neighbouring angles are kept apart to avoid slivers.
pub fn polygon() -> impl Strategy<Value = ConvexShape> {
    (vec2(5.0), 0.3..3.0f64, prop::collection::vec(0.0..TAU, 3..9)).prop_filter_map(
        "degenerate polygon",
        |(c, r, mut angles)| {
            angles.sort_by(f64::total_cmp);
            let n = angles.len();
            let min_gap = (0..n)
                .map(|i| {
                    let next = if i + 1 < n { angles[i + 1] } else { angles[0] + TAU };
                    next - angles[i]
                })
                .fold(f64::INFINITY, f64::min);
            if min_gap < 0.05 {
                return None;
            }
            let vs = angles.iter().map(|a| c + Vec2::from_angle(*a) * r).collect();
            ConvexShape::polygon(vs).ok()
        },
    )
}

pub fn disc() -> impl Strategy<Value = ConvexShape> {
    (vec2(5.0), 0.2..3.0f64).prop_map(|(c, r)| ConvexShape::disc(c, r).unwrap())
}

pub fn shape() -> impl Strategy<Value = ConvexShape> {
    prop_oneof![polygon(), disc()]
}

/// Uniform point of a convex shape by rejection from its bounding disc.
pub fn sample_inside(shape: &ConvexShape, u: f64, v: f64) -> Option<Vec2> {
    let c = shape.interior_point();
    let r = shape.bounding_radius();
    let p = c + Vec2::new((2.0 * u - 1.0) * r, (2.0 * v - 1.0) * r);
    shape.contains(p).then_some(p)
}

/// Position at clearance `y` from obstacle `i`, in the direction of `q` seen
/// from its projection. `None` when `q` is inside the obstacle.
pub fn at_clearance(world: &hybridnav::WorldModel, i: usize, q: Vec2, y: f64) -> Option<Vec2> {
    let o = &world.obstacles()[i];
    let p = o.project_point(q);
    let n = (q - p).normalized()?;
    Some(p + n * y)
}

/// Strategy for a position in the neighbourhood band of some obstacle:
/// `(obstacle, position)`.
pub fn band_point(world: &hybridnav::WorldModel, eps_d: f64) -> impl Strategy<Value = (usize, Vec2)> {
    let world = world.clone();
    let n = world.len();
    let r_a = world.inflation();
    (0..n, 0.0..TAU, 0.0..=1.0f64).prop_filter_map("no outward direction", move |(i, a, f)| {
        let o = &world.obstacles()[i];
        let q = o.interior_point() + Vec2::from_angle(a) * (o.bounding_radius() + 1.0);
        at_clearance(&world, i, q, r_a + f * eps_d).map(|x| (i, x))
    })
}
