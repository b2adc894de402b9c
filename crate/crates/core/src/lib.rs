//! Hybrid feedback control for navigating a disc-shaped robot to a target
//! among convex obstacles in the plane.

pub mod controller;
pub mod geometry;
pub mod regions;
pub mod scenario;
pub mod sensor;
pub mod sim;
pub mod world;

pub use geometry::{ConvexShape, Polygon, Turn, Vec2};
pub use regions::{Mode, RegionKind, RegionLabel, SetParams};
pub use world::WorldModel;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/geometry.md")]
    mod geometry {}
    #[doc = include_str!("../../../book/src/regions.md")]
    mod regions {}
    #[doc = include_str!("../../../book/src/controller.md")]
    mod controller {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/sensing.md")]
    mod sensing {}
    #[doc = include_str!("../../../book/src/scenarios.md")]
    mod scenarios {}
}
