//! Obstacle set, robot footprint and the feasibility conditions they must meet.

use std::fmt;

use crate::geometry::{distance_between, ConvexShape, Vec2};

/// Obstacles plus the robot radius `r` and safety margin `r_s`.
///
/// The workspace is the whole plane; the target is the origin.
#[derive(Clone, Debug)]
pub struct WorldModel {
    obstacles: Vec<ConvexShape>,
    robot_radius: f64,
    safety_margin: f64,
    min_separation: f64,
    target_distance: f64,
}

/// Result of [`WorldModel::nearest_obstacle`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Nearest {
    pub index: usize,
    pub distance: f64,
    pub projection: Vec2,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    /// Two obstacles are closer than the robot diameter.
    Separation {
        first: usize,
        second: usize,
        distance: f64,
        required: f64,
    },
    /// The target is inside or touching the inflated obstacle set.
    TargetClearance { distance: f64, required: f64 },
    /// `r_s` is outside `(0, r̄_s)`.
    SafetyMargin { value: f64, upper: f64 },
    /// `ε_d` is outside `(0, r̄_s - r_s)`.
    NeighbourhoodWidth { value: f64, upper: f64 },
    NegativeRadius(f64),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Separation {
                first,
                second,
                distance,
                required,
            } => write!(
                f,
                "obstacles {first} and {second} are {distance:.6} m apart, need more than {required:.6} m"
            ),
            Violation::TargetClearance { distance, required } => write!(
                f,
                "target is {distance:.6} m from the obstacles, need more than {required:.6} m"
            ),
            Violation::SafetyMargin { value, upper } => {
                write!(f, "safety margin {value} must lie in (0, {upper:.6})")
            }
            Violation::NeighbourhoodWidth { value, upper } => {
                write!(f, "eps_d {value} must lie in (0, {upper:.6})")
            }
            Violation::NegativeRadius(r) => write!(f, "robot radius {r} must be non-negative"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl WorldModel {
    pub fn new(obstacles: Vec<ConvexShape>, robot_radius: f64, safety_margin: f64) -> Self {
        let min_separation = min_pairwise_separation(&obstacles);
        let target_distance = obstacles
            .iter()
            .map(|o| o.distance_to(Vec2::ZERO))
            .fold(f64::INFINITY, f64::min);
        Self {
            obstacles,
            robot_radius,
            safety_margin,
            min_separation,
            target_distance,
        }
    }

    pub fn obstacles(&self) -> &[ConvexShape] {
        &self.obstacles
    }

    pub fn len(&self) -> usize {
        self.obstacles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obstacles.is_empty()
    }

    pub fn robot_radius(&self) -> f64 {
        self.robot_radius
    }

    pub fn safety_margin(&self) -> f64 {
        self.safety_margin
    }

    /// `r_a = r + r_s`, the clearance the robot center must keep.
    pub fn inflation(&self) -> f64 {
        self.robot_radius + self.safety_margin
    }

    /// `r̄`, the smallest obstacle-to-obstacle distance (`+inf` for fewer than two).
    pub fn min_separation(&self) -> f64 {
        self.min_separation
    }

    /// `d(0, O_W)`.
    pub fn target_distance(&self) -> f64 {
        self.target_distance
    }

    /// `r̄_s = min(r̄/2 - r, d(0, O_W) - r)`.
    pub fn safety_margin_bound(&self) -> f64 {
        (self.min_separation / 2.0 - self.robot_radius)
            .min(self.target_distance - self.robot_radius)
    }

    /// `d(x, O_W)`; `+inf` in an empty world.
    pub fn distance(&self, x: Vec2) -> f64 {
        self.obstacles
            .iter()
            .map(|o| o.distance_to(x))
            .fold(f64::INFINITY, f64::min)
    }

    /// Closest obstacle to `x`. Ties go to the smallest index.
    pub fn nearest_obstacle(&self, x: Vec2) -> Option<Nearest> {
        let mut best: Option<Nearest> = None;
        for (index, o) in self.obstacles.iter().enumerate() {
            let projection = o.project_point(x);
            let distance = x.distance(projection);
            if best.is_none_or(|b| distance < b.distance) {
                best = Some(Nearest {
                    index,
                    distance,
                    projection,
                });
            }
        }
        best
    }

    /// Checks the feasibility assumptions for a neighbourhood width `eps_d`.
    pub fn validate(&self, eps_d: f64) -> ValidationReport {
        let mut violations = Vec::new();
        let r = self.robot_radius;
        if r < 0.0 {
            violations.push(Violation::NegativeRadius(r));
        }
        for i in 0..self.obstacles.len() {
            for j in (i + 1)..self.obstacles.len() {
                let d = distance_between(&self.obstacles[i], &self.obstacles[j]);
                if d <= 2.0 * r {
                    violations.push(Violation::Separation {
                        first: i,
                        second: j,
                        distance: d,
                        required: 2.0 * r,
                    });
                }
            }
        }
        let required = self.inflation() + eps_d;
        if self.target_distance <= required {
            violations.push(Violation::TargetClearance {
                distance: self.target_distance,
                required,
            });
        }
        let upper = self.safety_margin_bound();
        if !(self.safety_margin > 0.0 && self.safety_margin < upper) {
            violations.push(Violation::SafetyMargin {
                value: self.safety_margin,
                upper,
            });
        }
        let eps_upper = upper - self.safety_margin;
        if !(eps_d > 0.0 && eps_d < eps_upper) {
            violations.push(Violation::NeighbourhoodWidth {
                value: eps_d,
                upper: eps_upper,
            });
        }
        ValidationReport { violations }
    }
}

/// `r̄`: exact minimum distance over obstacle pairs, `+inf` for fewer than two.
pub fn min_pairwise_separation(obstacles: &[ConvexShape]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..obstacles.len() {
        for j in (i + 1)..obstacles.len() {
            best = best.min(distance_between(&obstacles[i], &obstacles[j]));
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disc(cx: f64, cy: f64, r: f64) -> ConvexShape {
        ConvexShape::disc(Vec2::new(cx, cy), r).unwrap()
    }

    #[test]
    fn single_disc_world_is_valid() {
        let w = WorldModel::new(vec![disc(5.0, 0.0, 1.0)], 0.3, 0.1);
        assert_eq!(w.target_distance(), 4.0);
        assert!((w.safety_margin_bound() - 3.7).abs() < 1e-12);
        assert!(w.validate(0.35).is_valid());
    }

    #[test]
    fn close_discs_violate_separation() {
        let w = WorldModel::new(vec![disc(5.0, 0.0, 1.0), disc(7.5, 0.0, 1.0)], 0.3, 0.1);
        let report = w.validate(0.35);
        assert!(!report.is_valid());
        match &report.violations[0] {
            Violation::Separation {
                distance, required, ..
            } => {
                assert!((distance - 0.5).abs() < 1e-12);
                assert!((required - 0.6).abs() < 1e-12);
            }
            v => panic!("unexpected violation {v:?}"),
        }
    }

    #[test]
    fn empty_world_is_valid() {
        let w = WorldModel::new(vec![], 0.3, 0.1);
        assert_eq!(w.min_separation(), f64::INFINITY);
        assert!(w.validate(0.35).is_valid());
        assert!(w.nearest_obstacle(Vec2::new(1.0, 1.0)).is_none());
    }

    #[test]
    fn separation_examples() {
        assert_eq!(min_pairwise_separation(&[disc(0.0, 0.0, 1.0), disc(5.0, 0.0, 1.0)]), 3.0);
        assert_eq!(min_pairwise_separation(&[disc(0.0, 0.0, 1.0), disc(2.0, 0.0, 1.0)]), 0.0);
        let sq = ConvexShape::rectangle(Vec2::ZERO, Vec2::new(1.0, 1.0)).unwrap();
        assert_eq!(min_pairwise_separation(&[sq, disc(3.0, 0.5, 1.0)]), 1.0);
        assert_eq!(min_pairwise_separation(&[disc(0.0, 0.0, 1.0)]), f64::INFINITY);
    }

    #[test]
    fn nearest_obstacle_examples() {
        let w = WorldModel::new(vec![disc(5.0, 0.0, 1.0)], 0.3, 0.1);
        let n = w.nearest_obstacle(Vec2::new(3.5, 0.0)).unwrap();
        assert_eq!((n.index, n.distance, n.projection), (0, 0.5, Vec2::new(4.0, 0.0)));

        let w = WorldModel::new(vec![disc(5.0, 0.0, 1.0), disc(0.0, 6.0, 1.0)], 0.3, 0.1);
        let n = w.nearest_obstacle(Vec2::ZERO).unwrap();
        assert_eq!((n.index, n.distance, n.projection), (0, 4.0, Vec2::new(4.0, 0.0)));

        let w = WorldModel::new(vec![disc(5.0, 0.0, 1.0), disc(-5.0, 0.0, 1.0)], 0.3, 0.1);
        assert_eq!(w.nearest_obstacle(Vec2::new(0.0, 3.0)).unwrap().index, 0);
    }

    #[test]
    fn eps_d_and_margin_bounds() {
        let w = WorldModel::new(vec![disc(0.0, 0.0, 1.0), disc(5.0, 0.0, 1.0)], 0.3, 0.1);
        // r̄ = 3, target distance 0 (the origin is inside the first disc).
        let r = w.validate(0.35);
        assert!(r
            .violations
            .iter()
            .any(|v| matches!(v, Violation::TargetClearance { .. })));

        let w = WorldModel::new(vec![disc(3.0, 0.0, 1.0), disc(8.0, 0.0, 1.0)], 0.3, 0.1);
        // r̄_s = min(1.5 - 0.3, 2 - 0.3) = 1.2, so eps_d must be below 1.1.
        assert!(w.validate(1.0).is_valid());
        assert!(w
            .validate(1.1)
            .violations
            .iter()
            .any(|v| matches!(v, Violation::NeighbourhoodWidth { .. })));
        let w = WorldModel::new(w.obstacles().to_vec(), 0.3, 1.3);
        assert!(w
            .validate(0.01)
            .violations
            .iter()
            .any(|v| matches!(v, Violation::SafetyMargin { .. })));
    }
}
