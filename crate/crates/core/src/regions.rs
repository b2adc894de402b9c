//! Partition of each obstacle's neighbourhood and the flow/jump sets built on it.
//!
//! Around obstacle `i` the band `T_i = {x : r_a <= d(x, O_i) <= r_a + eps_d}` is
//! split into
//!
//! * the back region, where `x . (x - Π(x, O_i)) <= 0` and heading straight to
//!   the target moves away from the obstacle;
//! * the front region, where the segment from `x` to the target enters the
//!   open `r_a`-dilation of the obstacle;
//! * two side regions, told apart by the sign of the angle from `x` to the
//!   outward normal `x - Π(x, O_i)`;
//! * two gates, the curves where `x` is orthogonal to that normal.
//!
//! All membership predicates are written in terms of three scalars per
//! obstacle: the distance `d`, the dot product `x . n` with the unit outward
//! normal `n`, and the exact minimum distance from the segment `[x, 0]` to the
//! obstacle. Writing every set through the same scalars is what makes the
//! flow and jump sets cover the free workspace without numerical gaps.

use std::f64::consts::FRAC_PI_2;

use thiserror::Error;

use crate::geometry::{signed_angle, ConvexShape, Turn, Vec2};
use crate::world::WorldModel;

/// Slack on closed-set comparisons.
pub const DELTA_SET: f64 = 1e-9;
/// Angular half-width of the band labelled as a gate.
pub const GATE_ANGLE_TOL: f64 = 1e-6;
/// Penetration of the inflated obstacles tolerated before a position is unsafe.
pub const DELTA_SAFETY: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegionError {
    #[error("position ({x}, {y}) is {depth:e} m inside the inflated obstacle {obstacle}")]
    Unsafe {
        x: f64,
        y: f64,
        obstacle: usize,
        depth: f64,
    },
    #[error("obstacle index {0} out of range")]
    NoSuchObstacle(usize),
    #[error("invalid set parameters: {0}")]
    InvalidParams(String),
    #[error("no gate point at dilation {0}: the target lies inside the dilated obstacle")]
    EmptyGate(f64),
    #[error("dilation {y} is outside the neighbourhood [{lo}, {hi}]")]
    DilationOutOfBand { y: f64, lo: f64, hi: f64 },
}

pub type Result<T> = std::result::Result<T, RegionError>;

/// Mode indicator: move straight to the target, or circle the nearest obstacle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    MoveToTarget,
    Avoid(Turn),
}

impl Mode {
    pub const CLOCKWISE: Mode = Mode::Avoid(Turn::Clockwise);
    pub const COUNTER_CLOCKWISE: Mode = Mode::Avoid(Turn::CounterClockwise);

    /// `-1`, `0` or `1`.
    pub fn value(self) -> i8 {
        match self {
            Mode::MoveToTarget => 0,
            Mode::Avoid(Turn::Clockwise) => 1,
            Mode::Avoid(Turn::CounterClockwise) => -1,
        }
    }

    pub fn from_value(m: i8) -> Option<Mode> {
        match m {
            0 => Some(Mode::MoveToTarget),
            _ => Turn::from_sign(m).map(Mode::Avoid),
        }
    }
}

/// Widths of the three nested layers, `0 < eps < eps_s < eps_d`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SetParams {
    pub eps_d: f64,
    pub eps_s: f64,
    pub eps: f64,
}

impl SetParams {
    pub fn new(eps_d: f64, eps_s: f64, eps: f64) -> Result<Self> {
        if !(0.0 < eps && eps < eps_s && eps_s < eps_d && eps_d.is_finite()) {
            return Err(RegionError::InvalidParams(format!(
                "need 0 < eps < eps_s < eps_d, got eps = {eps}, eps_s = {eps_s}, eps_d = {eps_d}"
            )));
        }
        Ok(Self { eps_d, eps_s, eps })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RegionKind {
    Exterior,
    Back,
    Gate(Turn),
    Front,
    Side(Turn),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegionLabel {
    pub kind: RegionKind,
    pub obstacle: usize,
    /// `d(x, O_i) - r_a`.
    pub band: f64,
}

/// Local quantities of a position relative to one obstacle.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Local {
    pub distance: f64,
    pub projection: Vec2,
    /// `x . (x - Π)` scaled to the unit normal.
    pub dot: f64,
    /// `x × (x - Π)` scaled to the unit normal.
    pub cross: f64,
    /// `min_{t in [0,1]} d(t x, O_i)`.
    pub segment: f64,
}

impl Local {
    pub fn new(x: Vec2, shape: &ConvexShape) -> Self {
        let projection = shape.project_point(x);
        let normal = x - projection;
        let distance = normal.norm();
        let (dot, cross) = if distance > 0.0 {
            (x.dot(normal) / distance, x.cross(normal) / distance)
        } else {
            (0.0, 0.0)
        };
        Local {
            distance,
            projection,
            dot,
            cross,
            segment: shape.segment_distance(x, Vec2::ZERO),
        }
    }

    fn back(&self) -> bool {
        self.dot <= 0.0
    }

    fn front(&self, r_a: f64) -> bool {
        self.dot > 0.0 && self.segment < r_a
    }

    fn front_closure(&self, r_a: f64) -> bool {
        self.dot >= -DELTA_SET && self.segment <= r_a + DELTA_SET
    }

    fn enlarged_front(&self, r_a: f64, p: &SetParams) -> bool {
        self.dot > 0.0 && self.segment < r_a + p.eps
    }

    /// Closure of the enlarged front region minus the back region.
    fn enlarged_front_closure(&self, r_a: f64, p: &SetParams) -> bool {
        self.dot >= -DELTA_SET && self.segment <= r_a + p.eps + DELTA_SET
    }

    fn side(&self, turn: Turn, r_a: f64) -> bool {
        self.dot > 0.0 && self.segment >= r_a && turn.z() * self.cross <= 0.0
    }

    fn in_band(&self, r_a: f64, p: &SetParams) -> bool {
        self.distance <= r_a + p.eps_d + DELTA_SET
    }

    fn beyond_band(&self, r_a: f64, p: &SetParams) -> bool {
        self.distance >= r_a + p.eps_d - DELTA_SET
    }

    /// `x ∈ F_0^i`.
    pub fn flow_target(&self, r_a: f64, p: &SetParams) -> bool {
        self.distance >= r_a + p.eps_s - DELTA_SET || !self.front(r_a)
    }

    /// `x ∈ J_0^i`.
    pub fn jump_target(&self, r_a: f64, p: &SetParams) -> bool {
        self.distance <= r_a + p.eps_s + DELTA_SET && self.front_closure(r_a)
    }

    /// `x ∈ F_m^i`.
    pub fn flow_avoid(&self, turn: Turn, r_a: f64, p: &SetParams) -> bool {
        self.in_band(r_a, p) && (self.side(turn, r_a) || self.enlarged_front_closure(r_a, p))
    }

    /// `x ∈ J_m^i`.
    pub fn jump_avoid(&self, turn: Turn, r_a: f64, p: &SetParams) -> bool {
        self.beyond_band(r_a, p)
            || self.dot <= DELTA_SET
            || (self.side(turn.opposite(), r_a) && !self.enlarged_front(r_a, p))
    }
}

fn check_safe(x: Vec2, world: &WorldModel) -> Result<()> {
    let r_a = world.inflation();
    for (i, o) in world.obstacles().iter().enumerate() {
        let d = o.distance_to(x);
        if d < r_a - DELTA_SAFETY {
            return Err(RegionError::Unsafe {
                x: x.x,
                y: x.y,
                obstacle: i,
                depth: r_a - d,
            });
        }
    }
    Ok(())
}

/// Obstacles whose neighbourhood can matter at `x`; all others are in the far
/// field where every per-obstacle set reduces to its trivial case.
fn near<'a>(
    x: Vec2,
    world: &'a WorldModel,
    p: &'a SetParams,
) -> impl Iterator<Item = (usize, Local)> + 'a {
    let reach = world.inflation() + p.eps_d + DELTA_SET;
    world
        .obstacles()
        .iter()
        .enumerate()
        .filter(move |(_, o)| o.distance_to(x) <= reach)
        .map(move |(i, o)| (i, Local::new(x, o)))
}

/// Labels `x` with its region in the neighbourhood of obstacle `i`.
///
/// Gates are reported within [`GATE_ANGLE_TOL`] of the exact orthogonality
/// condition and take precedence over the back region they bound.
pub fn classify_region(x: Vec2, i: usize, world: &WorldModel, p: &SetParams) -> Result<RegionLabel> {
    let shape = world.obstacles().get(i).ok_or(RegionError::NoSuchObstacle(i))?;
    let r_a = world.inflation();
    let local = Local::new(x, shape);
    if local.distance < r_a - DELTA_SAFETY {
        return Err(RegionError::Unsafe {
            x: x.x,
            y: x.y,
            obstacle: i,
            depth: r_a - local.distance,
        });
    }
    let band = local.distance - r_a;
    let kind = if band > p.eps_d {
        RegionKind::Exterior
    } else {
        let gate = (x != Vec2::ZERO && local.distance > 0.0)
            .then(|| signed_angle(x, x - local.projection).ok())
            .flatten()
            .and_then(|a| {
                if (a + FRAC_PI_2).abs() <= GATE_ANGLE_TOL {
                    Some(Turn::Clockwise)
                } else if (a - FRAC_PI_2).abs() <= GATE_ANGLE_TOL {
                    Some(Turn::CounterClockwise)
                } else {
                    None
                }
            });
        if let Some(turn) = gate {
            RegionKind::Gate(turn)
        } else if local.back() {
            RegionKind::Back
        } else if local.front(r_a) {
            RegionKind::Front
        } else if local.cross <= 0.0 {
            RegionKind::Side(Turn::Clockwise)
        } else {
            RegionKind::Side(Turn::CounterClockwise)
        }
    };
    Ok(RegionLabel {
        kind,
        obstacle: i,
        band,
    })
}

/// `x ∈ F_m`: intersection over obstacles for the target mode, union for the
/// avoidance modes.
pub fn in_flow_set(x: Vec2, mode: Mode, world: &WorldModel, p: &SetParams) -> Result<bool> {
    check_safe(x, world)?;
    Ok(flow_unchecked(x, mode, world, p))
}

/// `x ∈ J_m`: union over obstacles for the target mode, intersection for the
/// avoidance modes.
pub fn in_jump_set(x: Vec2, mode: Mode, world: &WorldModel, p: &SetParams) -> Result<bool> {
    check_safe(x, world)?;
    Ok(jump_unchecked(x, mode, world, p))
}

pub(crate) fn flow_unchecked(x: Vec2, mode: Mode, world: &WorldModel, p: &SetParams) -> bool {
    let r_a = world.inflation();
    match mode {
        Mode::MoveToTarget => near(x, world, p).all(|(_, l)| l.flow_target(r_a, p)),
        Mode::Avoid(turn) => near(x, world, p).any(|(_, l)| l.flow_avoid(turn, r_a, p)),
    }
}

pub(crate) fn jump_unchecked(x: Vec2, mode: Mode, world: &WorldModel, p: &SetParams) -> bool {
    let r_a = world.inflation();
    match mode {
        Mode::MoveToTarget => near(x, world, p).any(|(_, l)| l.jump_target(r_a, p)),
        Mode::Avoid(turn) => near(x, world, p).all(|(_, l)| l.jump_avoid(turn, r_a, p)),
    }
}

/// Indices `i` with `x ∈ J_0^i`.
pub fn target_jump_obstacles(x: Vec2, world: &WorldModel, p: &SetParams) -> Vec<usize> {
    let r_a = world.inflation();
    near(x, world, p)
        .filter(|(_, l)| l.jump_target(r_a, p))
        .map(|(i, _)| i)
        .collect()
}

/// Farthest point from the target on `∂D_y(O_i)` that lies on the gate of
/// direction `turn`.
///
/// Gate points on `∂D_y` are where the tangent line passes through the target,
/// so they are the tangency points of the two lines from the origin that
/// support `D_y(O_i)`. `D_y` of a polygon is the convex hull of the discs of
/// radius `y` around its vertices, so the supporting lines are the extreme
/// tangents over those discs. The clockwise gate is the tangent of smallest
/// polar angle.
pub fn gate_extreme_point(y: f64, turn: Turn, i: usize, world: &WorldModel) -> Result<Vec2> {
    let shape = world.obstacles().get(i).ok_or(RegionError::NoSuchObstacle(i))?;
    gate_point_of(shape, y, turn)
}

/// [`gate_extreme_point`] with an explicit band check against `p`.
pub fn gate_extreme_point_in_band(
    y: f64,
    turn: Turn,
    i: usize,
    world: &WorldModel,
    p: &SetParams,
) -> Result<Vec2> {
    let (lo, hi) = (world.inflation(), world.inflation() + p.eps_d);
    if !(lo - DELTA_SET..=hi + DELTA_SET).contains(&y) {
        return Err(RegionError::DilationOutOfBand { y, lo, hi });
    }
    gate_extreme_point(y, turn, i, world)
}

pub(crate) fn gate_point_of(shape: &ConvexShape, y: f64, turn: Turn) -> Result<Vec2> {
    if shape.distance_to(Vec2::ZERO) <= y {
        return Err(RegionError::EmptyGate(y));
    }
    let circles: Vec<(Vec2, f64)> = match shape {
        ConvexShape::Disc { center, radius } => vec![(*center, radius + y)],
        ConvexShape::Polygon(poly) => poly.vertices().iter().map(|v| (*v, y)).collect(),
    };
    let reference = shape.interior_point().angle();
    let wrap = |a: f64| {
        let mut a = a;
        while a > std::f64::consts::PI {
            a -= 2.0 * std::f64::consts::PI;
        }
        while a <= -std::f64::consts::PI {
            a += 2.0 * std::f64::consts::PI;
        }
        a
    };
    // Signed so that the sought extreme is always a maximum.
    let sign = match turn {
        Turn::Clockwise => -1.0,
        Turn::CounterClockwise => 1.0,
    };
    let mut best: Option<(f64, f64, f64)> = None; // (score, absolute angle, tangent length)
    for (c, radius) in circles {
        let dist = c.norm();
        let half = (radius / dist).asin();
        let length = (dist * dist - radius * radius).max(0.0).sqrt();
        let angle = c.angle() + sign * half;
        let score = sign * wrap(angle - reference);
        let better = match best {
            None => true,
            Some((s, _, l)) => score > s + 1e-12 || (score >= s - 1e-12 && length > l),
        };
        if better {
            best = Some((score, angle, length));
        }
    }
    let (_, angle, length) = best.expect("shapes have at least one support circle");
    Ok(Vec2::from_angle(angle) * length)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> (WorldModel, SetParams) {
        let w = WorldModel::new(
            vec![ConvexShape::disc(Vec2::new(5.0, 0.0), 1.0).unwrap()],
            0.3,
            0.1,
        );
        (w, SetParams::new(0.35, 0.2, 0.1).unwrap())
    }

    /// Gate point with `x = 4.55` on the circle of radius 1.5 about (5, 0).
    fn gate_fixture() -> Vec2 {
        Vec2::new(4.55, (1.5f64 * 1.5 - 0.45 * 0.45).sqrt())
    }

    #[test]
    fn classify_examples() {
        let (w, p) = fixture();
        let l = classify_region(Vec2::new(3.5, 0.0), 0, &w, &p).unwrap();
        assert_eq!(l.kind, RegionKind::Back);
        assert!((l.band - 0.1).abs() < 1e-12);
        let l = classify_region(Vec2::new(6.5, 0.0), 0, &w, &p).unwrap();
        assert_eq!(l.kind, RegionKind::Front);
        let l = classify_region(gate_fixture(), 0, &w, &p).unwrap();
        assert_eq!(l.kind, RegionKind::Gate(Turn::CounterClockwise));
        let mirrored = Vec2::new(gate_fixture().x, -gate_fixture().y);
        let l = classify_region(mirrored, 0, &w, &p).unwrap();
        assert_eq!(l.kind, RegionKind::Gate(Turn::Clockwise));
        let l = classify_region(Vec2::new(10.0, 10.0), 0, &w, &p).unwrap();
        assert_eq!(l.kind, RegionKind::Exterior);
    }

    #[test]
    fn classify_sides() {
        let (w, p) = fixture();
        // Just outside the tangent cone on either side, at band 0.3.
        let c = Vec2::new(5.0, 0.0);
        let below = c + Vec2::from_angle(-1.5) * 1.7;
        let above = c + Vec2::from_angle(1.5) * 1.7;
        assert_eq!(
            classify_region(below, 0, &w, &p).unwrap().kind,
            RegionKind::Side(Turn::Clockwise)
        );
        assert_eq!(
            classify_region(above, 0, &w, &p).unwrap().kind,
            RegionKind::Side(Turn::CounterClockwise)
        );
    }

    #[test]
    fn unsafe_positions_are_rejected() {
        let (w, p) = fixture();
        let x = Vec2::new(6.2, 0.0);
        assert!(matches!(classify_region(x, 0, &w, &p), Err(RegionError::Unsafe { .. })));
        assert!(in_flow_set(x, Mode::MoveToTarget, &w, &p).is_err());
        assert!(in_jump_set(x, Mode::CLOCKWISE, &w, &p).is_err());
    }

    #[test]
    fn flow_set_examples() {
        let (w, p) = fixture();
        assert!(in_flow_set(Vec2::new(6.7, 0.0), Mode::MoveToTarget, &w, &p).unwrap());
        assert!(!in_flow_set(Vec2::new(6.5, 0.0), Mode::MoveToTarget, &w, &p).unwrap());
        assert!(in_flow_set(Vec2::new(6.5, 0.0), Mode::CLOCKWISE, &w, &p).unwrap());
        assert!(in_flow_set(Vec2::new(6.5, 0.0), Mode::COUNTER_CLOCKWISE, &w, &p).unwrap());
    }

    #[test]
    fn jump_set_examples() {
        let (w, p) = fixture();
        assert!(in_jump_set(Vec2::new(6.5, 0.0), Mode::MoveToTarget, &w, &p).unwrap());
        assert!(in_jump_set(Vec2::new(3.5, 0.0), Mode::CLOCKWISE, &w, &p).unwrap());
        assert!(in_jump_set(Vec2::new(10.0, 10.0), Mode::COUNTER_CLOCKWISE, &w, &p).unwrap());
        assert!(!in_jump_set(Vec2::new(6.5, 0.0), Mode::CLOCKWISE, &w, &p).unwrap());
        assert!(!in_jump_set(Vec2::new(3.5, 0.0), Mode::MoveToTarget, &w, &p).unwrap());
        assert_eq!(target_jump_obstacles(Vec2::new(6.5, 0.0), &w, &p), vec![0]);
    }

    #[test]
    fn gate_extreme_examples() {
        let (w, _) = fixture();
        let q = gate_extreme_point(0.4, Turn::Clockwise, 0, &w).unwrap();
        assert!((q.x - 4.608).abs() < 1e-9, "{q:?}");
        assert!((q.y + (23.04f64 - 4.608 * 4.608).sqrt()).abs() < 1e-9, "{q:?}");
        let q2 = gate_extreme_point(0.4, Turn::CounterClockwise, 0, &w).unwrap();
        assert!((q2.x - q.x).abs() < 1e-12 && (q2.y + q.y).abs() < 1e-12);
        assert!((q.norm() - 4.8).abs() < 1e-12 && (q2.norm() - 4.8).abs() < 1e-12);
        assert!(gate_extreme_point(4.5, Turn::Clockwise, 0, &w).is_err());
    }

    #[test]
    fn gate_extreme_on_polygon_edge_through_origin() {
        // Bottom edge lies on the x axis line y = -1 offset; with dilation 1 the
        // dilated edge contains the origin's tangent, so the far end is chosen.
        let sq = ConvexShape::rectangle(Vec2::new(2.0, 1.0), Vec2::new(4.0, 3.0)).unwrap();
        let w = WorldModel::new(vec![sq], 0.0, 0.5);
        let q = gate_extreme_point(1.0, Turn::Clockwise, 0, &w).unwrap();
        assert!((q - Vec2::new(4.0, 0.0)).norm() < 1e-9, "{q:?}");
    }
}
