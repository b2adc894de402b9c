//! The hybrid feedback law and its discrete update maps.
//!
//! In mode `0` the input is the pure stabiliser `u = -γx`. In the avoidance
//! modes it blends that stabiliser with a rotation of the obstacle normal,
//!
//! ```text
//! u = -γ κ x + γ (1 - κ) v,    v = ν_m((x - Π) / ‖x - Π‖) ‖x‖,
//! ```
//!
//! where `κ` ramps from 0 at distance `r_a + ε` to 1 at `r_a + ε_s`.

use thiserror::Error;

use crate::geometry::{rotate_unchecked, Turn, Vec2};
use crate::regions::{self, Mode, RegionError, SetParams, DELTA_SET};
use crate::world::WorldModel;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ControllerError {
    #[error("invalid controller parameters: {0}")]
    InvalidParams(String),
    #[error("position ({0}, {1}) has no outward normal: it lies on an obstacle")]
    NoNormal(f64, f64),
    #[error("state (x = ({x}, {y}), m = {m}) is not in the jump set")]
    NotInJumpSet { x: f64, y: f64, m: i8 },
    #[error("no obstacle index {0}")]
    NoSuchObstacle(usize),
    #[error(transparent)]
    Region(#[from] RegionError),
}

pub type Result<T> = std::result::Result<T, ControllerError>;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ControllerParams {
    /// Gain `γ > 0`.
    pub gamma: f64,
    /// Direction-decision vector `s ≠ 0`.
    pub s: Vec2,
    pub sets: SetParams,
    /// Direction chosen when `x · s` is zero within tolerance.
    pub tie: Turn,
}

impl ControllerParams {
    pub fn new(gamma: f64, s: Vec2, sets: SetParams) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(ControllerError::InvalidParams(format!(
                "gain must be positive, got {gamma}"
            )));
        }
        if !(s.is_finite() && s.norm() > 0.0) {
            return Err(ControllerError::InvalidParams(
                "decision vector s must be finite and non-zero".into(),
            ));
        }
        Ok(Self {
            gamma,
            s,
            sets,
            tie: Turn::Clockwise,
        })
    }

    pub fn with_tie(mut self, tie: Turn) -> Self {
        self.tie = tie;
        self
    }
}

/// Continuous state, mode and index of the obstacle being avoided.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HybridState {
    pub x: Vec2,
    pub mode: Mode,
    pub k: usize,
}

impl HybridState {
    /// Checks that `x` is outside the inflated obstacles and `k` names one of them.
    pub fn new(x: Vec2, mode: Mode, k: usize, world: &WorldModel) -> Result<Self> {
        if !world.is_empty() && k >= world.len() {
            return Err(ControllerError::NoSuchObstacle(k));
        }
        let r_a = world.inflation();
        if let Some(n) = world.nearest_obstacle(x) {
            if n.distance < r_a - regions::DELTA_SAFETY {
                return Err(RegionError::Unsafe {
                    x: x.x,
                    y: x.y,
                    obstacle: n.index,
                    depth: r_a - n.distance,
                }
                .into());
            }
        }
        Ok(Self { x, mode, k })
    }
}

/// `ϱ(x) = d(x, O_W) - r_a`.
pub fn proximity(x: Vec2, world: &WorldModel) -> f64 {
    world.distance(x) - world.inflation()
}

/// Piecewise-linear ramp, 0 below `ε` and 1 above `ε_s`.
pub fn eta(rho: f64, p: &SetParams) -> f64 {
    if rho >= p.eps_s {
        1.0
    } else if rho <= p.eps {
        0.0
    } else {
        (rho - p.eps) / (p.eps_s - p.eps)
    }
}

/// `κ(x, m) = 1 + m²(η(ϱ(x)) - 1)`.
pub fn kappa(x: Vec2, mode: Mode, world: &WorldModel, p: &SetParams) -> f64 {
    match mode {
        Mode::MoveToTarget => 1.0,
        Mode::Avoid(_) => eta(proximity(x, world), p),
    }
}

/// `v(x, m)`: the unit outward normal at `x` turned a quarter in direction
/// `turn`, scaled to `‖x‖`.
pub fn rotational_vector(x: Vec2, turn: Turn, world: &WorldModel) -> Result<Vec2> {
    let n = world
        .nearest_obstacle(x)
        .ok_or(ControllerError::NoNormal(x.x, x.y))?;
    rotational_from_projection(x, turn, n.projection)
}

/// [`rotational_vector`] given the projection `Π` directly.
pub fn rotational_from_projection(x: Vec2, turn: Turn, projection: Vec2) -> Result<Vec2> {
    let normal = (x - projection)
        .normalized()
        .ok_or(ControllerError::NoNormal(x.x, x.y))?;
    Ok(rotate_unchecked(normal, turn) * x.norm())
}

/// `u(x, m)` for a known map.
pub fn control_input(state: &HybridState, world: &WorldModel, params: &ControllerParams) -> Result<Vec2> {
    match state.mode {
        Mode::MoveToTarget => Ok(-params.gamma * state.x),
        Mode::Avoid(turn) => {
            let nearest = match world.nearest_obstacle(state.x) {
                Some(n) => n,
                None => return Ok(-params.gamma * state.x),
            };
            let rho = nearest.distance - world.inflation();
            blend(state.x, turn, rho, nearest.projection, params)
        }
    }
}

/// Avoidance-mode input from a proximity `rho` and a projection, both of
/// which may come from sensor data instead of the map. The projection is
/// only used when `κ < 1`.
pub fn blend(x: Vec2, turn: Turn, rho: f64, projection: Vec2, params: &ControllerParams) -> Result<Vec2> {
    let k = eta(rho, &params.sets);
    let stabiliser = -params.gamma * x;
    if k >= 1.0 {
        return Ok(stabiliser);
    }
    let v = rotational_from_projection(x, turn, projection)?;
    Ok(k * stabiliser + params.gamma * (1.0 - k) * v)
}

/// `M(x)`: the sign of `x · s`, with ties broken by `params.tie`.
pub fn decide_direction(x: Vec2, params: &ControllerParams) -> Turn {
    let dot = x.dot(params.s);
    if dot.abs() <= DELTA_SET {
        params.tie
    } else if dot > 0.0 {
        Turn::Clockwise
    } else {
        Turn::CounterClockwise
    }
}

/// Mode after a jump from `mode` at `x`, without checking jump-set membership.
pub fn next_mode(x: Vec2, mode: Mode, params: &ControllerParams) -> Mode {
    match mode {
        Mode::Avoid(_) => Mode::MoveToTarget,
        Mode::MoveToTarget => Mode::Avoid(decide_direction(x, params)),
    }
}

/// The mode update `L`. Fails if `state` is not in its jump set.
pub fn mode_update(state: &HybridState, world: &WorldModel, params: &ControllerParams) -> Result<Mode> {
    require_jump(state, world, params)?;
    Ok(next_mode(state.x, state.mode, params))
}

/// The obstacle update `N`. Fails if `state` is not in its jump set.
pub fn obstacle_update(state: &HybridState, world: &WorldModel, params: &ControllerParams) -> Result<usize> {
    require_jump(state, world, params)?;
    match state.mode {
        Mode::Avoid(_) => Ok(state.k),
        Mode::MoveToTarget => Ok(regions::target_jump_obstacles(state.x, world, &params.sets)[0]),
    }
}

/// Both updates applied together.
pub fn jump(state: &HybridState, world: &WorldModel, params: &ControllerParams) -> Result<HybridState> {
    let mode = mode_update(state, world, params)?;
    let k = obstacle_update(state, world, params)?;
    Ok(HybridState { x: state.x, mode, k })
}

fn require_jump(state: &HybridState, world: &WorldModel, params: &ControllerParams) -> Result<()> {
    let inside = regions::in_jump_set(state.x, state.mode, world, &params.sets)?;
    let has_target = state.mode != Mode::MoveToTarget
        || !regions::target_jump_obstacles(state.x, world, &params.sets).is_empty();
    if inside && has_target {
        Ok(())
    } else {
        Err(ControllerError::NotInJumpSet {
            x: state.x.x,
            y: state.x.y,
            m: state.mode.value(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ConvexShape;

    fn world() -> WorldModel {
        WorldModel::new(
            vec![ConvexShape::disc(Vec2::new(5.0, 0.0), 1.0).unwrap()],
            0.3,
            0.1,
        )
    }

    fn params() -> ControllerParams {
        ControllerParams::new(0.2, Vec2::new(0.0, -1.0), SetParams::new(0.35, 0.2, 0.1).unwrap()).unwrap()
    }

    fn close(a: Vec2, b: Vec2, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn proximity_examples() {
        let w = world();
        assert!((proximity(Vec2::new(3.5, 0.0), &w) - 0.1).abs() < 1e-12);
        assert!((proximity(Vec2::ZERO, &w) - 3.6).abs() < 1e-12);
        assert!(proximity(Vec2::new(5.0, 1.4), &w).abs() < 1e-12);
    }

    #[test]
    fn eta_and_kappa_examples() {
        let p = params().sets;
        assert_eq!(eta(0.05, &p), 0.0);
        assert!((eta(0.15, &p) - 0.5).abs() < 1e-12);
        assert_eq!(eta(0.3, &p), 1.0);
        let w = world();
        assert_eq!(kappa(Vec2::new(3.45, 0.0), Mode::MoveToTarget, &w, &p), 1.0);
        assert!((kappa(Vec2::new(3.45, 0.0), Mode::CLOCKWISE, &w, &p) - 0.5).abs() < 1e-12);
        assert_eq!(kappa(Vec2::new(3.55, 0.0), Mode::COUNTER_CLOCKWISE, &w, &p), 0.0);
    }

    #[test]
    fn rotational_vector_examples() {
        let w = world();
        let x = Vec2::new(3.5, 0.0);
        assert!(close(rotational_vector(x, Turn::Clockwise, &w).unwrap(), Vec2::new(0.0, 3.5), 1e-12));
        assert!(close(
            rotational_vector(x, Turn::CounterClockwise, &w).unwrap(),
            Vec2::new(0.0, -3.5),
            1e-12
        ));
        let gate = Vec2::new(4.55, (1.5f64 * 1.5 - 0.45 * 0.45).sqrt());
        let v = rotational_vector(gate, Turn::CounterClockwise, &w).unwrap();
        assert!(close(v, -gate, 1e-9 * gate.norm()));
        assert!(rotational_vector(Vec2::new(4.0, 0.0), Turn::Clockwise, &w).is_err());
    }

    #[test]
    fn control_input_examples() {
        let w = world();
        let p = params();
        let s = |x, y, mode| HybridState { x: Vec2::new(x, y), mode, k: 0 };
        assert!(close(control_input(&s(3.5, 0.0, Mode::MoveToTarget), &w, &p).unwrap(), Vec2::new(-0.7, 0.0), 1e-12));
        assert!(close(control_input(&s(3.5, 0.0, Mode::CLOCKWISE), &w, &p).unwrap(), Vec2::new(0.0, 0.7), 1e-12));
        assert!(close(
            control_input(&s(3.45, 0.0, Mode::CLOCKWISE), &w, &p).unwrap(),
            Vec2::new(-0.345, 0.345),
            1e-12
        ));
        // Outside the ε_s band the avoidance modes reduce to the stabiliser.
        assert!(close(control_input(&s(3.0, 0.0, Mode::CLOCKWISE), &w, &p).unwrap(), Vec2::new(-0.6, 0.0), 1e-12));
    }

    #[test]
    fn mode_update_examples() {
        let w = world();
        let p = params();
        let st = HybridState { x: Vec2::new(3.5, 0.0), mode: Mode::CLOCKWISE, k: 0 };
        assert_eq!(mode_update(&st, &w, &p).unwrap(), Mode::MoveToTarget);
        assert_eq!(decide_direction(Vec2::new(3.5, -2.0), &p), Turn::Clockwise);
        assert_eq!(decide_direction(Vec2::new(3.5, 2.0), &p), Turn::CounterClockwise);
        assert_eq!(decide_direction(Vec2::new(3.5, 0.0), &p), Turn::Clockwise);
        let st = HybridState { x: Vec2::new(6.5, 0.0), mode: Mode::MoveToTarget, k: 0 };
        assert_eq!(mode_update(&st, &w, &p).unwrap(), Mode::CLOCKWISE);
        let outside = HybridState { x: Vec2::new(3.5, 0.0), mode: Mode::MoveToTarget, k: 0 };
        assert!(matches!(mode_update(&outside, &w, &p), Err(ControllerError::NotInJumpSet { .. })));
    }

    #[test]
    fn obstacle_update_examples() {
        let p = params();
        let w = world();
        let st = HybridState { x: Vec2::new(6.5, 0.0), mode: Mode::MoveToTarget, k: 0 };
        assert_eq!(obstacle_update(&st, &w, &p).unwrap(), 0);
        let st = HybridState { x: Vec2::new(3.5, 0.0), mode: Mode::CLOCKWISE, k: 0 };
        assert_eq!(obstacle_update(&st, &w, &p).unwrap(), 0);

        let two = WorldModel::new(
            vec![
                ConvexShape::disc(Vec2::new(5.0, 0.0), 1.0).unwrap(),
                ConvexShape::disc(Vec2::new(-5.0, 0.0), 1.0).unwrap(),
            ],
            0.3,
            0.1,
        );
        let st = HybridState { x: Vec2::new(-6.5, 0.0), mode: Mode::MoveToTarget, k: 0 };
        let next = jump(&st, &two, &p).unwrap();
        assert_eq!(next.k, 1);
        assert_eq!(next.mode, Mode::CLOCKWISE);
    }

    #[test]
    fn invalid_params_and_states() {
        let sets = params().sets;
        assert!(ControllerParams::new(0.0, Vec2::new(1.0, 0.0), sets).is_err());
        assert!(ControllerParams::new(1.0, Vec2::ZERO, sets).is_err());
        assert!(HybridState::new(Vec2::new(5.0, 1.2), Mode::MoveToTarget, 0, &world()).is_err());
        assert!(HybridState::new(Vec2::new(0.0, 0.0), Mode::MoveToTarget, 3, &world()).is_err());
    }
}
