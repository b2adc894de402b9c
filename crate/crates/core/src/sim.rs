//! Closed-loop simulation on hybrid time `(t, j)`.
//!
//! The known-map loop integrates `ẋ = u(x, m)` with fixed-step RK4. A jump is
//! taken only when flowing on would leave the current flow set; the exit
//! point is located by bisection on the step fraction so that the mode
//! switch happens on the boundary and the input stays continuous.
//!
//! The sensor-based loop holds `u` constant over each control period, takes a
//! fresh scan every period and decides jumps from the scan alone.

use std::io::{self, Write};

use thiserror::Error;

use crate::controller::{self, ControllerError, ControllerParams, HybridState};
use crate::geometry::{rotate_unchecked, Turn, Vec2};
use crate::regions::{self, Mode, SetParams, DELTA_SAFETY};
use crate::sensor::{self, SensorConfig, SensorTrigger};
use crate::world::WorldModel;

/// Relative step-fraction tolerance for locating a flow-set exit.
const EXIT_TOL: f64 = 1e-9;
/// Jumps at one instant, without flow in between, that count as Zeno.
const ZENO_ALTERNATIONS: usize = 100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid simulation settings: {0}")]
    InvalidConfig(String),
    #[error("safety violated at t = {t:.6}: ({x}, {y}) is {depth:e} m inside the inflated obstacles")]
    Unsafe { t: f64, x: f64, y: f64, depth: f64 },
    #[error(transparent)]
    Controller(#[from] ControllerError),
}

pub type Result<T> = std::result::Result<T, SimError>;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimConfig {
    /// Integration step `h`.
    pub dt: f64,
    pub max_time: f64,
    /// Minimum time between two jumps.
    pub dwell: f64,
    pub convergence_radius: f64,
    /// Jump only when flowing on would leave the flow set.
    pub flow_priority: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            max_time: 600.0,
            dwell: 1e-2,
            convergence_radius: 0.05,
            flow_priority: true,
        }
    }
}

impl SimConfig {
    // Negated comparisons so that NaN fails every check.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(SimError::InvalidConfig(m));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.dwell >= 0.0) {
            return bad(format!("dwell must be non-negative, got {}", self.dwell));
        }
        if !(self.max_time > 0.0) {
            return bad(format!("max_time must be positive, got {}", self.max_time));
        }
        if !(self.convergence_radius >= 0.0) {
            return bad(format!(
                "convergence_radius must be non-negative, got {}",
                self.convergence_radius
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub j: usize,
    pub state: HybridState,
    pub u: Vec2,
    /// True distance `d(x, O_W)`.
    pub dmin: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JumpTrigger {
    /// The flow would leave `F_m` (known map).
    FlowExit,
    /// Started outside `F_m`, or jump priority is in force (known map).
    InJumpSet,
    Sensor(SensorTrigger),
}

impl JumpTrigger {
    pub fn label(self) -> &'static str {
        match self {
            JumpTrigger::FlowExit => "flow-exit",
            JumpTrigger::InJumpSet => "jump-set",
            JumpTrigger::Sensor(SensorTrigger::Far) => "sensor-far",
            JumpTrigger::Sensor(SensorTrigger::Back) => "sensor-back",
            JumpTrigger::Sensor(SensorTrigger::Corridor) => "sensor-corridor",
            JumpTrigger::Sensor(SensorTrigger::Clear) => "sensor-clear",
            JumpTrigger::Sensor(SensorTrigger::Avoiding) => "sensor-avoiding",
            JumpTrigger::Sensor(SensorTrigger::Opposite) => "sensor-opposite",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JumpEvent {
    pub t: f64,
    /// Jump count after the jump.
    pub j: usize,
    pub from: HybridState,
    pub to: HybridState,
    pub trigger: JumpTrigger,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxTime,
    /// Jumps kept alternating at one instant.
    Zeno,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HybridTrajectory {
    pub samples: Vec<Sample>,
    pub jumps: Vec<JumpEvent>,
    pub termination: Termination,
}

impl HybridTrajectory {
    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectories start with a sample")
    }

    /// Smallest `d(x, O_W) - r_a` over all samples.
    pub fn min_clearance(&self, r_a: f64) -> f64 {
        self.samples
            .iter()
            .map(|s| s.dmin - r_a)
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest `‖Δu‖` between consecutive flow samples and across jumps.
    pub fn control_increments(&self) -> (f64, f64) {
        let mut flow: f64 = 0.0;
        let mut jump: f64 = 0.0;
        for w in self.samples.windows(2) {
            let du = (w[1].u - w[0].u).norm();
            if w[1].j != w[0].j {
                jump = jump.max(du);
            } else {
                flow = flow.max(du);
            }
        }
        (flow, jump)
    }

    /// Writes `t,j,x,y,m,k,ux,uy,dmin` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,j,x,y,m,k,ux,uy,dmin")?;
        for s in &self.samples {
            writeln!(
                w,
                "{:.8e},{},{:.8e},{:.8e},{},{},{:.8e},{:.8e},{:.8e}",
                s.t,
                s.j,
                s.state.x.x,
                s.state.x.y,
                s.state.mode.value(),
                s.state.k,
                s.u.x,
                s.u.y,
                s.dmin
            )?;
        }
        Ok(())
    }

    /// Writes `t,j,m_old,m_new,k_old,k_new,trigger` rows.
    pub fn write_jumps_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,j,m_old,m_new,k_old,k_new,trigger")?;
        for e in &self.jumps {
            writeln!(
                w,
                "{:.8e},{},{},{},{},{},{}",
                e.t,
                e.j,
                e.from.mode.value(),
                e.to.mode.value(),
                e.from.k,
                e.to.k,
                e.trigger.label()
            )?;
        }
        Ok(())
    }
}

fn safety_check(t: f64, x: Vec2, world: &WorldModel) -> Result<f64> {
    let d = world.distance(x);
    if d < world.inflation() - DELTA_SAFETY {
        return Err(SimError::Unsafe {
            t,
            x: x.x,
            y: x.y,
            depth: world.inflation() - d,
        });
    }
    Ok(d)
}

fn initial_obstacle(x: Vec2, world: &WorldModel) -> usize {
    world.nearest_obstacle(x).map_or(0, |n| n.index)
}

/// One RK4 step of `ẋ = u(x, m)` with the mode frozen.
pub fn step_flow(
    state: &HybridState,
    world: &WorldModel,
    params: &ControllerParams,
    h: f64,
) -> Result<HybridState> {
    let f = |x: Vec2| {
        controller::control_input(
            &HybridState {
                x,
                mode: state.mode,
                k: state.k,
            },
            world,
            params,
        )
    };
    let x = state.x;
    let k1 = f(x)?;
    let k2 = f(x + k1 * (h / 2.0))?;
    let k3 = f(x + k2 * (h / 2.0))?;
    let k4 = f(x + k3 * h)?;
    let next = x + (k1 + 2.0 * k2 + 2.0 * k3 + k4) * (h / 6.0);
    Ok(HybridState { x: next, ..*state })
}

/// Applies the jump maps if `state` is in its jump set and the dwell time has
/// passed since `last_jump`.
pub fn try_jump(
    state: &HybridState,
    world: &WorldModel,
    params: &ControllerParams,
    t: f64,
    last_jump: Option<f64>,
    dwell: f64,
) -> Result<Option<HybridState>> {
    if last_jump.is_some_and(|tj| t - tj < dwell) {
        return Ok(None);
    }
    if !regions::in_jump_set(state.x, state.mode, world, &params.sets).map_err(ControllerError::from)? {
        return Ok(None);
    }
    Ok(Some(jump_unchecked(state, world, params)))
}

fn jump_unchecked(state: &HybridState, world: &WorldModel, params: &ControllerParams) -> HybridState {
    let mode = controller::next_mode(state.x, state.mode, params);
    let k = match state.mode {
        Mode::Avoid(_) => state.k,
        Mode::MoveToTarget => regions::target_jump_obstacles(state.x, world, &params.sets)
            .first()
            .copied()
            .unwrap_or_else(|| initial_obstacle(state.x, world)),
    };
    HybridState { x: state.x, mode, k }
}

struct Recorder<'a> {
    world: &'a WorldModel,
    samples: Vec<Sample>,
    jumps: Vec<JumpEvent>,
    j: usize,
    last_jump: Option<f64>,
}

impl<'a> Recorder<'a> {
    fn new(world: &'a WorldModel) -> Self {
        Self {
            world,
            samples: Vec::new(),
            jumps: Vec::new(),
            j: 0,
            last_jump: None,
        }
    }

    fn sample(&mut self, t: f64, state: HybridState, u: Vec2) -> Result<()> {
        let dmin = safety_check(t, state.x, self.world)?;
        self.samples.push(Sample {
            t,
            j: self.j,
            state,
            u,
            dmin,
        });
        Ok(())
    }

    fn jump(&mut self, t: f64, from: HybridState, to: HybridState, trigger: JumpTrigger) {
        self.j += 1;
        self.last_jump = Some(t);
        self.jumps.push(JumpEvent {
            t,
            j: self.j,
            from,
            to,
            trigger,
        });
    }

    fn dwell_ok(&self, t: f64, dwell: f64) -> bool {
        self.last_jump.is_none_or(|tj| t - tj >= dwell)
    }

    fn finish(self, termination: Termination) -> HybridTrajectory {
        HybridTrajectory {
            samples: self.samples,
            jumps: self.jumps,
            termination,
        }
    }
}

/// Known-map closed loop from `x0` in mode 0.
pub fn run(
    x0: Vec2,
    world: &WorldModel,
    params: &ControllerParams,
    cfg: &SimConfig,
) -> Result<HybridTrajectory> {
    run_from(
        HybridState::new(x0, Mode::MoveToTarget, initial_obstacle(x0, world), world)?,
        world,
        params,
        cfg,
    )
}

/// Known-map closed loop from an arbitrary hybrid state.
pub fn run_from(
    start: HybridState,
    world: &WorldModel,
    params: &ControllerParams,
    cfg: &SimConfig,
) -> Result<HybridTrajectory> {
    cfg.validate()?;
    let sets = &params.sets;
    let u_of = |s: &HybridState| controller::control_input(s, world, params);
    let mut rec = Recorder::new(world);
    let mut state = start;
    let mut t = 0.0;
    rec.sample(t, state, u_of(&state)?)?;
    let mut same_instant = 0usize;
    loop {
        if state.x.norm() <= cfg.convergence_radius {
            return Ok(rec.finish(Termination::Converged));
        }
        if t >= cfg.max_time {
            return Ok(rec.finish(Termination::MaxTime));
        }
        let flows = regions::flow_unchecked(state.x, state.mode, world, sets);
        let wants_jump = if cfg.flow_priority {
            !flows
        } else {
            regions::jump_unchecked(state.x, state.mode, world, sets)
        };
        if wants_jump && rec.dwell_ok(t, cfg.dwell) {
            let next = jump_unchecked(&state, world, params);
            rec.jump(t, state, next, JumpTrigger::InJumpSet);
            state = next;
            rec.sample(t, state, u_of(&state)?)?;
            same_instant += 1;
            if same_instant >= 2 * ZENO_ALTERNATIONS {
                return Ok(rec.finish(Termination::Zeno));
            }
            continue;
        }
        same_instant = 0;
        let h = cfg.dt.min(cfg.max_time - t).max(f64::MIN_POSITIVE);
        let next = step_flow(&state, world, params, h)?;
        let leaves = cfg.flow_priority
            && flows
            && !regions::flow_unchecked(next.x, state.mode, world, sets)
            && rec.dwell_ok(t + h, cfg.dwell);
        if !leaves {
            t += h;
            state = next;
            rec.sample(t, state, u_of(&state)?)?;
            continue;
        }
        // Bisect for the first fraction of the step that leaves the flow set.
        let (mut lo, mut hi) = (0.0, 1.0);
        let mut exit = next;
        while hi - lo > EXIT_TOL {
            let mid = 0.5 * (lo + hi);
            let trial = step_flow(&state, world, params, mid * h)?;
            if regions::flow_unchecked(trial.x, state.mode, world, sets) {
                lo = mid;
            } else {
                hi = mid;
                exit = trial;
            }
        }
        t += hi * h;
        state = exit;
        rec.sample(t, state, u_of(&state)?)?;
        if rec.dwell_ok(t, cfg.dwell) {
            let next = jump_unchecked(&state, world, params);
            rec.jump(t, state, next, JumpTrigger::FlowExit);
            state = next;
            rec.sample(t, state, u_of(&state)?)?;
        }
    }
}

/// Sensor settings and the inner-layer fraction used when a jump adapts the
/// layer widths.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SensorRun {
    pub sensor: SensorConfig,
    pub p_frac: f64,
}

/// Sensor-based closed loop from `x0` in mode 0.
///
/// Each control period takes one scan, decides jumps from it, and applies
/// the input computed from the closest return for the whole period. When an
/// avoidance episode starts, `eps_s` becomes the sensed clearance at that
/// moment and `eps = p_frac * eps_s`.
pub fn run_sensor_based(
    x0: Vec2,
    world: &WorldModel,
    params: &ControllerParams,
    sensing: &SensorRun,
    cfg: &SimConfig,
) -> Result<HybridTrajectory> {
    cfg.validate()?;
    if !(sensing.p_frac > 0.0 && sensing.p_frac < 1.0) {
        return Err(SimError::InvalidConfig(format!(
            "p_frac must lie in (0, 1), got {}",
            sensing.p_frac
        )));
    }
    let r_a = world.inflation();
    let eps_d = params.sets.eps_d;
    let scfg = &sensing.sensor;
    let mut scan_index = 0u64;
    let mut take_scan = |x: Vec2| {
        scan_index += 1;
        sensor::scan(x, world, scfg, scan_index)
    };
    let decide = |mode: Mode, scan: &sensor::ScanMeasurement, eps: f64| {
        sensor::sensor_jump_membership(mode, scan, scfg, r_a, eps_d, eps, sensing.p_frac)
    };
    let control = |state: &HybridState, scan: &sensor::ScanMeasurement, layers: &ControllerParams| {
        match state.mode {
            Mode::MoveToTarget => Ok(-layers.gamma * state.x),
            Mode::Avoid(turn) => match sensor::closest_estimate(scan, scfg.noise_std) {
                None => Ok(-layers.gamma * state.x),
                Some(c) => controller::blend(state.x, turn, c.range - r_a, c.point(scan.pose), layers),
            },
        }
    };

    let mut rec = Recorder::new(world);
    let mut state = HybridState::new(x0, Mode::MoveToTarget, initial_obstacle(x0, world), world)?;
    let mut layers = *params;
    let mut t = 0.0;
    let mut scan = take_scan(state.x);
    rec.sample(t, state, control(&state, &scan, &layers)?)?;
    // Position and input of the previous period, for localizing a trigger.
    let mut prev: Option<(Vec2, Vec2, f64)> = None;
    loop {
        if state.x.norm() <= cfg.convergence_radius {
            return Ok(rec.finish(Termination::Converged));
        }
        if t >= cfg.max_time {
            return Ok(rec.finish(Termination::MaxTime));
        }
        let mut decision = decide(state.mode, &scan, layers.sets.eps);
        if decision.jump && rec.dwell_ok(t, cfg.dwell) {
            // The previous period did not trigger; move back to where it first does.
            if let Some((x_prev, u_prev, h_prev)) = prev {
                let (mut lo, mut hi) = (0.0, 1.0);
                let mut found = None;
                while hi - lo > EXIT_TOL.sqrt() {
                    let mid = 0.5 * (lo + hi);
                    let s = take_scan(x_prev + u_prev * (mid * h_prev));
                    let d = decide(state.mode, &s, layers.sets.eps);
                    if d.jump {
                        hi = mid;
                        found = Some((s, d));
                    } else {
                        lo = mid;
                    }
                }
                if let Some((s, d)) = found {
                    t -= (1.0 - hi) * h_prev;
                    let x = s.pose;
                    let samp = rec.samples.last_mut().expect("sampled");
                    samp.t = t;
                    samp.state.x = x;
                    samp.dmin = safety_check(t, x, world)?;
                    state.x = x;
                    scan = s;
                    decision = d;
                }
            }
            let from = state;
            let mode = controller::next_mode(state.x, state.mode, params);
            let k = match state.mode {
                Mode::Avoid(_) => state.k,
                Mode::MoveToTarget => initial_obstacle(state.x, world),
            };
            if let Some((eps_s, eps)) = decision.adapted {
                let eps_s = eps_s.max(f64::EPSILON);
                layers.sets = SetParams {
                    eps_d,
                    eps_s,
                    eps: eps.min(eps_s * sensing.p_frac),
                };
            }
            // Recompute the pre-jump input at the localized point.
            let u_before = control(&from, &scan, &layers)?;
            rec.samples.last_mut().expect("sampled").u = u_before;
            state = HybridState { x: state.x, mode, k };
            rec.jump(t, from, state, JumpTrigger::Sensor(decision.trigger));
            rec.sample(t, state, control(&state, &scan, &layers)?)?;
            prev = None;
            continue;
        }
        let u = control(&state, &scan, &layers)?;
        let h = cfg.dt.min(cfg.max_time - t).max(f64::MIN_POSITIVE);
        prev = Some((state.x, u, h));
        state.x += u * h;
        t += h;
        scan = take_scan(state.x);
        rec.sample(t, state, control(&state, &scan, &layers)?)?;
    }
}

/// A trajectory crossing of a half-line from the origin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Crossing {
    pub t: f64,
    pub j: usize,
    pub norm: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct HalflineReport {
    /// Crossings of `L_>(0, ν_1(s))`, the start included if it lies on it.
    pub positive: Vec<Crossing>,
    /// Crossings of `L_>(0, ν_{-1}(s))`.
    pub negative: Vec<Crossing>,
}

impl HalflineReport {
    /// Whether the norms at successive `ν_1(s)` crossings strictly decrease.
    pub fn positive_decreasing(&self) -> bool {
        self.positive.windows(2).all(|w| w[1].norm < w[0].norm)
    }
}

/// Crossings of the half-lines through the origin along `ν_1(s)` and
/// `ν_{-1}(s)`, found by sign changes of `ν × x` between samples.
pub fn halfline_crossings(traj: &HybridTrajectory, s: Vec2) -> HalflineReport {
    let mut report = HalflineReport::default();
    for (turn, out) in [
        (Turn::Clockwise, &mut report.positive),
        (Turn::CounterClockwise, &mut report.negative),
    ] {
        let nu = rotate_unchecked(s, turn);
        let side = |x: Vec2| {
            let c = nu.cross(x);
            if c.abs() <= 1e-9 * x.norm().max(1e-12) {
                0.0
            } else {
                c.signum()
            }
        };
        let Some(first) = traj.samples.first() else {
            continue;
        };
        if side(first.state.x) == 0.0 && first.state.x.dot(nu) > 0.0 {
            out.push(Crossing {
                t: first.t,
                j: first.j,
                norm: first.state.x.norm(),
            });
        }
        // Last sample strictly off the line.
        let mut anchor: Option<&Sample> = None;
        for smp in &traj.samples {
            let sd = side(smp.state.x);
            if sd == 0.0 {
                continue;
            }
            if let Some(a) = anchor {
                if side(a.state.x) != sd {
                    let (ca, cb) = (nu.cross(a.state.x), nu.cross(smp.state.x));
                    let p = a.state.x.lerp(smp.state.x, ca / (ca - cb));
                    if p.dot(nu) > 0.0 {
                        out.push(Crossing {
                            t: smp.t,
                            j: smp.j,
                            norm: p.norm(),
                        });
                    }
                }
            }
            anchor = Some(smp);
        }
    }
    report
}
