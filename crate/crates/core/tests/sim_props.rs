mod common;

use common::{fixture, vec2};
use hybridnav::scenario::Scenario;
use hybridnav::sim::{halfline_crossings, HybridTrajectory};
use hybridnav::{Mode, Vec2};
use proptest::prelude::*;

/// Properties every accepted known-map run must have.
fn check_run(sc: &Scenario, x0: Vec2, tr: &HybridTrajectory) -> Result<(), TestCaseError> {
    let r_a = sc.world.inflation();
    let gamma = sc.gamma;
    let h = sc.sim.dt;
    prop_assert!(tr.converged(), "{x0:?}: {:?}", tr.termination);
    prop_assert!(tr.min_clearance(r_a) >= -1e-6);

    let hl = halfline_crossings(tr, sc.decision_for(x0));
    prop_assert!(hl.negative.is_empty(), "{x0:?} crossed the forbidden half-line");
    prop_assert!(hl.positive_decreasing(), "{x0:?}: {:?}", hl.positive);

    let (flow, _) = tr.control_increments();
    // A start inside the inner layer jumps before it ever flows; the input
    // before that jump is never applied, so only later jumps count.
    for w in tr.samples.windows(2).filter(|w| w[0].j != w[1].j && w[1].t > 0.0) {
        let du = (w[1].u - w[0].u).norm();
        prop_assert!(du <= 1e-3, "{x0:?}: jump du {du} at t = {}", w[1].t);
    }
    // u is Lipschitz in x with constant gamma (2 + 2|x| / (eps_s - eps) + |x| / r_a):
    // the stabiliser and the norm of v, the inner ramp, and the turning of the
    // normal at clearance at least r_a. The robot moves at most gamma |x| per unit time.
    let reach = tr.samples.iter().map(|s| s.state.x.norm()).fold(0.0, f64::max);
    let lip = gamma * (2.0 + 2.0 * reach / (sc.sets.eps_s - sc.sets.eps) + reach / r_a);
    prop_assert!(flow <= 1.01 * lip * gamma * reach * h, "{x0:?}: flow du {flow}");

    for w in tr.samples.windows(2) {
        if w[0].j == w[1].j && w[0].state.mode == Mode::MoveToTarget {
            prop_assert!(w[1].state.x.norm() <= w[0].state.x.norm() + 1e-12);
        }
    }
    // Each avoidance episode ends, and jumps never pile up at one instant.
    let mut entered = None;
    for j in &tr.jumps {
        match (j.from.mode, j.to.mode) {
            (Mode::MoveToTarget, Mode::Avoid(_)) => entered = Some(j.t),
            (Mode::Avoid(_), _) => {
                let t0 = entered.take().unwrap_or(0.0);
                prop_assert!(j.t - t0 <= sc.sim.max_time / 2.0);
            }
            _ => {}
        }
    }
    prop_assert!(tr.jumps.windows(2).all(|w| w[1].t > w[0].t));
    Ok(())
}

fn random_start(sc: &Scenario, range: f64) -> impl Strategy<Value = Vec2> + '_ {
    let r_a = sc.world.inflation();
    vec2(range).prop_filter("start inside the inflated obstacles", move |x| {
        sc.world.distance(*x) > r_a + 1e-3 && x.norm() > 1.0
    })
}

#[test]
fn multi_start_world_random_starts() {
    let sc = fixture("multi_start.json");
    proptest!(ProptestConfig::with_cases(48), |(x0 in random_start(&sc, 12.0))| {
        let tr = sc.run_known_map(x0).unwrap();
        check_run(&sc, x0, &tr)?;
    });
}

#[test]
fn scenario_a_world_random_starts() {
    let sc = fixture("scenario_a.json");
    proptest!(ProptestConfig::with_cases(24), |(x0 in random_start(&sc, 20.0))| {
        let tr = sc.run_known_map(x0).unwrap();
        check_run(&sc, x0, &tr)?;
    });
}

/// Scaling the whole world, robot and layers included, scales the path.
#[test]
fn paths_scale_with_the_world() {
    let sc = fixture("single_disc.json");
    let lam = 2.5;
    let text = std::fs::read_to_string(
        std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/single_disc.json"),
    )
    .unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let scale = |v: &mut serde_json::Value| *v = (v.as_f64().unwrap() * lam).into();
    for key in ["robot_radius", "safety_margin"] {
        scale(&mut v["world"][key]);
    }
    for o in v["world"]["obstacles"].as_array_mut().unwrap() {
        scale(&mut o["center"][0]);
        scale(&mut o["center"][1]);
        scale(&mut o["radius"]);
    }
    for key in ["eps_d", "eps_s", "eps"] {
        scale(&mut v["controller"][key]);
    }
    scale(&mut v["sensor"]["max_range"]);
    for p in v["starts"].as_array_mut().unwrap() {
        scale(&mut p[0]);
        scale(&mut p[1]);
    }
    v["sim"]["convergence_radius"] = (sc.sim.convergence_radius * lam).into();
    let big = Scenario::from_json(&v.to_string()).unwrap();
    for x0 in &sc.starts {
        let a = sc.run_known_map(*x0).unwrap();
        let b = big.run_known_map(*x0 * lam).unwrap();
        assert!(a.converged() && b.converged());
        assert_eq!(a.jumps.len(), b.jumps.len());
        for (ja, jb) in a.jumps.iter().zip(&b.jumps) {
            assert_eq!(ja.to.mode, jb.to.mode);
            assert!((ja.t - jb.t).abs() <= 2e-3, "{} vs {}", ja.t, jb.t);
            assert!((ja.from.x * lam).distance(jb.from.x) <= 1e-3 * lam);
        }
        assert!((a.last().t - b.last().t).abs() <= 2e-3);
    }
}
