//! Scenario runner behind the `hybridnav` binary.

use std::fs;
use std::path::{Path, PathBuf};

use hybridnav::scenario::{RunMode, Scenario, ScenarioFile};
use hybridnav::sim::{HybridTrajectory, SimError};
use hybridnav::Vec2;
use rayon::prelude::*;

pub mod report;
pub mod svg;

use report::{Paired, RunSummary, Summary};

/// Process exit status.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Exit {
    Ok = 0,
    Invalid = 1,
    Unsafe = 2,
    NotConverged = 3,
}

/// Command-line adjustments applied to the file before validation.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub sensor_based: bool,
    pub noise_std: Option<f64>,
    pub seed: Option<u64>,
    pub dwell: Option<f64>,
    pub dt: Option<f64>,
    pub max_time: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, file: &mut ScenarioFile) -> Result<(), String> {
        if self.sensor_based {
            file.mode = RunMode::SensorBased;
        }
        if self.noise_std.is_some() || self.seed.is_some() {
            let Some(sensor) = file.sensor.as_mut() else {
                return Err("--noise-std and --seed need a sensor section in the scenario".into());
            };
            if let Some(n) = self.noise_std {
                sensor.noise_std = n;
            }
            if let Some(s) = self.seed {
                sensor.seed = s;
            }
        }
        if let Some(d) = self.dwell {
            file.sim.dwell = Some(d);
        }
        if let Some(d) = self.dt {
            file.sim.dt = d;
        }
        if let Some(t) = self.max_time {
            file.sim.max_time = t;
        }
        Ok(())
    }
}

/// Parses `"0,2,5-7"` into start indices, checked against `count`.
pub fn parse_starts_filter(spec: &str, count: usize) -> Result<Vec<usize>, String> {
    let mut out = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (a, b) = match part.split_once('-') {
            Some((a, b)) => (a, b),
            None => (part, part),
        };
        let parse = |s: &str| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| format!("invalid start index {s:?} in filter {spec:?}"))
        };
        let (a, b) = (parse(a)?, parse(b)?);
        if a > b || b >= count {
            return Err(format!("start range {part:?} outside 0..{count}"));
        }
        out.extend(a..=b);
    }
    out.sort_unstable();
    out.dedup();
    if out.is_empty() {
        return Err(format!("filter {spec:?} selects no starts"));
    }
    Ok(out)
}

fn load(path: &Path, overrides: &Overrides) -> Result<Scenario, String> {
    let mut file = ScenarioFile::load(path).map_err(|e| e.to_string())?;
    overrides.apply(&mut file)?;
    file.build().map_err(|e| e.to_string())
}

pub fn cmd_validate(path: &Path, overrides: &Overrides) -> Exit {
    match load(path, overrides) {
        Ok(s) => {
            for w in &s.warnings {
                eprintln!("warning: {w}");
            }
            println!(
                "{}: valid ({} obstacles, {} starts, r_a = {})",
                path.display(),
                s.world.len(),
                s.starts.len(),
                s.world.inflation()
            );
            Exit::Ok
        }
        Err(e) => {
            eprintln!("{e}");
            Exit::Invalid
        }
    }
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), String> {
    fs::write(path, contents).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn write_trajectory(dir: &Path, name: &str, tr: &HybridTrajectory) -> Result<(), String> {
    let mut buf = Vec::new();
    tr.write_csv(&mut buf).expect("writing to memory");
    write(&dir.join(format!("{name}.csv")), buf)
}

fn sim_failure(e: &SimError) -> (Exit, &'static str) {
    match e {
        SimError::InvalidConfig(_) => (Exit::Invalid, "invalid"),
        _ => (Exit::Unsafe, "unsafe"),
    }
}

/// Runs the selected starts and writes per-start CSVs, `summary.json` and
/// `plot.svg` into `out`.
pub fn cmd_run(path: &Path, out: &Path, overrides: &Overrides, filter: Option<&str>) -> Exit {
    let scenario = match load(path, overrides) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{e}");
            return Exit::Invalid;
        }
    };
    for w in &scenario.warnings {
        eprintln!("warning: {w}");
    }
    let indices = match filter {
        Some(f) => match parse_starts_filter(f, scenario.starts.len()) {
            Ok(i) => i,
            Err(e) => {
                eprintln!("{e}");
                return Exit::Invalid;
            }
        },
        None => (0..scenario.starts.len()).collect(),
    };
    match run_and_write(&scenario, &indices, out) {
        Ok(exit) => exit,
        Err(e) => {
            eprintln!("{e}");
            Exit::Invalid
        }
    }
}

fn run_and_write(scenario: &Scenario, indices: &[usize], out: &Path) -> Result<Exit, String> {
    fs::create_dir_all(out).map_err(|e| format!("cannot create {}: {e}", out.display()))?;
    let sensor = scenario.mode == RunMode::SensorBased;
    let results = scenario.run_batch(indices);
    let paired: Vec<Option<Result<HybridTrajectory, SimError>>> = if sensor {
        indices
            .par_iter()
            .map(|&i| Some(scenario.run_known_map(scenario.starts[i])))
            .collect()
    } else {
        vec![None; indices.len()]
    };

    let r_a = scenario.world.inflation();
    let mut exit = Exit::Ok;
    let mut runs = Vec::new();
    let mut tracks = Vec::new();
    let mut decisions: Vec<Vec2> = Vec::new();
    for ((&i, result), known) in indices.iter().zip(&results).zip(&paired) {
        let x0 = scenario.starts[i];
        let s = scenario.decision_for(x0);
        if !decisions.iter().any(|d| (*d - s).norm() < 1e-12) {
            decisions.push(s);
        }
        let dir = out.join(format!("start_{i:02}"));
        fs::create_dir_all(&dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
        let tr = match result {
            Ok(tr) => tr,
            Err(e) => {
                let (code, status) = sim_failure(e);
                eprintln!("start {i}: {e}");
                exit = exit.max(code);
                runs.push(RunSummary::failed(i, x0, s, status, e.to_string()));
                continue;
            }
        };
        write_trajectory(&dir, "trajectory", tr)?;
        let mut jumps = Vec::new();
        tr.write_jumps_csv(&mut jumps).expect("writing to memory");
        write(&dir.join("jumps.csv"), jumps)?;
        if !tr.converged() {
            exit = exit.max(Exit::NotConverged);
        }
        let mut summary = RunSummary::from_trajectory(i, x0, s, r_a, tr);
        if let Some(known) = known {
            summary.paired = Some(match known {
                Ok(k) => {
                    write_trajectory(&dir, "known_map_trajectory", k)?;
                    let a: Vec<Vec2> = tr.samples.iter().map(|s| s.state.x).collect();
                    let b: Vec<Vec2> = k.samples.iter().map(|s| s.state.x).collect();
                    Paired {
                        known_map_status: report::status_label(k.termination).into(),
                        known_map_jump_count: k.jumps.len(),
                        path_gap: report::path_gap(&a, &b),
                        final_time_gap: tr.last().t - k.last().t,
                    }
                }
                Err(e) => Paired {
                    known_map_status: format!("failed: {e}"),
                    known_map_jump_count: 0,
                    path_gap: f64::NAN,
                    final_time_gap: f64::NAN,
                },
            });
        }
        tracks.push(svg::Track {
            points: tr.samples.iter().map(|s| s.state.x).collect(),
            modes: tr.samples.iter().map(|s| s.state.mode.value()).collect(),
        });
        runs.push(summary);
    }

    let summary = Summary {
        scenario: scenario.name.clone(),
        mode: match scenario.mode {
            RunMode::KnownMap => "known-map".into(),
            RunMode::SensorBased => "sensor-based".into(),
        },
        inflation: r_a,
        warnings: scenario.warnings.clone(),
        runs,
    };
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    write(&out.join("summary.json"), json + "\n")?;
    let plot = svg::Plot {
        world: &scenario.world,
        sets: scenario.sets,
        tracks,
        decisions,
        regions: None,
    };
    write(&out.join("plot.svg"), svg::render(&plot))?;
    for r in &summary.runs {
        println!(
            "start {:>2}: {:<10} t = {:>8.3} s  jumps = {:>3}  min clearance = {:.4} m",
            r.start_index, r.status, r.final_time, r.jump_count, r.min_clearance
        );
    }
    Ok(exit)
}

/// Renders trajectory CSVs over a scenario's world.
pub fn cmd_plot(scenario_path: &Path, trajectories: &[PathBuf], out: &Path, regions: Option<usize>) -> Exit {
    let scenario = match load(scenario_path, &Overrides::default()) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{e}");
            return Exit::Invalid;
        }
    };
    if let Some(k) = regions {
        if k >= scenario.world.len() {
            eprintln!("obstacle {k} does not exist (scenario has {})", scenario.world.len());
            return Exit::Invalid;
        }
    }
    let mut tracks = Vec::new();
    for p in trajectories {
        let text = match fs::read_to_string(p) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("cannot read {}: {e}", p.display());
                return Exit::Invalid;
            }
        };
        match report::parse_trajectory(&text) {
            Ok(rows) => tracks.push(svg::Track {
                points: rows.iter().map(|r| r.x).collect(),
                modes: rows.iter().map(|r| r.m).collect(),
            }),
            Err(e) => {
                eprintln!("{}: {e}", p.display());
                return Exit::Invalid;
            }
        }
    }
    let decisions = match scenario.decision {
        Some(s) => vec![s],
        None => tracks
            .iter()
            .filter_map(|t| t.points.first())
            .map(|x0| scenario.decision_for(*x0))
            .collect(),
    };
    let plot = svg::Plot {
        world: &scenario.world,
        sets: scenario.sets,
        tracks,
        decisions,
        regions,
    };
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        if let Err(e) = fs::create_dir_all(parent) {
            eprintln!("cannot create {}: {e}", parent.display());
            return Exit::Invalid;
        }
    }
    match write(out, svg::render(&plot)) {
        Ok(()) => Exit::Ok,
        Err(e) => {
            eprintln!("{e}");
            Exit::Invalid
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn starts_filter() {
        assert_eq!(parse_starts_filter("0,2,5-7", 10).unwrap(), vec![0, 2, 5, 6, 7]);
        assert_eq!(parse_starts_filter("3,3", 4).unwrap(), vec![3]);
        assert!(parse_starts_filter("4", 4).is_err());
        assert!(parse_starts_filter("2-1", 4).is_err());
        assert!(parse_starts_filter("x", 4).is_err());
        assert!(parse_starts_filter("", 4).is_err());
    }
}
