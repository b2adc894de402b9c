//! Run summaries, trajectory CSV parsing and the sensor/known-map comparison.

use std::collections::HashMap;
use std::fmt;

use hybridnav::sim::{halfline_crossings, HybridTrajectory, Termination};
use hybridnav::Vec2;
use serde::Serialize;

pub const TRAJECTORY_HEADER: &str = "t,j,x,y,m,k,ux,uy,dmin";

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub scenario: String,
    pub mode: String,
    pub inflation: f64,
    pub warnings: Vec<String>,
    pub runs: Vec<RunSummary>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub start_index: usize,
    pub start: [f64; 2],
    pub s: [f64; 2],
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub converged: bool,
    pub final_time: f64,
    pub final_norm: f64,
    pub min_clearance: f64,
    pub jump_count: usize,
    pub positive_crossings: Vec<f64>,
    pub negative_crossings: usize,
    pub crossings_decreasing: bool,
    pub max_flow_du: f64,
    pub max_jump_du: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub paired: Option<Paired>,
}

/// Sensor-based run compared with the known-map run from the same start.
#[derive(Clone, Debug, Serialize)]
pub struct Paired {
    pub known_map_status: String,
    pub known_map_jump_count: usize,
    /// Symmetric Hausdorff distance between the two paths.
    pub path_gap: f64,
    pub final_time_gap: f64,
}

pub fn status_label(t: Termination) -> &'static str {
    match t {
        Termination::Converged => "converged",
        Termination::MaxTime => "max-time",
        Termination::Zeno => "zeno",
    }
}

impl RunSummary {
    pub fn from_trajectory(index: usize, start: Vec2, s: Vec2, r_a: f64, tr: &HybridTrajectory) -> Self {
        let last = tr.last();
        let hl = halfline_crossings(tr, s);
        let (flow, jump) = tr.control_increments();
        RunSummary {
            start_index: index,
            start: start.into(),
            s: s.into(),
            status: status_label(tr.termination).into(),
            error: None,
            converged: tr.converged(),
            final_time: last.t,
            final_norm: last.state.x.norm(),
            min_clearance: tr.min_clearance(r_a),
            jump_count: tr.jumps.len(),
            positive_crossings: hl.positive.iter().map(|c| c.norm).collect(),
            negative_crossings: hl.negative.len(),
            crossings_decreasing: hl.positive_decreasing(),
            max_flow_du: flow,
            max_jump_du: jump,
            paired: None,
        }
    }

    pub fn failed(index: usize, start: Vec2, s: Vec2, status: &str, error: String) -> Self {
        RunSummary {
            start_index: index,
            start: start.into(),
            s: s.into(),
            status: status.into(),
            error: Some(error),
            converged: false,
            final_time: f64::NAN,
            final_norm: f64::NAN,
            min_clearance: f64::NAN,
            jump_count: 0,
            positive_crossings: Vec::new(),
            negative_crossings: 0,
            crossings_decreasing: false,
            max_flow_du: f64::NAN,
            max_jump_du: f64::NAN,
            paired: None,
        }
    }
}

/// Symmetric Hausdorff distance between two point sequences, using a hash
/// grid so that long trajectories stay cheap.
pub fn path_gap(a: &[Vec2], b: &[Vec2]) -> f64 {
    directed_gap(a, b).max(directed_gap(b, a))
}

fn directed_gap(from: &[Vec2], to: &[Vec2]) -> f64 {
    if from.is_empty() || to.is_empty() {
        return f64::INFINITY;
    }
    let cell = 0.25;
    let key = |p: Vec2| ((p.x / cell).floor() as i64, (p.y / cell).floor() as i64);
    let mut grid: HashMap<(i64, i64), Vec<Vec2>> = HashMap::new();
    for p in to {
        grid.entry(key(*p)).or_default().push(*p);
    }
    let mut worst: f64 = 0.0;
    for p in from {
        let (cx, cy) = key(*p);
        let mut best = f64::INFINITY;
        let mut ring = 0i64;
        // Once a candidate is found, one more ring covers anything closer.
        loop {
            for dx in -ring..=ring {
                for dy in -ring..=ring {
                    if dx.abs() != ring && dy.abs() != ring {
                        continue;
                    }
                    if let Some(pts) = grid.get(&(cx + dx, cy + dy)) {
                        for q in pts {
                            best = best.min(p.distance(*q));
                        }
                    }
                }
            }
            if best <= ring as f64 * cell {
                break;
            }
            ring += 1;
            // Far from the other path, scanning empty rings costs more than a linear pass.
            if ring > 8 && best.is_infinite() {
                best = to.iter().map(|q| p.distance(*q)).fold(f64::INFINITY, f64::min);
                break;
            }
        }
        worst = worst.max(best);
    }
    worst
}

/// Row of a trajectory CSV.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Row {
    pub t: f64,
    pub j: usize,
    pub x: Vec2,
    pub m: i8,
    pub k: usize,
    pub u: Vec2,
    pub dmin: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CsvError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for CsvError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for CsvError {}

/// Parses the trajectory CSV written by `run`.
pub fn parse_trajectory(text: &str) -> Result<Vec<Row>, CsvError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == TRAJECTORY_HEADER => {}
        Some((_, h)) => {
            return Err(CsvError {
                line: 1,
                message: format!("expected header {TRAJECTORY_HEADER:?}, found {h:?}"),
            })
        }
        None => {
            return Err(CsvError {
                line: 1,
                message: "empty file".into(),
            })
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            return Err(CsvError {
                line: line_no,
                message: format!("expected 9 fields, found {}", fields.len()),
            });
        }
        let bad = |name: &str, v: &str| CsvError {
            line: line_no,
            message: format!("invalid {name} value {v:?}"),
        };
        let f = |idx: usize, name: &str| fields[idx].trim().parse::<f64>().map_err(|_| bad(name, fields[idx]));
        let n = |idx: usize, name: &str| fields[idx].trim().parse::<usize>().map_err(|_| bad(name, fields[idx]));
        let m = fields[4]
            .trim()
            .parse::<i8>()
            .ok()
            .filter(|m| (-1..=1).contains(m))
            .ok_or_else(|| bad("m", fields[4]))?;
        rows.push(Row {
            t: f(0, "t")?,
            j: n(1, "j")?,
            x: Vec2::new(f(2, "x")?, f(3, "y")?),
            m,
            k: n(5, "k")?,
            u: Vec2::new(f(6, "ux")?, f(7, "uy")?),
            dmin: f(8, "dmin")?,
        });
    }
    if rows.is_empty() {
        return Err(CsvError {
            line: 2,
            message: "no samples".into(),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gap_of_offset_lines() {
        let a: Vec<Vec2> = (0..100).map(|i| Vec2::new(i as f64 * 0.1, 0.0)).collect();
        let b: Vec<Vec2> = a.iter().map(|p| *p + Vec2::new(0.0, 0.3)).collect();
        assert!((path_gap(&a, &b) - 0.3).abs() < 1e-12);
        assert_eq!(path_gap(&a, &a), 0.0);
        let far = vec![Vec2::new(50.0, 50.0)];
        let brute = a.iter().map(|p| p.distance(far[0])).fold(0.0, f64::max);
        assert!((path_gap(&a, &far) - brute).abs() < 1e-12);
    }

    #[test]
    fn parse_errors_name_the_line() {
        let ok = format!("{TRAJECTORY_HEADER}\n0,0,1,2,0,0,0.1,0.2,3\n");
        assert_eq!(parse_trajectory(&ok).unwrap().len(), 1);
        let truncated = format!("{TRAJECTORY_HEADER}\n0,0,1,2,0,0,0.1,0.2,3\n0.001,0,1,2");
        let e = parse_trajectory(&truncated).unwrap_err();
        assert_eq!(e.line, 3);
        assert!(parse_trajectory("").is_err());
        assert!(parse_trajectory("a,b\n").is_err());
        assert!(parse_trajectory(TRAJECTORY_HEADER).is_err());
        let bad_mode = format!("{TRAJECTORY_HEADER}\n0,0,1,2,5,0,0.1,0.2,3\n");
        assert!(parse_trajectory(&bad_mode).is_err());
    }
}
