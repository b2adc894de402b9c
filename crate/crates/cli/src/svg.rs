//! Plain SVG rendering of worlds, neighbourhood layers and trajectories.

use std::fmt::Write as _;

use hybridnav::geometry::{ConvexShape, Turn, Vec2};
use hybridnav::regions::{self, RegionKind, SetParams};
use hybridnav::WorldModel;

const WIDTH: f64 = 960.0;

const STYLE: &str = "\
.obstacle{fill:#555;stroke:none}
.layer{fill:none;stroke-width:1}
.layer-ra{stroke:#c0392b}
.layer-eps{stroke:#e67e22;stroke-dasharray:4 3}
.layer-eps-s{stroke:#f1c40f;stroke-dasharray:4 3}
.layer-eps-d{stroke:#27ae60;stroke-dasharray:2 3}
.trajectory{fill:none;stroke:#2c3e50;stroke-width:1.5}
.trajectory.avoid{stroke:#8e44ad}
.halfline-pos{stroke:#2980b9;stroke-width:1}
.halfline-neg{stroke:#2980b9;stroke-width:1;stroke-dasharray:6 4}
.target{fill:#e74c3c}
.start{fill:#2c3e50}
.region-back{fill:#3498db}
.region-front{fill:#e74c3c}
.region-side-cw{fill:#16a085}
.region-side-ccw{fill:#d35400}
.region-gate{fill:#000}
";

/// One trajectory to draw: positions with their mode values.
pub struct Track {
    pub points: Vec<Vec2>,
    pub modes: Vec<i8>,
}

pub struct Plot<'a> {
    pub world: &'a WorldModel,
    pub sets: SetParams,
    pub tracks: Vec<Track>,
    /// Decision vectors whose half-lines are drawn.
    pub decisions: Vec<Vec2>,
    /// Obstacle whose neighbourhood is sampled and coloured by region.
    pub regions: Option<usize>,
}

struct Frame {
    min: Vec2,
    scale: f64,
    height: f64,
}

impl Frame {
    fn map(&self, p: Vec2) -> (f64, f64) {
        (
            (p.x - self.min.x) * self.scale,
            self.height - (p.y - self.min.y) * self.scale,
        )
    }
}

fn polyline(out: &mut String, class: &str, pts: &[Vec2], frame: &Frame, closed: bool) {
    if pts.is_empty() {
        return;
    }
    let tag = if closed { "polygon" } else { "polyline" };
    let _ = write!(out, "<{tag} class=\"{class}\" points=\"");
    for p in pts {
        let (x, y) = frame.map(*p);
        let _ = write!(out, "{x:.2},{y:.2} ");
    }
    let _ = writeln!(out, "\"/>");
}

fn outline(shape: &ConvexShape, r: f64) -> Vec<Vec2> {
    shape.dilated_outline(r, 0.05)
}

pub fn render(plot: &Plot<'_>) -> String {
    let world = plot.world;
    let r_a = world.inflation();
    let reach = r_a + plot.sets.eps_d;

    let mut lo = Vec2::new(-1.0, -1.0);
    let mut hi = Vec2::new(1.0, 1.0);
    let mut grow = |p: Vec2, pad: f64| {
        lo = Vec2::new(lo.x.min(p.x - pad), lo.y.min(p.y - pad));
        hi = Vec2::new(hi.x.max(p.x + pad), hi.y.max(p.y + pad));
    };
    for o in world.obstacles() {
        grow(o.interior_point(), o.bounding_radius() + reach + 0.5);
    }
    for t in &plot.tracks {
        for p in &t.points {
            grow(*p, 0.5);
        }
    }
    let scale = WIDTH / (hi.x - lo.x);
    let frame = Frame {
        min: lo,
        scale,
        height: (hi.y - lo.y) * scale,
    };

    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH:.0}\" height=\"{:.0}\" viewBox=\"0 0 {WIDTH:.0} {:.2}\">",
        frame.height, frame.height
    );
    let _ = writeln!(out, "<style>\n{STYLE}</style>");
    let _ = writeln!(out, "<rect width=\"100%\" height=\"100%\" fill=\"#fff\"/>");

    for (i, o) in world.obstacles().iter().enumerate() {
        let _ = writeln!(out, "<g id=\"obstacle-{i}\">");
        polyline(&mut out, "obstacle", &outline(o, 0.0), &frame, true);
        for (class, r) in [
            ("layer layer-ra", r_a),
            ("layer layer-eps", r_a + plot.sets.eps),
            ("layer layer-eps-s", r_a + plot.sets.eps_s),
            ("layer layer-eps-d", reach),
        ] {
            if r > 0.0 {
                polyline(&mut out, class, &outline(o, r), &frame, true);
            }
        }
        let _ = writeln!(out, "</g>");
    }

    let far = (hi - lo).norm();
    for s in &plot.decisions {
        for (turn, class) in [(Turn::Clockwise, "halfline-pos"), (Turn::CounterClockwise, "halfline-neg")] {
            if let Ok(nu) = hybridnav::geometry::rotate_orthogonal(*s, turn) {
                let (x0, y0) = frame.map(Vec2::ZERO);
                let (x1, y1) = frame.map(nu.normalized().unwrap_or(nu) * far);
                let _ = writeln!(
                    out,
                    "<line class=\"{class}\" x1=\"{x0:.2}\" y1=\"{y0:.2}\" x2=\"{x1:.2}\" y2=\"{y1:.2}\"/>"
                );
            }
        }
    }

    if let Some(k) = plot.regions {
        render_regions(&mut out, world, &plot.sets, k, &frame);
    }

    for t in &plot.tracks {
        // Split into runs of constant mode class and thin out dense samples.
        let mut start = 0;
        while start < t.points.len() {
            let avoid = t.modes[start] != 0;
            let mut end = start;
            while end + 1 < t.points.len() && (t.modes[end + 1] != 0) == avoid {
                end += 1;
            }
            let mut pts = vec![t.points[start]];
            for p in &t.points[start + 1..=end] {
                if p.distance(*pts.last().expect("non-empty")) * scale >= 1.0 {
                    pts.push(*p);
                }
            }
            if end + 1 < t.points.len() {
                pts.push(t.points[end + 1]);
            } else if pts.last() != Some(&t.points[end]) {
                pts.push(t.points[end]);
            }
            let class = if avoid { "trajectory avoid" } else { "trajectory" };
            polyline(&mut out, class, &pts, &frame, false);
            start = end + 1;
        }
        if let Some(p) = t.points.first() {
            let (x, y) = frame.map(*p);
            let _ = writeln!(out, "<circle class=\"start\" cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"4\"/>");
        }
    }
    let (x, y) = frame.map(Vec2::ZERO);
    let _ = writeln!(out, "<circle class=\"target\" cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"5\"/>");
    out.push_str("</svg>\n");
    out
}

fn render_regions(out: &mut String, world: &WorldModel, sets: &SetParams, k: usize, frame: &Frame) {
    let Some(shape) = world.obstacles().get(k) else {
        return;
    };
    let r_a = world.inflation();
    let reach = r_a + sets.eps_d;
    let c = shape.interior_point();
    let half = shape.bounding_radius() + reach;
    let step = (sets.eps_d / 8.0).max(half / 200.0);
    let _ = writeln!(out, "<g id=\"regions-{k}\">");
    let n = (2.0 * half / step).ceil() as usize;
    for i in 0..=n {
        for j in 0..=n {
            let p = c + Vec2::new(-half + i as f64 * step, -half + j as f64 * step);
            let d = shape.distance_to(p);
            if d < r_a || d > reach {
                continue;
            }
            let Ok(label) = regions::classify_region(p, k, world, sets) else {
                continue;
            };
            let class = match label.kind {
                RegionKind::Back => "region-back",
                RegionKind::Front => "region-front",
                RegionKind::Side(Turn::Clockwise) => "region-side-cw",
                RegionKind::Side(Turn::CounterClockwise) => "region-side-ccw",
                RegionKind::Gate(_) => "region-gate",
                RegionKind::Exterior => continue,
            };
            let (x, y) = frame.map(p);
            let _ = writeln!(out, "<circle class=\"{class}\" cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"1.5\"/>");
        }
    }
    // Gates are curves; trace them through their extreme points.
    for turn in [Turn::Clockwise, Turn::CounterClockwise] {
        let pts: Vec<Vec2> = (0..=32)
            .filter_map(|i| {
                let y = r_a + sets.eps_d * i as f64 / 32.0;
                regions::gate_extreme_point(y, turn, k, world).ok()
            })
            .collect();
        polyline(out, "region-gate layer", &pts, frame, false);
    }
    let _ = writeln!(out, "</g>");
}
