//! Simulated 360° range-bearing sensor and jump detection from its scans.
//!
//! Beams sit at fixed world-frame bearings `(i - n/2) 2π/n`, so bearing 0 is
//! always a beam. A beam reads the distance to the first obstacle boundary it
//! meets, or `max_range` when nothing is in reach.

use std::f64::consts::{PI, TAU};
use std::io::{self, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::geometry::Vec2;
use crate::regions::{Mode, DELTA_SET};
use crate::world::WorldModel;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SensorError {
    #[error("invalid sensor configuration: {0}")]
    InvalidConfig(String),
    #[error("no obstacle within sensing range")]
    NothingInRange,
    #[error("bearing {0} lies in no cluster")]
    NoCluster(f64),
    #[error("corridor undefined at the target")]
    DegenerateCorridor,
}

pub type Result<T> = std::result::Result<T, SensorError>;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SensorConfig {
    /// Sensing radius `R_s`.
    pub max_range: f64,
    /// Beam spacing in radians.
    pub angular_resolution: f64,
    /// Standard deviation of the additive range noise, metres.
    pub noise_std: f64,
    pub seed: u64,
    /// Cartesian distance between neighbouring returns above which they are
    /// attributed to different obstacles.
    pub gap_threshold: f64,
}

impl SensorConfig {
    pub fn new(max_range: f64, angular_resolution: f64, noise_std: f64, seed: u64) -> Result<Self> {
        if !(max_range > 0.0 && max_range.is_finite()) {
            return Err(SensorError::InvalidConfig(format!(
                "max_range must be positive, got {max_range}"
            )));
        }
        if !(angular_resolution > 0.0 && angular_resolution <= TAU / 8.0) {
            return Err(SensorError::InvalidConfig(format!(
                "angular_resolution {angular_resolution} gives fewer than 8 beams"
            )));
        }
        if !(noise_std >= 0.0 && noise_std.is_finite()) {
            return Err(SensorError::InvalidConfig(format!(
                "noise_std must be non-negative, got {noise_std}"
            )));
        }
        Ok(Self {
            max_range,
            angular_resolution,
            noise_std,
            seed,
            gap_threshold: 0.0,
        })
    }

    pub fn with_gap_threshold(mut self, gap: f64) -> Self {
        self.gap_threshold = gap;
        self
    }

    /// Checks `R_s > r_a + eps_d`.
    pub fn check_range(&self, r_a: f64, eps_d: f64) -> Result<()> {
        if self.max_range > r_a + eps_d {
            Ok(())
        } else {
            Err(SensorError::InvalidConfig(format!(
                "max_range {} must exceed r_a + eps_d = {}",
                self.max_range,
                r_a + eps_d
            )))
        }
    }

    pub fn beam_count(&self) -> usize {
        (TAU / self.angular_resolution).round() as usize
    }

    fn gap(&self, r_a: f64) -> f64 {
        if self.gap_threshold > 0.0 {
            self.gap_threshold
        } else {
            2.0 * r_a
        }
    }
}

fn bearing(i: usize, n: usize) -> f64 {
    (i as f64 - (n / 2) as f64) * TAU / n as f64
}

#[cfg(test)]
/// Index of the beam nearest to bearing `theta`.
fn beam_of(theta: f64, n: usize) -> usize {
    let step = TAU / n as f64;
    let k = (theta / step).round() as i64 + (n / 2) as i64;
    k.rem_euclid(n as i64) as usize
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanMeasurement {
    pub pose: Vec2,
    pub bearings: Vec<f64>,
    pub ranges: Vec<f64>,
    pub max_range: f64,
}

impl ScanMeasurement {
    pub fn len(&self) -> usize {
        self.ranges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }

    fn hit(&self, i: usize) -> bool {
        self.ranges[i] < self.max_range - DELTA_SET
    }

    /// `λ(x, θ_i)`.
    pub fn point(&self, i: usize) -> Vec2 {
        self.pose + Vec2::from_angle(self.bearings[i]) * self.ranges[i]
    }

    /// Writes `theta_rad,range_m` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "theta_rad,range_m")?;
        for (t, r) in self.bearings.iter().zip(&self.ranges) {
            writeln!(w, "{t:.8e},{r:.8e}")?;
        }
        Ok(())
    }
}

/// One scan from pose `x`. `scan_index` selects an independent noise stream,
/// so a run is reproducible from `(seed, scan_index)` alone.
pub fn scan(x: Vec2, world: &WorldModel, cfg: &SensorConfig, scan_index: u64) -> ScanMeasurement {
    let n = cfg.beam_count();
    let bearings: Vec<f64> = (0..n).map(|i| bearing(i, n)).collect();
    let mut ranges = vec![cfg.max_range; n];
    for o in world.obstacles() {
        if o.distance_to(x) > cfg.max_range {
            continue;
        }
        let c = o.interior_point();
        let rb = o.bounding_radius();
        let dc = c.distance(x);
        let (lo, hi) = if dc <= rb * (1.0 + 1e-9) {
            (0i64, n as i64 - 1)
        } else {
            let half = (rb / dc).asin() + cfg.angular_resolution;
            let mid = (c - x).angle();
            let step = TAU / n as f64;
            let lo = ((mid - half) / step).floor() as i64 + (n / 2) as i64;
            let hi = ((mid + half) / step).ceil() as i64 + (n / 2) as i64;
            (lo, hi.min(lo + n as i64 - 1))
        };
        for k in lo..=hi {
            let i = k.rem_euclid(n as i64) as usize;
            if let Some(t) = o.ray_cast_unchecked(x, Vec2::from_angle(bearings[i])) {
                if t < ranges[i] {
                    ranges[i] = t;
                }
            }
        }
    }
    if cfg.noise_std > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(scan_index);
        let normal = Normal::new(0.0, cfg.noise_std).expect("validated standard deviation");
        for r in ranges.iter_mut() {
            // Every beam draws, so beam i sees the same sample whatever the world.
            let e = normal.sample(&mut rng);
            if *r < cfg.max_range {
                *r = (*r + e).clamp(0.0, cfg.max_range);
            }
        }
    }
    ScanMeasurement {
        pose: x,
        bearings,
        ranges,
        max_range: cfg.max_range,
    }
}

/// Shortest return.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClosestReturn {
    pub range: f64,
    pub bearing: f64,
    pub beam: usize,
}

/// `min_θ r_g(x, θ)` and its bearing; `None` when every beam reads `max_range`.
/// Ties go to the smallest beam index.
pub fn min_range_and_bearing(scan: &ScanMeasurement) -> Option<ClosestReturn> {
    let mut best: Option<ClosestReturn> = None;
    for i in 0..scan.len() {
        if !scan.hit(i) {
            continue;
        }
        if best.is_none_or(|b| scan.ranges[i] < b.range) {
            best = Some(ClosestReturn {
                range: scan.ranges[i],
                bearing: scan.bearings[i],
                beam: i,
            });
        }
    }
    best
}

impl ClosestReturn {
    /// The return point seen from `pose`.
    pub fn point(&self, pose: Vec2) -> Vec2 {
        pose + Vec2::from_angle(self.bearing) * self.range
    }
}

/// Closest return, robust to range noise.
///
/// With `noise_std == 0` this is [`min_range_and_bearing`]. Otherwise the
/// arg-min beam wanders far along a shallow minimum and reads about 2σ short,
/// so the returns around it are fitted instead. A parabola in bearing centres
/// the window; then the returns are fitted with one straight line, or with
/// two lines meeting at a corner when that explains them clearly better, and
/// the closest point of the fitted boundary is used.
pub fn closest_estimate(scan: &ScanMeasurement, noise_std: f64) -> Option<ClosestReturn> {
    let raw = min_range_and_bearing(scan)?;
    if noise_std <= 0.0 {
        return Some(raw);
    }
    let n = scan.len() as i64;
    let step = TAU / n as f64;
    // Half-width over which a flat wall at the raw range rises by 4σ.
    let half = (8.0 * noise_std / raw.range.max(1e-3)).sqrt().min(PI / 4.0);
    let w = ((half / step).ceil() as i64).max(4);
    let mut center = raw.beam as i64;
    for _ in 0..3 {
        let Some(t) = parabola_vertex(&window(scan, center, w, step)) else {
            break;
        };
        let shift = (t / step).round() as i64;
        if shift == 0 {
            break;
        }
        center += shift;
    }
    let pts = window(scan, center, w, step);
    // Smooth minima (discs, ellipses, edge feet) suit the polynomial; corners
    // need the line model. Pick by residual with a per-parameter penalty.
    let penalty = noise_std * noise_std * (pts.len() as f64).ln();
    let smooth = circle_candidate(&pts).map(|(q, sse)| (q, sse, 3.0));
    let Some((q, _, _)) = smooth
        .into_iter()
        .chain(line_candidates(&pts))
        .min_by(|a, b| (a.1 + a.2 * penalty).total_cmp(&(b.1 + b.2 * penalty)))
    else {
        return Some(raw);
    };
    let t = q.angle();
    Some(ClosestReturn {
        range: q.norm().min(scan.max_range),
        bearing: scan.bearings[center.rem_euclid(n) as usize] + t,
        beam: (center + (t / step).round() as i64).rem_euclid(n) as usize,
    })
}

/// Hit beams within `w` of `center` as `(t, r)` with `t` the bearing offset.
fn window(scan: &ScanMeasurement, center: i64, w: i64, step: f64) -> Vec<(f64, f64)> {
    let n = scan.len() as i64;
    (-w..=w)
        .filter_map(|k| {
            let i = (center + k).rem_euclid(n) as usize;
            scan.hit(i).then(|| (k as f64 * step, scan.ranges[i]))
        })
        .collect()
}

/// Least-squares polynomial `r = Σ c_k t^k` of degree `N - 1` over the
/// returns, with its residual sum of squares.
fn poly_fit<const N: usize>(pts: &[(f64, f64)]) -> Option<([f64; N], f64)> {
    if pts.len() < N + 2 {
        return None;
    }
    let mut m = [[0.0; N]; N];
    let mut v = [0.0; N];
    for &(t, r) in pts {
        let mut f = [1.0; N];
        for k in 1..N {
            f[k] = f[k - 1] * t;
        }
        for i in 0..N {
            v[i] += f[i] * r;
            for j in 0..N {
                m[i][j] += f[i] * f[j];
            }
        }
    }
    let coef = solve(m, v)?;
    let sse = pts.iter().map(|&(t, r)| (r - poly(&coef, t)).powi(2)).sum();
    Some((coef, sse))
}

fn poly(c: &[f64], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, k| acc * t + k)
}

/// Vertex `t*` of the least-squares parabola when it is a minimum inside the
/// window.
fn parabola_vertex(pts: &[(f64, f64)]) -> Option<f64> {
    let ([_, b, a], _) = poly_fit::<3>(pts)?;
    let t = -b / (2.0 * a);
    (a > 0.0 && t >= pts[0].0 && t <= pts[pts.len() - 1].0).then_some(t)
}

/// Closest point of a circle fitted to the returns, with the orthogonal
/// residual sum of squares. Straight walls come out as large circles.
fn circle_candidate(pts: &[(f64, f64)]) -> Option<(Vec2, f64)> {
    // x² + y² + D x + E y + F = 0.
    let mut m = [[0.0; 3]; 3];
    let mut v = [0.0; 3];
    for &(t, r) in pts {
        let p = Vec2::from_angle(t) * r;
        let f = [p.x, p.y, 1.0];
        let rhs = -(p.x * p.x + p.y * p.y);
        for i in 0..3 {
            v[i] += f[i] * rhs;
            for j in 0..3 {
                m[i][j] += f[i] * f[j];
            }
        }
    }
    let [d, e, f] = solve(m, v)?;
    let mut c = Vec2::new(-0.5 * d, -0.5 * e);
    let rad2 = c.dot(c) - f;
    if rad2 <= 0.0 {
        return None;
    }
    let mut rad = rad2.sqrt();
    // Gauss-Newton on the orthogonal residuals from the algebraic start.
    let cart: Vec<Vec2> = pts.iter().map(|&(t, r)| Vec2::from_angle(t) * r).collect();
    for _ in 0..8 {
        let mut m = [[0.0; 3]; 3];
        let mut v = [0.0; 3];
        for p in &cart {
            let dist = p.distance(c);
            if dist <= 0.0 {
                return None;
            }
            let g = [-(p.x - c.x) / dist, -(p.y - c.y) / dist, -1.0];
            let res = dist - rad;
            for i in 0..3 {
                v[i] -= g[i] * res;
                for j in 0..3 {
                    m[i][j] += g[i] * g[j];
                }
            }
        }
        let Some([dx, dy, dr]) = solve(m, v) else {
            break;
        };
        c += Vec2::new(dx, dy);
        rad += dr;
        if dx.abs() + dy.abs() + dr.abs() < 1e-10 * (1.0 + rad) {
            break;
        }
    }
    if !(rad > 0.0 && rad.is_finite()) {
        return None;
    }
    let dc = c.norm();
    // The sensor must be outside the fitted circle.
    if dc <= rad {
        return None;
    }
    let sse = cart.iter().map(|p| (p.distance(c) - rad).powi(2)).sum();
    Some((c * (1.0 - rad / dc), sse))
}

fn solve<const N: usize>(mut m: [[f64; N]; N], mut v: [f64; N]) -> Option<[f64; N]> {
    for col in 0..N {
        let piv = (col..N).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() < 1e-14 {
            return None;
        }
        m.swap(col, piv);
        v.swap(col, piv);
        for row in col + 1..N {
            let f = m[row][col] / m[col][col];
            let pivot_row = m[col];
            for (a, b) in m[row][col..].iter_mut().zip(&pivot_row[col..]) {
                *a -= f * b;
            }
            v[row] -= f * v[col];
        }
    }
    let mut x = [0.0; N];
    for row in (0..N).rev() {
        let s: f64 = (row + 1..N).map(|k| m[row][k] * x[k]).sum();
        x[row] = (v[row] - s) / m[row][row];
    }
    Some(x)
}

/// Running sums for a total-least-squares line fit.
#[derive(Clone, Copy, Default)]
struct LineSums {
    n: f64,
    x: f64,
    y: f64,
    xx: f64,
    xy: f64,
    yy: f64,
}

impl LineSums {
    fn add(&mut self, p: Vec2) {
        self.n += 1.0;
        self.x += p.x;
        self.y += p.y;
        self.xx += p.x * p.x;
        self.xy += p.x * p.y;
        self.yy += p.y * p.y;
    }

    fn minus(self, o: LineSums) -> LineSums {
        LineSums {
            n: self.n - o.n,
            x: self.x - o.x,
            y: self.y - o.y,
            xx: self.xx - o.xx,
            xy: self.xy - o.xy,
            yy: self.yy - o.yy,
        }
    }

    /// Centroid, unit direction and orthogonal residual sum of squares.
    fn fit(&self) -> (Vec2, Vec2, f64) {
        let c = Vec2::new(self.x / self.n, self.y / self.n);
        let sxx = self.xx - self.n * c.x * c.x;
        let sxy = self.xy - self.n * c.x * c.y;
        let syy = self.yy - self.n * c.y * c.y;
        let phi = 0.5 * (2.0 * sxy).atan2(sxx - syy);
        let mid = 0.5 * (sxx + syy);
        let rad = (0.25 * (sxx - syy).powi(2) + sxy * sxy).sqrt();
        (c, Vec2::from_angle(phi), (mid - rad).max(0.0))
    }
}

fn foot(c: Vec2, d: Vec2, p: Vec2) -> Vec2 {
    c + d * (p - c).dot(d)
}

fn closest_on_segment(a: Vec2, b: Vec2) -> Vec2 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 <= 0.0 {
        return a;
    }
    a + ab * (-a.dot(ab) / len2).clamp(0.0, 1.0)
}

/// Closest point to the sensor (the origin) of the boundary fitted to the
/// returns `(t, r)`, ordered by bearing: one straight line, or two meeting at
/// a corner. Each candidate comes with its orthogonal residual sum of squares
/// and parameter count.
fn line_candidates(pts: &[(f64, f64)]) -> Vec<(Vec2, f64, f64)> {
    if pts.len() < 6 {
        return Vec::new();
    }
    let p: Vec<Vec2> = pts.iter().map(|&(t, r)| Vec2::from_angle(t) * r).collect();
    let mut prefix = vec![LineSums::default()];
    for q in &p {
        let mut s = *prefix.last().expect("non-empty");
        s.add(*q);
        prefix.push(s);
    }
    let last = p.len() - 1;
    let total = prefix[p.len()];
    let (c, d, sse1) = total.fit();
    let mut out = vec![(closest_on_segment(foot(c, d, p[0]), foot(c, d, p[last])), sse1, 2.0)];

    let mut best: Option<(f64, usize)> = None;
    for (j, pre) in prefix.iter().enumerate().take(p.len() - 2).skip(3) {
        let sse = pre.fit().2 + total.minus(*pre).fit().2;
        if best.is_none_or(|(s, _)| sse < s) {
            best = Some((sse, j));
        }
    }
    let Some((sse2, j)) = best else {
        return out;
    };
    let (cl, dl, _) = prefix[j].fit();
    let (cr, dr, _) = total.minus(prefix[j]).fit();
    let den = dl.cross(dr);
    if den.abs() < 1e-9 {
        return out;
    }
    let v = cl + dl * ((cr - cl).cross(dr) / den);
    // The corner must sit in front of the sensor, within the window.
    let tv = v.angle();
    if v.dot(p[j]) > 0.0 && tv >= pts[0].0 && tv <= pts[last].0 {
        let qa = closest_on_segment(foot(cl, dl, p[0]), v);
        let qb = closest_on_segment(v, foot(cr, dr, p[last]));
        out.push((if qa.norm() <= qb.norm() { qa } else { qb }, sse2, 5.0));
    }
    out
}

/// `Π(x, O_k) ≈ λ(x, θ*)`.
pub fn sensed_projection(scan: &ScanMeasurement) -> Result<Vec2> {
    min_range_and_bearing(scan)
        .map(|c| scan.point(c.beam))
        .ok_or(SensorError::NothingInRange)
}

/// A maximal run of returns attributed to one obstacle. Beam indices wrap.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanCluster {
    pub theta_lo: f64,
    pub theta_hi: f64,
    pub beams: Vec<usize>,
}

impl ScanCluster {
    /// Whether `theta` lies in `[theta_lo, theta_hi]` read counter-clockwise.
    pub fn contains_bearing(&self, theta: f64) -> bool {
        let span = (self.theta_hi - self.theta_lo).rem_euclid(TAU);
        let off = (theta - self.theta_lo).rem_euclid(TAU);
        off <= span + 1e-9 || off >= TAU - 1e-9
    }
}

/// Splits the returns into clusters: runs of consecutive beams with a return,
/// cut wherever neighbouring returns are farther apart than the gap threshold
/// (`2 r_a` unless configured).
pub fn segment_scan(scan: &ScanMeasurement, cfg: &SensorConfig, r_a: f64) -> Vec<ScanCluster> {
    let n = scan.len();
    if n == 0 {
        return Vec::new();
    }
    let gap = cfg.gap(r_a);
    // `joined[i]`: beams i and i+1 belong to the same cluster.
    let joined: Vec<bool> = (0..n)
        .map(|i| {
            let j = (i + 1) % n;
            scan.hit(i) && scan.hit(j) && scan.point(i).distance(scan.point(j)) <= gap
        })
        .collect();
    let Some(first_break) = joined.iter().position(|j| !j) else {
        return vec![ScanCluster {
            theta_lo: scan.bearings[0],
            theta_hi: scan.bearings[n - 1],
            beams: (0..n).collect(),
        }];
    };
    let mut clusters = Vec::new();
    let mut current: Vec<usize> = Vec::new();
    for step in 1..=n {
        let i = (first_break + step) % n;
        if scan.hit(i) {
            current.push(i);
        }
        if !joined[i] && !current.is_empty() {
            let beams = std::mem::take(&mut current);
            clusters.push(ScanCluster {
                theta_lo: scan.bearings[beams[0]],
                theta_hi: scan.bearings[*beams.last().expect("non-empty")],
                beams,
            });
        }
    }
    clusters
}

/// The cluster whose bearing interval contains `theta`.
pub fn closest_cluster(clusters: &[ScanCluster], theta: f64) -> Result<&ScanCluster> {
    clusters
        .iter()
        .find(|c| c.contains_bearing(theta))
        .ok_or(SensorError::NoCluster(theta))
}

/// `ðO_k`: the Cartesian points seen in a cluster, in bearing order.
pub fn partial_boundary(scan: &ScanMeasurement, cluster: &ScanCluster) -> Vec<Vec2> {
    cluster.beams.iter().map(|&i| scan.point(i)).collect()
}

/// Vertices `x_{-1}, x_{+1}, 0_{+1}, 0_{-1}` of the corridor of half-width
/// `r_a` from `x` to the target.
pub fn corridor_rectangle(x: Vec2, r_a: f64) -> Result<[Vec2; 4]> {
    if x.norm() <= 0.0 {
        return Err(SensorError::DegenerateCorridor);
    }
    let theta_d = PI / 2.0 + x.angle();
    let off = Vec2::from_angle(theta_d) * r_a;
    Ok([x - off, x + off, off, -off])
}

/// Whether `q` lies in the closed corridor from `x` to the origin.
fn in_corridor(q: Vec2, x: Vec2, r_a: f64) -> bool {
    let len = x.norm();
    let dir = x / len;
    let along = q.dot(dir);
    let across = dir.cross(q).abs();
    along >= -DELTA_SET && along <= len + DELTA_SET && across <= r_a + DELTA_SET
}

/// Why a sensed state was or was not placed in the jump set.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SensorTrigger {
    /// Nothing within `r_a + eps_d`.
    Far,
    /// Heading to the target moves away from the nearest obstacle.
    Back,
    /// The corridor to the target meets the nearest obstacle's visible boundary.
    Corridor,
    /// Near an obstacle, outside its back region, corridor clear.
    Clear,
    /// Near an obstacle and outside its back region while avoiding it.
    Avoiding,
    /// Past the obstacle on the side opposite to the turn, with the widened
    /// corridor to the target clear.
    Opposite,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SensorDecision {
    pub jump: bool,
    pub trigger: SensorTrigger,
    /// Layer widths `(eps_s, eps)` to use for the avoidance phase that this
    /// jump starts. Only set on a corridor trigger.
    pub adapted: Option<(f64, f64)>,
}

/// Jump-set membership decided from one scan.
///
/// In mode 0 the state jumps when it is within `r_a + eps_d` of an obstacle,
/// outside that obstacle's back region, and the corridor to the target holds
/// a visible boundary point of it. In the avoidance modes it jumps when far
/// from every obstacle, in the back region, or past the obstacle on the side
/// opposite to the turn with a corridor of half-width `r_a + eps` clear.
pub fn sensor_jump_membership(
    mode: Mode,
    scan: &ScanMeasurement,
    cfg: &SensorConfig,
    r_a: f64,
    eps_d: f64,
    eps: f64,
    p_frac: f64,
) -> SensorDecision {
    let x = scan.pose;
    let decide = |jump, trigger| SensorDecision {
        jump,
        trigger,
        adapted: None,
    };
    let Some(closest) = closest_estimate(scan, cfg.noise_std).filter(|c| c.range <= r_a + eps_d) else {
        return decide(mode != Mode::MoveToTarget, SensorTrigger::Far);
    };
    let projection = closest.point(x);
    if x.dot(x - projection) <= 0.0 {
        return decide(mode != Mode::MoveToTarget, SensorTrigger::Back);
    }
    let clusters = segment_scan(scan, cfg, r_a);
    let nearest = clusters
        .iter()
        .find(|c| c.beams.contains(&closest.beam) || c.contains_bearing(closest.bearing));
    let blocked = |width: f64| nearest.is_some_and(|c| c.beams.iter().any(|&i| in_corridor(scan.point(i), x, width)));
    if let Mode::Avoid(turn) = mode {
        // Under noise the corridor is widened by 3σ so that a noisy scan does
        // not leave and re-enter avoidance at the same place.
        let width = r_a + eps + 3.0 * cfg.noise_std;
        let opposite = turn.z() * x.cross(x - projection) >= 0.0;
        if opposite && closest.range >= width && !blocked(width) {
            return decide(true, SensorTrigger::Opposite);
        }
        return decide(false, SensorTrigger::Avoiding);
    }
    if blocked(r_a) {
        // Under noise the inner layer is kept at least 3σ wide, or κ flickers
        // between attraction and rotation when the entry is close.
        let floor = (3.0 * cfg.noise_std / p_frac).min(eps_d);
        let eps_s = (closest.range - r_a).max(floor);
        SensorDecision {
            jump: true,
            trigger: SensorTrigger::Corridor,
            adapted: Some((eps_s, p_frac * eps_s)),
        }
    } else {
        decide(false, SensorTrigger::Clear)
    }
}

/// Warnings when layer separations are within three noise standard deviations.
///
/// With fixed layers both `eps_d - eps_s` and `eps` must exceed `3σ`. With
/// adaptive layers `eps_s` can be as large as `eps_d`, so the binding case is
/// the inner layer `p_frac · eps_d`.
pub fn noise_lint(eps_d: f64, eps_s: f64, eps: f64, adaptive: Option<f64>, sigma: f64) -> Vec<String> {
    let margin = 3.0 * sigma;
    let mut out = Vec::new();
    if sigma <= 0.0 {
        return out;
    }
    match adaptive {
        Some(p_frac) => {
            if p_frac * eps_d <= margin {
                out.push(format!(
                    "inner layer p_frac * eps_d = {:.4} is within 3 sigma = {margin:.4} of the noise",
                    p_frac * eps_d
                ));
            }
        }
        None => {
            if eps_d - eps_s <= margin {
                out.push(format!(
                    "eps_d - eps_s = {:.4} is within 3 sigma = {margin:.4} of the noise",
                    eps_d - eps_s
                ));
            }
            if eps <= margin {
                out.push(format!("eps = {eps:.4} is within 3 sigma = {margin:.4} of the noise"));
            }
        }
    }
    out
}
