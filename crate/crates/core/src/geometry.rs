//! Planar convex geometry.
//!
//! Everything the controller needs from the obstacles goes through this module:
//! Euclidean projections onto convex sets, distances, projections onto dilated
//! sets (Minkowski sum with a disc), orthogonal rotations, signed angles, and the
//! segment and ray queries used by the front-region test and the range sensor.
//!
//! Two obstacle representations are supported, discs and convex polygons. Both
//! admit exact projections, so no iterative solver is involved anywhere.

use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Comparison slack for predicates evaluated in double precision.
pub const EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("degenerate input: {0} must be non-zero")]
    DegenerateVector(&'static str),
    #[error("dilation radius {radius} exceeds the distance {distance} to the set")]
    DilationTooLarge { radius: f64, distance: f64 },
    #[error("point ({x}, {y}) lies inside the shape")]
    InsideShape { x: f64, y: f64 },
    #[error("invalid shape: {0}")]
    InvalidShape(String),
}

pub type Result<T> = std::result::Result<T, GeometryError>;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Unit vector at angle `theta` measured counter-clockwise from the x axis.
    #[inline]
    pub fn from_angle(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self::new(c, s)
    }

    #[inline]
    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z component of the 3D cross product; positive when `other` is
    /// counter-clockwise from `self`.
    #[inline]
    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn distance(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    /// `atan2(y, x)`.
    #[inline]
    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn normalized(self) -> Option<Vec2> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| self / n)
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Counter-clockwise quarter turn.
    #[inline]
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    #[inline]
    pub fn lerp(self, other: Vec2, t: f64) -> Vec2 {
        self + (other - self) * t
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    #[inline]
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    #[inline]
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    #[inline]
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl SubAssign for Vec2 {
    #[inline]
    fn sub_assign(&mut self, o: Vec2) {
        self.x -= o.x;
        self.y -= o.y;
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    #[inline]
    fn mul(self, v: Vec2) -> Vec2 {
        v * self
    }
}

impl Div<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn div(self, s: f64) -> Vec2 {
        Vec2::new(self.x / s, self.y / s)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    #[inline]
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl From<[f64; 2]> for Vec2 {
    fn from([x, y]: [f64; 2]) -> Self {
        Vec2::new(x, y)
    }
}

impl From<Vec2> for [f64; 2] {
    fn from(v: Vec2) -> Self {
        [v.x, v.y]
    }
}

/// Direction of an orthogonal rotation.
///
/// `Clockwise` is the `z = 1` rotation matrix `[[0, 1], [-1, 0]]`,
/// `CounterClockwise` is `z = -1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Turn {
    Clockwise,
    CounterClockwise,
}

impl Turn {
    #[inline]
    pub fn z(self) -> f64 {
        match self {
            Turn::Clockwise => 1.0,
            Turn::CounterClockwise => -1.0,
        }
    }

    pub fn from_sign(z: i8) -> Option<Turn> {
        match z {
            1 => Some(Turn::Clockwise),
            -1 => Some(Turn::CounterClockwise),
            _ => None,
        }
    }

    pub fn opposite(self) -> Turn {
        match self {
            Turn::Clockwise => Turn::CounterClockwise,
            Turn::CounterClockwise => Turn::Clockwise,
        }
    }
}

/// Applies `[[0, z], [-z, 0]]` to `p`.
pub fn rotate_orthogonal(p: Vec2, turn: Turn) -> Result<Vec2> {
    if p == Vec2::ZERO {
        return Err(GeometryError::DegenerateVector("rotated vector"));
    }
    Ok(rotate_unchecked(p, turn))
}

#[inline]
pub(crate) fn rotate_unchecked(p: Vec2, turn: Turn) -> Vec2 {
    let z = turn.z();
    Vec2::new(z * p.y, -z * p.x)
}

/// Angle from `p` to `q`, counter-clockwise positive, in `(-pi, pi]`.
pub fn signed_angle(p: Vec2, q: Vec2) -> Result<f64> {
    if p == Vec2::ZERO {
        return Err(GeometryError::DegenerateVector("first angle argument"));
    }
    if q == Vec2::ZERO {
        return Err(GeometryError::DegenerateVector("second angle argument"));
    }
    let a = p.cross(q).atan2(p.dot(q));
    Ok(if a <= -PI { PI } else { a })
}

/// The set `{x : normal . (x - point) = 0}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hyperplane2 {
    point: Vec2,
    normal: Vec2,
}

impl Hyperplane2 {
    pub fn new(point: Vec2, normal: Vec2) -> Result<Self> {
        if normal == Vec2::ZERO || !normal.is_finite() {
            return Err(GeometryError::DegenerateVector("hyperplane normal"));
        }
        Ok(Self { point, normal })
    }

    pub fn point(&self) -> Vec2 {
        self.point
    }

    pub fn normal(&self) -> Vec2 {
        self.normal
    }

    /// `normal . (x - point)`: positive on the positive half-space.
    pub fn offset(&self, x: Vec2) -> f64 {
        self.normal.dot(x - self.point)
    }
}

/// Convex polygon with counter-clockwise vertices and outward unit edge normals.
#[derive(Clone, Debug, PartialEq)]
pub struct Polygon {
    vertices: Vec<Vec2>,
    normals: Vec<Vec2>,
}

impl Polygon {
    pub fn new(vertices: Vec<Vec2>) -> Result<Self> {
        let n = vertices.len();
        if n < 3 {
            return Err(GeometryError::InvalidShape(format!(
                "polygon needs at least 3 vertices, got {n}"
            )));
        }
        if let Some(v) = vertices.iter().find(|v| !v.is_finite()) {
            return Err(GeometryError::InvalidShape(format!(
                "non-finite vertex ({}, {})",
                v.x, v.y
            )));
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if vertices[i].distance(vertices[j]) <= EPS {
                    return Err(GeometryError::InvalidShape(format!(
                        "duplicate vertices {i} and {j}"
                    )));
                }
            }
        }
        let mut area2 = 0.0;
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            let c = vertices[(i + 2) % n];
            let turn = (b - a).cross(c - b);
            if turn < -EPS * (b - a).norm() * (c - b).norm() {
                return Err(GeometryError::InvalidShape(format!(
                    "vertices are not convex and counter-clockwise at vertex {}",
                    (i + 1) % n
                )));
            }
            area2 += a.cross(b);
        }
        if area2 <= EPS {
            return Err(GeometryError::InvalidShape(
                "polygon has no interior or is clockwise".into(),
            ));
        }
        let normals = (0..n)
            .map(|i| {
                let e = vertices[(i + 1) % n] - vertices[i];
                Vec2::new(e.y, -e.x) / e.norm()
            })
            .collect();
        Ok(Self { vertices, normals })
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    /// Outward unit normal of edge `i` (from vertex `i` to vertex `i + 1`).
    pub fn normals(&self) -> &[Vec2] {
        &self.normals
    }

    pub fn edges(&self) -> impl Iterator<Item = (Vec2, Vec2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn centroid(&self) -> Vec2 {
        let mut sum = Vec2::ZERO;
        let mut area2 = 0.0;
        for (a, b) in self.edges() {
            let w = a.cross(b);
            area2 += w;
            sum += (a + b) * w;
        }
        sum / (3.0 * area2)
    }

    /// Largest signed edge-plane offset; non-positive iff `q` is in the polygon.
    fn max_offset(&self, q: Vec2) -> f64 {
        self.vertices
            .iter()
            .zip(&self.normals)
            .map(|(v, n)| n.dot(q - *v))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn project(&self, q: Vec2) -> Vec2 {
        if self.max_offset(q) <= 0.0 {
            return q;
        }
        let mut best = self.vertices[0];
        let mut best_d2 = f64::INFINITY;
        for (a, b) in self.edges() {
            let p = closest_on_segment(q, a, b);
            let d2 = (q - p).norm_sq();
            if d2 < best_d2 {
                best_d2 = d2;
                best = p;
            }
        }
        best
    }

    /// Parameter interval of `origin + t dir` inside the polygon, clipped to
    /// `[t_min, t_max]` (Cyrus-Beck).
    fn clip(&self, origin: Vec2, dir: Vec2, t_min: f64, t_max: f64) -> Option<(f64, f64)> {
        let (mut lo, mut hi) = (t_min, t_max);
        for (v, n) in self.vertices.iter().zip(&self.normals) {
            let num = n.dot(origin - *v);
            let den = n.dot(dir);
            if den.abs() <= EPS * dir.norm() {
                if num > 0.0 {
                    return None;
                }
                continue;
            }
            let t = -num / den;
            if den < 0.0 {
                lo = lo.max(t);
            } else {
                hi = hi.min(t);
            }
            if lo > hi {
                return None;
            }
        }
        Some((lo, hi))
    }
}

/// A compact convex obstacle.
#[derive(Clone, Debug, PartialEq)]
pub enum ConvexShape {
    Disc { center: Vec2, radius: f64 },
    Polygon(Polygon),
}

impl ConvexShape {
    pub fn disc(center: Vec2, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) || !center.is_finite() {
            return Err(GeometryError::InvalidShape(format!(
                "disc radius must be positive and finite, got {radius}"
            )));
        }
        Ok(ConvexShape::Disc { center, radius })
    }

    pub fn polygon(vertices: Vec<Vec2>) -> Result<Self> {
        Polygon::new(vertices).map(ConvexShape::Polygon)
    }

    /// Axis-aligned rectangle `[min.x, max.x] x [min.y, max.y]`.
    pub fn rectangle(min: Vec2, max: Vec2) -> Result<Self> {
        Self::polygon(vec![
            min,
            Vec2::new(max.x, min.y),
            max,
            Vec2::new(min.x, max.y),
        ])
    }

    /// Inscribed polygonal approximation of an ellipse with `segments` vertices.
    pub fn ellipse(
        center: Vec2,
        semi_axes: (f64, f64),
        rotation: f64,
        segments: usize,
    ) -> Result<Self> {
        let (a, b) = semi_axes;
        if !(a > 0.0 && b > 0.0) {
            return Err(GeometryError::InvalidShape(format!(
                "ellipse semi-axes must be positive, got ({a}, {b})"
            )));
        }
        if segments < 3 {
            return Err(GeometryError::InvalidShape(
                "ellipse needs at least 3 segments".into(),
            ));
        }
        let (s, c) = rotation.sin_cos();
        let vertices = (0..segments)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / segments as f64;
                let (px, py) = (a * t.cos(), b * t.sin());
                center + Vec2::new(c * px - s * py, s * px + c * py)
            })
            .collect();
        Self::polygon(vertices)
    }

    /// A point guaranteed to be inside the shape.
    pub fn interior_point(&self) -> Vec2 {
        match self {
            ConvexShape::Disc { center, .. } => *center,
            ConvexShape::Polygon(p) => p.centroid(),
        }
    }

    /// Radius of a disc about [`interior_point`](Self::interior_point) that
    /// contains the shape.
    pub fn bounding_radius(&self) -> f64 {
        match self {
            ConvexShape::Disc { radius, .. } => *radius,
            ConvexShape::Polygon(p) => {
                let c = p.centroid();
                p.vertices
                    .iter()
                    .map(|v| v.distance(c))
                    .fold(0.0, f64::max)
            }
        }
    }

    pub fn contains(&self, q: Vec2) -> bool {
        match self {
            ConvexShape::Disc { center, radius } => q.distance(*center) <= *radius,
            ConvexShape::Polygon(p) => p.max_offset(q) <= 0.0,
        }
    }

    /// True when `q` is in the interior, with [`EPS`] slack.
    pub fn contains_strictly(&self, q: Vec2) -> bool {
        match self {
            ConvexShape::Disc { center, radius } => q.distance(*center) < *radius - EPS,
            ConvexShape::Polygon(p) => p.max_offset(q) < -EPS,
        }
    }

    /// Euclidean projection of `q` onto the shape; `q` itself when inside.
    pub fn project_point(&self, q: Vec2) -> Vec2 {
        match self {
            ConvexShape::Disc { center, radius } => {
                let r = q - *center;
                let d = r.norm();
                if d <= *radius {
                    q
                } else {
                    *center + r * (*radius / d)
                }
            }
            ConvexShape::Polygon(p) => p.project(q),
        }
    }

    pub fn distance_to(&self, q: Vec2) -> f64 {
        match self {
            ConvexShape::Disc { center, radius } => (q.distance(*center) - radius).max(0.0),
            ConvexShape::Polygon(p) => q.distance(p.project(q)),
        }
    }

    /// Projection onto the dilation `D_r(shape)`, without building the dilated set.
    ///
    /// The projection onto a dilated convex set lies on the segment from the
    /// projection onto the set to `q`, at distance `r` from the former.
    pub fn project_dilated(&self, q: Vec2, r: f64) -> Result<Vec2> {
        let p = self.project_point(q);
        let d = q.distance(p);
        if r < 0.0 || r > d * (1.0 + EPS) + EPS {
            return Err(GeometryError::DilationTooLarge {
                radius: r,
                distance: d,
            });
        }
        if d == 0.0 {
            return Ok(q);
        }
        Ok(p + (q - p) * (r.min(d) / d))
    }

    /// Minimum of `distance_to` over the closed segment `[a, b]`, computed exactly.
    pub fn segment_distance(&self, a: Vec2, b: Vec2) -> f64 {
        match self {
            ConvexShape::Disc { center, radius } => {
                (center.distance(closest_on_segment(*center, a, b)) - radius).max(0.0)
            }
            ConvexShape::Polygon(p) => {
                if a == b {
                    return self.distance_to(a);
                }
                if p.clip(a, b - a, 0.0, 1.0).is_some() {
                    return 0.0;
                }
                let ends = self.distance_to(a).min(self.distance_to(b));
                p.vertices
                    .iter()
                    .map(|v| v.distance(closest_on_segment(*v, a, b)))
                    .fold(ends, f64::min)
            }
        }
    }

    /// Whether the closed segment `[a, b]` meets the interior of `D_r(shape)`.
    pub fn segment_intersects_dilated(&self, a: Vec2, b: Vec2, r: f64) -> bool {
        self.segment_distance(a, b) < r
    }

    /// Distance along the ray from `origin` at bearing `theta` to the boundary,
    /// or `None` when the ray misses.
    pub fn ray_cast(&self, origin: Vec2, theta: f64) -> Result<Option<f64>> {
        if self.contains_strictly(origin) {
            return Err(GeometryError::InsideShape {
                x: origin.x,
                y: origin.y,
            });
        }
        Ok(self.ray_cast_unchecked(origin, Vec2::from_angle(theta)))
    }

    pub(crate) fn ray_cast_unchecked(&self, origin: Vec2, dir: Vec2) -> Option<f64> {
        match self {
            ConvexShape::Disc { center, radius } => {
                let oc = origin - *center;
                let b = dir.dot(oc);
                let c = oc.norm_sq() - radius * radius;
                let disc = b * b - c;
                if disc < 0.0 {
                    return None;
                }
                let sq = disc.sqrt();
                // Nearer root without cancellation; the roots multiply to `c`.
                let t1 = if b > 0.0 { -b - sq } else { c / (-b + sq) };
                if c <= 0.0 {
                    Some(0.0)
                } else if t1 >= 0.0 {
                    Some(t1)
                } else {
                    None
                }
            }
            ConvexShape::Polygon(p) => p
                .clip(origin, dir, 0.0, f64::INFINITY)
                .map(|(lo, _)| lo.max(0.0)),
        }
    }

    /// Closed polyline approximating the boundary of `D_r(shape)`; arcs are
    /// subdivided so that consecutive points are at most `max_step` apart.
    pub fn dilated_outline(&self, r: f64, max_step: f64) -> Vec<Vec2> {
        let arc_points = |center: Vec2, from: f64, sweep: f64, out: &mut Vec<Vec2>| {
            let n = ((sweep.abs() * r / max_step).ceil() as usize).max(1);
            for k in 0..=n {
                let t = from + sweep * k as f64 / n as f64;
                out.push(center + Vec2::from_angle(t) * r);
            }
        };
        let mut out = Vec::new();
        match self {
            ConvexShape::Disc { center, radius } => {
                let rr = radius + r;
                let n = ((2.0 * PI * rr / max_step).ceil() as usize).max(8);
                for k in 0..n {
                    out.push(*center + Vec2::from_angle(2.0 * PI * k as f64 / n as f64) * rr);
                }
            }
            ConvexShape::Polygon(p) => {
                let n = p.vertices.len();
                for i in 0..n {
                    let v = p.vertices[i];
                    let n_prev = p.normals[(i + n - 1) % n];
                    let n_next = p.normals[i];
                    if r > 0.0 {
                        let from = n_prev.angle();
                        let mut sweep = n_next.angle() - from;
                        while sweep < 0.0 {
                            sweep += 2.0 * PI;
                        }
                        arc_points(v, from, sweep, &mut out);
                    } else {
                        out.push(v);
                    }
                }
            }
        }
        out
    }
}

/// Closest point of the segment `[a, b]` to `q`.
pub fn closest_on_segment(q: Vec2, a: Vec2, b: Vec2) -> Vec2 {
    let ab = b - a;
    let len2 = ab.norm_sq();
    if len2 == 0.0 {
        return a;
    }
    let t = ((q - a).dot(ab) / len2).clamp(0.0, 1.0);
    a + ab * t
}

/// Minimum distance between two convex shapes; zero when they overlap.
pub fn distance_between(a: &ConvexShape, b: &ConvexShape) -> f64 {
    use ConvexShape::*;
    match (a, b) {
        (
            Disc {
                center: c1,
                radius: r1,
            },
            Disc {
                center: c2,
                radius: r2,
            },
        ) => (c1.distance(*c2) - r1 - r2).max(0.0),
        (Disc { center, radius }, other @ Polygon(_))
        | (other @ Polygon(_), Disc { center, radius }) => {
            (other.distance_to(*center) - radius).max(0.0)
        }
        (Polygon(p), Polygon(q)) => {
            // Disjoint convex polygons attain their distance at a vertex of one of them.
            let overlap = p.edges().any(|(s, e)| q.clip(s, e - s, 0.0, 1.0).is_some())
                || b.contains(p.vertices[0])
                || a.contains(q.vertices[0]);
            if overlap {
                return 0.0;
            }
            let ab = p.vertices.iter().map(|v| b.distance_to(*v));
            let ba = q.vertices.iter().map(|v| a.distance_to(*v));
            ab.chain(ba).fold(f64::INFINITY, f64::min)
        }
    }
}
