//! Planar geometry: polyline arc-length parameterization and oriented
//! rectangle intersection (separating axis test).

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dist(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum GeomError {
    #[error("path needs at least one waypoint")]
    EmptyPath,
    #[error("consecutive duplicate waypoint at index {0}")]
    DuplicateWaypoint(usize),
}

/// A piecewise-linear path with cumulative arc length and per-segment
/// headings.
#[derive(Debug, Clone, PartialEq)]
pub struct PathGeom {
    waypoints: Vec<Point>,
    /// Cumulative arc length at each waypoint; cum_len[0] = 0.
    cum_len: Vec<f64>,
    /// Heading of segment i (waypoint i -> i+1); empty for a single point.
    headings: Vec<f64>,
}

/// Arc-length parameterize a waypoint polyline.
pub fn arc_length_parameterize(waypoints: &[Point]) -> Result<PathGeom, GeomError> {
    if waypoints.is_empty() {
        return Err(GeomError::EmptyPath);
    }
    let mut cum_len = Vec::with_capacity(waypoints.len());
    let mut headings = Vec::with_capacity(waypoints.len().saturating_sub(1));
    cum_len.push(0.0);
    for i in 1..waypoints.len() {
        let a = waypoints[i - 1];
        let b = waypoints[i];
        let d = a.dist(&b);
        if d == 0.0 {
            return Err(GeomError::DuplicateWaypoint(i));
        }
        cum_len.push(cum_len[i - 1] + d);
        headings.push((b.y - a.y).atan2(b.x - a.x));
    }
    Ok(PathGeom { waypoints: waypoints.to_vec(), cum_len, headings })
}

impl PathGeom {
    pub fn total_length(&self) -> f64 {
        *self.cum_len.last().unwrap()
    }

    pub fn waypoints(&self) -> &[Point] {
        &self.waypoints
    }

    pub fn headings(&self) -> &[f64] {
        &self.headings
    }

    /// Arc position of a point lying on the path (the inverse of `pose_at`
    /// for on-path points). `hint_s` disambiguates self-crossing paths by
    /// preferring the candidate nearest to it.
    pub fn arc_position_of(&self, p: &Point, hint_s: f64) -> f64 {
        if self.waypoints.len() == 1 {
            return 0.0;
        }
        let mut best = (f64::INFINITY, f64::INFINITY, 0.0); // (dist2, |s-hint|, s)
        for seg in 0..self.headings.len() {
            let a = self.waypoints[seg];
            let b = self.waypoints[seg + 1];
            let len = self.cum_len[seg + 1] - self.cum_len[seg];
            let t = (((p.x - a.x) * (b.x - a.x) + (p.y - a.y) * (b.y - a.y)) / (len * len))
                .clamp(0.0, 1.0);
            let proj = Point::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y));
            let d2 = (p.x - proj.x).powi(2) + (p.y - proj.y).powi(2);
            let s = self.cum_len[seg] + t * len;
            let key = (d2, (s - hint_s).abs(), s);
            if key.0 < best.0 - 1e-12 || (key.0 < best.0 + 1e-12 && key.1 < best.1) {
                best = key;
            }
        }
        best.2
    }

    /// Pose at arc position `s`, clamped to [0, total]. Headings switch at
    /// waypoints: position s uses the segment containing it, with the final
    /// segment extending to s = total.
    pub fn pose_at(&self, s: f64) -> Pose {
        if self.waypoints.len() == 1 {
            let p = self.waypoints[0];
            return Pose { x: p.x, y: p.y, theta: 0.0 };
        }
        let s = s.clamp(0.0, self.total_length());
        // Last waypoint index with cum_len <= s.
        let seg = match self.cum_len.partition_point(|&c| c <= s) {
            0 => 0,
            i => (i - 1).min(self.headings.len() - 1),
        };
        let a = self.waypoints[seg];
        let b = self.waypoints[seg + 1];
        let seg_len = self.cum_len[seg + 1] - self.cum_len[seg];
        let frac = ((s - self.cum_len[seg]) / seg_len).clamp(0.0, 1.0);
        Pose {
            x: a.x + frac * (b.x - a.x),
            y: a.y + frac * (b.y - a.y),
            theta: self.headings[seg],
        }
    }
}

/// Oriented rectangle: center, half extents, rotation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Obb {
    pub cx: f64,
    pub cy: f64,
    pub half_length: f64,
    pub half_width: f64,
    pub angle: f64,
}

impl Obb {
    pub fn new(cx: f64, cy: f64, half_length: f64, half_width: f64, angle: f64) -> Self {
        Obb { cx, cy, half_length, half_width, angle }
    }

    pub fn from_pose(pose: &Pose, half_length: f64, half_width: f64) -> Self {
        Obb { cx: pose.x, cy: pose.y, half_length, half_width, angle: pose.theta }
    }

    pub fn corners(&self) -> [Point; 4] {
        let (sin, cos) = self.angle.sin_cos();
        let lx = cos * self.half_length;
        let ly = sin * self.half_length;
        let wx = -sin * self.half_width;
        let wy = cos * self.half_width;
        [
            Point::new(self.cx + lx + wx, self.cy + ly + wy),
            Point::new(self.cx + lx - wx, self.cy + ly - wy),
            Point::new(self.cx - lx - wx, self.cy - ly - wy),
            Point::new(self.cx - lx + wx, self.cy - ly + wy),
        ]
    }

    /// Circumscribed circle radius, for cheap distance prefilters.
    pub fn bounding_radius(&self) -> f64 {
        self.half_length.hypot(self.half_width)
    }

    /// True when a point lies inside or on the rectangle.
    pub fn contains(&self, p: &Point) -> bool {
        let (sin, cos) = self.angle.sin_cos();
        let dx = p.x - self.cx;
        let dy = p.y - self.cy;
        let local_l = dx * cos + dy * sin;
        let local_w = -dx * sin + dy * cos;
        local_l.abs() <= self.half_length && local_w.abs() <= self.half_width
    }
}

// Projection radius of `b` onto a unit axis plus projection of center gap.
fn separated_on_axis(a: &Obb, b: &Obb, axis: (f64, f64)) -> bool {
    let project = |r: &Obb| {
        let (sin, cos) = r.angle.sin_cos();
        // |proj of length axis| + |proj of width axis|
        r.half_length * (cos * axis.0 + sin * axis.1).abs()
            + r.half_width * (-sin * axis.0 + cos * axis.1).abs()
    };
    let center_gap = ((b.cx - a.cx) * axis.0 + (b.cy - a.cy) * axis.1).abs();
    center_gap > project(a) + project(b)
}

/// Exact separating-axis test over the four candidate axes. Touching
/// boundaries count as intersecting.
pub fn obb_intersect(a: &Obb, b: &Obb) -> bool {
    let (sa, ca) = a.angle.sin_cos();
    let (sb, cb) = b.angle.sin_cos();
    let axes = [(ca, sa), (-sa, ca), (cb, sb), (-sb, cb)];
    !axes.iter().any(|axis| separated_on_axis(a, b, *axis))
}
