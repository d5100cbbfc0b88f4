//! Planar polygon primitives: validated simple polygons, offset-distance
//! formulas, point/boundary distances, and a raster-sampled IoU.
//!
//! Conventions used throughout the crate:
//! * coordinates are `(x, y)` in pixels, `x` along columns, `y` along rows;
//! * polygons are stored counter-clockwise (positive shoelace area) no
//!   matter the input winding;
//! * point-in-polygon uses the even-odd rule with half-open edges, so a
//!   point exactly on a shared edge of two adjacent polygons belongs to
//!   exactly one of them.

mod offset;

pub use offset::offset_polygon;

use crate::error::{Error, Result};

/// Minimum area accepted when constructing a polygon.
pub const MIN_POLYGON_AREA: f64 = 1e-9;

/// Consecutive vertices closer than this are merged on construction.
pub const MIN_VERTEX_SEPARATION: f64 = 1e-9;

/// A 2D point / vector in pixel coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the cross product, treating both as vectors.
    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn unit(self) -> Point {
        let n = self.norm();
        Point::new(self.x / n, self.y / n)
    }

    /// Right-hand perpendicular; the outward normal of a CCW edge direction.
    pub fn rot_right(self) -> Point {
        Point::new(self.y, -self.x)
    }

    pub fn distance(self, other: Point) -> f64 {
        (self - other).norm()
    }
}

impl std::ops::Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl std::ops::Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl std::ops::Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

/// Axis-aligned bounding box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bbox {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Bbox {
    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }

    pub fn intersects(&self, other: &Bbox) -> bool {
        self.min_x <= other.max_x
            && other.min_x <= self.max_x
            && self.min_y <= other.max_y
            && other.min_y <= self.max_y
    }

    pub fn union(&self, other: &Bbox) -> Bbox {
        Bbox {
            min_x: self.min_x.min(other.min_x),
            min_y: self.min_y.min(other.min_y),
            max_x: self.max_x.max(other.max_x),
            max_y: self.max_y.max(other.max_y),
        }
    }
}

/// A validated polygon: at least three distinct vertices, area at least
/// [`MIN_POLYGON_AREA`], stored counter-clockwise.
///
/// Construction normalizes winding and merges consecutive vertices closer
/// than [`MIN_VERTEX_SEPARATION`] (including a repeated closing vertex).
/// Self-intersection is *not* checked here; annotation ingestion calls
/// [`Polygon::is_simple`] and skips offending regions.
#[derive(Clone, Debug, PartialEq)]
pub struct Polygon {
    verts: Vec<Point>,
}

impl Polygon {
    pub fn new(verts: Vec<Point>) -> Result<Self> {
        for p in &verts {
            if !p.x.is_finite() || !p.y.is_finite() {
                return Err(Error::DegenerateGeometry(
                    "non-finite vertex coordinate".into(),
                ));
            }
        }
        let mut v: Vec<Point> = Vec::with_capacity(verts.len());
        for p in verts {
            if v.last().map_or(true, |q| q.distance(p) >= MIN_VERTEX_SEPARATION) {
                v.push(p);
            }
        }
        while v.len() >= 2 && v[0].distance(*v.last().unwrap()) < MIN_VERTEX_SEPARATION {
            v.pop();
        }
        if v.len() < 3 {
            return Err(Error::DegenerateGeometry(format!(
                "{} distinct vertices, need at least 3",
                v.len()
            )));
        }
        let a = signed_area(&v);
        if a.abs() < MIN_POLYGON_AREA {
            return Err(Error::DegenerateGeometry(format!(
                "area {:.3e} below minimum {MIN_POLYGON_AREA:.0e}",
                a.abs()
            )));
        }
        if a < 0.0 {
            v.reverse();
        }
        Ok(Polygon { verts: v })
    }

    /// Convenience constructor from `(x, y)` pairs.
    pub fn from_coords(coords: &[(f64, f64)]) -> Result<Self> {
        Polygon::new(coords.iter().map(|&(x, y)| Point::new(x, y)).collect())
    }

    pub fn vertices(&self) -> &[Point] {
        &self.verts
    }

    pub fn len(&self) -> usize {
        self.verts.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Enclosed area; positive by construction.
    pub fn area(&self) -> f64 {
        signed_area(&self.verts)
    }

    /// Boundary length.
    pub fn perimeter(&self) -> f64 {
        let n = self.verts.len();
        (0..n)
            .map(|i| self.verts[i].distance(self.verts[(i + 1) % n]))
            .sum()
    }

    pub fn bbox(&self) -> Bbox {
        let mut b = Bbox {
            min_x: f64::INFINITY,
            min_y: f64::INFINITY,
            max_x: f64::NEG_INFINITY,
            max_y: f64::NEG_INFINITY,
        };
        for p in &self.verts {
            b.min_x = b.min_x.min(p.x);
            b.min_y = b.min_y.min(p.y);
            b.max_x = b.max_x.max(p.x);
            b.max_y = b.max_y.max(p.y);
        }
        b
    }

    /// Even-odd containment test (half-open: counts boundary crossings
    /// strictly to the right of `p`).
    pub fn contains(&self, p: Point) -> bool {
        let mut inside = false;
        let n = self.verts.len();
        let mut j = n - 1;
        for i in 0..n {
            let (vi, vj) = (self.verts[i], self.verts[j]);
            if (vi.y > p.y) != (vj.y > p.y) {
                let x_cross = vi.x + (p.y - vi.y) * (vj.x - vi.x) / (vj.y - vi.y);
                if p.x < x_cross {
                    inside = !inside;
                }
            }
            j = i;
        }
        inside
    }

    /// True when no two non-adjacent edges intersect or touch.
    pub fn is_simple(&self) -> bool {
        let n = self.verts.len();
        for i in 0..n {
            let (a0, a1) = (self.verts[i], self.verts[(i + 1) % n]);
            for j in (i + 1)..n {
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                let (b0, b1) = (self.verts[j], self.verts[(j + 1) % n]);
                if segments_touch(a0, a1, b0, b1) {
                    return false;
                }
            }
        }
        true
    }
}

/// Shoelace area of a closed point ring (positive for CCW).
pub(crate) fn signed_area(verts: &[Point]) -> f64 {
    let n = verts.len();
    let mut acc = 0.0;
    for i in 0..n {
        let a = verts[i];
        let b = verts[(i + 1) % n];
        acc += a.cross(b);
    }
    0.5 * acc
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b - a).cross(c - a)
}

/// Whether two segments share any point (crossing, touching, or overlap).
fn segments_touch(a0: Point, a1: Point, b0: Point, b1: Point) -> bool {
    let d1 = orient(a0, a1, b0);
    let d2 = orient(a0, a1, b1);
    let d3 = orient(b0, b1, a0);
    let d4 = orient(b0, b1, a1);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |a: Point, b: Point, p: Point, d: f64| -> bool {
        d == 0.0
            && p.x >= a.x.min(b.x)
            && p.x <= a.x.max(b.x)
            && p.y >= a.y.min(b.y)
            && p.y <= a.y.max(b.y)
    };
    on(a0, a1, b0, d1) || on(a0, a1, b1, d2) || on(b0, b1, a0, d3) || on(b0, b1, a1, d4)
}

/// Inward offset distance `D = A(1 - r^2) / L` for shrink ratio `r`.
pub fn shrink_offset(poly: &Polygon, r: f64) -> Result<f64> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "shrink ratio must lie in (0, 1), got {r}"
        )));
    }
    Ok(poly.area() * (1.0 - r * r) / poly.perimeter())
}

/// Outward offset distance `D' = A * r' / L` for unclip ratio `r'`.
pub fn unclip_offset(poly: &Polygon, r_prime: f64) -> Result<f64> {
    if !(r_prime > 0.0 && r_prime.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "unclip ratio must be positive and finite, got {r_prime}"
        )));
    }
    Ok(poly.area() * r_prime / poly.perimeter())
}

/// Distance from `p` to the closed segment `[a, b]`.
pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 < MIN_VERTEX_SEPARATION * MIN_VERTEX_SEPARATION {
        return p.distance(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.distance(a + ab * t)
}

/// Unsigned distance from `p` to the nearest point of the polygon boundary.
pub fn point_polygon_distance(p: Point, poly: &Polygon) -> f64 {
    let verts = poly.vertices();
    let n = verts.len();
    let mut best = f64::INFINITY;
    for i in 0..n {
        let d = point_segment_distance(p, verts[i], verts[(i + 1) % n]);
        if d < best {
            best = d;
        }
    }
    best
}

/// Raster-sampled intersection-over-union of two polygons.
///
/// Samples `resolution` points per pixel per axis over the joint bounding
/// box, anchored at integer pixel boundaries so axis-aligned integer
/// rectangles are measured exactly at `resolution = 1`.
pub fn polygon_iou(a: &Polygon, b: &Polygon, resolution: f64) -> Result<f64> {
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "iou resolution must be positive, got {resolution}"
        )));
    }
    let ba = a.bbox();
    let bb = b.bbox();
    if !ba.intersects(&bb) {
        return Ok(0.0);
    }
    let joint = ba.union(&bb);
    let step = 1.0 / resolution;
    let x0 = joint.min_x.floor();
    let y0 = joint.min_y.floor();
    let nx = ((joint.max_x - x0) / step).ceil() as u64;
    let ny = ((joint.max_y - y0) / step).ceil() as u64;
    if nx.saturating_mul(ny) > 1 << 28 {
        return Err(Error::InvalidParameter(format!(
            "iou sample grid {nx}x{ny} too fine"
        )));
    }
    let mut inter = 0u64;
    let mut union = 0u64;
    for iy in 0..ny {
        let y = y0 + (iy as f64 + 0.5) * step;
        for ix in 0..nx {
            let p = Point::new(x0 + (ix as f64 + 0.5) * step, y);
            let in_a = a.contains(p);
            let in_b = b.contains(p);
            if in_a && in_b {
                inter += 1;
            }
            if in_a || in_b {
                union += 1;
            }
        }
    }
    if union == 0 {
        return Ok(0.0);
    }
    Ok(inter as f64 / union as f64)
}

/// Convex hull by monotone chain, counterclockwise, collinear points dropped.
/// Fewer than 3 distinct non-collinear inputs yield a shorter chain.
pub(crate) fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup_by(|a, b| a.x == b.x && a.y == b.y);
    if pts.len() < 3 {
        return pts;
    }
    let build = |iter: &mut dyn Iterator<Item = Point>| -> Vec<Point> {
        let mut chain: Vec<Point> = Vec::new();
        for p in iter {
            while chain.len() >= 2
                && orient(chain[chain.len() - 2], chain[chain.len() - 1], p) <= 0.0
            {
                chain.pop();
            }
            chain.push(p);
        }
        chain
    };
    let mut lower = build(&mut pts.iter().copied());
    let mut upper = build(&mut pts.iter().rev().copied());
    lower.pop();
    upper.pop();
    lower.append(&mut upper);
    lower
}

/// Distance between two closed segments; 0 when they share a point.
pub(crate) fn segment_segment_distance(a0: Point, a1: Point, b0: Point, b1: Point) -> f64 {
    if segments_touch(a0, a1, b0, b1) {
        return 0.0;
    }
    point_segment_distance(a0, b0, b1)
        .min(point_segment_distance(a1, b0, b1))
        .min(point_segment_distance(b0, a0, a1))
        .min(point_segment_distance(b1, a0, a1))
}

/// Minimum distance between the boundaries of two polygons.
pub(crate) fn polygon_boundary_distance(a: &Polygon, b: &Polygon) -> f64 {
    let va = a.vertices();
    let vb = b.vertices();
    let mut best = f64::INFINITY;
    for i in 0..va.len() {
        let a1 = va[(i + 1) % va.len()];
        for j in 0..vb.len() {
            let b1 = vb[(j + 1) % vb.len()];
            let d = segment_segment_distance(va[i], a1, vb[j], b1);
            if d < best {
                best = d;
            }
        }
    }
    best
}
