//! Outer-boundary extraction for labeled regions and polygon simplification.
//!
//! Contours are traced along pixel cracks: vertices sit on integer pixel
//! corners and the region interior stays on the right of the walk, which
//! yields a positively oriented polygon under the shoelace convention used
//! throughout. A single pixel at (row, col) traces to its unit square
//! (col, row), (col+1, row), (col+1, row+1), (col, row+1).

use super::components::{Labeled, RegionInfo};
use crate::error::{Error, Result};
use crate::geometry::{point_segment_distance, Point, Polygon};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Dir {
    East,
    South,
    West,
    North,
}

impl Dir {
    /// Left turn in raster coordinates (y grows downward).
    fn left(self) -> Dir {
        match self {
            Dir::East => Dir::North,
            Dir::South => Dir::East,
            Dir::West => Dir::South,
            Dir::North => Dir::West,
        }
    }

    fn right(self) -> Dir {
        match self {
            Dir::East => Dir::South,
            Dir::South => Dir::West,
            Dir::West => Dir::North,
            Dir::North => Dir::East,
        }
    }

    fn step(self, (x, y): (i64, i64)) -> (i64, i64) {
        match self {
            Dir::East => (x + 1, y),
            Dir::South => (x, y + 1),
            Dir::West => (x - 1, y),
            Dir::North => (x, y - 1),
        }
    }
}

/// Trace the outer boundary of `region` as a polygon on pixel corners.
///
/// The walk keeps region pixels on its right and background on its left,
/// so regions touching at a single corner stay one closed loop. Interior
/// holes are not traced.
pub fn trace_contour(labeled: &Labeled, region: &RegionInfo) -> Polygon {
    let id = region.id;
    let width = labeled.width() as i64;
    let height = labeled.height() as i64;
    let fg = |y: i64, x: i64| -> bool {
        y >= 0
            && y < height
            && x >= 0
            && x < width
            && labeled.labels()[(y * width + x) as usize] == id
    };
    // A move is legal when the pixel on its right belongs to the region
    // and the pixel on its left does not.
    let legal = |corner: (i64, i64), dir: Dir| -> bool {
        let (x, y) = corner;
        let (right, left) = match dir {
            Dir::East => ((y, x), (y - 1, x)),
            Dir::South => ((y, x - 1), (y, x)),
            Dir::West => ((y - 1, x - 1), (y, x - 1)),
            Dir::North => ((y - 1, x), (y - 1, x - 1)),
        };
        fg(right.0, right.1) && !fg(left.0, left.1)
    };

    let (row, col) = region.first_pixel;
    let start = (col as i64, row as i64);
    let mut corner = start;
    // Priming heading: the first pixel has no region pixels above or to
    // its upper diagonals, so the first legal move is always East.
    let mut heading = Dir::North;
    let mut first_dir = None;
    let mut corners: Vec<(i64, i64)> = Vec::new();
    let cap = 4 * labeled.labels().len() + 8;
    loop {
        let dir = [heading.left(), heading, heading.right()]
            .into_iter()
            .find(|&d| legal(corner, d))
            .expect("contour walk reached a corner with no legal move");
        match first_dir {
            None => first_dir = Some(dir),
            Some(fd) => {
                if corner == start && dir == fd {
                    break;
                }
            }
        }
        corners.push(corner);
        corner = dir.step(corner);
        heading = dir;
        assert!(corners.len() <= cap, "contour walk failed to close");
    }

    // Drop corners interior to straight runs; all moves are axis-aligned
    // unit steps, so redundancy is a local property.
    let n = corners.len();
    let verts: Vec<Point> = (0..n)
        .filter(|&i| {
            let p = corners[(i + n - 1) % n];
            let c = corners[i];
            let q = corners[(i + 1) % n];
            (c.0 - p.0) * (q.1 - c.1) - (c.1 - p.1) * (q.0 - c.0) != 0
        })
        .map(|i| Point::new(corners[i].0 as f64, corners[i].1 as f64))
        .collect();
    Polygon::new(verts).expect("traced contour is a valid polygon")
}

/// Douglas-Peucker simplification of a closed polygon.
///
/// Dropped vertices deviate at most `eps` from the retained outline;
/// `eps = 0` removes exactly collinear vertices only.
pub fn simplify(poly: &Polygon, eps: f64) -> Result<Polygon> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "simplification tolerance must be nonnegative, got {eps}"
        )));
    }
    let verts = poly.vertices();
    let n = verts.len();
    // Anchor the closed ring at vertex 0 and the vertex farthest from it,
    // then simplify the two arcs independently.
    let far = (1..n)
        .max_by(|&a, &b| {
            verts[0]
                .distance(verts[a])
                .total_cmp(&verts[0].distance(verts[b]))
        })
        .expect("polygon has at least 3 vertices");
    let mut keep = vec![false; n];
    keep[0] = true;
    keep[far] = true;
    mark_kept(verts, 0, far, eps, &mut keep);
    let tail: Vec<Point> = verts[far..].iter().chain(&verts[..1]).copied().collect();
    let mut keep_tail = vec![false; tail.len()];
    mark_kept(&tail, 0, tail.len() - 1, eps, &mut keep_tail);
    for (offset, &k) in keep_tail.iter().enumerate() {
        if k {
            keep[(far + offset) % n] = true;
        }
    }
    let kept: Vec<Point> = (0..n).filter(|&i| keep[i]).map(|i| verts[i]).collect();
    if kept.len() < 3 {
        return Err(Error::DegenerateGeometry(format!(
            "simplification at eps {eps} left {} vertices",
            kept.len()
        )));
    }
    Polygon::new(kept)
}

fn mark_kept(pts: &[Point], lo: usize, hi: usize, eps: f64, keep: &mut [bool]) {
    if hi <= lo + 1 {
        return;
    }
    let mut best = -1.0;
    let mut best_i = lo;
    for i in lo + 1..hi {
        let d = point_segment_distance(pts[i], pts[lo], pts[hi]);
        if d > best {
            best = d;
            best_i = i;
        }
    }
    if best > eps {
        keep[best_i] = true;
        mark_kept(pts, lo, best_i, eps, keep);
        mark_kept(pts, best_i, hi, eps, keep);
    }
}
