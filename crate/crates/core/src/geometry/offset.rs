//! Polygon offsetting with miter joins.
//!
//! The offset is built in two stages: a raw offset ring (every edge moved
//! along its outward normal by `delta`, joined per vertex), then an
//! untangle pass that splits the ring at self-intersections and keeps only
//! the loops that belong to the true offset region. Shrinking may split a
//! polygon into several pieces or erase it entirely; dilation of a
//! connected polygon always yields exactly one piece.

use std::collections::HashMap;

use super::{point_polygon_distance, signed_area, Point, Polygon, MIN_POLYGON_AREA};

/// Joins whose miter point lies further than this many `|delta|` from the
/// vertex are beveled instead.
const MITER_LIMIT_FACTOR: f64 = 2.0;

/// Offsets below this magnitude are treated as the identity.
const IDENTITY_EPS: f64 = 1e-9;

/// Cross-product threshold below which unit edge directions count as
/// parallel.
const PARALLEL_EPS: f64 = 1e-12;

/// Offset every edge of `poly` by `delta` pixels along its outward normal:
/// positive dilates, negative shrinks. Corners are mitered, beveled past a
/// miter length of `2 * |delta|`.
///
/// Shrinking returns every surviving piece (possibly none when the region
/// vanishes); dilation returns exactly one polygon. `|delta| < 1e-9`
/// returns the input unchanged.
pub fn offset_polygon(poly: &Polygon, delta: f64) -> Vec<Polygon> {
    if delta.abs() < IDENTITY_EPS {
        return vec![poly.clone()];
    }
    let ring = raw_offset_ring(poly.vertices(), delta);
    let ring = dedup_ring(ring);
    if ring.len() < 3 {
        return Vec::new();
    }
    let loops = untangle(&ring);

    let mut kept: Vec<(f64, Polygon)> = Vec::new();
    for lp in loops {
        if lp.len() < 3 {
            continue;
        }
        let area = signed_area(&lp);
        // Reversed loops are over-offset zones, never part of the result.
        if area < MIN_POLYGON_AREA {
            continue;
        }
        let Some(rep) = interior_point(&lp) else {
            continue;
        };
        if delta < 0.0 {
            // A genuine shrink piece lies inside the source polygon at
            // depth |delta|; spurious loops fail one of the two tests.
            let tol = 1e-7 * (1.0 + delta.abs());
            if !poly.contains(rep) || point_polygon_distance(rep, poly) < delta.abs() - tol {
                continue;
            }
        }
        if let Ok(p) = Polygon::new(lp) {
            kept.push((area, p));
        }
    }

    if delta > 0.0 && kept.len() > 1 {
        // Dilation of a connected region is connected: keep the outer
        // boundary, drop enclosed remnants.
        let best = kept
            .iter()
            .enumerate()
            .max_by(|(_, a), (_, b)| a.0.total_cmp(&b.0))
            .map(|(i, _)| i)
            .unwrap();
        return vec![kept.swap_remove(best).1];
    }
    kept.into_iter().map(|(_, p)| p).collect()
}

/// Build the raw offset ring: one or two points per source vertex.
fn raw_offset_ring(verts: &[Point], delta: f64) -> Vec<Point> {
    let n = verts.len();
    let mut ring = Vec::with_capacity(2 * n);
    for i in 0..n {
        let prev = verts[(i + n - 1) % n];
        let cur = verts[i];
        let next = verts[(i + 1) % n];
        let d0 = (cur - prev).unit();
        let d1 = (next - cur).unit();
        let n0 = d0.rot_right();
        let n1 = d1.rot_right();
        let turn = d0.cross(d1);

        if turn.abs() < PARALLEL_EPS {
            if d0.dot(d1) > 0.0 {
                // Straight continuation: the offset lines coincide.
                ring.push(cur + (n0 + n1) * (0.5 * delta));
            } else {
                // Degenerate 180-degree spike: cap it with a bevel.
                ring.push(cur + n0 * delta);
                ring.push(cur + n1 * delta);
            }
            continue;
        }

        let p0 = cur + n0 * delta;
        let p1 = cur + n1 * delta;
        // Miter point: intersection of the two offset edge lines.
        let t = (p1 - p0).cross(d1) / turn;
        let miter = p0 + d0 * t;

        // The join spreads open exactly when offset direction and turn
        // direction agree; only there can the miter run long.
        let spreads = (delta > 0.0) == (turn > 0.0);
        if spreads && miter.distance(cur) > MITER_LIMIT_FACTOR * delta.abs() {
            ring.push(p0);
            ring.push(p1);
        } else {
            ring.push(miter);
        }
    }
    ring
}

fn dedup_ring(ring: Vec<Point>) -> Vec<Point> {
    let mut out: Vec<Point> = Vec::with_capacity(ring.len());
    for p in ring {
        if out.last().map_or(true, |q| q.distance(p) >= IDENTITY_EPS) {
            out.push(p);
        }
    }
    while out.len() >= 2 && out[0].distance(*out.last().unwrap()) < IDENTITY_EPS {
        out.pop();
    }
    out
}

/// Grid pitch for treating two ring positions as the same node.
const KEY_GRID: f64 = 1e-6;

fn position_key(p: Point) -> (i64, i64) {
    ((p.x / KEY_GRID).round() as i64, (p.y / KEY_GRID).round() as i64)
}

/// Split a closed, possibly self-intersecting ring into simple loops.
///
/// Every proper segment crossing is inserted into both segments, and a
/// segment endpoint lying inside a collinear partner segment is inserted
/// into that partner, so all self-contacts appear as repeated positions
/// along the walk. Whenever a position repeats on the open path, the
/// cycle between its two visits is cut off as one loop; the remainder
/// closes the final loop.
fn untangle(ring: &[Point]) -> Vec<Vec<Point>> {
    let n = ring.len();
    let mut splits: Vec<Vec<(f64, Point)>> = vec![Vec::new(); n];

    for i in 0..n {
        let (a0, a1) = (ring[i], ring[(i + 1) % n]);
        for j in (i + 1)..n {
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let (b0, b1) = (ring[j], ring[(j + 1) % n]);
            if let Some((t, s, p)) = proper_crossing(a0, a1, b0, b1) {
                splits[i].push((t, p));
                splits[j].push((s, p));
            } else {
                // Overlapping collinear segments touch without a proper
                // crossing; cut at each endpoint inside the partner. The
                // inserted point is the partner's own vertex, so the walk
                // sees the exact same position twice.
                for (t, p) in collinear_interior_endpoints(a0, a1, b0, b1) {
                    splits[i].push((t, p));
                }
                for (s, p) in collinear_interior_endpoints(b0, b1, a0, a1) {
                    splits[j].push((s, p));
                }
            }
        }
    }

    let mut seq: Vec<Point> = Vec::with_capacity(2 * n);
    for i in 0..n {
        seq.push(ring[i]);
        splits[i].sort_by(|a, b| a.0.total_cmp(&b.0));
        seq.extend(splits[i].iter().map(|&(_, p)| p));
    }

    let mut loops: Vec<Vec<Point>> = Vec::new();
    let mut path: Vec<Point> = Vec::new();
    let mut open: HashMap<(i64, i64), usize> = HashMap::new();
    for p in seq {
        let key = position_key(p);
        if let Some(&start) = open.get(&key) {
            let cycle: Vec<Point> = path.drain(start..).collect();
            open.retain(|_, pos| *pos < start);
            loops.push(dedup_ring(cycle));
        }
        open.insert(key, path.len());
        path.push(p);
    }
    loops.push(dedup_ring(path));
    loops
}

/// Endpoints of `[b0, b1]` that lie strictly inside the collinear segment
/// `[a0, a1]`, with their parameter along it.
fn collinear_interior_endpoints(
    a0: Point,
    a1: Point,
    b0: Point,
    b1: Point,
) -> Vec<(f64, Point)> {
    let r = a1 - a0;
    let len2 = r.dot(r);
    if len2 < 1e-18 {
        return Vec::new();
    }
    let len = len2.sqrt();
    let mut out = Vec::new();
    for q in [b0, b1] {
        if (q - a0).cross(r).abs() / len > 1e-9 {
            continue;
        }
        let t = (q - a0).dot(r) / len2;
        if t > 1e-9 && t < 1.0 - 1e-9 {
            out.push((t, q));
        }
    }
    out
}

/// Interior crossing of two segments; returns the parameters along each
/// segment and the crossing point, or `None` for parallel, touching, or
/// disjoint pairs.
fn proper_crossing(a0: Point, a1: Point, b0: Point, b1: Point) -> Option<(f64, f64, Point)> {
    let r = a1 - a0;
    let s = b1 - b0;
    let denom = r.cross(s);
    if denom.abs() < 1e-12 {
        return None;
    }
    let q = b0 - a0;
    let t = q.cross(s) / denom;
    let u = q.cross(r) / denom;
    const E: f64 = 1e-9;
    if t <= E || t >= 1.0 - E || u <= E || u >= 1.0 - E {
        return None;
    }
    Some((t, u, a0 + r * t))
}

/// Deterministic strictly-interior point of a simple loop: the midpoint of
/// the widest even-odd span on a horizontal probe line.
fn interior_point(lp: &[Point]) -> Option<Point> {
    let (mut min_y, mut max_y) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in lp {
        min_y = min_y.min(p.y);
        max_y = max_y.max(p.y);
    }
    if !(max_y > min_y) {
        return None;
    }
    for frac in [0.5, 0.37, 0.63, 0.21, 0.79, 0.11, 0.89, 0.045, 0.955] {
        let y = min_y + (max_y - min_y) * frac;
        let mut xs: Vec<f64> = Vec::new();
        let n = lp.len();
        for i in 0..n {
            let (a, b) = (lp[i], lp[(i + 1) % n]);
            if (a.y > y) != (b.y > y) {
                xs.push(a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y));
            }
        }
        if xs.len() < 2 || xs.len() % 2 != 0 {
            continue;
        }
        xs.sort_by(|a, b| a.total_cmp(b));
        let mut best: Option<(f64, f64)> = None;
        for pair in xs.chunks_exact(2) {
            let w = pair[1] - pair[0];
            if w > 1e-9 && best.map_or(true, |(bw, _)| w > bw) {
                best = Some((w, 0.5 * (pair[0] + pair[1])));
            }
        }
        if let Some((_, x)) = best {
            return Some(Point::new(x, y));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::polygon_iou;

    fn square(x0: f64, y0: f64, side: f64) -> Polygon {
        Polygon::from_coords(&[
            (x0, y0),
            (x0 + side, y0),
            (x0 + side, y0 + side),
            (x0, y0 + side),
        ])
        .unwrap()
    }

    fn assert_vertices_close(poly: &Polygon, expect: &[(f64, f64)], tol: f64) {
        assert_eq!(poly.len(), expect.len(), "vertex count");
        // Match each expected corner to the nearest actual vertex.
        for &(x, y) in expect {
            let p = Point::new(x, y);
            let d = poly
                .vertices()
                .iter()
                .map(|v| v.distance(p))
                .fold(f64::INFINITY, f64::min);
            assert!(d <= tol, "no vertex near ({x}, {y}), nearest at {d}");
        }
    }

    #[test]
    fn tiny_delta_is_identity() {
        let sq = square(0.0, 0.0, 10.0);
        let out = offset_polygon(&sq, 1e-12);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0], sq);
    }

    #[test]
    fn shrink_square_exact() {
        let sq = square(0.0, 0.0, 100.0);
        let out = offset_polygon(&sq, -21.0);
        assert_eq!(out.len(), 1);
        assert_vertices_close(
            &out[0],
            &[(21.0, 21.0), (79.0, 21.0), (79.0, 79.0), (21.0, 79.0)],
            1e-9,
        );
    }

    #[test]
    fn dilate_square_exact_miter() {
        // 90-degree corners have miter length sqrt(2)*|delta| < 2*|delta|,
        // so the corners stay sharp: side 100 + 2*21.75 = 143.5.
        let sq = square(0.0, 0.0, 100.0);
        let out = offset_polygon(&sq, 21.75);
        assert_eq!(out.len(), 1);
        assert_vertices_close(
            &out[0],
            &[
                (-21.75, -21.75),
                (121.75, -21.75),
                (121.75, 121.75),
                (-21.75, 121.75),
            ],
            1e-9,
        );
    }

    #[test]
    fn shrink_past_inradius_vanishes() {
        let sq = square(0.0, 0.0, 10.0);
        assert!(offset_polygon(&sq, -6.0).is_empty());
    }

    #[test]
    fn shrink_at_inradius_vanishes() {
        let sq = square(0.0, 0.0, 10.0);
        assert!(offset_polygon(&sq, -5.0).is_empty());
    }

    #[test]
    fn convex_round_trip_exact() {
        // Shrink then dilate by the same magnitude is exact for convex
        // polygons whose interior angles keep the miter under its limit.
        let rect = Polygon::from_coords(&[(0.0, 0.0), (80.0, 0.0), (80.0, 40.0), (0.0, 40.0)])
            .unwrap();
        let shrunk = offset_polygon(&rect, -10.0);
        assert_eq!(shrunk.len(), 1);
        let back = offset_polygon(&shrunk[0], 10.0);
        assert_eq!(back.len(), 1);
        assert_vertices_close(
            &back[0],
            &[(0.0, 0.0), (80.0, 0.0), (80.0, 40.0), (0.0, 40.0)],
            1e-9,
        );
    }

    #[test]
    fn rotated_square_shrink() {
        // Diamond with "radius" 50: shrinking by d moves each edge in by d,
        // leaving a diamond of radius 50 - d*sqrt(2).
        let diamond = Polygon::from_coords(&[(50.0, 0.0), (100.0, 50.0), (50.0, 100.0), (0.0, 50.0)])
            .unwrap();
        let out = offset_polygon(&diamond, -10.0);
        assert_eq!(out.len(), 1);
        let r = 50.0 - 10.0 * 2.0_f64.sqrt();
        assert_vertices_close(
            &out[0],
            &[
                (50.0, 50.0 - r),
                (50.0 + r, 50.0),
                (50.0, 50.0 + r),
                (50.0 - r, 50.0),
            ],
            1e-9,
        );
    }

    #[test]
    fn sharp_spike_dilation_bevels() {
        // Needle triangle: apex angle is far below 60 degrees, so the apex
        // miter exceeds 2*|delta| and must be beveled into two vertices.
        let needle =
            Polygon::from_coords(&[(0.0, 0.0), (100.0, 4.0), (0.0, 8.0)]).unwrap();
        let out = offset_polygon(&needle, 3.0);
        assert_eq!(out.len(), 1);
        let apex_far = out[0]
            .vertices()
            .iter()
            .map(|v| v.x)
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(
            apex_far < 100.0 + 2.0 * 3.0 + 1e-9,
            "beveled apex must respect the miter limit, extends to {apex_far}"
        );
        // Right-angle corners stay mitered: 5 vertices total (3 + 1 extra
        // from the bevel, with the apex replaced by two points).
        assert_eq!(out[0].len(), 4);
    }

    #[test]
    fn concave_shrink_splits() {
        // Dumbbell: two 40x40 lobes joined by a 20x8 neck. Shrinking by 6
        // erases the neck and leaves two separate cores.
        let dumbbell = Polygon::from_coords(&[
            (0.0, 0.0),
            (40.0, 0.0),
            (40.0, 16.0),
            (60.0, 16.0),
            (60.0, 0.0),
            (100.0, 0.0),
            (100.0, 40.0),
            (60.0, 40.0),
            (60.0, 24.0),
            (40.0, 24.0),
            (40.0, 40.0),
            (0.0, 40.0),
        ])
        .unwrap();
        let out = offset_polygon(&dumbbell, -6.0);
        assert_eq!(out.len(), 2, "neck must split: got {}", out.len());
        let mut areas: Vec<f64> = out.iter().map(|p| p.area()).collect();
        areas.sort_by(f64::total_cmp);
        // Each core is 28 wide and 28 tall with one notched corner region;
        // both lobes are congruent.
        assert!((areas[0] - areas[1]).abs() < 1e-6);
    }

    #[test]
    fn l_shape_dilation_stays_single() {
        let l = Polygon::from_coords(&[
            (0.0, 0.0),
            (30.0, 0.0),
            (30.0, 10.0),
            (10.0, 10.0),
            (10.0, 30.0),
            (0.0, 30.0),
        ])
        .unwrap();
        let out = offset_polygon(&l, 3.0);
        assert_eq!(out.len(), 1);
        assert!(out[0].area() > l.area());
        assert!(out[0].is_simple());
        // The reflex corner pulls inward: its trimmed join sits at (13, 13).
        assert_vertices_close(
            &out[0],
            &[
                (-3.0, -3.0),
                (33.0, -3.0),
                (33.0, 13.0),
                (13.0, 13.0),
                (13.0, 33.0),
                (-3.0, 33.0),
            ],
            1e-9,
        );
    }

    #[test]
    fn dilation_contains_source() {
        let tri = Polygon::from_coords(&[(10.0, 10.0), (60.0, 20.0), (30.0, 55.0)]).unwrap();
        let out = offset_polygon(&tri, 5.0);
        assert_eq!(out.len(), 1);
        for v in tri.vertices() {
            assert!(out[0].contains(*v));
        }
        assert!(polygon_iou(&tri, &out[0], 4.0).unwrap() < 1.0);
    }

    #[test]
    fn shrink_contained_in_source() {
        let tri = Polygon::from_coords(&[(10.0, 10.0), (90.0, 20.0), (40.0, 80.0)]).unwrap();
        let out = offset_polygon(&tri, -5.0);
        assert_eq!(out.len(), 1);
        for v in out[0].vertices() {
            assert!(tri.contains(*v), "shrunk vertex {v:?} left the source");
            assert!(point_polygon_distance(*v, &tri) > 5.0 - 1e-6);
        }
    }
}
