//! Inference post-processing: from a probability map to scored boxes.
//!
//! The pipeline binarizes the map at a constant threshold, labels
//! 8-connected regions, scores each region by its mean probability,
//! traces and simplifies the region contour, dilates it back out by the
//! offset `D' = A' r' / L'`, and filters out slivers. Output is either
//! the dilated polygon or its minimum-area enclosing rectangle.

mod components;
mod contour;

pub use components::{connected_components, Connectivity, Labeled, RegionInfo};
pub use contour::{simplify, trace_contour};

use crate::db::standard_binarize;
use crate::error::{Error, Result};
use crate::geometry::{convex_hull, unclip_offset, offset_polygon, Point, Polygon};
use crate::maps::FloatMap;

/// One detected region.
#[derive(Clone, Debug, PartialEq)]
pub struct Detection {
    pub polygon: Polygon,
    /// Mean probability over the detected core region, in [0, 1].
    pub score: f64,
}

/// Output geometry per detection.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum OutputMode {
    /// The dilated simplified contour.
    #[default]
    Polygon,
    /// Its minimum-area enclosing rotated rectangle.
    MinAreaRect,
}

/// Box-formation parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoxformParams {
    /// Binarization threshold applied to the probability map.
    pub const_thresh: f64,
    /// Dilation ratio `r'` of the offset formula.
    pub r_prime: f64,
    /// Minimum mean region probability to keep a detection.
    pub score_thresh: f64,
    /// Minimum side of the enclosing rectangle, in pixels.
    pub min_side: f64,
    /// Contour simplification tolerance as a fraction of the perimeter.
    pub approx_eps_ratio: f64,
    pub output_mode: OutputMode,
}

impl Default for BoxformParams {
    fn default() -> Self {
        BoxformParams {
            const_thresh: 0.2,
            r_prime: 1.5,
            score_thresh: 0.5,
            min_side: 3.0,
            approx_eps_ratio: 0.01,
            output_mode: OutputMode::Polygon,
        }
    }
}

impl BoxformParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.const_thresh > 0.0 && self.const_thresh < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "binarization threshold must lie in (0, 1), got {}",
                self.const_thresh
            )));
        }
        if !(self.score_thresh > 0.0 && self.score_thresh < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "score threshold must lie in (0, 1), got {}",
                self.score_thresh
            )));
        }
        if !(self.r_prime > 0.0 && self.r_prime.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "dilation ratio must be positive, got {}",
                self.r_prime
            )));
        }
        if !(self.min_side >= 0.0 && self.min_side.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "minimum side must be nonnegative, got {}",
                self.min_side
            )));
        }
        if !(self.approx_eps_ratio >= 0.0 && self.approx_eps_ratio.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "simplification ratio must be nonnegative, got {}",
                self.approx_eps_ratio
            )));
        }
        Ok(())
    }
}

/// Mean of `prob` over the pixels of `region`.
pub fn region_score(prob: &FloatMap, labeled: &Labeled, region: &RegionInfo) -> f64 {
    let width = labeled.width();
    let mut sum = 0.0f64;
    for row in region.min_row..=region.max_row {
        for col in region.min_col..=region.max_col {
            if labeled.labels()[row * width + col] == region.id {
                sum += prob.get(row, col) as f64;
            }
        }
    }
    sum / region.pixel_count as f64
}

/// Minimum-area enclosing rotated rectangle via rotating calipers over the
/// convex hull. Ties between orientations resolve to the first hull edge.
pub fn min_area_rect(poly: &Polygon) -> Result<Polygon> {
    let hull = convex_hull(poly.vertices());
    if hull.len() < 3 {
        return Err(Error::DegenerateGeometry(
            "hull has fewer than 3 vertices".into(),
        ));
    }
    let mut best_area = f64::INFINITY;
    let mut best: Option<[Point; 4]> = None;
    for i in 0..hull.len() {
        let a = hull[i];
        let b = hull[(i + 1) % hull.len()];
        let u = (b - a).unit();
        let v = Point::new(-u.y, u.x);
        let (mut s_min, mut s_max) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut t_min, mut t_max) = (f64::INFINITY, f64::NEG_INFINITY);
        for &p in &hull {
            let s = p.dot(u);
            let t = p.dot(v);
            s_min = s_min.min(s);
            s_max = s_max.max(s);
            t_min = t_min.min(t);
            t_max = t_max.max(t);
        }
        let area = (s_max - s_min) * (t_max - t_min);
        if area < best_area {
            best_area = area;
            let corner = |s: f64, t: f64| Point::new(u.x * s + v.x * t, u.y * s + v.y * t);
            best = Some([
                corner(s_min, t_min),
                corner(s_max, t_min),
                corner(s_max, t_max),
                corner(s_min, t_max),
            ]);
        }
    }
    let corners = best.expect("hull has at least one edge");
    Polygon::new(corners.to_vec())
}

/// Side lengths (long, short) of a 4-vertex rectangle polygon.
fn rect_sides(rect: &Polygon) -> (f64, f64) {
    let v = rect.vertices();
    let a = v[0].distance(v[1]);
    let b = v[1].distance(v[2]);
    (a.max(b), a.min(b))
}

/// Run the full box-formation pipeline over a probability map.
///
/// Detections come back sorted by descending score; equal scores keep
/// the raster order of their source regions.
pub fn form_boxes(prob: &FloatMap, params: &BoxformParams) -> Result<Vec<Detection>> {
    params.validate()?;
    let binary = standard_binarize(prob, params.const_thresh)?;
    let labeled = connected_components(&binary, Connectivity::Eight);
    let mut scored: Vec<(f64, u32, Polygon)> = Vec::new();
    for region in labeled.regions() {
        let score = region_score(prob, &labeled, region);
        if score < params.score_thresh {
            continue;
        }
        let traced = trace_contour(&labeled, region);
        let eps = params.approx_eps_ratio * traced.perimeter();
        let core = match simplify(&traced, eps) {
            Ok(p) => p,
            Err(_) => continue,
        };
        let d_prime = unclip_offset(&core, params.r_prime)?;
        let Some(dilated) = offset_polygon(&core, d_prime).into_iter().next() else {
            continue;
        };
        let rect = match min_area_rect(&dilated) {
            Ok(r) => r,
            Err(_) => continue,
        };
        let (_, short) = rect_sides(&rect);
        if short < params.min_side {
            continue;
        }
        let polygon = match params.output_mode {
            OutputMode::Polygon => dilated,
            OutputMode::MinAreaRect => rect,
        };
        scored.push((score, region.id, polygon));
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    Ok(scored
        .into_iter()
        .map(|(score, _, polygon)| Detection { polygon, score })
        .collect())
}

/// One detection as a text line: `x1,y1,...,xn,yn,score` with coordinates
/// to 1 decimal and the score to 4 decimals.
pub fn format_detection(det: &Detection) -> String {
    let mut line = String::new();
    for p in det.polygon.vertices() {
        line.push_str(&format!("{:.1},{:.1},", p.x, p.y));
    }
    line.push_str(&format!("{:.4}", det.score));
    line
}

/// All detections, one line each, trailing newline when nonempty.
pub fn format_detections(dets: &[Detection]) -> String {
    let mut out = String::new();
    for det in dets {
        out.push_str(&format_detection(det));
        out.push('\n');
    }
    out
}

/// Parse detection lines produced by [`format_detections`].
pub fn parse_detections(text: &str) -> Result<Vec<Detection>> {
    let mut dets = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 7 || fields.len() % 2 == 0 {
            return Err(Error::ParseError {
                line: line_no,
                msg: format!(
                    "expected an even run of at least 6 coordinates plus a score, got {} fields",
                    fields.len()
                ),
            });
        }
        let parse = |f: &str| -> Result<f64> {
            f.trim().parse().map_err(|_| Error::ParseError {
                line: line_no,
                msg: format!("non-numeric field {f:?}"),
            })
        };
        let score = parse(fields[fields.len() - 1])?;
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::ParseError {
                line: line_no,
                msg: format!("score {score} outside [0, 1]"),
            });
        }
        let mut coords = Vec::with_capacity(fields.len() - 1);
        for f in &fields[..fields.len() - 1] {
            coords.push(parse(f)?);
        }
        let points: Vec<Point> = coords
            .chunks_exact(2)
            .map(|c| Point::new(c[0], c[1]))
            .collect();
        let polygon = Polygon::new(points).map_err(|e| Error::ParseError {
            line: line_no,
            msg: format!("invalid polygon: {e}"),
        })?;
        dets.push(Detection { polygon, score });
    }
    Ok(dets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::polygon_iou;
    use crate::labelgen::{gen_prob_label, Annotation};

    fn square_poly(x0: f64, y0: f64, side: f64) -> Polygon {
        Polygon::from_coords(&[
            (x0, y0),
            (x0 + side, y0),
            (x0 + side, y0 + side),
            (x0, y0 + side),
        ])
        .unwrap()
    }

    fn ideal_map_for(polys: &[Polygon], height: usize, width: usize) -> FloatMap {
        let anns: Vec<Annotation> = polys
            .iter()
            .map(|p| Annotation::new(p.clone(), false))
            .collect();
        gen_prob_label(&anns, height, width, 0.4).unwrap().to_float()
    }

    #[test]
    fn region_score_means() {
        let mut prob = FloatMap::zeros(4, 4).unwrap();
        for col in 0..4 {
            prob.set(0, col, 0.9);
            prob.set(1, col, if col < 2 { 1.0 } else { 0.0 });
        }
        let mut mask = crate::maps::BinaryMap::zeros(4, 4).unwrap();
        for col in 0..4 {
            mask.set(0, col, true);
            mask.set(1, col, true);
        }
        let labeled = connected_components(&mask, Connectivity::Eight);
        let score = region_score(&prob, &labeled, &labeled.regions()[0]);
        assert!((score - (4.0 * 0.9 + 2.0) / 8.0).abs() < 1e-7);
    }

    #[test]
    fn min_area_rect_of_axis_square_is_itself() {
        let sq = square_poly(2.0, 3.0, 10.0);
        let rect = min_area_rect(&sq).unwrap();
        assert_eq!(rect.area(), 100.0);
        for v in rect.vertices() {
            assert!(sq.vertices().iter().any(|w| w.distance(*v) < 1e-9));
        }
    }

    #[test]
    fn min_area_rect_rotation_covariant() {
        let base = [(0.0, 0.0), (40.0, 0.0), (40.0, 20.0), (0.0, 20.0)];
        let ang = 30f64.to_radians();
        let rotated: Vec<(f64, f64)> = base
            .iter()
            .map(|&(x, y)| (x * ang.cos() - y * ang.sin(), x * ang.sin() + y * ang.cos()))
            .collect();
        let poly = Polygon::from_coords(&rotated).unwrap();
        let rect = min_area_rect(&poly).unwrap();
        assert!((rect.area() - 800.0).abs() < 1e-6);
        let (long, short) = rect_sides(&rect);
        assert!((long - 40.0).abs() < 1e-9);
        assert!((short - 20.0).abs() < 1e-9);
    }

    #[test]
    fn min_area_rect_bounds_random_polygon() {
        // Convex 20-gon on a wobbly circle: rectangle must cover the hull
        // and beat or match the axis-aligned bounding box.
        let coords: Vec<(f64, f64)> = (0..20)
            .map(|i| {
                let ang = i as f64 * std::f64::consts::TAU / 20.0;
                let r = 30.0 + 5.0 * (3.0 * ang).sin();
                (r * ang.cos(), r * ang.sin())
            })
            .collect();
        let poly = Polygon::from_coords(&coords).unwrap();
        let rect = min_area_rect(&poly).unwrap();
        let b = poly.bbox();
        assert!(rect.area() <= b.width() * b.height() + 1e-9);
        assert!(rect.area() >= poly.area());
        for &v in poly.vertices() {
            assert!(rect.contains(v) || crate::geometry::point_polygon_distance(v, &rect) < 1e-7);
        }
    }

    #[test]
    fn form_boxes_recovers_shrunk_square() {
        let source = square_poly(50.0, 50.0, 100.0);
        let prob = ideal_map_for(std::slice::from_ref(&source), 200, 200);
        let dets = form_boxes(&prob, &BoxformParams::default()).unwrap();
        assert_eq!(dets.len(), 1);
        let iou = polygon_iou(&dets[0].polygon, &source, 1.0).unwrap();
        assert!(iou >= 0.95, "round-trip iou {iou}");
        assert!((dets[0].score - 1.0).abs() < 1e-6);
    }

    #[test]
    fn form_boxes_blank_map_is_empty() {
        let prob = FloatMap::zeros(64, 64).unwrap();
        assert!(form_boxes(&prob, &BoxformParams::default())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn form_boxes_two_regions_sorted_by_score() {
        let a = square_poly(10.0, 10.0, 60.0);
        let b = square_poly(110.0, 10.0, 60.0);
        let mut prob = ideal_map_for(&[a.clone(), b.clone()], 100, 200);
        // Dim region a slightly so region b outranks it.
        for row in 0..100 {
            for col in 0..100 {
                let v = prob.get(row, col);
                if v > 0.0 {
                    prob.set(row, col, v * 0.9);
                }
            }
        }
        let dets = form_boxes(&prob, &BoxformParams::default()).unwrap();
        assert_eq!(dets.len(), 2);
        assert!(dets[0].score > dets[1].score);
        let iou_b = polygon_iou(&dets[0].polygon, &b, 1.0).unwrap();
        assert!(iou_b >= 0.9, "iou {iou_b}");
        let iou_a = polygon_iou(&dets[1].polygon, &a, 1.0).unwrap();
        assert!(iou_a >= 0.9, "iou {iou_a}");
    }

    #[test]
    fn form_boxes_score_filter_drops_weak_region() {
        let a = square_poly(10.0, 10.0, 60.0);
        let mut prob = ideal_map_for(std::slice::from_ref(&a), 100, 100);
        for v in prob.data_mut() {
            if *v > 0.0 {
                *v = 0.3;
            }
        }
        let dets = form_boxes(&prob, &BoxformParams::default()).unwrap();
        assert!(dets.is_empty());
        let relaxed = BoxformParams {
            score_thresh: 0.25,
            ..Default::default()
        };
        let dets = form_boxes(&prob, &relaxed).unwrap();
        assert_eq!(dets.len(), 1);
    }

    #[test]
    fn form_boxes_min_side_filter_drops_slivers() {
        let mut prob = FloatMap::zeros(32, 32).unwrap();
        // A single high-probability pixel: dilated box stays under 3 px.
        prob.set(16, 16, 1.0);
        let dets = form_boxes(&prob, &BoxformParams::default()).unwrap();
        assert!(dets.is_empty());
    }

    #[test]
    fn form_boxes_rect_mode_outputs_quads() {
        let a = square_poly(20.0, 20.0, 80.0);
        let prob = ideal_map_for(std::slice::from_ref(&a), 128, 128);
        let params = BoxformParams {
            output_mode: OutputMode::MinAreaRect,
            ..Default::default()
        };
        let dets = form_boxes(&prob, &params).unwrap();
        assert_eq!(dets.len(), 1);
        assert_eq!(dets[0].polygon.len(), 4);
    }

    #[test]
    fn form_boxes_deterministic() {
        let a = square_poly(15.0, 25.0, 70.0);
        let prob = ideal_map_for(std::slice::from_ref(&a), 128, 128);
        let d1 = form_boxes(&prob, &BoxformParams::default()).unwrap();
        let d2 = form_boxes(&prob, &BoxformParams::default()).unwrap();
        assert_eq!(d1, d2);
    }

    #[test]
    fn detection_lines_round_trip() {
        let det = Detection {
            polygon: square_poly(10.07, 20.0, 30.0),
            score: 0.98768,
        };
        let line = format_detection(&det);
        assert_eq!(line, "10.1,20.0,40.1,20.0,40.1,50.0,10.1,50.0,0.9877");
        let parsed = parse_detections(&line).unwrap();
        assert_eq!(parsed.len(), 1);
        assert_eq!(parsed[0].score, 0.9877);
        assert_eq!(parsed[0].polygon.len(), 4);
    }

    #[test]
    fn parse_detections_rejects_bad_lines() {
        assert!(matches!(
            parse_detections("1,2,3,0.5"),
            Err(Error::ParseError { line: 1, .. })
        ));
        assert!(matches!(
            parse_detections("0,0,10,0,10,10,0,10,1.5"),
            Err(Error::ParseError { line: 1, .. })
        ));
        let two = "0,0,10,0,10,10,0,10,0.5\n0,0,x,0,10,10,0,10,0.5";
        assert!(matches!(
            parse_detections(two),
            Err(Error::ParseError { line: 2, .. })
        ));
    }

    #[test]
    fn parse_detections_empty_text() {
        assert!(parse_detections("").unwrap().is_empty());
        assert!(parse_detections("\n\n").unwrap().is_empty());
    }
}
