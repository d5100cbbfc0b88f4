//! Training-label generation from polygon annotations.
//!
//! Each text region `G` produces:
//! * a probability label: the union of the regions shrunk inward by
//!   `D = A (1 - r^2) / L`;
//! * a threshold label: inside `G` dilated outward by the same `D`, the
//!   clamped ramp `1 - dist/D` rescaled into `[t_min, t_max]`, combined
//!   across regions by per-pixel max, zero elsewhere;
//! * a band mask marking where the threshold ramp applies;
//! * a train mask that zeroes out ignore regions (unshrunk footprint).
//!
//! Annotation files are one region per line, UTF-8:
//! `x1,y1,x2,y2,...,xn,yn,transcription`, with the transcription `###`
//! marking a region as ignored.

use crate::error::{Error, Result};
use crate::geometry::{offset_polygon, shrink_offset, Point, Polygon};
use crate::maps::{distance_band_masked, rasterize_into, rasterize_polygons, BinaryMap, FloatMap};

/// One annotated region.
#[derive(Clone, Debug, PartialEq)]
pub struct Annotation {
    pub polygon: Polygon,
    /// Ignored regions are excluded from labels and masked out of training.
    pub ignore: bool,
}

impl Annotation {
    pub fn new(polygon: Polygon, ignore: bool) -> Self {
        Annotation { polygon, ignore }
    }
}

/// Label-generation knobs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LabelGenConfig {
    /// Shrink ratio `r` of the offset formula.
    pub shrink_ratio: f64,
    /// Threshold-label value at the outer band edge.
    pub t_min: f64,
    /// Threshold-label value on the region boundary.
    pub t_max: f64,
}

impl Default for LabelGenConfig {
    fn default() -> Self {
        LabelGenConfig {
            shrink_ratio: 0.4,
            t_min: 0.3,
            t_max: 0.7,
        }
    }
}

impl LabelGenConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.shrink_ratio > 0.0 && self.shrink_ratio < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "shrink ratio must lie in (0, 1), got {}",
                self.shrink_ratio
            )));
        }
        if !(self.t_min >= 0.0 && self.t_min < self.t_max && self.t_max <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "threshold range must satisfy 0 <= t_min < t_max <= 1, got [{}, {}]",
                self.t_min, self.t_max
            )));
        }
        Ok(())
    }
}

/// The four supervision maps for one image.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelSet {
    pub prob_label: BinaryMap,
    pub thresh_label: FloatMap,
    pub band_mask: BinaryMap,
    pub train_mask: BinaryMap,
}

/// Union of all non-ignored regions shrunk by their offset `D`.
/// Regions whose shrink vanishes contribute nothing.
pub fn gen_prob_label(
    annotations: &[Annotation],
    height: usize,
    width: usize,
    shrink_ratio: f64,
) -> Result<BinaryMap> {
    let mut out = BinaryMap::zeros(height, width)?;
    for ann in annotations.iter().filter(|a| !a.ignore) {
        let d = shrink_offset(&ann.polygon, shrink_ratio)?;
        for piece in offset_polygon(&ann.polygon, -d) {
            rasterize_into(&piece, &mut out);
        }
    }
    Ok(out)
}

/// Threshold label and its band mask.
///
/// Per non-ignored region the distance ramp over the dilated footprint is
/// rescaled to `[t_min, t_max]`; overlapping bands combine by per-pixel
/// max. The second map marks every pixel any band covered.
pub fn gen_thresh_label(
    annotations: &[Annotation],
    height: usize,
    width: usize,
    shrink_ratio: f64,
    t_min: f64,
    t_max: f64,
) -> Result<(FloatMap, BinaryMap)> {
    let cfg = LabelGenConfig {
        shrink_ratio,
        t_min,
        t_max,
    };
    cfg.validate()?;
    let mut label = FloatMap::zeros(height, width)?;
    let mut mask = BinaryMap::zeros(height, width)?;
    let span = t_max - t_min;
    for ann in annotations.iter().filter(|a| !a.ignore) {
        let d = shrink_offset(&ann.polygon, shrink_ratio)?;
        let (band, footprint) = distance_band_masked(&ann.polygon, d, height, width)?;
        for i in 0..height * width {
            if footprint.data()[i] {
                let v = (t_min + band.data()[i] as f64 * span) as f32;
                if v > label.data()[i] {
                    label.data_mut()[i] = v;
                }
                if !mask.data()[i] {
                    mask.set(i / width, i % width, true);
                }
            }
        }
    }
    Ok((label, mask))
}

/// All ones except the unshrunk footprint of ignored regions.
pub fn gen_train_mask(
    annotations: &[Annotation],
    height: usize,
    width: usize,
) -> Result<BinaryMap> {
    let ignored: Vec<Polygon> = annotations
        .iter()
        .filter(|a| a.ignore)
        .map(|a| a.polygon.clone())
        .collect();
    let blocked = rasterize_polygons(&ignored, height, width)?;
    let mut out = BinaryMap::ones(height, width)?;
    for (i, &b) in blocked.data().iter().enumerate() {
        if b {
            out.set(i / width, i % width, false);
        }
    }
    Ok(out)
}

/// All four supervision maps in one pass.
pub fn generate_labels(
    annotations: &[Annotation],
    height: usize,
    width: usize,
    cfg: &LabelGenConfig,
) -> Result<LabelSet> {
    cfg.validate()?;
    let prob_label = gen_prob_label(annotations, height, width, cfg.shrink_ratio)?;
    let (thresh_label, band_mask) =
        gen_thresh_label(annotations, height, width, cfg.shrink_ratio, cfg.t_min, cfg.t_max)?;
    let train_mask = gen_train_mask(annotations, height, width)?;
    Ok(LabelSet {
        prob_label,
        thresh_label,
        band_mask,
        train_mask,
    })
}

/// Parse result: annotations plus per-line warnings for regions that were
/// skipped (degenerate or self-intersecting geometry).
#[derive(Clone, Debug)]
pub struct ParsedAnnotations {
    pub annotations: Vec<Annotation>,
    pub warnings: Vec<String>,
}

/// Parse an annotation file.
///
/// Each non-blank line holds an even run of at least six numeric fields
/// followed by one transcription field (the last comma-separated field).
/// Syntax errors fail with the 1-based line number; geometrically invalid
/// regions are skipped with a warning instead.
pub fn parse_annotations(text: &str) -> Result<ParsedAnnotations> {
    let mut annotations = Vec::new();
    let mut warnings = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = if idx == 0 {
            raw_line.trim_start_matches('\u{feff}')
        } else {
            raw_line
        };
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 7 {
            return Err(Error::ParseError {
                line: line_no,
                msg: format!(
                    "expected at least 6 coordinates and a transcription, got {} fields",
                    fields.len()
                ),
            });
        }
        let transcription = fields[fields.len() - 1];
        let coord_fields = &fields[..fields.len() - 1];
        if coord_fields.len() % 2 != 0 {
            return Err(Error::ParseError {
                line: line_no,
                msg: format!("odd coordinate count {}", coord_fields.len()),
            });
        }
        let mut coords = Vec::with_capacity(coord_fields.len());
        for f in coord_fields {
            let v: f64 = f.trim().parse().map_err(|_| Error::ParseError {
                line: line_no,
                msg: format!("non-numeric coordinate {f:?}"),
            })?;
            coords.push(v);
        }
        let points: Vec<Point> = coords
            .chunks_exact(2)
            .map(|c| Point::new(c[0], c[1]))
            .collect();
        let polygon = match Polygon::new(points) {
            Ok(p) => p,
            Err(e) => {
                warnings.push(format!("line {line_no}: region skipped: {e}"));
                continue;
            }
        };
        if !polygon.is_simple() {
            warnings.push(format!("line {line_no}: region skipped: self-intersecting"));
            continue;
        }
        annotations.push(Annotation::new(polygon, transcription == "###"));
    }
    Ok(ParsedAnnotations {
        annotations,
        warnings,
    })
}

/// [`parse_annotations`] over a file on disk.
pub fn parse_annotation_file<P: AsRef<std::path::Path>>(path: P) -> Result<ParsedAnnotations> {
    let text = std::fs::read_to_string(path.as_ref()).map_err(|e| {
        Error::InputError(format!("cannot read {}: {e}", path.as_ref().display()))
    })?;
    parse_annotations(&text)
}
