//! IoU-matched detection evaluation with precision/recall/F-measure.
//!
//! Matching is greedy in descending detection-score order, one-to-one:
//! each detection takes the unmatched non-ignored ground truth of highest
//! IoU at or above the threshold. Detections whose only qualifying
//! overlap is an ignored ground truth are discarded from both numerator
//! and denominator. Scores aggregate micro-averaged across images.

use crate::boxform::Detection;
use crate::error::{Error, Result};
use crate::geometry::polygon_iou;
use crate::labelgen::Annotation;

/// Raster sampling density used for IoU during matching.
const IOU_RESOLUTION: f64 = 1.0;

/// Default IoU threshold for a detection to count as a match.
pub const DEFAULT_IOU_THRESH: f64 = 0.5;

/// One matched detection/ground-truth pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MatchPair {
    /// Index into the detection list.
    pub det: usize,
    /// Index into the ground-truth list.
    pub gt: usize,
    pub iou: f64,
}

/// Outcome of matching one image.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MatchResult {
    /// Matched pairs in descending detection-score order.
    pub pairs: Vec<MatchPair>,
    /// Detections absorbed by ignored ground truths.
    pub discarded_dets: Vec<usize>,
    /// False-positive detections.
    pub unmatched_dets: Vec<usize>,
    /// Missed non-ignored ground truths.
    pub unmatched_gts: Vec<usize>,
}

/// Aggregate metrics over an image set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalReport {
    pub precision: f64,
    pub recall: f64,
    pub fmeasure: f64,
    pub matches: usize,
    /// Detections counted after discarding ignored-region hits.
    pub num_dets: usize,
    /// Non-ignored ground truths.
    pub num_gts: usize,
}

impl std::fmt::Display for EvalReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "P={:.4} R={:.4} F={:.4}",
            self.precision, self.recall, self.fmeasure
        )
    }
}

fn check_thresh(iou_thresh: f64) -> Result<()> {
    if !(iou_thresh > 0.0 && iou_thresh <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "iou threshold must lie in (0, 1], got {iou_thresh}"
        )));
    }
    Ok(())
}

/// Match detections of one image against its ground truths.
pub fn match_detections(
    dets: &[Detection],
    gts: &[Annotation],
    iou_thresh: f64,
) -> Result<MatchResult> {
    check_thresh(iou_thresh)?;
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| dets[b].score.total_cmp(&dets[a].score).then(a.cmp(&b)));
    let mut gt_taken = vec![false; gts.len()];
    let mut result = MatchResult::default();
    for &di in &order {
        let det_poly = &dets[di].polygon;
        // Best live (non-ignored, unmatched) ground truth; ties keep the
        // lowest index because only strictly better IoU replaces.
        let mut best_live: Option<(f64, usize)> = None;
        let mut best_ignored = 0.0f64;
        for (gi, gt) in gts.iter().enumerate() {
            if gt.ignore {
                let iou = polygon_iou(det_poly, &gt.polygon, IOU_RESOLUTION)?;
                best_ignored = best_ignored.max(iou);
            } else if !gt_taken[gi] {
                let iou = polygon_iou(det_poly, &gt.polygon, IOU_RESOLUTION)?;
                if iou >= iou_thresh && best_live.map_or(true, |(b, _)| iou > b) {
                    best_live = Some((iou, gi));
                }
            }
        }
        if let Some((iou, gi)) = best_live {
            gt_taken[gi] = true;
            result.pairs.push(MatchPair { det: di, gt: gi, iou });
        } else if best_ignored >= iou_thresh {
            result.discarded_dets.push(di);
        } else {
            result.unmatched_dets.push(di);
        }
    }
    result.unmatched_gts = (0..gts.len())
        .filter(|&gi| !gts[gi].ignore && !gt_taken[gi])
        .collect();
    Ok(result)
}

/// Micro-averaged evaluation over parallel per-image lists.
pub fn evaluate(
    dets_per_image: &[Vec<Detection>],
    gts_per_image: &[Vec<Annotation>],
    iou_thresh: f64,
) -> Result<EvalReport> {
    check_thresh(iou_thresh)?;
    if dets_per_image.len() != gts_per_image.len() {
        return Err(Error::InputError(format!(
            "{} detection lists vs {} ground-truth lists",
            dets_per_image.len(),
            gts_per_image.len()
        )));
    }
    let mut matches = 0usize;
    let mut num_dets = 0usize;
    let mut num_gts = 0usize;
    for (dets, gts) in dets_per_image.iter().zip(gts_per_image) {
        let m = match_detections(dets, gts, iou_thresh)?;
        matches += m.pairs.len();
        num_dets += dets.len() - m.discarded_dets.len();
        num_gts += gts.iter().filter(|g| !g.ignore).count();
    }
    let precision = if num_dets > 0 {
        matches as f64 / num_dets as f64
    } else {
        0.0
    };
    let recall = if num_gts > 0 {
        matches as f64 / num_gts as f64
    } else {
        0.0
    };
    let fmeasure = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(EvalReport {
        precision,
        recall,
        fmeasure,
        matches,
        num_dets,
        num_gts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Polygon;

    fn square(x0: f64, y0: f64, side: f64) -> Polygon {
        Polygon::from_coords(&[
            (x0, y0),
            (x0 + side, y0),
            (x0 + side, y0 + side),
            (x0, y0 + side),
        ])
        .unwrap()
    }

    fn det(poly: Polygon, score: f64) -> Detection {
        Detection {
            polygon: poly,
            score,
        }
    }

    fn gt(poly: Polygon) -> Annotation {
        Annotation::new(poly, false)
    }

    fn ignored(poly: Polygon) -> Annotation {
        Annotation::new(poly, true)
    }

    #[test]
    fn perfect_detections_score_one() {
        let gts = vec![gt(square(0.0, 0.0, 40.0)), gt(square(100.0, 0.0, 40.0))];
        let dets = vec![
            det(square(0.0, 0.0, 40.0), 0.9),
            det(square(100.0, 0.0, 40.0), 0.8),
        ];
        let report = evaluate(&[dets], &[gts], 0.5).unwrap();
        assert_eq!(
            (report.precision, report.recall, report.fmeasure),
            (1.0, 1.0, 1.0)
        );
        assert_eq!(report.matches, 2);
    }

    #[test]
    fn no_detections_gives_zeros() {
        let gts = vec![gt(square(0.0, 0.0, 40.0))];
        let report = evaluate(&[vec![]], &[gts], 0.5).unwrap();
        assert_eq!(
            (report.precision, report.recall, report.fmeasure),
            (0.0, 0.0, 0.0)
        );
        assert_eq!(report.num_gts, 1);
    }

    #[test]
    fn duplicate_detection_is_false_positive() {
        let gts = vec![gt(square(0.0, 0.0, 40.0))];
        let dets = vec![
            det(square(0.0, 0.0, 40.0), 0.9),
            det(square(1.0, 1.0, 40.0), 0.8),
        ];
        let m = match_detections(&dets, &gts, 0.5).unwrap();
        assert_eq!(m.pairs.len(), 1);
        assert_eq!(m.pairs[0].det, 0);
        assert_eq!(m.unmatched_dets, vec![1]);
        let report = evaluate(&[dets], &[gts], 0.5).unwrap();
        assert_eq!((report.precision, report.recall), (0.5, 1.0));
        assert!((report.fmeasure - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn higher_score_wins_the_ground_truth() {
        let gts = vec![gt(square(0.0, 0.0, 40.0))];
        let dets = vec![
            det(square(2.0, 2.0, 40.0), 0.6),
            det(square(0.0, 0.0, 40.0), 0.9),
        ];
        let m = match_detections(&dets, &gts, 0.5).unwrap();
        assert_eq!(m.pairs.len(), 1);
        assert_eq!(m.pairs[0].det, 1);
        assert_eq!(m.unmatched_dets, vec![0]);
    }

    #[test]
    fn detection_picks_highest_iou_gt() {
        // Both ground truths overlap the detection above threshold; the
        // tighter one must win.
        let gts = vec![gt(square(8.0, 0.0, 40.0)), gt(square(0.0, 0.0, 40.0))];
        let dets = vec![det(square(1.0, 0.0, 40.0), 0.9)];
        let m = match_detections(&dets, &gts, 0.3).unwrap();
        assert_eq!(m.pairs.len(), 1);
        assert_eq!(m.pairs[0].gt, 1);
        assert_eq!(m.unmatched_gts, vec![0]);
    }

    #[test]
    fn ignored_region_absorbs_detection() {
        let gts = vec![ignored(square(0.0, 0.0, 40.0)), gt(square(100.0, 0.0, 40.0))];
        let dets = vec![
            det(square(0.0, 0.0, 40.0), 0.9),
            det(square(100.0, 0.0, 40.0), 0.8),
        ];
        let m = match_detections(&dets, &gts, 0.5).unwrap();
        assert_eq!(m.pairs.len(), 1);
        assert_eq!(m.discarded_dets, vec![0]);
        let report = evaluate(&[dets], &[gts], 0.5).unwrap();
        // The discarded detection leaves the denominator: 1 valid det, 1 match.
        assert_eq!((report.precision, report.recall), (1.0, 1.0));
        assert_eq!(report.num_dets, 1);
        assert_eq!(report.num_gts, 1);
    }

    #[test]
    fn live_match_preferred_over_ignored_overlap() {
        // A detection overlapping both a live and an ignored ground truth
        // matches the live one rather than being discarded.
        let gts = vec![ignored(square(0.0, 0.0, 40.0)), gt(square(20.0, 0.0, 40.0))];
        let dets = vec![det(square(18.0, 0.0, 40.0), 0.9)];
        let m = match_detections(&dets, &gts, 0.5).unwrap();
        assert_eq!(m.pairs.len(), 1);
        assert_eq!(m.pairs[0].gt, 1);
        assert!(m.discarded_dets.is_empty());
    }

    #[test]
    fn micro_average_across_images() {
        let gts_a = vec![gt(square(0.0, 0.0, 40.0))];
        let gts_b = vec![gt(square(0.0, 0.0, 40.0))];
        let dets_a = vec![det(square(0.0, 0.0, 40.0), 0.9)];
        let dets_b = vec![];
        let report = evaluate(&[dets_a, dets_b], &[gts_a, gts_b], 0.5).unwrap();
        assert_eq!(report.precision, 1.0);
        assert_eq!(report.recall, 0.5);
        assert!((report.fmeasure - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn mismatched_image_counts_rejected() {
        assert!(matches!(
            evaluate(&[vec![]], &[], 0.5),
            Err(Error::InputError(_))
        ));
    }

    #[test]
    fn bad_threshold_rejected() {
        assert!(match_detections(&[], &[], 0.0).is_err());
        assert!(match_detections(&[], &[], 1.2).is_err());
        assert!(match_detections(&[], &[], 1.0).is_ok());
    }

    #[test]
    fn report_line_format() {
        let report = EvalReport {
            precision: 0.5,
            recall: 1.0,
            fmeasure: 2.0 / 3.0,
            matches: 1,
            num_dets: 2,
            num_gts: 1,
        };
        assert_eq!(report.to_string(), "P=0.5000 R=1.0000 F=0.6667");
    }
}
