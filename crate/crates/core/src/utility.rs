//! Utility dimension: IoU, greedy detection-to-ground-truth matching,
//! precision/recall/F1 (per class and macro-averaged) and precision–recall
//! curves with their all-point area.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::model::{BBox, DetectionSet, GroundTruthSet};

/// Intersection-over-union of two boxes, in `[0, 1]`.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let ix = (a.right().min(b.right()) - a.x.max(b.x)).max(0.0);
    let iy = (a.bottom().min(b.bottom()) - a.y.max(b.y)).max(0.0);
    let inter = ix * iy;
    // Areas from the same edge differences the intersection uses, so a box
    // against itself cancels to exactly 1.0.
    let area = |r: &BBox| (r.right() - r.x) * (r.bottom() - r.y);
    let union = area(a) + area(b) - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

/// Match counts of one class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ClassCounts {
    pub true_positives: u64,
    pub false_positives: u64,
    pub false_negatives: u64,
}

/// One matched detection/ground-truth pair; indices refer to the canonical
/// `entries()` order of the input sets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchedPair {
    pub detection: usize,
    pub ground_truth: usize,
    pub iou: f64,
}

/// Outcome of greedy matching: per-class counts plus the matched pairs in
/// match order (descending detection score).
#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    pub per_class: BTreeMap<u32, ClassCounts>,
    pub matched_pairs: Vec<MatchedPair>,
}

/// Greedy score-ordered matching: detections are visited by descending
/// score (ties: image id, class id, box), each claiming the unmatched
/// ground truth of its image and class with the highest IoU ≥ `iou_thresh`
/// (IoU ties go to the canonically first ground truth). Unmatched
/// detections count as false positives, unmatched ground truths as false
/// negatives. Every class appearing on either side gets an entry.
pub fn match_detections(dets: &DetectionSet, gts: &GroundTruthSet, iou_thresh: f64) -> MatchResult {
    let mut per_class: BTreeMap<u32, ClassCounts> = BTreeMap::new();
    for class_id in dets.class_ids().into_iter().chain(gts.class_ids()) {
        per_class.entry(class_id).or_default();
    }

    // Ground truths grouped by (image, class); group members keep canonical
    // (box-lexicographic) order, which settles IoU ties deterministically.
    let mut gt_groups: BTreeMap<(&str, u32), Vec<usize>> = BTreeMap::new();
    for (gi, gt) in gts.entries().iter().enumerate() {
        gt_groups
            .entry((gt.image_id.as_str(), gt.class_id))
            .or_default()
            .push(gi);
    }

    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| {
        let (da, db) = (&dets.entries()[a], &dets.entries()[b]);
        db.score
            .total_cmp(&da.score)
            .then(da.image_id.cmp(&db.image_id))
            .then(da.class_id.cmp(&db.class_id))
            .then(da.bbox.lex_cmp(&db.bbox))
    });

    let mut gt_taken = alloc::vec![false; gts.len()];
    let mut matched_pairs = Vec::new();
    for det_index in order {
        let det = &dets.entries()[det_index];
        let mut best: Option<(f64, usize)> = None;
        if let Some(group) = gt_groups.get(&(det.image_id.as_str(), det.class_id)) {
            for &gi in group {
                if gt_taken[gi] {
                    continue;
                }
                let overlap = iou(&det.bbox, &gts.entries()[gi].bbox);
                if overlap >= iou_thresh && best.is_none_or(|(b, _)| overlap > b) {
                    best = Some((overlap, gi));
                }
            }
        }
        let counts = per_class.entry(det.class_id).or_default();
        match best {
            Some((overlap, gi)) => {
                gt_taken[gi] = true;
                counts.true_positives += 1;
                matched_pairs.push(MatchedPair {
                    detection: det_index,
                    ground_truth: gi,
                    iou: overlap,
                });
            }
            None => counts.false_positives += 1,
        }
    }

    for (gi, gt) in gts.entries().iter().enumerate() {
        if !gt_taken[gi] {
            per_class.entry(gt.class_id).or_default().false_negatives += 1;
        }
    }

    MatchResult {
        per_class,
        matched_pairs,
    }
}

/// Precision, recall and F1 of one class (or a macro average).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PrfScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Per-class scores plus their macro average.
#[derive(Debug, Clone, PartialEq)]
pub struct PrfResult {
    pub per_class: BTreeMap<u32, PrfScores>,
    pub macro_avg: PrfScores,
}

pub(crate) fn prf_from_counts(c: &ClassCounts) -> PrfScores {
    // Empty denominators resolve to 1.0 only when the other error count is
    // also zero ("no objects, no detections" is vacuously perfect).
    let precision = if c.true_positives + c.false_positives == 0 {
        if c.false_negatives == 0 {
            1.0
        } else {
            0.0
        }
    } else {
        c.true_positives as f64 / (c.true_positives + c.false_positives) as f64
    };
    let recall = if c.true_positives + c.false_negatives == 0 {
        if c.false_positives == 0 {
            1.0
        } else {
            0.0
        }
    } else {
        c.true_positives as f64 / (c.true_positives + c.false_negatives) as f64
    };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    PrfScores {
        precision,
        recall,
        f1,
    }
}

/// Precision/recall/F1 per class and macro-averaged over the classes present
/// in the match result. With no classes at all the macro average is the
/// vacuous 1.0/1.0/1.0.
pub fn prf1(matches: &MatchResult) -> PrfResult {
    let per_class: BTreeMap<u32, PrfScores> = matches
        .per_class
        .iter()
        .map(|(&class_id, counts)| (class_id, prf_from_counts(counts)))
        .collect();
    let macro_avg = if per_class.is_empty() {
        PrfScores {
            precision: 1.0,
            recall: 1.0,
            f1: 1.0,
        }
    } else {
        let n = per_class.len() as f64;
        PrfScores {
            precision: per_class.values().map(|s| s.precision).sum::<f64>() / n,
            recall: per_class.values().map(|s| s.recall).sum::<f64>() / n,
            f1: per_class.values().map(|s| s.f1).sum::<f64>() / n,
        }
    };
    PrfResult {
        per_class,
        macro_avg,
    }
}

/// Precision–recall curve of one class: one `(recall, precision)` point per
/// distinct score as the threshold sweeps from high to low, plus the
/// all-point area under the per-rank curve.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PRCurve {
    pub points: Vec<(f64, f64)>,
    pub ap: f64,
}

/// Builds the PR curve of `class_id`. Detections are ranked exactly as in
/// matching; the greedy prefix property makes "match the retained
/// detections at each threshold" equal to walking ranks of one full
/// matching pass. Returns `None` when the class has no ground truth.
pub fn pr_curve(
    dets: &DetectionSet,
    gts: &GroundTruthSet,
    class_id: u32,
    iou_thresh: f64,
) -> Option<PRCurve> {
    let gt_total = gts
        .entries()
        .iter()
        .filter(|g| g.class_id == class_id)
        .count();
    if gt_total == 0 {
        return None;
    }

    let class_dets = dets.filter_class(class_id);
    let result = match_detections(&class_dets, gts, iou_thresh);
    let mut is_tp = alloc::vec![false; class_dets.len()];
    for pair in &result.matched_pairs {
        is_tp[pair.detection] = true;
    }

    let mut order: Vec<usize> = (0..class_dets.len()).collect();
    order.sort_by(|&a, &b| {
        let (da, db) = (&class_dets.entries()[a], &class_dets.entries()[b]);
        db.score
            .total_cmp(&da.score)
            .then(da.image_id.cmp(&db.image_id))
            .then(da.bbox.lex_cmp(&db.bbox))
    });

    let mut points = Vec::new();
    let mut precision_sum = 0.0;
    let mut tp = 0usize;
    for (rank0, &det_index) in order.iter().enumerate() {
        let rank = rank0 + 1;
        if is_tp[det_index] {
            tp += 1;
            // ΔR = 1/gt_total at each true positive; precision at this rank.
            // Summing precisions and dividing once keeps a perfect run at
            // exactly 1.0 instead of overshooting by accumulated rounding.
            precision_sum += tp as f64 / rank as f64;
        }
        let score = class_dets.entries()[det_index].score;
        let next_score = order.get(rank0 + 1).map(|&i| class_dets.entries()[i].score);
        if next_score != Some(score) {
            points.push((tp as f64 / gt_total as f64, tp as f64 / rank as f64));
        }
    }
    Some(PRCurve {
        points,
        ap: precision_sum / gt_total as f64,
    })
}
