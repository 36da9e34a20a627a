//! Detection rate against the number of proposals, precision-recall with
//! average precision, and training targets for a box-refinement stage.
//!
//! Matching for detection rate and precision-recall accepts an overlap of
//! exactly the threshold (`IoU >= 0.5`). Target preparation needs a strictly
//! larger overlap (`IoU > 0.5`).

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{iou, Window};
use crate::ranking::RankedList;

pub const DEFAULT_IOU: f64 = 0.5;

/// Target recalls for which the number of proposals needed is reported.
pub const TARGET_RECALLS: [f64; 4] = [0.75, 0.80, 0.85, 0.90];

/// Candidate (proposal rank, gt index, iou) pairs at or above the threshold,
/// in greedy order: IoU descending, then rank, then gt index.
fn candidate_pairs(
    proposals: &[&Window],
    gt: &[Window],
    iou_thresh: f64,
) -> Vec<(usize, usize, f64)> {
    let mut pairs = Vec::new();
    for (r, p) in proposals.iter().enumerate() {
        for (g, t) in gt.iter().enumerate() {
            let v = iou(p, t);
            if v >= iou_thresh && v > 0.0 {
                pairs.push((r, g, v));
            }
        }
    }
    pairs.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
    pairs
}

/// One-to-one greedy matching restricted to proposals ranked below `n`.
fn greedy_matched(pairs: &[(usize, usize, f64)], n: usize, n_props: usize, n_gt: usize) -> usize {
    let mut prop_used = vec![false; n_props];
    let mut gt_used = vec![false; n_gt];
    let mut matched = 0;
    for &(r, g, _) in pairs {
        if r < n && !prop_used[r] && !gt_used[g] {
            prop_used[r] = true;
            gt_used[g] = true;
            matched += 1;
        }
    }
    matched
}

/// Fraction of ground-truth boxes matched by the top `n` proposals.
pub fn detection_rate(
    ranked: &RankedList,
    gt: &[Window],
    n: usize,
    iou_thresh: f64,
) -> Result<f64> {
    if gt.is_empty() {
        return Err(Error::EmptyGroundTruth);
    }
    let top: Vec<&Window> = ranked.windows().take(n).collect();
    let pairs = candidate_pairs(&top, gt, iou_thresh);
    Ok(greedy_matched(&pairs, top.len(), top.len(), gt.len()) as f64 / gt.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub recall: f64,
    pub precision: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrCurve {
    pub points: Vec<PrPoint>,
    pub ap: f64,
    pub true_positives: usize,
}

/// Precision-recall over scored detections with single-use ground truth.
/// Each detection, in descending score order, is matched to the ground
/// truth it overlaps most; it is a true positive when that overlap reaches
/// the threshold and the box is still unclaimed. AP is the area under the
/// monotone precision envelope, integrated at every recall step.
pub fn pr_curve(detections: &[(Window, f64)], gt: &[Window], iou_thresh: f64) -> Result<PrCurve> {
    if gt.is_empty() {
        return Err(Error::EmptyGroundTruth);
    }
    let mut order: Vec<usize> = (0..detections.len()).collect();
    order.sort_by(|&a, &b| detections[b].1.total_cmp(&detections[a].1));

    let mut claimed = vec![false; gt.len()];
    let mut tp_flags = Vec::with_capacity(order.len());
    for &i in &order {
        let d = &detections[i].0;
        let mut best: Option<(usize, f64)> = None;
        for (g, t) in gt.iter().enumerate() {
            let v = iou(d, t);
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((g, v));
            }
        }
        let tp = match best {
            Some((g, v)) if v >= iou_thresh && v > 0.0 && !claimed[g] => {
                claimed[g] = true;
                true
            }
            _ => false,
        };
        tp_flags.push(tp);
    }

    let n_gt = gt.len() as f64;
    let mut points = Vec::with_capacity(tp_flags.len());
    let mut tps = Vec::with_capacity(tp_flags.len());
    let mut tp = 0usize;
    for (k, &is_tp) in tp_flags.iter().enumerate() {
        tp += is_tp as usize;
        tps.push(tp);
        points.push(PrPoint {
            recall: tp as f64 / n_gt,
            precision: tp as f64 / (k + 1) as f64,
        });
    }

    // Envelope: best precision at this or any later point. Recall steps are
    // integrated in true-positive counts so a perfect detector sums to
    // exactly n_gt.
    let mut envelope = vec![0.0f64; points.len()];
    let mut running = 0.0f64;
    for k in (0..points.len()).rev() {
        running = running.max(points[k].precision);
        envelope[k] = running;
    }
    let mut area = 0.0f64;
    let mut prev_tp = 0usize;
    for k in 0..points.len() {
        if tps[k] > prev_tp {
            area += (tps[k] - prev_tp) as f64 * envelope[k];
            prev_tp = tps[k];
        }
    }
    Ok(PrCurve {
        points,
        ap: area / n_gt,
        true_positives: tp,
    })
}

/// Classification label and regression target for one proposal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefinementTarget {
    pub id: usize,
    pub face: bool,
    /// Matched box corners `(x0, y0, x1, y1)` in the proposal frame, or
    /// `[-1, -1, -1, -1]` for non-faces.
    pub target: [f64; 4],
}

pub const NON_FACE_TARGET: [f64; 4] = [-1.0, -1.0, -1.0, -1.0];

impl RefinementTarget {
    /// Maps the target back to image coordinates.
    pub fn denormalize(&self, proposal: &Window) -> Option<Window> {
        if !self.face {
            return None;
        }
        let (w, h) = (proposal.width(), proposal.height());
        let t = self.target;
        Some(Window {
            id: self.id,
            x0: proposal.x0 + t[0] * w,
            y0: proposal.y0 + t[1] * h,
            x1: proposal.x0 + t[2] * w,
            y1: proposal.y0 + t[3] * h,
            score: None,
        })
    }

    /// [`Self::denormalize`] snapped to integer pixel coordinates; exact for
    /// ground truth given on the pixel grid.
    pub fn denormalize_on_grid(&self, proposal: &Window) -> Option<Window> {
        self.denormalize(proposal).map(|w| Window {
            x0: w.x0.round(),
            y0: w.y0.round(),
            x1: w.x1.round(),
            y1: w.y1.round(),
            ..w
        })
    }
}

/// Labels each proposal as a face when its best ground-truth overlap is
/// strictly above 0.5, with that box as its regression target.
pub fn prepare_refinement_targets(proposals: &[Window], gt: &[Window]) -> Vec<RefinementTarget> {
    proposals
        .iter()
        .map(|p| {
            let best = gt.iter().map(|g| (g, iou(p, g))).fold(
                None::<(&Window, f64)>,
                |acc, cur| match acc {
                    Some((_, b)) if b >= cur.1 => acc,
                    _ => Some(cur),
                },
            );
            match best {
                Some((g, v)) if v > 0.5 => {
                    let (w, h) = (p.width(), p.height());
                    RefinementTarget {
                        id: p.id,
                        face: true,
                        target: [
                            (g.x0 - p.x0) / w,
                            (g.y0 - p.y0) / h,
                            (g.x1 - p.x0) / w,
                            (g.y1 - p.y0) / h,
                        ],
                    }
                }
                _ => RefinementTarget {
                    id: p.id,
                    face: false,
                    target: NON_FACE_TARGET,
                },
            }
        })
        .collect()
}

pub fn format_targets(targets: &[RefinementTarget]) -> String {
    let mut s = String::from("id,label,t0,t1,t2,t3\n");
    for t in targets {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            t.id, t.face as u8, t.target[0], t.target[1], t.target[2], t.target[3]
        );
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrPoint {
    pub n: usize,
    pub dr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecallNeed {
    pub recall: f64,
    /// Smallest number of proposals reaching the recall, if any does.
    pub n: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecallTable {
    pub rows: Vec<DrPoint>,
    pub needed: Vec<RecallNeed>,
}

/// Detection rate at each requested `n`, plus the smallest `n` reaching each
/// of [`TARGET_RECALLS`].
pub fn recall_vs_proposals(
    ranked: &RankedList,
    gt: &[Window],
    n_values: &[usize],
    iou_thresh: f64,
) -> Result<RecallTable> {
    let curve = dr_curve(ranked, gt, iou_thresh)?;
    let at = |n: usize| -> f64 {
        if n == 0 || curve.is_empty() {
            0.0
        } else {
            curve[n.min(curve.len()) - 1]
        }
    };
    let rows = n_values.iter().map(|&n| DrPoint { n, dr: at(n) }).collect();
    let needed = TARGET_RECALLS
        .iter()
        .map(|&recall| RecallNeed {
            recall,
            n: curve
                .iter()
                .position(|&dr| dr >= recall - 1e-12)
                .map(|i| i + 1),
        })
        .collect();
    Ok(RecallTable { rows, needed })
}

/// Detection rate for every prefix length `1..=ranked.len()`.
pub fn dr_curve(ranked: &RankedList, gt: &[Window], iou_thresh: f64) -> Result<Vec<f64>> {
    if gt.is_empty() {
        return Err(Error::EmptyGroundTruth);
    }
    let all: Vec<&Window> = ranked.windows().collect();
    let pairs = candidate_pairs(&all, gt, iou_thresh);
    Ok((1..=all.len())
        .map(|n| greedy_matched(&pairs, n, all.len(), gt.len()) as f64 / gt.len() as f64)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalCounts {
    pub ground_truth: usize,
    pub proposals: usize,
    pub matched: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub iou_threshold: f64,
    pub counts: EvalCounts,
    pub detection_rate: Vec<DrPoint>,
    pub dr_monotone: bool,
    pub needed_for_recall: Vec<RecallNeed>,
    pub ap: f64,
    pub pr_curve: Vec<PrPoint>,
}

impl EvalReport {
    pub fn dr_csv(&self) -> String {
        let mut s = String::from("n,dr\n");
        for p in &self.detection_rate {
            let _ = writeln!(s, "{},{}", p.n, p.dr);
        }
        s
    }

    pub fn pr_csv(&self) -> String {
        let mut s = String::from("recall,precision\n");
        for p in &self.pr_curve {
            let _ = writeln!(s, "{},{}", p.recall, p.precision);
        }
        s
    }
}

/// Full report for one ranked list: detection rates at `n_values`, the
/// proposals needed per target recall, and precision-recall over the
/// combined scores.
pub fn evaluate(
    ranked: &RankedList,
    gt: &[Window],
    n_values: &[usize],
    iou_thresh: f64,
) -> Result<EvalReport> {
    let table = recall_vs_proposals(ranked, gt, n_values, iou_thresh)?;
    let curve = dr_curve(ranked, gt, iou_thresh)?;
    let dets: Vec<(Window, f64)> = ranked
        .entries
        .iter()
        .map(|e| (e.window, e.score.combined))
        .collect();
    let pr = pr_curve(&dets, gt, iou_thresh)?;
    let mut sorted = table.rows.clone();
    sorted.sort_by_key(|p| p.n);
    let dr_monotone =
        sorted.windows(2).all(|w| w[0].dr <= w[1].dr) && curve.windows(2).all(|w| w[0] <= w[1]);
    Ok(EvalReport {
        iou_threshold: iou_thresh,
        counts: EvalCounts {
            ground_truth: gt.len(),
            proposals: ranked.len(),
            matched: pr.true_positives,
        },
        detection_rate: table.rows,
        dr_monotone,
        needed_for_recall: table.needed,
        ap: pr.ap,
        pr_curve: pr.points,
    })
}
