//! Rotated NMS, score filtering and multi-stage ensembling.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{skew_iou, AABox, RBox};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub rbox: RBox,
    pub class_id: usize,
    pub score: f64,
    /// Stage that produced the detection.
    #[serde(default)]
    pub stage: usize,
}

impl Detection {
    pub fn new(rbox: RBox, class_id: usize, score: f64) -> Self {
        Self { rbox, class_id, score, stage: 0 }
    }
}

fn check_thresh(iou_thresh: f64) -> Result<()> {
    if iou_thresh > 0.0 && iou_thresh <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArg(format!("NMS IoU threshold must lie in (0, 1], got {iou_thresh}")))
    }
}

/// Uniform grid over kept boxes' circumscribing rectangles.
struct KeptIndex {
    cell: f64,
    buckets: HashMap<(usize, i64, i64), Vec<usize>>,
    /// Boxes spanning too many cells are checked against every candidate.
    oversized: Vec<usize>,
    stamp: Vec<usize>,
}

const MAX_CELLS_PER_BOX: i64 = 64;

impl KeptIndex {
    fn new(cell: f64, n: usize) -> Self {
        Self { cell, buckets: HashMap::new(), oversized: Vec::new(), stamp: vec![usize::MAX; n] }
    }

    fn range(&self, b: &AABox) -> (i64, i64, i64, i64) {
        let f = |v: f64| (v / self.cell).floor() as i64;
        (f(b.xmin), f(b.ymin), f(b.xmax), f(b.ymax))
    }

    fn insert(&mut self, group: usize, idx: usize, b: &AABox) {
        let (x0, y0, x1, y1) = self.range(b);
        if (x1 - x0 + 1) * (y1 - y0 + 1) > MAX_CELLS_PER_BOX {
            self.oversized.push(idx);
            return;
        }
        for gx in x0..=x1 {
            for gy in y0..=y1 {
                self.buckets.entry((group, gx, gy)).or_default().push(idx);
            }
        }
    }

    /// Calls `f` once for each kept index that may overlap `b`; stops early
    /// when `f` returns true.
    fn any_near(&mut self, group: usize, query: usize, b: &AABox, mut f: impl FnMut(usize) -> bool) -> bool {
        for &k in &self.oversized {
            if f(k) {
                return true;
            }
        }
        let (x0, y0, x1, y1) = self.range(b);
        if (x1 - x0 + 1) * (y1 - y0 + 1) > MAX_CELLS_PER_BOX * MAX_CELLS_PER_BOX {
            // query box covers most of the grid: scan everything kept
            let all: Vec<usize> = self
                .buckets
                .iter()
                .filter(|(key, _)| key.0 == group)
                .flat_map(|(_, v)| v.iter().copied())
                .collect();
            for k in all {
                if self.stamp[k] != query {
                    self.stamp[k] = query;
                    if f(k) {
                        return true;
                    }
                }
            }
            return false;
        }
        for gx in x0..=x1 {
            for gy in y0..=y1 {
                if let Some(v) = self.buckets.get(&(group, gx, gy)) {
                    for &k in v {
                        if self.stamp[k] != query {
                            self.stamp[k] = query;
                            if f(k) {
                                return true;
                            }
                        }
                    }
                }
            }
        }
        false
    }
}

/// Indices of the detections kept by greedy rotated NMS, in output order
/// (score descending, ties by input index).
pub fn rotated_nms_indices(dets: &[Detection], iou_thresh: f64, per_class: bool) -> Result<Vec<usize>> {
    check_thresh(iou_thresh)?;
    if let Some(d) = dets.iter().find(|d| !d.score.is_finite()) {
        return Err(Error::InvalidArg(format!("non-finite score {}", d.score)));
    }
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| dets[b].score.total_cmp(&dets[a].score));

    let hbbs: Vec<AABox> = dets.iter().map(|d| d.rbox.hbb()).collect();
    let mean_extent = if dets.is_empty() {
        1.0
    } else {
        hbbs.iter().map(|h| h.width().max(h.height())).sum::<f64>() / dets.len() as f64
    };
    let cell = if mean_extent.is_finite() && mean_extent > 0.0 { mean_extent } else { 1.0 };
    let mut index = KeptIndex::new(cell, dets.len());
    let mut kept = Vec::new();
    for &i in &order {
        let group = if per_class { dets[i].class_id } else { 0 };
        let hb = hbbs[i];
        let suppressed = index.any_near(group, i, &hb, |k| {
            (!per_class || dets[k].class_id == dets[i].class_id)
                && hbbs[k].overlaps(&hb)
                && skew_iou(&dets[k].rbox, &dets[i].rbox) >= iou_thresh
        });
        if !suppressed {
            index.insert(group, i, &hb);
            kept.push(i);
        }
    }
    Ok(kept)
}

/// Greedy NMS by descending score using exact rotated IoU. A detection is
/// dropped when its IoU with an already kept one (of the same class when
/// `per_class`) is at least `iou_thresh`.
pub fn rotated_nms(dets: &[Detection], iou_thresh: f64, per_class: bool) -> Result<Vec<Detection>> {
    Ok(rotated_nms_indices(dets, iou_thresh, per_class)?.into_iter().map(|i| dets[i]).collect())
}

/// Pools the outputs of several refinement stages and suppresses duplicates.
pub fn merge_stages(stage_dets: &[Vec<Detection>], iou_thresh: f64, per_class: bool) -> Result<Vec<Detection>> {
    if stage_dets.is_empty() {
        return Err(Error::InvalidArg("merge_stages needs at least one stage".into()));
    }
    let pooled: Vec<Detection> = stage_dets.iter().flatten().copied().collect();
    rotated_nms(&pooled, iou_thresh, per_class)
}

pub fn score_filter(dets: &[Detection], min_score: f64) -> Vec<Detection> {
    dets.iter().filter(|d| d.score >= min_score).copied().collect()
}
