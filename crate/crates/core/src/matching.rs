//! Stage-dependent anchor/ground-truth assignment.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coding::{encode, Delta5};
use crate::error::{Error, Result};
use crate::geometry::{aabox_iou, skew_iou, AABox, RBox};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageThresholds {
    pub fg: f64,
    pub bg: f64,
}

impl StageThresholds {
    pub fn new(fg: f64, bg: f64) -> Result<Self> {
        let t = Self { fg, bg };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if (0.0..self.fg).contains(&self.bg) && self.fg <= 1.0 {
            Ok(())
        } else {
            Err(Error::InvalidArg(format!(
                "thresholds need 0 <= bg < fg <= 1, got fg={} bg={}",
                self.fg, self.bg
            )))
        }
    }
}

/// Thresholds for the first stage and each refinement stage after it:
/// `(0.5, 0.4)`, then `(0.6, 0.5)`, then `(0.7, 0.6)` for every later stage.
pub fn stage_schedule(num_stages: usize) -> Result<Vec<StageThresholds>> {
    if num_stages < 1 {
        return Err(Error::InvalidArg("at least one stage is required".into()));
    }
    Ok((0..num_stages)
        .map(|i| match i {
            0 => StageThresholds { fg: 0.5, bg: 0.4 },
            1 => StageThresholds { fg: 0.6, bg: 0.5 },
            _ => StageThresholds { fg: 0.7, bg: 0.6 },
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IouMetric {
    /// Axis-aligned IoU of the two circumscribing rectangles.
    Hbb,
    /// Exact rotated IoU.
    Skew,
}

impl IouMetric {
    /// Horizontal circumscribing-rectangle matching for the first stage,
    /// exact rotated IoU for refinement stages.
    pub fn for_stage(stage: usize) -> Self {
        if stage == 0 {
            IouMetric::Hbb
        } else {
            IouMetric::Skew
        }
    }

    pub fn iou(&self, a: &RBox, b: &RBox) -> f64 {
        match self {
            IouMetric::Hbb => aabox_iou(&a.hbb(), &b.hbb()),
            IouMetric::Skew => skew_iou(a, b),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GtBox {
    pub rbox: RBox,
    pub class_id: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Label {
    Foreground(usize),
    Background,
    Ignore,
}

impl Label {
    pub fn is_foreground(&self) -> bool {
        matches!(self, Label::Foreground(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssignResult {
    pub labels: Vec<Label>,
    /// Regression target for each foreground anchor, `None` elsewhere.
    pub targets: Vec<Option<Delta5>>,
    pub matched_gt: Vec<Option<usize>>,
    /// Best IoU of each anchor against any ground truth.
    pub max_iou: Vec<f64>,
}

impl AssignResult {
    pub fn num_foreground(&self) -> usize {
        self.labels.iter().filter(|l| l.is_foreground()).count()
    }

    pub fn foreground_mask(&self) -> Vec<bool> {
        self.labels.iter().map(Label::is_foreground).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssignOptions {
    pub metric: IouMetric,
    /// Force each ground truth's best anchor to foreground even below `fg`,
    /// provided the overlap is positive.
    pub best_anchor_safeguard: bool,
}

impl AssignOptions {
    pub fn new(metric: IouMetric) -> Self {
        Self { metric, best_anchor_safeguard: true }
    }
}

/// Anchor-major IoU matrix (`anchors.len() x gts.len()`).
pub fn iou_matrix(anchors: &[RBox], gts: &[GtBox], metric: IouMetric) -> Vec<f64> {
    let m = gts.len();
    if m == 0 {
        return Vec::new();
    }
    let gt_hbb: Vec<AABox> = gts.iter().map(|g| g.rbox.hbb()).collect();
    let mut out = vec![0.0; anchors.len() * m];
    out.par_chunks_mut(m).zip(anchors.par_iter()).for_each(|(row, a)| {
        let ah = a.hbb();
        for (k, g) in gts.iter().enumerate() {
            if ah.overlaps(&gt_hbb[k]) {
                row[k] = metric.iou(a, &g.rbox);
            }
        }
    });
    out
}

pub fn assign(anchors: &[RBox], gts: &[GtBox], th: StageThresholds, metric: IouMetric) -> Result<AssignResult> {
    assign_with(anchors, gts, th, AssignOptions::new(metric))
}

pub fn assign_with(
    anchors: &[RBox],
    gts: &[GtBox],
    th: StageThresholds,
    opts: AssignOptions,
) -> Result<AssignResult> {
    th.validate()?;
    let n = anchors.len();
    let m = gts.len();
    let mut res = AssignResult {
        labels: vec![Label::Background; n],
        targets: vec![None; n],
        matched_gt: vec![None; n],
        max_iou: vec![0.0; n],
    };
    if m == 0 {
        return Ok(res);
    }
    let ious = iou_matrix(anchors, gts, opts.metric);

    for i in 0..n {
        let row = &ious[i * m..(i + 1) * m];
        let mut best = 0;
        for k in 1..m {
            if row[k] > row[best] {
                best = k;
            }
        }
        let iou = row[best];
        res.max_iou[i] = iou;
        if iou >= th.fg {
            res.labels[i] = Label::Foreground(gts[best].class_id);
            res.matched_gt[i] = Some(best);
        } else if iou >= th.bg {
            res.labels[i] = Label::Ignore;
        }
    }

    if opts.best_anchor_safeguard {
        let mut forced: Vec<Option<(usize, f64)>> = vec![None; n];
        for k in 0..m {
            let mut best: Option<(usize, f64)> = None;
            for i in 0..n {
                let v = ious[i * m + k];
                if v > 0.0 && best.is_none_or(|(_, b)| v > b) {
                    best = Some((i, v));
                }
            }
            if let Some((i, v)) = best {
                if forced[i].is_none_or(|(_, prev)| v > prev) {
                    forced[i] = Some((k, v));
                }
            }
        }
        for (i, f) in forced.into_iter().enumerate() {
            if let Some((k, _)) = f {
                if !res.labels[i].is_foreground() {
                    res.labels[i] = Label::Foreground(gts[k].class_id);
                    res.matched_gt[i] = Some(k);
                }
            }
        }
    }

    for (i, anchor) in anchors.iter().enumerate() {
        if let Some(k) = res.matched_gt[i] {
            res.targets[i] = Some(encode(&gts[k].rbox, anchor));
        }
    }
    Ok(res)
}
