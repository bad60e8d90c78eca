//! Average precision for rotated detections.
//!
//! Detections are matched greedily in descending score order. A detection
//! claims the unmatched, non-difficult ground truth of its image and class
//! with the highest [`skew_iou`]; it is a true positive when that IoU
//! reaches the threshold. Otherwise, if it overlaps a difficult object at
//! or above the threshold it is ignored, and in every other case it is a
//! false positive. Difficult objects never count towards recall.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{skew_iou, RBox};
use crate::postproc::Detection;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApMode {
    /// Mean of the interpolated precision at recall 0, 0.1, ..., 1.
    #[default]
    ElevenPoint,
    /// Area under the monotone precision envelope.
    AllPoints,
}

impl fmt::Display for ApMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ApMode::ElevenPoint => "11point",
            ApMode::AllPoints => "all",
        })
    }
}

impl FromStr for ApMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "11point" | "11" | "voc07" => Ok(ApMode::ElevenPoint),
            "all" | "allpoints" | "all_points" | "voc10" => Ok(ApMode::AllPoints),
            _ => Err(Error::UnknownVariant(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GtObject {
    pub rbox: RBox,
    pub class_id: usize,
    #[serde(default)]
    pub difficult: bool,
}

/// Ground truth for a collection of images, keyed by image id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GroundTruthSet {
    pub num_classes: usize,
    pub images: BTreeMap<String, Vec<GtObject>>,
}

impl GroundTruthSet {
    pub fn new(num_classes: usize) -> Self {
        Self { num_classes, images: BTreeMap::new() }
    }

    pub fn add(&mut self, image: &str, obj: GtObject) -> Result<()> {
        if obj.class_id >= self.num_classes {
            return Err(Error::UnknownClass(obj.class_id));
        }
        self.images.entry(image.to_string()).or_default().push(obj);
        Ok(())
    }

    /// Registers an image with no objects, so detections on it are scored.
    pub fn add_image(&mut self, image: &str) {
        self.images.entry(image.to_string()).or_default();
    }

    /// Non-difficult objects of `class_id`.
    pub fn num_positives(&self, class_id: usize) -> usize {
        self.images
            .values()
            .flatten()
            .filter(|g| g.class_id == class_id && !g.difficult)
            .count()
    }

    fn check(&self) -> Result<()> {
        match self.images.values().flatten().find(|g| g.class_id >= self.num_classes) {
            Some(g) => Err(Error::UnknownClass(g.class_id)),
            None => Ok(()),
        }
    }
}

/// A detection tagged with the image it belongs to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalDetection {
    pub image: String,
    pub det: Detection,
}

impl EvalDetection {
    pub fn new(image: &str, rbox: RBox, class_id: usize, score: f64) -> Self {
        Self { image: image.to_string(), det: Detection::new(rbox, class_id, score) }
    }
}

/// Outcome of one detection during matching.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MatchKind {
    TruePositive,
    FalsePositive,
    /// Overlaps a difficult object; excluded from the curve.
    Ignored,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrCurve {
    pub recall: Vec<f64>,
    pub precision: Vec<f64>,
    pub ap: f64,
    pub mode: ApMode,
    /// Non-difficult ground truths of the class.
    pub num_gt: usize,
    pub tp: usize,
    pub fp: usize,
}

/// AP of a precision/recall sequence ordered by descending score.
pub fn average_precision(recall: &[f64], precision: &[f64], mode: ApMode) -> f64 {
    match mode {
        ApMode::ElevenPoint => {
            let mut s = 0.0;
            for k in 0..=10 {
                let t = k as f64 / 10.0;
                let p = recall
                    .iter()
                    .zip(precision)
                    .filter(|(r, _)| **r >= t)
                    .map(|(_, p)| *p)
                    .fold(0.0, f64::max);
                s += p;
            }
            s / 11.0
        }
        ApMode::AllPoints => {
            let mut mrec = Vec::with_capacity(recall.len() + 2);
            mrec.push(0.0);
            mrec.extend_from_slice(recall);
            mrec.push(1.0);
            let mut mpre = Vec::with_capacity(precision.len() + 2);
            mpre.push(0.0);
            mpre.extend_from_slice(precision);
            mpre.push(0.0);
            for i in (0..mpre.len() - 1).rev() {
                mpre[i] = mpre[i].max(mpre[i + 1]);
            }
            (1..mrec.len())
                .filter(|&i| mrec[i] != mrec[i - 1])
                .map(|i| (mrec[i] - mrec[i - 1]) * mpre[i])
                .sum()
        }
    }
}

/// Matches the detections of one class against the ground truth. Returns
/// the detection indices in processing order with their outcome.
pub fn match_class(dets: &[EvalDetection], gts: &GroundTruthSet, class_id: usize, iou_thresh: f64) -> Result<Vec<(usize, MatchKind)>> {
    if class_id >= gts.num_classes {
        return Err(Error::UnknownClass(class_id));
    }
    gts.check()?;
    if let Some(d) = dets.iter().find(|d| d.det.class_id >= gts.num_classes) {
        return Err(Error::UnknownClass(d.det.class_id));
    }
    let mut order: Vec<usize> = (0..dets.len()).filter(|&i| dets[i].det.class_id == class_id).collect();
    order.sort_by(|&a, &b| dets[b].det.score.total_cmp(&dets[a].det.score));

    let per_image: HashMap<&str, Vec<&GtObject>> = gts
        .images
        .iter()
        .map(|(k, v)| (k.as_str(), v.iter().filter(|g| g.class_id == class_id).collect()))
        .collect();
    let mut taken: HashMap<&str, Vec<bool>> = per_image.iter().map(|(k, v)| (*k, vec![false; v.len()])).collect();

    let mut out = Vec::with_capacity(order.len());
    for i in order {
        let d = &dets[i];
        let Some(objs) = per_image.get(d.image.as_str()) else {
            out.push((i, MatchKind::FalsePositive));
            continue;
        };
        let used = taken.get_mut(d.image.as_str()).expect("same keys");
        let mut best: Option<(usize, f64)> = None;
        let mut difficult_hit = false;
        for (k, g) in objs.iter().enumerate() {
            let iou = skew_iou(&d.det.rbox, &g.rbox);
            if g.difficult {
                difficult_hit |= iou >= iou_thresh;
            } else if !used[k] && best.is_none_or(|(_, b)| iou > b) {
                best = Some((k, iou));
            }
        }
        let kind = match best {
            Some((k, iou)) if iou >= iou_thresh => {
                used[k] = true;
                MatchKind::TruePositive
            }
            _ if difficult_hit => MatchKind::Ignored,
            _ => MatchKind::FalsePositive,
        };
        out.push((i, kind));
    }
    Ok(out)
}

/// Precision/recall curve and AP for one class.
pub fn evaluate_class(
    dets: &[EvalDetection],
    gts: &GroundTruthSet,
    class_id: usize,
    iou_thresh: f64,
    mode: ApMode,
) -> Result<PrCurve> {
    let matches = match_class(dets, gts, class_id, iou_thresh)?;
    let num_gt = gts.num_positives(class_id);
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut recall = Vec::with_capacity(matches.len());
    let mut precision = Vec::with_capacity(matches.len());
    for (_, kind) in matches {
        match kind {
            MatchKind::TruePositive => tp += 1,
            MatchKind::FalsePositive => fp += 1,
            MatchKind::Ignored => continue,
        }
        recall.push(if num_gt == 0 { 0.0 } else { tp as f64 / num_gt as f64 });
        precision.push(tp as f64 / (tp + fp) as f64);
    }
    let ap = if num_gt == 0 { 0.0 } else { average_precision(&recall, &precision, mode) };
    Ok(PrCurve { recall, precision, ap, mode, num_gt, tp, fp })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassAp {
    pub class_id: usize,
    pub ap: f64,
    pub num_gt: usize,
    pub num_det: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapReport {
    /// One entry per class, including classes without ground truth.
    pub per_class: Vec<ClassAp>,
    /// Mean AP over classes with at least one non-difficult object.
    pub map: f64,
}

pub fn evaluate_map(dets: &[EvalDetection], gts: &GroundTruthSet, iou_thresh: f64, mode: ApMode) -> Result<MapReport> {
    let per_class = (0..gts.num_classes)
        .into_par_iter()
        .map(|c| {
            let curve = evaluate_class(dets, gts, c, iou_thresh, mode)?;
            let num_det = dets.iter().filter(|d| d.det.class_id == c).count();
            Ok(ClassAp { class_id: c, ap: curve.ap, num_gt: curve.num_gt, num_det })
        })
        .collect::<Result<Vec<_>>>()?;
    let counted: Vec<f64> = per_class.iter().filter(|c| c.num_gt > 0).map(|c| c.ap).collect();
    let map = if counted.is_empty() { 0.0 } else { counted.iter().sum::<f64>() / counted.len() as f64 };
    Ok(MapReport { per_class, map })
}

/// `(threshold, mAP)` for each threshold.
pub fn map_sweep(dets: &[EvalDetection], gts: &GroundTruthSet, thresholds: &[f64], mode: ApMode) -> Result<Vec<(f64, f64)>> {
    thresholds
        .iter()
        .map(|&t| Ok((t, evaluate_map(dets, gts, t, mode)?.map)))
        .collect()
}

/// `0.5, 0.55, ..., 0.95`
pub fn coco_thresholds() -> Vec<f64> {
    (0..10).map(|k| (50 + 5 * k) as f64 / 100.0).collect()
}
