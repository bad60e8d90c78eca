use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::interp::accumulate_sample;
use super::{conv2d, ConvKernel, FeatureMap, Interpolation};
use crate::coding::{decode, Delta5};
use crate::error::{Error, Result};
use crate::geometry::{Point, RBox};

/// One refined box and its confidence per feature cell, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxField {
    pub height: usize,
    pub width: usize,
    pub boxes: Vec<RBox>,
    pub scores: Vec<f64>,
}

impl BoxField {
    pub fn new(height: usize, width: usize, boxes: Vec<RBox>, scores: Vec<f64>) -> Result<Self> {
        if boxes.len() != height * width || scores.len() != boxes.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} boxes / {} scores for a {height}x{width} grid",
                boxes.len(),
                scores.len()
            )));
        }
        Ok(Self { height, width, boxes, scores })
    }

    pub fn get(&self, i: usize, j: usize) -> (&RBox, f64) {
        let k = i * self.width + j;
        (&self.boxes[k], self.scores[k])
    }

    pub fn aligned_with(&self, f: &FeatureMap) -> bool {
        self.height == f.height && self.width == f.width
    }
}

/// Confidence of a multi-class candidate: its largest class probability.
pub fn candidate_score(class_probs: &[f64]) -> f64 {
    class_probs.iter().copied().fold(0.0, f64::max)
}

/// Keeps the highest-scoring candidate of every cell; ties keep the lowest index.
pub fn select_best(height: usize, width: usize, candidates: &[Vec<(RBox, f64)>]) -> Result<BoxField> {
    if candidates.len() != height * width {
        return Err(Error::ShapeMismatch(format!(
            "{} candidate lists for a {height}x{width} grid",
            candidates.len()
        )));
    }
    let mut boxes = Vec::with_capacity(candidates.len());
    let mut scores = Vec::with_capacity(candidates.len());
    for (cell, list) in candidates.iter().enumerate() {
        let (first, rest) = list.split_first().ok_or(Error::EmptyLocation(cell))?;
        let best = rest.iter().fold(first, |b, c| if c.1 > b.1 { c } else { b });
        boxes.push(best.0);
        scores.push(best.1);
    }
    BoxField::new(height, width, boxes, scores)
}

/// Index of the winning candidate per cell, same rule as [`select_best`].
pub fn select_best_index(scores: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (k, s) in scores.iter().enumerate() {
        if best.is_none_or(|b| *s > scores[b]) {
            best = Some(k);
        }
    }
    best
}

/// Center followed by the four corners.
pub fn five_points(b: &RBox) -> [Point; 5] {
    let q = b.corners().0;
    [b.center(), q[0], q[1], q[2], q[3]]
}

/// The three learned convolutions applied before sampling: a `1x1` branch
/// plus a `5x1` followed by `1x5` branch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrmKernels {
    pub k1: ConvKernel,
    pub k51: ConvKernel,
    pub k15: ConvKernel,
}

impl FrmKernels {
    /// Identity `1x1`, zero large-kernel branch.
    pub fn identity(channels: usize) -> Self {
        Self {
            k1: ConvKernel::identity(channels),
            k51: ConvKernel::zeros(5, 1, channels, channels),
            k15: ConvKernel::zeros(1, 5, channels, channels),
        }
    }

    pub fn validate(&self, in_channels: usize) -> Result<()> {
        for k in [&self.k1, &self.k51, &self.k15] {
            k.validate()?;
        }
        let ok = self.k1.in_channels == in_channels
            && self.k51.in_channels == in_channels
            && self.k15.in_channels == self.k51.out_channels
            && self.k15.out_channels == self.k1.out_channels;
        if !ok {
            return Err(Error::ShapeMismatch(format!(
                "kernels {}->{}, {}->{}, {}->{} incompatible with {in_channels} input channels",
                self.k1.in_channels,
                self.k1.out_channels,
                self.k51.in_channels,
                self.k51.out_channels,
                self.k15.in_channels,
                self.k15.out_channels
            )));
        }
        Ok(())
    }

    /// `conv1x1(f) + conv1x5(conv5x1(f))`
    pub fn apply(&self, f: &FeatureMap) -> Result<FeatureMap> {
        self.validate(f.channels)?;
        let mut a = conv2d(f, &self.k1)?;
        let b = conv2d(&conv2d(f, &self.k51)?, &self.k15)?;
        for (x, y) in a.data.iter_mut().zip(&b.data) {
            *x += y;
        }
        Ok(a)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FrmStats {
    /// Number of interpolated feature reads performed.
    pub samples: usize,
}

pub fn reconstruct(f: &FeatureMap, bf: &BoxField, kernels: &FrmKernels) -> Result<FeatureMap> {
    reconstruct_with(f, bf, kernels, Interpolation::Bilinear).map(|(m, _)| m)
}

/// Feature reconstruction.
///
/// The map is first passed through the two convolution branches. Every
/// cell then receives the sum of the interpolated features at the five
/// points of its box (image coordinates divided by the stride, clamped to
/// the map), and finally the convolved map is added back as a residual.
pub fn reconstruct_with(
    f: &FeatureMap,
    bf: &BoxField,
    kernels: &FrmKernels,
    variant: Interpolation,
) -> Result<(FeatureMap, FrmStats)> {
    if !bf.aligned_with(f) {
        return Err(Error::ShapeMismatch(format!(
            "box field {}x{} vs feature map {}x{}",
            bf.height, bf.width, f.height, f.width
        )));
    }
    let conv = kernels.apply(f)?;
    let mut out = conv.zeros_like();
    let (w, c) = (conv.width, conv.channels);
    if out.data.is_empty() {
        return Ok((out, FrmStats::default()));
    }
    let stride = conv.stride as f64;
    let samples: usize = out
        .data
        .par_chunks_mut(w * c)
        .enumerate()
        .map(|(i, row)| {
            let mut n = 0;
            for j in 0..w {
                let acc = &mut row[j * c..(j + 1) * c];
                for p in five_points(&bf.boxes[i * w + j]) {
                    accumulate_sample(&conv, p.x / stride, p.y / stride, variant, acc);
                    n += 1;
                }
            }
            n
        })
        .sum();
    for (o, r) in out.data.iter_mut().zip(&conv.data) {
        *o += r;
    }
    Ok((out, FrmStats { samples }))
}

/// One refinement stage: decode each cell's box with its predicted offsets,
/// then rebuild the feature map around the refined boxes.
pub fn refine_step(
    f: &FeatureMap,
    prev: &BoxField,
    deltas: &[Delta5],
    scores: &[f64],
    kernels: &FrmKernels,
) -> Result<(FeatureMap, BoxField)> {
    if deltas.len() != prev.boxes.len() || scores.len() != prev.boxes.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} deltas / {} scores for {} cells",
            deltas.len(),
            scores.len(),
            prev.boxes.len()
        )));
    }
    let boxes = prev
        .boxes
        .iter()
        .zip(deltas)
        .map(|(b, d)| decode(d, b))
        .collect::<Result<Vec<_>>>()?;
    let bf = BoxField::new(prev.height, prev.width, boxes, scores.to_vec())?;
    let g = reconstruct(f, &bf, kernels)?;
    Ok((g, bf))
}
