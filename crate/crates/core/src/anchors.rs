//! Horizontal and rotated anchor grids over feature-pyramid levels.
//!
//! A level with stride `s` over an `H x W` image has a
//! `ceil(H / s) x ceil(W / s)` grid, and every cell center sits at
//! `((j + 0.5) s, (i + 0.5) s)`. Within a cell anchors are ordered
//! scale-major, then ratio, then angle.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::RBox;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnchorMode {
    /// One axis-aligned box per (scale, ratio); stored at `theta = -pi/2`.
    Horizontal,
    /// One box per (scale, ratio, angle).
    Rotated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorConfig {
    /// Base anchor area (px^2) per pyramid level.
    pub base_areas: Vec<f64>,
    /// Stride (image px per feature cell) per pyramid level.
    pub strides: Vec<u32>,
    pub scales: Vec<f64>,
    /// Width / height ratios.
    pub ratios: Vec<f64>,
    /// Radians, each in `[-pi/2, 0)`. Ignored in horizontal mode.
    pub angles: Vec<f64>,
    pub mode: AnchorMode,
}

fn degrees(d: &[f64]) -> Vec<f64> {
    d.iter().map(|v| v * PI / 180.0).collect()
}

impl AnchorConfig {
    /// Levels P3..P7 with areas 32^2..512^2, three octave scales, seven
    /// ratios and six angles from -90 to -15 degrees.
    pub fn standard(mode: AnchorMode) -> Self {
        Self {
            base_areas: [32.0f64, 64.0, 128.0, 256.0, 512.0].iter().map(|s| s * s).collect(),
            strides: vec![8, 16, 32, 64, 128],
            scales: vec![1.0, 2f64.powf(1.0 / 3.0), 2f64.powf(2.0 / 3.0)],
            ratios: vec![1.0, 0.5, 2.0, 1.0 / 3.0, 3.0, 5.0, 0.2],
            angles: degrees(&[-90.0, -75.0, -60.0, -45.0, -30.0, -15.0]),
            mode,
        }
    }

    /// The denser setting: an extra half scale and ratios out to 9:1.
    pub fn dense(mode: AnchorMode) -> Self {
        Self {
            scales: vec![0.5, 1.0, 2f64.powf(1.0 / 3.0), 2f64.powf(2.0 / 3.0)],
            ratios: vec![1.0, 0.5, 2.0, 1.0 / 3.0, 3.0, 5.0, 0.2, 7.0, 1.0 / 7.0, 9.0, 1.0 / 9.0],
            ..Self::standard(mode)
        }
    }

    /// Looks up a named preset: `standard` or `dense`.
    pub fn preset(name: &str, mode: AnchorMode) -> Result<Self> {
        match name {
            "standard" | "default" => Ok(Self::standard(mode)),
            "dense" => Ok(Self::dense(mode)),
            other => Err(Error::InvalidConfig(format!("unknown anchor preset `{other}`"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.base_areas.len() != self.strides.len() {
            return bad("base_areas and strides differ in length");
        }
        if self.base_areas.is_empty() {
            return bad("no pyramid levels");
        }
        if self.scales.is_empty() || self.ratios.is_empty() || self.angles.is_empty() {
            return bad("scales, ratios and angles must be non-empty");
        }
        if self.strides.contains(&0) {
            return bad("strides must be positive");
        }
        let positive = |v: &f64| v.is_finite() && *v > 0.0;
        if !self.base_areas.iter().all(positive)
            || !self.scales.iter().all(positive)
            || !self.ratios.iter().all(positive)
        {
            return bad("areas, scales and ratios must be finite and positive");
        }
        if !self.angles.iter().all(|a| (-PI / 2.0..0.0).contains(a)) {
            return bad("angles must lie in [-pi/2, 0)");
        }
        Ok(())
    }

    pub fn num_levels(&self) -> usize {
        self.strides.len()
    }

    pub fn anchors_per_location(&self) -> usize {
        let base = self.scales.len() * self.ratios.len();
        match self.mode {
            AnchorMode::Horizontal => base,
            AnchorMode::Rotated => base * self.angles.len(),
        }
    }

    /// Per-cell anchor shapes `(w, h, theta)`, canonical.
    fn cell_shapes(&self, level: usize) -> Vec<(f64, f64, f64)> {
        let area = self.base_areas[level];
        let mut out = Vec::with_capacity(self.anchors_per_location());
        for &s in &self.scales {
            let a = area * s * s;
            for &r in &self.ratios {
                let w = (a * r).sqrt();
                let h = (a / r).sqrt();
                match self.mode {
                    AnchorMode::Horizontal => {
                        let b = RBox::raw(0.0, 0.0, w, h, 0.0).canonicalize();
                        out.push((b.w, b.h, b.theta));
                    }
                    AnchorMode::Rotated => {
                        for &t in &self.angles {
                            out.push((w, h, t));
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnchorGrid {
    pub level: usize,
    pub stride: u32,
    pub feature_h: usize,
    pub feature_w: usize,
    /// Row-major over cells; `anchors_per_location` consecutive boxes per cell.
    pub boxes: Vec<RBox>,
}

impl AnchorGrid {
    pub fn num_locations(&self) -> usize {
        self.feature_h * self.feature_w
    }
}

pub fn generate_level_anchors(
    image_h: usize,
    image_w: usize,
    level_index: usize,
    cfg: &AnchorConfig,
) -> Result<AnchorGrid> {
    cfg.validate()?;
    if image_h == 0 || image_w == 0 {
        return Err(Error::InvalidArg("image dimensions must be positive".into()));
    }
    if level_index >= cfg.num_levels() {
        return Err(Error::InvalidArg(format!(
            "level {level_index} out of range for {} levels",
            cfg.num_levels()
        )));
    }
    let stride = cfg.strides[level_index];
    let s = stride as usize;
    let feature_h = image_h.div_ceil(s);
    let feature_w = image_w.div_ceil(s);
    let shapes = cfg.cell_shapes(level_index);
    let mut boxes = Vec::with_capacity(feature_h * feature_w * shapes.len());
    for i in 0..feature_h {
        let cy = (i as f64 + 0.5) * stride as f64;
        for j in 0..feature_w {
            let cx = (j as f64 + 0.5) * stride as f64;
            boxes.extend(shapes.iter().map(|&(w, h, t)| RBox::raw(cx, cy, w, h, t)));
        }
    }
    Ok(AnchorGrid { level: level_index, stride, feature_h, feature_w, boxes })
}

/// One grid per level, ordered from the finest stride to the coarsest.
pub fn generate_pyramid_anchors(
    image_h: usize,
    image_w: usize,
    cfg: &AnchorConfig,
) -> Result<Vec<AnchorGrid>> {
    cfg.validate()?;
    (0..cfg.num_levels())
        .into_par_iter()
        .map(|l| generate_level_anchors(image_h, image_w, l, cfg))
        .collect()
}
