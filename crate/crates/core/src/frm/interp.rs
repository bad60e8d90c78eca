use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::FeatureMap;
use crate::error::Error;

/// How the four lattice neighbours of a sample point are weighted.
///
/// For a point at fractional offset `(dx, dy)` inside its unit cell, the
/// sub-rectangle touching corner `k` has area `area_k`:
/// `area_lt = dx*dy`, `area_rt = (1-dx)*dy`, `area_lb = dx*(1-dy)`,
/// `area_rb = (1-dx)*(1-dy)`. Bilinear interpolation weights each corner
/// by the area of the sub-rectangle diagonally opposite it; the other
/// variants permute or quantize those weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    /// `lt*area_rb + rt*area_lb + rb*area_lt + lb*area_rt`
    #[default]
    Bilinear,
    /// `lt*area_lt + rt*area_rt + rb*area_rb + lb*area_lb`
    Perm1,
    /// `lt*area_lb + rt*area_rb + rb*area_rt + lb*area_lt`
    Perm2,
    /// `lt`
    QuantLt,
    /// `rb`
    QuantRb,
}

impl Interpolation {
    pub const ALL: [Interpolation; 5] = [
        Interpolation::Bilinear,
        Interpolation::Perm1,
        Interpolation::Perm2,
        Interpolation::QuantLt,
        Interpolation::QuantRb,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Interpolation::Bilinear => "bilinear",
            Interpolation::Perm1 => "perm1",
            Interpolation::Perm2 => "perm2",
            Interpolation::QuantLt => "quant_lt",
            Interpolation::QuantRb => "quant_rb",
        }
    }

    /// Weights for the `(lt, rt, lb, rb)` corner values.
    #[inline]
    pub fn weights(&self, dx: f64, dy: f64) -> [f64; 4] {
        let area_lt = dx * dy;
        let area_rt = (1.0 - dx) * dy;
        let area_lb = dx * (1.0 - dy);
        let area_rb = (1.0 - dx) * (1.0 - dy);
        match self {
            Interpolation::Bilinear => [area_rb, area_lb, area_rt, area_lt],
            Interpolation::Perm1 => [area_lt, area_rt, area_lb, area_rb],
            Interpolation::Perm2 => [area_lb, area_rb, area_lt, area_rt],
            Interpolation::QuantLt => [1.0, 0.0, 0.0, 0.0],
            Interpolation::QuantRb => [0.0, 0.0, 0.0, 1.0],
        }
    }
}

impl fmt::Display for Interpolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Interpolation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Interpolation::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::UnknownVariant(s.to_string()))
    }
}

/// Clamps a feature-space point into `[0, w-1] x [0, h-1]`. NaN maps to 0.
#[inline]
pub fn clamp_point(f: &FeatureMap, x: f64, y: f64) -> (f64, f64) {
    let fix = |v: f64, hi: f64| if v.is_nan() { 0.0 } else { v.clamp(0.0, hi) };
    (fix(x, (f.width - 1) as f64), fix(y, (f.height - 1) as f64))
}

/// Adds the interpolated feature vector at `(x, y)` (feature-space
/// coordinates, clamped) into `out`.
#[inline]
pub fn accumulate_sample(f: &FeatureMap, x: f64, y: f64, variant: Interpolation, out: &mut [f64]) {
    let (x, y) = clamp_point(f, x, y);
    let x0 = x.floor() as usize;
    let y0 = y.floor() as usize;
    let x1 = (x0 + 1).min(f.width - 1);
    let y1 = (y0 + 1).min(f.height - 1);
    let [w_lt, w_rt, w_lb, w_rb] = variant.weights(x - x0 as f64, y - y0 as f64);
    let lt = f.cell(y0, x0);
    let rt = f.cell(y0, x1);
    let lb = f.cell(y1, x0);
    let rb = f.cell(y1, x1);
    for c in 0..f.channels {
        out[c] += lt[c] * w_lt + rt[c] * w_rt + lb[c] * w_lb + rb[c] * w_rb;
    }
}

pub fn interpolation_variant(f: &FeatureMap, x: f64, y: f64, variant: Interpolation) -> Vec<f64> {
    let mut out = vec![0.0; f.channels];
    accumulate_sample(f, x, y, variant, &mut out);
    out
}

pub fn bilinear_sample(f: &FeatureMap, x: f64, y: f64) -> Vec<f64> {
    interpolation_variant(f, x, y, Interpolation::Bilinear)
}
