//! Focal classification loss, smooth-L1 regression loss, the per-stage
//! multi-task loss and the stage-weighted total, with analytic gradients
//! with respect to probabilities and regression outputs.

use serde::{Deserialize, Serialize};

use crate::coding::Delta5;
use crate::error::{Error, Result};
use crate::matching::Label;

/// Lower bound applied to `p_t` inside the logarithm.
pub const LOG_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossConfig {
    /// Regression weight.
    pub lambda1: f64,
    /// Classification weight.
    pub lambda2: f64,
    /// Per-stage weights for [`total_loss`].
    pub alpha_stage: Vec<f64>,
    pub focal_alpha: f64,
    pub focal_gamma: f64,
    pub smooth_l1_beta: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            lambda1: 1.0,
            lambda2: 1.0,
            alpha_stage: vec![1.0],
            focal_alpha: 0.25,
            focal_gamma: 2.0,
            smooth_l1_beta: 1.0,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        let vals = [self.lambda1, self.lambda2, self.focal_alpha, self.focal_gamma, self.smooth_l1_beta];
        if vals.iter().chain(&self.alpha_stage).any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidArg(format!("loss weights must be finite and nonnegative: {self:?}")));
        }
        if self.smooth_l1_beta <= 0.0 {
            return Err(Error::InvalidArg("smooth_l1_beta must be positive".into()));
        }
        Ok(())
    }
}

/// Sigmoid focal loss `-a_t (1 - p_t)^gamma ln(p_t)` and its derivative with
/// respect to `p`.
pub fn focal_loss(p: f64, target: bool, alpha: f64, gamma: f64) -> Result<(f64, f64)> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::DomainError(p));
    }
    let (pt, at, sign) = if target { (p, alpha, 1.0) } else { (1.0 - p, 1.0 - alpha, -1.0) };
    let q = 1.0 - pt;
    let clamped = pt < LOG_FLOOR;
    let log_pt = pt.max(LOG_FLOOR).ln();
    let modulator = q.powf(gamma);
    let loss = -at * modulator * log_pt;
    let d_mod = if gamma == 0.0 { 0.0 } else { -gamma * q.powf(gamma - 1.0) };
    let d_log = if clamped { 0.0 } else { 1.0 / pt };
    let d_pt = -at * (d_mod * log_pt + modulator * d_log);
    Ok((loss, sign * d_pt))
}

/// Smooth-L1 and its derivative: quadratic below `beta`, linear above.
pub fn smooth_l1(x: f64, beta: f64) -> Result<(f64, f64)> {
    if beta.is_nan() || beta <= 0.0 {
        return Err(Error::InvalidArg(format!("smooth-L1 beta must be positive, got {beta}")));
    }
    let a = x.abs();
    if a < beta {
        Ok((0.5 * x * x / beta, x / beta))
    } else {
        Ok((a - 0.5 * beta, x.signum()))
    }
}

/// Inputs of one stage's multi-task loss over `N` anchors and `K` classes.
#[derive(Debug, Clone, Copy)]
pub struct MultitaskInput<'a> {
    pub pred_deltas: &'a [Delta5],
    pub target_deltas: &'a [Delta5],
    /// Anchors that contribute a regression term.
    pub fg_mask: &'a [bool],
    /// `N x K` row-major sigmoid probabilities.
    pub class_probs: &'a [f64],
    /// Ignored anchors contribute no classification term.
    pub class_labels: &'a [Label],
    pub num_classes: usize,
}

impl MultitaskInput<'_> {
    fn check(&self) -> Result<usize> {
        let n = self.pred_deltas.len();
        let ok = self.target_deltas.len() == n
            && self.fg_mask.len() == n
            && self.class_labels.len() == n
            && self.class_probs.len() == n * self.num_classes;
        if !ok {
            return Err(Error::ShapeMismatch(format!(
                "pred {n}, target {}, mask {}, labels {}, probs {} (K = {})",
                self.target_deltas.len(),
                self.fg_mask.len(),
                self.class_labels.len(),
                self.class_probs.len(),
                self.num_classes
            )));
        }
        for l in self.class_labels {
            if let Label::Foreground(c) = l {
                if *c >= self.num_classes {
                    return Err(Error::UnknownClass(*c));
                }
            }
        }
        Ok(n)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultitaskGrad {
    pub loss: f64,
    pub regression: f64,
    pub classification: f64,
    /// d loss / d pred_deltas, `N x 5`.
    pub d_pred: Vec<[f64; 5]>,
    /// d loss / d class_probs, `N x K`.
    pub d_probs: Vec<f64>,
}

/// `lambda1 / N * sum_n fg_n * sum_j smoothL1(pred_nj - target_nj)
///  + lambda2 / N * sum_n sum_k focal(p_nk, [label_n == k])`
/// with `N` the number of anchors.
pub fn multitask_loss(input: &MultitaskInput<'_>, cfg: &LossConfig) -> Result<f64> {
    multitask_loss_with_grad(input, cfg).map(|g| g.loss)
}

pub fn multitask_loss_with_grad(input: &MultitaskInput<'_>, cfg: &LossConfig) -> Result<MultitaskGrad> {
    cfg.validate()?;
    let n = input.check()?;
    let k = input.num_classes;
    let mut out = MultitaskGrad {
        loss: 0.0,
        regression: 0.0,
        classification: 0.0,
        d_pred: vec![[0.0; 5]; n],
        d_probs: vec![0.0; n * k],
    };
    if n == 0 {
        return Ok(out);
    }
    let inv_n = 1.0 / n as f64;
    let mut reg = 0.0;
    let mut cls = 0.0;
    for i in 0..n {
        if input.fg_mask[i] {
            let p = input.pred_deltas[i].to_array();
            let t = input.target_deltas[i].to_array();
            for j in 0..5 {
                let (l, g) = smooth_l1(p[j] - t[j], cfg.smooth_l1_beta)?;
                reg += l;
                out.d_pred[i][j] = cfg.lambda1 * inv_n * g;
            }
        }
        let positive = match input.class_labels[i] {
            Label::Ignore => continue,
            Label::Foreground(c) => Some(c),
            Label::Background => None,
        };
        for c in 0..k {
            let (l, g) = focal_loss(input.class_probs[i * k + c], positive == Some(c), cfg.focal_alpha, cfg.focal_gamma)?;
            cls += l;
            out.d_probs[i * k + c] = cfg.lambda2 * inv_n * g;
        }
    }
    out.regression = cfg.lambda1 * inv_n * reg;
    out.classification = cfg.lambda2 * inv_n * cls;
    out.loss = out.regression + out.classification;
    Ok(out)
}

/// Stage-weighted sum of per-stage losses.
pub fn total_loss(stage_losses: &[f64], alphas: &[f64]) -> Result<f64> {
    if stage_losses.len() != alphas.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} stage losses vs {} weights",
            stage_losses.len(),
            alphas.len()
        )));
    }
    Ok(stage_losses.iter().zip(alphas).map(|(l, a)| a * l).sum())
}
