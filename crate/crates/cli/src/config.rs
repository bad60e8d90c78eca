//! `rrkit.toml`: one flat table of defaults. Command-line flags win over
//! anything set here.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rrkit::anchors::{AnchorConfig, AnchorMode};
use rrkit::evalkit::ApMode;
use rrkit::matching::{stage_schedule, StageThresholds};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToolConfig {
    /// `standard` or `dense`.
    pub anchor_preset: String,
    /// Initial stage plus refinement stages.
    pub num_stages: usize,
    /// Per-stage `[fg, bg]` pairs replacing the built-in schedule.
    pub thresholds: Option<Vec<[f64; 2]>>,
    pub nms_iou: f64,
    pub per_class: bool,
    /// `11point` or `all`.
    pub eval_mode: String,
    pub eval_iou: f64,
    pub dets_dir: Option<PathBuf>,
    pub gts_dir: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub tile: u32,
    pub overlap: u32,
    pub out: u32,
    pub min_inside_frac: f64,
    pub threads: Option<usize>,
}

impl Default for ToolConfig {
    fn default() -> Self {
        Self {
            anchor_preset: "standard".into(),
            num_stages: 2,
            thresholds: None,
            nms_iou: 0.1,
            per_class: true,
            eval_mode: "11point".into(),
            eval_iou: 0.5,
            dets_dir: None,
            gts_dir: None,
            output: None,
            tile: rrkit::dataio::DEFAULT_TILE,
            overlap: rrkit::dataio::DEFAULT_OVERLAP,
            out: rrkit::dataio::DEFAULT_OUT,
            min_inside_frac: rrkit::dataio::DEFAULT_MIN_INSIDE_FRAC,
            threads: None,
        }
    }
}

impl ToolConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let cfg = match path {
            None => Self::default(),
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
            }
        };
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        AnchorConfig::preset(&self.anchor_preset, AnchorMode::Horizontal)?;
        self.schedule()?;
        check_iou("nms_iou", self.nms_iou)?;
        check_iou("eval_iou", self.eval_iou)?;
        self.ap_mode()?;
        if self.tile == 0 || self.overlap >= self.tile || self.out == 0 {
            bail!(rrkit::Error::InvalidConfig(format!(
                "tile {} / overlap {} / out {} must satisfy tile > overlap and out > 0",
                self.tile, self.overlap, self.out
            )));
        }
        if !(0.0..=1.0).contains(&self.min_inside_frac) {
            bail!(rrkit::Error::InvalidConfig(format!("min_inside_frac {} outside [0, 1]", self.min_inside_frac)));
        }
        if self.threads == Some(0) {
            bail!(rrkit::Error::InvalidConfig("threads must be positive".into()));
        }
        Ok(())
    }

    pub fn ap_mode(&self) -> Result<ApMode> {
        Ok(self.eval_mode.parse()?)
    }

    pub fn schedule(&self) -> Result<Vec<StageThresholds>> {
        match &self.thresholds {
            None => Ok(stage_schedule(self.num_stages)?),
            Some(pairs) => {
                if pairs.len() != self.num_stages {
                    bail!(rrkit::Error::InvalidConfig(format!(
                        "{} threshold pairs for {} stages",
                        pairs.len(),
                        self.num_stages
                    )));
                }
                Ok(pairs.iter().map(|&[fg, bg]| StageThresholds::new(fg, bg)).collect::<Result<_, _>>()?)
            }
        }
    }
}

pub fn check_iou(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v <= 1.0) {
        bail!(rrkit::Error::InvalidConfig(format!("{name} {v} outside (0, 1]")));
    }
    Ok(())
}
