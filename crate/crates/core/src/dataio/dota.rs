use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evalkit::GtObject;
use crate::geometry::{min_area_rect, Quad};

/// The fifteen categories of the DOTA v1.0 benchmark.
pub const DOTA_CATEGORIES: [&str; 15] = [
    "plane",
    "baseball-diamond",
    "bridge",
    "ground-track-field",
    "small-vehicle",
    "large-vehicle",
    "ship",
    "tennis-court",
    "basketball-court",
    "storage-tank",
    "soccer-ball-field",
    "roundabout",
    "harbor",
    "swimming-pool",
    "helicopter",
];

pub fn dota_category_id(name: &str) -> Option<usize> {
    DOTA_CATEGORIES.iter().position(|c| *c == name)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DotaObject {
    pub quad: Quad,
    pub category: String,
    pub difficult: bool,
}

impl DotaObject {
    /// Converts to an evaluation ground truth using the minimum-area
    /// rectangle of the quadrilateral.
    pub fn to_gt(&self, class_id: usize) -> Result<GtObject> {
        Ok(GtObject { rbox: min_area_rect(&self.quad)?, class_id, difficult: self.difficult })
    }
}

/// Contents of one DOTA label file.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DotaAnnotation {
    /// Metadata lines such as `imagesource:GoogleEarth` or `gsd:0.14`.
    pub header: Vec<String>,
    pub objects: Vec<DotaObject>,
}

fn starts_numeric(line: &str) -> bool {
    line.split_whitespace()
        .next()
        .is_some_and(|t| t.parse::<f64>().is_ok())
}

/// Parses DOTA label text: `x1 y1 x2 y2 x3 y3 x4 y4 category [difficult]`
/// per object. Lines whose first token is not a number are kept as header
/// lines; blank lines are skipped. `difficult` defaults to 0.
pub fn parse_dota(text: &str) -> Result<DotaAnnotation> {
    let mut ann = DotaAnnotation::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let lineno = idx + 1;
        if line.is_empty() {
            continue;
        }
        if !starts_numeric(line) {
            ann.header.push(line.to_string());
            continue;
        }
        let err = |reason: String| Error::Parse { line: lineno, reason };
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 9 && toks.len() != 10 {
            return Err(err(format!("expected 8 coordinates, a category and an optional flag, got {} tokens", toks.len())));
        }
        let mut c = [0.0; 8];
        for (k, t) in toks[..8].iter().enumerate() {
            let v: f64 = t.parse().map_err(|_| err(format!("bad coordinate `{t}`")))?;
            if !v.is_finite() {
                return Err(err(format!("non-finite coordinate `{t}`")));
            }
            c[k] = v;
        }
        let category = toks[8];
        if category.parse::<f64>().is_ok() {
            return Err(err(format!("category token `{category}` is numeric")));
        }
        let difficult = match toks.get(9) {
            None | Some(&"0") => false,
            Some(&"1") => true,
            Some(t) => return Err(err(format!("difficult flag must be 0 or 1, got `{t}`"))),
        };
        ann.objects.push(DotaObject { quad: Quad::from_flat(c), category: category.to_string(), difficult });
    }
    Ok(ann)
}

/// Serializes an annotation in the layout read by [`parse_dota`].
pub fn write_dota(ann: &DotaAnnotation) -> String {
    let mut out = String::new();
    for h in &ann.header {
        out.push_str(h);
        out.push('\n');
    }
    for o in &ann.objects {
        for (k, v) in o.quad.to_flat().iter().enumerate() {
            if k > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{v}");
        }
        let _ = writeln!(out, " {} {}", o.category, u8::from(o.difficult));
    }
    out
}
