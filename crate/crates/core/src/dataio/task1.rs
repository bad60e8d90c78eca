use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{min_area_rect, Quad};
use crate::postproc::Detection;

/// One line of an oriented-box submission file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task1Record {
    pub image: String,
    pub score: f64,
    pub quad: Quad,
}

impl Task1Record {
    pub fn from_detection(image: &str, det: &Detection) -> Self {
        Self { image: image.to_string(), score: det.score, quad: det.rbox.corners() }
    }

    /// Fits a box to the quad; the class is supplied by the caller since
    /// it is implied by the file name.
    pub fn to_detection(&self, class_id: usize) -> Result<Detection> {
        Ok(Detection::new(min_area_rect(&self.quad)?, class_id, self.score))
    }
}

/// `image score x1 y1 x2 y2 x3 y3 x4 y4`, six decimals.
pub fn format_task1_line(r: &Task1Record) -> String {
    let c = r.quad.to_flat();
    format!(
        "{} {:.6} {:.6} {:.6} {:.6} {:.6} {:.6} {:.6} {:.6} {:.6}",
        r.image, r.score, c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7]
    )
}

pub fn write_task1<W: Write>(out: &mut W, records: &[Task1Record]) -> Result<()> {
    for r in records {
        writeln!(out, "{}", format_task1_line(r))?;
    }
    Ok(())
}

pub fn parse_task1(text: &str) -> Result<Vec<Task1Record>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let err = |reason: String| Error::Parse { line: idx + 1, reason };
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 10 {
            return Err(err(format!("expected 10 tokens, got {}", toks.len())));
        }
        let mut v = [0.0f64; 9];
        for (k, t) in toks[1..].iter().enumerate() {
            v[k] = t.parse().map_err(|_| err(format!("bad number `{t}`")))?;
            if !v[k].is_finite() {
                return Err(err(format!("non-finite number `{t}`")));
            }
        }
        let mut c = [0.0; 8];
        c.copy_from_slice(&v[1..]);
        out.push(Task1Record { image: toks[0].to_string(), score: v[0], quad: Quad::from_flat(c) });
    }
    Ok(out)
}

pub fn task1_file_name(category: &str) -> String {
    format!("Task1_{category}.txt")
}

/// Writes one `Task1_<category>.txt` per category into `dir`, including
/// empty files for categories without detections.
pub fn write_task1_dir(dir: &Path, by_category: &BTreeMap<String, Vec<Task1Record>>) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut paths = Vec::with_capacity(by_category.len());
    for (cat, recs) in by_category {
        let path = dir.join(task1_file_name(cat));
        let mut f = std::io::BufWriter::new(fs::File::create(&path)?);
        write_task1(&mut f, recs)?;
        f.flush()?;
        paths.push(path);
    }
    Ok(paths)
}

/// Reads every `Task1_<category>.txt` file of `dir`, keyed by category.
pub fn read_task1_dir(dir: &Path) -> Result<BTreeMap<String, Vec<Task1Record>>> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else { continue };
        let Some(cat) = name.strip_prefix("Task1_").and_then(|n| n.strip_suffix(".txt")) else { continue };
        let recs = parse_task1(&fs::read_to_string(&path)?)?;
        out.insert(cat.to_string(), recs);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::RBox;

    #[test]
    fn line_format_and_roundtrip() {
        let d = Detection::new(RBox::raw(100.25, 50.5, 40.0, 10.0, -0.7), 0, 0.87654321);
        let r = Task1Record::from_detection("P0001", &d);
        let line = format_task1_line(&r);
        assert!(line.starts_with("P0001 0.876543 "));
        assert_eq!(line.split(' ').count(), 10);
        let back = parse_task1(&line).unwrap();
        assert_eq!(back.len(), 1);
        assert!(back[0].quad.set_distance(&r.quad) < 1e-5);
        for (a, b) in back[0].quad.0.iter().zip(&r.quad.0) {
            assert!(a.dist(*b) < 1e-5);
        }
        let det = back[0].to_detection(0).unwrap();
        assert!(det.rbox.corners().set_distance(&d.rbox.corners()) < 1e-5);
    }

    #[test]
    fn empty_and_errors() {
        let mut buf = Vec::new();
        write_task1(&mut buf, &[]).unwrap();
        assert!(buf.is_empty());
        assert!(parse_task1("").unwrap().is_empty());
        assert!(matches!(parse_task1("img 0.5 1 2 3"), Err(Error::Parse { line: 1, .. })));
        assert!(parse_task1("img x 1 2 3 4 5 6 7 8").is_err());
    }
}
