//! Line formats shared by the subcommands. Blank lines and lines starting
//! with `#` are skipped everywhere; numbers are written with `{}` so they
//! read back bit-exact.

use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::Path;

use anyhow::{Context, Result};
use rrkit::geometry::RBox;
use rrkit::postproc::Detection;
use rrkit::Error;

/// Reads a file, or stdin for `-`.
pub fn read_input(path: &Path) -> Result<String> {
    let mut text = String::new();
    if path.as_os_str() == "-" {
        io::stdin().read_to_string(&mut text).context("reading stdin")?;
    } else {
        File::open(path)
            .and_then(|mut f| f.read_to_string(&mut text))
            .with_context(|| format!("reading {}", path.display()))?;
    }
    Ok(text)
}

pub fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        None => Box::new(BufWriter::new(io::stdout().lock())),
        Some(p) if p.as_os_str() == "-" => Box::new(BufWriter::new(io::stdout().lock())),
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
    })
}

/// `(line number, trimmed content)` for every line that carries data.
pub fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_err(line: usize, reason: impl Into<String>) -> Error {
    Error::Parse { line, reason: reason.into() }
}

fn numbers(line: usize, s: &str) -> Result<Vec<f64>, Error> {
    s.split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|_| parse_err(line, format!("`{t}` is not a number"))))
        .collect()
}

fn rbox_from(line: usize, v: &[f64]) -> Result<RBox, Error> {
    RBox::new(v[0], v[1], v[2], v[3], v[4]).map_err(|e| parse_err(line, e.to_string()))
}

/// `cx cy w h theta`
pub fn parse_box(line: usize, s: &str) -> Result<RBox, Error> {
    let v = numbers(line, s)?;
    if v.len() != 5 {
        return Err(parse_err(line, format!("expected 5 numbers, found {}", v.len())));
    }
    rbox_from(line, &v)
}

/// Like [`parse_box`] but zero sizes are allowed, as feature fields may
/// hold collapsed boxes.
pub fn parse_field_box(line: usize, s: &str) -> Result<RBox, Error> {
    let v = numbers(line, s)?;
    if v.len() != 5 {
        return Err(parse_err(line, format!("expected 5 numbers, found {}", v.len())));
    }
    if !v.iter().all(|x| x.is_finite()) || v[2] < 0.0 || v[3] < 0.0 {
        return Err(parse_err(line, "box needs finite values and non-negative sizes"));
    }
    Ok(RBox::raw(v[0], v[1], v[2], v[3], v[4]).canonicalize())
}

/// `cx cy w h theta | cx cy w h theta`
pub fn parse_pair(line: usize, s: &str) -> Result<(RBox, RBox), Error> {
    let (a, b) = s.split_once('|').ok_or_else(|| parse_err(line, "expected two boxes separated by `|`"))?;
    Ok((parse_box(line, a)?, parse_box(line, b)?))
}

/// `cx cy w h theta class score [stage]`
pub fn parse_detection(line: usize, s: &str) -> Result<Detection, Error> {
    let toks: Vec<&str> = s.split_whitespace().collect();
    if toks.len() != 7 && toks.len() != 8 {
        return Err(parse_err(line, format!("expected 7 or 8 fields, found {}", toks.len())));
    }
    let v = numbers(line, &toks[..5].join(" "))?;
    let int = |t: &str, what: &str| t.parse::<usize>().map_err(|_| parse_err(line, format!("{what} `{t}` is not a non-negative integer")));
    let class_id = int(toks[5], "class")?;
    let score = toks[6].parse::<f64>().map_err(|_| parse_err(line, format!("score `{}` is not a number", toks[6])))?;
    if !score.is_finite() {
        return Err(parse_err(line, "score must be finite"));
    }
    let stage = if toks.len() == 8 { int(toks[7], "stage")? } else { 0 };
    Ok(Detection { rbox: rbox_from(line, &v)?, class_id, score, stage })
}

pub fn parse_detections(text: &str) -> Result<Vec<Detection>, Error> {
    data_lines(text).map(|(n, l)| parse_detection(n, l)).collect()
}

pub fn format_detection(d: &Detection) -> String {
    let b = &d.rbox;
    format!("{} {} {} {} {} {} {} {}", b.cx, b.cy, b.w, b.h, b.theta, d.class_id, d.score, d.stage)
}

pub fn write_detections(out: &mut dyn Write, dets: &[Detection]) -> io::Result<()> {
    for d in dets {
        writeln!(out, "{}", format_detection(d))?;
    }
    Ok(())
}
