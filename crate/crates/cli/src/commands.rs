use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use rrkit::dataio::{dota_category_id, parse_dota, read_task1_dir, remap_all, tile_plan, write_dota, DotaAnnotation, DOTA_CATEGORIES};
use rrkit::evalkit::{coco_thresholds, evaluate_map, map_sweep, ApMode, EvalDetection, GroundTruthSet};
use rrkit::frm::{reconstruct_with, BoxField, FeatureMap, FrmKernels, Interpolation};
use rrkit::geometry::skew_iou;
use rrkit::postproc::rotated_nms;

use crate::config::{check_iou, ToolConfig};
use crate::textio::{data_lines, open_output, parse_detections, parse_field_box, parse_pair, read_input, write_detections};

#[derive(Debug, Args)]
pub struct IouArgs {
    /// Lines of `cx cy w h theta | cx cy w h theta`; `-` reads stdin.
    pub input: PathBuf,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

pub fn iou(a: &IouArgs, cfg: &ToolConfig) -> Result<()> {
    let text = read_input(&a.input)?;
    let pairs = data_lines(&text).map(|(n, l)| parse_pair(n, l)).collect::<Result<Vec<_>, _>>()?;
    let mut out = open_output(a.output.as_deref().or(cfg.output.as_deref()))?;
    for (x, y) in &pairs {
        writeln!(out, "{:.6}", skew_iou(x, y))?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Args)]
pub struct NmsArgs {
    /// Lines of `cx cy w h theta class score [stage]`; `-` reads stdin.
    pub input: PathBuf,
    /// Suppression threshold.
    #[arg(long)]
    pub iou: Option<f64>,
    /// Only suppress within a class.
    #[arg(long, conflicts_with = "class_agnostic")]
    pub per_class: bool,
    /// Suppress across classes.
    #[arg(long)]
    pub class_agnostic: bool,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

pub fn nms(a: &NmsArgs, cfg: &ToolConfig) -> Result<()> {
    let thresh = a.iou.unwrap_or(cfg.nms_iou);
    check_iou("--iou", thresh)?;
    let per_class = if a.per_class {
        true
    } else if a.class_agnostic {
        false
    } else {
        cfg.per_class
    };
    let dets = parse_detections(&read_input(&a.input)?).with_context(|| format!("in {}", a.input.display()))?;
    let kept = rotated_nms(&dets, thresh, per_class)?;
    let mut out = open_output(a.output.as_deref().or(cfg.output.as_deref()))?;
    write_detections(&mut out, &kept)?;
    out.flush()?;
    Ok(())
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Directory of `Task1_<category>.txt` files.
    #[arg(long)]
    pub dets: Option<PathBuf>,
    /// Directory of DOTA annotation files, one per image.
    #[arg(long)]
    pub gts: Option<PathBuf>,
    #[arg(long)]
    pub iou_thresh: Option<f64>,
    /// `11point` or `all`.
    #[arg(long)]
    pub mode: Option<String>,
    /// Also write `iou_thresh,map` rows for 0.50, 0.55, ..., 0.95.
    #[arg(long)]
    pub sweep: Option<PathBuf>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

fn txt_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()?;
    files.retain(|p| p.extension().is_some_and(|e| e == "txt"));
    files.sort();
    Ok(files)
}

/// The fifteen DOTA names first, then anything else in sorted order.
fn category_list<'a>(extra: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut cats: Vec<String> = DOTA_CATEGORIES.iter().map(|s| s.to_string()).collect();
    let mut more: Vec<String> = extra.filter(|c| dota_category_id(c).is_none()).map(str::to_string).collect();
    more.sort();
    more.dedup();
    cats.extend(more);
    cats
}

pub fn eval(a: &EvalArgs, cfg: &ToolConfig) -> Result<()> {
    let thresh = a.iou_thresh.unwrap_or(cfg.eval_iou);
    check_iou("--iou-thresh", thresh)?;
    let mode: ApMode = match &a.mode {
        Some(m) => m.parse()?,
        None => cfg.ap_mode()?,
    };
    let dets_dir = a.dets.as_ref().or(cfg.dets_dir.as_ref()).context("no detections directory (--dets or dets_dir)")?;
    let gts_dir = a.gts.as_ref().or(cfg.gts_dir.as_ref()).context("no ground-truth directory (--gts or gts_dir)")?;

    let mut anns: Vec<(String, DotaAnnotation)> = Vec::new();
    for path in txt_files(gts_dir)? {
        let stem = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        let ann = parse_dota(&fs::read_to_string(&path)?).with_context(|| format!("in {}", path.display()))?;
        anns.push((stem, ann));
    }
    let records = read_task1_dir(dets_dir).with_context(|| format!("in {}", dets_dir.display()))?;
    let cats = category_list(
        anns.iter().flat_map(|(_, a)| a.objects.iter().map(|o| o.category.as_str())).chain(records.keys().map(String::as_str)),
    );
    let id = |name: &str| cats.iter().position(|c| c == name).expect("category list covers every name");

    let mut set = GroundTruthSet::new(cats.len());
    for (image, ann) in &anns {
        set.add_image(image);
        for (k, o) in ann.objects.iter().enumerate() {
            let gt = o.to_gt(id(&o.category)).with_context(|| format!("{image}: object {}", k + 1))?;
            set.add(image, gt)?;
        }
    }
    let mut dets = Vec::new();
    for (cat, recs) in &records {
        for r in recs {
            let d = r.to_detection(id(cat)).with_context(|| format!("Task1_{cat}.txt: image {}", r.image))?;
            dets.push(EvalDetection { image: r.image.clone(), det: d });
        }
    }

    let report = evaluate_map(&dets, &set, thresh, mode)?;
    for c in &report.per_class {
        if c.num_gt > 0 && !records.contains_key(&cats[c.class_id]) {
            eprintln!("{}", serde_json::json!({ "warning": "missing_category", "category": cats[c.class_id] }));
        }
    }
    let mut out = open_output(a.output.as_deref().or(cfg.output.as_deref()))?;
    writeln!(out, "# iou_thresh {thresh} mode {mode}")?;
    writeln!(out, "category\tap\tnum_gt\tnum_det")?;
    for c in report.per_class.iter().filter(|c| c.num_gt > 0 || c.num_det > 0) {
        writeln!(out, "{}\t{:.4}\t{}\t{}", cats[c.class_id], c.ap, c.num_gt, c.num_det)?;
    }
    writeln!(out, "mAP\t{:.4}", report.map)?;
    out.flush()?;

    if let Some(path) = &a.sweep {
        let rows = map_sweep(&dets, &set, &coco_thresholds(), mode)?;
        let mut csv = open_output(Some(path))?;
        writeln!(csv, "iou_thresh,map")?;
        for (t, m) in rows {
            writeln!(csv, "{t:.2},{m:.6}")?;
        }
        csv.flush()?;
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct TileArgs {
    #[arg(long)]
    pub w: u32,
    #[arg(long)]
    pub h: u32,
    #[arg(long)]
    pub tile: Option<u32>,
    #[arg(long)]
    pub overlap: Option<u32>,
    /// Side of the network input each tile is resized to.
    #[arg(long)]
    pub out: Option<u32>,
    /// DOTA annotation for the image, remapped into every tile.
    #[arg(long)]
    pub ann: Option<PathBuf>,
    /// Where the per-tile annotations go, named `<stem>__<x0>___<y0>.txt`.
    #[arg(long, requires = "ann")]
    pub ann_dir: Option<PathBuf>,
    #[arg(long)]
    pub min_inside_frac: Option<f64>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

pub fn tile(a: &TileArgs, cfg: &ToolConfig) -> Result<()> {
    let plan = tile_plan(a.w, a.h, a.tile.unwrap_or(cfg.tile), a.overlap.unwrap_or(cfg.overlap), a.out.unwrap_or(cfg.out))?;
    let frac = a.min_inside_frac.unwrap_or(cfg.min_inside_frac);
    if !(0.0..=1.0).contains(&frac) {
        bail!(rrkit::Error::InvalidArg(format!("min_inside_frac {frac} outside [0, 1]")));
    }
    let remapped = match &a.ann {
        Some(p) => {
            let ann = parse_dota(&read_input(p)?).with_context(|| format!("in {}", p.display()))?;
            Some((ann.header.clone(), remap_all(&ann, &plan, frac)))
        }
        None => None,
    };
    let mut out = open_output(a.output.as_deref().or(cfg.output.as_deref()))?;
    writeln!(out, "# image {}x{} tile {} overlap {} scale {}", plan.image_w, plan.image_h, plan.tile, plan.overlap, plan.scale)?;
    writeln!(out, "index x0 y0 x1 y1 padded objects")?;
    for (k, win) in plan.windows.iter().enumerate() {
        let n = remapped.as_ref().map_or("-".to_string(), |(_, r)| r[k].len().to_string());
        writeln!(out, "{k} {} {} {} {} {} {n}", win.x0, win.y0, win.x1, win.y1, win.padded as u8)?;
    }
    out.flush()?;

    if let (Some((header, per_tile)), Some(dir), Some(ann)) = (&remapped, &a.ann_dir, &a.ann) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let stem = ann.file_stem().unwrap_or_default().to_string_lossy();
        for (win, objects) in plan.windows.iter().zip(per_tile) {
            let body = write_dota(&DotaAnnotation { header: header.clone(), objects: objects.clone() });
            let path = dir.join(format!("{stem}__{}___{}.txt", win.x0, win.y0));
            fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
        }
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct FrmArgs {
    /// Binary tensor: `h w c stride` as little-endian u32, then f32 values.
    #[arg(long)]
    pub tensor: PathBuf,
    /// One `cx cy w h theta` line per feature cell, row-major.
    #[arg(long)]
    pub boxes: PathBuf,
    /// JSON object with `k1`, `k51`, `k15` kernels; identity when omitted.
    #[arg(long)]
    pub kernels: Option<PathBuf>,
    /// bilinear, perm1, perm2, quant_lt or quant_rb.
    #[arg(long, default_value = "bilinear")]
    pub variant: String,
    #[arg(short, long)]
    pub output: PathBuf,
}

pub fn frm_demo(a: &FrmArgs) -> Result<()> {
    let f = FeatureMap::read_from(fs::File::open(&a.tensor).with_context(|| format!("opening {}", a.tensor.display()))?)
        .with_context(|| format!("in {}", a.tensor.display()))?;
    let text = read_input(&a.boxes)?;
    let boxes = data_lines(&text).map(|(n, l)| parse_field_box(n, l)).collect::<Result<Vec<_>, _>>()?;
    let field = BoxField::new(f.height, f.width, boxes, vec![1.0; f.num_cells()])?;
    let kernels: FrmKernels = match &a.kernels {
        Some(p) => serde_json::from_str(&read_input(p)?).with_context(|| format!("parsing {}", p.display()))?,
        None => FrmKernels::identity(f.channels),
    };
    let variant: Interpolation = a.variant.parse()?;
    let (g, stats) = reconstruct_with(&f, &field, &kernels, variant)?;
    g.write_to(std::io::BufWriter::new(fs::File::create(&a.output).with_context(|| format!("creating {}", a.output.display()))?))?;
    let max_abs = g.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    println!(
        "cells={} channels={} samples={} variant={} max_abs={max_abs}",
        f.num_cells(),
        f.channels,
        stats.samples,
        variant.name()
    );
    Ok(())
}

/// Prints the effective configuration and the stage schedule it implies.
pub fn show_config(cfg: &ToolConfig) -> Result<()> {
    print!("{}", toml::to_string(cfg)?);
    for (k, s) in cfg.schedule()?.iter().enumerate() {
        println!("# stage {k}: fg {} bg {}", s.fg, s.bg);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn categories_keep_dota_order() {
        let c = category_list(["zeppelin", "plane", "airship", "zeppelin"].into_iter());
        assert_eq!(c.len(), 17);
        assert_eq!(c[0], "plane");
        assert_eq!(&c[15..], ["airship", "zeppelin"]);
    }

    #[test]
    fn lists_only_txt_files_sorted() {
        let dir = std::env::temp_dir().join(format!("rrkit-txt-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        for n in ["b.txt", "a.txt", "c.json"] {
            fs::write(dir.join(n), "").unwrap();
        }
        let names: Vec<String> = txt_files(&dir).unwrap().iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect();
        assert_eq!(names, ["a.txt", "b.txt"]);
        fs::remove_dir_all(dir).unwrap();
    }
}
