use serde::{Deserialize, Serialize};

use super::dota::{DotaAnnotation, DotaObject};
use crate::error::{Error, Result};
use crate::geometry::{min_area_rect_points, signed_area, Point, Quad, RBox};
use crate::postproc::Detection;

pub const DEFAULT_TILE: u32 = 600;
pub const DEFAULT_OVERLAP: u32 = 150;
pub const DEFAULT_OUT: u32 = 800;
pub const DEFAULT_MIN_INSIDE_FRAC: f64 = 0.25;

/// Source-pixel window `[x0, x1) x [y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TileWindow {
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
    /// The image is smaller than the tile along some axis; the window
    /// covers the whole extent and the tile is padded.
    pub padded: bool,
}

impl TileWindow {
    pub fn width(&self) -> u32 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> u32 {
        self.y1 - self.y0
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x0 as f64 && p.x <= self.x1 as f64 && p.y >= self.y0 as f64 && p.y <= self.y1 as f64
    }

    /// Source pixel -> tile pixel.
    pub fn to_tile(&self, p: Point, scale: f64) -> Point {
        Point::new((p.x - self.x0 as f64) * scale, (p.y - self.y0 as f64) * scale)
    }

    /// Tile pixel -> source pixel.
    pub fn to_image(&self, p: Point, scale: f64) -> Point {
        Point::new(self.x0 as f64 + p.x / scale, self.y0 as f64 + p.y / scale)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TilePlan {
    pub image_w: u32,
    pub image_h: u32,
    pub tile: u32,
    pub overlap: u32,
    /// Output tile size divided by `tile`.
    pub scale: f64,
    /// Row-major: all windows of the first row band, then the next.
    pub windows: Vec<TileWindow>,
}

fn origins(dim: u32, tile: u32, step: u32) -> Vec<u32> {
    if dim <= tile {
        return vec![0];
    }
    let mut out = Vec::new();
    let mut x = 0u32;
    loop {
        out.push(x.min(dim - tile));
        if x + tile >= dim {
            break;
        }
        x += step;
    }
    out
}

/// Sliding-window plan with stride `tile - overlap`. The last window of each
/// axis is shifted back to end on the image edge.
pub fn tile_plan(image_w: u32, image_h: u32, tile: u32, overlap: u32, out: u32) -> Result<TilePlan> {
    if tile == 0 || overlap >= tile {
        return Err(Error::InvalidArg(format!("need tile > overlap >= 0, got tile {tile}, overlap {overlap}")));
    }
    if out == 0 || image_w == 0 || image_h == 0 {
        return Err(Error::InvalidArg(format!("image {image_w}x{image_h} and output size {out} must be positive")));
    }
    let step = tile - overlap;
    let xs = origins(image_w, tile, step);
    let ys = origins(image_h, tile, step);
    let padded = image_w < tile || image_h < tile;
    let mut windows = Vec::with_capacity(xs.len() * ys.len());
    for &y0 in &ys {
        for &x0 in &xs {
            windows.push(TileWindow {
                x0,
                y0,
                x1: x0 + tile.min(image_w),
                y1: y0 + tile.min(image_h),
                padded,
            });
        }
    }
    Ok(TilePlan { image_w, image_h, tile, overlap, scale: out as f64 / tile as f64, windows })
}

/// Sutherland-Hodgman clip of a simple polygon against an axis rectangle.
pub fn clip_to_window(poly: &[Point], w: &TileWindow) -> Vec<Point> {
    let (x0, y0, x1, y1) = (w.x0 as f64, w.y0 as f64, w.x1 as f64, w.y1 as f64);
    // each edge: signed distance inside >= 0, and the crossing point
    type Edge = (fn(Point, f64) -> f64, f64);
    let edges: [Edge; 4] = [
        (|p, v| p.x - v, x0),
        (|p, v| v - p.x, x1),
        (|p, v| p.y - v, y0),
        (|p, v| v - p.y, y1),
    ];
    let mut cur = poly.to_vec();
    for (dist, v) in edges {
        if cur.is_empty() {
            break;
        }
        let mut next = Vec::with_capacity(cur.len() + 2);
        for i in 0..cur.len() {
            let a = cur[i];
            let b = cur[(i + 1) % cur.len()];
            let (da, db) = (dist(a, v), dist(b, v));
            if da >= 0.0 {
                next.push(a);
            }
            if (da >= 0.0) != (db >= 0.0) {
                let t = da / (da - db);
                next.push(a.add(b.sub(a).scale(t)));
            }
        }
        cur = next;
    }
    cur
}

/// Objects of `ann` in the coordinates of one tile.
///
/// Objects fully inside are translated and scaled. Objects whose visible
/// area is below `min_inside_frac` of their area are dropped. The rest are
/// clipped and replaced by the minimum-area rectangle of the visible part.
pub fn remap_gt_to_tile(ann: &DotaAnnotation, window: &TileWindow, scale: f64, min_inside_frac: f64) -> Vec<DotaObject> {
    let mut out = Vec::new();
    for o in &ann.objects {
        let to_tile = |p: Point| window.to_tile(p, scale);
        if o.quad.0.iter().all(|p| window.contains(*p)) {
            out.push(DotaObject { quad: o.quad.map(to_tile), ..o.clone() });
            continue;
        }
        let area = o.quad.area();
        if area <= 0.0 {
            continue;
        }
        let clipped = clip_to_window(&o.quad.0, window);
        if clipped.len() < 3 {
            continue;
        }
        let inside = signed_area(&clipped).abs();
        if inside < min_inside_frac * area {
            continue;
        }
        let Ok(fit) = min_area_rect_points(&clipped) else { continue };
        out.push(DotaObject { quad: fit.corners().map(to_tile), ..o.clone() });
    }
    out
}

/// Remaps every window of `plan`.
pub fn remap_all(ann: &DotaAnnotation, plan: &TilePlan, min_inside_frac: f64) -> Vec<Vec<DotaObject>> {
    plan.windows
        .iter()
        .map(|w| remap_gt_to_tile(ann, w, plan.scale, min_inside_frac))
        .collect()
}

/// Maps a tile-space box back to source pixels.
pub fn box_to_image(b: &RBox, window: &TileWindow, scale: f64) -> RBox {
    let c = window.to_image(b.center(), scale);
    RBox { cx: c.x, cy: c.y, w: b.w / scale, h: b.h / scale, theta: b.theta }
}

/// Maps a tile-space quad back to source pixels.
pub fn quad_to_image(q: &Quad, window: &TileWindow, scale: f64) -> Quad {
    q.map(|p| window.to_image(p, scale))
}

/// Concatenates per-tile detections in image coordinates. Each entry pairs
/// a window index of `plan` with that tile's detections.
pub fn merge_tile_detections(per_tile: &[(usize, Vec<Detection>)], plan: &TilePlan) -> Result<Vec<Detection>> {
    let mut out = Vec::new();
    for (t, dets) in per_tile {
        let w = plan.windows.get(*t).ok_or(Error::UnknownTile(*t))?;
        out.extend(dets.iter().map(|d| Detection { rbox: box_to_image(&d.rbox, w, plan.scale), ..*d }));
    }
    Ok(out)
}
