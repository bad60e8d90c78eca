//! Reference implementations used as test oracles. They are written
//! independently of the library code paths they check: plain tuples, no
//! shared helpers, straightforward loops.

// oracles stay deliberately index-by-index
#![allow(dead_code, clippy::needless_range_loop)]

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rrkit::geometry::RBox;

pub type P = (f64, f64);

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random canonical box with aspect ratio up to `max_ratio`, centre in
/// `[0, spread)^2`.
pub fn random_box(r: &mut impl Rng, spread: f64, max_ratio: f64) -> RBox {
    let long = r.gen_range(4.0..80.0);
    let ratio = r.gen_range(1.0..max_ratio);
    let (w, h) = if r.gen_bool(0.5) { (long, long / ratio) } else { (long / ratio, long) };
    let theta = r.gen_range(-std::f64::consts::FRAC_PI_2..0.0);
    RBox::raw(r.gen_range(0.0..spread), r.gen_range(0.0..spread), w, h, theta)
}

pub fn corners(b: &RBox) -> [P; 4] {
    let (c, s) = (b.theta.cos(), b.theta.sin());
    let (hw, hh) = (b.w / 2.0, b.h / 2.0);
    let at = |a: f64, bb: f64| (b.cx + a * c - bb * s, b.cy + a * s + bb * c);
    [at(-hw, -hh), at(-hw, hh), at(hw, hh), at(hw, -hh)]
}

pub fn shoelace(p: &[P]) -> f64 {
    let n = p.len();
    let mut s = 0.0;
    for i in 0..n {
        let (a, b) = (p[i], p[(i + 1) % n]);
        s += a.0 * b.1 - b.0 * a.1;
    }
    0.5 * s
}

fn cross(o: P, a: P, b: P) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Sutherland-Hodgman: clips `subject` by every edge of the convex `clip`.
pub fn sh_clip(subject: &[P], clip: &[P]) -> Vec<P> {
    let orient = shoelace(clip).signum();
    let mut out = subject.to_vec();
    for i in 0..clip.len() {
        if out.is_empty() {
            break;
        }
        let (a, b) = (clip[i], clip[(i + 1) % clip.len()]);
        let input = std::mem::take(&mut out);
        for k in 0..input.len() {
            let p = input[k];
            let q = input[(k + 1) % input.len()];
            let dp = orient * cross(a, b, p);
            let dq = orient * cross(a, b, q);
            if dp >= 0.0 {
                out.push(p);
            }
            if (dp >= 0.0) != (dq >= 0.0) {
                let t = dp / (dp - dq);
                out.push((p.0 + t * (q.0 - p.0), p.1 + t * (q.1 - p.1)));
            }
        }
    }
    out
}

pub fn sh_iou(a: &RBox, b: &RBox) -> f64 {
    let inter = shoelace(&sh_clip(&corners(a), &corners(b))).abs();
    let union = a.w * a.h + b.w * b.h - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

/// Membership test with the box's axis directions precomputed.
struct Frame {
    cx: f64,
    cy: f64,
    c: f64,
    s: f64,
    hw: f64,
    hh: f64,
}

impl Frame {
    fn new(b: &RBox) -> Self {
        Frame { cx: b.cx, cy: b.cy, c: b.theta.cos(), s: b.theta.sin(), hw: b.w / 2.0, hh: b.h / 2.0 }
    }

    #[inline]
    fn inside(&self, x: f64, y: f64) -> bool {
        let (dx, dy) = (x - self.cx, y - self.cy);
        (dx * self.c + dy * self.s).abs() <= self.hw && (-dx * self.s + dy * self.c).abs() <= self.hh
    }
}

/// Stratified jittered Monte-Carlo IoU over the union bounding box with
/// `g * g` samples.
pub fn mc_iou(a: &RBox, b: &RBox, g: usize, seed: u64) -> f64 {
    let mut lo = (f64::INFINITY, f64::INFINITY);
    let mut hi = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in corners(a).iter().chain(corners(b).iter()) {
        lo = (lo.0.min(p.0), lo.1.min(p.1));
        hi = (hi.0.max(p.0), hi.1.max(p.1));
    }
    let (sx, sy) = ((hi.0 - lo.0) / g as f64, (hi.1 - lo.1) / g as f64);
    let (fa, fb) = (Frame::new(a), Frame::new(b));
    let mut r = rng(seed);
    let (mut na, mut nb, mut both) = (0u64, 0u64, 0u64);
    for i in 0..g {
        for j in 0..g {
            let x = lo.0 + (j as f64 + r.gen::<f64>()) * sx;
            let y = lo.1 + (i as f64 + r.gen::<f64>()) * sy;
            let (ia, ib) = (fa.inside(x, y), fb.inside(x, y));
            na += ia as u64;
            nb += ib as u64;
            both += (ia && ib) as u64;
        }
    }
    let union = na + nb - both;
    if union == 0 {
        0.0
    } else {
        both as f64 / union as f64
    }
}

/// Greedy NMS written as a direct double loop.
pub fn brute_nms(dets: &[(RBox, usize, f64)], thresh: f64, per_class: bool) -> Vec<usize> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    // insertion sort: stable, descending by score
    for i in 1..order.len() {
        let mut k = i;
        while k > 0 && dets[order[k - 1]].2 < dets[order[k]].2 {
            order.swap(k - 1, k);
            k -= 1;
        }
    }
    let mut kept: Vec<usize> = Vec::new();
    for &i in &order {
        let mut keep = true;
        for &k in &kept {
            if per_class && dets[k].1 != dets[i].1 {
                continue;
            }
            if sh_iou(&dets[k].0, &dets[i].0) >= thresh {
                keep = false;
                break;
            }
        }
        if keep {
            kept.push(i);
        }
    }
    kept
}

/// (image, box, class, score)
pub type RefDet = (usize, RBox, usize, f64);
/// (image, box, class, difficult)
pub type RefGt = (usize, RBox, usize, bool);

/// Per-detection evaluation loop returning `(ap, tp, fp)` for one class,
/// 11-point or all-points.
pub fn brute_ap(dets: &[RefDet], gts: &[RefGt], class: usize, thresh: f64, eleven: bool) -> (f64, usize, usize) {
    let mut idx: Vec<usize> = (0..dets.len()).filter(|&i| dets[i].2 == class).collect();
    for i in 1..idx.len() {
        let mut k = i;
        while k > 0 && dets[idx[k - 1]].3 < dets[idx[k]].3 {
            idx.swap(k - 1, k);
            k -= 1;
        }
    }
    let npos = gts.iter().filter(|g| g.2 == class && !g.3).count();
    let mut used = vec![false; gts.len()];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut rec = Vec::new();
    let mut prec = Vec::new();
    for &i in &idx {
        let d = &dets[i];
        let mut best: Option<usize> = None;
        let mut best_iou = -1.0;
        let mut hits_difficult = false;
        for (k, g) in gts.iter().enumerate() {
            if g.0 != d.0 || g.2 != class {
                continue;
            }
            let iou = sh_iou(&d.1, &g.1);
            if g.3 {
                if iou >= thresh {
                    hits_difficult = true;
                }
                continue;
            }
            if !used[k] && iou > best_iou {
                best_iou = iou;
                best = Some(k);
            }
        }
        if let Some(k) = best.filter(|_| best_iou >= thresh) {
            used[k] = true;
            tp += 1;
        } else if hits_difficult {
            continue;
        } else {
            fp += 1;
        }
        rec.push(if npos == 0 { 0.0 } else { tp as f64 / npos as f64 });
        prec.push(tp as f64 / (tp + fp) as f64);
    }
    if npos == 0 {
        return (0.0, tp, fp);
    }
    let ap = if eleven {
        let mut s = 0.0;
        for k in 0..=10 {
            let t = k as f64 / 10.0;
            let mut m = 0.0f64;
            for j in 0..rec.len() {
                if rec[j] >= t && prec[j] > m {
                    m = prec[j];
                }
            }
            s += m;
        }
        s / 11.0
    } else {
        // area under the right-maximum precision envelope
        let mut s = 0.0;
        let mut prev_r = 0.0;
        for j in 0..rec.len() {
            if rec[j] > prev_r {
                let mut m = 0.0f64;
                for q in j..prec.len() {
                    m = m.max(prec[q]);
                }
                s += (rec[j] - prev_r) * m;
                prev_r = rec[j];
            }
        }
        s
    };
    (ap, tp, fp)
}

/// Row-major `h x w x c` map.
pub struct RefMap {
    pub h: usize,
    pub w: usize,
    pub c: usize,
    pub v: Vec<f64>,
}

impl RefMap {
    pub fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.v[(i * self.w + j) * self.c + k]
    }
}

/// Zero-padded cross-correlation; weights `[out][in][kh][kw]`.
pub fn ref_conv(f: &RefMap, kh: usize, kw: usize, cout: usize, wts: &[f64], bias: &[f64]) -> RefMap {
    let mut v = vec![0.0; f.h * f.w * cout];
    for i in 0..f.h {
        for j in 0..f.w {
            for o in 0..cout {
                let mut s = bias[o];
                for c in 0..f.c {
                    for a in 0..kh {
                        for b in 0..kw {
                            let ii = i as i64 + a as i64 - (kh / 2) as i64;
                            let jj = j as i64 + b as i64 - (kw / 2) as i64;
                            if ii >= 0 && jj >= 0 && (ii as usize) < f.h && (jj as usize) < f.w {
                                s += wts[((o * f.c + c) * kh + a) * kw + b] * f.at(ii as usize, jj as usize, c);
                            }
                        }
                    }
                }
                v[(i * f.w + j) * cout + o] = s;
            }
        }
    }
    RefMap { h: f.h, w: f.w, c: cout, v }
}

pub fn ref_bilinear(f: &RefMap, x: f64, y: f64, k: usize) -> f64 {
    let x = if x.is_nan() { 0.0 } else { x.max(0.0).min((f.w - 1) as f64) };
    let y = if y.is_nan() { 0.0 } else { y.max(0.0).min((f.h - 1) as f64) };
    let (x0, y0) = (x.floor() as usize, y.floor() as usize);
    let (x1, y1) = ((x0 + 1).min(f.w - 1), (y0 + 1).min(f.h - 1));
    let (fx, fy) = (x - x0 as f64, y - y0 as f64);
    (1.0 - fx) * (1.0 - fy) * f.at(y0, x0, k)
        + fx * (1.0 - fy) * f.at(y0, x1, k)
        + (1.0 - fx) * fy * f.at(y1, x0, k)
        + fx * fy * f.at(y1, x1, k)
}

/// Naive per-pixel feature reconstruction with bilinear sampling.
#[allow(clippy::too_many_arguments)]
pub fn ref_reconstruct(
    f: &RefMap,
    stride: f64,
    boxes: &[RBox],
    k1: (&[f64], &[f64]),
    k51: (&[f64], &[f64]),
    k15: (&[f64], &[f64]),
) -> RefMap {
    let c = f.c;
    let a = ref_conv(f, 1, 1, c, k1.0, k1.1);
    let b = ref_conv(&ref_conv(f, 5, 1, c, k51.0, k51.1), 1, 5, c, k15.0, k15.1);
    let conv = RefMap { h: f.h, w: f.w, c, v: a.v.iter().zip(&b.v).map(|(x, y)| x + y).collect() };
    let mut out = vec![0.0; conv.v.len()];
    for i in 0..f.h {
        for j in 0..f.w {
            let bx = &boxes[i * f.w + j];
            let mut pts = vec![(bx.cx, bx.cy)];
            pts.extend(corners(bx));
            for k in 0..c {
                let mut s = 0.0;
                for p in &pts {
                    s += ref_bilinear(&conv, p.0 / stride, p.1 / stride, k);
                }
                out[(i * f.w + j) * c + k] = s + conv.at(i, j, k);
            }
        }
    }
    RefMap { h: f.h, w: f.w, c, v: out }
}

/// Sigmoid focal loss, scalar form.
pub fn ref_focal(p: f64, target: bool, alpha: f64, gamma: f64) -> f64 {
    if target {
        -alpha * (1.0 - p).powf(gamma) * p.max(1e-12).ln()
    } else {
        -(1.0 - alpha) * p.powf(gamma) * (1.0 - p).max(1e-12).ln()
    }
}

pub fn ref_smooth_l1(x: f64, beta: f64) -> f64 {
    if x.abs() < beta {
        0.5 * x * x / beta
    } else {
        x.abs() - 0.5 * beta
    }
}
