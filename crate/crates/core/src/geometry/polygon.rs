use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{AABox, Point, Quad, RBox, CLIP_EPS};
use crate::error::{Error, Result};

/// Vertex list of a simple polygon. Results of [`convex_intersection`] are
/// convex and wound like their inputs' canonical form (negative signed area).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Polygon(pub Vec<Point>);

impl Polygon {
    pub fn empty() -> Self {
        Polygon(Vec::new())
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn area(&self) -> f64 {
        polygon_area(self)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.0
    }
}

impl From<Quad> for Polygon {
    fn from(q: Quad) -> Self {
        Polygon(q.0.to_vec())
    }
}

impl From<&RBox> for Polygon {
    fn from(b: &RBox) -> Self {
        b.corners().into()
    }
}

/// Shoelace sum; positive for counter-clockwise order in a y-up frame.
pub fn signed_area(pts: &[Point]) -> f64 {
    let n = pts.len();
    if n < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for i in 0..n {
        let p = pts[i];
        let q = pts[(i + 1) % n];
        s += p.x * q.y - q.x * p.y;
    }
    0.5 * s
}

pub fn polygon_area(p: &Polygon) -> f64 {
    signed_area(&p.0).abs()
}

#[inline]
fn orientation(pts: &[Point]) -> f64 {
    if signed_area(pts) >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Inside-or-on test for a convex polygon with the given orientation sign;
/// `len[i]` is the length of edge `i`.
#[inline]
fn contains(poly: &[Point], len: &[f64], sign: f64, p: Point) -> bool {
    let n = poly.len();
    for i in 0..n {
        let a = poly[i];
        let e = poly[(i + 1) % n].sub(a);
        if sign * e.cross(p.sub(a)) < -CLIP_EPS * len[i] {
            return false;
        }
    }
    true
}

/// Intersection point of segments `p0->p1` and `q0->q1` (lengths `lr`,
/// `ls`), endpoints included.
#[inline]
fn segment_hit(p0: Point, p1: Point, lr: f64, q0: Point, q1: Point, ls: f64) -> Option<Point> {
    let r = p1.sub(p0);
    let s = q1.sub(q0);
    let denom = r.cross(s);
    if denom.abs() <= 1e-14 * lr * ls {
        // parallel or collinear: any shared points are vertices caught by `contains`
        return None;
    }
    let qp = q0.sub(p0);
    let t = qp.cross(s) / denom;
    let u = qp.cross(r) / denom;
    let tol_t = CLIP_EPS / lr.max(f64::MIN_POSITIVE);
    let tol_u = CLIP_EPS / ls.max(f64::MIN_POSITIVE);
    if t >= -tol_t && t <= 1.0 + tol_t && u >= -tol_u && u <= 1.0 + tol_u {
        Some(p0.add(r.scale(t)))
    } else {
        None
    }
}

fn edge_lengths(poly: &[Point], out: &mut [f64]) {
    let n = poly.len();
    for i in 0..n {
        out[i] = poly[(i + 1) % n].sub(poly[i]).norm();
    }
}

/// Pushes every candidate vertex of `a ∩ b`: vertices of each polygon lying
/// inside the other, plus all edge/edge crossings.
fn collect_candidates(a: &[Point], la: &[f64], b: &[Point], lb: &[f64], mut push: impl FnMut(Point)) {
    let sa = orientation(a);
    let sb = orientation(b);
    for &p in a {
        if contains(b, lb, sb, p) {
            push(p);
        }
    }
    for &p in b {
        if contains(a, la, sa, p) {
            push(p);
        }
    }
    let (n, m) = (a.len(), b.len());
    for i in 0..n {
        let (a0, a1) = (a[i], a[(i + 1) % n]);
        for j in 0..m {
            if let Some(p) = segment_hit(a0, a1, la[i], b[j], b[(j + 1) % m], lb[j]) {
                push(p);
            }
        }
    }
}

/// Strictly increasing function of the polar angle of `(x, y)` on `[0, 2pi)`,
/// with values in `[0, 4)`.
#[inline]
fn pseudo_angle(x: f64, y: f64) -> f64 {
    let s = x.abs() + y.abs();
    if s == 0.0 {
        return 0.0;
    }
    match (x >= 0.0, y >= 0.0) {
        (true, true) => y / s,
        (false, true) => 1.0 - x / s,
        (false, false) => 2.0 - y / s,
        (true, false) => 3.0 + x / s,
    }
}

/// Orders candidate points around their mean, drops near-duplicates and
/// collinear midpoints, and returns the number of surviving vertices kept at
/// the front of `pts`. The result is wound with negative signed area.
fn order_hull(pts: &mut [Point], keys: &mut [f64]) -> usize {
    let n = pts.len();
    if n < 3 {
        return 0;
    }
    let mut c = Point::default();
    for p in pts.iter() {
        c = c.add(*p);
    }
    let c = c.scale(1.0 / n as f64);
    for (k, p) in keys.iter_mut().zip(pts.iter()) {
        let d = p.sub(c);
        // negated so ascending order is clockwise in a y-up frame
        *k = -pseudo_angle(d.x, d.y);
    }
    // insertion sort: n <= 24 for rectangles
    for i in 1..n {
        let mut j = i;
        while j > 0 && keys[j - 1] > keys[j] {
            keys.swap(j - 1, j);
            pts.swap(j - 1, j);
            j -= 1;
        }
    }
    let mut len = 0usize;
    for i in 0..n {
        let p = pts[i];
        if len > 0 && p.dist(pts[len - 1]) <= CLIP_EPS {
            continue;
        }
        pts[len] = p;
        len += 1;
    }
    while len > 1 && pts[len - 1].dist(pts[0]) <= CLIP_EPS {
        len -= 1;
    }
    // drop collinear midpoints
    while len >= 3 {
        let hit = (0..len).find(|&i| {
            let e1 = pts[i].sub(pts[(i + len - 1) % len]);
            let e2 = pts[(i + 1) % len].sub(pts[i]);
            e1.cross(e2).abs() <= CLIP_EPS * (e1.norm() + e2.norm())
        });
        match hit {
            Some(i) => {
                pts.copy_within(i + 1..len, i);
                len -= 1;
            }
            None => break,
        }
    }
    if len < 3 {
        0
    } else {
        len
    }
}

/// Intersection of two convex polygons; empty when they are disjoint or
/// only touch along an edge or at a point.
pub fn convex_intersection(a: &Polygon, b: &Polygon) -> Polygon {
    if a.len() < 3 || b.len() < 3 {
        return Polygon::empty();
    }
    let mut la = vec![0.0; a.len()];
    let mut lb = vec![0.0; b.len()];
    edge_lengths(&a.0, &mut la);
    edge_lengths(&b.0, &mut lb);
    let mut pts = Vec::with_capacity(a.len() + b.len() + a.len() * b.len());
    collect_candidates(&a.0, &la, &b.0, &lb, |p| pts.push(p));
    let mut keys = vec![0.0; pts.len()];
    let len = order_hull(&mut pts, &mut keys);
    pts.truncate(len);
    if len < 3 || signed_area(&pts).abs() <= 0.0 {
        return Polygon::empty();
    }
    Polygon(pts)
}

/// Area of the overlap of two rotated rectangles, without heap allocation.
pub fn intersection_area(a: &RBox, b: &RBox) -> f64 {
    let qa = a.corners().0;
    let qb = b.corners().0;
    let (mut la, mut lb) = ([0.0; 4], [0.0; 4]);
    edge_lengths(&qa, &mut la);
    edge_lengths(&qb, &mut lb);
    let mut pts = [Point::default(); 24];
    let mut n = 0usize;
    collect_candidates(&qa, &la, &qb, &lb, |p| {
        pts[n] = p;
        n += 1;
    });
    let mut keys = [0.0f64; 24];
    let len = order_hull(&mut pts[..n], &mut keys[..n]);
    signed_area(&pts[..len]).abs()
}

/// Exact rotated-rectangle IoU.
pub fn skew_iou(a: &RBox, b: &RBox) -> f64 {
    let area_a = a.area();
    let area_b = b.area();
    if !(area_a > 0.0 && area_b > 0.0) {
        return 0.0;
    }
    let (dx, dy) = (a.cx - b.cx, a.cy - b.cy);
    let reach = a.radius() + b.radius();
    if dx * dx + dy * dy >= reach * reach {
        return 0.0;
    }
    let inter = intersection_area(a, b);
    let union = area_a + area_b - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

/// Element-wise [`skew_iou`] of two equally long box lists.
pub fn skew_iou_batch(a: &[RBox], b: &[RBox]) -> Result<Vec<f64>> {
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch(format!("{} boxes vs {} boxes", a.len(), b.len())));
    }
    Ok(a.par_iter().zip(b.par_iter()).map(|(x, y)| skew_iou(x, y)).collect())
}

/// Row-major `a.len() x b.len()` matrix of [`skew_iou`].
pub fn skew_iou_matrix(a: &[RBox], b: &[RBox]) -> Vec<f64> {
    let m = b.len();
    let mut out = vec![0.0; a.len() * m];
    if m > 0 {
        out.par_chunks_mut(m).zip(a.par_iter()).for_each(|(row, x)| {
            for (v, y) in row.iter_mut().zip(b) {
                *v = skew_iou(x, y);
            }
        });
    }
    out
}

pub fn aabox_iou(a: &AABox, b: &AABox) -> f64 {
    let iw = (a.xmax.min(b.xmax) - a.xmin.max(b.xmin)).max(0.0);
    let ih = (a.ymax.min(b.ymax) - a.ymin.max(b.ymin)).max(0.0);
    let inter = iw * ih;
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        (inter / union).clamp(0.0, 1.0)
    }
}
