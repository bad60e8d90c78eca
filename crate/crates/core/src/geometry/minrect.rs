use super::{signed_area, Point, Quad, RBox};
use crate::error::{Error, Result};

/// Monotone-chain convex hull, counter-clockwise in a y-up frame, without
/// collinear points.
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let turn = |o: Point, a: Point, b: Point| a.sub(o).cross(b.sub(o));
    let mut hull: Vec<Point> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        while hull.len() >= 2 && turn(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower && turn(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

pub fn min_area_rect(q: &Quad) -> Result<RBox> {
    min_area_rect_points(&q.0)
}

/// Minimum-area enclosing rotated rectangle of a point set.
///
/// An optimal rectangle has one side collinear with a hull edge, so every
/// hull edge orientation is evaluated. Candidates whose areas agree to a
/// relative 1e-9 are ranked by the smallest `|theta|` after canonicalization.
pub fn min_area_rect_points(points: &[Point]) -> Result<RBox> {
    if points.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
        return Err(Error::DegenerateQuad);
    }
    let hull = convex_hull(points);
    if hull.len() < 3 {
        return Err(Error::DegenerateQuad);
    }
    let span = hull
        .iter()
        .flat_map(|p| hull.iter().map(move |q| p.dist(*q)))
        .fold(0.0, f64::max);
    if signed_area(&hull).abs() <= 1e-12 * span * span {
        return Err(Error::DegenerateQuad);
    }

    let n = hull.len();
    let mut best: Option<(f64, RBox)> = None;
    for i in 0..n {
        let e = hull[(i + 1) % n].sub(hull[i]);
        let len = e.norm();
        if len == 0.0 {
            continue;
        }
        let u = e.scale(1.0 / len);
        let v = Point::new(-u.y, u.x);
        let (mut umin, mut umax, mut vmin, mut vmax) =
            (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for p in &hull {
            let pu = p.dot(u);
            let pv = p.dot(v);
            umin = umin.min(pu);
            umax = umax.max(pu);
            vmin = vmin.min(pv);
            vmax = vmax.max(pv);
        }
        let w = umax - umin;
        let h = vmax - vmin;
        let area = w * h;
        let c = u.scale(0.5 * (umin + umax)).add(v.scale(0.5 * (vmin + vmax)));
        let cand = RBox::raw(c.x, c.y, w, h, u.y.atan2(u.x)).canonicalize();
        best = match best {
            None => Some((area, cand)),
            Some((ba, bb)) => {
                let tie = (area - ba).abs() <= 1e-9 * ba;
                if (!tie && area < ba) || (tie && cand.theta.abs() < bb.theta.abs()) {
                    Some((area, cand))
                } else {
                    Some((ba, bb))
                }
            }
        };
    }
    best.map(|(_, b)| b).ok_or(Error::DegenerateQuad)
}
