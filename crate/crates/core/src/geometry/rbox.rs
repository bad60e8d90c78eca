use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use super::Point;
use crate::error::{Error, Result};

/// Five-parameter rotated rectangle in the 90-degree convention.
///
/// `w` is the side along `(cos theta, sin theta)`; `h` is the other side.
/// Fields are public so that kernels may carry degenerate (zero-size)
/// boxes; [`RBox::new`] is the validating constructor.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RBox {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
    pub theta: f64,
}

impl RBox {
    /// Builds a canonical box, rejecting non-finite or non-positive sizes.
    pub fn new(cx: f64, cy: f64, w: f64, h: f64, theta: f64) -> Result<Self> {
        let b = Self::raw(cx, cy, w, h, theta);
        if ![cx, cy, w, h, theta].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidBox(format!("non-finite parameter in {b:?}")));
        }
        if w <= 0.0 || h <= 0.0 {
            return Err(Error::InvalidBox(format!("non-positive size in {b:?}")));
        }
        Ok(b.canonicalize())
    }

    /// Unchecked constructor; the angle is stored as given.
    pub const fn raw(cx: f64, cy: f64, w: f64, h: f64, theta: f64) -> Self {
        Self { cx, cy, w, h, theta }
    }

    pub fn is_valid(&self) -> bool {
        [self.cx, self.cy, self.w, self.h, self.theta].iter().all(|v| v.is_finite())
            && self.w > 0.0
            && self.h > 0.0
    }

    pub fn is_canonical(&self) -> bool {
        (-FRAC_PI_2..0.0).contains(&self.theta)
    }

    /// Re-expresses the box with `theta` in `[-pi/2, 0)`; the point set is unchanged.
    pub fn canonicalize(self) -> Self {
        let (theta, w, h) = normalize_angle(self.theta, self.w, self.h);
        Self { theta, w, h, ..self }
    }

    pub fn center(&self) -> Point {
        Point::new(self.cx, self.cy)
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    /// Unit vectors along the `w` and `h` sides.
    #[inline]
    pub fn axes(&self) -> (Point, Point) {
        let (s, c) = self.theta.sin_cos();
        (Point::new(c, s), Point::new(-s, c))
    }

    /// The four vertices in canonical winding (see [`Quad`]).
    pub fn corners(&self) -> Quad {
        let (u, v) = self.axes();
        let c = self.center();
        let hu = u.scale(self.w * 0.5);
        let hv = v.scale(self.h * 0.5);
        Quad([
            c.sub(hu).sub(hv),
            c.sub(hu).add(hv),
            c.add(hu).add(hv),
            c.add(hu).sub(hv),
        ])
    }

    pub fn hbb(&self) -> AABox {
        hbb_of(self)
    }

    /// Radius of the circumscribed circle.
    pub fn radius(&self) -> f64 {
        0.5 * self.w.hypot(self.h)
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Self {
        Self { cx: self.cx + dx, cy: self.cy + dy, ..*self }
    }
}

/// Maps `theta` into `[-pi/2, 0)`, swapping `w` and `h` for every odd
/// quarter turn removed.
pub fn normalize_angle(theta: f64, w: f64, h: f64) -> (f64, f64, f64) {
    let k = ((theta + FRAC_PI_2) / FRAC_PI_2).floor();
    let mut t = theta - k * FRAC_PI_2;
    let mut swap = (k as i64).rem_euclid(2) == 1;
    // floor() can leave t a rounding step outside the half-open range
    if t >= 0.0 {
        t -= FRAC_PI_2;
        swap = !swap;
    } else if t < -FRAC_PI_2 {
        t += FRAC_PI_2;
        swap = !swap;
    }
    if swap {
        (t, h, w)
    } else {
        (t, w, h)
    }
}

/// Four ordered vertices.
///
/// The canonical winding is counter-clockwise as seen on screen (y down),
/// which makes the shoelace signed area computed with the usual
/// `x_i * y_{i+1} - x_{i+1} * y_i` sum negative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quad(pub [Point; 4]);

impl Quad {
    /// Builds a quad from vertices in any cyclic order, reversing the
    /// winding if needed so it is canonical. The first vertex is kept.
    pub fn from_points(points: [Point; 4]) -> Self {
        let q = Quad(points);
        if q.signed_area() > 0.0 {
            Quad([points[0], points[3], points[2], points[1]])
        } else {
            q
        }
    }

    pub fn from_flat(c: [f64; 8]) -> Self {
        Quad([
            Point::new(c[0], c[1]),
            Point::new(c[2], c[3]),
            Point::new(c[4], c[5]),
            Point::new(c[6], c[7]),
        ])
    }

    pub fn to_flat(&self) -> [f64; 8] {
        let p = &self.0;
        [p[0].x, p[0].y, p[1].x, p[1].y, p[2].x, p[2].y, p[3].x, p[3].y]
    }

    pub fn points(&self) -> &[Point; 4] {
        &self.0
    }

    pub fn signed_area(&self) -> f64 {
        super::signed_area(&self.0)
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    pub fn centroid(&self) -> Point {
        let s = self.0.iter().fold(Point::default(), |acc, p| acc.add(*p));
        s.scale(0.25)
    }

    /// Largest distance from a vertex of either quad to the nearest vertex
    /// of the other. Zero iff the two vertex sets coincide.
    pub fn set_distance(&self, other: &Quad) -> f64 {
        fn one_way(a: &Quad, b: &Quad) -> f64 {
            a.0.iter()
                .map(|p| b.0.iter().map(|q| p.dist(*q)).fold(f64::INFINITY, f64::min))
                .fold(0.0, f64::max)
        }
        one_way(self, other).max(one_way(other, self))
    }

    pub fn map(&self, f: impl Fn(Point) -> Point) -> Quad {
        Quad(self.0.map(f))
    }
}

/// Axis-aligned box.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AABox {
    pub xmin: f64,
    pub ymin: f64,
    pub xmax: f64,
    pub ymax: f64,
}

impl AABox {
    pub fn new(xmin: f64, ymin: f64, xmax: f64, ymax: f64) -> Self {
        Self { xmin, ymin, xmax, ymax }
    }

    pub fn width(&self) -> f64 {
        self.xmax - self.xmin
    }

    pub fn height(&self) -> f64 {
        self.ymax - self.ymin
    }

    pub fn area(&self) -> f64 {
        self.width().max(0.0) * self.height().max(0.0)
    }

    pub fn overlaps(&self, o: &AABox) -> bool {
        self.xmin < o.xmax && o.xmin < self.xmax && self.ymin < o.ymax && o.ymin < self.ymax
    }

    /// The rectangle as a `theta = -pi/2` rotated box.
    pub fn to_rbox(&self) -> RBox {
        RBox::raw(
            0.5 * (self.xmin + self.xmax),
            0.5 * (self.ymin + self.ymax),
            self.height(),
            self.width(),
            -FRAC_PI_2,
        )
    }
}

/// Smallest axis-aligned box containing the corners of `b`.
pub fn hbb_of(b: &RBox) -> AABox {
    let (s, c) = b.theta.sin_cos();
    let ex = 0.5 * (b.w * c.abs() + b.h * s.abs());
    let ey = 0.5 * (b.w * s.abs() + b.h * c.abs());
    AABox::new(b.cx - ex, b.cy - ey, b.cx + ex, b.cy + ey)
}

/// Box in the 180-degree long-side convention: `theta` in `[-pi/2, pi/2)`
/// is the angle from `+x` to the long side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LongSideBox {
    pub cx: f64,
    pub cy: f64,
    pub long: f64,
    pub short: f64,
    pub theta: f64,
}

fn wrap_half_turn(t: f64) -> f64 {
    let mut r = (t + FRAC_PI_2).rem_euclid(PI) - FRAC_PI_2;
    if r >= FRAC_PI_2 {
        r -= PI;
    }
    r
}

pub fn to_long_side(b: &RBox) -> LongSideBox {
    let (long, short, dir) = if b.w >= b.h {
        (b.w, b.h, b.theta)
    } else {
        (b.h, b.w, b.theta + FRAC_PI_2)
    };
    LongSideBox { cx: b.cx, cy: b.cy, long, short, theta: wrap_half_turn(dir) }
}

pub fn from_long_side(l: &LongSideBox) -> RBox {
    RBox::raw(l.cx, l.cy, l.long, l.short, l.theta).canonicalize()
}
