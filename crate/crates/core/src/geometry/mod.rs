//! Rotated-box representations, conversions, rigid transforms and exact
//! rotated-rectangle overlap (SkewIoU).
//!
//! Coordinates are image pixels: origin top-left, `x` to the right, `y`
//! downward. A box angle `theta` rotates the box's `w` axis from `+x`
//! toward `+y`, so the `w` axis direction is `(cos theta, sin theta)` and
//! the `h` axis direction is `(-sin theta, cos theta)`.
//!
//! Boxes are kept in the 90-degree convention: `theta` in `[-pi/2, 0)`.
//! A box whose natural angle is `0` is stored at `-pi/2` with `w` and `h`
//! swapped, so at `theta == -pi/2` the `w` side runs along the image `y` axis.

mod minrect;
mod polygon;
mod rbox;
mod transform;

pub use minrect::{convex_hull, min_area_rect, min_area_rect_points};
pub use polygon::{
    aabox_iou, convex_intersection, intersection_area, polygon_area, signed_area, skew_iou, skew_iou_batch,
    skew_iou_matrix,
    Polygon,
};
pub use rbox::{from_long_side, hbb_of, normalize_angle, to_long_side, AABox, LongSideBox, Quad, RBox};
pub use transform::{transform_box, RigidTransform};

use serde::{Deserialize, Serialize};

/// Tolerance used for on-edge classification while clipping, in pixels.
pub const CLIP_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl std::ops::Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::add(self, o)
    }
}

impl std::ops::Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::sub(self, o)
    }
}

impl Point {
    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    #[allow(clippy::should_implement_trait)]
    pub fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }

    #[inline]
    #[allow(clippy::should_implement_trait)]
    pub fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }

    #[inline]
    pub fn scale(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }

    #[inline]
    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 2D cross product.
    #[inline]
    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Point) -> f64 {
        self.sub(o).norm()
    }
}

impl From<(f64, f64)> for Point {
    fn from((x, y): (f64, f64)) -> Self {
        Point::new(x, y)
    }
}
