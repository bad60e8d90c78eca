use serde::{Deserialize, Serialize};

use super::{Point, RBox};

/// Box-level counterpart of the geometric image augmentations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RigidTransform {
    /// Mirror across the vertical center line: `x -> W - x`.
    FlipH,
    /// Mirror across the horizontal center line: `y -> H - y`.
    FlipV,
    /// Rotation by the given angle (radians, same sense as box angles)
    /// about the image center.
    Rotate(f64),
}

impl RigidTransform {
    pub fn apply_point(&self, p: Point, image_w: f64, image_h: f64) -> Point {
        match *self {
            RigidTransform::FlipH => Point::new(image_w - p.x, p.y),
            RigidTransform::FlipV => Point::new(p.x, image_h - p.y),
            RigidTransform::Rotate(a) => {
                let c = Point::new(0.5 * image_w, 0.5 * image_h);
                let (s, co) = a.sin_cos();
                let d = p.sub(c);
                Point::new(c.x + co * d.x - s * d.y, c.y + s * d.x + co * d.y)
            }
        }
    }
}

pub fn transform_box(b: &RBox, t: RigidTransform, image_w: f64, image_h: f64) -> RBox {
    let c = t.apply_point(b.center(), image_w, image_h);
    let theta = match t {
        // a mirrored axis direction (cos, sin) -> (-cos, sin) or (cos, -sin)
        // is the line at angle -theta
        RigidTransform::FlipH | RigidTransform::FlipV => -b.theta,
        RigidTransform::Rotate(a) => b.theta + a,
    };
    RBox::raw(c.x, c.y, b.w, b.h, theta).canonicalize()
}
