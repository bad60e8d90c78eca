//! Box <-> offset coding relative to an anchor.
//!
//! ```text
//! tx = (x - xa) / wa      ty = (y - ya) / ha
//! tw = ln(w / wa)         th = ln(h / ha)      ttheta = theta - theta_a
//! ```
//!
//! Because a rectangle is unchanged by a quarter turn combined with a
//! width/height swap, `ttheta` is reduced to `(-pi/4, pi/4]` by re-expressing
//! the ground truth before the log-ratios are taken. Decoding therefore
//! reproduces the ground truth's point set, not necessarily its raw
//! parameters.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::RBox;

pub use crate::geometry::normalize_angle;

/// Largest `|tw|`, `|th|` accepted by [`decode`].
pub const MAX_LOG_RATIO: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Delta5 {
    pub tx: f64,
    pub ty: f64,
    pub tw: f64,
    pub th: f64,
    pub ttheta: f64,
}

impl Delta5 {
    pub const ZERO: Delta5 = Delta5 { tx: 0.0, ty: 0.0, tw: 0.0, th: 0.0, ttheta: 0.0 };

    pub fn to_array(&self) -> [f64; 5] {
        [self.tx, self.ty, self.tw, self.th, self.ttheta]
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        Delta5 { tx: a[0], ty: a[1], tw: a[2], th: a[3], ttheta: a[4] }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

pub fn encode(gt: &RBox, anchor: &RBox) -> Delta5 {
    let (mut w, mut h) = (gt.w, gt.h);
    let mut dt = gt.theta - anchor.theta;
    while dt > FRAC_PI_4 {
        dt -= FRAC_PI_2;
        std::mem::swap(&mut w, &mut h);
    }
    while dt <= -FRAC_PI_4 {
        dt += FRAC_PI_2;
        std::mem::swap(&mut w, &mut h);
    }
    Delta5 {
        tx: (gt.cx - anchor.cx) / anchor.w,
        ty: (gt.cy - anchor.cy) / anchor.h,
        tw: (w / anchor.w).ln(),
        th: (h / anchor.h).ln(),
        ttheta: dt,
    }
}

/// Inverse of [`encode`], canonicalized.
pub fn decode(d: &Delta5, anchor: &RBox) -> Result<RBox> {
    if !d.is_finite() {
        return Err(Error::NonFinite(format!("delta {d:?}")));
    }
    if d.tw.abs() > MAX_LOG_RATIO || d.th.abs() > MAX_LOG_RATIO {
        return Err(Error::NonFinite(format!(
            "log size ratio ({}, {}) exceeds {MAX_LOG_RATIO}",
            d.tw, d.th
        )));
    }
    let b = RBox::raw(
        anchor.cx + d.tx * anchor.w,
        anchor.cy + d.ty * anchor.h,
        anchor.w * d.tw.exp(),
        anchor.h * d.th.exp(),
        anchor.theta + d.ttheta,
    );
    Ok(b.canonicalize())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    const A: RBox = RBox::raw(50.0, 40.0, 32.0, 16.0, -0.6);

    #[test]
    fn identity_encodes_to_zero() {
        assert_eq!(encode(&A, &A), Delta5::ZERO);
        assert_eq!(decode(&Delta5::ZERO, &A).unwrap(), A.canonicalize());
    }

    #[test]
    fn forced_values() {
        let d = encode(&RBox { cx: A.cx + A.w, ..A }, &A);
        assert_abs_diff_eq!(d.tx, 1.0);
        let d = encode(&RBox { w: 2.0 * A.w, ..A }, &A);
        assert_abs_diff_eq!(d.tw, std::f64::consts::LN_2, epsilon = 1e-15);
    }

    #[test]
    fn overflow_is_rejected() {
        let d = Delta5 { tw: 25.0, ..Delta5::ZERO };
        assert!(matches!(decode(&d, &A), Err(Error::NonFinite(_))));
        let d = Delta5 { tx: f64::NAN, ..Delta5::ZERO };
        assert!(decode(&d, &A).is_err());
    }

    #[test]
    fn angle_wrap_swaps_sides() {
        // gt is the anchor turned by 80 degrees: encoded as -10 degrees with w/h swapped
        let gt = RBox::raw(A.cx, A.cy, A.w, A.h, A.theta + 80f64.to_radians()).canonicalize();
        let d = encode(&gt, &A);
        assert!(d.ttheta > -FRAC_PI_4 && d.ttheta <= FRAC_PI_4);
        assert_abs_diff_eq!(d.ttheta, -10f64.to_radians(), epsilon = 1e-12);
        assert_abs_diff_eq!(d.tw, (A.h / A.w).ln(), epsilon = 1e-12);
        let back = decode(&d, &A).unwrap();
        assert!(back.corners().set_distance(&gt.corners()) < 1e-9);
    }

    fn rbox() -> impl Strategy<Value = RBox> {
        (-500.0..500.0f64, -500.0..500.0f64, 1.0..300.0f64, 1.0..300.0f64, -FRAC_PI_2..0.0f64)
            .prop_map(|(x, y, w, h, t)| RBox::raw(x, y, w, h, t))
    }

    proptest! {
        #[test]
        fn roundtrip_preserves_corner_set(gt in rbox(), anchor in rbox()) {
            let d = encode(&gt, &anchor);
            prop_assert!(d.is_finite());
            prop_assert!(d.ttheta > -FRAC_PI_4 && d.ttheta <= FRAC_PI_4);
            let back = decode(&d, &anchor).unwrap();
            prop_assert!(back.is_canonical());
            prop_assert!(back.corners().set_distance(&gt.corners()) < 1e-6);
        }

        #[test]
        fn translation_equivariant(gt in rbox(), anchor in rbox(), dx in -100.0..100.0f64, dy in -100.0..100.0f64) {
            let a = encode(&gt, &anchor).to_array();
            let b = encode(&gt.translate(dx, dy), &anchor.translate(dx, dy)).to_array();
            for (x, y) in a.iter().zip(b.iter()) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }

        #[test]
        fn normalize_keeps_corners(t in -10.0..10.0f64, w in 0.5..50.0f64, h in 0.5..50.0f64) {
            let (t2, w2, h2) = normalize_angle(t, w, h);
            prop_assert!((-FRAC_PI_2..0.0).contains(&t2));
            let a = RBox::raw(0.0, 0.0, w, h, t).corners();
            let b = RBox::raw(0.0, 0.0, w2, h2, t2).corners();
            prop_assert!(a.set_distance(&b) < 1e-9);
        }
    }
}
