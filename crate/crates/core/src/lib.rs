//! Geometry, coding, matching, feature reconstruction, losses,
//! post-processing, evaluation and DOTA data handling for refined
//! single-stage rotated-object detectors.
//!
//! Boxes are [`geometry::RBox`] values `(cx, cy, w, h, theta)` with
//! `theta` in `[-pi/2, 0)` and image `y` pointing down. The guide under
//! `book/` walks through each module with runnable examples.

pub mod anchors;
pub mod coding;
pub mod dataio;
pub mod error;
pub mod evalkit;
pub mod frm;
pub mod geometry;
pub mod losses;
pub mod matching;
pub mod postproc;

pub use error::{Error, Result};

// The guide's code blocks run as doc-tests so the book cannot drift from the API.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/geometry.md")]
    mod geometry {}
    #[doc = include_str!("../../../book/src/matching.md")]
    mod matching {}
    #[doc = include_str!("../../../book/src/frm.md")]
    mod frm {}
    #[doc = include_str!("../../../book/src/losses.md")]
    mod losses {}
    #[doc = include_str!("../../../book/src/postproc.md")]
    mod postproc {}
    #[doc = include_str!("../../../book/src/dota.md")]
    mod dota {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
