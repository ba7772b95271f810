//! HDR video synthesis from alternating-exposure LDR frames.
//!
//! Each frame is split into a static background, recovered by low-rank
//! matrix completion across a three-frame window, and a moving foreground,
//! estimated by locally adaptive kernel regression inside a coarse-to-fine
//! motion pyramid.

pub mod error;
pub mod imaging;
pub mod io;
pub mod kernel;
pub mod lowrank;
pub mod metrics;
pub mod motion;
pub mod optimizer;
pub mod pipeline;
pub mod raster;

pub use error::{Error, Result};
pub use raster::{Image, Mask};
