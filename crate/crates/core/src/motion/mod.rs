//! Gaussian pyramids, Horn–Schunck optical flow and backward warping.

mod flow;
mod pyramid;
mod warp;

pub use flow::{estimate_flow, FlowField, FlowParams};
pub use pyramid::{
    blur, build_pyramid, downsample, half_dims, level_dims, max_levels, resize_bilinear, resize_nearest, Pyramid,
    MIN_LEVEL_SIDE,
};
pub use warp::{upscale_flow, warp};
