//! File formats, configuration and synthetic data.

pub mod config;
pub mod ldr;
pub mod pfm;
pub mod rgbe;
pub mod synthetic;
pub mod text;
pub mod tonemap;

pub use config::{RuleKind, RunConfig, DEFAULT_CONFIG};
pub use ldr::{load_ldr, load_mask, save_ldr, save_mask};
pub use pfm::{load_pfm, read_pfm, save_pfm, write_pfm};
pub use rgbe::{decode_pixel, encode_pixel, load_rgbe, read_rgbe, save_rgbe, write_rgbe};
pub use synthetic::{generate_synthetic, render_truth, MovingRect, SceneSpec, SyntheticSequence};
pub use text::{format_crf, format_manifest, load_crf, load_manifest, parse_crf, parse_manifest, ManifestEntry};
pub use tonemap::{log_average_luminance, reinhard_luminance, tonemap_reinhard};

use crate::error::{Error, Result};
use crate::raster::Image;
use std::path::Path;

/// Loads an HDR frame by extension: `.pfm` or `.hdr`.
pub fn load_hdr(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    match extension(path).as_deref() {
        Some("pfm") => load_pfm(path),
        Some("hdr") | Some("rgbe") => load_rgbe(path),
        _ => Err(Error::InvalidInput(format!("{}: expected a .pfm or .hdr file", path.display()))),
    }
}

/// Saves an HDR frame by extension: `.pfm` or `.hdr`.
pub fn save_hdr(path: impl AsRef<Path>, img: &Image) -> Result<()> {
    let path = path.as_ref();
    match extension(path).as_deref() {
        Some("pfm") => save_pfm(path, img),
        Some("hdr") | Some("rgbe") => save_rgbe(path, img),
        _ => Err(Error::InvalidInput(format!("{}: expected a .pfm or .hdr file", path.display()))),
    }
}

fn extension(path: &Path) -> Option<String> {
    path.extension().map(|e| e.to_string_lossy().to_ascii_lowercase())
}
