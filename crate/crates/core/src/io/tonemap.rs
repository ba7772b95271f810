//! Global photographic tone mapping for previews.

use crate::raster::{luminance_of, Image};
use image::{DynamicImage, GrayImage, RgbImage};

const LOG_FLOOR: f64 = 1e-6;
const DISPLAY_GAMMA: f64 = 2.2;

/// exp(mean ln(max(L, 1e-6))) over all pixels.
pub fn log_average_luminance(img: &Image) -> f64 {
    let n = img.pixel_count();
    if n == 0 {
        return LOG_FLOOR;
    }
    let sum: f64 = (0..n).map(|i| pixel_luminance(img.pixel(i)).max(LOG_FLOOR).ln()).sum();
    (sum / n as f64).exp()
}

fn pixel_luminance(p: &[f64]) -> f64 {
    if p.len() == 3 {
        luminance_of(p)
    } else {
        p[0]
    }
}

/// Display luminance in [0, 1) for scene luminance `l`. An infinite
/// `white` gives the plain L/(1+L) curve.
pub fn reinhard_luminance(l: f64, log_average: f64, key: f64, white: f64) -> f64 {
    let lm = key * l / log_average;
    let burn = if white.is_finite() { 1.0 + lm / (white * white) } else { 1.0 };
    lm * burn / (1.0 + lm)
}

/// Tone maps to 8-bit with display gamma 2.2. Channels are scaled by the
/// ratio of display to scene luminance, so hue is kept.
pub fn tonemap_reinhard(img: &Image, key: f64, white: f64) -> DynamicImage {
    assert!(key > 0.0, "key must be positive");
    let avg = log_average_luminance(img);
    let (w, h) = (img.width() as u32, img.height() as u32);
    let encode = |v: f64| (255.0 * v.clamp(0.0, 1.0).powf(1.0 / DISPLAY_GAMMA)).round() as u8;
    let mut out = Vec::with_capacity(img.data().len());
    for i in 0..img.pixel_count() {
        let p = img.pixel(i);
        let l = pixel_luminance(p);
        let ratio = if l > 0.0 {
            reinhard_luminance(l, avg, key, white) / l
        } else {
            0.0
        };
        out.extend(p.iter().map(|&c| encode(c * ratio)));
    }
    match img.channels() {
        1 => DynamicImage::ImageLuma8(GrayImage::from_raw(w, h, out).expect("buffer size")),
        3 => DynamicImage::ImageRgb8(RgbImage::from_raw(w, h, out).expect("buffer size")),
        c => panic!("tone mapping needs 1 or 3 channels, got {}", c),
    }
}
