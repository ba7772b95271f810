//! LDR frames and masks as PNG or PPM/PGM, through the `image` crate.

use crate::error::{Error, Result};
use crate::imaging::LdrFrame;
use crate::raster::Mask;
use image::{DynamicImage, GrayImage, ImageBuffer, Luma, Rgb};
use std::path::Path;

/// Loads 8- or 16-bit grey or RGB codes. Alpha is dropped.
pub fn load_ldr(path: impl AsRef<Path>, exposure_s: f64) -> Result<LdrFrame> {
    let img = image::open(path.as_ref())?;
    let grey = !img.color().has_color();
    let sixteen = img.color().bytes_per_pixel() / img.color().channel_count() as u8 > 1;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let (channels, data): (usize, Vec<u16>) = match (grey, sixteen) {
        (true, false) => (1, img.to_luma8().into_raw().into_iter().map(u16::from).collect()),
        (true, true) => (1, img.to_luma16().into_raw()),
        (false, false) => (3, img.to_rgb8().into_raw().into_iter().map(u16::from).collect()),
        (false, true) => (3, img.to_rgb16().into_raw()),
    };
    LdrFrame::new(w, h, channels, data, exposure_s)
}

/// Saves codes as 8-bit when they all fit, 16-bit otherwise. The format
/// follows the file extension.
pub fn save_ldr(path: impl AsRef<Path>, frame: &LdrFrame) -> Result<()> {
    let (w, h) = (frame.width as u32, frame.height as u32);
    let wide = frame.data.iter().any(|&z| z > 255);
    let shape = || Error::InvalidInput("frame shape does not fit an image buffer".into());
    let img = match (frame.channels, wide) {
        (1, false) => DynamicImage::ImageLuma8(
            ImageBuffer::<Luma<u8>, _>::from_raw(w, h, frame.data.iter().map(|&z| z as u8).collect()).ok_or_else(shape)?,
        ),
        (1, true) => DynamicImage::ImageLuma16(ImageBuffer::from_raw(w, h, frame.data.clone()).ok_or_else(shape)?),
        (3, false) => DynamicImage::ImageRgb8(
            ImageBuffer::<Rgb<u8>, _>::from_raw(w, h, frame.data.iter().map(|&z| z as u8).collect()).ok_or_else(shape)?,
        ),
        (3, true) => DynamicImage::ImageRgb16(ImageBuffer::from_raw(w, h, frame.data.clone()).ok_or_else(shape)?),
        (c, _) => return Err(Error::InvalidInput(format!("cannot save {} channels", c))),
    };
    img.save(path)?;
    Ok(())
}

/// Set pixels white, others black.
pub fn save_mask(path: impl AsRef<Path>, mask: &Mask) -> Result<()> {
    let (w, h) = mask.dims();
    let data = mask.data().iter().map(|&m| if m { 255 } else { 0 }).collect();
    let img = GrayImage::from_raw(w as u32, h as u32, data).expect("mask shape matches buffer");
    img.save(path)?;
    Ok(())
}

pub fn load_mask(path: impl AsRef<Path>) -> Result<Mask> {
    let img = image::open(path)?.to_luma8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    Mask::new(w, h, img.into_raw().into_iter().map(|v| v >= 128).collect())
}
