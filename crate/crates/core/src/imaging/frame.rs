//! LDR frames and the conversions between codes and radiance.

use super::crf::ResponseCurve;
use crate::error::{Error, Result};
use crate::raster::Image;

/// Linear radiance map. Values are finite and nonnegative.
pub type IrradianceFrame = Image;

/// Integer camera codes plus the exposure time they were captured with.
#[derive(Debug, Clone, PartialEq)]
pub struct LdrFrame {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<u16>,
    pub exposure_s: f64,
}

impl LdrFrame {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<u16>, exposure_s: f64) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidInput(format!("frames have 1 or 3 channels, got {}", channels)));
        }
        if data.len() != width * height * channels {
            return Err(Error::DimensionMismatch(format!(
                "{}x{}x{} frame needs {} codes, got {}",
                width,
                height,
                channels,
                width * height * channels,
                data.len()
            )));
        }
        if !(exposure_s > 0.0 && exposure_s.is_finite()) {
            return Err(Error::InvalidInput(format!("exposure must be positive, got {}", exposure_s)));
        }
        Ok(LdrFrame {
            width,
            height,
            channels,
            data,
            exposure_s,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn code(&self, x: usize, y: usize, c: usize) -> u16 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    pub fn pixel(&self, index: usize) -> &[u16] {
        &self.data[index * self.channels..(index + 1) * self.channels]
    }

    /// Codes as a floating-point image.
    pub fn to_image(&self) -> Image {
        let data = self.data.iter().map(|&z| z as f64).collect();
        Image::new(self.width, self.height, self.channels, data).expect("frame shape is valid")
    }

    pub(crate) fn check_against(&self, crf: &ResponseCurve) -> Result<()> {
        crf.check_channels(self.channels)?;
        if let Some(i) = self.data.iter().position(|&z| z > crf.z_max()) {
            return Err(Error::InvalidInput(format!(
                "code {} at index {} exceeds z_max {}",
                self.data[i],
                i,
                crf.z_max()
            )));
        }
        Ok(())
    }
}

/// Radiance exp(g(z))/Δt per pixel, with g extrapolated outside its monotone range.
pub fn inverse_response(frame: &LdrFrame, crf: &ResponseCurve) -> Result<IrradianceFrame> {
    frame.check_against(crf)?;
    let ch = frame.channels;
    let data = frame
        .data
        .iter()
        .enumerate()
        .map(|(i, &z)| crf.radiance(crf.channel_for(i % ch), z as f64, frame.exposure_s))
        .collect();
    Image::new(frame.width, frame.height, ch, data)
}

/// Noiseless forward model: code = round(g⁻¹(ln(a·Δt))) clamped to [0, z_max].
pub fn apply_response(frame: &IrradianceFrame, crf: &ResponseCurve, exposure_s: f64) -> Result<LdrFrame> {
    crf.check_channels(frame.channels())?;
    let ch = frame.channels();
    let z_max = crf.z_max() as f64;
    let data = frame
        .data()
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            let e = a * exposure_s;
            if !(e > 0.0) {
                return 0;
            }
            let z = crf.code_for(crf.channel_for(i % ch), e.ln()).round();
            if z.is_nan() {
                0
            } else {
                z.clamp(0.0, z_max) as u16
            }
        })
        .collect();
    LdrFrame::new(frame.width(), frame.height(), ch, data, exposure_s)
}

/// Real-valued code a pixel of radiance `a` would receive at exposure `dt`,
/// normalized by z_max and gamma-compressed. Not clamped above so values
/// past saturation stay distinguishable.
#[inline]
pub fn boosted_value(crf: &ResponseCurve, channel: usize, a: f64, dt: f64, gamma: f64) -> f64 {
    let e = a * dt;
    if !(e > 0.0) {
        return 0.0;
    }
    let z = crf.code_for(channel, e.ln()) / crf.z_max() as f64;
    z.max(0.0).powf(1.0 / gamma)
}

/// Inverse of [`boosted_value`]: radiance at the given exposure.
#[inline]
pub fn unboost_value(crf: &ResponseCurve, channel: usize, v: f64, dt: f64, gamma: f64) -> f64 {
    let z = v.max(0.0).powf(gamma) * crf.z_max() as f64;
    crf.radiance(channel, z, dt)
}

/// Re-expose a frame to `target_exposure_s` and gamma-compress the
/// normalized code values.
pub fn exposure_boost(frame: &LdrFrame, crf: &ResponseCurve, target_exposure_s: f64, gamma: f64) -> Result<Image> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidInput(format!("gamma must be positive, got {}", gamma)));
    }
    let radiance = inverse_response(frame, crf)?;
    Ok(boost_radiance(&radiance, crf, target_exposure_s, gamma))
}

pub(crate) fn boost_radiance(radiance: &Image, crf: &ResponseCurve, dt: f64, gamma: f64) -> Image {
    let ch = radiance.channels();
    let data = radiance
        .data()
        .iter()
        .enumerate()
        .map(|(i, &a)| boosted_value(crf, crf.channel_for(i % ch), a, dt, gamma))
        .collect();
    Image::new(radiance.width(), radiance.height(), ch, data).expect("same shape")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log_identity() -> ResponseCurve {
        let t = (0..=255).map(|z| (z as f64 + 1.0).ln()).collect();
        ResponseCurve::new(vec![t], 255, 13).unwrap()
    }

    fn single(z: u16, dt: f64) -> LdrFrame {
        LdrFrame::new(1, 1, 1, vec![z], dt).unwrap()
    }

    #[test]
    fn radiance_examples() {
        let crf = log_identity();
        let a = inverse_response(&single(0, 1.0), &crf).unwrap();
        assert!((a.data()[0] - 1.0).abs() < 1e-12);
        let a = inverse_response(&single(99, 0.5), &crf).unwrap();
        assert!((a.data()[0] - 200.0).abs() < 1e-9);
    }

    #[test]
    fn saturated_code_exceeds_in_range_maximum() {
        let mut t: Vec<f64> = (0..=255).map(|z| 2.2 * ((z as f64 + 1.0) / 256.0).ln()).collect();
        for z in 243..=255 {
            t[z] = t[242];
        }
        let crf = ResponseCurve::new(vec![t.clone()], 255, 13).unwrap();
        let a = inverse_response(&single(255, 1.0), &crf).unwrap().data()[0];
        assert!(a > t[242].exp());
    }

    #[test]
    fn forward_examples() {
        let crf = log_identity();
        let img = Image::new(1, 1, 1, vec![200.0]).unwrap();
        assert_eq!(apply_response(&img, &crf, 0.5).unwrap().data[0], 99);
        let img = Image::new(1, 1, 1, vec![1e9]).unwrap();
        assert_eq!(apply_response(&img, &crf, 1.0).unwrap().data[0], 255);
        let img = Image::new(1, 1, 1, vec![0.0]).unwrap();
        assert_eq!(apply_response(&img, &crf, 1.0).unwrap().data[0], 0);
    }

    #[test]
    fn boost_at_own_exposure_returns_codes() {
        let crf = log_identity();
        let codes: Vec<u16> = (14..242).collect();
        let n = codes.len();
        let f = LdrFrame::new(n, 1, 1, codes.clone(), 0.01).unwrap();
        let b = exposure_boost(&f, &crf, 0.01, 1.0).unwrap();
        for (v, z) in b.data().iter().zip(&codes) {
            assert!((v * 255.0 - *z as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn boost_to_longer_exposure_brightens() {
        let crf = log_identity();
        let f = single(128, 0.01);
        let b = exposure_boost(&f, &crf, 0.1, 1.0).unwrap().data()[0] * 255.0;
        // g(z') = ln(129) + ln(10)  =>  z' = 1290 - 1 (past the table, on the extrapolated line)
        let expect = crf.code_for(0, (129.0f64).ln() + (10.0f64).ln());
        assert!((b - expect).abs() < 1e-9);
        assert!(b > 128.0);
    }

    #[test]
    fn unit_value_is_gamma_fixed_point() {
        let crf = log_identity();
        let v = boosted_value(&crf, 0, 256.0, 1.0, 2.2);
        assert!((v - 1.0).abs() < 1e-12);
        let a = unboost_value(&crf, 0, v, 1.0, 2.2);
        assert!((a - 256.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_out_of_range_codes() {
        let crf = log_identity();
        assert!(inverse_response(&single(300, 1.0), &crf).is_err());
    }
}
