//! logPSNR and perceptually uniform PSNR between HDR frames.

use crate::error::{Error, Result};
use crate::raster::Image;
use serde::Serialize;
use std::collections::BTreeMap;
use std::sync::OnceLock;

/// Score reported for identical frames.
pub const PSNR_CAP: f64 = 100.0;

const PU_TABLE: &str = include_str!("../data/pu_curve_v1.csv");

fn luminance(img: &Image) -> Vec<f64> {
    if img.channels() == 1 {
        img.data().to_vec()
    } else {
        img.luminance().into_data()
    }
}

fn check(test: &Image, reference: &Image) -> Result<()> {
    if !test.same_shape(reference) {
        return Err(Error::DimensionMismatch(format!(
            "test {}x{}x{} vs reference {}x{}x{}",
            test.width(),
            test.height(),
            test.channels(),
            reference.width(),
            reference.height(),
            reference.channels()
        )));
    }
    Ok(())
}

fn psnr(peak: f64, mse: f64) -> f64 {
    if mse <= 0.0 {
        return PSNR_CAP;
    }
    (10.0 * (peak * peak / mse).log10()).min(PSNR_CAP)
}

/// PSNR on log10 luminance clamped to [1e-5·peak, peak]. `peak` defaults
/// to the largest reference luminance.
pub fn log_psnr(test: &Image, reference: &Image, peak: Option<f64>) -> Result<f64> {
    check(test, reference)?;
    let lt = luminance(test);
    let lr = luminance(reference);
    let peak = peak.unwrap_or_else(|| lr.iter().copied().fold(0.0, f64::max));
    if !(peak > 0.0) {
        return Err(Error::InvalidInput("log PSNR needs a positive peak".into()));
    }
    let floor = 1e-5 * peak;
    let enc = |v: f64| v.clamp(floor, peak).log10();
    let mse = lt.iter().zip(&lr).map(|(a, b)| (enc(*a) - enc(*b)).powi(2)).sum::<f64>() / lt.len() as f64;
    Ok(psnr(peak.log10() - floor.log10(), mse))
}

/// Tabulated perceptually uniform encoding, linearly interpolated.
#[derive(Debug, Clone, PartialEq)]
pub struct PuCurve {
    luminance: Vec<f64>,
    encoded: Vec<f64>,
}

impl PuCurve {
    /// The curve shipped with the crate.
    pub fn shipped() -> &'static PuCurve {
        static CURVE: OnceLock<PuCurve> = OnceLock::new();
        CURVE.get_or_init(|| PuCurve::parse(PU_TABLE).expect("shipped curve is valid"))
    }

    pub fn parse(text: &str) -> Result<PuCurve> {
        let mut luminance = Vec::new();
        let mut encoded = Vec::new();
        let mut offset = 0;
        for line in text.lines() {
            let row = line.trim();
            if !row.is_empty() && !row.starts_with('#') {
                let bad = || Error::malformed("PU curve", offset, format!("bad row {:?}", row));
                let (l, e) = row.split_once(',').ok_or_else(bad)?;
                let l: f64 = l.trim().parse().map_err(|_| bad())?;
                let e: f64 = e.trim().parse().map_err(|_| bad())?;
                if luminance.last().is_some_and(|&p| l <= p) || encoded.last().is_some_and(|&p| e <= p) {
                    return Err(Error::malformed("PU curve", offset, "table must be strictly increasing"));
                }
                luminance.push(l);
                encoded.push(e);
            }
            offset += line.len() + 1;
        }
        if luminance.len() < 2 {
            return Err(Error::malformed("PU curve", offset, "fewer than two rows"));
        }
        Ok(PuCurve { luminance, encoded })
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.luminance.iter().copied().zip(self.encoded.iter().copied())
    }

    /// Encoded value of a luminance in cd/m²; clamped to the table ends.
    pub fn encode(&self, l: f64) -> f64 {
        let n = self.luminance.len();
        if !(l > self.luminance[0]) {
            return self.encoded[0];
        }
        if l >= self.luminance[n - 1] {
            return self.encoded[n - 1];
        }
        let i = self.luminance.partition_point(|&x| x <= l);
        let (l0, l1) = (self.luminance[i - 1], self.luminance[i]);
        let (e0, e1) = (self.encoded[i - 1], self.encoded[i]);
        e0 + (e1 - e0) * (l - l0) / (l1 - l0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PuOptions {
    /// cd/m² per unit of frame luminance.
    pub scale: f64,
    /// Luminance whose encoding is the PSNR peak.
    pub peak_cd_m2: f64,
}

impl Default for PuOptions {
    fn default() -> Self {
        PuOptions {
            scale: 1.0,
            peak_cd_m2: 10_000.0,
        }
    }
}

/// PSNR after mapping to absolute luminance and applying the PU encoding.
pub fn pu_psnr(test: &Image, reference: &Image, options: &PuOptions) -> Result<f64> {
    check(test, reference)?;
    if !(options.scale > 0.0) || !(options.peak_cd_m2 > 0.0) {
        return Err(Error::InvalidInput("PU scale and peak must be positive".into()));
    }
    let curve = PuCurve::shipped();
    let enc = |v: f64| curve.encode((v * options.scale).max(1e-5));
    let lt = luminance(test);
    let lr = luminance(reference);
    let mse = lt.iter().zip(&lr).map(|(a, b)| (enc(*a) - enc(*b)).powi(2)).sum::<f64>() / lt.len() as f64;
    Ok(psnr(curve.encode(options.peak_cd_m2), mse))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub metric: String,
    pub parameters: BTreeMap<String, f64>,
    pub per_frame: Vec<f64>,
    pub mean: f64,
}

impl MetricReport {
    pub fn new(metric: &str, parameters: BTreeMap<String, f64>, per_frame: Vec<f64>) -> Self {
        let mean = if per_frame.is_empty() {
            f64::NAN
        } else {
            per_frame.iter().sum::<f64>() / per_frame.len() as f64
        };
        MetricReport {
            metric: metric.to_string(),
            parameters,
            per_frame,
            mean,
        }
    }
}
