//! Well-exposedness mask and the per-pixel exposedness weight φ.

use super::crf::ResponseCurve;
use super::frame::LdrFrame;
use crate::raster::{Image, Mask};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExposureKind {
    Long,
    Short,
}

impl ExposureKind {
    /// Tags each exposure relative to the geometric mean of the extremes.
    pub fn classify(exposures: &[f64]) -> Vec<ExposureKind> {
        let lo = exposures.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = exposures.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let split = (lo * hi).sqrt();
        exposures
            .iter()
            .map(|&e| {
                if e >= split {
                    ExposureKind::Long
                } else {
                    ExposureKind::Short
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExposednessWeights {
    pub phi: Image,
    pub kind: ExposureKind,
}

/// φ for one (possibly real-valued) code. Long frames lose weight toward
/// saturation, short frames toward black.
#[inline]
pub fn phi_of_code(code: f64, kind: ExposureKind, z_th: f64, z_max: f64) -> f64 {
    match kind {
        ExposureKind::Long => ((z_max - z_th - code) / z_th).clamp(0.0, 1.0),
        ExposureKind::Short => ((code - z_th) / z_th).clamp(0.0, 1.0),
    }
}

/// M = 1 iff every channel code lies strictly inside (z_th, z_max − z_th).
pub fn well_exposed_mask(frame: &LdrFrame, crf: &ResponseCurve) -> Mask {
    let lo = crf.z_threshold();
    let hi = crf.z_max() - crf.z_threshold();
    let data = (0..frame.width * frame.height)
        .map(|i| frame.pixel(i).iter().all(|&z| z > lo && z < hi))
        .collect();
    Mask::new(frame.width, frame.height, data).expect("frame shape is valid")
}

/// Per-pixel φ; multichannel pixels take the least exposed channel.
pub fn phi_weight(frame: &LdrFrame, crf: &ResponseCurve, kind: ExposureKind) -> ExposednessWeights {
    let z_th = crf.z_threshold() as f64;
    let z_max = crf.z_max() as f64;
    let data = (0..frame.width * frame.height)
        .map(|i| {
            frame
                .pixel(i)
                .iter()
                .map(|&z| phi_of_code(z as f64, kind, z_th, z_max))
                .fold(1.0, f64::min)
        })
        .collect();
    ExposednessWeights {
        phi: Image::new(frame.width, frame.height, 1, data).expect("frame shape is valid"),
        kind,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn crf() -> ResponseCurve {
        ResponseCurve::power_law(1, 255, 20, 2.2).unwrap()
    }

    fn row(codes: Vec<u16>) -> LdrFrame {
        LdrFrame::new(codes.len(), 1, 1, codes, 1.0).unwrap()
    }

    #[test]
    fn mask_window_is_strict() {
        let m = well_exposed_mask(&row(vec![20, 21, 127, 234, 235, 0]), &crf());
        assert_eq!(m.data(), &[false, true, true, true, false, false]);
    }

    #[test]
    fn black_frame_has_empty_mask() {
        assert_eq!(well_exposed_mask(&row(vec![0; 8]), &crf()).count(), 0);
    }

    #[test]
    fn multichannel_mask_needs_all_channels() {
        let crf = ResponseCurve::power_law(3, 255, 20, 2.2).unwrap();
        let f = LdrFrame::new(2, 1, 3, vec![100, 100, 100, 100, 255, 100], 1.0).unwrap();
        assert_eq!(well_exposed_mask(&f, &crf).data(), &[true, false]);
    }

    #[test]
    fn phi_ramps() {
        let c = crf();
        let w = phi_weight(&row(vec![235, 127, 215, 225]), &c, ExposureKind::Long);
        assert_eq!(w.phi.data(), &[0.0, 1.0, 1.0, 0.5]);
        let w = phi_weight(&row(vec![30, 20, 0, 40, 255]), &c, ExposureKind::Short);
        assert_eq!(w.phi.data(), &[0.5, 0.0, 0.0, 1.0, 1.0]);
    }

    #[test]
    fn classify_alternating() {
        use ExposureKind::*;
        assert_eq!(ExposureKind::classify(&[0.005, 0.0005, 0.005]), vec![Long, Short, Long]);
    }

    proptest! {
        #[test]
        fn phi_is_bounded_and_continuous(z in 0.0f64..255.0, th in 1.0f64..60.0) {
            for kind in [ExposureKind::Long, ExposureKind::Short] {
                let p = phi_of_code(z, kind, th, 255.0);
                prop_assert!((0.0..=1.0).contains(&p));
                let q = phi_of_code(z + 1e-6, kind, th, 255.0);
                prop_assert!((p - q).abs() <= 1e-6 / th + 1e-12);
            }
        }

        #[test]
        fn zero_phi_lies_near_the_ill_exposed_end(z in 0u16..=255) {
            let (th, zm) = (20.0, 255.0);
            if phi_of_code(z as f64, ExposureKind::Long, th, zm) == 0.0 {
                prop_assert!(z as f64 >= zm - th);
            }
            if phi_of_code(z as f64, ExposureKind::Short, th, zm) == 0.0 {
                prop_assert!(z as f64 <= th);
            }
        }
    }
}
