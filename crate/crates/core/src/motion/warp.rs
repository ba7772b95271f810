use super::flow::FlowField;
use super::pyramid::resize_bilinear;
use crate::raster::{Image, Mask};

/// Backward bilinear warp: output(x, y) = img(x + u, y + v). Samples that
/// fall outside the frame are clamped to the border and marked invalid.
pub fn warp(img: &Image, flow: &FlowField) -> (Image, Mask) {
    assert_eq!(img.dims(), flow.dims(), "warp: image and flow dims differ");
    let (w, h, c) = (img.width(), img.height(), img.channels());
    let mut out = Image::zeros(w, h, c);
    let mut valid = Mask::filled(w, h, true);
    let (xmax, ymax) = ((w - 1) as f64, (h - 1) as f64);
    for y in 0..h {
        for x in 0..w {
            let sx = x as f64 + flow.u.get(x, y, 0);
            let sy = y as f64 + flow.v.get(x, y, 0);
            if !(0.0..=xmax).contains(&sx) || !(0.0..=ymax).contains(&sy) {
                valid.set(x, y, false);
            }
            let sx = sx.clamp(0.0, xmax);
            let sy = sy.clamp(0.0, ymax);
            let (x0, y0) = (sx.floor() as usize, sy.floor() as usize);
            let (tx, ty) = (sx - x0 as f64, sy - y0 as f64);
            let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
            for ch in 0..c {
                let v = if tx == 0.0 && ty == 0.0 {
                    img.get(x0, y0, ch)
                } else {
                    let top = img.get(x0, y0, ch) * (1.0 - tx) + img.get(x1, y0, ch) * tx;
                    let bottom = img.get(x0, y1, ch) * (1.0 - tx) + img.get(x1, y1, ch) * tx;
                    top * (1.0 - ty) + bottom * ty
                };
                out.set(x, y, ch, v);
            }
        }
    }
    (out, valid)
}

/// Resize to the next level's dims and double the displacements.
pub fn upscale_flow(flow: &FlowField, width: usize, height: usize) -> FlowField {
    FlowField {
        u: resize_bilinear(&flow.u, width, height).map(|v| 2.0 * v),
        v: resize_bilinear(&flow.v, width, height).map(|v| 2.0 * v),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_flow_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let data: Vec<f64> = (0..12 * 9 * 3).map(|_| rng.random_range(-1e3..1e3)).collect();
        let img = Image::new(12, 9, 3, data).unwrap();
        let (out, valid) = warp(&img, &FlowField::zeros(12, 9));
        assert_eq!(out.data(), img.data());
        assert_eq!(valid.count(), 12 * 9);
    }

    #[test]
    fn integer_flow_takes_right_neighbour() {
        let ramp = Image::from_fn(6, 3, |x, y| (10 * y + x) as f64);
        let flow = FlowField::constant(6, 3, 1.0, 0.0);
        let (out, valid) = warp(&ramp, &flow);
        for y in 0..3 {
            for x in 0..5 {
                assert_eq!(out.get(x, y, 0), ramp.get(x + 1, y, 0));
                assert!(valid.get(x, y));
            }
            assert_eq!(out.get(5, y, 0), ramp.get(5, y, 0));
            assert!(!valid.get(5, y));
        }
    }

    #[test]
    fn half_pixel_on_a_ramp() {
        let ramp = Image::from_fn(8, 8, |x, y| 2.0 * x as f64 + 3.0 * y as f64);
        let (out, _) = warp(&ramp, &FlowField::constant(8, 8, 0.5, 0.25));
        for y in 0..7 {
            for x in 0..7 {
                let expect = 2.0 * (x as f64 + 0.5) + 3.0 * (y as f64 + 0.25);
                assert!((out.get(x, y, 0) - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn upscale_contract() {
        let up = upscale_flow(&FlowField::constant(5, 4, 1.0, 1.0), 9, 7);
        assert_eq!(up.dims(), (9, 7));
        assert!(up.u.data().iter().chain(up.v.data()).all(|&v| (v - 2.0).abs() < 1e-15));
        let z = upscale_flow(&FlowField::zeros(5, 4), 10, 8);
        assert_eq!(z.max_magnitude(), 0.0);
    }
}
