use crate::motion::half_dims;
use crate::raster::Mask;

/// One 2× reduction where a coarse pixel is set if any of its fine pixels is.
pub fn max_pool(mask: &Mask) -> Mask {
    let (w, h) = mask.dims();
    let (cw, ch) = half_dims(w, h);
    Mask::from_fn(cw, ch, |x, y| {
        let mut any = false;
        for dy in 0..2 {
            for dx in 0..2 {
                let (fx, fy) = (2 * x + dx, 2 * y + dy);
                if fx < w && fy < h {
                    any |= mask.get(fx, fy);
                }
            }
        }
        any
    })
}

/// Binary pyramid, coarse to fine, matching the image pyramid's level dims.
pub fn support_pyramid(support: &Mask, levels: usize) -> Vec<Mask> {
    let mut out = vec![support.clone()];
    for _ in 1..levels.max(1) {
        let next = max_pool(out.last().unwrap());
        out.push(next);
    }
    out.reverse();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion::level_dims;

    #[test]
    fn empty_stays_empty() {
        let p = support_pyramid(&Mask::filled(40, 30, false), 3);
        assert!(p.iter().all(|m| m.count() == 0));
    }

    #[test]
    fn single_pixel_survives_every_level() {
        let mut m = Mask::filled(37, 23, false);
        m.set(36, 22, true);
        let p = support_pyramid(&m, 4);
        assert!(p.iter().all(|l| l.count() == 1));
        let dims: Vec<_> = p.iter().map(|l| l.dims()).collect();
        assert_eq!(dims, level_dims(37, 23, 4));
    }

    #[test]
    fn block_with_one_pixel_sets_the_coarse_pixel() {
        let mut m = Mask::filled(4, 4, false);
        m.set(3, 2, true);
        let c = max_pool(&m);
        assert_eq!(c.dims(), (2, 2));
        assert!(c.get(1, 1));
        assert_eq!(c.count(), 1);
    }
}
