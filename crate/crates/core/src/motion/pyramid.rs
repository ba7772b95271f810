use crate::error::{Error, Result};
use crate::raster::Image;

/// Smallest side allowed at the coarsest level.
pub const MIN_LEVEL_SIDE: usize = 16;

const BINOMIAL: [f64; 5] = [1.0 / 16.0, 4.0 / 16.0, 6.0 / 16.0, 4.0 / 16.0, 1.0 / 16.0];

/// Gaussian pyramid, levels ordered coarse to fine.
#[derive(Debug, Clone, PartialEq)]
pub struct Pyramid {
    levels: Vec<Image>,
}

impl Pyramid {
    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    /// Level 0 is the coarsest.
    pub fn level(&self, l: usize) -> &Image {
        &self.levels[l]
    }

    pub fn levels(&self) -> &[Image] {
        &self.levels
    }

    pub fn finest(&self) -> &Image {
        self.levels.last().expect("pyramid has at least one level")
    }

    pub fn coarsest(&self) -> &Image {
        &self.levels[0]
    }

    pub fn into_levels(self) -> Vec<Image> {
        self.levels
    }
}

/// Dimensions after one decimation step.
pub fn half_dims(width: usize, height: usize) -> (usize, usize) {
    (width.div_ceil(2), height.div_ceil(2))
}

/// Level dimensions for an `levels`-level pyramid, coarse to fine.
pub fn level_dims(width: usize, height: usize, levels: usize) -> Vec<(usize, usize)> {
    let mut dims = vec![(width, height)];
    for _ in 1..levels {
        let (w, h) = *dims.last().unwrap();
        dims.push(half_dims(w, h));
    }
    dims.reverse();
    dims
}

/// Largest level count not above `wanted` whose coarsest level keeps the
/// minimum side.
pub fn max_levels(width: usize, height: usize, wanted: usize) -> usize {
    let mut l = 1;
    while l < wanted {
        let (w, h) = level_dims(width, height, l + 1)[0];
        if w < MIN_LEVEL_SIDE || h < MIN_LEVEL_SIDE {
            break;
        }
        l += 1;
    }
    l
}

/// Separable (1,4,6,4,1)/16 blur with replicated borders.
pub fn blur(img: &Image) -> Image {
    let (w, h, c) = (img.width(), img.height(), img.channels());
    let mut tmp = Image::zeros(w, h, c);
    for y in 0..h {
        for x in 0..w {
            for ch in 0..c {
                let mut acc = 0.0;
                for (k, wk) in BINOMIAL.iter().enumerate() {
                    acc += wk * img.get_clamped(x as isize + k as isize - 2, y as isize, ch);
                }
                tmp.set(x, y, ch, acc);
            }
        }
    }
    let mut out = Image::zeros(w, h, c);
    for y in 0..h {
        for x in 0..w {
            for ch in 0..c {
                let mut acc = 0.0;
                for (k, wk) in BINOMIAL.iter().enumerate() {
                    acc += wk * tmp.get_clamped(x as isize, y as isize + k as isize - 2, ch);
                }
                out.set(x, y, ch, acc);
            }
        }
    }
    out
}

/// Blur then keep every second pixel.
pub fn downsample(img: &Image) -> Image {
    let blurred = blur(img);
    let (w, h) = half_dims(img.width(), img.height());
    let c = img.channels();
    let mut out = Image::zeros(w, h, c);
    for y in 0..h {
        for x in 0..w {
            for ch in 0..c {
                out.set(x, y, ch, blurred.get(2 * x, 2 * y, ch));
            }
        }
    }
    out
}

pub fn build_pyramid(img: &Image, levels: usize) -> Result<Pyramid> {
    if levels == 0 {
        return Err(Error::InvalidInput("pyramid needs at least one level".into()));
    }
    let (cw, ch) = level_dims(img.width(), img.height(), levels)[0];
    if levels > 1 && (cw < MIN_LEVEL_SIDE || ch < MIN_LEVEL_SIDE) {
        return Err(Error::InvalidInput(format!(
            "{} levels on {}x{} leaves a {}x{} coarsest level (minimum {})",
            levels,
            img.width(),
            img.height(),
            cw,
            ch,
            MIN_LEVEL_SIDE
        )));
    }
    let mut out = vec![img.clone()];
    for _ in 1..levels {
        let next = downsample(out.last().unwrap());
        out.push(next);
    }
    out.reverse();
    Ok(Pyramid { levels: out })
}

/// Bilinear resize with pixel centers aligned between the two grids.
pub fn resize_bilinear(img: &Image, width: usize, height: usize) -> Image {
    let (sw, sh, c) = (img.width(), img.height(), img.channels());
    let sx = sw as f64 / width as f64;
    let sy = sh as f64 / height as f64;
    let mut out = Image::zeros(width, height, c);
    for y in 0..height {
        let fy = ((y as f64 + 0.5) * sy - 0.5).clamp(0.0, (sh - 1) as f64);
        let y0 = fy.floor() as usize;
        let y1 = (y0 + 1).min(sh - 1);
        let ty = fy - y0 as f64;
        for x in 0..width {
            let fx = ((x as f64 + 0.5) * sx - 0.5).clamp(0.0, (sw - 1) as f64);
            let x0 = fx.floor() as usize;
            let x1 = (x0 + 1).min(sw - 1);
            let tx = fx - x0 as f64;
            for ch in 0..c {
                let top = img.get(x0, y0, ch) * (1.0 - tx) + img.get(x1, y0, ch) * tx;
                let bottom = img.get(x0, y1, ch) * (1.0 - tx) + img.get(x1, y1, ch) * tx;
                out.set(x, y, ch, top * (1.0 - ty) + bottom * ty);
            }
        }
    }
    out
}

/// Nearest-neighbour resize, used for per-pixel state that must not be blended.
pub fn resize_nearest<T: Clone>(data: &[T], sw: usize, sh: usize, width: usize, height: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(width * height);
    for y in 0..height {
        let src_y = ((y * sh) / height).min(sh - 1);
        for x in 0..width {
            let src_x = ((x * sw) / width).min(sw - 1);
            out.push(data[src_y * sw + src_x].clone());
        }
    }
    out
}
