//! Radiance .hdr files: shared-exponent RGBE pixels with run-length
//! encoded scanlines.

use crate::error::{Error, Result};
use crate::raster::Image;
use std::path::Path;

const FORMAT: &str = "RGBE";
/// Scanline widths that the adaptive run-length scheme can describe.
const RLE_WIDTHS: std::ops::RangeInclusive<usize> = 8..=0x7fff;
const MIN_RUN: usize = 4;

pub fn encode_pixel(rgb: [f64; 3]) -> [u8; 4] {
    let v = rgb[0].max(rgb[1]).max(rgb[2]);
    if !(v >= 1e-32) {
        return [0; 4];
    }
    // v = m·2^e with m in [0.5, 1)
    let mut e = v.log2().floor() as i32 + 1;
    let mut m = v / 2f64.powi(e);
    if m >= 1.0 {
        e += 1;
        m *= 0.5;
    } else if m < 0.5 {
        e -= 1;
        m *= 2.0;
    }
    debug_assert!((0.5..1.0).contains(&m));
    if e + 128 < 1 {
        return [0; 4];
    }
    if e + 128 > 255 {
        return [255, 255, 255, 255];
    }
    let scale = 256.0 / 2f64.powi(e);
    let q = |c: f64| (c.max(0.0) * scale).min(255.0) as u8;
    [q(rgb[0]), q(rgb[1]), q(rgb[2]), (e + 128) as u8]
}

pub fn decode_pixel(rgbe: [u8; 4]) -> [f64; 3] {
    if rgbe[3] == 0 {
        return [0.0; 3];
    }
    let f = 2f64.powi(rgbe[3] as i32 - 136);
    [
        (rgbe[0] as f64 + 0.5) * f,
        (rgbe[1] as f64 + 0.5) * f,
        (rgbe[2] as f64 + 0.5) * f,
    ]
}

fn rle_component(out: &mut Vec<u8>, data: &[u8]) {
    let n = data.len();
    let mut cur = 0;
    while cur < n {
        // find the next run long enough to be worth encoding
        let mut beg_run = cur;
        let mut run_count = 0;
        while run_count < MIN_RUN && beg_run < n {
            beg_run += run_count;
            run_count = 1;
            while beg_run + run_count < n && run_count < 127 && data[beg_run] == data[beg_run + run_count] {
                run_count += 1;
            }
        }
        if run_count < MIN_RUN {
            beg_run = n;
        }
        // a short run right before a long one is cheaper as a run
        if beg_run - cur > 1 && beg_run - cur < MIN_RUN {
            let mut k = cur + 1;
            while k < beg_run && data[k] == data[cur] {
                k += 1;
            }
            if k == beg_run {
                out.push((128 + beg_run - cur) as u8);
                out.push(data[cur]);
                cur = beg_run;
            }
        }
        while cur < beg_run {
            let count = (beg_run - cur).min(128);
            out.push(count as u8);
            out.extend_from_slice(&data[cur..cur + count]);
            cur += count;
        }
        if run_count >= MIN_RUN {
            out.push((128 + run_count) as u8);
            out.push(data[beg_run]);
            cur += run_count;
        }
    }
}

/// Writes a 3-channel image as a run-length encoded Radiance file.
pub fn write_rgbe(img: &Image) -> Result<Vec<u8>> {
    if img.channels() != 3 {
        return Err(Error::InvalidInput(format!("RGBE needs 3 channels, got {}", img.channels())));
    }
    let (w, h) = img.dims();
    let mut out = format!("#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n-Y {} +X {}\n", h, w).into_bytes();
    let mut planes = vec![vec![0u8; w]; 4];
    for y in 0..h {
        for x in 0..w {
            let p = img.pixel(y * w + x);
            let e = encode_pixel([p[0], p[1], p[2]]);
            for c in 0..4 {
                planes[c][x] = e[c];
            }
        }
        if RLE_WIDTHS.contains(&w) {
            out.extend_from_slice(&[2, 2, (w >> 8) as u8, (w & 0xff) as u8]);
            for plane in &planes {
                rle_component(&mut out, plane);
            }
        } else {
            for x in 0..w {
                out.extend((0..4).map(|c| planes[c][x]));
            }
        }
    }
    Ok(out)
}

fn take<'a>(bytes: &'a [u8], pos: &mut usize, n: usize, what: &str) -> Result<&'a [u8]> {
    if *pos + n > bytes.len() {
        return Err(Error::malformed(FORMAT, bytes.len(), format!("truncated {}", what)));
    }
    let s = &bytes[*pos..*pos + n];
    *pos += n;
    Ok(s)
}

fn header_line<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<(&'a str, usize)> {
    let start = *pos;
    let end = bytes[start..]
        .iter()
        .position(|&b| b == b'\n')
        .map(|k| start + k)
        .ok_or_else(|| Error::malformed(FORMAT, bytes.len(), "truncated header"))?;
    *pos = end + 1;
    let line = std::str::from_utf8(&bytes[start..end]).map_err(|_| Error::malformed(FORMAT, start, "non-text header"))?;
    Ok((line.trim_end_matches('\r'), start))
}

fn read_rle_scanline(bytes: &[u8], pos: &mut usize, planes: &mut [Vec<u8>]) -> Result<()> {
    let w = planes[0].len();
    for plane in planes.iter_mut() {
        let mut x = 0;
        while x < w {
            let at = *pos;
            let code = take(bytes, pos, 1, "scanline")?[0] as usize;
            if code > 128 {
                let n = code - 128;
                let v = take(bytes, pos, 1, "scanline")?[0];
                if x + n > w {
                    return Err(Error::malformed(FORMAT, at, "run overruns scanline"));
                }
                plane[x..x + n].fill(v);
                x += n;
            } else {
                if code == 0 || x + code > w {
                    return Err(Error::malformed(FORMAT, at, "bad literal count"));
                }
                plane[x..x + code].copy_from_slice(take(bytes, pos, code, "scanline")?);
                x += code;
            }
        }
    }
    Ok(())
}

pub fn read_rgbe(bytes: &[u8]) -> Result<Image> {
    let mut pos = 0;
    let (magic, _) = header_line(bytes, &mut pos)?;
    if !magic.starts_with("#?") {
        return Err(Error::malformed(FORMAT, 0, "missing #? signature"));
    }
    loop {
        let (line, at) = header_line(bytes, &mut pos)?;
        if line.is_empty() {
            break;
        }
        if let Some(fmt) = line.strip_prefix("FORMAT=") {
            if fmt != "32-bit_rle_rgbe" {
                return Err(Error::malformed(FORMAT, at, format!("unsupported pixel format {}", fmt)));
            }
        }
    }
    let (res, at) = header_line(bytes, &mut pos)?;
    let parts: Vec<&str> = res.split_whitespace().collect();
    let (h, w) = match parts.as_slice() {
        ["-Y", h, "+X", w] => match (h.parse::<usize>(), w.parse::<usize>()) {
            (Ok(h), Ok(w)) if h > 0 && w > 0 => (h, w),
            _ => return Err(Error::malformed(FORMAT, at, format!("bad resolution {:?}", res))),
        },
        _ => return Err(Error::malformed(FORMAT, at, format!("unsupported orientation {:?}", res))),
    };
    let mut data = Vec::with_capacity(w * h * 3);
    let mut planes = vec![vec![0u8; w]; 4];
    for _ in 0..h {
        let at = pos;
        let rle = RLE_WIDTHS.contains(&w)
            && bytes.len() >= pos + 4
            && bytes[pos] == 2
            && bytes[pos + 1] == 2
            && bytes[pos + 2] & 0x80 == 0;
        if rle {
            let declared = ((bytes[pos + 2] as usize) << 8) | bytes[pos + 3] as usize;
            if declared != w {
                return Err(Error::malformed(FORMAT, at, format!("scanline width {} != {}", declared, w)));
            }
            pos += 4;
            read_rle_scanline(bytes, &mut pos, &mut planes)?;
        } else {
            let flat = take(bytes, &mut pos, 4 * w, "scanline")?;
            for x in 0..w {
                for c in 0..4 {
                    planes[c][x] = flat[4 * x + c];
                }
            }
        }
        for x in 0..w {
            data.extend(decode_pixel([planes[0][x], planes[1][x], planes[2][x], planes[3][x]]));
        }
    }
    Image::new(w, h, 3, data)
}

pub fn save_rgbe(path: impl AsRef<Path>, img: &Image) -> Result<()> {
    std::fs::write(path, write_rgbe(img)?)?;
    Ok(())
}

pub fn load_rgbe(path: impl AsRef<Path>) -> Result<Image> {
    read_rgbe(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn unit_white_encoding() {
        assert_eq!(encode_pixel([1.0, 1.0, 1.0]), [128, 128, 128, 129]);
        assert_eq!(encode_pixel([0.0, 0.0, 0.0]), [0, 0, 0, 0]);
        assert_eq!(decode_pixel([0, 0, 0, 0]), [0.0; 3]);
    }

    #[test]
    fn powers_of_two_land_on_mantissa_128() {
        for e in -20..20 {
            let v = 2f64.powi(e);
            let p = encode_pixel([v, 0.0, 0.0]);
            assert_eq!(p[0], 128);
            assert_eq!(p[3] as i32, e + 129);
        }
    }

    #[test]
    fn rle_and_flat_scanlines_decode_alike() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        // runs of repeated pixels exercise the run branch
        let img = Image::new(
            40,
            3,
            3,
            (0..40 * 3 * 3)
                .map(|i| if (i / 3) % 10 < 6 { 2.0 } else { rng.random_range(0.1..5.0) })
                .collect(),
        )
        .unwrap();
        let bytes = write_rgbe(&img).unwrap();
        let back = read_rgbe(&bytes).unwrap();
        // the same pixels written without run-length coding
        let mut flat = b"#?RADIANCE\n\n-Y 3 +X 40\n".to_vec();
        for i in 0..120 {
            let p = img.pixel(i);
            flat.extend(encode_pixel([p[0], p[1], p[2]]));
        }
        assert_eq!(read_rgbe(&flat).unwrap(), back);
        assert!(bytes.len() < flat.len());
    }

    #[test]
    fn narrow_images_use_flat_scanlines() {
        let img = Image::filled(5, 2, 3, 0.25);
        let bytes = write_rgbe(&img).unwrap();
        let back = read_rgbe(&bytes).unwrap();
        assert_eq!(back.dims(), (5, 2));
        assert!(back.data().iter().all(|v| (v - 0.25).abs() <= 0.25 / 256.0));
    }

    #[test]
    fn truncated_file_names_offset() {
        let bytes = write_rgbe(&Image::filled(16, 4, 3, 1.0)).unwrap();
        let cut = &bytes[..bytes.len() - 3];
        let err = read_rgbe(cut).unwrap_err();
        assert!(err.to_string().contains(&format!("byte {}", cut.len())), "{}", err);
        assert!(read_rgbe(b"#?RADIANCE\nFORMAT=32-bit_rle_xyze\n\n-Y 1 +X 1\n").is_err());
        assert!(read_rgbe(b"#?RADIANCE\n\n+Y 1 +X 1\n\0\0\0\0").is_err());
    }

    #[test]
    fn grey_image_is_rejected() {
        assert!(write_rgbe(&Image::zeros(2, 2, 1)).is_err());
    }

    proptest! {
        #[test]
        fn round_trip_within_quantization(w in 1usize..40, h in 1usize..4, seed in any::<u64>()) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let data = (0..w * h * 3).map(|_| 10f64.powf(rng.random_range(-6.0..6.0))).collect();
            let img = Image::new(w, h, 3, data).unwrap();
            let back = read_rgbe(&write_rgbe(&img).unwrap()).unwrap();
            for i in 0..w * h {
                let (a, b) = (img.pixel(i), back.pixel(i));
                let peak = a.iter().copied().fold(0.0, f64::max);
                for c in 0..3 {
                    prop_assert!((a[c] - b[c]).abs() <= peak / 256.0);
                }
            }
        }
    }
}
