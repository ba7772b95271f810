//! Portable Float Map: "PF" (RGB) or "Pf" (grey), 32-bit floats, rows
//! stored bottom to top. A negative scale marks little-endian data.

use crate::error::{Error, Result};
use crate::raster::Image;
use std::path::Path;

const FORMAT: &str = "PFM";

/// Encodes as little-endian with scale -1.0. Values are narrowed to f32.
pub fn write_pfm(img: &Image) -> Result<Vec<u8>> {
    let magic = match img.channels() {
        1 => "Pf",
        3 => "PF",
        c => return Err(Error::InvalidInput(format!("PFM stores 1 or 3 channels, got {}", c))),
    };
    let header = format!("{}\n{} {}\n-1.0\n", magic, img.width(), img.height());
    let row_len = img.width() * img.channels();
    let mut out = Vec::with_capacity(header.len() + 4 * img.data().len());
    out.extend_from_slice(header.as_bytes());
    for y in (0..img.height()).rev() {
        for &v in &img.data()[y * row_len..(y + 1) * row_len] {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    Ok(out)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_space(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn token(&mut self, what: &str) -> Result<(&'a str, usize)> {
        self.skip_space();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::malformed(FORMAT, start, format!("truncated header, expected {}", what)));
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos])
            .map_err(|_| Error::malformed(FORMAT, start, format!("non-ASCII {}", what)))?;
        Ok((text, start))
    }

    fn dimension(&mut self, what: &str) -> Result<usize> {
        let (text, at) = self.token(what)?;
        match text.parse::<usize>() {
            Ok(v) if v > 0 => Ok(v),
            _ => Err(Error::malformed(FORMAT, at, format!("bad {} {:?}", what, text))),
        }
    }
}

pub fn read_pfm(bytes: &[u8]) -> Result<Image> {
    let mut cur = Cursor { bytes, pos: 0 };
    let (magic, _) = cur.token("magic")?;
    let channels = match magic {
        "PF" => 3,
        "Pf" => 1,
        other => return Err(Error::malformed(FORMAT, 0, format!("unknown magic {:?}", other))),
    };
    let width = cur.dimension("width")?;
    let height = cur.dimension("height")?;
    let (scale_text, at) = cur.token("scale")?;
    let scale: f64 = scale_text
        .parse()
        .map_err(|_| Error::malformed(FORMAT, at, format!("bad scale {:?}", scale_text)))?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::malformed(FORMAT, at, "scale must be finite and nonzero"));
    }
    let little = scale < 0.0;
    // exactly one whitespace byte separates the header from the payload
    if cur.pos >= bytes.len() {
        return Err(Error::malformed(FORMAT, cur.pos, "truncated after header"));
    }
    let start = cur.pos + 1;
    let count = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| Error::malformed(FORMAT, at, "dimensions overflow"))?;
    let needed = count * 4;
    if bytes.len() < start + needed {
        return Err(Error::malformed(
            FORMAT,
            bytes.len(),
            format!("truncated payload: {} of {} bytes", bytes.len().saturating_sub(start), needed),
        ));
    }
    let row_len = width * channels;
    let mut data = vec![0.0; count];
    for (k, chunk) in bytes[start..start + needed].chunks_exact(4).enumerate() {
        let raw = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if little {
            f32::from_le_bytes(raw)
        } else {
            f32::from_be_bytes(raw)
        };
        if v.is_nan() {
            return Err(Error::malformed(FORMAT, start + 4 * k, "NaN sample"));
        }
        let (file_row, col) = (k / row_len, k % row_len);
        data[(height - 1 - file_row) * row_len + col] = v as f64;
    }
    Image::new(width, height, channels, data)
}

pub fn save_pfm(path: impl AsRef<Path>, img: &Image) -> Result<()> {
    std::fs::write(path, write_pfm(img)?)?;
    Ok(())
}

pub fn load_pfm(path: impl AsRef<Path>) -> Result<Image> {
    read_pfm(&std::fs::read(path)?)
}
