//! Plain-text inputs: the camera response file and the exposure manifest.

use crate::error::{Error, Result};
use crate::imaging::ResponseCurve;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Non-empty, non-comment lines with the byte offset at which each starts.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    let mut offset = 0;
    text.split_inclusive('\n').filter_map(move |raw| {
        let at = offset;
        offset += raw.len();
        let line = raw.trim();
        (!line.is_empty() && !line.starts_with('#')).then_some((at, line))
    })
}

/// Parses `channels=C z_max=Z z_th=T` followed by Z+1 rows of C ln-exposure values.
pub fn parse_crf(text: &str) -> Result<ResponseCurve> {
    const F: &str = "CRF";
    let mut lines = content_lines(text);
    let (at, header) = lines
        .next()
        .ok_or_else(|| Error::malformed(F, text.len(), "missing header line"))?;
    let (mut channels, mut z_max, mut z_th) = (None, None, None);
    for field in header.split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| Error::malformed(F, at, format!("header field {:?} is not key=value", field)))?;
        let n: usize = value
            .parse()
            .map_err(|_| Error::malformed(F, at, format!("header value {:?} is not an integer", value)))?;
        match key {
            "channels" => channels = Some(n),
            "z_max" => z_max = Some(n),
            "z_th" => z_th = Some(n),
            _ => return Err(Error::malformed(F, at, format!("unknown header key {:?}", key))),
        }
    }
    let (Some(channels), Some(z_max), Some(z_th)) = (channels, z_max, z_th) else {
        return Err(Error::malformed(F, at, "header needs channels, z_max and z_th"));
    };
    if channels == 0 || z_max == 0 || z_max > u16::MAX as usize || z_th > z_max {
        return Err(Error::malformed(F, at, "header values out of range"));
    }
    let mut tables = vec![Vec::with_capacity(z_max + 1); channels];
    for z in 0..=z_max {
        let (at, line) = lines
            .next()
            .ok_or_else(|| Error::malformed(F, text.len(), format!("truncated: {} of {} rows", z, z_max + 1)))?;
        let values: Vec<&str> = line.split_whitespace().collect();
        if values.len() != channels {
            return Err(Error::malformed(F, at, format!("row {} has {} values, expected {}", z, values.len(), channels)));
        }
        for (c, v) in values.iter().enumerate() {
            let g: f64 = v
                .parse()
                .map_err(|_| Error::malformed(F, at, format!("row {} value {:?} is not a number", z, v)))?;
            tables[c].push(g);
        }
    }
    if let Some((at, _)) = lines.next() {
        return Err(Error::malformed(F, at, "extra rows after the table"));
    }
    ResponseCurve::new(tables, z_max as u16, z_th as u16)
}

/// Writes values in shortest round-trip form, so parsing restores them exactly.
pub fn format_crf(crf: &ResponseCurve) -> String {
    let mut out = format!(
        "channels={} z_max={} z_th={}\n",
        crf.channels(),
        crf.z_max(),
        crf.z_threshold()
    );
    for z in 0..=crf.z_max() as usize {
        let row: Vec<String> = (0..crf.channels()).map(|c| format!("{:?}", crf.table(c)[z])).collect();
        writeln!(out, "{}", row.join(" ")).expect("writing to a String");
    }
    out
}

pub fn load_crf(path: impl AsRef<Path>) -> Result<ResponseCurve> {
    parse_crf(&std::fs::read_to_string(path)?)
}

/// One frame of an exposure manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub file: PathBuf,
    pub exposure_s: f64,
}

/// `filename exposure_seconds` per line, in temporal order. Relative file
/// names are resolved against `base`.
pub fn parse_manifest(text: &str, base: &Path) -> Result<Vec<ManifestEntry>> {
    const F: &str = "manifest";
    let mut entries = Vec::new();
    for (at, line) in content_lines(text) {
        let (name, dt) = line
            .rsplit_once(char::is_whitespace)
            .ok_or_else(|| Error::malformed(F, at, "expected `filename exposure_seconds`"))?;
        let exposure_s: f64 = dt
            .parse()
            .map_err(|_| Error::malformed(F, at, format!("exposure {:?} is not a number", dt)))?;
        if !(exposure_s > 0.0 && exposure_s.is_finite()) {
            return Err(Error::malformed(F, at, format!("exposure {} must be positive", exposure_s)));
        }
        entries.push(ManifestEntry {
            file: base.join(name.trim()),
            exposure_s,
        });
    }
    if entries.is_empty() {
        return Err(Error::malformed(F, text.len(), "no frames listed"));
    }
    Ok(entries)
}

pub fn format_manifest(entries: &[(String, f64)]) -> String {
    entries.iter().map(|(name, dt)| format!("{} {:?}\n", name, dt)).collect()
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestEntry>> {
    let path = path.as_ref();
    let base = path.parent().unwrap_or(Path::new(""));
    parse_manifest(&std::fs::read_to_string(path)?, base)
}
