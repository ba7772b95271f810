//! Tabulated camera response (log exposure per code) with linear
//! extrapolation past the monotone part of the table.

use crate::error::{Error, Result};

/// Number of table entries used to estimate the extrapolation slope.
const SLOPE_SPAN: usize = 8;

#[derive(Debug, Clone, PartialEq)]
struct Channel {
    table: Vec<f64>,
    lo: usize,
    hi: usize,
    slope_lo: f64,
    slope_hi: f64,
}

impl Channel {
    fn build(table: Vec<f64>, z_th: usize, z_max: usize, index: usize) -> Result<Self> {
        if table.len() != z_max + 1 {
            return Err(Error::InvalidCurve(format!(
                "channel {} has {} entries, expected {}",
                index,
                table.len(),
                z_max + 1
            )));
        }
        if let Some(z) = table.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidCurve(format!("channel {} code {} is not finite", index, z)));
        }
        for z in z_th..z_max - z_th {
            if table[z + 1] <= table[z] {
                return Err(Error::InvalidCurve(format!(
                    "channel {} not strictly increasing between codes {} and {}",
                    index,
                    z,
                    z + 1
                )));
            }
        }
        let mut lo = z_th;
        while lo > 0 && table[lo - 1] < table[lo] {
            lo -= 1;
        }
        let mut hi = z_max - z_th;
        while hi < z_max && table[hi + 1] > table[hi] {
            hi += 1;
        }
        let span = (SLOPE_SPAN - 1).min(hi - lo);
        let slope_lo = (table[lo + span] - table[lo]) / span as f64;
        let slope_hi = (table[hi] - table[hi - span]) / span as f64;
        Ok(Channel {
            table,
            lo,
            hi,
            slope_lo,
            slope_hi,
        })
    }

    fn g(&self, z: f64) -> f64 {
        let (lo, hi) = (self.lo as f64, self.hi as f64);
        if z <= lo {
            self.table[self.lo] - self.slope_lo * (lo - z)
        } else if z >= hi {
            self.table[self.hi] + self.slope_hi * (z - hi)
        } else {
            let i = z.floor() as usize;
            let f = z - i as f64;
            if f == 0.0 {
                self.table[i]
            } else {
                self.table[i] + f * (self.table[i + 1] - self.table[i])
            }
        }
    }

    fn g_inv(&self, v: f64) -> f64 {
        let (t_lo, t_hi) = (self.table[self.lo], self.table[self.hi]);
        if v <= t_lo {
            self.lo as f64 - (t_lo - v) / self.slope_lo
        } else if v >= t_hi {
            self.hi as f64 + (v - t_hi) / self.slope_hi
        } else {
            // First index in the monotone range whose entry exceeds v.
            let seg = &self.table[self.lo..=self.hi];
            let k = seg.partition_point(|&t| t <= v);
            let i = self.lo + k - 1;
            let (a, b) = (self.table[i], self.table[i + 1]);
            i as f64 + (v - a) / (b - a)
        }
    }
}

/// Camera response curve g: code → ln(exposure), one table per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseCurve {
    channels: Vec<Channel>,
    z_max: u16,
    z_th: u16,
}

impl ResponseCurve {
    pub fn new(tables: Vec<Vec<f64>>, z_max: u16, z_th: u16) -> Result<Self> {
        if tables.is_empty() {
            return Err(Error::InvalidCurve("no channels".into()));
        }
        if z_th == 0 || 2 * z_th as u32 >= z_max as u32 {
            return Err(Error::InvalidCurve(format!(
                "threshold {} must satisfy 0 < z_th < z_max/2 (z_max = {})",
                z_th, z_max
            )));
        }
        let channels = tables
            .into_iter()
            .enumerate()
            .map(|(i, t)| Channel::build(t, z_th as usize, z_max as usize, i))
            .collect::<Result<Vec<_>>>()?;
        Ok(ResponseCurve { channels, z_max, z_th })
    }

    /// Power-law response g(z) = gamma·ln((z+1)/(z_max+1)), identical on all channels.
    pub fn power_law(channels: usize, z_max: u16, z_th: u16, gamma: f64) -> Result<Self> {
        let n = z_max as f64 + 1.0;
        let table: Vec<f64> = (0..=z_max as usize)
            .map(|z| gamma * ((z as f64 + 1.0) / n).ln())
            .collect();
        Self::new(vec![table; channels], z_max, z_th)
    }

    /// Same tables with a different exposedness threshold.
    pub fn with_threshold(&self, z_th: u16) -> Result<Self> {
        let tables = self.channels.iter().map(|c| c.table.clone()).collect();
        Self::new(tables, self.z_max, z_th)
    }

    pub fn channels(&self) -> usize {
        self.channels.len()
    }

    pub fn z_max(&self) -> u16 {
        self.z_max
    }

    pub fn z_threshold(&self) -> u16 {
        self.z_th
    }

    pub fn table(&self, channel: usize) -> &[f64] {
        &self.channels[channel].table
    }

    /// Inclusive code range over which the table is used as is.
    pub fn monotone_range(&self, channel: usize) -> (usize, usize) {
        let c = &self.channels[channel];
        (c.lo, c.hi)
    }

    /// Extended g at a real-valued code.
    pub fn log_exposure(&self, channel: usize, code: f64) -> f64 {
        self.channels[channel].g(code)
    }

    /// Real-valued code whose extended g equals `log_exposure`.
    pub fn code_for(&self, channel: usize, log_exposure: f64) -> f64 {
        self.channels[channel].g_inv(log_exposure)
    }

    /// Radiance of a real-valued code captured with exposure `dt`.
    pub fn radiance(&self, channel: usize, code: f64, dt: f64) -> f64 {
        self.log_exposure(channel, code).exp() / dt
    }

    /// Maps the channel index of an image onto the curve's channels; a
    /// single-channel curve serves every image channel.
    pub(crate) fn channel_for(&self, image_channel: usize) -> usize {
        if self.channels.len() == 1 {
            0
        } else {
            image_channel
        }
    }

    pub(crate) fn check_channels(&self, image_channels: usize) -> Result<()> {
        if self.channels.len() == 1 || self.channels.len() == image_channels {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(format!(
                "response curve has {} channels, image has {}",
                self.channels.len(),
                image_channels
            )))
        }
    }
}
