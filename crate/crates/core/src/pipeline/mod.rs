//! Per-frame HDR synthesis over a sliding three-frame window.
//!
//! For each reference frame the window is split into background and
//! foreground support, the background is completed from the neighbours,
//! and foreground pixels are re-estimated by kernel regression from coarse
//! to fine while the neighbours are aligned by optical flow.

mod support;
mod synth;

pub use support::{max_pool, support_pyramid};
pub use synth::{synthesize_window, FrameResult, FrameStats};

use crate::error::{Error, Result};
use crate::imaging::{LdrFrame, ResponseCurve};
use crate::kernel::RegressionConfig;
use crate::lowrank::{DecomposeParams, WeightRule};
use crate::motion::FlowParams;
use log::warn;
use rayon::prelude::*;

/// Value domain of the matrix handed to the low-rank decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LowRankDomain {
    /// Irradiance re-exposed to the reference and gamma-compressed, the
    /// same values the regression works on.
    Gamma,
    /// Linear irradiance divided by its largest well-exposed value.
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthesisConfig {
    /// Pyramid levels L.
    pub levels: usize,
    pub gamma: f64,
    pub regression: RegressionConfig,
    pub decompose: DecomposeParams,
    pub flow: FlowParams,
    pub domain: LowRankDomain,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        SynthesisConfig {
            levels: 3,
            gamma: 2.2,
            regression: RegressionConfig::default(),
            decompose: DecomposeParams {
                rule: WeightRule::Scaled {
                    beta_per_var: 4.5,
                    gamma_per_beta: 0.05,
                    sigma_floor: 1e-3,
                },
                debias: true,
                ..DecomposeParams::default()
            },
            flow: FlowParams::default(),
            domain: LowRankDomain::Gamma,
        }
    }
}

impl SynthesisConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if self.levels == 0 {
            return bad("levels must be at least 1");
        }
        if !(self.gamma > 0.0) {
            return bad("gamma must be positive");
        }
        let r = &self.regression;
        if !(r.tikhonov > 0.0) || !(r.steering_reg > 0.0) || !(r.kappa > 0.0) {
            return bad("tikhonov, steering_reg and kappa must be positive");
        }
        let d = &self.decompose;
        if !(d.completion.alpha >= 0.0) || d.completion.max_rank == 0 || d.completion.max_iters == 0 {
            return bad("completion needs alpha >= 0, max_rank >= 1 and max_iters >= 1");
        }
        if !(d.w_s >= 0.0) || !(d.w_t >= 0.0) || d.outer_iters == 0 {
            return bad("w_s and w_t must be nonnegative and outer_iters at least 1");
        }
        if let WeightRule::Scaled {
            beta_per_var,
            gamma_per_beta,
            sigma_floor,
        } = d.rule
        {
            if !(beta_per_var > 0.0) || !(gamma_per_beta >= 0.0) || !(sigma_floor >= 0.0) {
                return bad("beta and gamma factors must be nonnegative (beta positive)");
            }
        }
        self.flow.validate()
    }
}

/// One reference frame of a sequence together with its neighbours.
#[derive(Debug, Clone, Copy)]
pub struct SynthesisJob<'a> {
    pub frames: &'a [LdrFrame],
    pub crf: &'a ResponseCurve,
    pub config: &'a SynthesisConfig,
    /// Zero-based; needs a frame on either side.
    pub reference: usize,
}

impl<'a> SynthesisJob<'a> {
    pub fn new(
        frames: &'a [LdrFrame],
        crf: &'a ResponseCurve,
        config: &'a SynthesisConfig,
        reference: usize,
    ) -> Result<Self> {
        if reference == 0 || reference + 1 >= frames.len() {
            return Err(Error::InvalidInput(format!(
                "reference {} needs a neighbour on both sides among {} frames",
                reference,
                frames.len()
            )));
        }
        let job = SynthesisJob {
            frames,
            crf,
            config,
            reference,
        };
        warn_if_not_alternating(&frames[reference - 1..=reference + 1]);
        Ok(job)
    }
}

fn warn_if_not_alternating(window: &[LdrFrame]) {
    if window.windows(2).any(|p| p[0].exposure_s == p[1].exposure_s) {
        warn!("exposures do not alternate within the window");
    }
}

pub fn synthesize_frame(job: &SynthesisJob) -> Result<FrameResult> {
    let r = job.reference;
    synthesize_window(
        [&job.frames[r - 1], &job.frames[r], &job.frames[r + 1]],
        job.crf,
        job.config,
    )
}

/// Window used for frame `index`: the two neighbours, with the only
/// available neighbour duplicated at the ends of the sequence.
pub fn window_indices(index: usize, count: usize) -> [usize; 3] {
    if index == 0 {
        [0, 0, 1]
    } else if index + 1 == count {
        [count - 2, count - 1, count - 1]
    } else {
        [index - 1, index, index + 1]
    }
}

/// One HDR frame per input frame, in order. Frames are processed in
/// parallel; every result depends only on its own window.
pub fn synthesize_video(frames: &[LdrFrame], crf: &ResponseCurve, config: &SynthesisConfig) -> Result<Vec<FrameResult>> {
    if frames.len() < 3 {
        return Err(Error::InvalidInput(format!("need at least 3 frames, got {}", frames.len())));
    }
    config.validate()?;
    (0..frames.len())
        .into_par_iter()
        .map(|i| {
            let [a, b, c] = window_indices(i, frames.len());
            let mut res = synthesize_window([&frames[a], &frames[b], &frames[c]], crf, config)?;
            res.stats.frame = i;
            Ok(res)
        })
        .collect()
}
