use super::support::support_pyramid;
use super::{LowRankDomain, SynthesisConfig};
use crate::error::{Error, Result};
use crate::imaging::frame::boost_radiance;
use crate::imaging::{
    inverse_response, phi_weight, unboost_value, well_exposed_mask, ExposureKind, LdrFrame, ResponseCurve,
};
use crate::kernel::{estimate_pixel, saturation_target, EstimateOutcome, LocalSample, SteeringProblem};
use crate::lowrank::{complete_background, decompose, CompletionParams, Grid};
use crate::motion::{build_pyramid, estimate_flow, resize_nearest, upscale_flow, warp, FlowField, Pyramid};
use crate::raster::{luminance_of, Image, Mask};
use log::debug;
use nalgebra::{DMatrix, Matrix3};
use rayon::prelude::*;
use serde::Serialize;
use std::time::Instant;

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct FrameStats {
    /// Position in the sequence; set by the caller for video runs.
    pub frame: usize,
    pub outer_iterations: usize,
    pub completion_iterations: usize,
    pub sigma: Vec<f64>,
    pub support_pixels: usize,
    /// Pixels with no well-exposed observation in any frame of the window.
    pub unobserved_pixels: usize,
    pub regressed_pixels: usize,
    pub bfgs_iterations: usize,
    pub degenerate: usize,
    pub fallbacks: usize,
    pub flow_calls: usize,
    pub warp_calls: usize,
    pub seconds_decompose: f64,
    pub seconds_total: f64,
}

#[derive(Debug, Clone)]
pub struct FrameResult {
    /// Radiance of the reference frame.
    pub hdr: Image,
    /// Foreground found by the decomposition in the reference frame.
    pub support: Mask,
    /// Pixels re-estimated by regression at the finest level.
    pub regressed: Mask,
    /// Completed background, as radiance.
    pub background: Image,
    pub stats: FrameStats,
}

struct Level<'a> {
    values: [&'a Image; 3],
    phi: [&'a Image; 3],
    valid: [Option<&'a Mask>; 3],
}

struct Estimate {
    index: usize,
    values: Vec<f64>,
    r: Matrix3<f64>,
    iterations: usize,
    outcome: EstimateOutcome,
}

fn check_window(frames: &[&LdrFrame; 3], crf: &ResponseCurve) -> Result<()> {
    let (dims, ch) = (frames[1].dims(), frames[1].channels);
    for f in frames {
        if f.dims() != dims || f.channels != ch {
            return Err(Error::DimensionMismatch("frames of a window must share dims and channels".into()));
        }
        f.check_against(crf)?;
    }
    Ok(())
}

fn to_matrix(columns: &[Image; 3]) -> DMatrix<f64> {
    DMatrix::from_fn(columns[0].pixel_count(), 3, |i, j| columns[j].data()[i])
}

fn mask_matrix(masks: &[Mask; 3]) -> DMatrix<bool> {
    DMatrix::from_fn(masks[0].data().len(), 3, |i, j| masks[j].data()[i])
}

/// Samples of the P×P×3 block around (x, y); blocks are cut at the frame
/// border and off-frame warped samples are skipped.
fn gather(level: &Level, x: usize, y: usize, radius: usize) -> (Vec<LocalSample>, Vec<Vec<f64>>) {
    let (w, h) = level.values[1].dims();
    let ch = level.values[1].channels();
    let mut samples = Vec::new();
    let mut channels = vec![Vec::new(); ch];
    let (x0, x1) = (x.saturating_sub(radius), (x + radius).min(w - 1));
    let (y0, y1) = (y.saturating_sub(radius), (y + radius).min(h - 1));
    for (j, img) in level.values.iter().enumerate() {
        for sy in y0..=y1 {
            for sx in x0..=x1 {
                if let Some(valid) = level.valid[j] {
                    if !valid.get(sx, sy) {
                        continue;
                    }
                }
                let px = img.pixel(sy * w + sx);
                let phi = level.phi[j].get(sx, sy, 0);
                samples.push(LocalSample {
                    offset: [sx as f64 - x as f64, sy as f64 - y as f64, j as f64 - 1.0],
                    value: if ch == 1 { px[0] } else { luminance_of(px) },
                    phi,
                    well_exposed: phi > 0.0,
                });
                for (c, v) in px.iter().enumerate() {
                    channels[c].push(*v);
                }
            }
        }
    }
    (samples, channels)
}

#[allow(clippy::too_many_arguments)]
fn estimate_at(
    level: &Level,
    x: usize,
    y: usize,
    r_init: &Matrix3<f64>,
    reference: ExposureKind,
    target: f64,
    config: &SynthesisConfig,
) -> Estimate {
    let cfg = &config.regression;
    let (w, _) = level.values[1].dims();
    let (samples, channels) = gather(level, x, y, cfg.block_radius);
    let center = level.values[1].pixel(y * w + x);
    let y_c = if center.len() == 1 { center[0] } else { luminance_of(center) };
    let phi_c = level.phi[1].get(x, y, 0);
    let problem = SteeringProblem::new(&samples, y_c, phi_c, reference, target, cfg);
    let est = estimate_pixel(&problem, r_init, cfg);
    let values = match est.outcome {
        EstimateOutcome::Degenerate => {
            debug!("({}, {}): no weighted samples, using the saturation target", x, y);
            vec![target; channels.len()]
        }
        outcome => {
            if outcome == EstimateOutcome::Fallback {
                debug!("({}, {}): steering optimization fell back to the initial matrix", x, y);
            }
            if channels.len() == 1 {
                vec![est.value]
            } else {
                channels
                    .iter()
                    .map(|vals| problem.coefficients(&est.r, vals).map_or(target, |b| b[0]))
                    .collect()
            }
        }
    };
    Estimate {
        index: y * w + x,
        values,
        r: est.r,
        iterations: est.iterations,
        outcome: est.outcome,
    }
}

fn unboost_image(img: &Image, crf: &ResponseCurve, dt: f64, gamma: f64) -> Image {
    let ch = img.channels();
    let data = img
        .data()
        .iter()
        .enumerate()
        .map(|(i, &v)| unboost_value(crf, crf.channel_for(i % ch), v, dt, gamma))
        .collect();
    Image::new(img.width(), img.height(), ch, data).expect("same shape")
}

fn reference_column(b: &DMatrix<f64>, w: usize, h: usize) -> Image {
    Image::new(w, h, 1, b.column(1).iter().copied().collect()).expect("column length is w·h")
}

/// Synthesizes the HDR version of `frames[1]` from the window
/// `[previous, reference, next]`.
pub fn synthesize_window(frames: [&LdrFrame; 3], crf: &ResponseCurve, config: &SynthesisConfig) -> Result<FrameResult> {
    let start = Instant::now();
    config.validate()?;
    check_window(&frames, crf)?;
    let mut stats = FrameStats::default();
    let (w, h) = frames[1].dims();
    let ch = frames[1].channels;
    let gamma = config.gamma;
    let dt_ref = frames[1].exposure_s;
    let kinds = ExposureKind::classify(&frames.map(|f| f.exposure_s));
    let reference_kind = kinds[1];

    let radiance: Vec<Image> = frames
        .iter()
        .map(|f| inverse_response(f, crf))
        .collect::<Result<_>>()?;
    let boosted: [Image; 3] = std::array::from_fn(|j| boost_radiance(&radiance[j], crf, dt_ref, gamma));
    let masks: [Mask; 3] = frames.map(|f| well_exposed_mask(f, crf));
    let phis: [Image; 3] = std::array::from_fn(|j| phi_weight(frames[j], crf, kinds[j]).phi);
    let m = mask_matrix(&masks);

    // low-rank decomposition of the luminance
    let linear_scale = {
        let mut s = 0.0f64;
        for (j, img) in radiance.iter().enumerate() {
            for (i, px) in (0..img.pixel_count()).map(|i| (i, img.pixel(i))) {
                if masks[j].data()[i] {
                    s = s.max(luminance_of(px));
                }
            }
        }
        if s > 0.0 {
            s
        } else {
            1.0
        }
    };
    let domain_image = |j: usize| -> Image {
        match config.domain {
            LowRankDomain::Gamma => boosted[j].clone(),
            LowRankDomain::Linear => radiance[j].map(|v| v / linear_scale),
        }
    };
    let domain_images: [Image; 3] = std::array::from_fn(domain_image);
    let lum = |img: &Image| if img.channels() == 1 { img.clone() } else { img.luminance() };
    let d = to_matrix(&[lum(&domain_images[0]), lum(&domain_images[1]), lum(&domain_images[2])]);
    let t_dec = Instant::now();
    let dec = decompose(&d, &m, Grid::new(w, h), &config.decompose)?;
    stats.seconds_decompose = t_dec.elapsed().as_secs_f64();
    stats.outer_iterations = dec.outer_iterations;
    stats.completion_iterations = dec.completion_iterations;
    stats.sigma = dec.sigma.clone();

    // background of each channel on the final observation set
    let background_domain = if ch == 1 {
        reference_column(&dec.b, w, h)
    } else {
        let refit = CompletionParams {
            alpha: if config.decompose.debias {
                0.0
            } else {
                config.decompose.completion.alpha
            },
            ..config.decompose.completion
        };
        let planes = (0..ch)
            .map(|c| {
                let dc = to_matrix(&[
                    domain_images[0].channel(c),
                    domain_images[1].channel(c),
                    domain_images[2].channel(c),
                ]);
                let b = complete_background(&dc, &dec.omega, &refit)?;
                stats.completion_iterations += b.iterations;
                Ok(reference_column(&b.b, w, h))
            })
            .collect::<Result<Vec<_>>>()?;
        Image::from_channels(&planes)?
    };
    let (background_boost, background_radiance) = match config.domain {
        LowRankDomain::Gamma => {
            let rad = unboost_image(&background_domain, crf, dt_ref, gamma);
            (background_domain, rad)
        }
        LowRankDomain::Linear => {
            let rad = background_domain.map(|v| (v * linear_scale).max(0.0));
            (boost_radiance(&rad, crf, dt_ref, gamma), rad)
        }
    };

    let support = Mask::from_fn(w, h, |x, y| dec.s[(y * w + x, 1)]);
    let unobserved = Mask::from_fn(w, h, |x, y| (0..3).all(|j| !masks[j].get(x, y)));
    stats.support_pixels = support.count();
    stats.unobserved_pixels = unobserved.count();
    let foreground = support.or(&unobserved);

    // coarse-to-fine regression
    let levels = config.levels;
    let value_pyr: Vec<Pyramid> = boosted
        .iter()
        .map(|b| build_pyramid(b, levels))
        .collect::<Result<_>>()?;
    let phi_pyr: Vec<Pyramid> = phis.iter().map(|p| build_pyramid(p, levels)).collect::<Result<_>>()?;
    let background_pyr = build_pyramid(&background_boost, levels)?;
    let fg_pyr = support_pyramid(&foreground, levels);
    let target = saturation_target(
        reference_kind,
        crf.z_threshold() as f64,
        crf.z_max() as f64,
        gamma,
    );

    let mut flows: [FlowField; 2] = std::array::from_fn(|_| {
        let (cw, chh) = background_pyr.coarsest().dims();
        FlowField::zeros(cw, chh)
    });
    let (cw, chh) = background_pyr.coarsest().dims();
    let mut r_state = vec![Matrix3::<f64>::identity(); cw * chh];
    let mut state_dims = (cw, chh);
    let mut composite = background_pyr.coarsest().clone();

    for l in 0..levels {
        let (lw, lh) = background_pyr.level(l).dims();
        if l > 0 {
            for f in flows.iter_mut() {
                *f = upscale_flow(f, lw, lh);
            }
            r_state = resize_nearest(&r_state, state_dims.0, state_dims.1, lw, lh);
            state_dims = (lw, lh);
        }
        let mut warped_values = Vec::with_capacity(2);
        let mut warped_phi = Vec::with_capacity(2);
        let mut warped_valid = Vec::with_capacity(2);
        if levels > 1 {
            for (side, j) in [(0usize, 0usize), (1, 2)] {
                let (v, valid) = warp(value_pyr[j].level(l), &flows[side]);
                let (p, _) = warp(phi_pyr[j].level(l), &flows[side]);
                warped_values.push(v);
                warped_phi.push(p);
                warped_valid.push(valid);
                stats.warp_calls += 1;
            }
        } else {
            for j in [0usize, 2] {
                warped_values.push(value_pyr[j].level(l).clone());
                warped_phi.push(phi_pyr[j].level(l).clone());
                warped_valid.push(Mask::filled(lw, lh, true));
            }
        }
        let level = Level {
            values: [&warped_values[0], value_pyr[1].level(l), &warped_values[1]],
            phi: [&warped_phi[0], phi_pyr[1].level(l), &warped_phi[1]],
            valid: [Some(&warped_valid[0]), None, Some(&warped_valid[1])],
        };
        let fg = &fg_pyr[l];
        let pixels: Vec<(usize, usize)> = (0..lh)
            .flat_map(|y| (0..lw).map(move |x| (x, y)))
            .filter(|&(x, y)| fg.get(x, y))
            .collect();
        let estimates: Vec<Estimate> = pixels
            .par_iter()
            .map(|&(x, y)| estimate_at(&level, x, y, &r_state[y * lw + x], reference_kind, target, config))
            .collect();

        composite = background_pyr.level(l).clone();
        for e in &estimates {
            let (x, y) = (e.index % lw, e.index / lw);
            for (c, v) in e.values.iter().enumerate() {
                composite.set(x, y, c, *v);
            }
            r_state[e.index] = e.r;
            stats.bfgs_iterations += e.iterations;
            match e.outcome {
                EstimateOutcome::Degenerate => stats.degenerate += 1,
                EstimateOutcome::Fallback => stats.fallbacks += 1,
                EstimateOutcome::Optimized => {}
            }
        }
        if l + 1 == levels {
            stats.regressed_pixels = estimates.len();
        } else {
            let reference_lum = lum(&composite);
            for side in 0..2 {
                let refine = estimate_flow(&reference_lum, &lum(&warped_values[side]), &config.flow)?;
                flows[side] = flows[side].add(&refine);
                stats.flow_calls += 1;
            }
        }
    }

    let regressed = fg_pyr[levels - 1].clone();
    let fg_radiance = unboost_image(&composite, crf, dt_ref, gamma);
    let mut hdr = background_radiance.clone();
    for i in 0..w * h {
        if regressed.data()[i] {
            for c in 0..ch {
                hdr.data_mut()[i * ch + c] = fg_radiance.data()[i * ch + c];
            }
        }
    }
    stats.seconds_total = start.elapsed().as_secs_f64();
    debug!(
        "window done: support {}, regressed {}, degenerate {}, fallbacks {}",
        stats.support_pixels, stats.regressed_pixels, stats.degenerate, stats.fallbacks
    );
    Ok(FrameResult {
        hdr,
        support,
        regressed,
        background: background_radiance,
        stats,
    })
}
