use crate::ConfigArgs;
use anyhow::{bail, Context, Result};
use log::info;
use maphdr::imaging::{LdrFrame, ResponseCurve};
use maphdr::io::{
    format_crf, format_manifest, generate_synthetic, load_crf, load_hdr, load_ldr, load_manifest, save_hdr,
    save_ldr, save_mask, save_pfm, tonemap_reinhard, RunConfig, SceneSpec,
};
use maphdr::metrics::{log_psnr, pu_psnr, MetricReport, PuOptions};
use maphdr::motion::{estimate_flow, warp};
use maphdr::pipeline::synthesize_video;
use maphdr::{Error, Image};
use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

/// Bad command-line input.
#[derive(Debug)]
struct Usage(String);

/// A check or solver that ran but did not meet its tolerance.
#[derive(Debug)]
struct NumericalFailure(String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for NumericalFailure {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}
impl std::error::Error for NumericalFailure {}

pub fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if cause.is::<Usage>() {
            return EXIT_USAGE;
        }
        if cause.is::<NumericalFailure>() {
            return EXIT_NUMERICAL;
        }
        if let Some(err) = cause.downcast_ref::<Error>() {
            return match err {
                Error::Config(_) => EXIT_USAGE,
                Error::Numerical(_) | Error::EmptyObservation { .. } => EXIT_NUMERICAL,
                _ => EXIT_DATA,
            };
        }
    }
    EXIT_DATA
}

#[derive(clap::ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum HdrFormat {
    Pfm,
    Hdr,
    Both,
}

impl HdrFormat {
    fn extensions(self) -> &'static [&'static str] {
        match self {
            HdrFormat::Pfm => &["pfm"],
            HdrFormat::Hdr => &["hdr"],
            HdrFormat::Both => &["pfm", "hdr"],
        }
    }
}

pub struct SynthesizeArgs {
    pub manifest: PathBuf,
    pub crf: PathBuf,
    pub out: PathBuf,
    pub config: ConfigArgs,
    pub support_prior: Option<String>,
    pub format: HdrFormat,
    pub log_json: Option<PathBuf>,
    pub dump_dir: Option<PathBuf>,
}

fn load_config(args: &ConfigArgs) -> Result<RunConfig> {
    let mut config = match &args.config {
        Some(path) => RunConfig::load(path).with_context(|| format!("reading config {}", path.display()))?,
        None => RunConfig::default(),
    };
    config
        .apply_overrides(&args.overrides)
        .map_err(|e| Usage(e.to_string()))?;
    Ok(config)
}

fn frame_name(i: usize) -> String {
    format!("frame_{:04}", i)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

pub fn synthesize(args: SynthesizeArgs) -> Result<()> {
    let mut config = load_config(&args.config)?;
    if let Some(prior) = &args.support_prior {
        config.set("support_prior", prior).map_err(|e| Usage(e.to_string()))?;
    }
    let synthesis = config.synthesis().map_err(|e| Usage(e.to_string()))?;
    let crf = load_crf(&args.crf).with_context(|| format!("reading response {}", args.crf.display()))?;
    let crf = config.response(&crf).map_err(|e| Usage(e.to_string()))?;
    let entries = load_manifest(&args.manifest).with_context(|| format!("reading manifest {}", args.manifest.display()))?;
    let frames = entries
        .iter()
        .map(|e| load_ldr(&e.file, e.exposure_s).with_context(|| format!("reading frame {}", e.file.display())))
        .collect::<Result<Vec<LdrFrame>>>()?;
    info!("{} frames of {}x{}", frames.len(), frames[0].width, frames[0].height);

    let start = Instant::now();
    let results = synthesize_video(&frames, &crf, &synthesis)?;
    info!("synthesized in {:.1}s", start.elapsed().as_secs_f64());

    create_dir(&args.out)?;
    for (i, r) in results.iter().enumerate() {
        for ext in args.format.extensions() {
            let path = args.out.join(format!("{}.{}", frame_name(i), ext));
            save_hdr(&path, &r.hdr).with_context(|| format!("writing {}", path.display()))?;
        }
    }
    if let Some(path) = &args.log_json {
        let mut log = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
        for r in &results {
            writeln!(log, "{}", serde_json::to_string(&r.stats)?)?;
        }
    }
    if let Some(dir) = &args.dump_dir {
        create_dir(dir)?;
        for (i, r) in results.iter().enumerate() {
            let name = frame_name(i);
            save_mask(dir.join(format!("support_{}.png", name)), &r.support)?;
            save_mask(dir.join(format!("regressed_{}.png", name)), &r.regressed)?;
            save_pfm(dir.join(format!("background_{}.pfm", name)), &r.background)?;
        }
    }
    for r in &results {
        let s = &r.stats;
        info!(
            "frame {}: support {} px, regressed {} px, {} fallbacks, {:.2}s",
            s.frame, s.support_pixels, s.regressed_pixels, s.fallbacks, s.seconds_total
        );
    }
    Ok(())
}

/// The .pfm and .hdr frames in `dir`, one per file stem (the lossless
/// .pfm wins when both exist), sorted by stem.
fn hdr_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut by_stem: BTreeMap<String, PathBuf> = BTreeMap::new();
    for entry in fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let path = entry?.path();
        let Some(ext) = path.extension().map(|e| e.to_string_lossy().to_ascii_lowercase()) else {
            continue;
        };
        if ext != "pfm" && ext != "hdr" {
            continue;
        }
        let stem = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        match by_stem.get(&stem) {
            Some(kept) if kept.extension().is_some_and(|e| e.eq_ignore_ascii_case("pfm")) => {}
            _ => {
                by_stem.insert(stem, path);
            }
        }
    }
    Ok(by_stem.into_values().collect())
}

/// Pairs test and reference frames by file stem.
fn frame_pairs(test: &Path, reference: &Path) -> Result<Vec<(String, PathBuf, PathBuf)>> {
    if test.is_file() {
        let stem = test.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        return Ok(vec![(stem, test.to_path_buf(), reference.to_path_buf())]);
    }
    let refs = hdr_files(reference)?;
    let mut pairs = Vec::new();
    for t in hdr_files(test)? {
        let stem = t.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        let r = refs
            .iter()
            .find(|r| r.file_stem().is_some_and(|s| s.to_string_lossy() == stem))
            .ok_or_else(|| Error::InvalidInput(format!("no reference frame for {}", t.display())))?;
        pairs.push((stem, t, r.clone()));
    }
    if pairs.is_empty() {
        return Err(Error::InvalidInput(format!("no .pfm or .hdr frames in {}", test.display())).into());
    }
    Ok(pairs)
}

pub fn metrics(
    metric: &str,
    test: &Path,
    reference: &Path,
    out: Option<&Path>,
    peak: Option<f64>,
    pu_scale: f64,
    pu_peak: f64,
) -> Result<()> {
    let (log, pu) = match metric {
        "logpsnr" => (true, false),
        "pupsnr" => (false, true),
        "all" => (true, true),
        other => bail!(Usage(format!("unknown metric {:?}; use logpsnr, pupsnr or all", other))),
    };
    if !(pu_scale > 0.0 && pu_peak > 0.0) || peak.is_some_and(|p| !(p > 0.0)) {
        bail!(Usage("peak and scale values must be positive".into()));
    }
    let options = PuOptions {
        scale: pu_scale,
        peak_cd_m2: pu_peak,
    };
    let pairs = frame_pairs(test, reference)?;
    let (mut log_values, mut pu_values) = (Vec::new(), Vec::new());
    for (name, t, r) in &pairs {
        let ti = load_hdr(t).with_context(|| format!("reading {}", t.display()))?;
        let ri = load_hdr(r).with_context(|| format!("reading {}", r.display()))?;
        let mut line = name.clone();
        if log {
            let v = log_psnr(&ti, &ri, peak)?;
            line += &format!("  logPSNR {:.3} dB", v);
            log_values.push(v);
        }
        if pu {
            let v = pu_psnr(&ti, &ri, &options)?;
            line += &format!("  puPSNR {:.3} dB", v);
            pu_values.push(v);
        }
        println!("{}", line);
    }
    let mut reports = Vec::new();
    if log {
        let mut params = BTreeMap::new();
        if let Some(p) = peak {
            params.insert("peak".to_string(), p);
        }
        reports.push(MetricReport::new("logpsnr", params, log_values));
    }
    if pu {
        let params = BTreeMap::from([("scale".to_string(), pu_scale), ("peak_cd_m2".to_string(), pu_peak)]);
        reports.push(MetricReport::new("pupsnr", params, pu_values));
    }
    for r in &reports {
        println!("mean {} {:.3} dB", r.metric, r.mean);
    }
    if let Some(path) = out {
        let frames: Vec<&str> = pairs.iter().map(|(n, _, _)| n.as_str()).collect();
        let json = serde_json::json!({ "frames": frames, "reports": reports });
        fs::write(path, serde_json::to_string_pretty(&json)?).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

pub fn tonemap(input: &Path, out: &Path, key: f64, white: f64) -> Result<()> {
    if !(key > 0.0) || !(white > 0.0) {
        bail!(Usage("key and white must be positive".into()));
    }
    let jobs: Vec<(PathBuf, PathBuf)> = if input.is_dir() {
        create_dir(out)?;
        hdr_files(input)?
            .into_iter()
            .map(|p| {
                let name = format!("{}.png", p.file_stem().unwrap_or_default().to_string_lossy());
                (p, out.join(name))
            })
            .collect()
    } else {
        vec![(input.to_path_buf(), out.to_path_buf())]
    };
    for (src, dst) in jobs {
        let img = load_hdr(&src).with_context(|| format!("reading {}", src.display()))?;
        if img.channels() != 1 && img.channels() != 3 {
            bail!(Error::InvalidInput(format!("{} has {} channels", src.display(), img.channels())));
        }
        tonemap_reinhard(&img, key, white)
            .save(&dst)
            .map_err(Error::from)
            .with_context(|| format!("writing {}", dst.display()))?;
    }
    Ok(())
}

/// Response used for generated sequences: g(z) = 2.2·ln((z+1)/256), threshold 13.
pub fn synthetic_response() -> ResponseCurve {
    ResponseCurve::power_law(1, 255, 13, 2.2).expect("valid power-law curve")
}

#[allow(clippy::too_many_arguments)]
pub fn gen_synthetic(
    out: &Path,
    width: Option<usize>,
    height: Option<usize>,
    frames: Option<usize>,
    seed: Option<u64>,
    noise: Option<f64>,
    long: Option<f64>,
    short: Option<f64>,
) -> Result<()> {
    let mut spec = SceneSpec::default();
    let (sx, sy) = (
        width.unwrap_or(spec.width) as f64 / spec.width as f64,
        height.unwrap_or(spec.height) as f64 / spec.height as f64,
    );
    for obj in &mut spec.objects {
        obj.x *= sx;
        obj.y *= sy;
    }
    spec.width = width.unwrap_or(spec.width);
    spec.height = height.unwrap_or(spec.height);
    spec.frames = frames.unwrap_or(spec.frames);
    spec.seed = seed.unwrap_or(spec.seed);
    spec.noise_sigma = noise.unwrap_or(spec.noise_sigma);
    spec.exposures = [long.unwrap_or(spec.exposures[0]), short.unwrap_or(spec.exposures[1])];
    spec.validate().map_err(|e| Usage(e.to_string()))?;

    let crf = synthetic_response();
    let seq = generate_synthetic(&spec, &crf)?;
    for sub in ["truth", "masks"] {
        create_dir(&out.join(sub))?;
    }
    let mut manifest = Vec::new();
    for (i, frame) in seq.frames.iter().enumerate() {
        let name = frame_name(i);
        save_ldr(out.join(format!("{}.png", name)), frame)?;
        save_pfm(out.join("truth").join(format!("{}.pfm", name)), &seq.truth[i])?;
        save_mask(out.join("masks").join(format!("{}.png", name)), &seq.object_masks[i])?;
        manifest.push((format!("{}.png", name), frame.exposure_s));
    }
    fs::write(out.join("manifest.txt"), format_manifest(&manifest))?;
    fs::write(out.join("crf.txt"), format_crf(&crf))?;
    info!("wrote {} frames to {}", seq.frames.len(), out.display());
    Ok(())
}

pub fn kr_selftest(instances: usize, seed: u64, tolerance: f64, config: &ConfigArgs) -> Result<()> {
    let regression = load_config(config)?
        .synthesis()
        .map_err(|e| Usage(e.to_string()))?
        .regression;
    let start = Instant::now();
    let report = maphdr::kernel::gradient_selftest(instances, seed, &regression);
    println!("{}", serde_json::to_string(&report)?);
    info!("{} instances in {:.3}s", instances, start.elapsed().as_secs_f64());
    if !report.passes(tolerance) {
        bail!(NumericalFailure(format!(
            "gradient mismatch: relative {:.3e}, absolute {:.3e} (tolerance {:e})",
            report.max_relative_error, report.max_absolute_error_tiny, tolerance
        )));
    }
    Ok(())
}

fn load_any(path: &Path) -> Result<Image> {
    let ext = path.extension().map(|e| e.to_string_lossy().to_ascii_lowercase());
    let img = match ext.as_deref() {
        Some("pfm") | Some("hdr") => load_hdr(path)?,
        _ => load_ldr(path, 1.0)?.to_image(),
    };
    Ok(img)
}

fn grey(img: &Image) -> Image {
    if img.channels() == 3 {
        img.luminance()
    } else {
        img.channel(0)
    }
}

pub fn flow(reference: &Path, target: &Path, out: &Path, warped: Option<&Path>, config: &ConfigArgs) -> Result<()> {
    let params = load_config(config)?.synthesis().map_err(|e| Usage(e.to_string()))?.flow;
    let r = load_any(reference).with_context(|| format!("reading {}", reference.display()))?;
    let t = load_any(target).with_context(|| format!("reading {}", target.display()))?;
    let field = estimate_flow(&grey(&r), &grey(&t), &params)?;
    info!("max flow magnitude {:.3} px", field.max_magnitude());
    save_pfm(out, &field.to_image()).with_context(|| format!("writing {}", out.display()))?;
    if let Some(path) = warped {
        save_hdr(path, &warp(&t, &field).0).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}
