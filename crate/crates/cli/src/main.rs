//! `maphdr`: HDR video from alternating-exposure LDR frames.

mod commands;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "maphdr", version, about = "HDR video synthesis from alternating-exposure frames")]
struct Cli {
    /// Log level filter (error, warn, info, debug, trace).
    #[arg(long, global = true, default_value = "info")]
    log_level: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug, Clone)]
pub struct ConfigArgs {
    /// key = value configuration file; defaults apply to missing keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override one configuration key, e.g. `--set levels=2`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Synthesize one HDR frame per input frame.
    Synthesize {
        /// Lines of `filename exposure_seconds` in temporal order.
        #[arg(long)]
        manifest: PathBuf,
        /// Camera response file.
        #[arg(long)]
        crf: PathBuf,
        /// Output directory for frame_NNNN.pfm / .hdr.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        /// Shorthand for `--set support_prior=...` (pairwise or linear).
        #[arg(long)]
        support_prior: Option<String>,
        #[arg(long, value_enum, default_value = "pfm")]
        format: commands::HdrFormat,
        /// Append one JSON object of per-frame statistics per line.
        #[arg(long)]
        log_json: Option<PathBuf>,
        /// Write support masks, regression masks and backgrounds here.
        #[arg(long)]
        dump_dir: Option<PathBuf>,
    },
    /// Score HDR frames against reference frames with matching file stems.
    Metrics {
        /// logpsnr, pupsnr or all.
        #[arg(long, default_value = "all")]
        metric: String,
        #[arg(long)]
        test: PathBuf,
        #[arg(long = "ref")]
        reference: PathBuf,
        /// JSON report path.
        #[arg(long)]
        out: Option<PathBuf>,
        /// logPSNR peak; defaults to each reference frame's maximum luminance.
        #[arg(long)]
        peak: Option<f64>,
        /// cd/m² per unit of frame luminance for puPSNR.
        #[arg(long, default_value_t = 1.0)]
        pu_scale: f64,
        /// Luminance (cd/m²) whose encoding is the puPSNR peak.
        #[arg(long, default_value_t = 10_000.0)]
        pu_peak: f64,
    },
    /// Tone map a .pfm/.hdr file, or every such file in a directory, to PNG.
    Tonemap {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.18)]
        key: f64,
        /// Smallest luminance mapped to white; `inf` disables burn-out.
        #[arg(long, default_value_t = f64::INFINITY)]
        white: f64,
    },
    /// Render the synthetic moving-object benchmark sequence.
    GenSynthetic {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        width: Option<usize>,
        #[arg(long)]
        height: Option<usize>,
        #[arg(long)]
        frames: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Code-domain noise standard deviation.
        #[arg(long)]
        noise: Option<f64>,
        /// Exposure of even frames, seconds.
        #[arg(long)]
        long: Option<f64>,
        /// Exposure of odd frames, seconds.
        #[arg(long)]
        short: Option<f64>,
    },
    /// Check the analytic steering gradient against finite differences.
    KrSelftest {
        #[arg(long, default_value_t = 100)]
        instances: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1e-5)]
        tolerance: f64,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Estimate optical flow between two frames (debug).
    Flow {
        /// Frame the flow is defined on.
        #[arg(long)]
        reference: PathBuf,
        /// Frame that is warped onto the reference.
        #[arg(long)]
        target: PathBuf,
        /// 3-channel PFM holding (u, v, 0).
        #[arg(long)]
        out: PathBuf,
        /// Also write the warped target.
        #[arg(long)]
        warped: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { commands::EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    env_logger::Builder::new()
        .parse_filters(&cli.log_level)
        .format_timestamp(None)
        .init();
    let result = match cli.command {
        Command::Synthesize {
            manifest,
            crf,
            out,
            config,
            support_prior,
            format,
            log_json,
            dump_dir,
        } => commands::synthesize(commands::SynthesizeArgs {
            manifest,
            crf,
            out,
            config,
            support_prior,
            format,
            log_json,
            dump_dir,
        }),
        Command::Metrics {
            metric,
            test,
            reference,
            out,
            peak,
            pu_scale,
            pu_peak,
        } => commands::metrics(&metric, &test, &reference, out.as_deref(), peak, pu_scale, pu_peak),
        Command::Tonemap { input, out, key, white } => commands::tonemap(&input, &out, key, white),
        Command::GenSynthetic {
            out,
            width,
            height,
            frames,
            seed,
            noise,
            long,
            short,
        } => commands::gen_synthetic(&out, width, height, frames, seed, noise, long, short),
        Command::KrSelftest {
            instances,
            seed,
            tolerance,
            config,
        } => commands::kr_selftest(instances, seed, tolerance, &config),
        Command::Flow {
            reference,
            target,
            out,
            warped,
            config,
        } => commands::flow(&reference, &target, &out, warped.as_deref(), &config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {:#}", e);
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
