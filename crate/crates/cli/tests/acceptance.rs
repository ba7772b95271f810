//! Acceptance criteria 1 to 10. Every criterion runs and prints one
//! PASS/FAIL line; the test fails afterwards if any criterion failed.

use maphdr::imaging::{apply_response, inverse_response, LdrFrame, ResponseCurve};
use maphdr::io::{
    format_crf, generate_synthetic, parse_crf, read_pfm, read_rgbe, write_pfm, write_rgbe, SceneSpec,
};
use maphdr::kernel::{design_matrix, gradient_selftest, solve_ridge, LocalSample, RegressionConfig};
use maphdr::lowrank::{complete_background, support_energy, update_support, CompletionParams, Grid, MrfWeights, SupportPrior};
use maphdr::metrics::log_psnr;
use maphdr::motion::{estimate_flow, FlowParams};
use maphdr::optimizer::{minimize, BfgsParams};
use maphdr::pipeline::{synthesize_video, SynthesisConfig};
use maphdr::Image;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::process::Command;
use std::time::{Duration, Instant};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn gradient_correctness() -> Outcome {
    let start = Instant::now();
    let report = gradient_selftest(100, 2024, &RegressionConfig::default());
    let t = start.elapsed();
    let pass = report.passes(1e-5) && t < Duration::from_secs(10);
    outcome(
        pass,
        format!(
            "100 instances, max relative error {:.2e}, max absolute error on near-zero entries {:.2e}, {:.2}s",
            report.max_relative_error,
            report.max_absolute_error_tiny,
            secs(t)
        ),
    )
}

/// Least squares on the stacked system [√Λ X; √ε I] β = [√Λ y; 0] by QR,
/// which never forms the normal equations.
fn ridge_oracle(x: &DMatrix<f64>, w: &[f64], y: &DVector<f64>, eps: f64) -> DVector<f64> {
    let (p, m) = x.shape();
    let a = DMatrix::from_fn(p + m, m, |i, j| {
        if i < p {
            w[i].sqrt() * x[(i, j)]
        } else if i - p == j {
            eps.sqrt()
        } else {
            0.0
        }
    });
    let b = DVector::from_fn(p + m, |i, _| if i < p { w[i].sqrt() * y[i] } else { 0.0 });
    let qr = a.qr();
    let qtb = qr.q().transpose() * b;
    qr.r().solve_upper_triangular(&qtb).expect("R is nonsingular with eps > 0")
}

fn ridge_oracle_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let radius = rng.random_range(1..=3i32);
        let mut samples = Vec::new();
        for dt in -1..=1 {
            for dy in -radius..=radius {
                for dx in -radius..=radius {
                    samples.push(LocalSample {
                        offset: [dx as f64, dy as f64, dt as f64],
                        value: rng.random_range(0.0..1.0),
                        phi: 1.0,
                        well_exposed: true,
                    });
                }
            }
        }
        let x = design_matrix(&samples);
        let w: Vec<f64> = (0..samples.len()).map(|_| rng.random_range(0.0..1.0)).collect();
        let y = DVector::from_iterator(samples.len(), samples.iter().map(|s| s.value));
        let eps = 10f64.powf(rng.random_range(-3.0..0.5));
        let got = solve_ridge(&x, &w, &y, eps).unwrap();
        let want = ridge_oracle(&x, &w, &y, eps);
        worst = worst.max((got - &want).amax() / want.amax().max(1.0));
    }
    let t = start.elapsed();
    outcome(
        worst < 1e-10 && t < Duration::from_secs(5),
        format!("1000 systems, max deviation {:.2e}, {:.2}s", worst, secs(t)),
    )
}

/// 60% of entries observed: a fifth of the rows show one entry, three
/// fifths two, a fifth all three, positions drawn at random.
fn sixty_percent_mask(k: usize, rng: &mut ChaCha8Rng) -> DMatrix<bool> {
    let mut m = DMatrix::from_element(k, 3, false);
    for i in 0..k {
        let count = match i % 5 {
            0 => 1,
            4 => 3,
            _ => 2,
        };
        let mut cols = [0usize, 1, 2];
        for a in 0..2 {
            let b = rng.random_range(a..3);
            cols.swap(a, b);
        }
        for &c in &cols[..count] {
            m[(i, c)] = true;
        }
    }
    m
}

struct CompletionRun {
    error: f64,
    iterations: usize,
    /// Relative error over rows with at least two observed entries.
    multi_entry_error: f64,
    /// Relative error over rows with a single observed entry.
    single_entry_error: f64,
}

fn completion_error(rank: usize, rng: &mut ChaCha8Rng) -> CompletionRun {
    let k = 10_000;
    let u = DMatrix::from_fn(k, rank, |_, _| rng.random_range(0.5..2.0));
    let v = DMatrix::from_fn(rank, 3, |_, _| rng.random_range(0.2..1.5));
    let d = &u * &v;
    let omega = sixty_percent_mask(k, rng);
    let params = CompletionParams {
        alpha: 1e-6 * d.norm(),
        max_iters: 500,
        tol: 1e-12,
        max_rank: rank,
    };
    let c = complete_background(&d, &omega, &params).unwrap();
    let mut sums = [[0.0f64; 2]; 2];
    for i in 0..k {
        let class = usize::from((0..3).filter(|&j| omega[(i, j)]).count() >= 2);
        for j in 0..3 {
            sums[class][0] += (c.b[(i, j)] - d[(i, j)]).powi(2);
            sums[class][1] += d[(i, j)].powi(2);
        }
    }
    CompletionRun {
        error: (&c.b - &d).norm() / d.norm(),
        iterations: c.iterations,
        multi_entry_error: (sums[1][0] / sums[1][1]).sqrt(),
        single_entry_error: (sums[0][0] / sums[0][1]).sqrt(),
    }
}

fn matrix_completion() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let start = Instant::now();
    let r1 = completion_error(1, &mut rng);
    let r2 = completion_error(2, &mut rng);
    let t = start.elapsed();
    let describe = |r: &CompletionRun| {
        format!(
            "error {:.2e} in {} it; rows with 2+ entries {:.2e}, single-entry rows {:.2e}",
            r.error, r.iterations, r.multi_entry_error, r.single_entry_error
        )
    };
    outcome(
        r1.error < 1e-4 && r2.error < 1e-4 && t < Duration::from_secs(5),
        format!(
            "K=10000, 60% observed: rank-1 {}; rank-2 {}; {:.2}s",
            describe(&r1),
            describe(&r2),
            secs(t)
        ),
    )
}

fn mrf_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let grid = Grid::new(3, 2);
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let d = DMatrix::from_fn(6, 2, |_, _| rng.random_range(-2.0..2.0));
        let b = DMatrix::from_fn(6, 2, |_, _| rng.random_range(-2.0..2.0));
        let m = DMatrix::from_fn(6, 2, |_, _| rng.random_bool(0.8));
        let w = MrfWeights {
            w_s: rng.random_range(0.0..2.0),
            w_t: rng.random_range(0.0..2.0),
            beta: rng.random_range(0.0..2.0),
            gamma: rng.random_range(0.0..1.0),
        };
        let prior = SupportPrior::Pairwise;
        let s = update_support(&d, &b, &m, grid, &w, prior).unwrap();
        let got = support_energy(&d, &b, &m, &s, grid, &w, prior);
        let mut best = f64::INFINITY;
        for bits in 0u32..4096 {
            let s = DMatrix::from_fn(6, 2, |i, j| bits >> (j * 6 + i) & 1 == 1);
            best = best.min(support_energy(&d, &b, &m, &s, grid, &w, prior));
        }
        worst = worst.max((got - best).abs() / best.abs().max(1.0));
    }
    let t = start.elapsed();
    outcome(
        worst < 1e-9 && t < Duration::from_secs(30),
        format!("200 instances of 3x2x2, max energy gap {:.2e}, {:.2}s", worst, secs(t)),
    )
}

fn bfgs() -> Outcome {
    let c = DVector::from_vec(vec![1.0, 2.0, 3.0]);
    let target = c.clone();
    let quad = minimize(
        move |x: &DVector<f64>| {
            let d = x - &target;
            (d.norm_squared(), d * 2.0)
        },
        DVector::zeros(3),
        &BfgsParams::default(),
    )
    .unwrap();
    let quad_err = (&quad.x_opt - &c).amax();
    let rosen = minimize(
        |x: &DVector<f64>| {
            let (a, b) = (x[0], x[1]);
            let f = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
            let g = DVector::from_vec(vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)]);
            (f, g)
        },
        DVector::from_vec(vec![-1.2, 1.0]),
        &BfgsParams::default(),
    )
    .unwrap();
    outcome(
        quad.iterations <= 3 && quad_err < 1e-8 && rosen.f_opt < 1e-8 && rosen.iterations <= 100,
        format!(
            "quadratic {} it, error {:.1e}; Rosenbrock f = {:.1e} after {} it",
            quad.iterations, quad_err, rosen.f_opt, rosen.iterations
        ),
    )
}

fn texture(x: f64, y: f64) -> f64 {
    0.5 + 0.2 * (0.3 * x).sin() * (0.25 * y).cos() + 0.15 * (0.11 * x + 0.17 * y).sin()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn flow() -> Outcome {
    let params = FlowParams::default();
    let reference = Image::from_fn(96, 72, |x, y| texture(x as f64, y as f64));
    let target = Image::from_fn(96, 72, |x, y| texture(x as f64 - 3.0, y as f64));
    let f = estimate_flow(&reference, &target, &params).unwrap();
    let mut errors = Vec::new();
    for y in 8..64 {
        for x in 8..85 {
            errors.push((f.u.get(x, y, 0) - 3.0).hypot(f.v.get(x, y, 0)));
        }
    }
    let med = median(errors);
    let still = estimate_flow(&reference, &reference, &params).unwrap().max_magnitude();
    outcome(
        med < 0.5 && still < 1e-6,
        format!("3 px shift median endpoint error {:.3} px; identical frames max flow {:.1e}", med, still),
    )
}

fn benchmark_response() -> ResponseCurve {
    ResponseCurve::power_law(1, 255, 13, 2.2).unwrap()
}

fn end_to_end() -> Outcome {
    let crf = benchmark_response();
    let spec = SceneSpec::default();
    let seq = generate_synthetic(&spec, &crf).unwrap();
    let config = SynthesisConfig::default();
    assert_eq!((config.levels, config.regression.block_size(), config.regression.bfgs_iters), (3, 7, 10));
    let start = Instant::now();
    let out = synthesize_video(&seq.frames, &crf, &config).unwrap();
    let t = start.elapsed();
    let (mut ours, mut naive) = (Vec::new(), Vec::new());
    let (mut tp, mut pos, mut fp, mut neg) = (0usize, 0usize, 0usize, 0usize);
    for (k, r) in out.iter().enumerate() {
        let plain = inverse_response(&seq.frames[k], &crf).unwrap();
        ours.push(log_psnr(&r.hdr, &seq.truth[k], None).unwrap());
        naive.push(log_psnr(&plain, &seq.truth[k], None).unwrap());
        for (&s, &m) in r.support.data().iter().zip(seq.object_masks[k].data()) {
            match (m, s) {
                (true, true) => tp += 1,
                (true, false) => {}
                (false, true) => fp += 1,
                (false, false) => {}
            }
            if m {
                pos += 1;
            } else {
                neg += 1;
            }
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (mo, mn) = (mean(&ours), mean(&naive));
    let recall = tp as f64 / pos as f64;
    let fpr = fp as f64 / neg as f64;
    let per_frame: Vec<String> = ours.iter().zip(&naive).map(|(a, b)| format!("{:.1}/{:.1}", a, b)).collect();
    outcome(
        mo >= mn + 3.0 && recall >= 0.9 && fpr <= 0.05 && t < Duration::from_secs(300),
        format!(
            "mean logPSNR {:.2} vs naive {:.2} dB (per frame ours/naive: {}), recall {:.3}, false positives {:.4}, {:.1}s",
            mo,
            mn,
            per_frame.join(" "),
            recall,
            fpr,
            secs(t)
        ),
    )
}

fn determinism() -> Outcome {
    let crf = benchmark_response();
    let spec = SceneSpec {
        width: 96,
        height: 72,
        frames: 5,
        ..SceneSpec::default()
    };
    let seq = generate_synthetic(&spec, &crf).unwrap();
    let config = SynthesisConfig::default();
    let run = || -> Vec<Vec<u8>> {
        synthesize_video(&seq.frames, &crf, &config)
            .unwrap()
            .iter()
            .map(|r| write_pfm(&r.hdr).unwrap())
            .collect()
    };
    let (a, b) = (run(), run());
    let same = a == b;
    outcome(
        same,
        format!("two runs over {} frames of 96x72, PFM bytes identical: {}", a.len(), same),
    )
}

fn round_trips() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let data: Vec<f64> = (0..31 * 17 * 3).map(|_| rng.random_range(-1e4f32..1e4) as f64).collect();
    let img = Image::new(31, 17, 3, data).unwrap();
    let bytes = write_pfm(&img).unwrap();
    let back = read_pfm(&bytes).unwrap();
    let pfm_ok = back == img && write_pfm(&back).unwrap() == bytes;

    let data: Vec<f64> = (0..64 * 9 * 3).map(|_| 10f64.powf(rng.random_range(-5.0..5.0))).collect();
    let img = Image::new(64, 9, 3, data).unwrap();
    let back = read_rgbe(&write_rgbe(&img).unwrap()).unwrap();
    let mut rgbe_worst: f64 = 0.0;
    for i in 0..img.pixel_count() {
        let (a, b) = (img.pixel(i), back.pixel(i));
        let peak = a.iter().copied().fold(0.0, f64::max);
        for c in 0..3 {
            rgbe_worst = rgbe_worst.max((a[c] - b[c]).abs() / peak);
        }
    }
    let rgbe_ok = rgbe_worst <= 1.0 / 256.0;

    let t: Vec<f64> = (0..=255).map(|z| ((z as f64 + 1.0) / 256.0).ln() * 2.0 + 0.01 * (z as f64 * 0.1).sin()).collect();
    let crf = ResponseCurve::new(vec![t], 255, 13).unwrap();
    let parsed = parse_crf(&format_crf(&crf)).unwrap();
    let (lo, hi) = parsed.monotone_range(0);
    let codes: Vec<u16> = (lo as u16..=hi as u16).collect();
    let frame = LdrFrame::new(codes.len(), 1, 1, codes.clone(), 0.004).unwrap();
    let again = apply_response(&inverse_response(&frame, &parsed).unwrap(), &parsed, 0.004).unwrap();
    let crf_ok = parsed == crf && again.data == codes;
    outcome(
        pfm_ok && rgbe_ok && crf_ok,
        format!(
            "PFM bit-exact {}; RGBE worst error {:.5} of pixel peak (limit {:.5}); CRF file exact and codes {}..={} restored {}",
            pfm_ok,
            rgbe_worst,
            1.0 / 256.0,
            lo,
            hi,
            crf_ok
        ),
    )
}

fn cli_sequence() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_maphdr");
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("sequence");
    let out = dir.path().join("hdr");
    let report = dir.path().join("report.json");
    let run = |args: &[&str]| Command::new(bin).args(args).output().unwrap();
    let p = |path: &std::path::Path| path.to_str().unwrap().to_string();
    // a stand-in for a public sequence: PNG frames, exposure manifest,
    // response file and reference radiance, all in the documented formats
    let gen = run(&["gen-synthetic", "--out", &p(&data), "--width", "64", "--height", "48", "--frames", "4"]);
    let synth = run(&[
        "synthesize",
        "--manifest",
        &p(&data.join("manifest.txt")),
        "--crf",
        &p(&data.join("crf.txt")),
        "--out",
        &p(&out),
        "--set",
        "levels=2",
    ]);
    let metrics = run(&[
        "metrics",
        "--metric",
        "all",
        "--test",
        &p(&out),
        "--ref",
        &p(&data.join("truth")),
        "--out",
        &p(&report),
    ]);
    let codes = [gen.status.code(), synth.status.code(), metrics.status.code()];
    let parsed: Option<serde_json::Value> = std::fs::read_to_string(&report)
        .ok()
        .and_then(|t| serde_json::from_str(&t).ok());
    let frames_scored = parsed.as_ref().map_or(0, |j| {
        j["reports"]
            .as_array()
            .map(|rs| {
                rs.iter()
                    .filter(|r| r["per_frame"].as_array().is_some_and(|v| v.len() == 4 && v.iter().all(|x| x.is_f64())))
                    .count()
            })
            .unwrap_or(0)
    });
    let ok = codes.iter().all(|c| *c == Some(0)) && frames_scored == 2;
    let stdout = String::from_utf8_lossy(&metrics.stdout);
    let means: Vec<&str> = stdout.lines().filter(|l| l.starts_with("mean")).collect();
    outcome(
        ok,
        format!(
            "exit codes {:?}, per-frame logPSNR and puPSNR for 4 frames: {}; {}",
            codes,
            frames_scored == 2,
            means.join(", ")
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

#[test]
fn acceptance() {
    let criteria: [Criterion; 10] = [
        ("gradient correctness", gradient_correctness),
        ("ridge oracle", ridge_oracle_check),
        ("matrix completion", matrix_completion),
        ("MRF exactness", mrf_exactness),
        ("BFGS", bfgs),
        ("flow", flow),
        ("end-to-end synthetic benchmark", end_to_end),
        ("determinism", determinism),
        ("format round-trips", round_trips),
        ("CLI on a supplied sequence", cli_sequence),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        let line = format!(
            "criterion {:>2} {}: {} ({})",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            name,
            o.detail
        );
        println!("{}", line);
        if !o.pass {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {:?}", failed);
}
