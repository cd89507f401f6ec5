//! sglab: command-line driver for the sine-Gordon multi-soliton laboratory.
//!
//! Exit codes: 0 success, 1 property failure, 2 usage/schema error,
//! 3 invariant violation, 4 numerical instability.

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use sg_core::*;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "sglab", version, about = "elliptic sine-Gordon multi-soliton laboratory")]
struct Cli {
    /// worker cap for parallel sections (equivalent to SGLAB_THREADS)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct ConfigArg {
    /// JSON parameter file: {"n":…, "waves":[{"theta":…}|{"p":…,"q":…}], "phases":[…]}
    #[arg(long)]
    config: PathBuf,
    /// write the artifact here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample U_n − π on a square grid, emitting CSV (x,y,u)
    Eval {
        #[command(flatten)]
        common: ConfigArg,
        /// half-width of the sampling window
        #[arg(long, default_value_t = 10.0)]
        window: f64,
        /// grid spacing
        #[arg(long, default_value_t = 0.5)]
        h: f64,
    },
    /// Max |ΔU_n − sin U_n| over random points
    Residual {
        #[command(flatten)]
        common: ConfigArg,
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        #[arg(long, default_value_t = 15.0)]
        range: f64,
    },
    /// Morse index certification (SpectralReport as JSON)
    Morse {
        #[command(flatten)]
        common: ConfigArg,
        #[arg(long, default_value_t = 0.02)]
        delta: f64,
        #[arg(long, default_value_t = 30.0)]
        coarse_r: f64,
        #[arg(long, default_value_t = 0.25)]
        coarse_h: f64,
        #[arg(long, default_value_t = 40.0)]
        fine_r: f64,
        #[arg(long, default_value_t = 0.125)]
        fine_h: f64,
    },
    /// Discrete kernel residual norms for the analytic kernel elements
    Kernel {
        #[command(flatten)]
        common: ConfigArg,
        #[arg(long, default_value_t = 30.0)]
        r: f64,
        #[arg(long, default_value_t = 0.25)]
        h: f64,
    },
    /// Elliptic Bäcklund (uv) residual sweep off the singular set
    Backlund {
        #[command(flatten)]
        common: ConfigArg,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 4.0)]
        range: f64,
    },
    /// Scattering samples a(λ), b(λ) along a fixed-y line
    Scatter {
        #[command(flatten)]
        common: ConfigArg,
        /// comma-separated spectral parameters
        #[arg(long, value_delimiter = ',', required = true)]
        lambda: Vec<f64>,
        #[arg(long, default_value_t = 0.0)]
        y: f64,
        #[arg(long, default_value_t = 40.0)]
        x_max: f64,
        #[arg(long, default_value_t = 0.005)]
        step: f64,
    },
    /// Trace the 2n nodal ends and compare to predictions
    Ends {
        #[command(flatten)]
        common: ConfigArg,
        #[arg(long, default_value_t = 40.0)]
        radius: f64,
        #[arg(long, default_value_t = 4.0)]
        band: f64,
    },
    /// Run the full property suite; nonzero exit on any failure
    VerifyAll {
        #[command(flatten)]
        common: ConfigArg,
    },
}

enum CliError {
    Schema(String),
    Invariant(String),
    Numerical(String),
    Io(String),
    Property(String),
}

impl From<SgError> for CliError {
    fn from(e: SgError) -> Self {
        match e {
            SgError::ConfigDegenerate(_) | SgError::Invariant(_) => CliError::Invariant(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Property(_) => 1,
            CliError::Schema(_) | CliError::Io(_) => 2,
            CliError::Invariant(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
    fn message(&self) -> &str {
        match self {
            CliError::Schema(m)
            | CliError::Invariant(m)
            | CliError::Numerical(m)
            | CliError::Io(m)
            | CliError::Property(m) => m,
        }
    }
}

fn parse_config(path: &PathBuf) -> Result<(SolitonConfig, String), CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    let digest = hex_digest(&bytes);
    let doc: Value = serde_json::from_slice(&bytes)
        .map_err(|e| CliError::Schema(format!("config is not valid JSON: {e}")))?;
    let obj = doc.as_object().ok_or_else(|| CliError::Schema("config must be an object".into()))?;
    let n = obj
        .get("n")
        .and_then(Value::as_u64)
        .ok_or_else(|| CliError::Schema("field `n`: positive integer required".into()))?
        as usize;
    let waves_raw = obj
        .get("waves")
        .and_then(Value::as_array)
        .ok_or_else(|| CliError::Schema("field `waves`: array required".into()))?;
    let phases_raw = obj
        .get("phases")
        .and_then(Value::as_array)
        .ok_or_else(|| CliError::Schema("field `phases`: array required".into()))?;
    if waves_raw.len() != n || phases_raw.len() != n {
        return Err(CliError::Schema(format!(
            "`waves` and `phases` must each have n = {n} entries (got {} and {})",
            waves_raw.len(),
            phases_raw.len()
        )));
    }
    let mut waves = Vec::with_capacity(n);
    for (i, w) in waves_raw.iter().enumerate() {
        let wo = w
            .as_object()
            .ok_or_else(|| CliError::Schema(format!("waves[{i}]: object required")))?;
        let wave = if let Some(theta) = wo.get("theta").and_then(Value::as_f64) {
            WaveVector::from_theta(theta)
        } else {
            let p = wo.get("p").and_then(Value::as_f64).ok_or_else(|| {
                CliError::Schema(format!("waves[{i}]: need `theta` or both `p` and `q`"))
            })?;
            let q = wo.get("q").and_then(Value::as_f64).ok_or_else(|| {
                CliError::Schema(format!("waves[{i}]: need `theta` or both `p` and `q`"))
            })?;
            WaveVector::new(p, q).map_err(|e| CliError::Invariant(e.to_string()))?
        };
        waves.push(wave);
    }
    let mut phases = Vec::with_capacity(n);
    for (i, p) in phases_raw.iter().enumerate() {
        phases.push(
            p.as_f64()
                .ok_or_else(|| CliError::Schema(format!("phases[{i}]: number required")))?,
        );
    }
    let config = SolitonConfig::new(waves, phases).map_err(|e| CliError::Invariant(e.to_string()))?;
    Ok((config, digest))
}

fn hex_digest(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let out = h.finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}

fn manifest(command: &str, digest: &str, params: Value, out: &Option<PathBuf>) -> Value {
    json!({
        "command": command,
        "config_digest": digest,
        "tool_version": env!("CARGO_PKG_VERSION"),
        "parameters": params,
        "outputs": [out.as_ref().map(|p| p.display().to_string()).unwrap_or_else(|| "-".into())],
    })
}

fn emit(out: &Option<PathBuf>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn f17(v: f64) -> String {
    format!("{v:.16e}")
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(t) = cli.threads {
        std::env::set_var("SGLAB_THREADS", t.to_string());
    }
    match cli.cmd {
        Cmd::Eval { common, window, h } => {
            let (config, digest) = parse_config(&common.config)?;
            let eng = TauEngine::new(&config)?;
            let man = manifest("eval", &digest, json!({"window": window, "h": h}), &common.out);
            let steps = (2.0 * window / h).round() as usize;
            let mut csv = format!("# {man}\nx,y,u\n");
            for iy in 0..=steps {
                let y = -window + iy as f64 * h;
                for ix in 0..=steps {
                    let x = -window + ix as f64 * h;
                    let u = eng.eval_solution(x, y) - std::f64::consts::PI;
                    csv.push_str(&format!("{},{},{}\n", f17(x), f17(y), f17(u)));
                }
            }
            emit(&common.out, &csv)
        }
        Cmd::Residual { common, samples, range } => {
            let (config, digest) = parse_config(&common.config)?;
            let eng = TauEngine::new(&config)?;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5747);
            let mut worst = 0.0f64;
            for _ in 0..samples {
                let x = rng.gen_range(-range..range);
                let y = rng.gen_range(-range..range);
                worst = worst.max(eng.pde_residual(x, y).abs());
            }
            let pass = worst <= 1e-10;
            let man = manifest(
                "residual",
                &digest,
                json!({"samples": samples, "range": range, "tolerance": 1e-10}),
                &common.out,
            );
            let doc = json!({"manifest": man, "max_residual": worst, "pass": pass});
            emit(&common.out, &format!("{}\n", serde_json::to_string_pretty(&doc).unwrap()))?;
            if pass {
                Ok(())
            } else {
                Err(CliError::Property(format!("max residual {worst:.3e} above 1e-10")))
            }
        }
        Cmd::Morse { common, delta, coarse_r, coarse_h, fine_r, fine_h } => {
            let (config, digest) = parse_config(&common.config)?;
            let schedule = [GridSpec::new(coarse_r, coarse_h)?, GridSpec::new(fine_r, fine_h)?];
            let rep = morse_index(&config, &schedule, delta)?;
            let man = manifest(
                "morse",
                &digest,
                json!({
                    "delta": delta,
                    "schedule": [[coarse_r, coarse_h], [fine_r, fine_h]],
                }),
                &common.out,
            );
            let verdict = match &rep.morse_index {
                MorseVerdict::Index(i) => json!(i),
                MorseVerdict::Unstable(why) => json!({"unstable": why}),
            };
            let doc = json!({
                "manifest": man,
                "grid": {"r": rep.grid.r, "h": rep.grid.h},
                "delta": rep.delta,
                "count_below_minus_delta": rep.count_below_minus_delta,
                "count_below_minus_half_delta": rep.count_below_minus_half_delta,
                "lanczos_count": rep.lanczos_count,
                "morse_index": verdict,
                "smallest_eigenvalues": rep.smallest_eigenvalues,
                "kernel_residual_norms": rep.kernel_residual_norms,
                "gap": rep.gap,
            });
            emit(&common.out, &format!("{}\n", serde_json::to_string_pretty(&doc).unwrap()))?;
            match rep.morse_index {
                MorseVerdict::Index(_) => Ok(()),
                MorseVerdict::Unstable(why) => Err(CliError::Numerical(format!("Unstable: {why}"))),
            }
        }
        Cmd::Kernel { common, r, h } => {
            let (config, digest) = parse_config(&common.config)?;
            let grid = GridSpec::new(r, h)?;
            let norms: Vec<f64> = (0..config.n())
                .map(|j| kernel_residual_norm(&config, &grid, j))
                .collect::<Result<_, _>>()?;
            let man = manifest("kernel", &digest, json!({"r": r, "h": h}), &common.out);
            let doc = json!({"manifest": man, "kernel_residual_norms": norms});
            emit(&common.out, &format!("{}\n", serde_json::to_string_pretty(&doc).unwrap()))
        }
        Cmd::Backlund { common, samples, range } => {
            let (config, digest) = parse_config(&common.config)?;
            let lab = BacklundLab::new(&config)?;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x4241);
            let mut worst = 0.0f64;
            let mut tested = 0usize;
            let mut skipped = 0usize;
            while tested < samples && skipped < 100 * samples {
                let x = rng.gen_range(-range..range);
                let y = rng.gen_range(-range..range);
                match lab.elliptic_backlund_residual(x, y) {
                    Ok((r1, r2)) => {
                        worst = worst.max(r1.norm()).max(r2.norm());
                        tested += 1;
                    }
                    Err(SgError::NearSingular(_)) => skipped += 1,
                    Err(e) => return Err(e.into()),
                }
            }
            let pass = worst <= 1e-8 && tested == samples;
            let man = manifest(
                "backlund",
                &digest,
                json!({"samples": samples, "range": range, "tolerance": 1e-8}),
                &common.out,
            );
            let doc = json!({
                "manifest": man,
                "max_residual": worst,
                "points_tested": tested,
                "points_skipped_near_singular": skipped,
                "pass": pass,
            });
            emit(&common.out, &format!("{}\n", serde_json::to_string_pretty(&doc).unwrap()))?;
            if pass {
                Ok(())
            } else {
                Err(CliError::Property(format!("Bäcklund residual {worst:.3e} above 1e-8")))
            }
        }
        Cmd::Scatter { common, lambda, y, x_max, step } => {
            let (config, digest) = parse_config(&common.config)?;
            let man = manifest(
                "scatter",
                &digest,
                json!({"lambda": lambda, "y": y, "x_max": x_max, "step": step}),
                &common.out,
            );
            let mut rows = Vec::new();
            for &l in &lambda {
                let s = scattering_coeffs(&config, y, l, x_max, step)?;
                rows.push(json!({
                    "lambda": s.lambda,
                    "y": s.y,
                    "k": s.k,
                    "a_re": s.a.re,
                    "a_im": s.a.im,
                    "abs_a": s.a.norm(),
                    "abs_b": s.b.norm(),
                }));
            }
            let doc = json!({"manifest": man, "samples": rows});
            emit(&common.out, &format!("{}\n", serde_json::to_string_pretty(&doc).unwrap()))
        }
        Cmd::Ends { common, radius, band } => {
            let (config, digest) = parse_config(&common.config)?;
            let ends = trace_nodal(&config, radius, band)?;
            let man = manifest("ends", &digest, json!({"radius": radius, "band": band}), &common.out);
            let rows: Vec<Value> = ends
                .iter()
                .map(|e| {
                    json!({
                        "index": e.index,
                        "direction": e.direction,
                        "measured_angle": e.measured_angle,
                        "predicted_angle": e.predicted_angle,
                        "line_point": e.line_point,
                        "profile_error": e.profile_error,
                    })
                })
                .collect();
            let doc = json!({"manifest": man, "ends": rows});
            emit(&common.out, &format!("{}\n", serde_json::to_string_pretty(&doc).unwrap()))
        }
        Cmd::VerifyAll { common } => {
            let (config, digest) = parse_config(&common.config)?;
            let man = manifest("verify-all", &digest, json!({}), &common.out);
            let mut failures = Vec::new();
            let mut lines = Vec::new();
            verify_all(&config, &mut lines, &mut failures);
            let doc = json!({"manifest": man, "checks": lines, "failures": failures});
            emit(&common.out, &format!("{}\n", serde_json::to_string_pretty(&doc).unwrap()))?;
            if failures.is_empty() {
                Ok(())
            } else {
                Err(CliError::Property(format!("{} property check(s) failed", failures.len())))
            }
        }
    }
}

fn verify_all(config: &SolitonConfig, lines: &mut Vec<Value>, failures: &mut Vec<String>) {
    let mut record = |name: &str, pass: bool, detail: String| {
        lines.push(json!({"check": name, "pass": pass, "detail": detail}));
        if !pass {
            failures.push(name.to_string());
        }
    };

    // PDE residual
    match TauEngine::new(config) {
        Ok(eng) => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x7071);
            let mut worst = 0.0f64;
            for _ in 0..1000 {
                let x = rng.gen_range(-12.0..12.0);
                let y = rng.gen_range(-12.0..12.0);
                worst = worst.max(eng.pde_residual(x, y).abs());
            }
            record("pde_residual", worst <= 1e-10, format!("max {worst:.3e}"));
        }
        Err(e) => record("pde_residual", false, e.to_string()),
    }

    // Bäcklund (uv)
    match BacklundLab::new(config) {
        Ok(lab) => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x7072);
            let mut worst = 0.0f64;
            let mut tested = 0;
            let mut attempts = 0;
            while tested < 50 && attempts < 5000 {
                attempts += 1;
                let x = rng.gen_range(-4.0..4.0);
                let y = rng.gen_range(-4.0..4.0);
                if let Ok((r1, r2)) = lab.elliptic_backlund_residual(x, y) {
                    worst = worst.max(r1.norm()).max(r2.norm());
                    tested += 1;
                }
            }
            record(
                "backlund_uv",
                tested == 50 && worst <= 1e-8,
                format!("max {worst:.3e} over {tested} points"),
            );
        }
        Err(e) => record("backlund_uv", false, e.to_string()),
    }

    // scattering: reflectionless at two λ when every end is transverse to
    // fixed-y lines (p_j bounded away from 0); skipped otherwise
    if config.waves.iter().all(|w| w.p.abs() > 0.3) {
        let mut worst_b = 0.0f64;
        let mut ok = true;
        for lambda in [0.5, 1.5] {
            match scattering_coeffs(config, 0.0, lambda, 60.0, 0.005) {
                Ok(s) => worst_b = worst_b.max(s.b.norm()),
                Err(e) => {
                    ok = false;
                    record("scattering", false, e.to_string());
                    break;
                }
            }
        }
        if ok {
            record("scattering", worst_b <= 1e-6, format!("max |b| {worst_b:.3e}"));
        }
    } else {
        record(
            "scattering",
            true,
            "skipped: an end is nearly parallel to the x-axis".into(),
        );
    }

    // ends
    match trace_nodal(config, 30.0, 4.0) {
        Ok(ends) => {
            let worst = ends
                .iter()
                .map(|e| {
                    let mut d =
                        (e.measured_angle - e.predicted_angle).rem_euclid(std::f64::consts::TAU);
                    if d > std::f64::consts::PI {
                        d = std::f64::consts::TAU - d;
                    }
                    d
                })
                .fold(0.0f64, f64::max);
            record(
                "ends",
                ends.len() == 2 * config.n() && worst <= 2.0f64.to_radians(),
                format!("{} ends, max angle error {:.4} rad", ends.len(), worst),
            );
        }
        Err(e) => record("ends", false, e.to_string()),
    }

    // Morse index on the light schedule
    let schedule = [GridSpec::new(20.0, 0.25).unwrap(), GridSpec::new(30.0, 0.2).unwrap()];
    match morse_index(config, &schedule, 0.02) {
        Ok(rep) => {
            let n = config.n();
            let expected = n * (n - 1) / 2;
            match rep.morse_index {
                MorseVerdict::Index(i) => record(
                    "morse_index",
                    i == expected,
                    format!("index {i}, expected n(n-1)/2 = {expected}"),
                ),
                MorseVerdict::Unstable(why) => record("morse_index", false, why),
            }
        }
        Err(e) => record("morse_index", false, e.to_string()),
    }

    let _ = Complex64::new(0.0, 0.0);
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
