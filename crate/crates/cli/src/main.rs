//! Command-line front end: scene rendering, validation, the benchmark
//! harness, cost-model fitting and planning, absorption fitting, and
//! scene summaries.
//!
//! Exit codes: 0 success, 1 validation failure, 2 i/o error, 3 bad
//! arguments. Stdout carries data (add `--json` for machine-readable
//! output); diagnostics go to stderr.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use serde_json::json;

use varen::bench::{self, BenchFormat, BenchGrid, CostModel};
use varen::engine::{self, EngineError, RenderJob};
use varen::imagesource::fit_reflection_coeffs;
use varen::scenedef::{self, Severity};

const EXIT_VALIDATION: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_ARGS: u8 = 3;

#[derive(Parser)]
#[command(name = "varen", version, about = "Time-domain virtual acoustic scene renderer")]
struct Cli {
    /// Machine-readable JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a scene file to a multichannel wav file.
    Render {
        #[arg(long)]
        scene: PathBuf,
        /// Render duration in seconds.
        #[arg(long)]
        duration: f64,
        #[arg(long)]
        out: PathBuf,
        /// Write a plain-text diagnostics report here.
        #[arg(long)]
        diag: Option<PathBuf>,
        /// Write per-block diagnostics as CSV here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Parse and validate a scene file, printing all diagnostics.
    Validate {
        scene: PathBuf,
        /// Also check trajectories against this render duration.
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Measure render cost over a parameter grid and emit CSV.
    Bench {
        /// Source counts, comma separated.
        #[arg(long, value_delimiter = ',', default_values_t = vec![1usize, 10, 100, 256])]
        k: Vec<usize>,
        /// Output channel counts.
        #[arg(long, value_delimiter = ',', default_values_t = vec![8usize, 48, 128])]
        n: Vec<usize>,
        /// Block sizes in samples.
        #[arg(long, value_delimiter = ',', default_values_t = vec![64usize, 256, 1024])]
        p: Vec<usize>,
        /// Render formats: nsp, vbap, hoa2d.
        #[arg(long, value_delimiter = ',', default_values_t = vec!["nsp".to_string(), "vbap".to_string(), "hoa2d".to_string()])]
        formats: Vec<String>,
        /// Maximum delay-line lengths in meters.
        #[arg(long, value_delimiter = ',', default_values_t = vec![1.0, 10000.0])]
        ld: Vec<f64>,
        /// Repetitions per grid point (kept as separate rows).
        #[arg(long, default_value_t = 2)]
        reps: usize,
        /// Audio seconds per measurement.
        #[arg(long, default_value_t = 10.0)]
        duration: f64,
        /// Inner repetitions; the median is reported.
        #[arg(long, default_value_t = 3)]
        inner: usize,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit the five-term cost model to a measurement CSV.
    FitModel {
        #[arg(long)]
        csv: PathBuf,
    },
    /// Predict the maximum source count for a target CPU load.
    Kmax {
        #[arg(long)]
        a0: f64,
        #[arg(long)]
        a1: f64,
        #[arg(long)]
        a2: f64,
        #[arg(long)]
        a3: f64,
        #[arg(long)]
        a4: f64,
        /// Target CPU load, e.g. 0.9.
        #[arg(long)]
        load: f64,
        /// Block size in samples.
        #[arg(long)]
        p: f64,
        /// Output channel count.
        #[arg(long)]
        n: f64,
    },
    /// Fit reflection coefficients (rho, delta) to absorption targets.
    FitAbsorption {
        /// Targets as freq:absorption pairs, e.g. "125:0.1,1000:0.25".
        #[arg(long)]
        targets: String,
        #[arg(long, default_value_t = 44100.0)]
        fs: f64,
    },
    /// Summarize a scene file: object counts, image sources, memory.
    Info {
        scene: PathBuf,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn args(message: String) -> Failure {
        Failure { code: EXIT_ARGS, message }
    }

    fn io(message: String) -> Failure {
        Failure { code: EXIT_IO, message }
    }

    fn validation(message: String) -> Failure {
        Failure { code: EXIT_VALIDATION, message }
    }
}

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Failure {
        let code = match &e {
            EngineError::Wav(_) | EngineError::Io { .. } => EXIT_IO,
            _ => EXIT_VALIDATION,
        };
        Failure { code, message: e.to_string() }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_ARGS,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if !f.message.is_empty() {
                eprintln!("error: {}", f.message);
            }
            ExitCode::from(f.code)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Render { scene, duration, out, diag, csv } => {
            cmd_render(cli.json, scene, *duration, out, diag.as_deref(), csv.as_deref())
        }
        Command::Validate { scene, duration } => cmd_validate(cli.json, scene, *duration),
        Command::Bench { k, n, p, formats, ld, reps, duration, inner, out } => cmd_bench(
            cli.json,
            k,
            n,
            p,
            formats,
            ld,
            *reps,
            *duration,
            *inner,
            out.as_deref(),
        ),
        Command::FitModel { csv } => cmd_fit_model(cli.json, csv),
        Command::Kmax { a0, a1, a2, a3, a4, load, p, n } => {
            cmd_kmax(cli.json, [*a0, *a1, *a2, *a3, *a4], *load, *p, *n)
        }
        Command::FitAbsorption { targets, fs } => cmd_fit_absorption(cli.json, targets, *fs),
        Command::Info { scene } => cmd_info(cli.json, scene),
    }
}

fn load_scene(path: &std::path::Path) -> Result<engine::Scene, Failure> {
    scenedef::load_scene_file(path).map_err(|diags| {
        for d in &diags {
            eprintln!("{d}");
        }
        Failure::validation(format!("{} failed to load", path.display()))
    })
}

fn cmd_render(
    json: bool,
    scene_path: &std::path::Path,
    duration: f64,
    out: &std::path::Path,
    diag_path: Option<&std::path::Path>,
    csv_path: Option<&std::path::Path>,
) -> Result<(), Failure> {
    if duration <= 0.0 {
        return Err(Failure::args("--duration must be positive".into()));
    }
    let scene = load_scene(scene_path)?;
    let job = RenderJob { scene, duration, out_path: out.to_path_buf() };
    let diag = engine::render_offline(&job)?;
    if let Some(path) = diag_path {
        let mut text = Vec::new();
        diag.write_report(&mut text).unwrap();
        std::fs::write(path, text).map_err(|e| Failure::io(format!("{}: {e}", path.display())))?;
    }
    if let Some(path) = csv_path {
        let mut text = Vec::new();
        diag.write_csv(&mut text).unwrap();
        std::fs::write(path, text).map_err(|e| Failure::io(format!("{}: {e}", path.display())))?;
    }
    if json {
        println!(
            "{}",
            json!({
                "out": out.display().to_string(),
                "blocks": diag.blocks,
                "rendered_seconds": diag.rendered_seconds,
                "realtime_factor": diag.realtime_factor(),
                "clamps": diag.clamp_count,
                "image_sources_per_source": diag.image_sources_per_source,
            })
        );
    } else {
        println!("wrote {}", out.display());
        let mut report = Vec::new();
        diag.write_report(&mut report).unwrap();
        print!("{}", String::from_utf8_lossy(&report));
    }
    Ok(())
}

fn cmd_validate(json: bool, scene_path: &std::path::Path, duration: Option<f64>) -> Result<(), Failure> {
    let text = std::fs::read_to_string(scene_path)
        .map_err(|e| Failure::io(format!("{}: {e}", scene_path.display())))?;
    let base = scene_path.parent().unwrap_or(std::path::Path::new("."));
    let diags = scenedef::validate_scene(&text, base, duration);
    let has_errors = diags.iter().any(|d| d.severity == Severity::Error);
    if json {
        let rows: Vec<_> = diags
            .iter()
            .map(|d| {
                json!({
                    "code": d.code.as_str(),
                    "severity": match d.severity { Severity::Error => "error", Severity::Warning => "warning" },
                    "line": d.location.map(|l| l.line),
                    "col": d.location.map(|l| l.col),
                    "message": d.message,
                    "remedy": d.remedy,
                })
            })
            .collect();
        println!("{}", json!({ "ok": !has_errors, "diagnostics": rows }));
    } else {
        for d in &diags {
            eprintln!("{d}");
        }
        if !has_errors {
            println!("{} is valid", scene_path.display());
        }
    }
    if has_errors {
        Err(Failure { code: EXIT_VALIDATION, message: String::new() })
    } else {
        Ok(())
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_bench(
    json: bool,
    k: &[usize],
    n: &[usize],
    p: &[usize],
    formats: &[String],
    ld: &[f64],
    reps: usize,
    duration: f64,
    inner: usize,
    out: Option<&std::path::Path>,
) -> Result<(), Failure> {
    let formats: Vec<BenchFormat> = formats
        .iter()
        .map(|f| {
            BenchFormat::parse(f)
                .ok_or_else(|| Failure::args(format!("unknown format '{f}' (use nsp, vbap, hoa2d)")))
        })
        .collect::<Result<_, _>>()?;
    let grid = BenchGrid {
        sources: k.to_vec(),
        channels: n.to_vec(),
        block_sizes: p.to_vec(),
        formats,
        delay_lengths: ld.to_vec(),
        repetitions: reps,
        duration,
        inner_reps: inner,
        sample_rate: 44100.0,
    };
    let run = bench::run_benchmark(&grid, |m| {
        eprintln!(
            "measured {} K={} N={} P={} l_d={} rep={}: tau_P={:.1} C={:.4}",
            m.format.as_str(), m.sources, m.channels, m.block_size, m.delay_length, m.rep,
            m.tau_p, m.cpu_load
        );
    })
    .map_err(|e| Failure::validation(e.to_string()))?;
    for note in &run.skipped {
        eprintln!("skipped {note}");
    }
    let mut csv = Vec::new();
    bench::write_csv(&run.measurements, &mut csv).unwrap();
    match out {
        Some(path) => std::fs::write(path, csv)
            .map_err(|e| Failure::io(format!("{}: {e}", path.display())))?,
        None => {
            if json {
                let rows: Vec<_> = run
                    .measurements
                    .iter()
                    .map(|m| {
                        json!({
                            "k": m.sources, "n": m.channels, "p": m.block_size,
                            "format": m.format.as_str(), "l_d": m.delay_length,
                            "rep": m.rep, "tau_p": m.tau_p, "cpu_load": m.cpu_load,
                        })
                    })
                    .collect();
                println!("{}", json!({ "measurements": rows, "skipped": run.skipped }));
            } else {
                std::io::stdout().write_all(&csv).map_err(|e| Failure::io(e.to_string()))?;
            }
        }
    }
    Ok(())
}

fn cmd_fit_model(json: bool, csv: &std::path::Path) -> Result<(), Failure> {
    let text = std::fs::read_to_string(csv)
        .map_err(|e| Failure::io(format!("{}: {e}", csv.display())))?;
    let measurements =
        bench::parse_csv(&text).map_err(|e| Failure::validation(e.to_string()))?;
    let model = bench::fit_cpu_model(&measurements)
        .map_err(|e| Failure::validation(e.to_string()))?;
    print_model(json, &model);
    Ok(())
}

fn print_model(json: bool, model: &CostModel) {
    if json {
        println!(
            "{}",
            json!({
                "a0": model.overhead,
                "a1": model.geometry,
                "a2": model.source_audio,
                "a3": model.postprocessing,
                "a4": model.panning,
                "residual": model.residual,
            })
        );
    } else {
        let mut text = Vec::new();
        model.write_report(&mut text).unwrap();
        print!("{}", String::from_utf8_lossy(&text));
    }
}

fn cmd_kmax(json: bool, coeffs: [f64; 5], load: f64, p: f64, n: f64) -> Result<(), Failure> {
    if p <= 0.0 || n <= 0.0 {
        return Err(Failure::args("--p and --n must be positive".into()));
    }
    let model = CostModel::from_coefficients(coeffs);
    let k = bench::kmax(&model, load, p, n).map_err(|e| Failure::validation(e.to_string()))?;
    if json {
        println!("{}", json!({ "k_max": k, "load": load, "p": p, "n": n }));
    } else {
        println!("{k}");
    }
    Ok(())
}

fn cmd_fit_absorption(json: bool, targets: &str, fs: f64) -> Result<(), Failure> {
    let mut pairs = Vec::new();
    for part in targets.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let (f, a) = part
            .split_once(':')
            .ok_or_else(|| Failure::args(format!("bad target '{part}', expected freq:absorption")))?;
        let f: f64 = f
            .trim()
            .parse()
            .map_err(|_| Failure::args(format!("bad frequency in '{part}'")))?;
        let a: f64 = a
            .trim()
            .parse()
            .map_err(|_| Failure::args(format!("bad absorption in '{part}'")))?;
        pairs.push((f, a));
    }
    let fit = fit_reflection_coeffs(&pairs, fs).map_err(|e| Failure::args(e.to_string()))?;
    if !fit.converged {
        eprintln!("warning: fit stopped at the iteration cap; returning the best iterate");
    }
    if json {
        println!(
            "{}",
            json!({
                "rho": fit.reflectivity,
                "delta": fit.damping,
                "residual": fit.residual,
                "converged": fit.converged,
            })
        );
    } else {
        println!("rho   {:.6}", fit.reflectivity);
        println!("delta {:.6}", fit.damping);
        println!("residual {:.3e}", fit.residual);
    }
    Ok(())
}

fn cmd_info(json: bool, scene_path: &std::path::Path) -> Result<(), Failure> {
    let scene = load_scene(scene_path)?;
    let info = engine::scene_info(&scene);
    let expected_images = info.image_sources_per_source * info.sources;
    if json {
        println!(
            "{}",
            json!({
                "name": scene.params.name,
                "sources": info.sources,
                "diffuse": info.diffuse,
                "reflectors": info.reflectors,
                "obstacles": info.obstacles,
                "receivers": info.receivers,
                "image_sources_per_source": info.image_sources_per_source,
                "image_sources_total": expected_images,
                "delay_memory_bytes": info.delay_memory_bytes,
                "sample_rate": scene.params.sample_rate,
                "block_len": scene.params.block_len,
                "image_order": scene.params.image_order,
            })
        );
    } else {
        println!("scene:                {}", scene.params.name);
        println!("sources:              {}", info.sources);
        println!("diffuse sources:      {}", info.diffuse);
        println!("reflectors:           {}", info.reflectors);
        println!("obstacles:            {}", info.obstacles);
        println!("receivers:            {}", info.receivers);
        println!("image sources/source: {}", info.image_sources_per_source);
        println!("image sources total:  {expected_images}");
        println!("delay-line memory:    {} bytes", info.delay_memory_bytes);
    }
    Ok(())
}
