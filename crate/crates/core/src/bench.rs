//! Render-cost benchmarking: measure the CPU load of the engine over a
//! grid of source counts, channel counts, block sizes and render formats,
//! fit the five-term cost model
//! `tau_P = a0 + a1*K + a2*K*P + a3*N*P + a4*N*K*P`, and predict the
//! maximum source count for a target load.
//!
//! Grid points run strictly sequentially on the calling thread. Timing
//! uses the per-process CPU clock; each grid point renders once as
//! warm-up-excluded timed work and the median over the inner repetitions
//! is reported.

use std::io::Write as IoWrite;

use thiserror::Error;

use crate::engine::{
    EngineError, ReceiverDef, Scene, SceneParams, SourceDef, SourceInput,
};
use crate::geometry::{Euler, Trajectory, Vec3};
use crate::receivers::{HoaDecoder, ReceiverFormat, SpeakerLayout};
use crate::transmission::DelayInterp;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("benchmark grid must not be empty")]
    EmptyGrid,
    #[error("cost-model fit needs more grid variation: {0}")]
    InsufficientGrid(String),
    #[error("cost model is degenerate: {0}")]
    DegenerateModel(String),
    #[error("csv line {line}: {message}")]
    Csv { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchFormat {
    Nsp,
    Vbap,
    Hoa2d,
}

impl BenchFormat {
    pub fn as_str(self) -> &'static str {
        match self {
            BenchFormat::Nsp => "nsp",
            BenchFormat::Vbap => "vbap",
            BenchFormat::Hoa2d => "hoa2d",
        }
    }

    pub fn parse(s: &str) -> Option<BenchFormat> {
        match s {
            "nsp" => Some(BenchFormat::Nsp),
            "vbap" => Some(BenchFormat::Vbap),
            "hoa2d" => Some(BenchFormat::Hoa2d),
            _ => None,
        }
    }
}

/// Parameter grid of the performance measurements.
#[derive(Debug, Clone)]
pub struct BenchGrid {
    pub sources: Vec<usize>,
    pub channels: Vec<usize>,
    pub block_sizes: Vec<usize>,
    pub formats: Vec<BenchFormat>,
    pub delay_lengths: Vec<f64>,
    /// Outer repetitions, kept as separate measurement rows.
    pub repetitions: usize,
    /// Audio seconds rendered per measurement.
    pub duration: f64,
    /// Inner repetitions; the median time is reported.
    pub inner_reps: usize,
    pub sample_rate: f64,
}

impl Default for BenchGrid {
    fn default() -> Self {
        BenchGrid {
            sources: vec![1, 10, 100, 256],
            channels: vec![8, 48, 128],
            block_sizes: vec![64, 256, 1024],
            formats: vec![BenchFormat::Nsp, BenchFormat::Vbap, BenchFormat::Hoa2d],
            delay_lengths: vec![1.0, 10_000.0],
            repetitions: 2,
            duration: 10.0,
            inner_reps: 3,
            sample_rate: 44100.0,
        }
    }
}

/// One timed grid point: mean processing time per cycle in samples
/// (`tau_P = cpu_time * fs / blocks`) and the CPU load `C = tau_P / P`.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchMeasurement {
    pub sources: usize,
    pub channels: usize,
    pub block_size: usize,
    pub format: BenchFormat,
    pub delay_length: f64,
    pub rep: usize,
    pub tau_p: f64,
    pub cpu_load: f64,
}

#[derive(Debug, Clone, Default)]
pub struct BenchRun {
    pub measurements: Vec<BenchMeasurement>,
    /// Infeasible grid points, with the reason.
    pub skipped: Vec<String>,
}

fn process_cpu_seconds() -> f64 {
    let mut ts = libc::timespec { tv_sec: 0, tv_nsec: 0 };
    // Safety: plain syscall writing into the local timespec.
    unsafe {
        libc::clock_gettime(libc::CLOCK_PROCESS_CPUTIME_ID, &mut ts);
    }
    ts.tv_sec as f64 + ts.tv_nsec as f64 * 1e-9
}

fn bench_receiver(format: BenchFormat, channels: usize) -> Result<ReceiverFormat, String> {
    let layout = SpeakerLayout::ring(channels, 1.0);
    match format {
        BenchFormat::Nsp => Ok(ReceiverFormat::nsp(layout)),
        BenchFormat::Vbap => {
            ReceiverFormat::vbap2d(layout).map_err(|e| e.to_string())
        }
        BenchFormat::Hoa2d => {
            let order = (((channels.saturating_sub(1)) / 2).min(3)).max(1) as u32;
            ReceiverFormat::hoa2d(layout, order, HoaDecoder::MaxRe).map_err(|e| e.to_string())
        }
    }
}

/// White-noise benchmark scene: `k` static sources on a 2 m circle, one
/// receiver at the origin, no reflectors or obstacles.
pub fn benchmark_scene(
    k: usize,
    channels: usize,
    block_size: usize,
    format: BenchFormat,
    delay_length: f64,
    sample_rate: f64,
) -> Result<Scene, String> {
    let receiver = ReceiverDef {
        name: "bench-out".into(),
        trajectory: Trajectory::fixed(Vec3::ZERO, Euler::IDENTITY),
        format: bench_receiver(format, channels)?,
    };
    let sources = (0..k)
        .map(|i| {
            let az = 2.0 * std::f64::consts::PI * i as f64 / k.max(1) as f64;
            SourceDef::omni(
                &format!("src{i}"),
                Trajectory::fixed(Vec3::from_spherical(2.0, az, 0.0), Euler::IDENTITY),
                SourceInput::Noise { seed: i as u64, amplitude: 0.5 },
            )
        })
        .collect();
    Ok(Scene {
        params: SceneParams {
            name: "bench".into(),
            sample_rate,
            block_len: block_size,
            max_delay_distance: delay_length,
            interp: DelayInterp::default(),
            ..SceneParams::default()
        },
        sources,
        receivers: vec![receiver],
        ..Scene::default()
    })
}

// CPU-time accounting on common kernels ticks at 10 ms; measurements
// below a few ticks are meaningless.
const MIN_MEASURED_SECONDS: f64 = 0.03;
const MAX_EXTENSION: usize = 256;

fn time_once(scene: &Scene, duration: f64) -> Result<f64, EngineError> {
    let fs = scene.params.sample_rate;
    let block = scene.params.block_len;
    let requested = ((duration * fs / block as f64).ceil() as usize).max(1);
    let mut renderer = crate::engine::Renderer::new(scene.clone())?;
    renderer.process_block(); // warm-up block, excluded from timing
    let start = process_cpu_seconds();
    let mut blocks = 0usize;
    let mut elapsed;
    loop {
        for _ in 0..requested {
            renderer.process_block();
        }
        blocks += requested;
        elapsed = process_cpu_seconds() - start;
        // Cheap grid points render more blocks until the total exceeds
        // the clock resolution; tau_P stays a per-cycle mean.
        if elapsed >= MIN_MEASURED_SECONDS || blocks >= requested * MAX_EXTENSION {
            break;
        }
    }
    // Mean time per cycle expressed in samples.
    Ok(elapsed * fs / blocks as f64)
}

/// Run the grid strictly sequentially, invoking `on_row` after every
/// completed measurement.
pub fn run_benchmark(
    grid: &BenchGrid,
    mut on_row: impl FnMut(&BenchMeasurement),
) -> Result<BenchRun, BenchError> {
    if grid.sources.is_empty()
        || grid.channels.is_empty()
        || grid.block_sizes.is_empty()
        || grid.formats.is_empty()
        || grid.delay_lengths.is_empty()
    {
        return Err(BenchError::EmptyGrid);
    }
    let mut run = BenchRun::default();
    for &format in &grid.formats {
        for &n in &grid.channels {
            for &p in &grid.block_sizes {
                for &k in &grid.sources {
                    for &ld in &grid.delay_lengths {
                        let scene = match benchmark_scene(k, n, p, format, ld, grid.sample_rate) {
                            Ok(s) => s,
                            Err(reason) => {
                                run.skipped.push(format!(
                                    "{} K={k} N={n} P={p} l_d={ld}: {reason}",
                                    format.as_str()
                                ));
                                continue;
                            }
                        };
                        for rep in 0..grid.repetitions.max(1) {
                            let mut times = Vec::with_capacity(grid.inner_reps.max(1));
                            for _ in 0..grid.inner_reps.max(1) {
                                times.push(time_once(&scene, grid.duration)?);
                            }
                            times.sort_by(f64::total_cmp);
                            let tau_p = times[times.len() / 2];
                            let m = BenchMeasurement {
                                sources: k,
                                channels: n,
                                block_size: p,
                                format,
                                delay_length: ld,
                                rep,
                                tau_p,
                                cpu_load: tau_p / p as f64,
                            };
                            on_row(&m);
                            run.measurements.push(m);
                        }
                    }
                }
            }
        }
    }
    Ok(run)
}

pub fn write_csv<W: IoWrite>(measurements: &[BenchMeasurement], mut w: W) -> std::io::Result<()> {
    writeln!(w, "K,N,P,format,l_d,rep,tau_P,C")?;
    for m in measurements {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            m.sources,
            m.channels,
            m.block_size,
            m.format.as_str(),
            m.delay_length,
            m.rep,
            m.tau_p,
            m.cpu_load
        )?;
    }
    Ok(())
}

pub fn parse_csv(text: &str) -> Result<Vec<BenchMeasurement>, BenchError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with("K,") || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(BenchError::Csv {
                line: i + 1,
                message: format!("expected 8 fields, got {}", fields.len()),
            });
        }
        let err = |message: String| BenchError::Csv { line: i + 1, message };
        let format = BenchFormat::parse(fields[3])
            .ok_or_else(|| err(format!("unknown format '{}'", fields[3])))?;
        out.push(BenchMeasurement {
            sources: fields[0].parse().map_err(|_| err("bad K".into()))?,
            channels: fields[1].parse().map_err(|_| err("bad N".into()))?,
            block_size: fields[2].parse().map_err(|_| err("bad P".into()))?,
            format,
            delay_length: fields[4].parse().map_err(|_| err("bad l_d".into()))?,
            rep: fields[5].parse().map_err(|_| err("bad rep".into()))?,
            tau_p: fields[6].parse().map_err(|_| err("bad tau_P".into()))?,
            cpu_load: fields[7].parse().map_err(|_| err("bad C".into()))?,
        });
    }
    Ok(out)
}

/// Fitted cost-model coefficients, all non-negative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostModel {
    /// Framework overhead per cycle (samples).
    pub overhead: f64,
    /// Geometry processing per source (a1).
    pub geometry: f64,
    /// Source audio processing per source-sample (a2).
    pub source_audio: f64,
    /// Receiver post-processing per channel-sample (a3).
    pub postprocessing: f64,
    /// Panning per channel-source-sample (a4).
    pub panning: f64,
    /// Mean-square error of the fit on the CPU load.
    pub residual: f64,
}

impl CostModel {
    pub fn coefficients(&self) -> [f64; 5] {
        [self.overhead, self.geometry, self.source_audio, self.postprocessing, self.panning]
    }

    pub fn from_coefficients(a: [f64; 5]) -> CostModel {
        CostModel {
            overhead: a[0],
            geometry: a[1],
            source_audio: a[2],
            postprocessing: a[3],
            panning: a[4],
            residual: 0.0,
        }
    }

    /// Predicted time per cycle in samples.
    pub fn tau_p(&self, k: f64, n: f64, p: f64) -> f64 {
        self.overhead
            + self.geometry * k
            + self.source_audio * k * p
            + self.postprocessing * n * p
            + self.panning * n * k * p
    }

    /// Predicted CPU load.
    pub fn cpu_load(&self, k: f64, n: f64, p: f64) -> f64 {
        self.tau_p(k, n, p) / p
    }

    pub fn write_report<W: IoWrite>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "a0 overhead        {:.6e}", self.overhead)?;
        writeln!(w, "a1 geometry        {:.6e}", self.geometry)?;
        writeln!(w, "a2 source_audio    {:.6e}", self.source_audio)?;
        writeln!(w, "a3 postprocessing  {:.6e}", self.postprocessing)?;
        writeln!(w, "a4 panning         {:.6e}", self.panning)?;
        writeln!(w, "fit residual (mse) {:.6e}", self.residual)?;
        Ok(())
    }
}

/// Non-negative least squares, Lawson-Hanson active set. `a` is row
/// major, m rows by n columns.
fn nnls(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let m = a.len();
    let n = a.first().map(|r| r.len()).unwrap_or(0);

    // Column normalization keeps the normal equations well scaled.
    let mut scale = vec![0.0f64; n];
    for row in a {
        for (j, v) in row.iter().enumerate() {
            scale[j] += v * v;
        }
    }
    for s in &mut scale {
        *s = s.sqrt();
        if *s == 0.0 {
            *s = 1.0;
        }
    }

    let col = |j: usize, i: usize| a[i][j] / scale[j];
    let mut x = vec![0.0f64; n];
    let mut passive = vec![false; n];

    let residual = |x: &[f64]| -> Vec<f64> {
        (0..m)
            .map(|i| b[i] - (0..n).map(|j| col(j, i) * x[j]).sum::<f64>())
            .collect()
    };

    let tol = 1e-12 * (0..n).map(|j| (0..m).map(|i| (col(j, i) * b[i]).abs()).sum::<f64>()).fold(1.0, f64::max);

    for _ in 0..(3 * n + 10) {
        let res = residual(&x);
        let grad: Vec<f64> =
            (0..n).map(|j| (0..m).map(|i| col(j, i) * res[i]).sum::<f64>()).collect();
        let candidate = (0..n)
            .filter(|&j| !passive[j])
            .max_by(|&p, &q| grad[p].total_cmp(&grad[q]));
        let j = match candidate {
            Some(j) if grad[j] > tol => j,
            _ => break,
        };
        passive[j] = true;

        loop {
            // Least squares on the passive set via normal equations.
            let idx: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
            let np = idx.len();
            let mut ata = vec![vec![0.0f64; np]; np];
            let mut atb = vec![0.0f64; np];
            for (pi, &ji) in idx.iter().enumerate() {
                for (qi, &jq) in idx.iter().enumerate() {
                    ata[pi][qi] = (0..m).map(|i| col(ji, i) * col(jq, i)).sum();
                }
                atb[pi] = (0..m).map(|i| col(ji, i) * b[i]).sum();
            }
            let s = solve_dense(&mut ata, &mut atb);
            if s.iter().all(|&v| v > 0.0) {
                for (pi, &ji) in idx.iter().enumerate() {
                    x[ji] = s[pi];
                }
                break;
            }
            // Step back to the feasibility boundary and drop zeros.
            let mut alpha = 1.0f64;
            for (pi, &ji) in idx.iter().enumerate() {
                if s[pi] <= 0.0 {
                    let denom = x[ji] - s[pi];
                    if denom > 0.0 {
                        alpha = alpha.min(x[ji] / denom);
                    }
                }
            }
            for (pi, &ji) in idx.iter().enumerate() {
                x[ji] += alpha * (s[pi] - x[ji]);
                if x[ji] <= 1e-14 {
                    x[ji] = 0.0;
                    passive[ji] = false;
                }
            }
        }
    }

    for j in 0..n {
        x[j] /= scale[j];
    }
    x
}

/// Gaussian elimination with partial pivoting; consumes its inputs.
fn solve_dense(a: &mut [Vec<f64>], b: &mut [f64]) -> Vec<f64> {
    let n = b.len();
    for k in 0..n {
        let pivot = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
        a.swap(k, pivot);
        b.swap(k, pivot);
        let diag = a[k][k];
        if diag.abs() < 1e-300 {
            continue;
        }
        for i in k + 1..n {
            let f = a[i][k] / diag;
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = vec![0.0f64; n];
    for k in (0..n).rev() {
        let mut acc = b[k];
        for j in k + 1..n {
            acc -= a[k][j] * x[j];
        }
        x[k] = if a[k][k].abs() < 1e-300 { 0.0 } else { acc / a[k][k] };
    }
    x
}

/// Fit the cost model to measured CPU loads by non-negative least
/// squares on `C = a0/P + a1*K/P + a2*K + a3*N + a4*N*K`.
pub fn fit_cpu_model(measurements: &[BenchMeasurement]) -> Result<CostModel, BenchError> {
    let distinct = |f: &dyn Fn(&BenchMeasurement) -> u64| {
        let mut v: Vec<u64> = measurements.iter().map(f).collect();
        v.sort_unstable();
        v.dedup();
        v.len()
    };
    let mut missing = Vec::new();
    if measurements.len() < 5 {
        missing.push(format!("at least 5 measurements (got {})", measurements.len()));
    }
    if distinct(&|m| m.sources as u64) < 2 {
        missing.push("two or more source counts K".into());
    }
    if distinct(&|m| m.channels as u64) < 2 {
        missing.push("two or more channel counts N".into());
    }
    if distinct(&|m| m.block_size as u64) < 2 {
        missing.push("two or more block sizes P".into());
    }
    if !missing.is_empty() {
        return Err(BenchError::InsufficientGrid(missing.join("; ")));
    }

    let a: Vec<Vec<f64>> = measurements
        .iter()
        .map(|m| {
            let (k, n, p) = (m.sources as f64, m.channels as f64, m.block_size as f64);
            vec![1.0 / p, k / p, k, n, n * k]
        })
        .collect();
    let b: Vec<f64> = measurements.iter().map(|m| m.cpu_load).collect();
    let x = nnls(&a, &b);
    let residual = measurements
        .iter()
        .zip(&a)
        .map(|(m, row)| {
            let pred: f64 = row.iter().zip(&x).map(|(r, c)| r * c).sum();
            (m.cpu_load - pred).powi(2)
        })
        .sum::<f64>()
        / measurements.len() as f64;

    Ok(CostModel {
        overhead: x[0],
        geometry: x[1],
        source_audio: x[2],
        postprocessing: x[3],
        panning: x[4],
        residual,
    })
}

/// Maximum source count sustaining the target CPU load:
/// `K_max = floor((C - a0/P - a3*N) / (a1/P + a2 + a4*N))`, clamped to
/// zero when the budget is already spent.
pub fn kmax(model: &CostModel, target_load: f64, block_size: f64, channels: f64) -> Result<u64, BenchError> {
    let numerator = target_load - model.overhead / block_size - model.postprocessing * channels;
    let denominator = model.geometry / block_size + model.source_audio + model.panning * channels;
    if denominator <= 0.0 || !denominator.is_finite() {
        return Err(BenchError::DegenerateModel(format!(
            "per-source cost denominator is {denominator}"
        )));
    }
    Ok((numerator / denominator).floor().max(0.0) as u64)
}

/// Desk-scale measurement of one grid point; used by the acceptance
/// suite and handy for smoke checks.
pub fn measure_single_point(
    k: usize,
    channels: usize,
    block_size: usize,
    format: BenchFormat,
    duration: f64,
) -> Result<BenchMeasurement, BenchError> {
    let grid = BenchGrid {
        sources: vec![k],
        channels: vec![channels],
        block_sizes: vec![block_size],
        formats: vec![format],
        delay_lengths: vec![10.0],
        repetitions: 1,
        duration,
        inner_reps: 1,
        sample_rate: 44100.0,
    };
    let run = run_benchmark(&grid, |_| {})?;
    run.measurements
        .into_iter()
        .next()
        .ok_or_else(|| BenchError::InsufficientGrid("grid point was skipped".into()))
}
