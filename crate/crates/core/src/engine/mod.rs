//! Block-based scene rendering.
//!
//! Geometry is evaluated at block-end times; delays, gains and panning
//! weights interpolate linearly across each block from the previous
//! boundary values (the first block interpolates from its own values, so
//! static scenes are steady from the start). Recursive filter
//! coefficients other than the air-absorption coefficient update once per
//! block.
//!
//! The per-path processing chain is: delay-line read with 1/r scaling at
//! the read, source directivity (direct paths), air absorption, the
//! reflection filter once per bounce (image paths), obstacle filters, the
//! soft-fade gain ramp, and panning into the receiver channels. One scene
//! renders deterministically on one thread; independent scenes can run in
//! parallel.

mod player;

pub use player::{AudioPlayer, DiffuseStream, SourceStream};

use std::io::Write as IoWrite;
use std::path::{Path, PathBuf};
use std::time::Instant;

use thiserror::Error;

use crate::geometry::{relative_position, GeometryError, Mat3, Pose, Trajectory, Vec3};
use crate::imagesource::{
    classify_reflection, image_chains, mirror_position, reflection_filter, Reflector,
};
use crate::receivers::{
    mix_diffuse, mix_point, BinauralState, DiffuseDecoder, FoaBlock, HrirError, ReceiverError,
    ReceiverFormat,
};
use crate::transmission::{
    apply_obstacle, directivity_coeff, obstacle_cutoff, process_directivity,
    process_transmission, DelayInterp, DelayLine, Obstacle, ObstacleState, OnePoleState,
    TransmissionParams,
};
use crate::wav::{self, WavError};
use crate::Sample;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Receiver(#[from] ReceiverError),
    #[error(transparent)]
    Wav(#[from] WavError),
    #[error(transparent)]
    Hrir(#[from] HrirError),
    #[error("{path}: sample rate {file_rate} Hz does not match the scene rate {scene_rate} Hz")]
    SampleRateMismatch { path: String, file_rate: u32, scene_rate: u32 },
    #[error("{path}: expected {expected} channels, got {got}")]
    ChannelCountMismatch { path: String, expected: usize, got: usize },
    #[error("invalid scene: {0}")]
    BadScene(String),
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// Global constants of a scene.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneParams {
    pub name: String,
    pub sample_rate: f64,
    pub speed_of_sound: f64,
    pub block_len: usize,
    /// Maximum image-source order; 0 renders direct paths only.
    pub image_order: u32,
    pub air_constant: f64,
    pub r_min: f64,
    /// Maximum delay-line distance l_d in meters; sets delay memory.
    pub max_delay_distance: f64,
    pub interp: DelayInterp,
}

impl Default for SceneParams {
    fn default() -> Self {
        SceneParams {
            name: String::new(),
            sample_rate: 44100.0,
            speed_of_sound: 340.0,
            block_len: 1024,
            image_order: 1,
            air_constant: 7782.0,
            r_min: 0.1,
            max_delay_distance: 1000.0,
            interp: DelayInterp::default(),
        }
    }
}

impl SceneParams {
    pub fn transmission(&self) -> TransmissionParams {
        TransmissionParams {
            sample_rate: self.sample_rate,
            speed_of_sound: self.speed_of_sound,
            air_constant: self.air_constant,
            r_min: self.r_min,
        }
    }
}

/// Audio content of a point source.
#[derive(Debug, Clone)]
pub enum SourceInput {
    File { path: PathBuf, looped: bool, gain: f64 },
    Sine { frequency: f64, amplitude: f64 },
    Noise { seed: u64, amplitude: f64 },
    Impulse { at: u64, amplitude: f64 },
    Samples { data: Vec<Sample>, looped: bool },
    Silence,
}

#[derive(Debug, Clone)]
pub struct SourceDef {
    pub name: String,
    pub trajectory: Trajectory,
    pub gain: f64,
    /// Frequency-dependent directivity: -6 dB at 90 degrees off-axis at
    /// this frequency. `None` renders omnidirectional.
    pub directivity_f6db: Option<f64>,
    pub input: SourceInput,
}

impl SourceDef {
    pub fn omni(name: &str, trajectory: Trajectory, input: SourceInput) -> SourceDef {
        SourceDef {
            name: name.to_string(),
            trajectory,
            gain: 1.0,
            directivity_f6db: None,
            input,
        }
    }
}

/// Audio content of a diffuse source (first-order Ambisonics, FuMa).
#[derive(Debug, Clone)]
pub enum DiffuseInput {
    File { path: PathBuf, looped: bool, gain: f64 },
    Noise { seed: u64, amplitude: f64 },
    Silence,
}

/// Axis box (in box-local coordinates) within which a diffuse source is
/// audible, with a von-Hann gain ramp of `ramp` meters at each face.
#[derive(Debug, Clone)]
pub struct RangeBox {
    /// Center position and box orientation over time.
    pub trajectory: Trajectory,
    pub dimensions: Vec3,
    pub ramp: f64,
}

#[derive(Debug, Clone)]
pub struct DiffuseDef {
    pub name: String,
    pub range: RangeBox,
    pub gain: f64,
    pub input: DiffuseInput,
}

#[derive(Debug, Clone)]
pub struct ReflectorDef {
    pub name: String,
    pub reflector: Reflector,
}

#[derive(Debug, Clone)]
pub struct ObstacleDef {
    pub name: String,
    pub obstacle: Obstacle,
}

#[derive(Debug, Clone)]
pub struct ReceiverDef {
    pub name: String,
    pub trajectory: Trajectory,
    pub format: ReceiverFormat,
}

/// A complete virtual acoustic environment.
#[derive(Debug, Clone, Default)]
pub struct Scene {
    pub params: SceneParams,
    pub sources: Vec<SourceDef>,
    pub diffuse: Vec<DiffuseDef>,
    pub reflectors: Vec<ReflectorDef>,
    pub obstacles: Vec<ObstacleDef>,
    pub receivers: Vec<ReceiverDef>,
}

/// Gain of a diffuse source at the receiver position: 1 deep inside the
/// range box, a von-Hann half-window over the ramp distance from each
/// face (multiplied across axes), 0 outside.
pub fn diffuse_range_gain(p_rec: Vec3, range: &RangeBox, t: f64) -> f64 {
    let pose = range.trajectory.interpolate(t);
    let local = relative_position(p_rec, &pose);
    let mut gain = 1.0;
    for (q, dim) in [
        (local.x, range.dimensions.x),
        (local.y, range.dimensions.y),
        (local.z, range.dimensions.z),
    ] {
        let inside = dim / 2.0 - q.abs();
        if inside < 0.0 {
            return 0.0;
        }
        if range.ramp > 0.0 && inside < range.ramp {
            gain *= 0.5 * (1.0 - (std::f64::consts::PI * inside / range.ramp).cos());
        }
    }
    gain
}

/// Per-block diagnostics row.
#[derive(Debug, Clone, Default)]
pub struct BlockDiag {
    pub index: u64,
    /// Image-source paths rendered with nonzero gain this block.
    pub images_rendered: usize,
    pub clamps: u64,
    pub compute_seconds: f64,
}

/// Render diagnostics: clamp counters, image-source counts, compute time.
#[derive(Debug, Clone, Default)]
pub struct Diagnostics {
    pub blocks: u64,
    pub rendered_seconds: f64,
    pub compute_seconds: f64,
    pub clamp_count: u64,
    /// Image sources enumerated per source (combinatorial count).
    pub image_sources_per_source: usize,
    pub delay_memory_bytes: usize,
    pub per_block: Vec<BlockDiag>,
}

impl Diagnostics {
    /// Rendered seconds per compute second; above 1 means faster than
    /// real time.
    pub fn realtime_factor(&self) -> f64 {
        if self.compute_seconds > 0.0 {
            self.rendered_seconds / self.compute_seconds
        } else {
            f64::INFINITY
        }
    }

    pub fn write_csv<W: IoWrite>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "block,images_rendered,clamps,compute_seconds")?;
        for b in &self.per_block {
            writeln!(w, "{},{},{},{}", b.index, b.images_rendered, b.clamps, b.compute_seconds)?;
        }
        Ok(())
    }

    pub fn write_report<W: IoWrite>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "blocks rendered:        {}", self.blocks)?;
        writeln!(w, "audio duration:         {:.3} s", self.rendered_seconds)?;
        writeln!(w, "compute time:           {:.3} s", self.compute_seconds)?;
        writeln!(w, "realtime factor:        {:.2}x", self.realtime_factor())?;
        writeln!(w, "distance clamps:        {}", self.clamp_count)?;
        writeln!(w, "image sources/source:   {}", self.image_sources_per_source)?;
        writeln!(w, "delay-line memory:      {} bytes", self.delay_memory_bytes)?;
        Ok(())
    }
}

/// State of one transmission path (direct or via an image-source chain)
/// to one receiver.
#[derive(Debug, Clone)]
struct PathState {
    source: usize,
    /// Index into the shared chain list; `None` for the direct path.
    chain: Option<usize>,
    prev_r: f64,
    prev_gain: f64,
    prev_weights: Vec<f64>,
    air: OnePoleState,
    directivity: OnePoleState,
    reflections: Vec<OnePoleState>,
    obstacles: Vec<ObstacleState>,
}

#[derive(Debug, Clone)]
struct DiffuseState {
    prev_gain: f64,
    prev_rot: Mat3,
}

struct ReceiverRt {
    format: ReceiverFormat,
    decoder: DiffuseDecoder,
    /// Panning-stage output channels (virtual speakers for binaural).
    out: Vec<Vec<Sample>>,
    /// Final two-channel output for binaural receivers.
    ears: Option<[Vec<Sample>; 2]>,
    binaural: Option<BinauralState>,
    paths: Vec<PathState>,
    diffuse: Vec<DiffuseState>,
    weights_end: Vec<f64>,
}

/// Single-scene block renderer. All buffers are allocated up front; the
/// per-block path does not allocate.
pub struct Renderer {
    scene: Scene,
    trans: TransmissionParams,
    chains: Vec<Vec<usize>>,
    streams: Vec<SourceStream>,
    delays: Vec<DelayLine>,
    src_blocks: Vec<Vec<Sample>>,
    diffuse_streams: Vec<DiffuseStream>,
    foa_blocks: Vec<FoaBlock>,
    /// Mirrored positions per source per chain, refreshed each block.
    image_pos: Vec<Vec<Vec3>>,
    source_poses: Vec<Pose>,
    receiver_poses: Vec<Pose>,
    receivers: Vec<ReceiverRt>,
    scratch: Vec<Sample>,
    block_index: u64,
    first_block: bool,
    diag: Diagnostics,
}

impl Renderer {
    pub fn new(scene: Scene) -> Result<Renderer, EngineError> {
        let p = &scene.params;
        if p.block_len == 0 {
            return Err(EngineError::BadScene("block length must be positive".into()));
        }
        if p.sample_rate <= 0.0 || p.speed_of_sound <= 0.0 || p.r_min <= 0.0 {
            return Err(EngineError::BadScene(
                "sample rate, speed of sound and r_min must be positive".into(),
            ));
        }
        let mut names = std::collections::BTreeSet::new();
        for name in scene
            .sources
            .iter()
            .map(|s| &s.name)
            .chain(scene.diffuse.iter().map(|d| &d.name))
            .chain(scene.reflectors.iter().map(|r| &r.name))
            .chain(scene.obstacles.iter().map(|o| &o.name))
            .chain(scene.receivers.iter().map(|r| &r.name))
        {
            if !names.insert(name.clone()) {
                return Err(EngineError::BadScene(format!("duplicate object name '{name}'")));
            }
        }

        let trans = p.transmission();
        let rate = p.sample_rate as u32;
        let block = p.block_len;

        let mut streams = Vec::with_capacity(scene.sources.len());
        for s in &scene.sources {
            streams.push(match &s.input {
                SourceInput::File { path, looped, gain } => SourceStream::Player(
                    AudioPlayer::from_file(path, *looped, *gain, rate, Some(1))?,
                ),
                SourceInput::Sine { frequency, amplitude } => SourceStream::Sine {
                    frequency: *frequency,
                    amplitude: *amplitude,
                    sample_rate: p.sample_rate,
                    n: 0,
                },
                SourceInput::Noise { seed, amplitude } => SourceStream::noise(*seed, *amplitude),
                SourceInput::Impulse { at, amplitude } => SourceStream::Impulse {
                    at: *at,
                    amplitude: *amplitude as f32,
                    n: 0,
                },
                SourceInput::Samples { data, looped } => SourceStream::Player(
                    AudioPlayer::from_samples(vec![data.clone()], *looped),
                ),
                SourceInput::Silence => SourceStream::Silence,
            });
        }

        let delays: Vec<DelayLine> = scene
            .sources
            .iter()
            .map(|_| DelayLine::new(p.max_delay_distance, &trans, p.interp))
            .collect();

        let mut diffuse_streams = Vec::with_capacity(scene.diffuse.len());
        for d in &scene.diffuse {
            diffuse_streams.push(match &d.input {
                DiffuseInput::File { path, looped, gain } => DiffuseStream::Player(
                    AudioPlayer::from_file(path, *looped, *gain * d.gain, rate, Some(4))?,
                ),
                DiffuseInput::Noise { seed, amplitude } => {
                    DiffuseStream::noise(*seed, *amplitude * d.gain)
                }
                DiffuseInput::Silence => DiffuseStream::Silence,
            });
        }

        let chains = image_chains(scene.reflectors.len(), p.image_order);
        let image_pos = vec![vec![Vec3::ZERO; chains.len()]; scene.sources.len()];

        let mut receivers = Vec::with_capacity(scene.receivers.len());
        for r in &scene.receivers {
            let format = r.format.clone();
            let n_pan = format.panning_channels();
            let decoder = format.diffuse_decoder();
            let (binaural, ears) = match &format {
                ReceiverFormat::Binaural { layout, hrirs } => {
                    if let Some(hrir_rate) = hrirs.sample_rate() {
                        if hrir_rate != rate {
                            return Err(EngineError::SampleRateMismatch {
                                path: format!("hrir set of receiver '{}'", r.name),
                                file_rate: hrir_rate,
                                scene_rate: rate,
                            });
                        }
                    }
                    let state = BinauralState::new(hrirs, layout.directions())?;
                    (Some(state), Some([vec![0.0; block], vec![0.0; block]]))
                }
                _ => (None, None),
            };
            let mut paths = Vec::new();
            for (si, _) in scene.sources.iter().enumerate() {
                paths.push(PathState {
                    source: si,
                    chain: None,
                    prev_r: trans.r_min,
                    prev_gain: 0.0,
                    prev_weights: vec![0.0; n_pan],
                    air: OnePoleState::default(),
                    directivity: OnePoleState::default(),
                    reflections: Vec::new(),
                    obstacles: vec![ObstacleState::default(); scene.obstacles.len()],
                });
                for (ci, chain) in chains.iter().enumerate() {
                    paths.push(PathState {
                        source: si,
                        chain: Some(ci),
                        prev_r: trans.r_min,
                        prev_gain: 0.0,
                        prev_weights: vec![0.0; n_pan],
                        air: OnePoleState::default(),
                        directivity: OnePoleState::default(),
                        reflections: vec![OnePoleState::default(); chain.len()],
                        obstacles: vec![ObstacleState::default(); scene.obstacles.len()],
                    });
                }
            }
            receivers.push(ReceiverRt {
                decoder,
                out: vec![vec![0.0; block]; n_pan],
                ears,
                binaural,
                paths,
                diffuse: vec![
                    DiffuseState { prev_gain: 0.0, prev_rot: Mat3::IDENTITY };
                    scene.diffuse.len()
                ],
                weights_end: vec![0.0; n_pan],
                format,
            });
        }

        let delay_memory_bytes = delays.iter().map(|d| d.capacity_bytes()).sum();
        let diag = Diagnostics {
            image_sources_per_source: chains.len(),
            delay_memory_bytes,
            ..Diagnostics::default()
        };

        Ok(Renderer {
            trans,
            chains,
            streams,
            delays,
            src_blocks: vec![vec![0.0; block]; scene.sources.len()],
            diffuse_streams,
            foa_blocks: vec![FoaBlock::new(block); scene.diffuse.len()],
            image_pos,
            source_poses: vec![Pose::IDENTITY; scene.sources.len()],
            receiver_poses: vec![Pose::IDENTITY; scene.receivers.len()],
            receivers,
            scratch: vec![0.0; block],
            block_index: 0,
            first_block: true,
            diag,
            scene,
        })
    }

    pub fn scene(&self) -> &Scene {
        &self.scene
    }

    pub fn block_len(&self) -> usize {
        self.scene.params.block_len
    }

    pub fn block_index(&self) -> u64 {
        self.block_index
    }

    /// Output channel count of a receiver.
    pub fn channels(&self, receiver: usize) -> usize {
        self.scene.receivers[receiver].format.channels()
    }

    /// Output of the given receiver for the block processed last.
    pub fn receiver_output(&self, receiver: usize) -> &[Vec<Sample>] {
        let rt = &self.receivers[receiver];
        match &rt.ears {
            Some(ears) => ears.as_slice(),
            None => &rt.out,
        }
    }

    pub fn diagnostics(&self) -> &Diagnostics {
        &self.diag
    }

    /// Render the next block into the per-receiver output buffers.
    pub fn process_block(&mut self) {
        let started = Instant::now();
        let p = self.scene.params.block_len;
        let fs = self.scene.params.sample_rate;
        let t_end = (self.block_index + 1) as f64 * p as f64 / fs;
        let mut block_clamps = 0u64;
        let mut images_rendered = 0usize;

        // Source audio into the delay lines (writes happen before reads).
        for ((stream, block), delay) in
            self.streams.iter_mut().zip(&mut self.src_blocks).zip(&mut self.delays)
        {
            stream.fill(block);
            delay.write_block(block);
        }
        for (stream, foa) in self.diffuse_streams.iter_mut().zip(&mut self.foa_blocks) {
            stream.fill(foa);
        }

        // Geometry at the block end.
        for (pose, s) in self.source_poses.iter_mut().zip(&self.scene.sources) {
            *pose = s.trajectory.interpolate(t_end);
        }
        for (pose, r) in self.receiver_poses.iter_mut().zip(&self.scene.receivers) {
            *pose = r.trajectory.interpolate(t_end);
        }
        let reflectors = &self.scene.reflectors;
        for (si, pose) in self.source_poses.iter().enumerate() {
            for (ci, chain) in self.chains.iter().enumerate() {
                self.image_pos[si][ci] = chain.iter().fold(pose.position, |pos, &ri| {
                    mirror_position(pos, &reflectors[ri].reflector.polygon)
                });
            }
        }

        let first = self.first_block;
        for (ri, rec) in self.receivers.iter_mut().enumerate() {
            let rec_pose = &self.receiver_poses[ri];
            for ch in rec.out.iter_mut() {
                ch.fill(0.0);
            }

            for path in rec.paths.iter_mut() {
                let src_pose = &self.source_poses[path.source];
                // Effective position and soft-fade gain at the block end.
                let (eff_pos, gain_end) = match path.chain {
                    None => (src_pose.position, 1.0),
                    Some(ci) => {
                        let chain = &self.chains[ci];
                        let mut gain = 1.0f64;
                        let mut pos = src_pose.position;
                        let mut eff = self.image_pos[path.source][ci];
                        for (k, &ridx) in chain.iter().enumerate() {
                            let refl = &reflectors[ridx].reflector;
                            pos = mirror_position(pos, &refl.polygon);
                            let vis = classify_reflection(pos, rec_pose.position, refl);
                            if k + 1 == chain.len() {
                                if let Some(position) = vis.position(pos) {
                                    eff = position;
                                }
                            }
                            gain *= vis.gain(refl.edge_exponent);
                            if gain == 0.0 {
                                break;
                            }
                        }
                        (eff, gain)
                    }
                };
                if path.chain.is_some() && gain_end > 0.0 {
                    images_rendered += 1;
                }

                let r_end = (eff_pos - rec_pose.position).norm();
                let p_rel = relative_position(eff_pos, rec_pose);
                rec.format
                    .weights(p_rel, &mut rec.weights_end)
                    .expect("weight buffer sized at construction");

                if first {
                    path.prev_r = r_end;
                    path.prev_gain = gain_end;
                    path.prev_weights.copy_from_slice(&rec.weights_end);
                }

                // Skip paths that are silent through the whole block.
                if path.prev_gain == 0.0
                    && gain_end == 0.0
                    && path.prev_weights.iter().all(|&w| w == 0.0)
                {
                    path.prev_r = r_end;
                    continue;
                }

                let delay = &self.delays[path.source];
                block_clamps += process_transmission(
                    delay,
                    delay.write_pos(),
                    path.prev_r,
                    r_end,
                    &mut path.air,
                    &self.trans,
                    &mut self.scratch,
                );

                if path.chain.is_none() {
                    if let Some(f6db) = self.scene.sources[path.source].directivity_f6db {
                        let to_rec =
                            relative_position(rec_pose.position, src_pose).normalized();
                        let c_lp = directivity_coeff(to_rec.x, f6db, &self.trans);
                        process_directivity(&mut self.scratch, c_lp, &mut path.directivity);
                    }
                } else if let Some(ci) = path.chain {
                    for (state, &ridx) in path.reflections.iter_mut().zip(&self.chains[ci]) {
                        let refl = &reflectors[ridx].reflector;
                        reflection_filter(
                            &mut self.scratch,
                            refl.reflectivity,
                            refl.damping,
                            state,
                        );
                    }
                }

                for (oi, ob) in self.scene.obstacles.iter().enumerate() {
                    if ob.obstacle.occludes(eff_pos, rec_pose.position) {
                        let theta = ob.obstacle.diffraction_angle(eff_pos, rec_pose.position);
                        let cutoff = obstacle_cutoff(
                            theta,
                            ob.obstacle.polygon.area(),
                            self.trans.speed_of_sound,
                        );
                        apply_obstacle(
                            &mut self.scratch,
                            ob.obstacle.attenuation,
                            cutoff,
                            &self.trans,
                            &mut path.obstacles[oi],
                        );
                    }
                }

                apply_gain_ramp(&mut self.scratch, path.prev_gain, gain_end);
                mix_point(&mut rec.out, &self.scratch, &path.prev_weights, &rec.weights_end)
                    .expect("channel counts fixed at construction");

                path.prev_r = r_end;
                path.prev_gain = gain_end;
                path.prev_weights.copy_from_slice(&rec.weights_end);
            }

            for (di, d) in self.scene.diffuse.iter().enumerate() {
                let state = &mut rec.diffuse[di];
                let box_pose = d.range.trajectory.interpolate(t_end);
                let gain_end = diffuse_range_gain(rec_pose.position, &d.range, t_end);
                let rot_end = rec_pose.rotation().transpose().mul_mat(box_pose.rotation());
                if first {
                    state.prev_gain = gain_end;
                    state.prev_rot = rot_end;
                }
                mix_diffuse(
                    &mut rec.out,
                    &self.foa_blocks[di],
                    &rec.decoder,
                    &state.prev_rot,
                    &rot_end,
                    state.prev_gain,
                    gain_end,
                )
                .expect("decoder rows fixed at construction");
                state.prev_gain = gain_end;
                state.prev_rot = rot_end;
            }

            if let (Some(binaural), Some(ears), ReceiverFormat::Binaural { hrirs, .. }) =
                (&mut rec.binaural, &mut rec.ears, &rec.format)
            {
                crate::receivers::binaural_postprocess(&rec.out, hrirs, binaural, ears);
            }
        }

        self.first_block = false;
        self.block_index += 1;
        let compute = started.elapsed().as_secs_f64();
        self.diag.blocks = self.block_index;
        self.diag.rendered_seconds = self.block_index as f64 * p as f64 / fs;
        self.diag.compute_seconds += compute;
        self.diag.clamp_count += block_clamps;
        self.diag.per_block.push(BlockDiag {
            index: self.block_index - 1,
            images_rendered,
            clamps: block_clamps,
            compute_seconds: compute,
        });
    }
}

fn apply_gain_ramp(block: &mut [Sample], g_prev: f64, g_cur: f64) {
    let scale = 1.0 / block.len() as f64;
    for (n, x) in block.iter_mut().enumerate() {
        let g = g_prev + (g_cur - g_prev) * ((n + 1) as f64 * scale);
        *x *= g as Sample;
    }
}

/// Offline render target: a scene, a duration, and an output file.
#[derive(Debug, Clone)]
pub struct RenderJob {
    pub scene: Scene,
    pub duration: f64,
    pub out_path: PathBuf,
}

/// Render a scene into in-memory buffers (per receiver, per channel),
/// truncated to exactly `duration` seconds.
pub fn render_to_buffers(
    scene: Scene,
    duration: f64,
) -> Result<(Vec<Vec<Vec<Sample>>>, Diagnostics), EngineError> {
    if duration <= 0.0 {
        return Err(EngineError::BadScene("render duration must be positive".into()));
    }
    let fs = scene.params.sample_rate;
    let block = scene.params.block_len;
    let total = (duration * fs).round() as usize;
    let blocks = total.div_ceil(block);
    let mut renderer = Renderer::new(scene)?;
    let n_receivers = renderer.scene.receivers.len();
    let mut out: Vec<Vec<Vec<Sample>>> = (0..n_receivers)
        .map(|r| vec![Vec::with_capacity(blocks * block); renderer.channels(r)])
        .collect();
    for _ in 0..blocks {
        renderer.process_block();
        for (r, buffers) in out.iter_mut().enumerate() {
            for (ch, buf) in renderer.receiver_output(r).iter().zip(buffers.iter_mut()) {
                buf.extend_from_slice(ch);
            }
        }
    }
    for buffers in &mut out {
        for ch in buffers.iter_mut() {
            ch.truncate(total);
        }
    }
    Ok((out, renderer.diag))
}

/// Render a job to disk. With one receiver the output path is used as
/// given; with several, each receiver writes `<stem>-<name>.wav`.
/// Rendering is deterministic: the same job produces bit-identical files.
pub fn render_offline(job: &RenderJob) -> Result<Diagnostics, EngineError> {
    let rate = job.scene.params.sample_rate as u32;
    let receiver_names: Vec<String> =
        job.scene.receivers.iter().map(|r| r.name.clone()).collect();
    if receiver_names.is_empty() {
        return Err(EngineError::BadScene("scene has no receivers".into()));
    }
    let (buffers, diag) = render_to_buffers(job.scene.clone(), job.duration)?;
    if buffers.len() == 1 {
        wav::write_wav(&job.out_path, rate, &buffers[0])?;
    } else {
        for (name, channels) in receiver_names.iter().zip(&buffers) {
            let path = path_with_receiver(&job.out_path, name);
            wav::write_wav(&path, rate, channels)?;
        }
    }
    Ok(diag)
}

fn path_with_receiver(path: &Path, receiver: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let ext = path.extension().and_then(|s| s.to_str()).unwrap_or("wav");
    path.with_file_name(format!("{stem}-{receiver}.{ext}"))
}

/// Static summary of a scene for the `info` command.
#[derive(Debug, Clone)]
pub struct SceneInfo {
    pub sources: usize,
    pub diffuse: usize,
    pub reflectors: usize,
    pub obstacles: usize,
    pub receivers: usize,
    /// Image sources per primary source for the configured order.
    pub image_sources_per_source: usize,
    pub delay_memory_bytes: usize,
}

pub fn scene_info(scene: &Scene) -> SceneInfo {
    let chains = image_chains(scene.reflectors.len(), scene.params.image_order);
    let trans = scene.params.transmission();
    let line = DelayLine::new(scene.params.max_delay_distance, &trans, scene.params.interp);
    SceneInfo {
        sources: scene.sources.len(),
        diffuse: scene.diffuse.len(),
        reflectors: scene.reflectors.len(),
        obstacles: scene.obstacles.len(),
        receivers: scene.receivers.len(),
        image_sources_per_source: chains.len(),
        delay_memory_bytes: line.capacity_bytes() * scene.sources.len(),
    }
}
