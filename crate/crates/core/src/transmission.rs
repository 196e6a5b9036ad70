//! Per-source signal path: time-variant delay with the 1/r distance law,
//! distance-controlled air absorption, frequency-dependent source
//! directivity, and obstacle diffraction.

use std::f64::consts::PI;

use crate::geometry::{PlanarPolygon, Vec3};
use crate::Sample;

/// Global transmission constants of a scene.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmissionParams {
    /// Audio sampling rate in Hz.
    pub sample_rate: f64,
    /// Speed of sound in m/s.
    pub speed_of_sound: f64,
    /// Empiric air-absorption constant; `INFINITY` disables air absorption.
    pub air_constant: f64,
    /// Lower distance clamp in meters, guarding the 1/r singularity.
    pub r_min: f64,
}

impl Default for TransmissionParams {
    fn default() -> Self {
        TransmissionParams {
            sample_rate: 44100.0,
            speed_of_sound: 340.0,
            air_constant: 7782.0,
            r_min: 0.1,
        }
    }
}

impl TransmissionParams {
    pub fn delay_samples(&self, r: f64) -> f64 {
        r * self.sample_rate / self.speed_of_sound
    }
}

/// Air-absorption low-pass coefficient for distance `r`:
/// `a1 = exp(-r * fs / (c * air_constant))`.
///
/// The coefficient is the input gain of the one-pole section
/// `y[n] = a1 * x[n] + (1 - a1) * y[n-1]`, so `a1 = 1` (at r = 0, or with
/// air absorption disabled) passes the signal through unchanged and the
/// cutoff drops as the distance grows. DC gain is 1 for any r.
pub fn air_absorption_coeff(r: f64, params: &TransmissionParams) -> f64 {
    // Floor keeps the coefficient strictly positive where the exponential
    // underflows (tens of kilometers); the filter stays well-formed.
    (-r * params.sample_rate / (params.speed_of_sound * params.air_constant))
        .exp()
        .max(f64::MIN_POSITIVE)
}

/// One-pole filter memory. Reset to zero at stream start.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct OnePoleState {
    y_prev: Sample,
}

impl OnePoleState {
    pub fn reset(&mut self) {
        self.y_prev = 0.0;
    }

    /// `y[n] = input_gain * x[n] + feedback * y[n-1]`
    #[inline]
    pub fn step(&mut self, x: Sample, input_gain: Sample, feedback: Sample) -> Sample {
        let y = input_gain * x + feedback * self.y_prev;
        self.y_prev = y;
        y
    }
}

/// Delay-line read interpolation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DelayInterp {
    /// Round to the nearest sample.
    Nearest,
    /// Hann-windowed sinc of the given (even) tap count, normalized to
    /// unity DC gain. Falls back to the exact sample at integer delays.
    Sinc { taps: usize },
}

impl DelayInterp {
    pub const DEFAULT_SINC_TAPS: usize = 8;
}

impl Default for DelayInterp {
    fn default() -> Self {
        DelayInterp::Sinc { taps: Self::DEFAULT_SINC_TAPS }
    }
}

/// Per-source circular history buffer enabling time-variant fractional
/// delays. Capacity is fixed at construction: `ceil(l_d * fs / c)` samples
/// for a maximum distance `l_d`.
#[derive(Debug, Clone)]
pub struct DelayLine {
    buf: Vec<Sample>,
    written: u64,
    max_distance: f64,
    interp: DelayInterp,
}

impl DelayLine {
    pub fn new(max_distance: f64, params: &TransmissionParams, interp: DelayInterp) -> DelayLine {
        let capacity = params.delay_samples(max_distance).ceil().max(1.0) as usize;
        DelayLine { buf: vec![0.0; capacity], written: 0, max_distance, interp }
    }

    pub fn capacity(&self) -> usize {
        self.buf.len()
    }

    pub fn capacity_bytes(&self) -> usize {
        self.buf.len() * std::mem::size_of::<Sample>()
    }

    pub fn max_distance(&self) -> f64 {
        self.max_distance
    }

    pub fn interp(&self) -> DelayInterp {
        self.interp
    }

    /// Absolute index of the next sample to be written.
    pub fn write_pos(&self) -> u64 {
        self.written
    }

    pub fn write_block(&mut self, block: &[Sample]) {
        let cap = self.buf.len();
        for &x in block {
            self.buf[(self.written % cap as u64) as usize] = x;
            self.written += 1;
        }
    }

    #[inline]
    fn sample_at(&self, index: i64) -> Sample {
        if index < 0 || index as u64 >= self.written {
            return 0.0;
        }
        let oldest = self.written.saturating_sub(self.buf.len() as u64);
        let index = (index as u64).max(oldest);
        self.buf[(index % self.buf.len() as u64) as usize]
    }

    /// Signal value `delay_samples` before the absolute sample index `at`
    /// (which must already be written). Times before the stream start
    /// read as silence.
    pub fn read_delayed(&self, at: u64, delay_samples: f64) -> Sample {
        debug_assert!(at < self.written);
        let pos = at as f64 - delay_samples;
        match self.interp {
            DelayInterp::Nearest => self.sample_at(pos.round() as i64),
            DelayInterp::Sinc { taps } => {
                let i0 = pos.floor();
                let frac = pos - i0;
                // Exact integer delays read the sample directly, so both
                // interpolation modes agree there.
                if frac < 1e-9 {
                    return self.sample_at(i0 as i64);
                }
                if frac > 1.0 - 1e-9 {
                    return self.sample_at(i0 as i64 + 1);
                }
                let half = (taps / 2) as i64;
                let mut acc = 0.0f64;
                let mut wsum = 0.0f64;
                for k in (1 - half)..=half {
                    let arg = k as f64 - frac;
                    let w = sinc(arg) * hann_window(arg, half as f64);
                    acc += w * self.sample_at(i0 as i64 + k) as f64;
                    wsum += w;
                }
                (acc / wsum) as Sample
            }
        }
    }
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

fn hann_window(x: f64, half_width: f64) -> f64 {
    if x.abs() >= half_width {
        0.0
    } else {
        0.5 * (1.0 + (PI * x / half_width).cos())
    }
}

/// Distance-dependent transmission for one block: fractional-delay read,
/// 1/r gain at the read, then the air-absorption one-pole.
///
/// Distances and the air coefficient are interpolated linearly across the
/// block from `r_begin` (the previous block boundary) to `r_end`; sample n
/// of a block of length P uses the fraction (n+1)/P, so the last sample
/// lands exactly on `r_end`. Out-of-range distances clamp to
/// `[r_min, max_distance]` and are reported in the returned clamp count.
#[allow(clippy::too_many_arguments)]
pub fn process_transmission(
    delay: &DelayLine,
    block_end: u64,
    r_begin: f64,
    r_end: f64,
    air: &mut OnePoleState,
    params: &TransmissionParams,
    out: &mut [Sample],
) -> u64 {
    let len = out.len();
    assert!(len > 0, "empty block");
    debug_assert!(block_end >= len as u64);
    let block_start = block_end - len as u64;

    let mut clamps = 0;
    let mut clamp = |r: f64| -> f64 {
        let c = r.clamp(params.r_min, delay.max_distance);
        if c != r {
            clamps += 1;
        }
        c
    };
    let r0 = clamp(r_begin);
    let r1 = clamp(r_end);
    let a0 = air_absorption_coeff(r0, params);
    let a1 = air_absorption_coeff(r1, params);

    let scale = 1.0 / len as f64;
    for (n, y) in out.iter_mut().enumerate() {
        let t = (n + 1) as f64 * scale;
        let r = r0 + (r1 - r0) * t;
        let a = a0 + (a1 - a0) * t;
        let x = delay.read_delayed(block_start + n as u64, params.delay_samples(r));
        let attenuated = x / r as Sample;
        *y = air.step(attenuated, a as Sample, (1.0 - a) as Sample);
    }
    clamps
}

/// Recursive coefficient of the directivity low-pass for a receiver
/// direction with normalized x-component `px` (cosine of the angle off the
/// source's forward axis): `c_lp = (1/2 - px/2)^xi` with
/// `xi = pi * f_6dB / (fs * ln 2)`.
///
/// On-axis (px = 1) the coefficient is 0 and the filter passes through;
/// at the rear (px = -1) it is 1 and everything but DC dies out.
pub fn directivity_coeff(px: f64, f_6db: f64, params: &TransmissionParams) -> f64 {
    let xi = PI * f_6db / params.sample_rate / std::f64::consts::LN_2;
    let base = 0.5 - 0.5 * px;
    base.powf(xi)
}

/// Apply the directivity one-pole `y[n] = (1-c)x[n] + c y[n-1]` in place.
pub fn process_directivity(block: &mut [Sample], c_lp: f64, state: &mut OnePoleState) {
    let c = c_lp as Sample;
    let g = 1.0 - c;
    for x in block.iter_mut() {
        *x = state.step(*x, g, c);
    }
}

/// Planar polygonal obstacle with a frequency-independent direct-path
/// transmission weight `attenuation` (1 = acoustically transparent,
/// 0 = direct path fully blocked, leaving only the diffracted path).
#[derive(Debug, Clone)]
pub struct Obstacle {
    pub polygon: PlanarPolygon,
    pub attenuation: f64,
}

impl Obstacle {
    pub fn new(polygon: PlanarPolygon, attenuation: f64) -> Obstacle {
        Obstacle { polygon, attenuation }
    }

    /// Aperture of the equal-area disc: `a = 2 * sqrt(A / pi)`.
    pub fn aperture(&self) -> f64 {
        2.0 * (self.polygon.area() / PI).sqrt()
    }

    pub fn occludes(&self, src: Vec3, rec: Vec3) -> bool {
        self.polygon.segment_intersects(src, rec)
    }

    /// Diffraction angle of the shortest source-boundary-receiver path:
    /// the angle between the boundary-to-source and receiver-to-boundary
    /// directions, clamped to [0, pi/2].
    pub fn diffraction_angle(&self, src: Vec3, rec: Vec3) -> f64 {
        let q = self.shortest_boundary_point(src, rec);
        let u = (src - q).normalized();
        let v = (q - rec).normalized();
        u.dot(v).clamp(-1.0, 1.0).acos().min(PI / 2.0)
    }

    /// Boundary point minimizing |q - src| + |rec - q|, found per edge by
    /// ternary search (the path length is convex along each edge).
    fn shortest_boundary_point(&self, src: Vec3, rec: Vec3) -> Vec3 {
        let verts = self.polygon.vertices();
        let n = verts.len();
        let mut best = verts[0];
        let mut best_len = f64::INFINITY;
        for i in 0..n {
            let a = verts[i];
            let b = verts[(i + 1) % n];
            let path = |t: f64| {
                let q = a + (b - a) * t;
                (q - src).norm() + (rec - q).norm()
            };
            let (mut lo, mut hi) = (0.0f64, 1.0f64);
            for _ in 0..60 {
                let m1 = lo + (hi - lo) / 3.0;
                let m2 = hi - (hi - lo) / 3.0;
                if path(m1) <= path(m2) {
                    hi = m2;
                } else {
                    lo = m1;
                }
            }
            let t = 0.5 * (lo + hi);
            let len = path(t);
            if len < best_len {
                best_len = len;
                best = a + (b - a) * t;
            }
        }
        best
    }
}

/// Diffraction low-pass cutoff `f_o = 3.8317 * c / (2 pi a sin(theta))`
/// with the aperture `a = 2 * sqrt(area / pi)`. A zero angle returns
/// `+INFINITY`, meaning no low-pass is applied.
pub fn obstacle_cutoff(theta: f64, area: f64, speed_of_sound: f64) -> f64 {
    let s = theta.sin();
    if s <= 0.0 {
        return f64::INFINITY;
    }
    let aperture = 2.0 * (area / PI).sqrt();
    3.8317 * speed_of_sound / (2.0 * PI * aperture * s)
}

/// Second-order low-pass state: two cascaded identical one-pole sections.
#[derive(Debug, Clone, Copy, Default)]
pub struct ObstacleState {
    lp1: OnePoleState,
    lp2: OnePoleState,
}

impl ObstacleState {
    pub fn reset(&mut self) {
        self.lp1.reset();
        self.lp2.reset();
    }
}

/// Split a block into the attenuated direct path and the diffracted
/// low-passed path: `out = a_o * x + (1 - a_o) * LP2(x)`.
///
/// Both one-pole sections use the coefficient `exp(-2 pi f_o / fs)`. An
/// infinite cutoff bypasses the low-pass entirely, so the output equals
/// the input regardless of `a_o`.
pub fn apply_obstacle(
    block: &mut [Sample],
    attenuation: f64,
    cutoff: f64,
    params: &TransmissionParams,
    state: &mut ObstacleState,
) {
    if !cutoff.is_finite() {
        return;
    }
    let fb = (-2.0 * PI * cutoff / params.sample_rate).exp() as Sample;
    let gain = 1.0 - fb;
    let a_o = attenuation as Sample;
    for x in block.iter_mut() {
        let lp = state.lp2.step(state.lp1.step(*x, gain, fb), gain, fb);
        *x = a_o * *x + (1.0 - a_o) * lp;
    }
}
