//! Receiver render formats: panning of point/image sources into output
//! channels and decoding of diffuse first-order Ambisonics signals.
//!
//! All panning weights depend only on the direction of the relative
//! source position (degree-0 in `p_rel`). Two-dimensional formats project
//! the relative position onto the x,y-plane before normalizing.

mod hrir;

pub use hrir::{binaural_postprocess, BinauralState, HrirError, HrirSet};

use std::f64::consts::{PI, SQRT_2};

use thiserror::Error;

use crate::geometry::{euler_to_matrix, Euler, Mat3, Vec3};
use crate::Sample;

#[derive(Debug, Error)]
pub enum ReceiverError {
    #[error("speaker layout must not be empty")]
    EmptyLayout,
    #[error("speaker {0} has zero-length position")]
    ZeroSpeakerPosition(usize),
    #[error("panning needs at least {needed} speakers, got {got}")]
    TooFewSpeakers { needed: usize, got: usize },
    #[error("vbap speaker pair is degenerate (colinear directions)")]
    DegeneratePair,
    #[error("ambisonics order {0} not supported (1..=3)")]
    UnsupportedOrder(u32),
    #[error("hoa2d order {order} needs at least {} speakers, got {got}", 2 * order + 1)]
    AliasingGuard { order: u32, got: usize },
    #[error("channel count mismatch: expected {expected}, got {got}")]
    ChannelMismatch { expected: usize, got: usize },
    #[error("block length mismatch")]
    BlockLengthMismatch,
    #[error(transparent)]
    Hrir(#[from] HrirError),
}

/// User-defined loudspeaker positions with cached normalized directions
/// and the azimuth ordering used by the 2D panners.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeakerLayout {
    positions: Vec<Vec3>,
    directions: Vec<Vec3>,
    azimuth_order: Vec<usize>,
}

impl SpeakerLayout {
    pub fn new(positions: Vec<Vec3>) -> Result<SpeakerLayout, ReceiverError> {
        if positions.is_empty() {
            return Err(ReceiverError::EmptyLayout);
        }
        let mut directions = Vec::with_capacity(positions.len());
        for (i, p) in positions.iter().enumerate() {
            if p.norm() == 0.0 {
                return Err(ReceiverError::ZeroSpeakerPosition(i));
            }
            directions.push(p.normalized());
        }
        let mut azimuth_order: Vec<usize> = (0..positions.len()).collect();
        azimuth_order.sort_by(|&a, &b| directions[a].azimuth().total_cmp(&directions[b].azimuth()));
        Ok(SpeakerLayout { positions, directions, azimuth_order })
    }

    /// Equal circular distribution of `n` speakers in the horizontal
    /// plane, speaker 0 at azimuth zero.
    pub fn ring(n: usize, radius: f64) -> SpeakerLayout {
        assert!(n > 0);
        let positions = (0..n)
            .map(|k| {
                let az = 2.0 * PI * k as f64 / n as f64;
                Vec3::from_spherical(radius, az, 0.0)
            })
            .collect();
        SpeakerLayout::new(positions).expect("ring layout is always valid")
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn directions(&self) -> &[Vec3] {
        &self.directions
    }

    /// Speaker indices sorted by azimuth.
    pub fn azimuth_order(&self) -> &[usize] {
        &self.azimuth_order
    }

    /// Largest deviation (radians) from equal azimuth spacing; zero for a
    /// perfect ring.
    pub fn ring_irregularity(&self) -> f64 {
        let n = self.len();
        if n < 2 {
            return 0.0;
        }
        let expected = 2.0 * PI / n as f64;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            let a = self.directions[self.azimuth_order[i]].azimuth();
            let b = self.directions[self.azimuth_order[(i + 1) % n]].azimuth();
            let gap = if i + 1 == n { b + 2.0 * PI - a } else { b - a };
            worst = worst.max((gap - expected).abs());
        }
        worst
    }
}

/// First-order Ambisonics block (Furse-Malham normalization), channels
/// w, x, y, z.
#[derive(Debug, Clone, PartialEq)]
pub struct FoaBlock {
    channels: [Vec<Sample>; 4],
}

impl FoaBlock {
    pub fn new(len: usize) -> FoaBlock {
        FoaBlock { channels: std::array::from_fn(|_| vec![0.0; len]) }
    }

    pub fn from_channels(channels: [Vec<Sample>; 4]) -> FoaBlock {
        let len = channels[0].len();
        assert!(channels.iter().all(|c| c.len() == len), "FOA channels must match in length");
        FoaBlock { channels }
    }

    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn channel(&self, i: usize) -> &[Sample] {
        &self.channels[i]
    }

    pub fn channel_mut(&mut self, i: usize) -> &mut [Sample] {
        &mut self.channels[i]
    }

    pub fn channels_mut(&mut self) -> [&mut [Sample]; 4] {
        let [a, b, c, d] = &mut self.channels;
        [a, b, c, d]
    }

    pub fn sample(&self, n: usize) -> [Sample; 4] {
        std::array::from_fn(|c| self.channels[c][n])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HoaDecoder {
    Basic,
    #[default]
    MaxRe,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dims {
    TwoD,
    ThreeD,
}

/// Render format of a receiver, with the per-format configuration.
#[derive(Debug, Clone)]
pub enum ReceiverFormat {
    /// Single-channel microphone with first-order directivity coefficient
    /// `a` (0 omni, 1/2 cardioid, 1 figure-of-eight).
    VirtualMic { directivity: f64 },
    /// Nearest speaker panning.
    Nsp { layout: SpeakerLayout },
    /// Two-dimensional vector-base amplitude panning.
    Vbap2d { layout: SpeakerLayout },
    /// Horizontal higher-order Ambisonics, encode and decode combined per
    /// source; assumes an equal circular speaker distribution.
    Hoa2d { layout: SpeakerLayout, order: u32, decoder: HoaDecoder },
    /// First to third order Ambisonics output (Furse-Malham channels).
    AmbiFuma { order: u32, dims: Dims },
    /// Rendering to a virtual loudspeaker array followed by HRIR
    /// convolution into two ears. The virtual array uses VBAP panning.
    Binaural { layout: SpeakerLayout, hrirs: HrirSet },
}

impl ReceiverFormat {
    pub fn virtual_mic(directivity: f64) -> ReceiverFormat {
        ReceiverFormat::VirtualMic { directivity }
    }

    pub fn nsp(layout: SpeakerLayout) -> ReceiverFormat {
        ReceiverFormat::Nsp { layout }
    }

    pub fn vbap2d(layout: SpeakerLayout) -> Result<ReceiverFormat, ReceiverError> {
        if layout.len() < 2 {
            return Err(ReceiverError::TooFewSpeakers { needed: 2, got: layout.len() });
        }
        Ok(ReceiverFormat::Vbap2d { layout })
    }

    pub fn hoa2d(
        layout: SpeakerLayout,
        order: u32,
        decoder: HoaDecoder,
    ) -> Result<ReceiverFormat, ReceiverError> {
        if order == 0 {
            return Err(ReceiverError::UnsupportedOrder(order));
        }
        if layout.len() < 2 * order as usize + 1 {
            return Err(ReceiverError::AliasingGuard { order, got: layout.len() });
        }
        Ok(ReceiverFormat::Hoa2d { layout, order, decoder })
    }

    pub fn ambi_fuma(order: u32, dims: Dims) -> Result<ReceiverFormat, ReceiverError> {
        if !(1..=3).contains(&order) {
            return Err(ReceiverError::UnsupportedOrder(order));
        }
        Ok(ReceiverFormat::AmbiFuma { order, dims })
    }

    pub fn binaural(layout: SpeakerLayout, hrirs: HrirSet) -> Result<ReceiverFormat, ReceiverError> {
        if layout.len() < 2 {
            return Err(ReceiverError::TooFewSpeakers { needed: 2, got: layout.len() });
        }
        Ok(ReceiverFormat::Binaural { layout, hrirs })
    }

    /// Number of output channels.
    pub fn channels(&self) -> usize {
        match self {
            ReceiverFormat::VirtualMic { .. } => 1,
            ReceiverFormat::Nsp { layout }
            | ReceiverFormat::Vbap2d { layout }
            | ReceiverFormat::Hoa2d { layout, .. } => layout.len(),
            ReceiverFormat::AmbiFuma { order, dims } => fuma_channel_count(*order, *dims),
            ReceiverFormat::Binaural { .. } => 2,
        }
    }

    /// Channels the panning stage produces; differs from `channels` only
    /// for binaural, which pans onto the virtual array first.
    pub fn panning_channels(&self) -> usize {
        match self {
            ReceiverFormat::Binaural { layout, .. } => layout.len(),
            other => other.channels(),
        }
    }

    /// Panning weights for a relative source position, written to `out`
    /// (length `panning_channels`).
    pub fn weights(&self, p_rel: Vec3, out: &mut [f64]) -> Result<(), ReceiverError> {
        let expected = self.panning_channels();
        if out.len() != expected {
            return Err(ReceiverError::ChannelMismatch { expected, got: out.len() });
        }
        match self {
            ReceiverFormat::VirtualMic { directivity } => {
                out[0] = vmic_weight(p_rel, *directivity);
                Ok(())
            }
            ReceiverFormat::Nsp { layout } => {
                nsp_weights(p_rel, layout, out);
                Ok(())
            }
            ReceiverFormat::Vbap2d { layout } | ReceiverFormat::Binaural { layout, .. } => {
                vbap2d_weights(p_rel, layout, out)
            }
            ReceiverFormat::Hoa2d { layout, order, decoder } => {
                hoa2d_weights(p_rel, layout, *order, *decoder, out)
            }
            ReceiverFormat::AmbiFuma { order, dims } => {
                ambi_fuma_weights(p_rel, *order, *dims, out);
                Ok(())
            }
        }
    }

    /// First-order Ambisonics decoding matrix for diffuse signals.
    pub fn diffuse_decoder(&self) -> DiffuseDecoder {
        match self {
            ReceiverFormat::VirtualMic { directivity } => vmic_decoder(*directivity),
            ReceiverFormat::Nsp { layout } | ReceiverFormat::Vbap2d { layout } => {
                speaker_diffuse_decoder(layout, Dims::ThreeD)
            }
            ReceiverFormat::Hoa2d { layout, .. } => speaker_diffuse_decoder(layout, Dims::TwoD),
            ReceiverFormat::AmbiFuma { order, dims } => fuma_diffuse_decoder(*order, *dims),
            ReceiverFormat::Binaural { layout, .. } => {
                speaker_diffuse_decoder(layout, Dims::ThreeD)
            }
        }
    }
}

/// Virtual microphone driving weight `w = 1 + a * (px - 1)` for the
/// normalized relative position.
pub fn vmic_weight(p_rel: Vec3, directivity: f64) -> f64 {
    let px = p_rel.normalized().x;
    1.0 + directivity * (px - 1.0)
}

/// Virtual microphone diffuse decoder `D = (sqrt(2)(1-a), a, 0, 0)`; the
/// sqrt(2) accounts for the Furse-Malham w-channel normalization.
pub fn vmic_decoder(directivity: f64) -> DiffuseDecoder {
    DiffuseDecoder { rows: vec![[SQRT_2 * (1.0 - directivity), directivity, 0.0, 0.0]] }
}

/// Nearest speaker panning: weight 1 on the speaker with the smallest
/// angular distance `d_n = 1 - s_n . p`, ties to the lowest index.
pub fn nsp_weights(p_rel: Vec3, layout: &SpeakerLayout, out: &mut [f64]) {
    let p = p_rel.normalized();
    let mut best = 0usize;
    let mut best_d = f64::INFINITY;
    for (n, s) in layout.directions().iter().enumerate() {
        let d = 1.0 - s.dot(p);
        if d < best_d {
            best_d = d;
            best = n;
        }
    }
    out.fill(0.0);
    out[best] = 1.0;
}

/// Two-dimensional VBAP: the azimuth-adjacent speaker pair bracketing the
/// source direction drives the output, gains solved from the normalized
/// speaker positions and normalized to unit energy.
///
/// If the bracketing pair yields a negative gain (possible on irregular
/// layouts with gaps above 180 degrees), the remaining adjacent pairs are
/// tried, then the nearest speaker carries the signal alone.
pub fn vbap2d_weights(
    p_rel: Vec3,
    layout: &SpeakerLayout,
    out: &mut [f64],
) -> Result<(), ReceiverError> {
    let p = p_rel.horizontal().normalized();
    if p == Vec3::ZERO {
        nsp_weights(p_rel, layout, out);
        return Ok(());
    }
    let order = layout.azimuth_order();
    let n = order.len();
    let az = p.azimuth();

    // Locate the bracketing pair in azimuth order (wrapping).
    let azimuths: Vec<f64> =
        order.iter().map(|&i| layout.directions()[i].azimuth()).collect();
    let mut seg = n - 1; // wrap-around segment by default
    for i in 0..n - 1 {
        if az >= azimuths[i] && az < azimuths[i + 1] {
            seg = i;
            break;
        }
    }

    let solve = |seg: usize| -> Option<(usize, usize, f64, f64)> {
        let i1 = order[seg];
        let i2 = order[(seg + 1) % n];
        let s1 = layout.directions()[i1].horizontal().normalized();
        let s2 = layout.directions()[i2].horizontal().normalized();
        let det = s1.x * s2.y - s2.x * s1.y;
        if det.abs() < 1e-12 {
            return None;
        }
        let g1 = (p.x * s2.y - s2.x * p.y) / det;
        let g2 = (s1.x * p.y - p.x * s1.y) / det;
        Some((i1, i2, g1, g2))
    };

    let mut chosen = None;
    if let Some(sol) = solve(seg) {
        if sol.2 >= -1e-12 && sol.3 >= -1e-12 {
            chosen = Some(sol);
        }
    } else {
        return Err(ReceiverError::DegeneratePair);
    }
    if chosen.is_none() {
        for s in 0..n {
            if s == seg {
                continue;
            }
            if let Some(sol) = solve(s) {
                if sol.2 >= -1e-12 && sol.3 >= -1e-12 {
                    chosen = Some(sol);
                    break;
                }
            }
        }
    }

    out.fill(0.0);
    match chosen {
        Some((i1, i2, g1, g2)) => {
            let norm = (g1 * g1 + g2 * g2).sqrt();
            out[i1] = g1 / norm;
            out[i2] = g2 / norm;
            Ok(())
        }
        None => {
            nsp_weights(p_rel, layout, out);
            Ok(())
        }
    }
}

/// Per-order decoder gains: unity for the basic decoder,
/// `cos(m pi / (2M + 2))` for max-rE.
pub fn hoa2d_order_gains(order: u32, decoder: HoaDecoder) -> Vec<f64> {
    (0..=order)
        .map(|m| match decoder {
            HoaDecoder::Basic => 1.0,
            HoaDecoder::MaxRe => (m as f64 * PI / (2.0 * order as f64 + 2.0)).cos(),
        })
        .collect()
}

/// Combined circular-harmonic encode and sampling decode for one source:
/// encode `(1, cos az, sin az, ..., cos M az, sin M az)`, apply the
/// per-order decoder gains, and sample onto the ring with 1/N scaling for
/// order zero and 2/N for the higher orders.
pub fn hoa2d_weights(
    p_rel: Vec3,
    layout: &SpeakerLayout,
    order: u32,
    decoder: HoaDecoder,
    out: &mut [f64],
) -> Result<(), ReceiverError> {
    let n = layout.len();
    if n < 2 * order as usize + 1 {
        return Err(ReceiverError::AliasingGuard { order, got: n });
    }
    let az = p_rel.horizontal().normalized().azimuth();
    let gains = hoa2d_order_gains(order, decoder);

    // Encoded source signal coefficients.
    let mut encoded = Vec::with_capacity(2 * order as usize + 1);
    encoded.push(gains[0]);
    for m in 1..=order {
        let (s, c) = (m as f64 * az).sin_cos();
        encoded.push(gains[m as usize] * c);
        encoded.push(gains[m as usize] * s);
    }

    for (w, &spk) in out.iter_mut().zip(layout.directions()) {
        let phi = spk.azimuth();
        let mut acc = encoded[0] / n as f64;
        for m in 1..=order as usize {
            let (s, c) = (m as f64 * phi).sin_cos();
            acc += 2.0 / n as f64 * (encoded[2 * m - 1] * c + encoded[2 * m] * s);
        }
        *w = acc;
    }
    Ok(())
}

fn fuma_channel_count(order: u32, dims: Dims) -> usize {
    match dims {
        Dims::TwoD => 2 * order as usize + 1,
        Dims::ThreeD => ((order + 1) * (order + 1)) as usize,
    }
}

/// Furse-Malham panning weights, channel sequence WXYZ | RSTUV | KLMNOPQ.
/// In 2D mode the relative position is projected onto the x,y-plane and
/// the elevation-dependent channels (identically zero for horizontal
/// sources) are discarded, leaving W X Y | U V | P Q.
pub fn ambi_fuma_weights(p_rel: Vec3, order: u32, dims: Dims, out: &mut [f64]) {
    debug_assert_eq!(out.len(), fuma_channel_count(order, dims));
    let p = match dims {
        Dims::TwoD => p_rel.horizontal().normalized(),
        Dims::ThreeD => p_rel.normalized(),
    };
    let a = p.azimuth();
    let e = p.elevation();
    let (sa, ca) = a.sin_cos();
    let (se, ce) = e.sin_cos();
    let (s2a, c2a) = (2.0 * a).sin_cos();
    let (s3a, c3a) = (3.0 * a).sin_cos();

    let w = 1.0 / SQRT_2;
    match dims {
        Dims::ThreeD => {
            out[0] = w;
            out[1] = ca * ce;
            out[2] = sa * ce;
            out[3] = se;
            if order >= 2 {
                out[4] = 1.5 * se * se - 0.5;
                out[5] = ca * (2.0 * e).sin();
                out[6] = sa * (2.0 * e).sin();
                out[7] = c2a * ce * ce;
                out[8] = s2a * ce * ce;
            }
            if order >= 3 {
                let lm = (135.0f64 / 256.0).sqrt();
                let no = (27.0f64 / 4.0).sqrt();
                out[9] = se * (5.0 * se * se - 3.0) / 2.0;
                out[10] = lm * ca * ce * (5.0 * se * se - 1.0);
                out[11] = lm * sa * ce * (5.0 * se * se - 1.0);
                out[12] = no * c2a * se * ce * ce;
                out[13] = no * s2a * se * ce * ce;
                out[14] = c3a * ce * ce * ce;
                out[15] = s3a * ce * ce * ce;
            }
        }
        Dims::TwoD => {
            out[0] = w;
            out[1] = ca;
            out[2] = sa;
            if order >= 2 {
                out[3] = c2a;
                out[4] = s2a;
            }
            if order >= 3 {
                out[5] = c3a;
                out[6] = s3a;
            }
        }
    }
}

/// First-order Ambisonics decoding matrix (N rows, columns w x y z).
#[derive(Debug, Clone, PartialEq)]
pub struct DiffuseDecoder {
    rows: Vec<[f64; 4]>,
}

impl DiffuseDecoder {
    pub fn rows(&self) -> &[[f64; 4]] {
        &self.rows
    }

    pub fn channels(&self) -> usize {
        self.rows.len()
    }
}

/// Max-rE first-order decoder for speaker layouts:
/// row n = `(sqrt(2), g s_x, g s_y, g s_z) / N` with `g = 1/sqrt(2)` in 2D
/// and `1/sqrt(3)` in 3D.
pub fn speaker_diffuse_decoder(layout: &SpeakerLayout, dims: Dims) -> DiffuseDecoder {
    let g = match dims {
        Dims::TwoD => 1.0 / SQRT_2,
        Dims::ThreeD => 1.0 / 3.0f64.sqrt(),
    };
    let n = layout.len() as f64;
    let rows = layout
        .directions()
        .iter()
        .map(|s| [SQRT_2 / n, g * s.x / n, g * s.y / n, g * s.z / n])
        .collect();
    DiffuseDecoder { rows }
}

/// Ambisonics receivers pass the FOA signal through into the matching
/// output channels; higher-order channels receive no diffuse signal.
pub fn fuma_diffuse_decoder(order: u32, dims: Dims) -> DiffuseDecoder {
    let mut rows = vec![[0.0; 4]; fuma_channel_count(order, dims)];
    rows[0][0] = 1.0;
    rows[1][1] = 1.0;
    rows[2][2] = 1.0;
    if dims == Dims::ThreeD {
        rows[3][3] = 1.0;
    }
    DiffuseDecoder { rows }
}

/// Rotate the directional channels of an FOA block by the inverse of the
/// given orientation (the w channel is direction-independent).
pub fn foa_rotate(block: &mut FoaBlock, orientation: Euler) {
    let rot = euler_to_matrix(orientation).transpose();
    foa_rotate_matrix(block, &rot);
}

/// Rotate the (x, y, z) channels by an explicit matrix.
pub fn foa_rotate_matrix(block: &mut FoaBlock, rot: &Mat3) {
    for n in 0..block.len() {
        let v = Vec3::new(
            block.channels[1][n] as f64,
            block.channels[2][n] as f64,
            block.channels[3][n] as f64,
        );
        let r = rot.mul_vec(v);
        block.channels[1][n] = r.x as Sample;
        block.channels[2][n] = r.y as Sample;
        block.channels[3][n] = r.z as Sample;
    }
}

/// Add a panned point-source block into the output channels, with the
/// weights interpolated linearly across the block from the previous to
/// the current block-boundary values (sample n uses fraction (n+1)/P).
pub fn mix_point(
    out: &mut [Vec<Sample>],
    y: &[Sample],
    w_prev: &[f64],
    w_cur: &[f64],
) -> Result<(), ReceiverError> {
    if w_prev.len() != out.len() || w_cur.len() != out.len() {
        return Err(ReceiverError::ChannelMismatch { expected: out.len(), got: w_cur.len() });
    }
    let scale = 1.0 / y.len() as f64;
    for (ch, out_ch) in out.iter_mut().enumerate() {
        if out_ch.len() != y.len() {
            return Err(ReceiverError::BlockLengthMismatch);
        }
        let (w0, w1) = (w_prev[ch], w_cur[ch]);
        if w0 == 0.0 && w1 == 0.0 {
            continue;
        }
        for (n, (o, &x)) in out_ch.iter_mut().zip(y).enumerate() {
            let w = w0 + (w1 - w0) * ((n + 1) as f64 * scale);
            *o += w as Sample * x;
        }
    }
    Ok(())
}

/// Decode a rotated, gain-ramped diffuse FOA block into the output
/// channels. Rotation matrix entries and the gain interpolate linearly
/// across the block like the panning weights.
#[allow(clippy::too_many_arguments)]
pub fn mix_diffuse(
    out: &mut [Vec<Sample>],
    foa: &FoaBlock,
    decoder: &DiffuseDecoder,
    rot_prev: &Mat3,
    rot_cur: &Mat3,
    gain_prev: f64,
    gain_cur: f64,
) -> Result<(), ReceiverError> {
    if decoder.channels() != out.len() {
        return Err(ReceiverError::ChannelMismatch {
            expected: out.len(),
            got: decoder.channels(),
        });
    }
    let len = foa.len();
    let scale = 1.0 / len as f64;
    for n in 0..len {
        let t = (n + 1) as f64 * scale;
        let gain = gain_prev + (gain_cur - gain_prev) * t;
        if gain == 0.0 && gain_prev == 0.0 && gain_cur == 0.0 {
            continue;
        }
        let s = foa.sample(n);
        let v = Vec3::new(s[1] as f64, s[2] as f64, s[3] as f64);
        let mut rot = [[0.0f64; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                rot[i][j] = rot_prev.0[i][j] + (rot_cur.0[i][j] - rot_prev.0[i][j]) * t;
            }
        }
        let r = Mat3(rot).mul_vec(v);
        let fo = [s[0] as f64, r.x, r.y, r.z];
        for (row, out_ch) in decoder.rows().iter().zip(out.iter_mut()) {
            let z: f64 = row.iter().zip(&fo).map(|(d, f)| d * f).sum();
            out_ch[n] += (z * gain) as Sample;
        }
    }
    Ok(())
}

/// One-shot receiver mix: weighted point-source blocks plus decoded
/// diffuse blocks (identity orientation, unit gain), summed into `N`
/// output channels.
pub fn receiver_mix(
    points: &[(Vec<f64>, Vec<Sample>)],
    diffuse: &[FoaBlock],
    decoder: &DiffuseDecoder,
    out: &mut [Vec<Sample>],
) -> Result<(), ReceiverError> {
    for ch in out.iter_mut() {
        ch.fill(0.0);
    }
    for (w, y) in points {
        mix_point(out, y, w, w)?;
    }
    for foa in diffuse {
        mix_diffuse(out, foa, decoder, &Mat3::IDENTITY, &Mat3::IDENTITY, 1.0, 1.0)?;
    }
    Ok(())
}
