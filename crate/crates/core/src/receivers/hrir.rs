//! Head-related impulse response sets and the binaural post-processing
//! stage: virtual loudspeaker signals convolved with per-speaker HRIR
//! pairs into a two-channel output.

use std::path::Path;

use thiserror::Error;

use crate::geometry::Vec3;
use crate::wav;
use crate::Sample;

#[derive(Debug, Error)]
pub enum HrirError {
    #[error("hrir manifest {path}: {message}")]
    Manifest { path: String, message: String },
    #[error(transparent)]
    Wav(#[from] wav::WavError),
    #[error("hrir file {path} must have exactly 2 channels, got {got}")]
    NotStereo { path: String, got: usize },
    #[error("hrir set is empty")]
    Empty,
    #[error("hrir lengths differ: {0} vs {1} taps")]
    LengthMismatch(usize, usize),
    #[error("hrir sample rates differ: {0} vs {1} Hz")]
    RateMismatch(u32, u32),
}

#[derive(Debug, Clone, PartialEq)]
struct HrirEntry {
    direction: Vec3,
    left: Vec<Sample>,
    right: Vec<Sample>,
}

/// HRIR pairs indexed by direction. Virtual speakers are matched to the
/// nearest measured direction, without interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct HrirSet {
    entries: Vec<HrirEntry>,
    taps: usize,
    sample_rate: Option<u32>,
}

impl HrirSet {
    /// Build a set from `(direction, left, right)` triples. All impulse
    /// responses must have the same length.
    pub fn from_parts(parts: Vec<(Vec3, Vec<Sample>, Vec<Sample>)>) -> Result<HrirSet, HrirError> {
        if parts.is_empty() {
            return Err(HrirError::Empty);
        }
        let taps = parts[0].1.len();
        for (_, l, r) in &parts {
            if l.len() != taps || r.len() != taps {
                return Err(HrirError::LengthMismatch(taps, l.len().max(r.len())));
            }
        }
        let entries = parts
            .into_iter()
            .map(|(direction, left, right)| HrirEntry {
                direction: direction.normalized(),
                left,
                right,
            })
            .collect();
        Ok(HrirSet { entries, taps, sample_rate: None })
    }

    /// Load a manifest: one `azimuth_deg elevation_deg wav_path` entry per
    /// line, paths relative to the manifest file, `#` starts a comment.
    /// Each wav must be stereo (left, right).
    pub fn load_manifest(path: &Path) -> Result<HrirSet, HrirError> {
        let display = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| HrirError::Manifest {
            path: display.clone(),
            message: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        let mut entries = Vec::new();
        let mut taps = None;
        let mut rate = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split_whitespace();
            let bad = |message: String| HrirError::Manifest {
                path: format!("{display}:{}", lineno + 1),
                message,
            };
            let az: f64 = fields
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad("expected azimuth in degrees".into()))?;
            let el: f64 = fields
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad("expected elevation in degrees".into()))?;
            let file = fields.next().ok_or_else(|| bad("expected wav path".into()))?;
            let data = wav::read_wav(&base.join(file))?;
            if data.channels.len() != 2 {
                return Err(HrirError::NotStereo {
                    path: file.to_string(),
                    got: data.channels.len(),
                });
            }
            match rate {
                None => rate = Some(data.sample_rate),
                Some(r) if r != data.sample_rate => {
                    return Err(HrirError::RateMismatch(r, data.sample_rate))
                }
                _ => {}
            }
            let len = data.channels[0].len();
            match taps {
                None => taps = Some(len),
                Some(t) if t != len => return Err(HrirError::LengthMismatch(t, len)),
                _ => {}
            }
            let mut channels = data.channels.into_iter();
            entries.push(HrirEntry {
                direction: Vec3::from_spherical(1.0, az.to_radians(), el.to_radians()),
                left: channels.next().unwrap(),
                right: channels.next().unwrap(),
            });
        }
        if entries.is_empty() {
            return Err(HrirError::Empty);
        }
        Ok(HrirSet { entries, taps: taps.unwrap(), sample_rate: rate })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn taps(&self) -> usize {
        self.taps
    }

    pub fn sample_rate(&self) -> Option<u32> {
        self.sample_rate
    }

    /// Index of the entry closest to the given direction.
    pub fn nearest(&self, direction: Vec3) -> usize {
        let d = direction.normalized();
        let mut best = 0;
        let mut best_dot = f64::NEG_INFINITY;
        for (i, e) in self.entries.iter().enumerate() {
            let dot = e.direction.dot(d);
            if dot > best_dot {
                best_dot = dot;
                best = i;
            }
        }
        best
    }

    fn pair(&self, index: usize) -> (&[Sample], &[Sample]) {
        let e = &self.entries[index];
        (&e.left, &e.right)
    }
}

/// FIR convolution state for a set of virtual speakers: per speaker the
/// `taps - 1` most recent input samples, carried across blocks.
#[derive(Debug, Clone)]
pub struct BinauralState {
    /// HRIR entry assigned to each virtual speaker.
    assignment: Vec<usize>,
    history: Vec<Vec<Sample>>,
    taps: usize,
}

impl BinauralState {
    /// Match every virtual speaker direction to its nearest HRIR pair.
    pub fn new(hrirs: &HrirSet, speaker_directions: &[Vec3]) -> Result<BinauralState, HrirError> {
        if hrirs.is_empty() {
            return Err(HrirError::Empty);
        }
        let assignment = speaker_directions.iter().map(|&d| hrirs.nearest(d)).collect();
        let taps = hrirs.taps();
        Ok(BinauralState {
            assignment,
            history: vec![vec![0.0; taps.saturating_sub(1)]; speaker_directions.len()],
            taps,
        })
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn reset(&mut self) {
        for h in &mut self.history {
            h.fill(0.0);
        }
    }
}

/// Convolve the virtual speaker blocks with their assigned HRIR pairs and
/// sum into the two ear channels (direct-form FIR, state carried across
/// blocks).
pub fn binaural_postprocess(
    speaker_blocks: &[Vec<Sample>],
    hrirs: &HrirSet,
    state: &mut BinauralState,
    out: &mut [Vec<Sample>; 2],
) {
    assert_eq!(speaker_blocks.len(), state.assignment.len());
    let len = speaker_blocks.first().map(|b| b.len()).unwrap_or(0);
    for ear in out.iter_mut() {
        ear.fill(0.0);
    }
    let hist_len = state.taps.saturating_sub(1);
    let mut buf = vec![0.0f32; hist_len + len];
    for (spk, block) in speaker_blocks.iter().enumerate() {
        let (left, right) = hrirs.pair(state.assignment[spk]);
        buf[..hist_len].copy_from_slice(&state.history[spk]);
        buf[hist_len..].copy_from_slice(block);
        for n in 0..len {
            let mut acc_l = 0.0f32;
            let mut acc_r = 0.0f32;
            // buf index of x[n - j] is hist_len + n - j.
            for j in 0..state.taps {
                let x = buf[hist_len + n - j];
                acc_l += left[j] * x;
                acc_r += right[j] * x;
            }
            out[0][n] += acc_l;
            out[1][n] += acc_r;
        }
        if hist_len > 0 {
            let start = buf.len() - hist_len;
            state.history[spk].copy_from_slice(&buf[start..]);
        }
    }
}
