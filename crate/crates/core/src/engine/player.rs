//! Audio sources feeding the renderer: file playback plus deterministic
//! signal generators for tests and benchmarks.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::engine::EngineError;
use crate::wav;
use crate::Sample;

/// Multichannel file/buffer playback. Streams fixed-size blocks; at the
/// end of the data it either loops or pads with silence.
#[derive(Debug, Clone)]
pub struct AudioPlayer {
    channels: Vec<Vec<Sample>>,
    pos: usize,
    looped: bool,
}

impl AudioPlayer {
    /// Load a wav file. The file sample rate must equal the scene rate
    /// (no resampling); `gain` scales all samples on load.
    pub fn from_file(
        path: &Path,
        looped: bool,
        gain: f64,
        expected_rate: u32,
        expected_channels: Option<usize>,
    ) -> Result<AudioPlayer, EngineError> {
        let data = wav::read_wav(path)?;
        if data.sample_rate != expected_rate {
            return Err(EngineError::SampleRateMismatch {
                path: path.display().to_string(),
                file_rate: data.sample_rate,
                scene_rate: expected_rate,
            });
        }
        if let Some(expected) = expected_channels {
            if data.channels.len() != expected {
                return Err(EngineError::ChannelCountMismatch {
                    path: path.display().to_string(),
                    expected,
                    got: data.channels.len(),
                });
            }
        }
        let mut channels = data.channels;
        if gain != 1.0 {
            let g = gain as Sample;
            for ch in &mut channels {
                for s in ch.iter_mut() {
                    *s *= g;
                }
            }
        }
        Ok(AudioPlayer { channels, pos: 0, looped })
    }

    pub fn from_samples(channels: Vec<Vec<Sample>>, looped: bool) -> AudioPlayer {
        AudioPlayer { channels, pos: 0, looped }
    }

    pub fn channels(&self) -> usize {
        self.channels.len()
    }

    /// Fill one block per channel; `outs` length must match the channel
    /// count.
    pub fn fill(&mut self, outs: &mut [&mut [Sample]]) {
        debug_assert_eq!(outs.len(), self.channels.len());
        let frames = self.channels.first().map(|c| c.len()).unwrap_or(0);
        let block = outs.first().map(|o| o.len()).unwrap_or(0);
        for n in 0..block {
            if frames == 0 || (!self.looped && self.pos >= frames) {
                for out in outs.iter_mut() {
                    out[n] = 0.0;
                }
                continue;
            }
            let idx = self.pos % frames;
            for (out, ch) in outs.iter_mut().zip(&self.channels) {
                out[n] = ch[idx];
            }
            self.pos += 1;
        }
    }
}

/// Mono source signal.
#[derive(Debug, Clone)]
pub enum SourceStream {
    Player(AudioPlayer),
    Sine { frequency: f64, amplitude: f64, sample_rate: f64, n: u64 },
    Noise { rng: ChaCha8Rng, amplitude: f32 },
    Impulse { at: u64, amplitude: f32, n: u64 },
    Silence,
}

impl SourceStream {
    pub fn noise(seed: u64, amplitude: f64) -> SourceStream {
        SourceStream::Noise { rng: ChaCha8Rng::seed_from_u64(seed), amplitude: amplitude as f32 }
    }

    pub fn fill(&mut self, out: &mut [Sample]) {
        match self {
            SourceStream::Player(p) => p.fill(&mut [out]),
            SourceStream::Sine { frequency, amplitude, sample_rate, n } => {
                for s in out.iter_mut() {
                    let t = *n as f64 / *sample_rate;
                    *s = (*amplitude * (2.0 * std::f64::consts::PI * *frequency * t).sin())
                        as Sample;
                    *n += 1;
                }
            }
            SourceStream::Noise { rng, amplitude } => {
                for s in out.iter_mut() {
                    *s = rng.gen_range(-1.0f32..1.0) * *amplitude;
                }
            }
            SourceStream::Impulse { at, amplitude, n } => {
                for s in out.iter_mut() {
                    *s = if *n == *at { *amplitude } else { 0.0 };
                    *n += 1;
                }
            }
            SourceStream::Silence => out.fill(0.0),
        }
    }
}

/// Four-channel first-order Ambisonics signal for diffuse sources.
#[derive(Debug, Clone)]
pub enum DiffuseStream {
    Player(AudioPlayer),
    /// Independent noise per channel, fixed seed.
    Noise { rng: ChaCha8Rng, amplitude: f32 },
    Silence,
}

impl DiffuseStream {
    pub fn noise(seed: u64, amplitude: f64) -> DiffuseStream {
        DiffuseStream::Noise { rng: ChaCha8Rng::seed_from_u64(seed), amplitude: amplitude as f32 }
    }

    pub fn fill(&mut self, out: &mut crate::receivers::FoaBlock) {
        match self {
            DiffuseStream::Player(p) => {
                let mut split = out.channels_mut();
                let [a, b, c, d] = &mut split;
                p.fill(&mut [a, b, c, d]);
            }
            DiffuseStream::Noise { rng, amplitude } => {
                for c in 0..4 {
                    for s in out.channel_mut(c).iter_mut() {
                        *s = rng.gen_range(-1.0f32..1.0) * *amplitude;
                    }
                }
            }
            DiffuseStream::Silence => {
                for c in 0..4 {
                    out.channel_mut(c).fill(0.0);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn short_file_pads_with_silence() {
        let mut p = AudioPlayer::from_samples(vec![vec![1.0, 2.0, 3.0]], false);
        let mut out = vec![0.0; 6];
        p.fill(&mut [&mut out]);
        assert_eq!(out, vec![1.0, 2.0, 3.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn looped_file_repeats() {
        let mut p = AudioPlayer::from_samples(vec![vec![1.0, -1.0]], true);
        let mut out = vec![0.0; 5];
        p.fill(&mut [&mut out]);
        assert_eq!(out, vec![1.0, -1.0, 1.0, -1.0, 1.0]);
    }

    #[test]
    fn load_applies_gain_and_checks_rate() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("in.wav");
        crate::wav::write_wav(&path, 44100, &[vec![0.5, -0.5]]).unwrap();

        let mut p = AudioPlayer::from_file(&path, false, 0.5, 44100, Some(1)).unwrap();
        let mut out = vec![0.0; 2];
        p.fill(&mut [&mut out]);
        assert_eq!(out, vec![0.25, -0.25]);

        assert!(matches!(
            AudioPlayer::from_file(&path, false, 1.0, 48000, None),
            Err(EngineError::SampleRateMismatch { .. })
        ));
    }

    #[test]
    fn noise_is_reproducible() {
        let mut a = SourceStream::noise(7, 1.0);
        let mut b = SourceStream::noise(7, 1.0);
        let mut ba = vec![0.0; 256];
        let mut bb = vec![0.0; 256];
        a.fill(&mut ba);
        b.fill(&mut bb);
        assert_eq!(ba, bb);
        assert!(ba.iter().any(|&x| x != 0.0));
    }

    #[test]
    fn impulse_fires_once() {
        let mut s = SourceStream::Impulse { at: 3, amplitude: 2.0, n: 0 };
        let mut out = vec![0.0; 8];
        s.fill(&mut out);
        assert_eq!(out, vec![0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 0.0]);
    }
}
