//! Multichannel RIFF/WAV reading and writing. Output is always 32-bit
//! float; input accepts 32-bit float and 16-bit integer PCM.

use std::path::Path;

use thiserror::Error;

use crate::Sample;

#[derive(Debug, Error)]
pub enum WavError {
    #[error("wav i/o failed for {path}: {source}")]
    Io { path: String, source: hound::Error },
    #[error("{path}: unsupported sample format (only float32 and int16 PCM)")]
    UnsupportedFormat { path: String },
    #[error("{path}: no channels")]
    NoChannels { path: String },
}

#[derive(Debug, Clone)]
pub struct WavData {
    pub sample_rate: u32,
    /// Deinterleaved samples, one vector per channel.
    pub channels: Vec<Vec<Sample>>,
}

impl WavData {
    pub fn frames(&self) -> usize {
        self.channels.first().map(|c| c.len()).unwrap_or(0)
    }
}

pub fn read_wav(path: &Path) -> Result<WavData, WavError> {
    let display = path.display().to_string();
    let io = |source| WavError::Io { path: display.clone(), source };
    let mut reader = hound::WavReader::open(path).map_err(io)?;
    let spec = reader.spec();
    if spec.channels == 0 {
        return Err(WavError::NoChannels { path: display });
    }
    let interleaved: Vec<Sample> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .collect::<Result<_, _>>()
            .map_err(|source| WavError::Io { path: display.clone(), source })?,
        (hound::SampleFormat::Int, 16) => reader
            .samples::<i16>()
            .map(|s| s.map(|v| v as f32 / 32768.0))
            .collect::<Result<_, _>>()
            .map_err(|source| WavError::Io { path: display.clone(), source })?,
        _ => return Err(WavError::UnsupportedFormat { path: display }),
    };
    let n_ch = spec.channels as usize;
    let frames = interleaved.len() / n_ch;
    let mut channels = vec![Vec::with_capacity(frames); n_ch];
    for frame in interleaved.chunks_exact(n_ch) {
        for (ch, &s) in channels.iter_mut().zip(frame) {
            ch.push(s);
        }
    }
    Ok(WavData { sample_rate: spec.sample_rate, channels })
}

pub fn write_wav(path: &Path, sample_rate: u32, channels: &[Vec<Sample>]) -> Result<(), WavError> {
    let display = path.display().to_string();
    let io = |source| WavError::Io { path: display.clone(), source };
    if channels.is_empty() {
        return Err(WavError::NoChannels { path: display });
    }
    let frames = channels[0].len();
    debug_assert!(channels.iter().all(|c| c.len() == frames));
    let spec = hound::WavSpec {
        channels: channels.len() as u16,
        sample_rate,
        bits_per_sample: 32,
        sample_format: hound::SampleFormat::Float,
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(io)?;
    for n in 0..frames {
        for ch in channels {
            writer.write_sample(ch[n]).map_err(|source| WavError::Io {
                path: display.clone(),
                source,
            })?;
        }
    }
    writer.finalize().map_err(|source| WavError::Io { path: display, source })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_float32() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rt.wav");
        let channels = vec![
            (0..100).map(|i| (i as f32 * 0.01).sin()).collect::<Vec<_>>(),
            (0..100).map(|i| (i as f32 * 0.02).cos()).collect::<Vec<_>>(),
        ];
        write_wav(&path, 44100, &channels).unwrap();
        let back = read_wav(&path).unwrap();
        assert_eq!(back.sample_rate, 44100);
        assert_eq!(back.channels, channels);
    }

    #[test]
    fn reads_int16() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("i16.wav");
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: 48000,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut writer = hound::WavWriter::create(&path, spec).unwrap();
        for v in [0i16, 16384, -16384, 32767] {
            writer.write_sample(v).unwrap();
        }
        writer.finalize().unwrap();
        let data = read_wav(&path).unwrap();
        assert_eq!(data.channels[0][0], 0.0);
        assert_eq!(data.channels[0][1], 0.5);
        assert_eq!(data.channels[0][2], -0.5);
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            read_wav(Path::new("/nonexistent/nope.wav")),
            Err(WavError::Io { .. })
        ));
    }
}
