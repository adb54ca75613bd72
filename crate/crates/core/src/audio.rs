//! Mono PCM waveform algebra and the canonical 16-bit WAV codec.

use std::io::Write;
use std::path::Path;

use thiserror::Error;

pub const DEFAULT_SAMPLE_RATE: u32 = 16_000;

const HEADER_LEN: usize = 44;

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("malformed WAV: {0}")]
    MalformedWav(String),
    #[error("unsupported WAV format (format tag {format_tag}, {channels} channels, {bits_per_sample} bits); only 16-bit PCM mono is accepted")]
    UnsupportedFormat { format_tag: u16, channels: u16, bits_per_sample: u16 },
    #[error("sample rate mismatch: expected {expected} Hz, found {found} Hz")]
    RateMismatch { expected: u32, found: u32 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A mono waveform. Samples are nominally in `[-1.0, 1.0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    sample_rate: u32,
    samples: Vec<f64>,
}

impl AudioBuffer {
    /// # Panics
    /// If `sample_rate` is zero.
    pub fn new(sample_rate: u32, samples: Vec<f64>) -> Self {
        assert!(sample_rate > 0, "sample rate must be positive");
        AudioBuffer { sample_rate, samples }
    }

    pub fn empty(sample_rate: u32) -> Self {
        Self::new(sample_rate, Vec::new())
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_ms(&self) -> f64 {
        self.samples.len() as f64 * 1000.0 / self.sample_rate as f64
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, s| m.max(s.abs()))
    }

    /// Appends `other` in place. Rates must match.
    pub fn append(&mut self, other: &AudioBuffer) -> Result<(), AudioError> {
        if other.sample_rate != self.sample_rate {
            return Err(AudioError::RateMismatch { expected: self.sample_rate, found: other.sample_rate });
        }
        self.samples.extend_from_slice(&other.samples);
        Ok(())
    }
}

/// Converts a duration to a sample count, rounding half away from zero.
pub fn samples_for_ms(duration_ms: f64, sample_rate: u32) -> usize {
    (duration_ms * sample_rate as f64 / 1000.0).round() as usize
}

fn malformed(msg: impl Into<String>) -> AudioError {
    AudioError::MalformedWav(msg.into())
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

/// Decodes a RIFF/WAVE file holding 16-bit little-endian mono PCM.
///
/// Chunks other than `fmt ` and `data` are skipped.
pub fn decode_wav(bytes: &[u8]) -> Result<AudioBuffer, AudioError> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(malformed("missing RIFF/WAVE header"));
    }
    let mut pos = 12;
    let mut format: Option<(u16, u16, u32, u16)> = None;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32_at(bytes, pos + 4) as usize;
        let body = pos + 8;
        let end = body
            .checked_add(size)
            .filter(|&e| e <= bytes.len())
            .ok_or_else(|| malformed(format!("chunk {:?} overruns the file", String::from_utf8_lossy(id))))?;
        match id {
            b"fmt " => {
                if size < 16 {
                    return Err(malformed("fmt chunk shorter than 16 bytes"));
                }
                let format_tag = u16_at(bytes, body);
                let channels = u16_at(bytes, body + 2);
                let rate = u32_at(bytes, body + 4);
                let bits = u16_at(bytes, body + 14);
                format = Some((format_tag, channels, rate, bits));
            }
            b"data" => {
                let (format_tag, channels, rate, bits) =
                    format.ok_or_else(|| malformed("data chunk before fmt chunk"))?;
                if format_tag != 1 || channels != 1 || bits != 16 {
                    return Err(AudioError::UnsupportedFormat { format_tag, channels, bits_per_sample: bits });
                }
                if rate == 0 {
                    return Err(malformed("sample rate is zero"));
                }
                if !size.is_multiple_of(2) {
                    return Err(malformed("data chunk has an odd byte count"));
                }
                let samples = bytes[body..end]
                    .chunks_exact(2)
                    .map(|p| i16::from_le_bytes([p[0], p[1]]) as f64 / 32768.0)
                    .collect();
                return Ok(AudioBuffer::new(rate, samples));
            }
            _ => {}
        }
        // chunks are word aligned
        pos = end + (size & 1);
    }
    Err(malformed(if format.is_some() { "no data chunk" } else { "no fmt chunk" }))
}

/// Quantizes one sample: clamp to [-1, 1], scale by 32768, round half away
/// from zero, saturate to the i16 range. 1.0 therefore maps to 0x7FFF.
pub fn quantize(sample: f64) -> i16 {
    let s = if sample.is_nan() { 0.0 } else { sample.clamp(-1.0, 1.0) };
    (s * 32768.0).round().clamp(i16::MIN as f64, i16::MAX as f64) as i16
}

/// Encodes a canonical 44-byte-header PCM16 mono WAV.
pub fn encode_wav(buf: &AudioBuffer) -> Vec<u8> {
    let data_len = buf.samples.len() * 2;
    let mut out = Vec::with_capacity(HEADER_LEN + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&((36 + data_len) as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&buf.sample_rate.to_le_bytes());
    out.extend_from_slice(&(buf.sample_rate * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for &s in &buf.samples {
        out.extend_from_slice(&quantize(s).to_le_bytes());
    }
    out
}

pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioBuffer, AudioError> {
    decode_wav(&std::fs::read(path)?)
}

/// Writes `buf` to `path` through a temporary file and rename.
pub fn write_wav(path: impl AsRef<Path>, buf: &AudioBuffer) -> Result<(), AudioError> {
    crate::fsutil::write_atomic(path.as_ref(), &encode_wav(buf))?;
    Ok(())
}

/// Linear interpolation of `x` at fractional index `t`, clamped to the last sample.
fn lerp_at(x: &[f64], t: f64) -> f64 {
    let last = x.len() - 1;
    let i = (t.floor() as usize).min(last);
    let frac = t - i as f64;
    if i == last || frac <= 0.0 {
        return x[i];
    }
    x[i] + (x[i + 1] - x[i]) * frac
}

/// Linear-interpolation resampling to `target_rate`.
///
/// Output length is `round(len * target / source)`. Matching rates return an
/// unchanged copy.
pub fn resample(buf: &AudioBuffer, target_rate: u32) -> AudioBuffer {
    assert!(target_rate > 0, "target rate must be positive");
    if target_rate == buf.sample_rate {
        return buf.clone();
    }
    let src = buf.sample_rate as f64;
    let dst = target_rate as f64;
    let out_len = (buf.len() as f64 * dst / src).round() as usize;
    if buf.is_empty() {
        return AudioBuffer::empty(target_rate);
    }
    let samples = (0..out_len).map(|i| lerp_at(&buf.samples, i as f64 * src / dst)).collect();
    AudioBuffer::new(target_rate, samples)
}

/// Slows the waveform down by `factor` (>= 1) on a stretched time axis.
/// Pitch drops by the same factor.
pub fn time_stretch(buf: &AudioBuffer, factor: f64) -> AudioBuffer {
    assert!(factor >= 1.0, "stretch factor must be >= 1.0, got {factor}");
    if factor == 1.0 || buf.is_empty() {
        return buf.clone();
    }
    let out_len = (buf.len() as f64 * factor).round() as usize;
    let samples = (0..out_len).map(|i| lerp_at(&buf.samples, i as f64 / factor)).collect();
    AudioBuffer::new(buf.sample_rate, samples)
}

pub fn silence(duration_ms: f64, sample_rate: u32) -> AudioBuffer {
    assert!(duration_ms >= 0.0, "negative silence duration");
    AudioBuffer::new(sample_rate, vec![0.0; samples_for_ms(duration_ms, sample_rate)])
}

/// Joins buffers end to end. An empty list yields an empty buffer at
/// [`DEFAULT_SAMPLE_RATE`].
pub fn concat(buffers: &[AudioBuffer]) -> Result<AudioBuffer, AudioError> {
    let Some(first) = buffers.first() else {
        return Ok(AudioBuffer::empty(DEFAULT_SAMPLE_RATE));
    };
    let mut out = AudioBuffer {
        sample_rate: first.sample_rate,
        samples: Vec::with_capacity(buffers.iter().map(AudioBuffer::len).sum()),
    };
    for b in buffers {
        out.append(b)?;
    }
    Ok(out)
}

pub const DEFAULT_PEAK: f64 = 0.89;

/// Scales so the largest magnitude equals `target_peak`. Silent buffers pass through.
pub fn normalize_peak(buf: &AudioBuffer, target_peak: f64) -> AudioBuffer {
    assert!(target_peak > 0.0 && target_peak <= 1.0, "target peak must be in (0, 1]");
    let peak = buf.peak();
    if peak == 0.0 {
        return buf.clone();
    }
    let gain = target_peak / peak;
    AudioBuffer::new(buf.sample_rate, buf.samples.iter().map(|s| s * gain).collect())
}

/// Writes an encoded buffer to any sink.
pub fn write_wav_to<W: Write>(mut sink: W, buf: &AudioBuffer) -> std::io::Result<()> {
    sink.write_all(&encode_wav(buf))
}
