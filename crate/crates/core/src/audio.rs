//! PCM WAV ingestion and short-time framing.
//!
//! Only little-endian RIFF/WAVE with integer PCM (format tag 1, or
//! `WAVE_FORMAT_EXTENSIBLE` wrapping PCM) is read. Multi-channel files are
//! averaged to mono, and samples are scaled by the bit-depth maximum so that
//! 16-bit `16384` becomes `0.5`. No resampling happens here.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

/// Default analysis frame length in milliseconds.
pub const DEFAULT_FRAME_MS: f64 = 30.0;
/// Default hop between frame starts in milliseconds.
pub const DEFAULT_HOP_MS: f64 = 10.0;

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("missing file: {0}")]
    MissingFile(PathBuf),
    #[error("i/o error reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("not a RIFF/WAVE container")]
    NotRiffWave,
    #[error("unsupported encoding: format tag {0:#06x} is not integer PCM")]
    UnsupportedEncoding(u16),
    #[error("unsupported bit depth: {0}")]
    UnsupportedBitDepth(u16),
    #[error("truncated data: {0}")]
    TruncatedData(String),
    #[error("clip too short: {len} samples, frame needs {frame_len}")]
    ClipTooShort { len: usize, frame_len: usize },
    #[error("invalid framing parameters: {0}")]
    InvalidFraming(String),
    #[error("invalid clip: {0}")]
    InvalidClip(String),
}

/// A mono utterance with amplitudes normalized to `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    samples: Vec<f64>,
    sample_rate: u32,
    source_path: Option<PathBuf>,
}

impl AudioClip {
    /// Builds a clip, rejecting out-of-range or non-finite samples and a zero rate.
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self, AudioError> {
        if sample_rate == 0 {
            return Err(AudioError::InvalidClip("sample rate must be positive".into()));
        }
        if let Some((i, s)) = samples
            .iter()
            .enumerate()
            .find(|(_, s)| !s.is_finite() || s.abs() > 1.0)
        {
            return Err(AudioError::InvalidClip(format!(
                "sample {i} = {s} outside [-1, 1]"
            )));
        }
        Ok(Self {
            samples,
            sample_rate,
            source_path: None,
        })
    }

    pub fn with_source(mut self, path: impl Into<PathBuf>) -> Self {
        self.source_path = Some(path.into());
        self
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn source_path(&self) -> Option<&Path> {
        self.source_path.as_deref()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate)
    }
}

/// Equal-length overlapping frames cut from one clip.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    frames: Vec<Vec<f64>>,
    frame_len: usize,
    hop_len: usize,
    sample_rate: u32,
}

impl FrameSequence {
    pub fn frames(&self) -> &[Vec<f64>] {
        &self.frames
    }

    pub fn frame_len(&self) -> usize {
        self.frame_len
    }

    pub fn hop_len(&self) -> usize {
        self.hop_len
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn into_frames(self) -> Vec<Vec<f64>> {
        self.frames
    }
}

/// Converts a duration in milliseconds to a whole number of samples
/// (round half away from zero, so 30 ms at 22050 Hz is 662 samples).
pub fn ms_to_samples(ms: f64, sample_rate: u32) -> usize {
    (ms * f64::from(sample_rate) / 1000.0).round() as usize
}

/// Number of whole frames that fit in `n` samples. Zero when `n < frame_len`.
pub fn frame_count(n: usize, frame_len: usize, hop_len: usize) -> usize {
    if n < frame_len || hop_len == 0 {
        0
    } else {
        (n - frame_len) / hop_len + 1
    }
}

/// Reads a WAV file into a normalized mono clip.
pub fn load_wav(path: impl AsRef<Path>) -> Result<AudioClip, AudioError> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(AudioError::MissingFile(path.to_path_buf()));
    }
    let bytes = fs::read(path).map_err(|source| AudioError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(decode_wav(&bytes)?.with_source(path))
}

const WAVE_FORMAT_PCM: u16 = 0x0001;
const WAVE_FORMAT_EXTENSIBLE: u16 = 0xFFFE;

struct FmtChunk {
    channels: u16,
    sample_rate: u32,
    block_align: u16,
    bits_per_sample: u16,
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

fn parse_fmt(body: &[u8]) -> Result<FmtChunk, AudioError> {
    if body.len() < 16 {
        return Err(AudioError::TruncatedData("fmt chunk shorter than 16 bytes".into()));
    }
    let mut tag = u16_at(body, 0);
    if tag == WAVE_FORMAT_EXTENSIBLE {
        // cbSize(2) validBits(2) channelMask(4) subformat GUID(16); the GUID's
        // first two bytes carry the real format tag.
        if body.len() < 40 {
            return Err(AudioError::TruncatedData("extensible fmt chunk too short".into()));
        }
        tag = u16_at(body, 24);
    }
    if tag != WAVE_FORMAT_PCM {
        return Err(AudioError::UnsupportedEncoding(tag));
    }
    let fmt = FmtChunk {
        channels: u16_at(body, 2),
        sample_rate: u32_at(body, 4),
        block_align: u16_at(body, 12),
        bits_per_sample: u16_at(body, 14),
    };
    if !matches!(fmt.bits_per_sample, 8 | 16 | 24 | 32) {
        return Err(AudioError::UnsupportedBitDepth(fmt.bits_per_sample));
    }
    if fmt.channels == 0 || fmt.sample_rate == 0 {
        return Err(AudioError::InvalidClip(
            "header declares zero channels or zero sample rate".into(),
        ));
    }
    let min_align = usize::from(fmt.channels) * usize::from(fmt.bits_per_sample / 8);
    if usize::from(fmt.block_align) < min_align {
        return Err(AudioError::InvalidClip(format!(
            "block align {} smaller than {min_align}",
            fmt.block_align
        )));
    }
    Ok(fmt)
}

/// Decodes an in-memory RIFF/WAVE byte stream.
pub fn decode_wav(bytes: &[u8]) -> Result<AudioClip, AudioError> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(AudioError::NotRiffWave);
    }
    let mut pos = 12;
    let mut fmt: Option<FmtChunk> = None;
    let mut data: Option<&[u8]> = None;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32_at(bytes, pos + 4) as usize;
        let body_start = pos + 8;
        let available = bytes.len() - body_start;
        match id {
            b"fmt " => {
                if size > available {
                    return Err(AudioError::TruncatedData("fmt chunk runs past end of file".into()));
                }
                fmt = Some(parse_fmt(&bytes[body_start..body_start + size])?);
            }
            b"data" => {
                if size > available {
                    return Err(AudioError::TruncatedData(format!(
                        "data chunk declares {size} bytes, {available} present"
                    )));
                }
                data = Some(&bytes[body_start..body_start + size]);
                break;
            }
            _ => {}
        }
        // chunks are word aligned
        pos = body_start.saturating_add(size).saturating_add(size & 1);
    }
    let fmt = fmt.ok_or(AudioError::NotRiffWave)?;
    let data = data.ok_or_else(|| AudioError::TruncatedData("no data chunk".into()))?;

    let channels = usize::from(fmt.channels);
    let width = usize::from(fmt.bits_per_sample / 8);
    let block = usize::from(fmt.block_align);
    if data.len() % block != 0 {
        return Err(AudioError::TruncatedData(format!(
            "data length {} is not a multiple of block size {block}",
            data.len()
        )));
    }
    let full_scale = match fmt.bits_per_sample {
        8 => 128.0,
        16 => 32768.0,
        24 => 8_388_608.0,
        _ => 2_147_483_648.0,
    };
    let samples = data
        .chunks_exact(block)
        .map(|frame| {
            let sum: f64 = (0..channels)
                .map(|c| decode_sample(&frame[c * width..(c + 1) * width]))
                .sum();
            (sum / channels as f64 / full_scale).clamp(-1.0, 1.0)
        })
        .collect();
    AudioClip::new(samples, fmt.sample_rate)
}

fn decode_sample(b: &[u8]) -> f64 {
    match b.len() {
        // 8-bit PCM is unsigned with a 128 offset
        1 => f64::from(b[0]) - 128.0,
        2 => f64::from(i16::from_le_bytes([b[0], b[1]])),
        3 => f64::from(i32::from_le_bytes([0, b[0], b[1], b[2]]) >> 8),
        _ => f64::from(i32::from_le_bytes([b[0], b[1], b[2], b[3]])),
    }
}

/// Encodes a clip as 16-bit mono PCM. Used by the corpus generator and tests.
pub fn encode_wav_pcm16(clip: &AudioClip) -> Vec<u8> {
    let data_len = clip.len() * 2;
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&((36 + data_len) as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&WAVE_FORMAT_PCM.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&clip.sample_rate().to_le_bytes());
    out.extend_from_slice(&(clip.sample_rate() * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for &s in clip.samples() {
        let q = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        out.extend_from_slice(&q.to_le_bytes());
    }
    out
}

/// Writes a clip to disk as 16-bit mono PCM.
pub fn write_wav_pcm16(path: impl AsRef<Path>, clip: &AudioClip) -> Result<(), AudioError> {
    let path = path.as_ref();
    fs::write(path, encode_wav_pcm16(clip)).map_err(|source| AudioError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Cuts a clip into overlapping frames; trailing samples that do not fill a
/// whole frame are dropped.
pub fn frame_signal(clip: &AudioClip, frame_ms: f64, hop_ms: f64) -> Result<FrameSequence, AudioError> {
    if !(hop_ms > 0.0 && frame_ms >= hop_ms && frame_ms.is_finite()) {
        return Err(AudioError::InvalidFraming(format!(
            "need frame_ms >= hop_ms > 0, got frame_ms={frame_ms} hop_ms={hop_ms}"
        )));
    }
    let frame_len = ms_to_samples(frame_ms, clip.sample_rate());
    let hop_len = ms_to_samples(hop_ms, clip.sample_rate());
    frame_samples(clip.samples(), frame_len, hop_len, clip.sample_rate())
}

/// Framing by explicit sample counts.
pub fn frame_samples(
    samples: &[f64],
    frame_len: usize,
    hop_len: usize,
    sample_rate: u32,
) -> Result<FrameSequence, AudioError> {
    if hop_len == 0 || hop_len > frame_len {
        return Err(AudioError::InvalidFraming(format!(
            "need 0 < hop_len <= frame_len, got hop_len={hop_len} frame_len={frame_len}"
        )));
    }
    if samples.len() < frame_len {
        return Err(AudioError::ClipTooShort {
            len: samples.len(),
            frame_len,
        });
    }
    let count = frame_count(samples.len(), frame_len, hop_len);
    let frames = (0..count)
        .map(|i| samples[i * hop_len..i * hop_len + frame_len].to_vec())
        .collect();
    Ok(FrameSequence {
        frames,
        frame_len,
        hop_len,
        sample_rate,
    })
}

/// Hamming coefficient `0.54 - 0.46 cos(2 pi i / (L - 1))` for index `i` of `len`.
pub fn hamming(i: usize, len: usize) -> f64 {
    0.54 - 0.46 * (2.0 * PI * i as f64 / (len - 1) as f64).cos()
}

/// Multiplies a frame by the symmetric Hamming window. Requires `frame.len() >= 2`.
pub fn apply_window(frame: &[f64]) -> Vec<f64> {
    let len = frame.len();
    debug_assert!(len >= 2, "window needs at least two samples");
    frame
        .iter()
        .enumerate()
        .map(|(i, &x)| x * hamming(i, len))
        .collect()
}
