//! Mel-frequency cepstral coefficients.
//!
//! The chain per frame is Hamming window, zero-padded radix-2 FFT power
//! spectrum, triangular mel filterbank, natural-log energies, and a DCT-II
//! that drops `c_0`. With the default 20 filters this yields 19
//! coefficients per frame: `c_20` is identically zero because
//! `cos((k - 1/2) pi) = 0` for every `k`.

mod dct;
mod fft;
mod filterbank;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::audio::{self, AudioClip, AudioError};

pub use dct::{dct_cepstrum, DctPlan};
pub use fft::{power_spectrum, Radix2Fft};
pub use filterbank::{apply_filterbank, build_filterbank, hz_to_bin, MelFilterBank, TriangleFilter};

#[derive(Debug, Error)]
pub enum MfccError {
    #[error("negative frequency: {0} Hz")]
    NegativeFrequency(f64),
    #[error("negative mel value: {0}")]
    NegativeMel(f64),
    #[error("frame of {frame_len} samples does not fit FFT size {fft_size}")]
    FrameTooLong { frame_len: usize, fft_size: usize },
    #[error("FFT size {0} is not a power of two")]
    NonPowerOfTwo(usize),
    #[error("degenerate filterbank: edge {edge} collapses onto bin {bin}")]
    DegenerateBank { edge: usize, bin: usize },
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("coefficient count {num_coeffs} outside 1..={} for {num_filters} filters", num_filters.saturating_sub(1))]
    BadCoeffCount { num_coeffs: usize, num_filters: usize },
    #[error("clip sample rate {clip} Hz does not match configured {config} Hz")]
    SampleRateMismatch { clip: u32, config: u32 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Audio(#[from] AudioError),
}

/// `2595 log10(1 + f / 700)`.
pub fn hz_to_mel(f: f64) -> Result<f64, MfccError> {
    if f < 0.0 || f.is_nan() {
        return Err(MfccError::NegativeFrequency(f));
    }
    Ok(2595.0 * (f / 700.0).ln_1p() / std::f64::consts::LN_10)
}

/// `700 (10^(m / 2595) - 1)`, the inverse of [`hz_to_mel`].
pub fn mel_to_hz(m: f64) -> Result<f64, MfccError> {
    if m < 0.0 || m.is_nan() {
        return Err(MfccError::NegativeMel(m));
    }
    Ok(700.0 * (m / 2595.0 * std::f64::consts::LN_10).exp_m1())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MfccConfig {
    pub sample_rate: u32,
    pub fft_size: usize,
    pub num_filters: usize,
    pub f_low: f64,
    pub f_high: f64,
    pub num_coeffs: usize,
    pub log_floor: f64,
}

impl Default for MfccConfig {
    fn default() -> Self {
        Self::for_sample_rate(22050)
    }
}

impl MfccConfig {
    /// Defaults with the upper band edge at Nyquist for `sample_rate`.
    pub fn for_sample_rate(sample_rate: u32) -> Self {
        Self {
            sample_rate,
            fft_size: 1024,
            num_filters: 20,
            f_low: 0.0,
            f_high: f64::from(sample_rate) / 2.0,
            num_coeffs: 19,
            log_floor: 1e-10,
        }
    }

    pub fn validate(&self) -> Result<(), MfccError> {
        let bad = |msg: String| Err(MfccError::InvalidConfig(msg));
        if self.sample_rate == 0 {
            return bad("sample_rate must be positive".into());
        }
        if self.fft_size < 2 || !self.fft_size.is_power_of_two() {
            return Err(MfccError::NonPowerOfTwo(self.fft_size));
        }
        let nyquist = f64::from(self.sample_rate) / 2.0;
        if !(self.f_low >= 0.0 && self.f_low < self.f_high && self.f_high <= nyquist) {
            return bad(format!(
                "need 0 <= f_low < f_high <= {nyquist}, got f_low={} f_high={}",
                self.f_low, self.f_high
            ));
        }
        if self.num_filters < 2 {
            return bad("num_filters must be at least 2".into());
        }
        if self.num_coeffs == 0 || self.num_coeffs >= self.num_filters {
            return Err(MfccError::BadCoeffCount {
                num_coeffs: self.num_coeffs,
                num_filters: self.num_filters,
            });
        }
        if !(self.log_floor > 0.0 && self.log_floor.is_finite()) {
            return bad(format!("log_floor must be positive, got {}", self.log_floor));
        }
        Ok(())
    }
}

/// MFCC settings plus framing; everything needed to turn a clip into
/// acoustic vectors. Serialized as `key = value` lines.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontEndConfig {
    pub mfcc: MfccConfig,
    pub frame_ms: f64,
    pub hop_ms: f64,
}

impl Default for FrontEndConfig {
    fn default() -> Self {
        Self {
            mfcc: MfccConfig::default(),
            frame_ms: audio::DEFAULT_FRAME_MS,
            hop_ms: audio::DEFAULT_HOP_MS,
        }
    }
}

impl FrontEndConfig {
    pub const KEYS: [&'static str; 9] = [
        "sample_rate",
        "fft_size",
        "num_filters",
        "f_low",
        "f_high",
        "num_coeffs",
        "log_floor",
        "frame_ms",
        "hop_ms",
    ];

    /// Ordered `(key, value)` pairs with round-trip exact reals.
    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        let m = &self.mfcc;
        vec![
            ("sample_rate", m.sample_rate.to_string()),
            ("fft_size", m.fft_size.to_string()),
            ("num_filters", m.num_filters.to_string()),
            ("f_low", format!("{:?}", m.f_low)),
            ("f_high", format!("{:?}", m.f_high)),
            ("num_coeffs", m.num_coeffs.to_string()),
            ("log_floor", format!("{:?}", m.log_floor)),
            ("frame_ms", format!("{:?}", self.frame_ms)),
            ("hop_ms", format!("{:?}", self.hop_ms)),
        ]
    }

    /// Applies pairs over the defaults. `f_high` follows `sample_rate` to
    /// Nyquist unless given explicitly.
    pub fn from_pairs<'a, I>(pairs: I) -> Result<Self, MfccError>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T, MfccError> {
            v.parse()
                .map_err(|_| MfccError::InvalidConfig(format!("bad value for {key}: {v:?}")))
        }
        let mut cfg = Self::default();
        let mut f_high = None;
        for (key, value) in pairs {
            let value = value.trim();
            match key.trim() {
                "sample_rate" => cfg.mfcc.sample_rate = num(key, value)?,
                "fft_size" => cfg.mfcc.fft_size = num(key, value)?,
                "num_filters" => cfg.mfcc.num_filters = num(key, value)?,
                "f_low" => cfg.mfcc.f_low = num(key, value)?,
                "f_high" => f_high = Some(num(key, value)?),
                "num_coeffs" => cfg.mfcc.num_coeffs = num(key, value)?,
                "log_floor" => cfg.mfcc.log_floor = num(key, value)?,
                "frame_ms" => cfg.frame_ms = num(key, value)?,
                "hop_ms" => cfg.hop_ms = num(key, value)?,
                other => return Err(MfccError::InvalidConfig(format!("unknown key {other:?}"))),
            }
        }
        cfg.mfcc.f_high = f_high.unwrap_or(f64::from(cfg.mfcc.sample_rate) / 2.0);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), MfccError> {
        self.mfcc.validate()?;
        if !(self.hop_ms > 0.0 && self.frame_ms >= self.hop_ms && self.frame_ms.is_finite()) {
            return Err(MfccError::InvalidConfig(format!(
                "need frame_ms >= hop_ms > 0, got frame_ms={} hop_ms={}",
                self.frame_ms, self.hop_ms
            )));
        }
        let frame_len = audio::ms_to_samples(self.frame_ms, self.mfcc.sample_rate);
        if frame_len < 2 || frame_len > self.mfcc.fft_size {
            return Err(MfccError::FrameTooLong {
                frame_len,
                fft_size: self.mfcc.fft_size,
            });
        }
        if audio::ms_to_samples(self.hop_ms, self.mfcc.sample_rate) == 0 {
            return Err(MfccError::InvalidConfig("hop rounds to zero samples".into()));
        }
        Ok(())
    }

    pub fn frame_len(&self) -> usize {
        audio::ms_to_samples(self.frame_ms, self.mfcc.sample_rate)
    }
}

impl fmt::Display for FrontEndConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.to_pairs() {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

impl FromStr for FrontEndConfig {
    type Err = MfccError;

    /// Parses `key = value` lines; blank lines and `#` comments are ignored.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut pairs = Vec::new();
        for (no, line) in s.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                MfccError::InvalidConfig(format!("line {}: expected key = value", no + 1))
            })?;
            pairs.push((k.trim(), v.trim()));
        }
        Self::from_pairs(pairs)
    }
}

/// One frame's cepstral coefficients `c_1..c_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct AcousticVector(Vec<f64>);

impl AcousticVector {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self(coeffs)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Reusable extractor: FFT plan, filterbank, and DCT basis built once.
#[derive(Debug, Clone)]
pub struct MfccExtractor {
    config: FrontEndConfig,
    fft: Radix2Fft,
    bank: MelFilterBank,
    dct: DctPlan,
}

impl MfccExtractor {
    pub fn new(config: FrontEndConfig) -> Result<Self, MfccError> {
        config.validate()?;
        let fft = Radix2Fft::new(config.mfcc.fft_size)?;
        let bank = build_filterbank(&config.mfcc)?;
        let dct = DctPlan::new(config.mfcc.num_filters, config.mfcc.num_coeffs)?;
        Ok(Self {
            config,
            fft,
            bank,
            dct,
        })
    }

    pub fn config(&self) -> &FrontEndConfig {
        &self.config
    }

    pub fn filterbank(&self) -> &MelFilterBank {
        &self.bank
    }

    /// Acoustic vector of one raw (unwindowed) frame.
    pub fn frame_vector(&self, frame: &[f64]) -> Result<AcousticVector, MfccError> {
        let windowed = audio::apply_window(frame);
        let spectrum = self.fft.power_spectrum(&windowed)?;
        let log_energies = apply_filterbank(&spectrum, &self.bank, self.config.mfcc.log_floor)?;
        self.dct.transform(&log_energies)
    }

    /// One acoustic vector per frame, in frame order.
    pub fn extract(&self, clip: &AudioClip) -> Result<Vec<AcousticVector>, MfccError> {
        if clip.sample_rate() != self.config.mfcc.sample_rate {
            return Err(MfccError::SampleRateMismatch {
                clip: clip.sample_rate(),
                config: self.config.mfcc.sample_rate,
            });
        }
        let frames = audio::frame_signal(clip, self.config.frame_ms, self.config.hop_ms)?;
        frames.frames().iter().map(|f| self.frame_vector(f)).collect()
    }
}

/// Full chain: frame, window, power spectrum, filterbank, DCT.
pub fn mfcc_pipeline(
    clip: &AudioClip,
    config: &MfccConfig,
    frame_ms: f64,
    hop_ms: f64,
) -> Result<Vec<AcousticVector>, MfccError> {
    MfccExtractor::new(FrontEndConfig {
        mfcc: config.clone(),
        frame_ms,
        hop_ms,
    })?
    .extract(clip)
}
