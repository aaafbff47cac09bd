//! Seeded synthetic speaker corpus.
//!
//! Each speaker is a voice profile: a fundamental frequency and two vowel
//! targets given as three formant frequencies. An utterance is a short
//! fricative burst followed by a voiced segment whose formants glide from
//! the first vowel to the second, rendered as a harmonic series shaped by
//! Gaussian formant resonances, plus white noise. Every utterance perturbs
//! pitch, formants, duration, loudness, and noise level.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use voxid::audio::AudioClip;
use voxid::features::SpeakerId;

/// Sample rate of generated clips.
pub const CORPUS_SAMPLE_RATE: u32 = 22050;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoiceProfile {
    pub f0: f64,
    pub start_formants: [f64; 3],
    pub end_formants: [f64; 3],
    pub bandwidth: f64,
}

/// Eight distinct voices.
pub const PROFILES: [VoiceProfile; 8] = [
    VoiceProfile { f0: 105.0, start_formants: [270.0, 2290.0, 3010.0], end_formants: [570.0, 840.0, 2410.0], bandwidth: 90.0 },
    VoiceProfile { f0: 120.0, start_formants: [390.0, 1990.0, 2550.0], end_formants: [440.0, 1020.0, 2240.0], bandwidth: 100.0 },
    VoiceProfile { f0: 135.0, start_formants: [530.0, 1840.0, 2480.0], end_formants: [300.0, 870.0, 2240.0], bandwidth: 110.0 },
    VoiceProfile { f0: 150.0, start_formants: [660.0, 1720.0, 2410.0], end_formants: [730.0, 1090.0, 2440.0], bandwidth: 95.0 },
    VoiceProfile { f0: 190.0, start_formants: [310.0, 2790.0, 3310.0], end_formants: [590.0, 920.0, 2710.0], bandwidth: 120.0 },
    VoiceProfile { f0: 210.0, start_formants: [430.0, 2480.0, 3070.0], end_formants: [470.0, 1160.0, 2680.0], bandwidth: 130.0 },
    VoiceProfile { f0: 230.0, start_formants: [610.0, 2330.0, 2990.0], end_formants: [370.0, 950.0, 2670.0], bandwidth: 125.0 },
    VoiceProfile { f0: 250.0, start_formants: [860.0, 2050.0, 2850.0], end_formants: [850.0, 1220.0, 2810.0], bandwidth: 140.0 },
];

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSpec {
    pub speakers: usize,
    pub utterances_per_speaker: usize,
    pub seed: u64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        Self {
            speakers: 8,
            utterances_per_speaker: 20,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Utterance {
    pub speaker: SpeakerId,
    /// 1-based take number within the speaker.
    pub take: usize,
    pub clip: AudioClip,
}

fn vary(rng: &mut ChaCha8Rng, x: f64, rel: f64) -> f64 {
    x * (1.0 + rng.random_range(-rel..rel))
}

/// Renders one utterance of `profile` from `rng`.
pub fn synthesize(profile: &VoiceProfile, rng: &mut ChaCha8Rng) -> AudioClip {
    let sr = f64::from(CORPUS_SAMPLE_RATE);
    let f0 = vary(rng, profile.f0, 0.05);
    let start: Vec<f64> = profile.start_formants.iter().map(|&f| vary(rng, f, 0.04)).collect();
    let end: Vec<f64> = profile.end_formants.iter().map(|&f| vary(rng, f, 0.04)).collect();
    let bw = vary(rng, profile.bandwidth, 0.1);
    let fric_len = (rng.random_range(0.05..0.09) * sr) as usize;
    let voiced_len = (rng.random_range(0.38..0.62) * sr) as usize;
    let loudness = rng.random_range(0.3..0.8);
    let snr_db = rng.random_range(18.0..30.0);
    let drift = rng.random_range(-0.08..0.08);
    let noise = Normal::new(0.0, 1.0).expect("unit normal");

    let harmonics = ((5000.0 / f0) as usize).max(1);
    let mut phases: Vec<f64> = (0..harmonics).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
    let mut voiced = Vec::with_capacity(voiced_len);
    let mut amps = vec![0.0; harmonics];
    let block = (0.005 * sr) as usize;
    for t in 0..voiced_len {
        let pos = t as f64 / voiced_len as f64;
        let pitch = f0 * (1.0 + drift * pos);
        if t % block == 0 {
            for (h, a) in amps.iter_mut().enumerate() {
                let fh = pitch * (h + 1) as f64;
                let res: f64 = start
                    .iter()
                    .zip(&end)
                    .enumerate()
                    .map(|(j, (s, e))| {
                        let fj = s + (e - s) * pos;
                        let gain = 1.0 / (1.0 + j as f64);
                        gain * (-((fh - fj) / bw).powi(2)).exp()
                    })
                    .sum();
                *a = res / (h + 1) as f64;
            }
        }
        let mut s = 0.0;
        for (h, (ph, a)) in phases.iter_mut().zip(&amps).enumerate() {
            *ph += 2.0 * PI * pitch * (h + 1) as f64 / sr;
            s += a * ph.sin();
        }
        let env = (pos / 0.08).min(1.0) * ((1.0 - pos) / 0.2).min(1.0);
        voiced.push(s * env);
    }

    let peak = voiced.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-12);
    let mut out: Vec<f64> = Vec::with_capacity(fric_len + voiced_len);
    let fric_gain = 0.15 * rng.random_range(0.7..1.3);
    let mut prev = 0.0;
    for t in 0..fric_len {
        let w: f64 = noise.sample(rng);
        // first difference tilts the burst toward high frequencies
        let hp = w - prev;
        prev = w;
        let env = (t as f64 / fric_len as f64 * PI).sin();
        out.push(fric_gain * hp * env);
    }
    out.extend(voiced.iter().map(|v| v / peak));

    let power = out.iter().map(|x| x * x).sum::<f64>() / out.len() as f64;
    let sigma = (power / 10f64.powf(snr_db / 10.0)).sqrt();
    for x in out.iter_mut() {
        *x += sigma * noise.sample(rng);
    }
    let peak = out.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let scale = loudness / peak.max(1e-12);
    let samples = out.into_iter().map(|x| (x * scale).clamp(-1.0, 1.0)).collect();
    AudioClip::new(samples, CORPUS_SAMPLE_RATE).expect("samples are clamped to [-1, 1]")
}

/// Every utterance of the corpus, ordered by speaker then take. Each
/// speaker draws from its own seeded stream, so adding speakers does not
/// change existing ones.
pub fn generate_corpus(spec: &CorpusSpec) -> Vec<Utterance> {
    assert!(spec.speakers <= PROFILES.len(), "at most {} speakers", PROFILES.len());
    let mut out = Vec::with_capacity(spec.speakers * spec.utterances_per_speaker);
    for (i, profile) in PROFILES.iter().take(spec.speakers).enumerate() {
        let id = SpeakerId::new(i as u32 + 1).expect("ids start at 1");
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(i as u64 + 1)));
        for take in 1..=spec.utterances_per_speaker {
            out.push(Utterance {
                speaker: id,
                take,
                clip: synthesize(profile, &mut rng),
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_bounded() {
        let spec = CorpusSpec {
            speakers: 2,
            utterances_per_speaker: 2,
            seed: 7,
        };
        let a = generate_corpus(&spec);
        let b = generate_corpus(&spec);
        assert_eq!(a.len(), 4);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.clip.samples(), y.clip.samples());
            assert!(x.clip.samples().iter().all(|s| s.abs() <= 1.0));
            let d = x.clip.duration_secs();
            assert!((0.4..0.75).contains(&d), "{d}");
        }
        assert_ne!(a[0].clip.samples(), a[1].clip.samples());
        assert_eq!(a[2].speaker.get(), 2);
    }
}
