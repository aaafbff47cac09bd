//! Triangular filters spaced evenly on the mel axis.

use super::{hz_to_mel, mel_to_hz, MfccConfig, MfccError};

/// One triangular filter stored densely over its contiguous bin support.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleFilter {
    /// First bin of the support (weight 0 there).
    pub start_bin: usize,
    /// Bin with weight exactly 1.
    pub peak_bin: usize,
    /// Weights for bins `start_bin..start_bin + weights.len()`.
    pub weights: Vec<f64>,
    /// Nominal center frequency in Hz (before snapping to a bin).
    pub center_hz: f64,
}

impl TriangleFilter {
    pub fn end_bin(&self) -> usize {
        self.start_bin + self.weights.len() - 1
    }

    /// Weight at an arbitrary bin, zero outside the support.
    pub fn weight(&self, bin: usize) -> f64 {
        bin.checked_sub(self.start_bin)
            .and_then(|off| self.weights.get(off))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Non-negative filter energy `sum weight * power` over the support.
    pub fn energy(&self, spectrum: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(&spectrum[self.start_bin..=self.end_bin()])
            .map(|(w, p)| w * p)
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MelFilterBank {
    filters: Vec<TriangleFilter>,
    bin_count: usize,
    config: MfccConfig,
}

impl MelFilterBank {
    pub fn filters(&self) -> &[TriangleFilter] {
        &self.filters
    }

    pub fn bin_count(&self) -> usize {
        self.bin_count
    }

    pub fn config(&self) -> &MfccConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.filters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.filters.is_empty()
    }

    pub fn center_frequencies(&self) -> Vec<f64> {
        self.filters.iter().map(|f| f.center_hz).collect()
    }
}

/// Nearest FFT bin for a frequency.
pub fn hz_to_bin(hz: f64, fft_size: usize, sample_rate: u32) -> usize {
    (hz * fft_size as f64 / f64::from(sample_rate)).round() as usize
}

/// Builds `K` triangles over `K + 2` mel-equispaced edges. Filter `k` rises
/// from edge `k` to edge `k + 1` (weight 1) and falls to edge `k + 2`, with
/// the edges snapped to FFT bins.
pub fn build_filterbank(config: &MfccConfig) -> Result<MelFilterBank, MfccError> {
    config.validate()?;
    let k = config.num_filters;
    let mel_lo = hz_to_mel(config.f_low)?;
    let mel_hi = hz_to_mel(config.f_high)?;
    let step = (mel_hi - mel_lo) / (k + 1) as f64;
    let edges_hz: Vec<f64> = (0..k + 2)
        .map(|i| {
            // pin the last edge so rounding cannot push it past f_high
            if i == k + 1 {
                Ok(config.f_high)
            } else {
                mel_to_hz(mel_lo + step * i as f64)
            }
        })
        .collect::<Result<_, _>>()?;
    let bins: Vec<usize> = edges_hz
        .iter()
        .map(|&f| hz_to_bin(f, config.fft_size, config.sample_rate))
        .collect();
    if let Some(i) = bins.windows(2).position(|w| w[0] >= w[1]) {
        return Err(MfccError::DegenerateBank {
            edge: i + 1,
            bin: bins[i + 1],
        });
    }

    let filters = (0..k)
        .map(|f| {
            let (lo, mid, hi) = (bins[f], bins[f + 1], bins[f + 2]);
            let rise = (mid - lo) as f64;
            let fall = (hi - mid) as f64;
            let weights = (lo..=hi)
                .map(|b| {
                    if b <= mid {
                        (b - lo) as f64 / rise
                    } else {
                        (hi - b) as f64 / fall
                    }
                })
                .collect();
            TriangleFilter {
                start_bin: lo,
                peak_bin: mid,
                weights,
                center_hz: edges_hz[f + 1],
            }
        })
        .collect();

    Ok(MelFilterBank {
        filters,
        bin_count: config.fft_size / 2 + 1,
        config: config.clone(),
    })
}

/// Natural-log filter energies, `ln(max(S_k, log_floor))`.
pub fn apply_filterbank(
    spectrum: &[f64],
    bank: &MelFilterBank,
    log_floor: f64,
) -> Result<Vec<f64>, MfccError> {
    if spectrum.len() != bank.bin_count() {
        return Err(MfccError::LengthMismatch {
            expected: bank.bin_count(),
            actual: spectrum.len(),
        });
    }
    Ok(bank
        .filters()
        .iter()
        .map(|f| f.energy(spectrum).max(log_floor).ln())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_bank() -> MelFilterBank {
        build_filterbank(&MfccConfig::default()).unwrap()
    }

    #[test]
    fn twenty_increasing_filters() {
        let bank = default_bank();
        assert_eq!(bank.len(), 20);
        assert_eq!(bank.bin_count(), 513);
        let centers = bank.center_frequencies();
        assert!(centers.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn constant_mel_spacing() {
        let bank = default_bank();
        let mels: Vec<f64> = bank
            .center_frequencies()
            .iter()
            .map(|&f| hz_to_mel(f).unwrap())
            .collect();
        let gap = mels[1] - mels[0];
        for w in mels.windows(2) {
            assert!((w[1] - w[0] - gap).abs() < 1e-9);
        }
    }

    #[test]
    fn top_filter_reaches_nyquist() {
        let bank = default_bank();
        assert_eq!(bank.filters().last().unwrap().end_bin(), 512);
        assert_eq!(bank.filters()[0].start_bin, 0);
    }

    #[test]
    fn peaks_are_one_and_weights_bounded() {
        for f in default_bank().filters() {
            assert_eq!(f.weight(f.peak_bin), 1.0);
            assert!(f.weights.iter().all(|&w| (0.0..=1.0).contains(&w)));
            assert_eq!(f.weights[0], 0.0);
            assert_eq!(*f.weights.last().unwrap(), 0.0);
        }
    }

    #[test]
    fn degenerate_bank_detected() {
        let cfg = MfccConfig {
            fft_size: 64,
            num_filters: 40,
            num_coeffs: 12,
            ..MfccConfig::default()
        };
        assert!(matches!(build_filterbank(&cfg), Err(MfccError::DegenerateBank { .. })));
    }

    #[test]
    fn zero_spectrum_hits_floor() {
        let bank = default_bank();
        let out = apply_filterbank(&vec![0.0; 513], &bank, 1e-10).unwrap();
        assert!(out.iter().all(|&v| v == 1e-10f64.ln()));
    }

    #[test]
    fn flat_spectrum_gives_log_weight_sum() {
        let bank = default_bank();
        let out = apply_filterbank(&vec![1.0; 513], &bank, 1e-10).unwrap();
        for (o, f) in out.iter().zip(bank.filters()) {
            assert!((o - f.weight_sum().ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn delta_at_peak_selects_one_filter() {
        let bank = default_bank();
        let target = 7;
        let peak = bank.filters()[target].peak_bin;
        let mut spec = vec![0.0; 513];
        spec[peak] = 1.0;
        let out = apply_filterbank(&spec, &bank, 1e-10).unwrap();
        for (k, v) in out.iter().enumerate() {
            if k == target {
                assert_eq!(*v, 0.0);
            } else {
                assert_eq!(*v, 1e-10f64.ln());
            }
        }
    }

    #[test]
    fn length_mismatch() {
        let bank = default_bank();
        assert!(matches!(
            apply_filterbank(&[0.0; 10], &bank, 1e-10),
            Err(MfccError::LengthMismatch { expected: 513, actual: 10 })
        ));
    }
}
