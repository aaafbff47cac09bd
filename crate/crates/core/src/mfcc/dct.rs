//! Cepstral DCT-II over log filter energies, `c_n = sum_k L_k cos(n (k - 1/2) pi / K)`.

use std::f64::consts::PI;

use super::{AcousticVector, MfccError};

/// Cosine basis for a fixed filter count, with the phase reduced exactly
/// in integer arithmetic before the `cos` call.
///
/// `n (k - 1/2) pi / K = pi * n (2k - 1) / (2K)`, and `n (2k - 1)` is taken
/// modulo `4K` so every angle lands in `[0, 2 pi)`. This keeps basis rows
/// near `n = K` accurate (they vanish to within a few ulps).
#[derive(Debug, Clone)]
pub struct DctPlan {
    num_filters: usize,
    num_coeffs: usize,
    // row n-1 holds the basis for coefficient n
    basis: Vec<Vec<f64>>,
}

fn basis_value(n: usize, k: usize, num_filters: usize) -> f64 {
    let period = 4 * num_filters;
    let m = (n % period) * ((2 * k - 1) % period) % period;
    (PI * m as f64 / (2 * num_filters) as f64).cos()
}

impl DctPlan {
    pub fn new(num_filters: usize, num_coeffs: usize) -> Result<Self, MfccError> {
        if num_coeffs == 0 || num_coeffs + 1 > num_filters {
            return Err(MfccError::BadCoeffCount {
                num_coeffs,
                num_filters,
            });
        }
        let basis = (1..=num_coeffs)
            .map(|n| (1..=num_filters).map(|k| basis_value(n, k, num_filters)).collect())
            .collect();
        Ok(Self {
            num_filters,
            num_coeffs,
            basis,
        })
    }

    pub fn num_filters(&self) -> usize {
        self.num_filters
    }

    pub fn num_coeffs(&self) -> usize {
        self.num_coeffs
    }

    /// Coefficients `c_1..c_num_coeffs`.
    pub fn transform(&self, log_energies: &[f64]) -> Result<AcousticVector, MfccError> {
        if log_energies.len() != self.num_filters {
            return Err(MfccError::LengthMismatch {
                expected: self.num_filters,
                actual: log_energies.len(),
            });
        }
        let coeffs = self
            .basis
            .iter()
            .map(|row| row.iter().zip(log_energies).map(|(b, l)| b * l).sum())
            .collect();
        Ok(AcousticVector::new(coeffs))
    }

    /// Any single coefficient `c_n`, including the ones never emitted
    /// (`n = 0` and `n >= K`).
    pub fn coefficient(&self, log_energies: &[f64], n: usize) -> f64 {
        log_energies
            .iter()
            .enumerate()
            .map(|(i, l)| l * basis_value(n, i + 1, self.num_filters))
            .sum()
    }
}

/// One-shot cepstrum; `K` is the input length.
pub fn dct_cepstrum(log_energies: &[f64], num_coeffs: usize) -> Result<AcousticVector, MfccError> {
    DctPlan::new(log_energies.len(), num_coeffs)?.transform(log_energies)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_input_cancels() {
        let out = dct_cepstrum(&[-4.2; 20], 19).unwrap();
        assert!(out.coeffs().iter().all(|c| c.abs() < 1e-12));
    }

    #[test]
    fn zero_input() {
        let out = dct_cepstrum(&[0.0; 20], 19).unwrap();
        assert!(out.coeffs().iter().all(|&c| c == 0.0));
    }

    #[test]
    fn coefficient_count_bounds() {
        assert!(matches!(dct_cepstrum(&[0.0; 20], 20), Err(MfccError::BadCoeffCount { .. })));
        assert!(matches!(dct_cepstrum(&[0.0; 20], 0), Err(MfccError::BadCoeffCount { .. })));
        assert_eq!(dct_cepstrum(&[0.0; 20], 5).unwrap().len(), 5);
    }

    #[test]
    fn index_k_vanishes() {
        let plan = DctPlan::new(20, 19).unwrap();
        let input: Vec<f64> = (0..20).map(|i| (i as f64 * 1.7).sin() * 20.0).collect();
        assert!(plan.coefficient(&input, 20).abs() < 1e-12);
    }
}
