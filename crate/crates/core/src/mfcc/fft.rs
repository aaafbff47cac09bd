//! In-place iterative radix-2 FFT and the one-sided power spectrum.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::MfccError;

/// Precomputed twiddles and bit-reversal table for one power-of-two size.
#[derive(Debug, Clone)]
pub struct Radix2Fft {
    size: usize,
    twiddles: Vec<Complex64>,
    bitrev: Vec<usize>,
}

impl Radix2Fft {
    pub fn new(size: usize) -> Result<Self, MfccError> {
        if size == 0 || !size.is_power_of_two() {
            return Err(MfccError::NonPowerOfTwo(size));
        }
        let bits = size.trailing_zeros();
        let bitrev = (0..size)
            .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (usize::BITS - bits) })
            .collect();
        // Each twiddle is evaluated directly rather than by recurrence so the
        // error does not grow with the index.
        let twiddles = (0..size / 2)
            .map(|k| Complex64::from_polar(1.0, -2.0 * PI * k as f64 / size as f64))
            .collect();
        Ok(Self {
            size,
            twiddles,
            bitrev,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Forward transform, `X[k] = sum_n x[n] e^{-2 pi i k n / N}`.
    pub fn process(&self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.size, "buffer length must equal FFT size");
        for i in 0..self.size {
            let j = self.bitrev[i];
            if i < j {
                buf.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= self.size {
            let half = len / 2;
            let stride = self.size / len;
            for start in (0..self.size).step_by(len) {
                for k in 0..half {
                    let w = self.twiddles[k * stride];
                    let a = buf[start + k];
                    let b = buf[start + k + half] * w;
                    buf[start + k] = a + b;
                    buf[start + k + half] = a - b;
                }
            }
            len <<= 1;
        }
    }

    /// `|X[k]|^2` for `k = 0..=N/2` of the zero-padded real frame.
    pub fn power_spectrum(&self, frame: &[f64]) -> Result<Vec<f64>, MfccError> {
        if frame.len() > self.size {
            return Err(MfccError::FrameTooLong {
                frame_len: frame.len(),
                fft_size: self.size,
            });
        }
        let mut buf = vec![Complex64::new(0.0, 0.0); self.size];
        for (slot, &x) in buf.iter_mut().zip(frame) {
            slot.re = x;
        }
        self.process(&mut buf);
        Ok(buf[..=self.size / 2].iter().map(|c| c.norm_sqr()).collect())
    }
}

/// One-shot power spectrum; builds a throwaway plan.
pub fn power_spectrum(windowed_frame: &[f64], fft_size: usize) -> Result<Vec<f64>, MfccError> {
    Radix2Fft::new(fft_size)?.power_spectrum(windowed_frame)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn size_one_and_two() {
        let fft = Radix2Fft::new(1).unwrap();
        let mut b = vec![Complex64::new(3.0, 0.0)];
        fft.process(&mut b);
        assert_eq!(b[0], Complex64::new(3.0, 0.0));

        let fft = Radix2Fft::new(2).unwrap();
        let mut b = vec![Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0)];
        fft.process(&mut b);
        assert_eq!(b, vec![Complex64::new(3.0, 0.0), Complex64::new(-1.0, 0.0)]);
    }

    #[test]
    fn rejects_non_power_of_two() {
        assert!(matches!(Radix2Fft::new(1000), Err(MfccError::NonPowerOfTwo(1000))));
        assert!(matches!(Radix2Fft::new(0), Err(MfccError::NonPowerOfTwo(0))));
    }

    #[test]
    fn rejects_long_frame() {
        assert!(matches!(
            power_spectrum(&[0.0; 9], 8),
            Err(MfccError::FrameTooLong { frame_len: 9, fft_size: 8 })
        ));
    }

    #[test]
    fn zero_frame_zero_spectrum() {
        let p = power_spectrum(&[0.0; 662], 1024).unwrap();
        assert_eq!(p.len(), 513);
        assert!(p.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn impulse_is_flat() {
        let mut x = vec![0.0; 16];
        x[0] = 1.0;
        let p = power_spectrum(&x, 16).unwrap();
        assert!(p.iter().all(|&v| (v - 1.0).abs() < 1e-15));
    }
}
