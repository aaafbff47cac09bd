use std::fmt;

use super::SvmError;

/// Kernel function and its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec {
    /// `x . z`
    Linear,
    /// `exp(-gamma |x - z|^2)`
    Rbf { gamma: f64 },
    /// `(x . z + coef0)^degree`
    Polynomial { degree: u32, coef0: f64 },
}

impl KernelSpec {
    /// RBF with `gamma = 1 / dim`.
    pub fn default_rbf(dim: usize) -> Self {
        KernelSpec::Rbf {
            gamma: 1.0 / dim.max(1) as f64,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            KernelSpec::Linear => "linear",
            KernelSpec::Rbf { .. } => "rbf",
            KernelSpec::Polynomial { .. } => "polynomial",
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, KernelSpec::Linear)
    }

    pub fn validate(&self) -> Result<(), SvmError> {
        match *self {
            KernelSpec::Linear => Ok(()),
            KernelSpec::Rbf { gamma } if gamma > 0.0 && gamma.is_finite() => Ok(()),
            KernelSpec::Rbf { gamma } => Err(SvmError::InvalidKernel(format!(
                "rbf gamma must be positive, got {gamma}"
            ))),
            KernelSpec::Polynomial { degree, coef0 } if degree >= 1 && coef0.is_finite() => Ok(()),
            KernelSpec::Polynomial { degree, coef0 } => Err(SvmError::InvalidKernel(format!(
                "polynomial needs degree >= 1 and finite coef0, got degree={degree} coef0={coef0}"
            ))),
        }
    }

    /// Kernel value without dimension checks; callers guarantee equal lengths.
    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[f64], z: &[f64]) -> f64 {
        match *self {
            KernelSpec::Linear => dot(x, z),
            KernelSpec::Rbf { gamma } => {
                let d2: f64 = x.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
                (-gamma * d2).exp()
            }
            KernelSpec::Polynomial { degree, coef0 } => {
                (dot(x, z) + coef0).powi(degree as i32)
            }
        }
    }

    pub fn eval(&self, x: &[f64], z: &[f64]) -> Result<f64, SvmError> {
        if x.len() != z.len() {
            return Err(SvmError::DimensionMismatch {
                expected: x.len(),
                actual: z.len(),
            });
        }
        Ok(self.eval_unchecked(x, z))
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelSpec::Linear => write!(f, "linear"),
            KernelSpec::Rbf { gamma } => write!(f, "rbf gamma={gamma:?}"),
            KernelSpec::Polynomial { degree, coef0 } => {
                write!(f, "polynomial degree={degree} coef0={coef0:?}")
            }
        }
    }
}

#[inline]
pub(crate) fn dot(x: &[f64], z: &[f64]) -> f64 {
    x.iter().zip(z).map(|(a, b)| a * b).sum()
}

/// Evaluates `spec` on two vectors of equal dimension.
pub fn kernel_eval(spec: &KernelSpec, x: &[f64], z: &[f64]) -> Result<f64, SvmError> {
    spec.eval(x, z)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        assert_eq!(kernel_eval(&KernelSpec::Linear, &[1.0, 2.0], &[1.0, 2.0]).unwrap(), 5.0);
        let x = [0.3, -1.7, 2.2];
        assert_eq!(kernel_eval(&KernelSpec::Rbf { gamma: 0.7 }, &x, &x).unwrap(), 1.0);
        let poly = KernelSpec::Polynomial { degree: 2, coef0: 1.0 };
        assert_eq!(kernel_eval(&poly, &[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
    }

    #[test]
    fn dimension_mismatch() {
        assert!(matches!(
            kernel_eval(&KernelSpec::Linear, &[1.0], &[1.0, 2.0]),
            Err(SvmError::DimensionMismatch { expected: 1, actual: 2 })
        ));
    }

    #[test]
    fn validation() {
        assert!(KernelSpec::Rbf { gamma: 0.0 }.validate().is_err());
        assert!(KernelSpec::Polynomial { degree: 0, coef0: 1.0 }.validate().is_err());
        assert!(KernelSpec::default_rbf(38).validate().is_ok());
    }
}
