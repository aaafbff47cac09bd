use super::kernel::dot;
use super::{KernelSpec, SvmError};

/// How a model was produced.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingMeta {
    pub solver: String,
    /// Successful two-multiplier steps.
    pub iterations: u64,
    /// Sub-problems solved (1 for plain SMO).
    pub outer_iterations: u64,
    pub wall_seconds: f64,
    /// Stopped at the iteration cap before meeting the KKT tolerance.
    pub truncated: bool,
    pub dual_objective: f64,
}

impl Default for TrainingMeta {
    fn default() -> Self {
        Self {
            solver: "unknown".into(),
            iterations: 0,
            outer_iterations: 0,
            wall_seconds: 0.0,
            truncated: false,
            dual_objective: 0.0,
        }
    }
}

/// A trained binary classifier: `f(x) = sum coeff_i K(sv_i, x) + bias`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    support_vectors: Vec<Vec<f64>>,
    coeffs: Vec<f64>,
    bias: f64,
    kernel: KernelSpec,
    c: f64,
    dim: usize,
    weights: Option<Vec<f64>>,
    pub meta: TrainingMeta,
}

impl SvmModel {
    /// Assembles a model, checking that every coefficient satisfies
    /// `0 < |coeff| <= C` and that all support vectors share a dimension.
    pub fn from_parts(
        support_vectors: Vec<Vec<f64>>,
        coeffs: Vec<f64>,
        bias: f64,
        kernel: KernelSpec,
        c: f64,
        meta: TrainingMeta,
    ) -> Result<Self, SvmError> {
        if support_vectors.len() != coeffs.len() {
            return Err(SvmError::InvalidModel(format!(
                "{} support vectors but {} coefficients",
                support_vectors.len(),
                coeffs.len()
            )));
        }
        if support_vectors.is_empty() {
            return Err(SvmError::InvalidModel("model has no support vectors".into()));
        }
        kernel.validate()?;
        if !(c > 0.0 && c.is_finite()) || !bias.is_finite() {
            return Err(SvmError::InvalidModel(format!("bad C ({c}) or bias ({bias})")));
        }
        if let Some(bad) = coeffs.iter().find(|a| !(a.abs() > 0.0 && a.abs() <= c)) {
            return Err(SvmError::InvalidModel(format!("coefficient {bad} outside 0 < |a| <= {c}")));
        }
        let dim = support_vectors[0].len();
        if let Some(sv) = support_vectors.iter().find(|sv| sv.len() != dim) {
            return Err(SvmError::DimensionMismatch {
                expected: dim,
                actual: sv.len(),
            });
        }
        let weights = kernel.is_linear().then(|| {
            let mut w = vec![0.0; dim];
            for (sv, a) in support_vectors.iter().zip(&coeffs) {
                for (wk, xk) in w.iter_mut().zip(sv) {
                    *wk += a * xk;
                }
            }
            w
        });
        Ok(Self {
            support_vectors,
            coeffs,
            bias,
            kernel,
            c,
            dim,
            weights,
            meta,
        })
    }

    pub fn support_vectors(&self) -> &[Vec<f64>] {
        &self.support_vectors
    }

    /// `a_i y_i` per support vector.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn kernel(&self) -> KernelSpec {
        self.kernel
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn support_vector_count(&self) -> usize {
        self.coeffs.len()
    }

    /// Explicit primal weights, linear kernel only.
    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), SvmError> {
        if x.len() != self.dim {
            return Err(SvmError::DimensionMismatch {
                expected: self.dim,
                actual: x.len(),
            });
        }
        Ok(())
    }

    /// Kernel-sum decision value.
    pub fn decision_value(&self, x: &[f64]) -> Result<f64, SvmError> {
        self.check_dim(x)?;
        let sum: f64 = self
            .support_vectors
            .iter()
            .zip(&self.coeffs)
            .map(|(sv, a)| a * self.kernel.eval_unchecked(sv, x))
            .sum();
        Ok(sum + self.bias)
    }

    /// `w . x + b` through the cached weight vector; `None` for non-linear kernels.
    pub fn linear_decision_value(&self, x: &[f64]) -> Result<Option<f64>, SvmError> {
        self.check_dim(x)?;
        Ok(self.weights.as_ref().map(|w| dot(w, x) + self.bias))
    }

    /// `+1` or `-1`; a decision value of exactly zero maps to `+1`.
    pub fn classify(&self, x: &[f64]) -> Result<i8, SvmError> {
        Ok(if self.decision_value(x)? >= 0.0 { 1 } else { -1 })
    }
}
