use super::{KernelSpec, SvmError};

/// Default KKT tolerance.
pub const DEFAULT_TOL: f64 = 1e-3;
/// Default relative threshold below which a multiplier change counts as no progress.
pub const DEFAULT_EPS: f64 = 1e-8;
/// Default cap on successful two-multiplier steps.
pub const DEFAULT_MAX_ITER: u64 = 10_000_000;

/// Data and settings of one binary soft-margin dual problem:
///
/// maximize `sum a_i - 1/2 sum_ij a_i a_j y_i y_j K(x_i, x_j)`
/// subject to `0 <= a_i <= C` and `sum a_i y_i = 0`.
#[derive(Debug, Clone)]
pub struct TrainingProblem {
    points: Vec<f64>,
    dim: usize,
    labels: Vec<f64>,
    pub c: f64,
    pub kernel: KernelSpec,
    pub tol: f64,
    pub eps: f64,
    pub max_iter: u64,
    /// Seeds the random starting points of the pair-search fallbacks.
    pub seed: u64,
    /// Rows of the kernel matrix kept in an LRU cache; 0 disables it.
    pub kernel_cache_rows: usize,
}

impl TrainingProblem {
    /// Validates and packs the data. Labels must be exactly `-1.0` or `+1.0`.
    pub fn new(
        points: &[Vec<f64>],
        labels: &[f64],
        c: f64,
        kernel: KernelSpec,
    ) -> Result<Self, SvmError> {
        if points.len() != labels.len() {
            return Err(SvmError::InvalidProblem(format!(
                "{} points but {} labels",
                points.len(),
                labels.len()
            )));
        }
        if points.len() < 2 {
            return Err(SvmError::InvalidProblem("need at least two examples".into()));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(SvmError::InvalidProblem(format!("C must be positive, got {c}")));
        }
        kernel.validate()?;
        let dim = points[0].len();
        let mut flat = Vec::with_capacity(points.len() * dim);
        for p in points {
            if p.len() != dim {
                return Err(SvmError::DimensionMismatch {
                    expected: dim,
                    actual: p.len(),
                });
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(SvmError::InvalidProblem("non-finite feature value".into()));
            }
            flat.extend_from_slice(p);
        }
        if let Some(bad) = labels.iter().find(|&&y| y != 1.0 && y != -1.0) {
            return Err(SvmError::InvalidProblem(format!("label {bad} is not +1 or -1")));
        }
        let has_pos = labels.iter().any(|&y| y > 0.0);
        let has_neg = labels.iter().any(|&y| y < 0.0);
        if !(has_pos && has_neg) {
            return Err(SvmError::SingleClassData);
        }
        Ok(Self {
            points: flat,
            dim,
            labels: labels.to_vec(),
            c,
            kernel,
            tol: DEFAULT_TOL,
            eps: DEFAULT_EPS,
            max_iter: DEFAULT_MAX_ITER,
            seed: 0,
            kernel_cache_rows: 0,
        })
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    pub fn with_max_iter(mut self, max_iter: u64) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_kernel_cache(mut self, rows: usize) -> Self {
        self.kernel_cache_rows = rows;
        self
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn label(&self, i: usize) -> f64 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    #[inline]
    pub fn kernel_at(&self, i: usize, j: usize) -> f64 {
        self.kernel.eval_unchecked(self.point(i), self.point(j))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_single_class() {
        let pts = vec![vec![0.0], vec![1.0], vec![1.0]];
        assert!(matches!(
            TrainingProblem::new(&pts, &[1.0, 1.0, 1.0], 1.0, KernelSpec::Linear),
            Err(SvmError::SingleClassData)
        ));
    }

    #[test]
    fn rejects_bad_inputs() {
        let pts = vec![vec![0.0], vec![1.0]];
        assert!(TrainingProblem::new(&pts, &[1.0, 0.5], 1.0, KernelSpec::Linear).is_err());
        assert!(TrainingProblem::new(&pts, &[1.0, -1.0], 0.0, KernelSpec::Linear).is_err());
        assert!(TrainingProblem::new(&pts, &[1.0], 1.0, KernelSpec::Linear).is_err());
        let ragged = vec![vec![0.0], vec![1.0, 2.0]];
        assert!(matches!(
            TrainingProblem::new(&ragged, &[1.0, -1.0], 1.0, KernelSpec::Linear),
            Err(SvmError::DimensionMismatch { .. })
        ));
    }
}
