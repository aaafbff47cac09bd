//! Solver timing sweep on seeded synthetic binary problems.
//!
//! Data: two unit-variance Gaussian clusters in `dim` dimensions whose
//! means sit at `±sep/2` along the diagonal direction, followed by flipping
//! 10% of the labels. Each size gets its own stream derived from the seed,
//! so adding sizes never changes existing rows.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use voxid::svm::{train, KernelSpec, SolverKind, SvmModel, TrainingProblem};

use crate::report::{BenchReport, BenchRow};
use crate::CliError;

/// Training set sizes of the classic adult-data timing table.
pub const DEFAULT_SIZES: [usize; 5] = [2477, 3470, 4912, 7366, 9888];
pub const LABEL_NOISE: f64 = 0.10;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchOptions {
    pub sizes: Vec<usize>,
    pub kernel: KernelSpec,
    pub solvers: Vec<SolverKind>,
    pub seed: u64,
    pub repeats: usize,
    pub c: f64,
    pub dim: usize,
    pub separation: f64,
    pub tol: f64,
    /// Two-multiplier step cap per training run.
    pub max_iter: u64,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            sizes: DEFAULT_SIZES.to_vec(),
            kernel: KernelSpec::Linear,
            solvers: vec![SolverKind::Smo, SolverKind::Chunking { chunk: 50 }],
            seed: 0,
            repeats: 1,
            c: 0.05,
            dim: 16,
            separation: 2.0,
            tol: 1e-3,
            max_iter: 500_000_000,
        }
    }
}

/// Sizes must be non-empty, at least 100, and strictly increasing.
pub fn check_sizes(sizes: &[usize]) -> Result<(), CliError> {
    if sizes.is_empty() {
        return Err(CliError::BadSizeList("no sizes given".into()));
    }
    if let Some(s) = sizes.iter().find(|&&s| s < 100) {
        return Err(CliError::BadSizeList(format!("size {s} is below 100")));
    }
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::BadSizeList(format!("sizes must strictly increase: {sizes:?}")));
    }
    Ok(())
}

/// `n` labeled points; labels are `±1` and both classes are present.
pub fn bench_data(n: usize, dim: usize, separation: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (n as u64).wrapping_mul(0x2545_f491_4f6c_dd1d));
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let shift = separation / 2.0 / (dim as f64).sqrt();
    let mut points = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        // alternate classes so both are always present
        let y = if i % 2 == 0 { 1.0 } else { -1.0 };
        let x: Vec<f64> = (0..dim).map(|_| normal.sample(&mut rng) + y * shift).collect();
        let noisy = if rng.random_bool(LABEL_NOISE) { -y } else { y };
        points.push(x);
        labels.push(noisy);
    }
    (points, labels)
}

/// Result of a sweep: the report plus rows whose dual objective disagrees
/// with the best solver at that size by more than `1e-3` relative, and
/// solver runs that failed.
#[derive(Debug, Clone, Default)]
pub struct BenchOutcome {
    pub report: BenchReport,
    pub flagged: Vec<(usize, String)>,
    pub failures: Vec<(usize, String, String)>,
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

fn timed(problem: &TrainingProblem, solver: SolverKind) -> Result<(SvmModel, f64), String> {
    let started = Instant::now();
    let model = train(problem, solver).map_err(|e| e.to_string())?;
    Ok((model, started.elapsed().as_secs_f64()))
}

pub fn run_bench(opts: &BenchOptions) -> Result<BenchOutcome, CliError> {
    check_sizes(&opts.sizes)?;
    if opts.repeats == 0 {
        return Err(CliError::InvalidArgument("--repeats must be at least 1".into()));
    }
    let mut out = BenchOutcome::default();
    for &n in &opts.sizes {
        let (points, labels) = bench_data(n, opts.dim, opts.separation, opts.seed);
        let problem = TrainingProblem::new(&points, &labels, opts.c, opts.kernel)
            .map_err(|e| CliError::InvalidArgument(e.to_string()))?
            .with_tol(opts.tol)
            .with_max_iter(opts.max_iter)
            .with_seed(opts.seed);
        let first_row = out.report.rows.len();
        for &solver in &opts.solvers {
            let mut times = Vec::with_capacity(opts.repeats);
            let mut model = None;
            let mut failed = None;
            for _ in 0..opts.repeats {
                match timed(&problem, solver) {
                    Ok((m, t)) => {
                        times.push(t);
                        model.get_or_insert(m);
                    }
                    Err(e) => {
                        failed = Some(e);
                        break;
                    }
                }
            }
            match (failed, model) {
                (None, Some(m)) => out.report.rows.push(BenchRow {
                    training_set_size: n,
                    solver: solver.name().to_string(),
                    kernel: opts.kernel.kind().to_string(),
                    wall_seconds: median(times),
                    iterations: m.meta.iterations,
                    support_vector_count: m.support_vector_count(),
                    dual_objective: m.meta.dual_objective,
                }),
                (failed, _) => {
                    let msg = failed.unwrap_or_else(|| "no run completed".into());
                    out.failures.push((n, solver.name().to_string(), msg));
                }
            }
        }
        let rows = &out.report.rows[first_row..];
        let best = rows.iter().map(|r| r.dual_objective).fold(f64::NEG_INFINITY, f64::max);
        for r in rows {
            if (r.dual_objective - best).abs() > 1e-3 * best.abs().max(1.0) {
                out.flagged.push((n, r.solver.clone()));
            }
        }
    }
    Ok(out)
}
