//! Two-multiplier analytic updates and Platt's pair-selection loop.
//!
//! [`Solver`] owns the multipliers, bias, and error cache of one problem.
//! The same machinery drives [`smo_train`] (scope = every example) and the
//! working-set decompositions in `decompose`, which restrict the loop to a
//! subset of indices while the remaining multipliers stay fixed.
//!
//! Sign conventions: `f(x) = sum_j a_j y_j K(x_j, x) + b` and `E_i = f(x_i) - y_i`.
//! Along a feasible pair direction (`a_2 += t`, `a_1 -= y_1 y_2 t`) the dual
//! changes by `y_2 (E_1 - E_2) t + eta t^2 / 2` with
//! `eta = 2 K_12 - K_11 - K_22 <= 0`.

use std::collections::HashMap;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::kernel::dot;
use super::model::{SvmModel, TrainingMeta};
use super::{SvmError, TrainingProblem};

/// Snapshot of the optimizer's externally visible state.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub alphas: Vec<f64>,
    pub bias: f64,
    /// `E_i = f(x_i) - y_i` for every example, freshly evaluated.
    pub error_cache: Vec<f64>,
    /// Dual objective value.
    pub objective: f64,
}

/// Set of indices with O(1) insert, remove, and membership.
#[derive(Debug, Clone)]
struct IndexSet {
    members: Vec<usize>,
    pos: Vec<usize>,
}

impl IndexSet {
    const ABSENT: usize = usize::MAX;

    fn new(n: usize) -> Self {
        Self {
            members: Vec::new(),
            pos: vec![Self::ABSENT; n],
        }
    }

    fn contains(&self, i: usize) -> bool {
        self.pos[i] != Self::ABSENT
    }

    fn insert(&mut self, i: usize) {
        if !self.contains(i) {
            self.pos[i] = self.members.len();
            self.members.push(i);
        }
    }

    fn remove(&mut self, i: usize) {
        let p = self.pos[i];
        if p == Self::ABSENT {
            return;
        }
        self.members.swap_remove(p);
        if let Some(&moved) = self.members.get(p) {
            self.pos[moved] = p;
        }
        self.pos[i] = Self::ABSENT;
    }
}

/// Bounded LRU cache of full kernel rows.
#[derive(Debug)]
struct KernelCache {
    capacity: usize,
    rows: HashMap<usize, (Arc<[f64]>, u64)>,
    clock: u64,
}

impl KernelCache {
    fn new(capacity: usize) -> Self {
        Self {
            capacity,
            rows: HashMap::with_capacity(capacity),
            clock: 0,
        }
    }

    fn row(&mut self, i: usize, problem: &TrainingProblem) -> Arc<[f64]> {
        self.clock += 1;
        let clock = self.clock;
        if let Some((row, stamp)) = self.rows.get_mut(&i) {
            *stamp = clock;
            return Arc::clone(row);
        }
        if self.rows.len() >= self.capacity {
            if let Some(&oldest) = self.rows.iter().min_by_key(|(_, (_, s))| *s).map(|(k, _)| k) {
                self.rows.remove(&oldest);
            }
        }
        let row: Arc<[f64]> = (0..problem.len()).map(|j| problem.kernel_at(i, j)).collect();
        self.rows.insert(i, (Arc::clone(&row), clock));
        row
    }
}

/// Outcome of one run of the pair-selection loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum LoopExit {
    Converged,
    IterationLimit,
}

pub struct Solver<'a> {
    problem: &'a TrainingProblem,
    alpha: Vec<f64>,
    bias: f64,
    errors: Vec<f64>,
    nonbound: IndexSet,
    support: IndexSet,
    weights: Option<Vec<f64>>,
    diag: Vec<f64>,
    cache: Option<KernelCache>,
    rng: ChaCha8Rng,
    steps: u64,
    in_scope: Vec<bool>,
    scope: Vec<usize>,
}

impl<'a> Solver<'a> {
    /// All multipliers zero, bias zero, scope = every example.
    pub fn new(problem: &'a TrainingProblem) -> Self {
        let n = problem.len();
        let weights = problem.kernel.is_linear().then(|| vec![0.0; problem.dim()]);
        Self {
            problem,
            alpha: vec![0.0; n],
            bias: 0.0,
            errors: vec![0.0; n],
            nonbound: IndexSet::new(n),
            support: IndexSet::new(n),
            weights,
            diag: (0..n).map(|i| problem.kernel_at(i, i)).collect(),
            cache: (problem.kernel_cache_rows > 0).then(|| KernelCache::new(problem.kernel_cache_rows)),
            rng: ChaCha8Rng::seed_from_u64(problem.seed),
            steps: 0,
            in_scope: vec![true; n],
            scope: (0..n).collect(),
        }
    }

    /// Starts from arbitrary multipliers inside the box. The equality
    /// constraint is not enforced, which lets tests probe off-manifold states.
    pub fn with_state(problem: &'a TrainingProblem, alphas: &[f64], bias: f64) -> Result<Self, SvmError> {
        if alphas.len() != problem.len() {
            return Err(SvmError::DimensionMismatch {
                expected: problem.len(),
                actual: alphas.len(),
            });
        }
        if let Some(a) = alphas.iter().find(|&&a| !(0.0..=problem.c).contains(&a)) {
            return Err(SvmError::InvalidProblem(format!(
                "multiplier {a} outside [0, {}]",
                problem.c
            )));
        }
        let mut s = Self::new(problem);
        s.alpha = alphas.to_vec();
        s.bias = bias;
        for i in 0..problem.len() {
            s.update_membership(i);
        }
        if let Some(w) = s.weights.as_mut() {
            w.iter_mut().for_each(|v| *v = 0.0);
            for &i in &s.support.members {
                let coef = s.alpha[i] * problem.label(i);
                for (wk, xk) in w.iter_mut().zip(problem.point(i)) {
                    *wk += coef * xk;
                }
            }
        }
        s.refresh_error_cache();
        Ok(s)
    }

    pub fn problem(&self) -> &TrainingProblem {
        self.problem
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alpha
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    /// Successful two-multiplier steps so far.
    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// `sum a_i y_i`; zero on the feasible manifold.
    pub fn equality_residual(&self) -> f64 {
        self.alpha
            .iter()
            .zip(self.problem.labels())
            .map(|(a, y)| a * y)
            .sum()
    }

    fn is_nonbound(&self, a: f64) -> bool {
        a > 0.0 && a < self.problem.c
    }

    fn update_membership(&mut self, i: usize) {
        let a = self.alpha[i];
        if self.is_nonbound(a) {
            self.nonbound.insert(i);
        } else {
            self.nonbound.remove(i);
        }
        if a > 0.0 {
            self.support.insert(i);
        } else {
            self.support.remove(i);
        }
    }

    fn kernel(&mut self, i: usize, j: usize) -> f64 {
        match self.cache.as_mut() {
            Some(c) => c.row(i, self.problem)[j],
            None => self.problem.kernel_at(i, j),
        }
    }

    /// `f(x_i) - b`, evaluated from scratch.
    fn raw_output(&mut self, i: usize) -> f64 {
        if let Some(w) = &self.weights {
            return dot(w, self.problem.point(i));
        }
        let p = self.problem;
        if let Some(cache) = self.cache.as_mut() {
            let row = cache.row(i, p);
            return self
                .support
                .members
                .iter()
                .map(|&j| self.alpha[j] * p.label(j) * row[j])
                .sum();
        }
        let x = p.point(i);
        self.support
            .members
            .iter()
            .map(|&j| self.alpha[j] * p.label(j) * p.kernel.eval_unchecked(p.point(j), x))
            .sum()
    }

    /// `f(x_i)` for a training example.
    pub fn output(&mut self, i: usize) -> f64 {
        self.raw_output(i) + self.bias
    }

    /// `E_i`, from the cache for non-bound examples.
    pub fn error(&mut self, i: usize) -> f64 {
        if self.nonbound.contains(i) {
            self.errors[i]
        } else {
            self.output(i) - self.problem.label(i)
        }
    }

    /// Recomputes cached errors of all non-bound examples exactly.
    pub fn refresh_error_cache(&mut self) {
        let members = self.nonbound.members.clone();
        for i in members {
            self.errors[i] = self.output(i) - self.problem.label(i);
        }
    }

    /// Magnitude of the margin gap `|y_i f(x_i) - 1|` when example `i`
    /// violates its KKT condition by more than `tol`, else 0.
    pub fn kkt_violation(&mut self, i: usize) -> Result<f64, SvmError> {
        if i >= self.problem.len() {
            return Err(SvmError::IndexOutOfRange {
                index: i,
                len: self.problem.len(),
            });
        }
        Ok(self.violation_unchecked(i))
    }

    fn violation_unchecked(&mut self, i: usize) -> f64 {
        let r = self.problem.label(i) * self.error(i);
        let a = self.alpha[i];
        let tol = self.problem.tol;
        if a < self.problem.c && r < -tol {
            -r
        } else if a > 0.0 && r > tol {
            r
        } else {
            0.0
        }
    }

    /// Largest violation over every example.
    pub fn max_violation(&mut self) -> f64 {
        (0..self.problem.len())
            .map(|i| self.violation_unchecked(i))
            .fold(0.0, f64::max)
    }

    /// Violations of every example, fresh (bypasses the error cache).
    pub(crate) fn violations(&mut self) -> Vec<f64> {
        self.refresh_error_cache();
        (0..self.problem.len()).map(|i| self.violation_unchecked(i)).collect()
    }

    /// Dual objective `sum a - 1/2 sum_ij a_i a_j y_i y_j K_ij`.
    pub fn dual_objective(&mut self) -> f64 {
        let members = self.support.members.clone();
        let mut sum_a = 0.0;
        let mut quad = 0.0;
        for i in members {
            let a = self.alpha[i];
            sum_a += a;
            quad += a * self.problem.label(i) * self.raw_output(i);
        }
        sum_a - 0.5 * quad
    }

    pub fn state(&mut self) -> SolverState {
        let error_cache = (0..self.problem.len())
            .map(|i| self.output(i) - self.problem.label(i))
            .collect();
        SolverState {
            alphas: self.alpha.clone(),
            bias: self.bias,
            error_cache,
            objective: self.dual_objective(),
        }
    }

    /// Jointly optimizes multipliers `i` and `j` in closed form, keeping both
    /// in `[0, C]` and `sum a y` unchanged. Returns whether they moved.
    pub fn solve_two_multipliers(&mut self, i: usize, j: usize) -> Result<bool, SvmError> {
        let n = self.problem.len();
        for idx in [i, j] {
            if idx >= n {
                return Err(SvmError::IndexOutOfRange { index: idx, len: n });
            }
        }
        Ok(self.take_step(i, j))
    }

    fn take_step(&mut self, i1: usize, i2: usize) -> bool {
        if i1 == i2 {
            return false;
        }
        let p = self.problem;
        let c = p.c;
        let (a1, a2) = (self.alpha[i1], self.alpha[i2]);
        let (y1, y2) = (p.label(i1), p.label(i2));
        let e1 = self.error(i1);
        let e2 = self.error(i2);
        let s = y1 * y2;
        let (lo, hi) = if s < 0.0 {
            ((a2 - a1).max(0.0), (c + a2 - a1).min(c))
        } else {
            ((a1 + a2 - c).max(0.0), (a1 + a2).min(c))
        };
        if lo >= hi {
            return false;
        }
        let k11 = self.diag[i1];
        let k22 = self.diag[i2];
        let k12 = self.kernel(i1, i2);
        let eta = 2.0 * k12 - k11 - k22;

        let mut new2 = if eta < 0.0 {
            (a2 - y2 * (e1 - e2) / eta).clamp(lo, hi)
        } else {
            // Flat or (numerically) convex along the line: take the better end.
            let slope = y2 * (e1 - e2);
            let gain = |t: f64| slope * t + 0.5 * eta * t * t;
            let (g_lo, g_hi) = (gain(lo - a2), gain(hi - a2));
            if g_lo > g_hi + p.eps {
                lo
            } else if g_hi > g_lo + p.eps {
                hi
            } else {
                a2
            }
        };
        let snap = 1e-8 * c;
        // `lo`/`hi` carry rounding from `a1 ± a2`, so edges within
        // `fp_slack` of the box count as the box itself
        let fp_slack = 1e-12 * c;
        if (lo == 0.0 && new2 < snap) || new2 < fp_slack {
            new2 = 0.0;
        } else if (hi == c && new2 > c - snap) || new2 > c - fp_slack {
            new2 = c;
        }
        let lands_on_bound = (new2 == 0.0 || new2 == c) && new2 != a2;
        if !lands_on_bound && (new2 - a2).abs() < p.eps * (new2 + a2 + p.eps) {
            return false;
        }
        let mut new1 = a1 + s * (a2 - new2);
        if new1 < fp_slack {
            new1 = 0.0;
        } else if new1 > c - fp_slack {
            new1 = c;
        }

        let d1 = y1 * (new1 - a1);
        let d2 = y2 * (new2 - a2);
        let b1 = self.bias - e1 - d1 * k11 - d2 * k12;
        let b2 = self.bias - e2 - d1 * k12 - d2 * k22;
        let new_b = if self.is_nonbound(new1) {
            b1
        } else if self.is_nonbound(new2) {
            b2
        } else {
            0.5 * (b1 + b2)
        };
        let db = new_b - self.bias;

        if let Some(cache) = self.cache.as_mut() {
            let r1 = cache.row(i1, p);
            let r2 = cache.row(i2, p);
            for &k in &self.nonbound.members {
                if k != i1 && k != i2 {
                    self.errors[k] += d1 * r1[k] + d2 * r2[k] + db;
                }
            }
        } else {
            let (x1, x2) = (p.point(i1), p.point(i2));
            for &k in &self.nonbound.members {
                if k != i1 && k != i2 {
                    let xk = p.point(k);
                    self.errors[k] += d1 * p.kernel.eval_unchecked(x1, xk)
                        + d2 * p.kernel.eval_unchecked(x2, xk)
                        + db;
                }
            }
        }
        if let Some(w) = self.weights.as_mut() {
            for ((wk, u), v) in w.iter_mut().zip(p.point(i1)).zip(p.point(i2)) {
                *wk += d1 * u + d2 * v;
            }
        }

        self.alpha[i1] = new1;
        self.alpha[i2] = new2;
        self.bias = new_b;
        self.errors[i1] = e1 + d1 * k11 + d2 * k12 + db;
        self.errors[i2] = e2 + d1 * k12 + d2 * k22 + db;
        self.update_membership(i1);
        self.update_membership(i2);
        self.steps += 1;
        true
    }

    fn scoped_nonbound(&self) -> Vec<usize> {
        self.nonbound
            .members
            .iter()
            .copied()
            .filter(|&k| self.in_scope[k])
            .collect()
    }

    /// Platt's examineExample: if `i2` violates KKT, look for a partner.
    fn examine(&mut self, i2: usize) -> bool {
        let p = self.problem;
        let e2 = self.error(i2);
        let r2 = e2 * p.label(i2);
        let a2 = self.alpha[i2];
        if !((r2 < -p.tol && a2 < p.c) || (r2 > p.tol && a2 > 0.0)) {
            return false;
        }
        let nb = self.scoped_nonbound();
        if nb.len() > 1 {
            // second choice: maximize |E1 - E2| over cached errors
            let pick = if e2 > 0.0 {
                nb.iter().copied().min_by(|&a, &b| self.errors[a].total_cmp(&self.errors[b]))
            } else {
                nb.iter().copied().max_by(|&a, &b| self.errors[a].total_cmp(&self.errors[b]))
            };
            if let Some(i1) = pick {
                if self.take_step(i1, i2) {
                    return true;
                }
            }
        }
        if !nb.is_empty() {
            let start = self.rng.random_range(0..nb.len());
            for k in 0..nb.len() {
                if self.take_step(nb[(start + k) % nb.len()], i2) {
                    return true;
                }
            }
        }
        let len = self.scope.len();
        let start = self.rng.random_range(0..len);
        for k in 0..len {
            let i1 = self.scope[(start + k) % len];
            if self.take_step(i1, i2) {
                return true;
            }
        }
        false
    }

    /// Restricts the pair loop to `indices`; other multipliers stay fixed.
    pub(crate) fn set_scope(&mut self, indices: &[usize]) {
        self.in_scope.iter_mut().for_each(|v| *v = false);
        for &i in indices {
            self.in_scope[i] = true;
        }
        self.scope = indices.to_vec();
    }

    /// Platt's outer loop over the current scope: alternate full sweeps and
    /// non-bound sweeps until a full sweep changes nothing.
    pub(crate) fn run_pair_loop(&mut self) -> LoopExit {
        let mut examine_all = true;
        loop {
            let mut changed = 0usize;
            if examine_all {
                for k in 0..self.scope.len() {
                    let i = self.scope[k];
                    changed += usize::from(self.examine(i));
                    if self.steps >= self.problem.max_iter {
                        return LoopExit::IterationLimit;
                    }
                }
            } else {
                for i in self.scoped_nonbound() {
                    changed += usize::from(self.examine(i));
                    if self.steps >= self.problem.max_iter {
                        return LoopExit::IterationLimit;
                    }
                }
            }
            if examine_all {
                if changed == 0 {
                    return LoopExit::Converged;
                }
                examine_all = false;
            } else if changed == 0 {
                examine_all = true;
            }
        }
    }

    /// Places the bias inside the interval allowed by the current
    /// multipliers: the mean of `y_i - g_i` over non-bound examples, or the
    /// midpoint of the feasible range implied by the bound ones.
    pub(crate) fn reconcile_bias(&mut self) {
        let p = self.problem;
        let (mut lower, mut upper) = (f64::NEG_INFINITY, f64::INFINITY);
        let (mut free_sum, mut free_count) = (0.0, 0usize);
        for i in 0..p.len() {
            let g = self.raw_output(i);
            let y = p.label(i);
            let a = self.alpha[i];
            if self.is_nonbound(a) {
                free_sum += y - g;
                free_count += 1;
            } else {
                // a = 0 needs y (g + b) >= 1; a = C needs y (g + b) <= 1
                let edge = y - g;
                let is_lower = (a == 0.0) == (y > 0.0);
                if is_lower {
                    lower = lower.max(edge);
                } else {
                    upper = upper.min(edge);
                }
            }
        }
        let new_b = if free_count > 0 {
            free_sum / free_count as f64
        } else if lower.is_finite() && upper.is_finite() {
            0.5 * (lower + upper)
        } else if lower.is_finite() {
            lower
        } else if upper.is_finite() {
            upper
        } else {
            self.bias
        };
        let db = new_b - self.bias;
        for &k in &self.nonbound.members {
            self.errors[k] += db;
        }
        self.bias = new_b;
    }

    /// Examples with a non-zero multiplier, ascending.
    pub(crate) fn support_indices(&self) -> Vec<usize> {
        let mut idx = self.support.members.clone();
        idx.sort_unstable();
        idx
    }

    /// Builds the immutable model from the current multipliers.
    pub(crate) fn to_model(&mut self, meta: TrainingMeta) -> SvmModel {
        let p = self.problem;
        let mut idx = self.support.members.clone();
        idx.sort_unstable();
        let support_vectors = idx.iter().map(|&i| p.point(i).to_vec()).collect();
        let coeffs = idx.iter().map(|&i| self.alpha[i] * p.label(i)).collect();
        SvmModel::from_parts(support_vectors, coeffs, self.bias, p.kernel, p.c, meta)
            .expect("solver state satisfies model invariants")
    }
}

/// Rounds of bias reconciliation plus another pair loop allowed after the
/// first convergence.
const POLISH_ROUNDS: usize = 3;

/// Trains with sequential minimal optimization over the whole problem.
pub fn smo_train(problem: &TrainingProblem) -> Result<SvmModel, SvmError> {
    let started = Instant::now();
    let mut solver = Solver::new(problem);
    let mut exit = solver.run_pair_loop();
    // Platt's rule can stop with violators left when the bias came from a
    // bound-bound step; move the bias into its feasible interval and resume.
    for _ in 0..POLISH_ROUNDS {
        if exit != LoopExit::Converged {
            break;
        }
        solver.refresh_error_cache();
        if solver.max_violation() == 0.0 {
            break;
        }
        solver.reconcile_bias();
        let before = solver.steps();
        exit = solver.run_pair_loop();
        if solver.steps() == before {
            break;
        }
    }
    let wall = started.elapsed().as_secs_f64();
    let meta = TrainingMeta {
        solver: "smo".into(),
        iterations: solver.steps(),
        outer_iterations: 1,
        wall_seconds: wall,
        truncated: exit == LoopExit::IterationLimit,
        dual_objective: solver.dual_objective(),
    };
    let model = solver.to_model(meta);
    if model.meta.truncated {
        Err(SvmError::IterationLimitExceeded(Box::new(model)))
    } else {
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::svm::KernelSpec;

    fn two_point() -> TrainingProblem {
        TrainingProblem::new(&[vec![-1.0], vec![1.0]], &[-1.0, 1.0], 10.0, KernelSpec::Linear).unwrap()
    }

    #[test]
    fn single_step_reaches_analytic_optimum() {
        let p = two_point();
        let mut s = Solver::new(&p);
        assert!(s.solve_two_multipliers(0, 1).unwrap());
        assert!((s.alphas()[0] - 0.5).abs() < 1e-12);
        assert!((s.alphas()[1] - 0.5).abs() < 1e-12);
        assert!(s.bias().abs() < 1e-12);
        // already optimal
        assert!(!s.solve_two_multipliers(0, 1).unwrap());
        assert_eq!(s.kkt_violation(0).unwrap(), 0.0);
        assert_eq!(s.kkt_violation(1).unwrap(), 0.0);
    }

    #[test]
    fn initial_state_violates() {
        let p = two_point();
        let mut s = Solver::new(&p);
        assert_eq!(s.kkt_violation(0).unwrap(), 1.0);
        assert_eq!(s.kkt_violation(1).unwrap(), 1.0);
        assert!(matches!(s.kkt_violation(2), Err(SvmError::IndexOutOfRange { index: 2, len: 2 })));
    }

    #[test]
    fn identical_points_same_label_cannot_move() {
        let p = TrainingProblem::new(
            &[vec![0.5, 0.5], vec![0.5, 0.5], vec![-1.0, 0.0]],
            &[1.0, 1.0, -1.0],
            1.0,
            KernelSpec::Linear,
        )
        .unwrap();
        let mut s = Solver::new(&p);
        assert!(!s.solve_two_multipliers(0, 1).unwrap());
    }

    #[test]
    fn multipliers_one_ulp_below_the_box_reach_it() {
        let c = 0.3;
        let p = TrainingProblem::new(&[vec![-1.0], vec![1.0]], &[-1.0, 1.0], c, KernelSpec::Linear).unwrap();
        let near = f64::from_bits(c.to_bits() - 1);
        let mut s = Solver::with_state(&p, &[near, near], 0.0).unwrap();
        assert!(s.solve_two_multipliers(0, 1).unwrap());
        assert_eq!(s.alphas(), &[c, c]);
        assert_eq!(s.kkt_violation(0).unwrap(), 0.0);
    }

    #[test]
    fn index_set_bookkeeping() {
        let mut set = IndexSet::new(5);
        set.insert(3);
        set.insert(1);
        set.insert(4);
        set.remove(3);
        assert!(!set.contains(3));
        assert!(set.contains(1) && set.contains(4));
        assert_eq!(set.members.len(), 2);
        set.remove(3);
        assert_eq!(set.members.len(), 2);
    }

    #[test]
    fn kernel_cache_matches_direct() {
        let pts: Vec<Vec<f64>> = (0..30).map(|i| vec![(i as f64 * 0.37).sin(), (i as f64 * 0.91).cos()]).collect();
        let labels: Vec<f64> = pts.iter().map(|p| if p[0] + 0.2 * p[1] > 0.0 { 1.0 } else { -1.0 }).collect();
        let base = TrainingProblem::new(&pts, &labels, 1.0, KernelSpec::Rbf { gamma: 2.0 }).unwrap();
        let plain = smo_train(&base).unwrap();
        let cached = smo_train(&base.clone().with_kernel_cache(4)).unwrap();
        for p in &pts {
            let (a, b) = (plain.decision_value(p).unwrap(), cached.decision_value(p).unwrap());
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }
}
