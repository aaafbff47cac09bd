//! Working-set decomposition: chunking and fixed-size (Osuna-style) sub-problems.
//!
//! Every outer step picks a working set, then optimizes only those
//! multipliers with the pair loop from [`super::solver`], warm-started from
//! the current multipliers; everything outside the set stays fixed. Each
//! sub-problem includes at least one current KKT violator, so the dual
//! objective rises monotonically until no example violates within `tol`.
//!
//! * Chunking keeps every non-zero multiplier from the last step and adds
//!   the `M` worst violators (all of them if fewer than `M`).
//! * Fixed-size keeps `q` examples, swapping `s` violators in and the same
//!   number of non-violating examples out, bound ones first.

use std::fmt;
use std::time::Instant;

use super::model::{SvmModel, TrainingMeta};
use super::solver::{LoopExit, Solver};
use super::{SvmError, TrainingProblem};

/// Default number of violators added per chunking step.
pub const DEFAULT_CHUNK: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decomposition {
    Chunking { chunk: usize },
    FixedSize { size: usize, swap: usize },
}

impl Decomposition {
    pub fn name(&self) -> &'static str {
        match self {
            Decomposition::Chunking { .. } => "chunking",
            Decomposition::FixedSize { .. } => "fixed-size",
        }
    }

    fn validate(&self) -> Result<(), SvmError> {
        match *self {
            Decomposition::Chunking { chunk } if chunk >= 2 => Ok(()),
            Decomposition::FixedSize { size, swap } if size >= 2 && swap >= 1 && swap <= size => Ok(()),
            other => Err(SvmError::InvalidProblem(format!("bad decomposition parameters: {other}"))),
        }
    }
}

impl fmt::Display for Decomposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Decomposition::Chunking { chunk } => write!(f, "chunking(M={chunk})"),
            Decomposition::FixedSize { size, swap } => write!(f, "fixed-size(q={size}, s={swap})"),
        }
    }
}

/// Adds (or substitutes, when `keep_size`) the best-ranked example of a
/// missing class so the sub-problem can move at all.
fn ensure_both_classes(ws: &mut Vec<usize>, ranked: &[usize], problem: &TrainingProblem, keep_size: bool) {
    let has_pos = ws.iter().any(|&i| problem.label(i) > 0.0);
    let has_neg = ws.iter().any(|&i| problem.label(i) < 0.0);
    if ws.is_empty() || (has_pos && has_neg) {
        return;
    }
    let missing = if has_pos { -1.0 } else { 1.0 };
    let pick = ranked
        .iter()
        .copied()
        .chain(0..problem.len())
        .find(|&i| problem.label(i) == missing && !ws.contains(&i));
    if let Some(i) = pick {
        if keep_size {
            *ws.last_mut().expect("non-empty") = i;
        } else {
            ws.push(i);
        }
    }
}

fn chunking_set(solver: &Solver<'_>, ranked: &[usize], chunk: usize) -> Vec<usize> {
    let mut in_ws = vec![false; solver.problem().len()];
    let mut ws: Vec<usize> = solver.support_indices();
    ws.iter().for_each(|&i| in_ws[i] = true);
    for &i in ranked.iter().take(chunk) {
        if !in_ws[i] {
            in_ws[i] = true;
            ws.push(i);
        }
    }
    ensure_both_classes(&mut ws, ranked, solver.problem(), false);
    ws.sort_unstable();
    ws
}

fn swap_set(solver: &Solver<'_>, ws: &[usize], ranked: &[usize], violation: &[f64], swap: usize) -> Vec<usize> {
    let p = solver.problem();
    let mut in_ws = vec![false; p.len()];
    ws.iter().for_each(|&i| in_ws[i] = true);
    let incoming: Vec<usize> = ranked.iter().copied().filter(|&i| !in_ws[i]).take(swap).collect();

    let alphas = solver.alphas();
    let rank = |i: usize| -> u8 {
        if alphas[i] == 0.0 {
            0
        } else if alphas[i] == p.c {
            1
        } else {
            2
        }
    };
    let mut removable: Vec<usize> = ws.iter().copied().filter(|&i| violation[i] == 0.0).collect();
    removable.sort_by_key(|&i| rank(i));
    let k = incoming.len().min(removable.len());
    let outgoing = &removable[..k];

    let mut next: Vec<usize> = ws.iter().copied().filter(|i| !outgoing.contains(i)).collect();
    next.extend_from_slice(&incoming[..k]);
    ensure_both_classes(&mut next, ranked, p, true);
    next.sort_unstable();
    next
}

/// Trains by repeatedly solving sub-problems over a working set.
pub fn decompose_train(problem: &TrainingProblem, strategy: Decomposition) -> Result<SvmModel, SvmError> {
    strategy.validate()?;
    let started = Instant::now();
    let n = problem.len();
    let mut solver = Solver::new(problem);
    let mut ws: Vec<usize> = Vec::new();
    let mut outer = 0u64;
    let mut stalls = 0u32;
    let mut truncated = false;

    loop {
        let violation = solver.violations();
        let mut ranked: Vec<usize> = (0..n).filter(|&i| violation[i] > 0.0).collect();
        if ranked.is_empty() {
            break;
        }
        ranked.sort_by(|&a, &b| violation[b].total_cmp(&violation[a]).then(a.cmp(&b)));

        ws = match stalls {
            // A stalled sub-problem means the selected set could not move
            // under the current bias; widen the set until the full problem.
            0 | 1 => match strategy {
                Decomposition::Chunking { chunk } => chunking_set(&solver, &ranked, chunk),
                Decomposition::FixedSize { size, .. } if ws.is_empty() => {
                    let mut first: Vec<usize> = ranked.iter().copied().take(size.min(n)).collect();
                    ensure_both_classes(&mut first, &ranked, problem, true);
                    first.sort_unstable();
                    first
                }
                Decomposition::FixedSize { swap, .. } => swap_set(&solver, &ws, &ranked, &violation, swap),
            },
            2 => {
                let mut wide: Vec<usize> = solver.support_indices();
                wide.extend(ws.iter().copied());
                wide.extend(ranked.iter().copied());
                wide.sort_unstable();
                wide.dedup();
                wide
            }
            3 => (0..n).collect(),
            _ => break,
        };

        solver.set_scope(&ws);
        outer += 1;
        let before = solver.steps();
        if solver.run_pair_loop() == LoopExit::IterationLimit {
            truncated = true;
            break;
        }
        if solver.steps() == before {
            stalls += 1;
            solver.reconcile_bias();
        } else {
            stalls = 0;
        }
    }

    let wall = started.elapsed().as_secs_f64();
    let meta = TrainingMeta {
        solver: strategy.name().into(),
        iterations: solver.steps(),
        outer_iterations: outer,
        wall_seconds: wall,
        truncated,
        dual_objective: solver.dual_objective(),
    };
    let model = solver.to_model(meta);
    if truncated {
        Err(SvmError::IterationLimitExceeded(Box::new(model)))
    } else {
        Ok(model)
    }
}
