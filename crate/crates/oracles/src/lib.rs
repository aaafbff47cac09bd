//! Slow reference implementations for tests.
//!
//! Nothing here shares code with `voxid`; each function is the most literal
//! rendering of its formula so a disagreement points at the fast path.

use std::f64::consts::PI;

/// Power spectrum `|X[k]|^2`, `k = 0..=n/2`, of `frame` zero-padded to `n`,
/// by the O(n^2) DFT sum.
pub fn dft_power(frame: &[f64], n: usize) -> Vec<f64> {
    assert!(frame.len() <= n);
    (0..=n / 2)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (t, &x) in frame.iter().enumerate() {
                // reduce k*t mod n exactly before taking the angle
                let m = (k * t) % n;
                let theta = -2.0 * PI * m as f64 / n as f64;
                re += x * theta.cos();
                im += x * theta.sin();
            }
            re * re + im * im
        })
        .collect()
}

/// `c_n = sum_{k=1}^{K} L_k cos(n (k - 1/2) pi / K)` evaluated term by term.
pub fn dct_direct(log_energies: &[f64], n: usize) -> f64 {
    let k_total = log_energies.len() as f64;
    log_energies
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            let k = (i + 1) as f64;
            l * (n as f64 * (k - 0.5) * PI / k_total).cos()
        })
        .sum()
}

/// Hz to mel, written out directly.
pub fn mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

/// Reference kernels.
#[derive(Debug, Clone, Copy)]
pub enum Kernel {
    Linear,
    Rbf(f64),
    Poly(u32, f64),
}

impl Kernel {
    pub fn eval(&self, x: &[f64], z: &[f64]) -> f64 {
        let dot = || x.iter().zip(z).map(|(a, b)| a * b).sum::<f64>();
        match *self {
            Kernel::Linear => dot(),
            Kernel::Rbf(g) => {
                let d2: f64 = x.iter().zip(z).map(|(a, b)| (a - b).powi(2)).sum();
                (-g * d2).exp()
            }
            Kernel::Poly(d, c0) => (0..d).fold(1.0, |acc, _| acc * (dot() + c0)),
        }
    }
}

pub fn gram(points: &[Vec<f64>], kernel: Kernel) -> Vec<Vec<f64>> {
    points
        .iter()
        .map(|x| points.iter().map(|z| kernel.eval(x, z)).collect())
        .collect()
}

/// `sum a - 1/2 sum_ij a_i a_j y_i y_j K_ij`.
pub fn dual_objective(alpha: &[f64], y: &[f64], k: &[Vec<f64>]) -> f64 {
    let n = alpha.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += alpha[i] * alpha[j] * y[i] * y[j] * k[i][j];
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting; `None`
/// when a pivot falls below `1e-10` times the largest entry.
pub fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = a
        .iter()
        .flatten()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1.0);
    for col in 0..n {
        let piv = (col..n).max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))?;
        if a[piv][col].abs() < 1e-10 * scale {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Exact maximum of the SVM dual by exhaustive active-set enumeration.
///
/// Every multiplier is assigned to one of {0, C, free}; for each of the
/// `3^n` assignments the free multipliers solve the equality-constrained
/// stationarity system
///
/// ```text
/// [Q_FF  y_F] [a_F   ]   [1 - Q_FU C 1]
/// [y_F^T  0 ] [lambda] = [ -y_U^T C 1 ]
/// ```
///
/// with `Q_ij = y_i y_j K_ij`. Feasible solutions are scored with
/// [`dual_objective`]. Some optimum always has a non-singular free system
/// (along a null direction the objective is flat, so one can slide to a
/// bound), so skipping singular assignments loses nothing.
pub fn brute_force_dual(y: &[f64], k: &[Vec<f64>], c: f64) -> (f64, Vec<f64>) {
    let n = y.len();
    assert!(n <= 12, "3^n enumeration");
    let q = |i: usize, j: usize| y[i] * y[j] * k[i][j];
    let mut best = (f64::NEG_INFINITY, vec![0.0; n]);
    let mut state = vec![0u8; n];
    let total = 3usize.pow(n as u32);
    for code in 0..total {
        let mut rem = code;
        for s in state.iter_mut() {
            *s = (rem % 3) as u8;
            rem /= 3;
        }
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
        let upper: Vec<usize> = (0..n).filter(|&i| state[i] == 1).collect();
        let mut alpha = vec![0.0; n];
        for &i in &upper {
            alpha[i] = c;
        }
        if !free.is_empty() {
            let m = free.len();
            let mut a = vec![vec![0.0; m + 1]; m + 1];
            let mut b = vec![0.0; m + 1];
            for (r, &i) in free.iter().enumerate() {
                for (s, &j) in free.iter().enumerate() {
                    a[r][s] = q(i, j);
                }
                a[r][m] = y[i];
                a[m][r] = y[i];
                b[r] = 1.0 - upper.iter().map(|&j| q(i, j) * c).sum::<f64>();
            }
            b[m] = -upper.iter().map(|&j| y[j] * c).sum::<f64>();
            let Some(x) = solve_linear(a, b) else { continue };
            let slack = 1e-9 * c.max(1.0);
            if x[..m].iter().any(|&v| v < -slack || v > c + slack) {
                continue;
            }
            for (r, &i) in free.iter().enumerate() {
                alpha[i] = x[r].clamp(0.0, c);
            }
        }
        let resid: f64 = alpha.iter().zip(y).map(|(a, yy)| a * yy).sum();
        if resid.abs() > 1e-7 * c.max(1.0) {
            continue;
        }
        let w = dual_objective(&alpha, y, k);
        if w > best.0 {
            best = (w, alpha);
        }
    }
    best
}

/// Grid maximization of the dual for tiny problems: the first `n - 1`
/// multipliers range over `steps + 1` evenly spaced values in `[0, C]`, the
/// last is fixed by the equality constraint and must land in the box.
pub fn grid_dual(y: &[f64], k: &[Vec<f64>], c: f64, steps: usize) -> f64 {
    let n = y.len();
    assert!((2..=4).contains(&n));
    let mut best = f64::NEG_INFINITY;
    let mut idx = vec![0usize; n - 1];
    loop {
        let mut alpha: Vec<f64> = idx.iter().map(|&s| c * s as f64 / steps as f64).collect();
        let partial: f64 = alpha.iter().zip(y).map(|(a, yy)| a * yy).sum();
        let last = -partial * y[n - 1];
        if (-1e-12..=c + 1e-12).contains(&last) {
            alpha.push(last.clamp(0.0, c));
            best = best.max(dual_objective(&alpha, y, k));
        }
        let mut d = 0;
        loop {
            if d == n - 1 {
                return best;
            }
            idx[d] += 1;
            if idx[d] <= steps {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

/// Largest KKT violation given multipliers and decision values `u_i`:
/// `a_i = 0` needs `y u >= 1`, `a_i = C` needs `y u <= 1`, otherwise
/// `y u = 1`.
pub fn kkt_violation(alpha: &[f64], y: &[f64], outputs: &[f64], c: f64) -> f64 {
    alpha
        .iter()
        .zip(y)
        .zip(outputs)
        .map(|((&a, &yy), &u)| {
            let r = yy * u - 1.0;
            if a <= 0.0 {
                (-r).max(0.0)
            } else if a >= c {
                r.max(0.0)
            } else {
                r.abs()
            }
        })
        .fold(0.0, f64::max)
}

/// `100 * correct / total` rounded half-up to two decimals, through
/// exact rational arithmetic on hundredths.
pub fn pct_half_up(correct: u64, total: u64) -> f64 {
    let num = 10_000 * correct;
    let q = num / total;
    let r = num % total;
    let hundredths = if 2 * r >= total { q + 1 } else { q };
    hundredths as f64 / 100.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumeration_matches_grid_on_tiny_problems() {
        let pts = vec![vec![0.0, 0.0], vec![1.0, 0.5], vec![0.3, 1.2]];
        let y = [1.0, -1.0, -1.0];
        for kernel in [Kernel::Linear, Kernel::Rbf(0.7), Kernel::Poly(2, 1.0)] {
            let k = gram(&pts, kernel);
            for c in [0.1, 1.0, 10.0] {
                let (exact, alpha) = brute_force_dual(&y, &k, c);
                let grid = grid_dual(&y, &k, c, 2000);
                assert!(exact >= grid - 1e-9, "{exact} < {grid}");
                assert!(exact - grid < 1e-2 * c.max(1.0), "{exact} vs {grid}");
                assert!(alpha.iter().all(|a| (0.0..=c).contains(a)));
            }
        }
    }

    #[test]
    fn two_point_optimum() {
        let k = gram(&[vec![-1.0], vec![1.0]], Kernel::Linear);
        let (w, a) = brute_force_dual(&[-1.0, 1.0], &k, 10.0);
        assert!((w - 0.5).abs() < 1e-12);
        assert!((a[0] - 0.5).abs() < 1e-12 && (a[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn dft_of_impulse_is_flat() {
        let p = dft_power(&[1.0], 8);
        assert!(p.iter().all(|v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn pct_rounding() {
        assert_eq!(pct_half_up(147, 160), 91.88);
        assert_eq!(pct_half_up(152, 160), 95.0);
        assert_eq!(pct_half_up(1, 8), 12.5);
        assert_eq!(pct_half_up(1, 3), 33.33);
        assert_eq!(pct_half_up(2, 3), 66.67);
    }

    #[test]
    fn linear_solver() {
        let x = solve_linear(vec![vec![2.0, 1.0], vec![1.0, 3.0]], vec![3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-12 && (x[1] - 1.4).abs() < 1e-12);
        assert!(solve_linear(vec![vec![1.0, 2.0], vec![2.0, 4.0]], vec![1.0, 2.0]).is_none());
    }
}
