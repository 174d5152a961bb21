//! Sequential minimal optimization for the soft-margin SVM dual
//!
//! ```text
//! max  Σ αᵢ − ½ ΣΣ αᵢαⱼyᵢyⱼK(xᵢ, xⱼ)
//! s.t. 0 ≤ αᵢ ≤ C,  Σ αᵢyᵢ = 0
//! ```
//!
//! The outer loop visits every multiplier that violates its KKT condition by
//! more than `tol` and pairs it with a randomly drawn partner. Training stops
//! after `max_passes` consecutive sweeps without an update, provided a final
//! sweep that tries every partner for each violator also makes no progress.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::classifier::kernel::Kernel;

/// Gram matrices up to this many rows are cached in full.
const FULL_GRAM_LIMIT: usize = 5000;
/// Smallest multiplier change accepted as progress.
const MIN_STEP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoParams {
    pub c: f64,
    pub tol: f64,
    pub max_passes: usize,
    /// Hard cap on outer sweeps.
    pub max_sweeps: usize,
    pub seed: u64,
}

impl Default for SmoParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            tol: 1e-3,
            max_passes: 10,
            max_sweeps: 10_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub sweeps: usize,
    pub updates: usize,
    /// False when `max_sweeps` was hit before the stopping rule fired.
    pub converged: bool,
}

enum Gram<'a> {
    Full { n: usize, values: Vec<f64> },
    Lazy {
        rows: &'a [Vec<f64>],
        kernel: Kernel,
        diag: Vec<f64>,
    },
}

impl<'a> Gram<'a> {
    fn new(rows: &'a [Vec<f64>], kernel: Kernel) -> Self {
        let n = rows.len();
        if n <= FULL_GRAM_LIMIT {
            let mut values = vec![0.0; n * n];
            values.par_chunks_mut(n).enumerate().for_each(|(i, out)| {
                for (j, v) in out.iter_mut().enumerate() {
                    *v = kernel.eval(&rows[i], &rows[j]);
                }
            });
            Gram::Full { n, values }
        } else {
            let diag = rows.iter().map(|r| kernel.eval(r, r)).collect();
            Gram::Lazy { rows, kernel, diag }
        }
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        match self {
            Gram::Full { n, values } => values[i * n + j],
            Gram::Lazy { rows, kernel, diag } => {
                if i == j {
                    diag[i]
                } else {
                    kernel.eval(&rows[i], &rows[j])
                }
            }
        }
    }

    /// `out[k] += a * K(i, k) + b * K(j, k)` for every k.
    fn axpy2(&self, i: usize, a: f64, j: usize, b: f64, out: &mut [f64]) {
        match self {
            Gram::Full { n, values } => {
                let (ri, rj) = (&values[i * n..(i + 1) * n], &values[j * n..(j + 1) * n]);
                for ((o, ki), kj) in out.iter_mut().zip(ri).zip(rj) {
                    *o += a * ki + b * kj;
                }
            }
            Gram::Lazy { rows, kernel, .. } => {
                let (xi, xj) = (&rows[i], &rows[j]);
                out.par_iter_mut().enumerate().for_each(|(k, o)| {
                    *o += a * kernel.eval(xi, &rows[k]) + b * kernel.eval(xj, &rows[k]);
                });
            }
        }
    }
}

struct Solver<'a> {
    gram: Gram<'a>,
    y: &'a [f64],
    c: f64,
    tol: f64,
    alphas: Vec<f64>,
    /// `g[k] = Σᵢ αᵢ yᵢ K(i, k)`
    g: Vec<f64>,
    bias: f64,
}

impl Solver<'_> {
    #[inline]
    fn error(&self, k: usize) -> f64 {
        self.g[k] + self.bias - self.y[k]
    }

    fn violates(&self, i: usize) -> bool {
        let r = self.y[i] * self.error(i);
        (r < -self.tol && self.alphas[i] < self.c) || (r > self.tol && self.alphas[i] > 0.0)
    }

    /// Jointly optimizes αᵢ and αⱼ. Returns false when the pair cannot move.
    fn take_step(&mut self, i: usize, j: usize) -> bool {
        if i == j {
            return false;
        }
        let (yi, yj) = (self.y[i], self.y[j]);
        let (ai, aj) = (self.alphas[i], self.alphas[j]);
        let (ei, ej) = (self.error(i), self.error(j));
        let c = self.c;
        let (lo, hi) = if yi != yj {
            ((aj - ai).max(0.0), (c + aj - ai).min(c))
        } else {
            ((ai + aj - c).max(0.0), (ai + aj).min(c))
        };
        if hi - lo < MIN_STEP {
            return false;
        }
        let (kii, kjj, kij) = (self.gram.get(i, i), self.gram.get(j, j), self.gram.get(i, j));
        let eta = 2.0 * kij - kii - kjj;
        if eta >= 0.0 {
            return false;
        }
        let aj_new = (aj - yj * (ei - ej) / eta).clamp(lo, hi);
        if (aj_new - aj).abs() < MIN_STEP {
            return false;
        }
        let ai_new = (ai + yi * yj * (aj - aj_new)).clamp(0.0, c);
        let (dai, daj) = (ai_new - ai, aj_new - aj);

        let b1 = self.bias - ei - yi * dai * kii - yj * daj * kij;
        let b2 = self.bias - ej - yi * dai * kij - yj * daj * kjj;
        self.bias = if ai_new > 0.0 && ai_new < c {
            b1
        } else if aj_new > 0.0 && aj_new < c {
            b2
        } else {
            0.5 * (b1 + b2)
        };
        self.alphas[i] = ai_new;
        self.alphas[j] = aj_new;
        let mut g = std::mem::take(&mut self.g);
        self.gram.axpy2(i, yi * dai, j, yj * daj, &mut g);
        self.g = g;
        true
    }

    fn max_violation_with(&self, bias: f64) -> f64 {
        (0..self.y.len())
            .map(|k| {
                let r = self.y[k] * (self.g[k] + bias - self.y[k]);
                let a = self.alphas[k];
                let mut v: f64 = 0.0;
                if a < self.c {
                    v = v.max(-r);
                }
                if a > 0.0 {
                    v = v.max(r);
                }
                v
            })
            .fold(0.0, f64::max)
    }

    /// Bias from the free multipliers, or the midpoint of the feasible range if none are free.
    fn final_bias(&self) -> f64 {
        let eps = 1e-12 * self.c.max(1.0);
        let mut free_sum = 0.0;
        let mut free_count = 0usize;
        let mut lower = f64::NEG_INFINITY;
        let mut upper = f64::INFINITY;
        for k in 0..self.y.len() {
            let target = self.y[k] - self.g[k];
            let a = self.alphas[k];
            if a > eps && a < self.c - eps {
                free_sum += target;
                free_count += 1;
                continue;
            }
            // αₖ = 0 needs yₖf ≥ 1, αₖ = C needs yₖf ≤ 1
            let at_lower = a <= eps;
            if (self.y[k] > 0.0) == at_lower {
                lower = lower.max(target);
            } else {
                upper = upper.min(target);
            }
        }
        if free_count > 0 {
            free_sum / free_count as f64
        } else if lower.is_finite() && upper.is_finite() {
            0.5 * (lower + upper)
        } else if lower.is_finite() {
            lower
        } else if upper.is_finite() {
            upper
        } else {
            self.bias
        }
    }
}

/// Solves the dual on already standardized rows. `y` holds ±1 targets.
pub fn solve(rows: &[Vec<f64>], y: &[f64], kernel: Kernel, params: &SmoParams) -> DualSolution {
    let n = rows.len();
    let mut solver = Solver {
        gram: Gram::new(rows, kernel),
        y,
        c: params.c,
        tol: params.tol,
        alphas: vec![0.0; n],
        g: vec![0.0; n],
        bias: 0.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut quiet = 0usize;
    let mut sweeps = 0usize;
    let mut updates = 0usize;
    let mut converged = false;

    while sweeps < params.max_sweeps {
        sweeps += 1;
        let exhaustive = quiet >= params.max_passes;
        let mut changed = 0usize;
        for i in 0..n {
            if !solver.violates(i) {
                continue;
            }
            let mut j = rng.gen_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            if solver.take_step(i, j) {
                changed += 1;
                continue;
            }
            if exhaustive {
                let start = rng.gen_range(0..n);
                for t in 0..n {
                    let j = (start + t) % n;
                    if solver.take_step(i, j) {
                        changed += 1;
                        break;
                    }
                }
            }
        }
        updates += changed;
        if changed > 0 {
            quiet = 0;
        } else if exhaustive {
            converged = true;
            break;
        } else {
            quiet += 1;
        }
    }

    // keep whichever bias satisfies the KKT conditions more tightly
    let averaged = solver.final_bias();
    let bias = if solver.max_violation_with(averaged) <= solver.max_violation_with(solver.bias) {
        averaged
    } else {
        solver.bias
    };
    DualSolution {
        alphas: solver.alphas,
        bias,
        sweeps,
        updates,
        converged,
    }
}

/// Largest KKT violation `max(0, 1 − yf)` for α = 0, `|1 − yf|` for free α,
/// `max(0, yf − 1)` for α = C.
pub fn max_kkt_violation(
    rows: &[Vec<f64>],
    y: &[f64],
    kernel: Kernel,
    c: f64,
    sol: &DualSolution,
) -> f64 {
    let eps = 1e-12 * c.max(1.0);
    (0..rows.len())
        .map(|k| {
            let f: f64 = sol
                .alphas
                .iter()
                .zip(rows)
                .zip(y)
                .filter(|((a, _), _)| **a > 0.0)
                .map(|((a, x), yi)| a * yi * kernel.eval(x, &rows[k]))
                .sum::<f64>()
                + sol.bias;
            let margin = y[k] * f;
            let a = sol.alphas[k];
            if a <= eps {
                (1.0 - margin).max(0.0)
            } else if a >= c - eps {
                (margin - 1.0).max(0.0)
            } else {
                (1.0 - margin).abs()
            }
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn two_points() {
        let rows = vec![vec![-1.0], vec![1.0]];
        let y = vec![-1.0, 1.0];
        let sol = solve(&rows, &y, Kernel::Linear, &SmoParams::default());
        assert!(sol.converged);
        assert_abs_diff_eq!(sol.alphas[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.alphas[1], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.bias, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn box_constraint_binds() {
        // overlapping classes force some multipliers to C
        let rows = vec![vec![0.0], vec![0.1], vec![0.2], vec![0.15], vec![-0.05]];
        let y = vec![-1.0, 1.0, -1.0, 1.0, -1.0];
        let params = SmoParams::default();
        let sol = solve(&rows, &y, Kernel::Linear, &params);
        assert!(sol.alphas.iter().all(|&a| (0.0..=params.c).contains(&a)));
        assert!(sol.alphas.iter().any(|&a| a == params.c));
        let sum: f64 = sol.alphas.iter().zip(&y).map(|(a, y)| a * y).sum();
        assert_abs_diff_eq!(sum, 0.0, epsilon = 1e-9);
        assert!(max_kkt_violation(&rows, &y, Kernel::Linear, params.c, &sol) <= params.tol);
    }

    #[test]
    fn same_seed_same_solution() {
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![(i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()])
            .collect();
        let y: Vec<f64> = (0..40).map(|i| if i % 3 == 0 { 1.0 } else { -1.0 }).collect();
        let params = SmoParams {
            seed: 7,
            ..SmoParams::default()
        };
        let a = solve(&rows, &y, Kernel::Rbf { gamma: 0.5 }, &params);
        let b = solve(&rows, &y, Kernel::Rbf { gamma: 0.5 }, &params);
        assert_eq!(a, b);
    }
}
