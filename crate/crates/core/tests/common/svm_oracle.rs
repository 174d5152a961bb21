//! Hard-margin linear SVM by exhaustive active-set search.
//!
//! For every candidate support set S (both classes, |S| <= d + 1) the KKT
//! equalities y_i (w.x_i + b) = 1 on S and sum a_j y_j = 0 form a square
//! linear system. A solution with all a_j > 0 that also separates every
//! point with margin >= 1 satisfies all KKT conditions and is the optimum.

use rand::Rng;
use rand_distr::{Distribution, Normal};

pub struct HardMargin {
    pub w: Vec<f64>,
    pub b: f64,
    pub alphas: Vec<f64>,
}

impl HardMargin {
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + self.b
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn solve_dense(mut a: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        rhs.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                rhs[r] -= f * rhs[col];
            }
        }
    }
    Some((0..n).map(|i| rhs[i] / a[i][i]).collect())
}

fn subsets(n: usize, max: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for mask in 1u32..(1 << n) {
        let s: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        if s.len() >= 2 && s.len() <= max {
            out.push(s);
        }
    }
    out
}

pub fn hard_margin(x: &[Vec<f64>], y: &[f64]) -> Option<HardMargin> {
    let d = x[0].len();
    let mut best: Option<HardMargin> = None;
    for s in subsets(x.len(), d + 1) {
        if !(s.iter().any(|&i| y[i] > 0.0) && s.iter().any(|&i| y[i] < 0.0)) {
            continue;
        }
        let m = s.len();
        let mut a = vec![vec![0.0; m + 1]; m + 1];
        let mut rhs = vec![0.0; m + 1];
        for (r, &i) in s.iter().enumerate() {
            for (c, &j) in s.iter().enumerate() {
                a[r][c] = y[i] * y[j] * dot(&x[i], &x[j]);
            }
            a[r][m] = y[i];
            rhs[r] = 1.0;
        }
        for (c, &j) in s.iter().enumerate() {
            a[m][c] = y[j];
        }
        let Some(sol) = solve_dense(a, rhs) else { continue };
        if sol[..m].iter().any(|&v| v <= 1e-12) {
            continue;
        }
        let mut w = vec![0.0; d];
        for (c, &j) in s.iter().enumerate() {
            for k in 0..d {
                w[k] += sol[c] * y[j] * x[j][k];
            }
        }
        let b = sol[m];
        if !(0..x.len()).all(|i| y[i] * (dot(&w, &x[i]) + b) >= 1.0 - 1e-7) {
            continue;
        }
        let mut alphas = vec![0.0; x.len()];
        for (c, &j) in s.iter().enumerate() {
            alphas[j] = sol[c];
        }
        let cand = HardMargin { w, b, alphas };
        if best.as_ref().map_or(true, |h| dot(&cand.w, &cand.w) < dot(&h.w, &h.w)) {
            best = Some(cand);
        }
    }
    best
}

/// A small separable 2-D problem whose hard-margin multipliers all stay at
/// or below `c`, so the soft-margin optimum coincides with it.
pub fn separable_dataset(rng: &mut impl Rng, c: f64) -> (Vec<Vec<f64>>, Vec<f64>, HardMargin) {
    let noise = Normal::new(0.0, 0.6).unwrap();
    loop {
        let n = rng.gen_range(4..=10);
        let angle: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let (ux, uy) = (angle.cos(), angle.sin());
        let sep = rng.gen_range(1.5..3.0);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let t = if i % 2 == 0 { 1.0 } else { -1.0 };
            x.push(vec![
                t * sep * ux + noise.sample(rng),
                t * sep * uy + noise.sample(rng),
            ]);
            y.push(t);
        }
        if let Some(h) = hard_margin(&x, &y) {
            if h.alphas.iter().all(|&a| a <= 0.9 * c) {
                return (x, y, h);
            }
        }
    }
}
