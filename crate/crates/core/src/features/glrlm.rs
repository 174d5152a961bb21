//! Gray-level run-length matrix and its seven run statistics.

use crate::error::{Error, Result};
use crate::features::glcm::check_levels;
use crate::features::{Angle, Extractor, FeatureVector};
use crate::imaging::GrayImage;

pub const GLRLM_FEATURE_NAMES: [&str; 7] = [
    "short_run_emphasis",
    "long_run_emphasis",
    "gray_level_non_uniformity",
    "run_length_non_uniformity",
    "run_percentage",
    "low_gray_level_run_emphasis",
    "high_gray_level_run_emphasis",
];

/// `counts[level][len - 1]` = number of maximal runs of `level` with length `len`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunLengthMatrix {
    levels: usize,
    max_run: usize,
    counts: Vec<u64>,
    pub theta: Angle,
}

impl RunLengthMatrix {
    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn max_run(&self) -> usize {
        self.max_run
    }

    #[inline]
    pub fn get(&self, level: usize, run_index: usize) -> u64 {
        self.counts[level * self.max_run + run_index]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total_runs(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Pixels covered by all runs.
    pub fn covered_pixels(&self) -> u64 {
        self.counts
            .iter()
            .enumerate()
            .map(|(idx, &n)| n * (idx % self.max_run + 1) as u64)
            .sum()
    }
}

/// Counts maximal runs along `theta` in a quantized image.
pub fn build_glrlm(img: &GrayImage, levels: usize, theta: Angle) -> Result<RunLengthMatrix> {
    check_levels(img, levels)?;
    let (w, h) = (img.width() as isize, img.height() as isize);
    let (dr, dc) = theta.step();
    let max_run = match theta {
        Angle::Deg0 => img.width(),
        Angle::Deg90 => img.height(),
        Angle::Deg45 | Angle::Deg135 => img.width().min(img.height()),
    };
    let inside = |r: isize, c: isize| r >= 0 && r < h && c >= 0 && c < w;
    let at = |r: isize, c: isize| img.get(r as usize, c as usize);

    let mut counts = vec![0u64; levels * max_run];
    for r in 0..h {
        for c in 0..w {
            let v = at(r, c);
            // only start a run where the previous pixel along the line differs
            let (pr, pc) = (r - dr, c - dc);
            if inside(pr, pc) && at(pr, pc) == v {
                continue;
            }
            let mut len = 1;
            let (mut nr, mut nc) = (r + dr, c + dc);
            while inside(nr, nc) && at(nr, nc) == v {
                len += 1;
                nr += dr;
                nc += dc;
            }
            counts[v as usize * max_run + len - 1] += 1;
        }
    }
    Ok(RunLengthMatrix {
        levels,
        max_run,
        counts,
        theta,
    })
}

/// SRE, LRE, GLN, RLN, RP, LGRE, HGRE, each normalized by the run count.
/// Gray levels are 1-based in the gray-level emphases.
pub fn glrlm_features(m: &RunLengthMatrix, num_pixels: usize) -> Result<FeatureVector> {
    let n_runs = m.total_runs();
    if n_runs == 0 {
        return Err(Error::EmptyMatrix);
    }
    if num_pixels == 0 {
        return Err(Error::EmptyInput("pixel count is zero".into()));
    }
    let nr = n_runs as f64;
    let mut sre = 0.0;
    let mut lre = 0.0;
    let mut lgre = 0.0;
    let mut hgre = 0.0;
    let mut per_level = vec![0.0; m.levels];
    let mut per_length = vec![0.0; m.max_run];
    for level in 0..m.levels {
        let g = (level + 1) as f64;
        for run in 0..m.max_run {
            let p = m.get(level, run) as f64;
            if p == 0.0 {
                continue;
            }
            let j = (run + 1) as f64;
            sre += p / (j * j);
            lre += p * j * j;
            lgre += p / (g * g);
            hgre += p * g * g;
            per_level[level] += p;
            per_length[run] += p;
        }
    }
    let gln: f64 = per_level.iter().map(|s| s * s).sum();
    let rln: f64 = per_length.iter().map(|s| s * s).sum();
    FeatureVector::new(
        Extractor::Glrlm,
        vec![
            sre / nr,
            lre / nr,
            gln / nr,
            rln / nr,
            nr / num_pixels as f64,
            lgre / nr,
            hgre / nr,
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn row(px: &[u8]) -> GrayImage {
        GrayImage::new(px.len(), 1, px.to_vec()).unwrap()
    }

    #[test]
    fn short_row() {
        let m = build_glrlm(&row(&[0, 0, 1]), 2, Angle::Deg0).unwrap();
        assert_eq!(m.get(0, 1), 1);
        assert_eq!(m.get(1, 0), 1);
        assert_eq!(m.total_runs(), 2);
    }

    #[test]
    fn constant_square() {
        let img = GrayImage::filled(5, 5, 2).unwrap();
        let m = build_glrlm(&img, 4, Angle::Deg0).unwrap();
        assert_eq!(m.get(2, 4), 5);
        assert_eq!(m.total_runs(), 5);
    }

    #[test]
    fn alternating_row() {
        let m = build_glrlm(&row(&[0, 1, 0, 1]), 2, Angle::Deg0).unwrap();
        assert_eq!(m.get(0, 0), 2);
        assert_eq!(m.get(1, 0), 2);
        assert_eq!(m.total_runs(), 4);
    }

    #[test]
    fn diagonal_runs() {
        // identity-like 3x3: main anti-diagonal (45°) of ones
        let img = GrayImage::new(3, 3, vec![0, 0, 1, 0, 1, 0, 1, 0, 0]).unwrap();
        let m = build_glrlm(&img, 2, Angle::Deg45).unwrap();
        assert_eq!(m.get(1, 2), 1);
        assert_eq!(m.covered_pixels(), 9);
    }

    #[test]
    fn short_row_features() {
        let m = build_glrlm(&row(&[0, 0, 1]), 2, Angle::Deg0).unwrap();
        let f = glrlm_features(&m, 3).unwrap();
        assert_abs_diff_eq!(f.values[0], 0.625);
        assert_abs_diff_eq!(f.values[1], 2.5);
        assert_abs_diff_eq!(f.values[2], 1.0);
        assert_abs_diff_eq!(f.values[3], 1.0);
        assert_abs_diff_eq!(f.values[4], 2.0 / 3.0);
        assert_abs_diff_eq!(f.values[5], (1.0 + 0.25) / 2.0);
        assert_abs_diff_eq!(f.values[6], (1.0 + 4.0) / 2.0);
    }

    #[test]
    fn single_run_percentage() {
        let m = build_glrlm(&row(&[3; 6]), 4, Angle::Deg0).unwrap();
        let f = glrlm_features(&m, 6).unwrap();
        assert_abs_diff_eq!(f.values[4], 1.0 / 6.0);
    }

    #[test]
    fn unit_runs_collapse_emphases() {
        let m = build_glrlm(&row(&[0, 1, 0, 1, 2]), 3, Angle::Deg0).unwrap();
        let f = glrlm_features(&m, 5).unwrap();
        assert_eq!(f.values[0], 1.0);
        assert_eq!(f.values[1], 1.0);
    }

    #[test]
    fn empty_matrix_rejected() {
        let m = RunLengthMatrix {
            levels: 2,
            max_run: 2,
            counts: vec![0; 4],
            theta: Angle::Deg0,
        };
        assert!(matches!(glrlm_features(&m, 4), Err(Error::EmptyMatrix)));
    }
}
