//! Gray-level co-occurrence matrix and the 19 Haralick-style statistics.

use crate::error::{Error, Result};
use crate::features::{Angle, Extractor, FeatureVector};
use crate::imaging::GrayImage;

/// Names of the GLCM statistics in output order.
pub const GLCM_FEATURE_NAMES: [&str; 19] = [
    "angular_second_moment",
    "contrast",
    "correlation",
    "sum_of_squares_variance",
    "inverse_difference_moment",
    "sum_average",
    "sum_variance",
    "sum_entropy",
    "entropy",
    "difference_entropy",
    "difference_variance",
    "information_measure_of_correlation_1",
    "information_measure_of_correlation_2",
    "autocorrelation",
    "dissimilarity",
    "cluster_shade",
    "cluster_prominence",
    "maximum_probability",
    "inverse_difference",
];

const NORMALIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct CooccurrenceMatrix {
    levels: usize,
    counts: Vec<f64>,
    pub distance: usize,
    pub theta: Angle,
    normalized: bool,
}

impl CooccurrenceMatrix {
    /// Wraps an explicit `levels`x`levels` row-major table.
    pub fn from_table(levels: usize, counts: Vec<f64>, normalized: bool) -> Result<Self> {
        if levels == 0 || counts.len() != levels * levels {
            return Err(Error::DimensionMismatch {
                expected: format!("{levels}x{levels} table"),
                actual: format!("{} entries", counts.len()),
            });
        }
        Ok(Self {
            levels,
            counts,
            distance: 1,
            theta: Angle::Deg0,
            normalized,
        })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.counts[i * self.levels + j]
    }

    pub fn sum(&self) -> f64 {
        self.counts.iter().sum()
    }
}

pub(crate) fn check_levels(img: &GrayImage, levels: usize) -> Result<()> {
    match img.pixels().iter().find(|&&v| v as usize >= levels) {
        Some(&value) => Err(Error::LevelOverflow { value, levels }),
        None => Ok(()),
    }
}

/// Symmetric, normalized co-occurrence counts for pairs `distance` apart along `theta`.
///
/// `img` must already be quantized to `levels` gray levels.
pub fn build_glcm(
    img: &GrayImage,
    levels: usize,
    distance: usize,
    theta: Angle,
) -> Result<CooccurrenceMatrix> {
    check_levels(img, levels)?;
    let (dr, dc) = theta.step();
    let (dr, dc) = (dr * distance as isize, dc * distance as isize);
    let (w, h) = (img.width() as isize, img.height() as isize);
    let mut counts = vec![0.0; levels * levels];
    let mut pairs = 0usize;
    for r in 0..h {
        let r2 = r + dr;
        if r2 < 0 || r2 >= h {
            continue;
        }
        for c in 0..w {
            let c2 = c + dc;
            if c2 < 0 || c2 >= w {
                continue;
            }
            let a = img.get(r as usize, c as usize) as usize;
            let b = img.get(r2 as usize, c2 as usize) as usize;
            counts[a * levels + b] += 1.0;
            counts[b * levels + a] += 1.0;
            pairs += 1;
        }
    }
    if pairs == 0 {
        return Err(Error::EmptyMatrix);
    }
    let total = 2.0 * pairs as f64;
    counts.iter_mut().for_each(|v| *v /= total);
    Ok(CooccurrenceMatrix {
        levels,
        counts,
        distance,
        theta,
        normalized: true,
    })
}

fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        p * p.log2()
    } else {
        0.0
    }
}

/// The 19 GLCM statistics, in [`GLCM_FEATURE_NAMES`] order.
///
/// Gray levels are indexed from 1 and entropies use base 2 with
/// `0 log 0 = 0`. Correlation and both information measures of
/// correlation are 0 when their denominator vanishes.
pub fn glcm_features(m: &CooccurrenceMatrix) -> Result<FeatureVector> {
    let sum = m.sum();
    if !m.normalized || (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::UnnormalizedMatrix(sum));
    }
    let n = m.levels;
    let level = |i: usize| (i + 1) as f64;

    let mut px = vec![0.0; n];
    let mut py = vec![0.0; n];
    let mut p_sum = vec![0.0; 2 * n + 1]; // index k = i + j, 1-based levels: 2..=2n
    let mut p_diff = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            let p = m.get(i, j);
            px[i] += p;
            py[j] += p;
            p_sum[i + j + 2] += p;
            p_diff[i.abs_diff(j)] += p;
        }
    }
    let mu_x: f64 = px.iter().enumerate().map(|(i, p)| level(i) * p).sum();
    let mu_y: f64 = py.iter().enumerate().map(|(j, p)| level(j) * p).sum();
    let var_x: f64 = px.iter().enumerate().map(|(i, p)| (level(i) - mu_x).powi(2) * p).sum();
    let var_y: f64 = py.iter().enumerate().map(|(j, p)| (level(j) - mu_y).powi(2) * p).sum();
    let (sigma_x, sigma_y) = (var_x.sqrt(), var_y.sqrt());

    let mut asm = 0.0;
    let mut contrast = 0.0;
    let mut covariance = 0.0;
    let mut idm = 0.0;
    let mut entropy = 0.0;
    let mut autocorrelation = 0.0;
    let mut dissimilarity = 0.0;
    let mut shade = 0.0;
    let mut prominence = 0.0;
    let mut max_p: f64 = 0.0;
    let mut inverse_difference = 0.0;
    let mut hxy1 = 0.0;
    let mut hxy2 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let p = m.get(i, j);
            let (li, lj) = (level(i), level(j));
            let diff = li - lj;
            asm += p * p;
            contrast += diff * diff * p;
            covariance += (li - mu_x) * (lj - mu_y) * p;
            idm += p / (1.0 + diff * diff);
            entropy -= plogp(p);
            autocorrelation += li * lj * p;
            dissimilarity += diff.abs() * p;
            let t = li + lj - mu_x - mu_y;
            shade += t.powi(3) * p;
            prominence += t.powi(4) * p;
            max_p = max_p.max(p);
            inverse_difference += p / (1.0 + diff.abs());
            let marginal = px[i] * py[j];
            if marginal > 0.0 {
                let log_marginal = marginal.log2();
                hxy1 -= p * log_marginal;
                hxy2 -= marginal * log_marginal;
            }
        }
    }

    let correlation = if sigma_x > 0.0 && sigma_y > 0.0 {
        covariance / (sigma_x * sigma_y)
    } else {
        0.0
    };
    let sum_of_squares = var_x;

    let sum_average: f64 = p_sum.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
    let sum_variance: f64 = p_sum
        .iter()
        .enumerate()
        .map(|(k, p)| (k as f64 - sum_average).powi(2) * p)
        .sum();
    let sum_entropy: f64 = -p_sum.iter().copied().map(plogp).sum::<f64>();

    let difference_entropy: f64 = -p_diff.iter().copied().map(plogp).sum::<f64>();
    let diff_mean: f64 = p_diff.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
    let difference_variance: f64 = p_diff
        .iter()
        .enumerate()
        .map(|(k, p)| (k as f64 - diff_mean).powi(2) * p)
        .sum();

    let hx: f64 = -px.iter().copied().map(plogp).sum::<f64>();
    let hy: f64 = -py.iter().copied().map(plogp).sum::<f64>();
    let h_max = hx.max(hy);
    let imc1 = if h_max > 0.0 {
        (entropy - hxy1) / h_max
    } else {
        0.0
    };
    // mutual information in bits; 1 - exp(-2 I) with I converted to nats
    let mutual = hxy2 - entropy;
    let imc2 = if hx > 0.0 && hy > 0.0 && mutual > 0.0 {
        (1.0 - (-2.0 * std::f64::consts::LN_2 * mutual).exp()).sqrt()
    } else {
        0.0
    };

    FeatureVector::new(
        Extractor::Glcm,
        vec![
            asm,
            contrast,
            correlation,
            sum_of_squares,
            idm,
            sum_average,
            sum_variance,
            sum_entropy,
            entropy,
            difference_entropy,
            difference_variance,
            imc1,
            imc2,
            autocorrelation,
            dissimilarity,
            shade,
            prominence,
            max_p,
            inverse_difference,
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn img(w: usize, h: usize, px: &[u8]) -> GrayImage {
        GrayImage::new(w, h, px.to_vec()).unwrap()
    }

    fn feature(v: &FeatureVector, name: &str) -> f64 {
        let i = GLCM_FEATURE_NAMES.iter().position(|n| *n == name).unwrap();
        v.values[i]
    }

    #[test]
    fn diagonal_pairs() {
        let m = build_glcm(&img(2, 2, &[0, 0, 1, 1]), 2, 1, Angle::Deg0).unwrap();
        assert_eq!(m.counts(), &[0.5, 0.0, 0.0, 0.5]);
    }

    #[test]
    fn off_diagonal_pairs() {
        let m = build_glcm(&img(2, 2, &[0, 1, 0, 1]), 2, 1, Angle::Deg0).unwrap();
        assert_eq!(m.counts(), &[0.0, 0.5, 0.5, 0.0]);
    }

    #[test]
    fn constant_patch_single_entry() {
        let m = build_glcm(&img(4, 4, &[3; 16]), 4, 1, Angle::Deg0).unwrap();
        assert_eq!(m.get(3, 3), 1.0);
        assert_eq!(m.counts().iter().filter(|&&v| v != 0.0).count(), 1);
    }

    #[test]
    fn vertical_direction() {
        // column pairs: (0,1) twice
        let m = build_glcm(&img(2, 2, &[0, 0, 1, 1]), 2, 1, Angle::Deg90).unwrap();
        assert_eq!(m.counts(), &[0.0, 0.5, 0.5, 0.0]);
    }

    #[test]
    fn overflow_rejected() {
        assert!(matches!(
            build_glcm(&img(2, 1, &[0, 4]), 4, 1, Angle::Deg0),
            Err(Error::LevelOverflow { value: 4, levels: 4 })
        ));
    }

    #[test]
    fn no_pairs_is_empty() {
        assert!(matches!(
            build_glcm(&img(1, 3, &[0, 0, 0]), 2, 1, Angle::Deg0),
            Err(Error::EmptyMatrix)
        ));
    }

    #[test]
    fn diagonal_matrix_features() {
        let m = CooccurrenceMatrix::from_table(2, vec![0.5, 0.0, 0.0, 0.5], true).unwrap();
        let f = glcm_features(&m).unwrap();
        assert_eq!(f.len(), 19);
        assert_abs_diff_eq!(feature(&f, "angular_second_moment"), 0.5);
        assert_abs_diff_eq!(feature(&f, "contrast"), 0.0);
        assert_abs_diff_eq!(feature(&f, "maximum_probability"), 0.5);
        assert_abs_diff_eq!(feature(&f, "entropy"), 1.0);
        assert_abs_diff_eq!(feature(&f, "correlation"), 1.0, epsilon = 1e-12);
        // sum distribution: p(2) = p(4) = 0.5
        assert_abs_diff_eq!(feature(&f, "sum_average"), 3.0);
        assert_abs_diff_eq!(feature(&f, "sum_variance"), 1.0);
        assert_abs_diff_eq!(feature(&f, "autocorrelation"), 2.5);
        // HX = HY = 1, HXY = 1, HXY1 = HXY2 = 2
        assert_abs_diff_eq!(feature(&f, "information_measure_of_correlation_1"), -1.0);
        assert_abs_diff_eq!(
            feature(&f, "information_measure_of_correlation_2"),
            (1.0f64 - 0.25).sqrt(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn off_diagonal_contrast() {
        let m = CooccurrenceMatrix::from_table(2, vec![0.0, 0.5, 0.5, 0.0], true).unwrap();
        let f = glcm_features(&m).unwrap();
        assert_abs_diff_eq!(feature(&f, "contrast"), 1.0);
        assert_abs_diff_eq!(feature(&f, "dissimilarity"), 1.0);
        assert_abs_diff_eq!(feature(&f, "correlation"), -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(feature(&f, "inverse_difference_moment"), 0.5);
        assert_abs_diff_eq!(feature(&f, "inverse_difference"), 0.5);
        assert_abs_diff_eq!(feature(&f, "difference_entropy"), 0.0);
    }

    #[test]
    fn single_entry_degenerate() {
        let mut t = vec![0.0; 9];
        t[4] = 1.0;
        let m = CooccurrenceMatrix::from_table(3, t, true).unwrap();
        let f = glcm_features(&m).unwrap();
        assert_eq!(feature(&f, "entropy"), 0.0);
        assert_eq!(feature(&f, "angular_second_moment"), 1.0);
        assert_eq!(feature(&f, "correlation"), 0.0);
        assert_eq!(feature(&f, "information_measure_of_correlation_1"), 0.0);
        assert_eq!(feature(&f, "information_measure_of_correlation_2"), 0.0);
        assert!(f.values.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn unnormalized_rejected() {
        let m = CooccurrenceMatrix::from_table(2, vec![1.0, 1.0, 0.0, 0.0], false).unwrap();
        assert!(matches!(glcm_features(&m), Err(Error::UnnormalizedMatrix(_))));
        let m = CooccurrenceMatrix::from_table(2, vec![0.3, 0.3, 0.3, 0.3], true).unwrap();
        assert!(matches!(glcm_features(&m), Err(Error::UnnormalizedMatrix(_))));
    }
}
