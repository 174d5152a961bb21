//! Gray-level size-zone matrix: connected regions of equal gray level,
//! counted by (level, zone size).

use crate::error::{Error, Result};
use crate::features::glcm::check_levels;
use crate::features::{Connectivity, Extractor, FeatureVector};
use crate::imaging::GrayImage;

pub const GLSZM_FEATURE_NAMES: [&str; 13] = [
    "small_zone_emphasis",
    "large_zone_emphasis",
    "gray_level_non_uniformity",
    "zone_size_non_uniformity",
    "zone_percentage",
    "low_gray_level_zone_emphasis",
    "high_gray_level_zone_emphasis",
    "small_zone_low_gray_level_emphasis",
    "small_zone_high_gray_level_emphasis",
    "large_zone_low_gray_level_emphasis",
    "large_zone_high_gray_level_emphasis",
    "gray_level_variance",
    "zone_size_variance",
];

/// `counts[level][size - 1]` = number of zones of `level` with `size` pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SizeZoneMatrix {
    levels: usize,
    max_zone: usize,
    counts: Vec<u64>,
    pub connectivity: Connectivity,
}

impl SizeZoneMatrix {
    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn max_zone(&self) -> usize {
        self.max_zone
    }

    #[inline]
    pub fn get(&self, level: usize, size_index: usize) -> u64 {
        self.counts[level * self.max_zone + size_index]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total_zones(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn covered_pixels(&self) -> u64 {
        self.counts
            .iter()
            .enumerate()
            .map(|(idx, &n)| n * (idx % self.max_zone + 1) as u64)
            .sum()
    }
}

/// Labels connected components with an explicit-stack flood fill.
pub fn build_glszm(
    img: &GrayImage,
    levels: usize,
    connectivity: Connectivity,
) -> Result<SizeZoneMatrix> {
    check_levels(img, levels)?;
    let (w, h) = (img.width(), img.height());
    let mut zones = Vec::new();
    let mut visited = vec![false; w * h];
    let mut stack = Vec::new();
    let offsets = connectivity.offsets();

    for start in 0..w * h {
        if visited[start] {
            continue;
        }
        let value = img.pixels()[start];
        visited[start] = true;
        stack.push(start);
        let mut size = 0usize;
        while let Some(idx) = stack.pop() {
            size += 1;
            let (r, c) = ((idx / w) as isize, (idx % w) as isize);
            for &(dr, dc) in offsets {
                let (nr, nc) = (r + dr, c + dc);
                if nr < 0 || nc < 0 || nr >= h as isize || nc >= w as isize {
                    continue;
                }
                let n = nr as usize * w + nc as usize;
                if !visited[n] && img.pixels()[n] == value {
                    visited[n] = true;
                    stack.push(n);
                }
            }
        }
        zones.push((value as usize, size));
    }
    // columns run up to the largest zone actually present
    let max_zone = zones.iter().map(|&(_, s)| s).max().unwrap_or(1);
    let mut counts = vec![0u64; levels * max_zone];
    for (value, size) in zones {
        counts[value * max_zone + size - 1] += 1;
    }
    Ok(SizeZoneMatrix {
        levels,
        max_zone,
        counts,
        connectivity,
    })
}

/// The 13 zone statistics, normalized by the zone count. Gray levels are
/// 1-based; the two variances use the zone-frequency distribution `p / N_z`.
pub fn glszm_features(m: &SizeZoneMatrix, num_pixels: usize) -> Result<FeatureVector> {
    let n_zones = m.total_zones();
    if n_zones == 0 {
        return Err(Error::EmptyMatrix);
    }
    if num_pixels == 0 {
        return Err(Error::EmptyInput("pixel count is zero".into()));
    }
    let nz = n_zones as f64;

    let mut sze = 0.0;
    let mut lze = 0.0;
    let mut lgze = 0.0;
    let mut hgze = 0.0;
    let mut szlge = 0.0;
    let mut szhge = 0.0;
    let mut lzlge = 0.0;
    let mut lzhge = 0.0;
    let mut mean_level = 0.0;
    let mut mean_size = 0.0;
    let mut per_level = vec![0.0; m.levels];
    let mut per_size = vec![0.0; m.max_zone];
    let mut nonzero = Vec::new();

    for level in 0..m.levels {
        let g = (level + 1) as f64;
        let g2 = g * g;
        for size in 0..m.max_zone {
            let p = m.get(level, size) as f64;
            if p == 0.0 {
                continue;
            }
            let s = (size + 1) as f64;
            let s2 = s * s;
            sze += p / s2;
            lze += p * s2;
            lgze += p / g2;
            hgze += p * g2;
            szlge += p / (g2 * s2);
            szhge += p * g2 / s2;
            lzlge += p * s2 / g2;
            lzhge += p * g2 * s2;
            per_level[level] += p;
            per_size[size] += p;
            let freq = p / nz;
            mean_level += freq * g;
            mean_size += freq * s;
            nonzero.push((g, s, freq));
        }
    }
    let gln: f64 = per_level.iter().map(|v| v * v).sum();
    let szn: f64 = per_size.iter().map(|v| v * v).sum();
    let glv: f64 = nonzero
        .iter()
        .map(|&(g, _, f)| f * (g - mean_level).powi(2))
        .sum();
    let zsv: f64 = nonzero
        .iter()
        .map(|&(_, s, f)| f * (s - mean_size).powi(2))
        .sum();

    FeatureVector::new(
        Extractor::Glszm,
        vec![
            sze / nz,
            lze / nz,
            gln / nz,
            szn / nz,
            nz / num_pixels as f64,
            lgze / nz,
            hgze / nz,
            szlge / nz,
            szhge / nz,
            lzlge / nz,
            lzhge / nz,
            glv,
            zsv,
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn img(w: usize, px: &[u8]) -> GrayImage {
        GrayImage::new(w, px.len() / w, px.to_vec()).unwrap()
    }

    #[test]
    fn l_shaped_zone() {
        let m = build_glszm(&img(2, &[0, 0, 0, 1]), 2, Connectivity::Eight).unwrap();
        assert_eq!(m.get(0, 2), 1);
        assert_eq!(m.get(1, 0), 1);
        assert_eq!(m.total_zones(), 2);
    }

    #[test]
    fn constant_is_one_zone() {
        let m = build_glszm(&GrayImage::filled(4, 4, 1).unwrap(), 2, Connectivity::Four).unwrap();
        assert_eq!(m.max_zone(), 16);
        assert_eq!(m.get(1, 15), 1);
        assert_eq!(m.total_zones(), 1);
    }

    #[test]
    fn checkerboard_connectivity() {
        let board = img(2, &[0, 1, 1, 0]);
        let four = build_glszm(&board, 2, Connectivity::Four).unwrap();
        assert_eq!(four.total_zones(), 4);
        assert_eq!(four.get(0, 0) + four.get(1, 0), 4);
        let eight = build_glszm(&board, 2, Connectivity::Eight).unwrap();
        assert_eq!(eight.total_zones(), 2);
        assert_eq!(eight.get(0, 1), 1);
        assert_eq!(eight.get(1, 1), 1);
    }

    #[test]
    fn zone_percentage() {
        let m = build_glszm(&img(2, &[0, 0, 0, 1]), 2, Connectivity::Eight).unwrap();
        let f = glszm_features(&m, 4).unwrap();
        assert_abs_diff_eq!(f.values[4], 0.5);
        // sizes 3 and 1
        assert_abs_diff_eq!(f.values[0], (1.0 / 9.0 + 1.0) / 2.0);
        assert_abs_diff_eq!(f.values[1], (9.0 + 1.0) / 2.0);
        // levels 1 and 2: mean 1.5, variance 0.25; sizes 3 and 1: mean 2, variance 1
        assert_abs_diff_eq!(f.values[11], 0.25);
        assert_abs_diff_eq!(f.values[12], 1.0);
    }

    #[test]
    fn single_zone_uniformities() {
        let m = build_glszm(&GrayImage::filled(3, 3, 0).unwrap(), 4, Connectivity::Eight).unwrap();
        let f = glszm_features(&m, 9).unwrap();
        assert_eq!(f.values[2], 1.0);
        assert_eq!(f.values[3], 1.0);
        assert_eq!(f.values[11], 0.0);
        assert_eq!(f.values[12], 0.0);
    }

    #[test]
    fn unit_zones() {
        let board = img(2, &[0, 1, 1, 0]);
        let m = build_glszm(&board, 2, Connectivity::Four).unwrap();
        let f = glszm_features(&m, 4).unwrap();
        assert_eq!(f.values[0], 1.0);
        assert_eq!(f.values[1], 1.0);
    }

    #[test]
    fn overflow_rejected() {
        assert!(matches!(
            build_glszm(&img(2, &[0, 9]), 4, Connectivity::Eight),
            Err(Error::LevelOverflow { .. })
        ));
    }
}
