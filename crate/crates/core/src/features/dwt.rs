//! Single-level 2-D Haar (db1) transform with orthonormal filters.

use crate::error::{Error, Result};
use crate::features::{Extractor, FeatureVector};
use crate::imaging::{GrayImage, Patch};

/// The four half-resolution sub-bands, each row-major `width/2` x `height/2`.
///
/// `lh` holds horizontal detail (low-pass along rows, high-pass along
/// columns), `hl` vertical detail, `hh` diagonal detail.
#[derive(Debug, Clone, PartialEq)]
pub struct HaarBands {
    pub width: usize,
    pub height: usize,
    pub ll: Vec<f64>,
    pub lh: Vec<f64>,
    pub hl: Vec<f64>,
    pub hh: Vec<f64>,
}

impl HaarBands {
    pub fn energy(&self) -> f64 {
        [&self.ll, &self.lh, &self.hl, &self.hh]
            .iter()
            .flat_map(|b| b.iter())
            .map(|v| v * v)
            .sum()
    }
}

/// Forward transform of a `width`x`height` row-major signal. Both dimensions must be even.
pub fn haar2d(data: &[f64], width: usize, height: usize) -> Result<HaarBands> {
    if !width.is_multiple_of(2) || !height.is_multiple_of(2) || width == 0 || height == 0 {
        return Err(Error::OddDimensions { width, height });
    }
    if data.len() != width * height {
        return Err(Error::DimensionMismatch {
            expected: format!("{} samples", width * height),
            actual: format!("{} samples", data.len()),
        });
    }
    let (bw, bh) = (width / 2, height / 2);
    let n = bw * bh;
    let mut bands = HaarBands {
        width: bw,
        height: bh,
        ll: Vec::with_capacity(n),
        lh: Vec::with_capacity(n),
        hl: Vec::with_capacity(n),
        hh: Vec::with_capacity(n),
    };
    // separable 1/√2 filters along rows and columns give an overall factor of 1/2
    for r in 0..bh {
        let top = &data[2 * r * width..(2 * r + 1) * width];
        let bottom = &data[(2 * r + 1) * width..(2 * r + 2) * width];
        for c in 0..bw {
            let (a, b) = (top[2 * c], top[2 * c + 1]);
            let (d, e) = (bottom[2 * c], bottom[2 * c + 1]);
            bands.ll.push((a + b + d + e) * 0.5);
            bands.lh.push((a + b - d - e) * 0.5);
            bands.hl.push((a - b + d - e) * 0.5);
            bands.hh.push((a - b - d + e) * 0.5);
        }
    }
    Ok(bands)
}

/// Exact inverse of [`haar2d`].
pub fn inverse_haar2d(bands: &HaarBands) -> Vec<f64> {
    let (bw, bh) = (bands.width, bands.height);
    let width = 2 * bw;
    let mut out = vec![0.0; width * 2 * bh];
    for r in 0..bh {
        for c in 0..bw {
            let k = r * bw + c;
            let (ll, lh, hl, hh) = (bands.ll[k], bands.lh[k], bands.hl[k], bands.hh[k]);
            out[2 * r * width + 2 * c] = (ll + lh + hl + hh) * 0.5;
            out[2 * r * width + 2 * c + 1] = (ll + lh - hl - hh) * 0.5;
            out[(2 * r + 1) * width + 2 * c] = (ll - lh + hl - hh) * 0.5;
            out[(2 * r + 1) * width + 2 * c + 1] = (ll - lh - hl + hh) * 0.5;
        }
    }
    out
}

pub fn haar_image(img: &GrayImage) -> Result<HaarBands> {
    let data: Vec<f64> = img.pixels().iter().map(|&p| p as f64).collect();
    haar2d(&data, img.width(), img.height())
}

/// Row-major LL coefficients, computed on raw intensities.
pub fn dwt_ll(patch: &Patch) -> Result<FeatureVector> {
    FeatureVector::new(Extractor::Dwt, haar_image(patch.image())?.ll)
}
