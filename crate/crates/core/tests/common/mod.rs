//! Shared fixtures: synthetic texture corpora and brute-force matrix oracles.
#![allow(dead_code)]

pub mod oracles;
pub mod svm_oracle;

use std::path::Path;

use patchtex::imaging::{write_manifest, GrayImage, Label, Patch, SubsetManifest};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn clamp_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// A few wide Gaussian bumps on a flat background, with mild sensor noise.
pub fn smooth_blob(size: usize, rng: &mut impl Rng) -> GrayImage {
    let noise = Normal::new(0.0, 3.0).unwrap();
    let bumps: Vec<(f64, f64, f64, f64)> = (0..3)
        .map(|_| {
            (
                rng.gen_range(0.0..size as f64),
                rng.gen_range(0.0..size as f64),
                rng.gen_range(size as f64 / 4.0..size as f64 / 2.0),
                rng.gen_range(-60.0..60.0),
            )
        })
        .collect();
    let base = rng.gen_range(90.0..150.0);
    let px = (0..size * size)
        .map(|i| {
            let (r, c) = ((i / size) as f64, (i % size) as f64);
            let v: f64 = bumps
                .iter()
                .map(|&(br, bc, s, a)| a * (-((r - br).powi(2) + (c - bc).powi(2)) / (2.0 * s * s)).exp())
                .sum();
            clamp_u8(base + v + noise.sample(rng))
        })
        .collect();
    GrayImage::new(size, size, px).unwrap()
}

/// Independent per-pixel noise around a random mean.
pub fn speckle(size: usize, rng: &mut impl Rng) -> GrayImage {
    let base = rng.gen_range(90.0..150.0);
    let noise = Normal::new(0.0, 35.0).unwrap();
    let px = (0..size * size).map(|_| clamp_u8(base + noise.sample(rng))).collect();
    GrayImage::new(size, size, px).unwrap()
}

/// `n` speckle patches labeled coronavirus followed by `n` smooth patches.
pub fn texture_corpus(n: usize, size: usize, seed: u64) -> Vec<Patch> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(2 * n);
    for i in 0..2 * n {
        let (img, label) = if i < n {
            (speckle(size, &mut rng), Label::Coronavirus)
        } else {
            (smooth_blob(size, &mut rng), Label::NonCoronavirus)
        };
        out.push(Patch::new(img, label, format!("synthetic{}", i / 8), (0, 0)).unwrap());
    }
    out
}

pub fn write_corpus(dir: &Path, n: usize, size: usize, seed: u64) -> SubsetManifest {
    write_manifest(&texture_corpus(n, size, seed), dir).unwrap()
}

pub fn random_image(w: usize, h: usize, levels: u8, rng: &mut impl Rng) -> GrayImage {
    let px = (0..w * h).map(|_| rng.gen_range(0..levels)).collect();
    GrayImage::new(w, h, px).unwrap()
}

use patchtex::evaluation::{CvSummary, Metric, MetricSet};
use patchtex::experiment::{ExperimentReport, ReportProvenance, ReportRow};
use patchtex::features::Extractor;

fn set(v: [f64; 5], degenerate: Vec<Metric>) -> MetricSet {
    MetricSet {
        sensitivity: v[0],
        specificity: v[1],
        accuracy: v[2],
        precision: v[3],
        f_score: v[4],
        degenerate,
    }
}

fn row(subset: &str, extractor: Extractor, n: usize, k: usize, mean: MetricSet, std: MetricSet) -> ReportRow {
    ReportRow {
        subset: subset.into(),
        stage: extractor.stage(),
        extractor,
        n_features: n,
        k,
        summary: CvSummary {
            k,
            per_fold: Vec::new(),
            confusion: Vec::new(),
            mean,
            std,
        },
        model: None,
    }
}

/// Fixed report behind the golden render files.
pub fn golden_report() -> ExperimentReport {
    ExperimentReport {
        provenance: ReportProvenance {
            fingerprint: "abc123".into(),
            seed: 42,
            version: "0.1.0".into(),
        },
        rows: vec![
            row(
                "Subset 1",
                Extractor::Raw,
                256,
                2,
                set([0.8397, 0.7699, 0.802, 0.7567, 0.796], vec![]),
                set([0.021, 0.01, 0.004, 0.004, 0.007], vec![]),
            ),
            row(
                "Subset 1",
                Extractor::Glcm,
                19,
                10,
                set([0.9852, 0.9923, 0.9891, 0.991, 0.9881], vec![]),
                set([0.003, 0.004, 0.002, 0.004, 0.002], vec![]),
            ),
            row(
                "Subset 2",
                Extractor::Ldp,
                1024,
                5,
                set([0.431, 0.514, 0.476, 0.0, 0.4288], vec![Metric::Precision]),
                set([0.044, 0.023, 0.038, 0.0, 0.042], vec![]),
            ),
        ],
    }
}
