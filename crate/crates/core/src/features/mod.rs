//! Texture feature extractors.
//!
//! Every extractor maps a [`Patch`] to a [`FeatureVector`] whose length
//! depends only on the extractor and the patch size:
//!
//! | extractor | length        |
//! |-----------|---------------|
//! | RAW       | size²         |
//! | GLCM      | 19            |
//! | LDP       | size²         |
//! | GLRLM     | 7             |
//! | GLSZM     | 13            |
//! | DWT       | (size / 2)²   |

pub mod dwt;
pub mod glcm;
pub mod glrlm;
pub mod glszm;
pub mod io;
pub mod ldp;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{quantize, GrayImage, Patch};

pub use dwt::{dwt_ll, haar2d, inverse_haar2d, HaarBands};
pub use glcm::{build_glcm, glcm_features, CooccurrenceMatrix, GLCM_FEATURE_NAMES};
pub use glrlm::{build_glrlm, glrlm_features, RunLengthMatrix, GLRLM_FEATURE_NAMES};
pub use glszm::{build_glszm, glszm_features, SizeZoneMatrix, GLSZM_FEATURE_NAMES};
pub use ldp::{ldp_map, ldp_vector};

/// Feature families, including the raw-pixel baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Extractor {
    Raw,
    Glcm,
    Ldp,
    Glrlm,
    Glszm,
    Dwt,
}

impl Extractor {
    pub const ALL: [Extractor; 6] = [
        Extractor::Raw,
        Extractor::Glcm,
        Extractor::Ldp,
        Extractor::Glrlm,
        Extractor::Glszm,
        Extractor::Dwt,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Extractor::Raw => "RAW",
            Extractor::Glcm => "GLCM",
            Extractor::Ldp => "LDP",
            Extractor::Glrlm => "GLRLM",
            Extractor::Glszm => "GLSZM",
            Extractor::Dwt => "DWT",
        }
    }

    /// Output length for a square patch of the given edge length.
    pub fn feature_len(self, patch_size: usize) -> usize {
        match self {
            Extractor::Raw | Extractor::Ldp => patch_size * patch_size,
            Extractor::Glcm => glcm::GLCM_FEATURE_NAMES.len(),
            Extractor::Glrlm => glrlm::GLRLM_FEATURE_NAMES.len(),
            Extractor::Glszm => glszm::GLSZM_FEATURE_NAMES.len(),
            Extractor::Dwt => (patch_size / 2) * (patch_size / 2),
        }
    }

    /// Column names in output order.
    pub fn feature_names(self, patch_size: usize) -> Vec<String> {
        let named = |names: &[&str]| names.iter().map(|s| s.to_string()).collect();
        match self {
            Extractor::Glcm => named(&glcm::GLCM_FEATURE_NAMES),
            Extractor::Glrlm => named(&glrlm::GLRLM_FEATURE_NAMES),
            Extractor::Glszm => named(&glszm::GLSZM_FEATURE_NAMES),
            Extractor::Raw | Extractor::Ldp | Extractor::Dwt => {
                let prefix = match self {
                    Extractor::Raw => "px",
                    Extractor::Ldp => "ldp",
                    _ => "ll",
                };
                (0..self.feature_len(patch_size))
                    .map(|i| format!("{prefix}_{i}"))
                    .collect()
            }
        }
    }

    /// RAW is the stage-1 baseline; everything else is a stage-2 extractor.
    pub fn stage(self) -> u8 {
        if self == Extractor::Raw {
            1
        } else {
            2
        }
    }
}

impl fmt::Display for Extractor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Extractor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Extractor::ALL
            .into_iter()
            .find(|e| e.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownExtractor(s.to_string()))
    }
}

/// Direction of the pixel pairs (GLCM) and runs (GLRLM).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Angle {
    #[default]
    Deg0,
    Deg45,
    Deg90,
    Deg135,
}

impl Angle {
    pub fn degrees(self) -> u32 {
        match self {
            Angle::Deg0 => 0,
            Angle::Deg45 => 45,
            Angle::Deg90 => 90,
            Angle::Deg135 => 135,
        }
    }

    pub fn from_degrees(deg: u32) -> Result<Self> {
        match deg {
            0 => Ok(Angle::Deg0),
            45 => Ok(Angle::Deg45),
            90 => Ok(Angle::Deg90),
            135 => Ok(Angle::Deg135),
            other => Err(Error::UnsupportedAngle(other)),
        }
    }

    /// Unit step `(drow, dcol)`. Rows grow downward, so 45° points up and right.
    pub fn step(self) -> (isize, isize) {
        match self {
            Angle::Deg0 => (0, 1),
            Angle::Deg45 => (-1, 1),
            Angle::Deg90 => (-1, 0),
            Angle::Deg135 => (-1, -1),
        }
    }
}

impl Serialize for Angle {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_u32(self.degrees())
    }
}

impl<'de> Deserialize<'de> for Angle {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let deg = u32::deserialize(d)?;
        Angle::from_degrees(deg).map_err(serde::de::Error::custom)
    }
}

/// Pixel adjacency used to grow size zones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Connectivity {
    Four,
    #[default]
    Eight,
}

impl Connectivity {
    pub fn from_u8(n: u8) -> Result<Self> {
        match n {
            4 => Ok(Connectivity::Four),
            8 => Ok(Connectivity::Eight),
            other => Err(Error::UnsupportedConnectivity(other)),
        }
    }

    pub fn as_u8(self) -> u8 {
        match self {
            Connectivity::Four => 4,
            Connectivity::Eight => 8,
        }
    }

    pub(crate) fn offsets(self) -> &'static [(isize, isize)] {
        match self {
            Connectivity::Four => &[(-1, 0), (0, -1), (0, 1), (1, 0)],
            Connectivity::Eight => &[
                (-1, -1),
                (-1, 0),
                (-1, 1),
                (0, -1),
                (0, 1),
                (1, -1),
                (1, 0),
                (1, 1),
            ],
        }
    }
}

impl Serialize for Connectivity {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_u8(self.as_u8())
    }
}

impl<'de> Deserialize<'de> for Connectivity {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Connectivity::from_u8(u8::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

/// Parameters shared by the matrix-based extractors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    /// Gray levels for GLCM, GLRLM and GLSZM (2..=256).
    pub levels: usize,
    /// GLCM pixel-pair distance.
    #[serde(rename = "d")]
    pub distance: usize,
    /// Direction for GLCM pairs and GLRLM runs.
    pub theta: Angle,
    pub connectivity: Connectivity,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            levels: 32,
            distance: 1,
            theta: Angle::Deg0,
            connectivity: Connectivity::Eight,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(2..=256).contains(&self.levels) {
            return Err(Error::InvalidLevelCount(self.levels));
        }
        if self.distance == 0 {
            return Err(Error::Config("GLCM distance must be at least 1".into()));
        }
        Ok(())
    }

    /// Stable textual key identifying every parameter that changes extractor output.
    pub fn fingerprint(&self) -> String {
        format!(
            "levels={};d={};theta={};connectivity={}",
            self.levels,
            self.distance,
            self.theta.degrees(),
            self.connectivity.as_u8()
        )
    }

    /// Inverse of [`FeatureConfig::fingerprint`].
    pub fn from_fingerprint(s: &str) -> Result<Self> {
        let mut cfg = FeatureConfig::default();
        for part in s.split(';').filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::InvalidFeatureFile(format!("bad config field {part:?}")))?;
            let num = |v: &str| {
                v.parse::<usize>()
                    .map_err(|_| Error::InvalidFeatureFile(format!("bad value in {part:?}")))
            };
            match key {
                "levels" => cfg.levels = num(value)?,
                "d" => cfg.distance = num(value)?,
                "theta" => cfg.theta = Angle::from_degrees(num(value)? as u32)?,
                "connectivity" => cfg.connectivity = Connectivity::from_u8(num(value)? as u8)?,
                _ => return Err(Error::InvalidFeatureFile(format!("unknown config key {key:?}"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Ordered feature values tagged with the extractor that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub extractor: Extractor,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(extractor: Extractor, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput("feature vector".into()));
        }
        if let Some(col) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteFeature { row: 0, col });
        }
        Ok(Self { extractor, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Row-major pixels scaled to [0, 1].
pub fn raw_vector(patch: &Patch) -> Result<FeatureVector> {
    FeatureVector::new(Extractor::Raw, scale_unit(patch.pixels()))
}

pub(crate) fn scale_unit(pixels: &[u8]) -> Vec<f64> {
    pixels.iter().map(|&p| p as f64 / 255.0).collect()
}

fn quantized(patch: &Patch, config: &FeatureConfig) -> Result<GrayImage> {
    quantize(patch.image(), config.levels)
}

/// Runs one extractor on one patch.
pub fn extract(patch: &Patch, extractor: Extractor, config: &FeatureConfig) -> Result<FeatureVector> {
    config.validate()?;
    match extractor {
        Extractor::Raw => raw_vector(patch),
        Extractor::Glcm => {
            let q = quantized(patch, config)?;
            let m = build_glcm(&q, config.levels, config.distance, config.theta)?;
            glcm_features(&m)
        }
        Extractor::Ldp => ldp_vector(patch),
        Extractor::Glrlm => {
            let q = quantized(patch, config)?;
            let m = build_glrlm(&q, config.levels, config.theta)?;
            glrlm_features(&m, q.len())
        }
        Extractor::Glszm => {
            let q = quantized(patch, config)?;
            let m = build_glszm(&q, config.levels, config.connectivity)?;
            glszm_features(&m, q.len())
        }
        Extractor::Dwt => dwt_ll(patch),
    }
}

/// Extracts features for every patch, in parallel, preserving order.
pub fn extract_all(
    patches: &[Patch],
    extractor: Extractor,
    config: &FeatureConfig,
) -> Result<Vec<FeatureVector>> {
    use rayon::prelude::*;
    patches
        .par_iter()
        .enumerate()
        .map(|(row, p)| {
            extract(p, extractor, config).map_err(|e| match e {
                Error::NonFiniteFeature { col, .. } => Error::NonFiniteFeature { row, col },
                other => other,
            })
        })
        .collect()
}
