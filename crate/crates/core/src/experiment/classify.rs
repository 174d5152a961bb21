use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::classifier::EnsembleModel;
use crate::error::{Error, Result};
use crate::features::io::write_atomic;
use crate::features::{extract, Extractor, FeatureConfig};
use crate::imaging::{encode_pgm, GrayImage, Label, Patch};

pub const DEFAULT_TILE_SIZE: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatchPrediction {
    /// `(row, col)` of the tile's top-left pixel.
    pub origin: (usize, usize),
    pub label: Label,
    pub positive_votes: usize,
    pub negative_votes: usize,
    pub mean_decision: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifyOutput {
    pub width: usize,
    pub height: usize,
    pub tile_size: usize,
    pub predictions: Vec<PatchPrediction>,
}

impl ClassifyOutput {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("row,col,label,positive_votes,negative_votes,mean_decision\n");
        for p in &self.predictions {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                p.origin.0, p.origin.1, p.label, p.positive_votes, p.negative_votes, p.mean_decision
            );
        }
        out
    }

    /// Image-sized map where each tile holds its share of positive votes
    /// scaled to 0..=255. Pixels outside the tile grid are 0.
    pub fn heat_mask(&self) -> GrayImage {
        let mut px = vec![0u8; self.width * self.height];
        for p in &self.predictions {
            let votes = p.positive_votes + p.negative_votes;
            let v = (255.0 * p.positive_votes as f64 / votes.max(1) as f64).round() as u8;
            for r in p.origin.0..p.origin.0 + self.tile_size {
                px[r * self.width + p.origin.1..r * self.width + p.origin.1 + self.tile_size].fill(v);
            }
        }
        GrayImage::new(self.width, self.height, px).expect("dimensions come from a valid image")
    }

    pub fn positive_count(&self) -> usize {
        self.predictions.iter().filter(|p| p.label.is_positive()).count()
    }

    /// Writes `predictions.csv` and `heatmap.pgm` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<(PathBuf, PathBuf)> {
        let dir = dir.as_ref();
        let csv = dir.join("predictions.csv");
        let pgm = dir.join("heatmap.pgm");
        write_atomic(&csv, self.to_csv().as_bytes())?;
        write_atomic(&pgm, &encode_pgm(&self.heat_mask()))?;
        Ok((csv, pgm))
    }
}

/// Tiles `image` into `tile_size` squares (partial edge tiles dropped),
/// extracts `extractor` features from each and labels it by ensemble vote.
///
/// The ensemble's recorded extractor, patch size and feature settings must
/// agree with the request, and its input dimension must equal the
/// extractor's output length.
pub fn classify_image(
    image: &GrayImage,
    tile_size: usize,
    ensemble: &EnsembleModel,
    extractor: Extractor,
    config: Option<&FeatureConfig>,
) -> Result<ClassifyOutput> {
    if tile_size < 2 {
        return Err(Error::InvalidPatchSize(tile_size));
    }
    if tile_size > image.width().min(image.height()) {
        return Err(Error::PatchTooLarge {
            size: tile_size,
            width: image.width(),
            height: image.height(),
        });
    }
    let mut features = config.copied().unwrap_or_default();
    if let Some(prov) = ensemble.provenance() {
        if prov.extractor != extractor {
            return Err(Error::ModelMismatch(format!(
                "ensemble was trained on {} features, asked for {extractor}",
                prov.extractor
            )));
        }
        if prov.patch_size != tile_size {
            return Err(Error::ModelMismatch(format!(
                "ensemble was trained on {0}x{0} patches, asked for {1}x{1}",
                prov.patch_size, tile_size
            )));
        }
        if config.is_some_and(|c| *c != prov.feature_config) {
            return Err(Error::ModelMismatch(format!(
                "feature settings differ: model {}, requested {}",
                prov.feature_config.fingerprint(),
                features.fingerprint()
            )));
        }
        features = prov.feature_config;
    }
    let want = extractor.feature_len(tile_size);
    if ensemble.dim() != want {
        return Err(Error::ModelMismatch(format!(
            "ensemble expects {} features, {extractor} on {tile_size}x{tile_size} gives {want}",
            ensemble.dim()
        )));
    }

    let origins: Vec<(usize, usize)> = (0..=image.height() - tile_size)
        .step_by(tile_size)
        .flat_map(|r| {
            (0..=image.width() - tile_size)
                .step_by(tile_size)
                .map(move |c| (r, c))
        })
        .collect();
    let predictions = origins
        .par_iter()
        .map(|&(r, c)| {
            let tile = image.crop(r, c, tile_size, tile_size)?;
            // label is a placeholder; extractors ignore it
            let patch = Patch::new(tile, Label::NonCoronavirus, "query", (r, c))?;
            let v = extract(&patch, extractor, &features)?;
            let vote = ensemble.predict(&v.values)?;
            Ok(PatchPrediction {
                origin: (r, c),
                label: vote.label,
                positive_votes: vote.positive_votes,
                negative_votes: vote.negative_votes,
                mean_decision: vote.mean_decision,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ClassifyOutput {
        width: image.width(),
        height: image.height(),
        tile_size,
        predictions,
    })
}
