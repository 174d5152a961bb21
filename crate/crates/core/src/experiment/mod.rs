//! Config-driven runs over the (subset, extractor, k) grid.
//!
//! A run reads each subset manifest, extracts (or reuses cached) feature
//! tables, cross-validates every requested cell and writes:
//!
//! ```text
//! <output_dir>/features/<subset>_<EXTRACTOR>_<key>.csv
//! <output_dir>/models/<subset>_<EXTRACTOR>_k<k>.json
//! <output_dir>/report.json, report.md, report.csv
//! ```

mod classify;
mod report;

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classifier::{EnsembleModel, ModelProvenance, SvmParams};
use crate::error::{Error, Result};
use crate::evaluation::{cross_validate, CvSummary};
use crate::features::io::{write_atomic, FeatureTable};
use crate::features::{Extractor, FeatureConfig};
use crate::imaging::{read_manifest, SubsetManifest, MANIFEST_FILE};

pub use classify::{classify_image, ClassifyOutput, PatchPrediction, DEFAULT_TILE_SIZE};
pub use report::{format_cell, render_csv, render_markdown, report_render, ReportFormat};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const ALLOWED_KS: [usize; 3] = [2, 5, 10];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetSpec {
    pub name: String,
    /// Manifest file, or the directory holding `manifest.json`.
    pub manifest: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub subsets: Vec<SubsetSpec>,
    pub extractors: Vec<Extractor>,
    pub ks: Vec<usize>,
    #[serde(default)]
    pub features: FeatureConfig,
    #[serde(default)]
    pub svm: SvmParams,
    /// Seed for fold assignment.
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Worker threads for the cell grid; `None` uses every core.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    /// Parses a JSON config. Relative paths are taken relative to the file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for s in &mut cfg.subsets {
            if s.manifest.is_relative() {
                s.manifest = base.join(&s.manifest);
            }
        }
        if cfg.output_dir.is_relative() {
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.subsets.is_empty() {
            return Err(Error::Config("no subsets given".into()));
        }
        if self.extractors.is_empty() {
            return Err(Error::Config("no extractors given".into()));
        }
        if self.ks.is_empty() {
            return Err(Error::Config("no fold counts given".into()));
        }
        if let Some(k) = self.ks.iter().find(|k| !ALLOWED_KS.contains(k)) {
            return Err(Error::Config(format!("k must be one of 2, 5, 10; got {k}")));
        }
        unique(self.subsets.iter().map(|s| s.name.as_str()), "subset")?;
        unique(self.extractors.iter().map(|e| e.as_str()), "extractor")?;
        unique(self.ks.iter().map(|k| k.to_string()), "k")?;
        for s in &self.subsets {
            if s.name.is_empty() || s.name.contains(['/', '\\']) {
                return Err(Error::Config(format!("bad subset name {:?}", s.name)));
            }
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        self.features.validate()?;
        self.svm.validate()
    }

    /// SHA-256 over every setting that affects results, plus the content of
    /// each manifest. Output location and worker count are excluded.
    pub fn fingerprint(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Key<'a> {
            subsets: Vec<(&'a str, String)>,
            extractors: &'a [Extractor],
            ks: &'a [usize],
            features: String,
            svm: &'a SvmParams,
            seed: u64,
        }
        let subsets = self
            .subsets
            .iter()
            .map(|s| Ok((s.name.as_str(), manifest_digest(&s.manifest)?)))
            .collect::<Result<Vec<_>>>()?;
        let key = Key {
            subsets,
            extractors: &self.extractors,
            ks: &self.ks,
            features: self.features.fingerprint(),
            svm: &self.svm,
            seed: self.seed,
        };
        Ok(hex::encode(Sha256::digest(serde_json::to_vec(&key)?)))
    }
}

fn unique<T: Ord + std::fmt::Display>(items: impl Iterator<Item = T>, what: &str) -> Result<()> {
    let mut seen = BTreeSet::new();
    for item in items {
        let msg = format!("duplicate {what} {item}");
        if !seen.insert(item) {
            return Err(Error::Config(msg));
        }
    }
    Ok(())
}

fn manifest_file(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join(MANIFEST_FILE)
    } else {
        path.to_path_buf()
    }
}

fn manifest_digest(path: &Path) -> Result<String> {
    let file = manifest_file(path);
    let bytes = fs::read(&file).map_err(|e| Error::io(&file, e))?;
    Ok(hex::encode(Sha256::digest(bytes)))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportProvenance {
    pub fingerprint: String,
    pub seed: u64,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub subset: String,
    pub stage: u8,
    pub extractor: Extractor,
    pub n_features: usize,
    pub k: usize,
    pub summary: CvSummary,
    /// Fold ensemble, relative to the report file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub provenance: ReportProvenance,
    pub rows: Vec<ReportRow>,
}

pub const REPORT_FILE: &str = "report.json";

impl ExperimentReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path.as_ref(), self.to_json()?.as_bytes())
    }

    /// Checks that every referenced fold ensemble was trained under this
    /// report's fingerprint and matches its row.
    pub fn verify_models(&self, base: impl AsRef<Path>) -> Result<()> {
        let base = base.as_ref();
        for row in &self.rows {
            let Some(rel) = &row.model else { continue };
            let ens = EnsembleModel::load(base.join(rel))?;
            let prov = ens.provenance().ok_or_else(|| {
                Error::ModelMismatch(format!("{} carries no provenance", rel.display()))
            })?;
            if prov.fingerprint.as_deref() != Some(self.provenance.fingerprint.as_str()) {
                return Err(Error::ModelMismatch(format!(
                    "{} was trained under a different configuration",
                    rel.display()
                )));
            }
            if prov.extractor != row.extractor || ens.dim() != row.n_features || ens.len() != row.k {
                return Err(Error::ModelMismatch(format!(
                    "{} is a {}-member {} {}-feature ensemble, row wants {}-fold {} with {}",
                    rel.display(),
                    ens.len(),
                    prov.extractor,
                    ens.dim(),
                    row.k,
                    row.extractor,
                    row.n_features
                )));
            }
        }
        Ok(())
    }
}

/// Cached feature table for one (subset, extractor). The file name embeds a
/// hash of the manifest content and feature settings, so a changed input
/// never hits a stale cache.
fn cached_table(
    name: &str,
    manifest_path: &Path,
    manifest: &SubsetManifest,
    extractor: Extractor,
    config: &FeatureConfig,
    cache_dir: &Path,
) -> Result<FeatureTable> {
    let key = Sha256::digest(
        format!(
            "{};{};{}",
            manifest_digest(manifest_path)?,
            extractor,
            config.fingerprint()
        )
        .as_bytes(),
    );
    let path = cache_dir.join(format!("{name}_{extractor}_{}.csv", &hex::encode(key)[..16]));
    if let Ok(t) = FeatureTable::read_csv(&path) {
        if t.extractor == extractor
            && t.fingerprint == config.fingerprint()
            && t.rows.len() == manifest.entries.len()
        {
            return Ok(t);
        }
    }
    let table = FeatureTable::from_manifest(manifest, extractor, config)?;
    table.write_csv(&path)?;
    Ok(table)
}

/// Cross-validates one feature table for each `k`, returning report rows
/// and fold ensembles. Rows carry no model path.
pub fn evaluate_table(
    subset: &str,
    table: &FeatureTable,
    ks: &[usize],
    svm: &SvmParams,
    seed: u64,
    fingerprint: Option<&str>,
) -> Result<Vec<(ReportRow, EnsembleModel)>> {
    let x = table.matrix();
    let y = table.labels();
    let feature_config = FeatureConfig::from_fingerprint(&table.fingerprint)?;
    ks.par_iter()
        .map(|&k| {
            let cell = |e: Error| Error::Cell {
                subset: subset.to_string(),
                extractor: table.extractor.to_string(),
                k,
                source: Box::new(e),
            };
            let (summary, mut ens) = cross_validate(&x, &y, k, svm, seed).map_err(cell)?;
            ens.set_provenance(ModelProvenance {
                extractor: table.extractor,
                feature_config,
                patch_size: table.patch_size,
                fingerprint: fingerprint.map(str::to_string),
            });
            let row = ReportRow {
                subset: subset.to_string(),
                stage: table.extractor.stage(),
                extractor: table.extractor,
                n_features: table.dim(),
                k,
                summary,
                model: None,
            };
            Ok((row, ens))
        })
        .collect()
}

pub fn model_file_name(subset: &str, extractor: Extractor, k: usize) -> PathBuf {
    PathBuf::from("models").join(format!("{subset}_{extractor}_k{k}.json"))
}

/// Runs the whole grid and writes report, models and feature caches under
/// `config.output_dir`. The report body depends only on the config, the
/// manifests and the patches.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    for s in &config.subsets {
        let file = manifest_file(&s.manifest);
        if !file.exists() {
            return Err(Error::FileNotFound(file));
        }
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = config.workers {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| run_in_pool(config))
}

fn run_in_pool(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let fingerprint = config.fingerprint()?;
    let out = &config.output_dir;
    let cache_dir = out.join("features");

    let manifests = config
        .subsets
        .iter()
        .map(|s| read_manifest(&s.manifest))
        .collect::<Result<Vec<_>>>()?;

    let pairs: Vec<(usize, Extractor)> = (0..config.subsets.len())
        .flat_map(|i| config.extractors.iter().map(move |&e| (i, e)))
        .collect();

    let per_pair = pairs
        .par_iter()
        .map(|&(i, extractor)| {
            let spec = &config.subsets[i];
            let table = cached_table(
                &spec.name,
                &spec.manifest,
                &manifests[i],
                extractor,
                &config.features,
                &cache_dir,
            )
            .map_err(|e| Error::Cell {
                subset: spec.name.clone(),
                extractor: extractor.to_string(),
                k: 0,
                source: Box::new(e),
            })?;
            evaluate_table(
                &spec.name,
                &table,
                &config.ks,
                &config.svm,
                config.seed,
                Some(&fingerprint),
            )
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    for (mut row, ens) in per_pair.into_iter().flatten() {
        let rel = model_file_name(&row.subset, row.extractor, row.k);
        ens.save(out.join(&rel))?;
        row.model = Some(rel);
        rows.push(row);
    }

    let report = ExperimentReport {
        provenance: ReportProvenance {
            fingerprint,
            seed: config.seed,
            version: VERSION.to_string(),
        },
        rows,
    };
    report.save(out.join(REPORT_FILE))?;
    write_atomic(
        &out.join("report.md"),
        report_render(&report, ReportFormat::Markdown)?.as_bytes(),
    )?;
    write_atomic(
        &out.join("report.csv"),
        report_render(&report, ReportFormat::Csv)?.as_bytes(),
    )?;
    Ok(report)
}

/// Cross-validates a single feature CSV and writes the report and fold
/// models under `out_dir`, laid out as by [`run_experiment`].
pub fn run_cv(
    subset: &str,
    features_csv: impl AsRef<Path>,
    ks: &[usize],
    svm: &SvmParams,
    seed: u64,
    out_dir: impl AsRef<Path>,
) -> Result<ExperimentReport> {
    let (path, out) = (features_csv.as_ref(), out_dir.as_ref());
    if ks.is_empty() {
        return Err(Error::Config("no fold counts given".into()));
    }
    unique(ks.iter(), "k")?;
    svm.validate()?;
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let table = FeatureTable::read_csv(path)?;
    let fingerprint = hex::encode(Sha256::digest(serde_json::to_vec(&(
        subset,
        hex::encode(Sha256::digest(&bytes)),
        ks,
        svm,
        seed,
    ))?));
    let mut rows = Vec::new();
    for (mut row, ens) in evaluate_table(subset, &table, ks, svm, seed, Some(&fingerprint))? {
        let rel = model_file_name(subset, row.extractor, row.k);
        ens.save(out.join(&rel))?;
        row.model = Some(rel);
        rows.push(row);
    }
    let report = ExperimentReport {
        provenance: ReportProvenance {
            fingerprint,
            seed,
            version: VERSION.to_string(),
        },
        rows,
    };
    report.save(out.join(REPORT_FILE))?;
    Ok(report)
}
