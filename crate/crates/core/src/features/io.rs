//! Feature tables persisted as CSV.
//!
//! Layout:
//!
//! ```text
//! # extractor=GLCM;levels=32;d=1;theta=0;connectivity=8;patch_size=32
//! patch_path,label,angular_second_moment,contrast,...
//! patch_000000.pgm,coronavirus,0.0123,...
//! ```

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::features::{extract_all, Extractor, FeatureConfig, FeatureVector};
use crate::imaging::{Label, SubsetManifest};

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub patch_path: PathBuf,
    pub label: Label,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub extractor: Extractor,
    /// [`FeatureConfig::fingerprint`] of the configuration that produced the rows.
    pub fingerprint: String,
    pub patch_size: usize,
    pub columns: Vec<String>,
    pub rows: Vec<FeatureRow>,
}

impl FeatureTable {
    pub fn from_vectors(
        extractor: Extractor,
        config: &FeatureConfig,
        patch_size: usize,
        paths: Vec<PathBuf>,
        labels: Vec<Label>,
        vectors: Vec<FeatureVector>,
    ) -> Result<Self> {
        if paths.len() != vectors.len() || labels.len() != vectors.len() {
            return Err(Error::LengthMismatch(paths.len(), vectors.len()));
        }
        let columns = extractor.feature_names(patch_size);
        let rows = paths
            .into_iter()
            .zip(labels)
            .zip(vectors)
            .map(|((patch_path, label), v)| {
                if v.len() != columns.len() {
                    return Err(Error::DimensionMismatch {
                        expected: format!("{} features", columns.len()),
                        actual: format!("{} features", v.len()),
                    });
                }
                Ok(FeatureRow {
                    patch_path,
                    label,
                    values: v.values,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            extractor,
            fingerprint: config.fingerprint(),
            patch_size,
            columns,
            rows,
        })
    }

    /// Extracts one feature family from every patch in a manifest.
    pub fn from_manifest(
        manifest: &SubsetManifest,
        extractor: Extractor,
        config: &FeatureConfig,
    ) -> Result<Self> {
        let patches = manifest.load_patches()?;
        let vectors = extract_all(&patches, extractor, config)?;
        Self::from_vectors(
            extractor,
            config,
            manifest.patch_size,
            manifest.entries.iter().map(|e| e.path.clone()).collect(),
            manifest.entries.iter().map(|e| e.label).collect(),
            vectors,
        )
    }

    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    pub fn matrix(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| r.values.clone()).collect()
    }

    pub fn labels(&self) -> Vec<Label> {
        self.rows.iter().map(|r| r.label).collect()
    }

    /// Header line written above the column names.
    pub fn preamble(&self) -> String {
        format!(
            "# extractor={};{};patch_size={}",
            self.extractor, self.fingerprint, self.patch_size
        )
    }

    pub fn to_csv_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        writeln!(out, "{}", self.preamble()).expect("write to Vec");
        {
            let mut w = csv::Writer::from_writer(&mut out);
            let mut header = vec!["patch_path".to_string(), "label".to_string()];
            header.extend(self.columns.iter().cloned());
            w.write_record(&header)?;
            for row in &self.rows {
                let mut record = vec![
                    row.patch_path.to_string_lossy().into_owned(),
                    row.label.as_str().to_string(),
                ];
                record.extend(row.values.iter().map(|v| v.to_string()));
                w.write_record(&record)?;
            }
            w.flush().map_err(|e| Error::io("<feature csv>", e))?;
        }
        Ok(out)
    }

    /// Writes via a temporary file and rename so readers never see partial output.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path.as_ref(), &self.to_csv_bytes()?)
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = BufReader::new(file);
        let mut first = String::new();
        reader
            .read_line(&mut first)
            .map_err(|e| Error::io(path, e))?;
        let (extractor, fingerprint, patch_size) = parse_preamble(first.trim_end())?;

        let mut csv = csv::Reader::from_reader(reader);
        let header = csv.headers()?.clone();
        if header.len() < 3 || &header[0] != "patch_path" || &header[1] != "label" {
            return Err(Error::InvalidFeatureFile(
                "expected columns patch_path,label,<features>".into(),
            ));
        }
        let columns: Vec<String> = header.iter().skip(2).map(str::to_string).collect();
        let mut rows = Vec::new();
        for (i, record) in csv.records().enumerate() {
            let record = record?;
            if record.len() != columns.len() + 2 {
                return Err(Error::InvalidFeatureFile(format!(
                    "row {i} has {} fields, expected {}",
                    record.len(),
                    columns.len() + 2
                )));
            }
            let values = record
                .iter()
                .skip(2)
                .enumerate()
                .map(|(col, s)| {
                    let v: f64 = s.parse().map_err(|_| {
                        Error::InvalidFeatureFile(format!("row {i}: bad number {s:?}"))
                    })?;
                    if v.is_finite() {
                        Ok(v)
                    } else {
                        Err(Error::NonFiniteFeature { row: i, col })
                    }
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(FeatureRow {
                patch_path: PathBuf::from(&record[0]),
                label: record[1].parse()?,
                values,
            });
        }
        Ok(Self {
            extractor,
            fingerprint,
            patch_size,
            columns,
            rows,
        })
    }
}

fn parse_preamble(line: &str) -> Result<(Extractor, String, usize)> {
    let body = line
        .strip_prefix("# ")
        .ok_or_else(|| Error::InvalidFeatureFile("missing '# extractor=...' header".into()))?;
    let mut extractor = None;
    let mut patch_size = None;
    let mut config_parts = Vec::new();
    for part in body.split(';') {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| Error::InvalidFeatureFile(format!("bad header field {part:?}")))?;
        match key {
            "extractor" => extractor = Some(value.parse::<Extractor>()?),
            "patch_size" => {
                patch_size = Some(value.parse::<usize>().map_err(|_| {
                    Error::InvalidFeatureFile(format!("bad patch_size {value:?}"))
                })?)
            }
            _ => config_parts.push(part),
        }
    }
    match (extractor, patch_size) {
        (Some(e), Some(s)) => Ok((e, config_parts.join(";"), s)),
        _ => Err(Error::InvalidFeatureFile(
            "header needs extractor and patch_size".into(),
        )),
    }
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut tmp_name = path.file_name().unwrap_or_default().to_os_string();
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> FeatureTable {
        let cfg = FeatureConfig::default();
        let vectors = vec![
            FeatureVector::new(Extractor::Glrlm, vec![0.1, 1.0 / 3.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap(),
            FeatureVector::new(Extractor::Glrlm, vec![1e-300, -0.0, 7.0, 8.0, 9.0, 10.0, 11.5]).unwrap(),
        ];
        FeatureTable::from_vectors(
            Extractor::Glrlm,
            &cfg,
            16,
            vec!["a.pgm".into(), "b,c.pgm".into()],
            vec![Label::Coronavirus, Label::NonCoronavirus],
            vectors,
        )
        .unwrap()
    }

    #[test]
    fn csv_roundtrip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        let t = table();
        t.write_csv(&path).unwrap();
        assert_eq!(FeatureTable::read_csv(&path).unwrap(), t);
    }

    #[test]
    fn header_layout() {
        let bytes = table().to_csv_bytes().unwrap();
        let text = String::from_utf8(bytes).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "# extractor=GLRLM;levels=32;d=1;theta=0;connectivity=8;patch_size=16"
        );
        assert!(lines
            .next()
            .unwrap()
            .starts_with("patch_path,label,short_run_emphasis,long_run_emphasis"));
    }

    #[test]
    fn missing_preamble_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        fs::write(&path, "patch_path,label,x\na,coronavirus,1\n").unwrap();
        assert!(matches!(
            FeatureTable::read_csv(&path),
            Err(Error::InvalidFeatureFile(_))
        ));
    }
}
