//! Grayscale image I/O, intensity quantization and labeled patch extraction.
//!
//! Images are 8-bit, row-major. Patches are cut on a non-overlapping grid
//! anchored at the top-left corner; a tile is kept only when enough of its
//! mask pixels agree on one class.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Patch edge lengths used by the four standard subsets.
pub const STANDARD_PATCH_SIZES: [usize; 4] = [16, 32, 48, 64];

/// Default fraction of agreeing mask pixels required to keep a tile.
pub const DEFAULT_PURITY: f64 = 0.9;

/// File name of the manifest inside a subset directory.
pub const MANIFEST_FILE: &str = "manifest.json";

/// A row-major grid of 8-bit intensities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!(
                "zero-sized image {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: format!("{} pixels", width * height),
                actual: format!("{} pixels", pixels.len()),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * self.width + col]
    }

    /// Copies the `height`x`width` window whose top-left corner is `(row, col)`.
    pub fn crop(&self, row: usize, col: usize, width: usize, height: usize) -> Result<GrayImage> {
        if row + height > self.height || col + width > self.width {
            return Err(Error::DimensionMismatch {
                expected: format!("window inside {}x{}", self.width, self.height),
                actual: format!("{width}x{height} at ({row}, {col})"),
            });
        }
        let mut pixels = Vec::with_capacity(width * height);
        for r in row..row + height {
            let start = r * self.width + col;
            pixels.extend_from_slice(&self.pixels[start..start + width]);
        }
        GrayImage::new(width, height, pixels)
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }
}

/// Per-pixel ground truth: 0 = non-infected, 1 = infected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMask {
    width: usize,
    height: usize,
    labels: Vec<u8>,
}

impl LabelMask {
    pub fn new(width: usize, height: usize, labels: Vec<u8>) -> Result<Self> {
        if labels.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: format!("{} mask values", width * height),
                actual: format!("{} mask values", labels.len()),
            });
        }
        if let Some(v) = labels.iter().find(|&&v| v > 1) {
            return Err(Error::InvalidImage(format!("mask value {v} is not binary")));
        }
        Ok(Self {
            width,
            height,
            labels,
        })
    }

    /// Interprets a grayscale image as a mask: zero is non-infected, anything else infected.
    pub fn from_image(img: &GrayImage) -> Self {
        Self {
            width: img.width,
            height: img.height,
            labels: img.pixels.iter().map(|&p| u8::from(p != 0)).collect(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    /// Number of infected pixels in a `size`x`size` window.
    pub fn count_ones(&self, row: usize, col: usize, size: usize) -> usize {
        (row..row + size)
            .map(|r| {
                let start = r * self.width + col;
                self.labels[start..start + size]
                    .iter()
                    .filter(|&&v| v == 1)
                    .count()
            })
            .sum()
    }
}

/// Binary class of a patch. Coronavirus is the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "coronavirus")]
    Coronavirus,
    #[serde(rename = "non-coronavirus")]
    NonCoronavirus,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Coronavirus => "coronavirus",
            Label::NonCoronavirus => "non-coronavirus",
        }
    }

    /// SVM target: +1 for coronavirus, -1 otherwise.
    pub fn sign(self) -> f64 {
        match self {
            Label::Coronavirus => 1.0,
            Label::NonCoronavirus => -1.0,
        }
    }

    pub fn from_sign(value: f64) -> Self {
        if value >= 0.0 {
            Label::Coronavirus
        } else {
            Label::NonCoronavirus
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Coronavirus
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "coronavirus" => Ok(Label::Coronavirus),
            "non-coronavirus" => Ok(Label::NonCoronavirus),
            other => Err(Error::InvalidManifest(format!("unknown label {other:?}"))),
        }
    }
}

/// A square labeled sub-image together with where it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    image: GrayImage,
    pub label: Label,
    pub source_id: String,
    /// `(row, col)` of the top-left pixel in the source image.
    pub origin: (usize, usize),
}

impl Patch {
    pub fn new(
        image: GrayImage,
        label: Label,
        source_id: impl Into<String>,
        origin: (usize, usize),
    ) -> Result<Self> {
        if image.width() != image.height() {
            return Err(Error::InvalidPatchSize(image.width().max(image.height())));
        }
        if image.width() < 2 {
            return Err(Error::InvalidPatchSize(image.width()));
        }
        Ok(Self {
            image,
            label,
            source_id: source_id.into(),
            origin,
        })
    }

    /// Builds an unlabeled-provenance patch straight from pixels.
    pub fn from_pixels(size: usize, pixels: Vec<u8>, label: Label) -> Result<Self> {
        Self::new(GrayImage::new(size, size, pixels)?, label, "", (0, 0))
    }

    pub fn size(&self) -> usize {
        self.image.width()
    }

    pub fn image(&self) -> &GrayImage {
        &self.image
    }

    pub fn pixels(&self) -> &[u8] {
        self.image.pixels()
    }
}

/// One line of a subset manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub label: Label,
    pub source_id: String,
    pub origin: [usize; 2],
    pub size: usize,
}

/// A set of equally sized patches stored as PGM files next to a JSON manifest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsetManifest {
    pub patch_size: usize,
    /// Paths inside entries are relative to this directory.
    pub root: PathBuf,
    pub entries: Vec<ManifestEntry>,
}

impl SubsetManifest {
    /// `(coronavirus, non-coronavirus)` counts.
    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self
            .entries
            .iter()
            .filter(|e| e.label.is_positive())
            .count();
        (pos, self.entries.len() - pos)
    }

    pub fn has_both_classes(&self) -> bool {
        let (pos, neg) = self.class_counts();
        pos > 0 && neg > 0
    }

    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        if entry.path.is_absolute() {
            entry.path.clone()
        } else {
            self.root.join(&entry.path)
        }
    }

    /// Loads every patch listed in the manifest.
    pub fn load_patches(&self) -> Result<Vec<Patch>> {
        self.entries
            .iter()
            .map(|e| {
                let img = load_gray_image(self.resolve(e))?;
                if img.width() != e.size || img.height() != e.size {
                    return Err(Error::DimensionMismatch {
                        expected: format!("{0}x{0} patch", e.size),
                        actual: format!("{}x{} in {}", img.width(), img.height(), e.path.display()),
                    });
                }
                Patch::new(img, e.label, e.source_id.clone(), (e.origin[0], e.origin[1]))
            })
            .collect()
    }
}

/// Loads an 8-bit grayscale PGM (P5 or P2) or PNG. Color images are rejected.
pub fn load_gray_image(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_gray_image(&bytes)
}

/// Decodes PGM or PNG bytes, sniffing the format from the magic number.
pub fn decode_gray_image(bytes: &[u8]) -> Result<GrayImage> {
    if bytes.starts_with(b"P5") || bytes.starts_with(b"P2") {
        decode_pgm(bytes)
    } else if bytes.starts_with(b"\x89PNG") {
        decode_png(bytes)
    } else if bytes.len() >= 2 && bytes[0] == b'P' && bytes[1].is_ascii_digit() {
        Err(Error::UnsupportedFormat(format!(
            "netpbm variant P{} is not 8-bit grayscale",
            bytes[1] as char
        )))
    } else {
        Err(Error::UnsupportedFormat("expected PGM or PNG".into()))
    }
}

fn decode_png(bytes: &[u8]) -> Result<GrayImage> {
    use image::{ColorType, DynamicImage, ImageFormat};

    let img = image::load_from_memory_with_format(bytes, ImageFormat::Png)
        .map_err(|e| Error::CorruptImage(e.to_string()))?;
    match img {
        DynamicImage::ImageLuma8(buf) => {
            let (w, h) = buf.dimensions();
            GrayImage::new(w as usize, h as usize, buf.into_raw())
        }
        other => {
            let color: ColorType = other.color();
            Err(Error::UnsupportedFormat(format!(
                "PNG color type {color:?}, expected 8-bit grayscale"
            )))
        }
    }
}

struct PgmHeader {
    width: usize,
    height: usize,
    maxval: usize,
    data_start: usize,
}

fn parse_pgm_header(bytes: &[u8]) -> Result<PgmHeader> {
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        // whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(Error::CorruptImage("truncated PGM header".into())),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(Error::CorruptImage("malformed PGM header".into()));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::CorruptImage("PGM header value out of range".into()))?;
    }
    // exactly one whitespace byte separates header and raster
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(Error::CorruptImage("missing whitespace after PGM header".into()));
    }
    Ok(PgmHeader {
        width: fields[0],
        height: fields[1],
        maxval: fields[2],
        data_start: pos + 1,
    })
}

fn decode_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let header = parse_pgm_header(bytes)?;
    if header.maxval == 0 || header.maxval > 255 {
        return Err(Error::UnsupportedFormat(format!(
            "PGM maxval {} is not 8-bit",
            header.maxval
        )));
    }
    let n = header
        .width
        .checked_mul(header.height)
        .ok_or_else(|| Error::CorruptImage("PGM dimensions overflow".into()))?;
    let pixels = if bytes.starts_with(b"P5") {
        let raster = &bytes[header.data_start..];
        if raster.len() < n {
            return Err(Error::CorruptImage(format!(
                "PGM raster holds {} of {n} bytes",
                raster.len()
            )));
        }
        raster[..n].to_vec()
    } else {
        let text = std::str::from_utf8(&bytes[header.data_start..])
            .map_err(|_| Error::CorruptImage("non-ASCII data in P2 raster".into()))?;
        let values: Vec<u8> = text
            .split_ascii_whitespace()
            .take(n)
            .map(|t| t.parse::<u8>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::CorruptImage("bad P2 sample".into()))?;
        if values.len() < n {
            return Err(Error::CorruptImage("truncated P2 raster".into()));
        }
        values
    };
    if let Some(&v) = pixels.iter().find(|&&v| v as usize > header.maxval) {
        return Err(Error::CorruptImage(format!(
            "sample {v} exceeds maxval {}",
            header.maxval
        )));
    }
    GrayImage::new(header.width, header.height, pixels)
}

/// Binary (P5) PGM encoding with maxval 255.
pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.pixels());
    out
}

pub fn write_pgm(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_pgm(img)).map_err(|e| Error::io(path, e))
}

/// Loads a label mask; zero pixels are non-infected, nonzero infected.
pub fn load_label_mask(path: impl AsRef<Path>) -> Result<LabelMask> {
    Ok(LabelMask::from_image(&load_gray_image(path)?))
}

/// Maps each intensity `p` to `floor(p * levels / 256)`.
pub fn quantize(img: &GrayImage, levels: usize) -> Result<GrayImage> {
    if !(2..=256).contains(&levels) {
        return Err(Error::InvalidLevelCount(levels));
    }
    let pixels = img
        .pixels()
        .iter()
        .map(|&p| quantize_value(p, levels))
        .collect();
    GrayImage::new(img.width(), img.height(), pixels)
}

#[inline]
pub(crate) fn quantize_value(p: u8, levels: usize) -> u8 {
    ((p as usize * levels) >> 8) as u8
}

/// Cuts a non-overlapping `size`x`size` grid anchored at (0, 0).
///
/// A tile is labeled coronavirus when at least `purity` of its mask pixels
/// are 1, non-coronavirus when at least `purity` are 0, and dropped
/// otherwise. Partial tiles along the right and bottom edges are dropped.
pub fn extract_patches(
    img: &GrayImage,
    mask: &LabelMask,
    size: usize,
    purity: f64,
    source_id: &str,
) -> Result<Vec<Patch>> {
    if img.width() != mask.width() || img.height() != mask.height() {
        return Err(Error::DimensionMismatch {
            expected: format!("mask {}x{}", img.width(), img.height()),
            actual: format!("mask {}x{}", mask.width(), mask.height()),
        });
    }
    if size < 2 {
        return Err(Error::InvalidPatchSize(size));
    }
    if size > img.width().min(img.height()) {
        return Err(Error::PatchTooLarge {
            size,
            width: img.width(),
            height: img.height(),
        });
    }
    if !(purity > 0.0 && purity <= 1.0) {
        return Err(Error::InvalidPurity(purity));
    }
    let area = (size * size) as f64;
    let mut patches = Vec::new();
    for row in (0..=img.height() - size).step_by(size) {
        for col in (0..=img.width() - size).step_by(size) {
            let ones = mask.count_ones(row, col, size) as f64;
            let label = if ones / area >= purity {
                Label::Coronavirus
            } else if (area - ones) / area >= purity {
                Label::NonCoronavirus
            } else {
                continue;
            };
            let tile = img.crop(row, col, size, size)?;
            patches.push(Patch::new(tile, label, source_id, (row, col))?);
        }
    }
    Ok(patches)
}

/// Writes each patch as a PGM file under `dir` and a `manifest.json` indexing them.
pub fn write_manifest(patches: &[Patch], dir: impl AsRef<Path>) -> Result<SubsetManifest> {
    let dir = dir.as_ref();
    let first = patches
        .first()
        .ok_or_else(|| Error::EmptyInput("no patches to write".into()))?;
    let patch_size = first.size();
    if let Some(p) = patches.iter().find(|p| p.size() != patch_size) {
        return Err(Error::MixedPatchSizes(patch_size, p.size()));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let mut entries = Vec::with_capacity(patches.len());
    for (i, patch) in patches.iter().enumerate() {
        let name = PathBuf::from(format!("patch_{i:06}.pgm"));
        write_pgm(patch.image(), dir.join(&name))?;
        entries.push(ManifestEntry {
            path: name,
            label: patch.label,
            source_id: patch.source_id.clone(),
            origin: [patch.origin.0, patch.origin.1],
            size: patch_size,
        });
    }
    let manifest_path = dir.join(MANIFEST_FILE);
    let json = serde_json::to_vec_pretty(&entries)?;
    fs::write(&manifest_path, json).map_err(|e| Error::io(&manifest_path, e))?;

    Ok(SubsetManifest {
        patch_size,
        root: dir.to_path_buf(),
        entries,
    })
}

/// Reads a manifest JSON file. Accepts either the file itself or its directory.
pub fn read_manifest(path: impl AsRef<Path>) -> Result<SubsetManifest> {
    let path = path.as_ref();
    let file = if path.is_dir() {
        path.join(MANIFEST_FILE)
    } else {
        path.to_path_buf()
    };
    let bytes = fs::read(&file).map_err(|e| Error::io(&file, e))?;
    let entries: Vec<ManifestEntry> = serde_json::from_slice(&bytes)?;
    let first = entries
        .first()
        .ok_or_else(|| Error::EmptyInput(format!("manifest {} is empty", file.display())))?;
    let patch_size = first.size;
    if let Some(e) = entries.iter().find(|e| e.size != patch_size) {
        return Err(Error::MixedPatchSizes(patch_size, e.size));
    }
    Ok(SubsetManifest {
        patch_size,
        root: file
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from(".")),
        entries,
    })
}
