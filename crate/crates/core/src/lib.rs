//! Texture-feature classification of labeled CT image patches.
//!
//! The pipeline cuts labeled patches from grayscale images ([`imaging`]),
//! turns each patch into a feature vector ([`features`]), trains soft-margin
//! SVMs with SMO ([`classifier`]) and scores them under stratified k-fold
//! cross-validation ([`evaluation`]). [`experiment`] runs the whole grid of
//! subsets, extractors and fold counts and renders result tables.

pub mod classifier;
pub mod error;
pub mod evaluation;
pub mod experiment;
pub mod features;
pub mod imaging;

pub use error::{Error, ErrorKind, Result};
