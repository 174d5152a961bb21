//! Soft-margin binary SVM trained with SMO, plus a voting ensemble of
//! per-fold models.

pub mod kernel;
pub mod model;
pub mod smo;
pub mod standardizer;

pub use kernel::{Kernel, KernelKind};
pub use model::{
    ensemble_predict, train_svm, train_svm_detailed, vote, EnsembleModel, EnsemblePrediction,
    ModelProvenance, Prediction, SvmModel, SvmParams, TrainedSvm,
};
pub use standardizer::Standardizer;
