use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classifier::kernel::{dot, Kernel, KernelKind};
use crate::classifier::smo::{self, DualSolution, SmoParams};
use crate::classifier::standardizer::{check_rectangular, Standardizer};
use crate::error::{Error, Result};
use crate::features::{Extractor, FeatureConfig};
use crate::imaging::Label;

/// Training hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmParams {
    pub kernel: KernelKind,
    /// RBF width; `None` means `1 / dim`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(rename = "C")]
    pub c: f64,
    pub tol: f64,
    pub max_passes: usize,
    pub seed: u64,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            kernel: KernelKind::Linear,
            gamma: None,
            c: 1.0,
            tol: 1e-3,
            max_passes: 10,
            seed: 0,
        }
    }
}

impl SvmParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidParameter(format!("C must be positive, got {}", self.c)));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidParameter(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_passes == 0 {
            return Err(Error::InvalidParameter("max_passes must be at least 1".into()));
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::InvalidParameter(format!("gamma must be positive, got {g}")));
            }
        }
        Ok(())
    }

    pub fn resolve_kernel(&self, dim: usize) -> Kernel {
        match self.kernel {
            KernelKind::Linear => Kernel::Linear,
            KernelKind::Rbf => Kernel::Rbf {
                gamma: self.gamma.unwrap_or(1.0 / dim.max(1) as f64),
            },
        }
    }
}

/// What a model was trained on; used to refuse mismatched inputs at prediction time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelProvenance {
    pub extractor: Extractor,
    pub feature_config: FeatureConfig,
    pub patch_size: usize,
    /// Fingerprint of the experiment configuration that trained the model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fingerprint: Option<String>,
}

/// Output of a single-model prediction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub label: Label,
    pub decision: f64,
}

/// A trained binary SVM. Support vectors are stored standardized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelRepr", into = "ModelRepr")]
pub struct SvmModel {
    kernel: Kernel,
    c: f64,
    support_vectors: Vec<Vec<f64>>,
    dual_coefs: Vec<f64>,
    bias: f64,
    standardizer: Standardizer,
    seed: u64,
    pub provenance: Option<ModelProvenance>,
    /// Collapsed primal weights for the linear kernel.
    weights: Option<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct ModelRepr {
    kernel: KernelKind,
    #[serde(rename = "C")]
    c: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gamma: Option<f64>,
    support_vectors: Vec<Vec<f64>>,
    dual_coefs: Vec<f64>,
    bias: f64,
    means: Vec<f64>,
    stds: Vec<f64>,
    label_map: BTreeMap<String, Label>,
    seed: u64,
    #[serde(default, flatten, skip_serializing_if = "Option::is_none")]
    provenance: Option<ModelProvenance>,
}

fn label_map() -> BTreeMap<String, Label> {
    BTreeMap::from([
        ("+1".to_string(), Label::Coronavirus),
        ("-1".to_string(), Label::NonCoronavirus),
    ])
}

impl From<SvmModel> for ModelRepr {
    fn from(m: SvmModel) -> Self {
        ModelRepr {
            kernel: m.kernel.kind(),
            c: m.c,
            gamma: m.kernel.gamma(),
            support_vectors: m.support_vectors,
            dual_coefs: m.dual_coefs,
            bias: m.bias,
            means: m.standardizer.means,
            stds: m.standardizer.stds,
            label_map: label_map(),
            seed: m.seed,
            provenance: m.provenance,
        }
    }
}

impl TryFrom<ModelRepr> for SvmModel {
    type Error = String;

    fn try_from(r: ModelRepr) -> std::result::Result<Self, String> {
        let kernel = match (r.kernel, r.gamma) {
            (KernelKind::Linear, _) => Kernel::Linear,
            (KernelKind::Rbf, Some(gamma)) => Kernel::Rbf { gamma },
            (KernelKind::Rbf, None) => return Err("rbf model without gamma".into()),
        };
        if r.label_map != label_map() {
            return Err("unsupported label_map".into());
        }
        if r.support_vectors.len() != r.dual_coefs.len() {
            return Err("support_vectors and dual_coefs differ in length".into());
        }
        let dim = r.means.len();
        if r.stds.len() != dim || r.support_vectors.iter().any(|sv| sv.len() != dim) {
            return Err("inconsistent feature dimension".into());
        }
        Ok(SvmModel::assemble(
            kernel,
            r.c,
            r.support_vectors,
            r.dual_coefs,
            r.bias,
            Standardizer {
                means: r.means,
                stds: r.stds,
            },
            r.seed,
            r.provenance,
        ))
    }
}

impl SvmModel {
    #[allow(clippy::too_many_arguments)]
    fn assemble(
        kernel: Kernel,
        c: f64,
        support_vectors: Vec<Vec<f64>>,
        dual_coefs: Vec<f64>,
        bias: f64,
        standardizer: Standardizer,
        seed: u64,
        provenance: Option<ModelProvenance>,
    ) -> Self {
        let weights = (kernel == Kernel::Linear).then(|| {
            let mut w = vec![0.0; standardizer.dim()];
            for (sv, coef) in support_vectors.iter().zip(&dual_coefs) {
                for (wi, x) in w.iter_mut().zip(sv) {
                    *wi += coef * x;
                }
            }
            w
        });
        Self {
            kernel,
            c,
            support_vectors,
            dual_coefs,
            bias,
            standardizer,
            seed,
            provenance,
            weights,
        }
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dim(&self) -> usize {
        self.standardizer.dim()
    }

    pub fn support_vectors(&self) -> &[Vec<f64>] {
        &self.support_vectors
    }

    /// Signed multipliers αᵢyᵢ, one per support vector.
    pub fn dual_coefs(&self) -> &[f64] {
        &self.dual_coefs
    }

    pub fn standardizer(&self) -> &Standardizer {
        &self.standardizer
    }

    /// Primal weights in standardized space (linear kernel only).
    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    /// Decision value for an already standardized input.
    pub fn decision_standardized(&self, x: &[f64]) -> f64 {
        match &self.weights {
            Some(w) => dot(w, x) + self.bias,
            None => {
                self.support_vectors
                    .iter()
                    .zip(&self.dual_coefs)
                    .map(|(sv, coef)| coef * self.kernel.eval(sv, x))
                    .sum::<f64>()
                    + self.bias
            }
        }
    }

    pub fn decision_value(&self, x: &[f64]) -> Result<f64> {
        let z = self.standardizer.transform(x)?;
        Ok(self.decision_standardized(&z))
    }

    /// Labels `x`; a decision value of exactly 0 maps to coronavirus.
    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        let decision = self.decision_value(x)?;
        Ok(Prediction {
            label: Label::from_sign(decision),
            decision,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Result of [`train_svm`] that also keeps the full multiplier vector.
#[derive(Debug, Clone)]
pub struct TrainedSvm {
    pub model: SvmModel,
    pub solution: DualSolution,
    /// Training rows after standardization, in input order.
    pub standardized: Vec<Vec<f64>>,
}

/// Fits a z-score standardizer on `x`, then solves the SVM dual with SMO.
pub fn train_svm(x: &[Vec<f64>], y: &[Label], params: &SvmParams) -> Result<SvmModel> {
    Ok(train_svm_detailed(x, y, params)?.model)
}

pub fn train_svm_detailed(x: &[Vec<f64>], y: &[Label], params: &SvmParams) -> Result<TrainedSvm> {
    params.validate()?;
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    let dim = check_rectangular(x)?;
    let positives = y.iter().filter(|l| l.is_positive()).count();
    if positives == 0 || positives == y.len() {
        return Err(Error::SingleClassInput);
    }
    let standardizer = Standardizer::fit(x)?;
    let standardized = standardizer.transform_all(x)?;
    let targets: Vec<f64> = y.iter().map(|l| l.sign()).collect();
    let kernel = params.resolve_kernel(dim);
    let solution = smo::solve(
        &standardized,
        &targets,
        kernel,
        &SmoParams {
            c: params.c,
            tol: params.tol,
            max_passes: params.max_passes,
            seed: params.seed,
            ..SmoParams::default()
        },
    );

    let mut support_vectors = Vec::new();
    let mut dual_coefs = Vec::new();
    for ((alpha, row), t) in solution.alphas.iter().zip(&standardized).zip(&targets) {
        if *alpha > 0.0 {
            support_vectors.push(row.clone());
            dual_coefs.push(alpha * t);
        }
    }
    let model = SvmModel::assemble(
        kernel,
        params.c,
        support_vectors,
        dual_coefs,
        solution.bias,
        standardizer,
        params.seed,
        None,
    );
    Ok(TrainedSvm {
        model,
        solution,
        standardized,
    })
}

/// A committee of models, typically one per cross-validation fold.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleModel {
    members: Vec<SvmModel>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsemblePrediction {
    pub label: Label,
    pub positive_votes: usize,
    pub negative_votes: usize,
    pub mean_decision: f64,
}

impl EnsembleModel {
    pub fn new(members: Vec<SvmModel>) -> Result<Self> {
        let first = members.first().ok_or(Error::EmptyEnsemble)?;
        let (dim, kind) = (first.dim(), first.kernel.kind());
        if let Some(m) = members.iter().find(|m| m.dim() != dim || m.kernel.kind() != kind) {
            return Err(Error::ModelMismatch(format!(
                "ensemble members disagree: {dim}-d {kind:?} vs {}-d {:?}",
                m.dim(),
                m.kernel.kind()
            )));
        }
        Ok(Self { members })
    }

    pub fn members(&self) -> &[SvmModel] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.members[0].dim()
    }

    pub fn provenance(&self) -> Option<&ModelProvenance> {
        self.members[0].provenance.as_ref()
    }

    pub fn set_provenance(&mut self, provenance: ModelProvenance) {
        for m in &mut self.members {
            m.provenance = Some(provenance.clone());
        }
    }

    /// Majority vote; a tied vote goes to the sign of the mean decision value.
    pub fn predict(&self, x: &[f64]) -> Result<EnsemblePrediction> {
        let decisions = self
            .members
            .iter()
            .map(|m| m.decision_value(x))
            .collect::<Result<Vec<f64>>>()?;
        Ok(vote(&decisions))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.members)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let members: Vec<SvmModel> = serde_json::from_str(s)?;
        Self::new(members)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::features::io::write_atomic(path.as_ref(), self.to_json()?.as_bytes())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Combines per-member decision values into one label.
pub fn vote(decisions: &[f64]) -> EnsemblePrediction {
    let positive_votes = decisions.iter().filter(|&&d| d >= 0.0).count();
    let negative_votes = decisions.len() - positive_votes;
    let mean_decision = decisions.iter().sum::<f64>() / decisions.len().max(1) as f64;
    let label = match positive_votes.cmp(&negative_votes) {
        std::cmp::Ordering::Greater => Label::Coronavirus,
        std::cmp::Ordering::Less => Label::NonCoronavirus,
        std::cmp::Ordering::Equal => Label::from_sign(mean_decision),
    };
    EnsemblePrediction {
        label,
        positive_votes,
        negative_votes,
        mean_decision,
    }
}

/// Free-function form of [`EnsembleModel::predict`].
pub fn ensemble_predict(ensemble: &EnsembleModel, x: &[f64]) -> Result<Label> {
    if ensemble.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    Ok(ensemble.predict(x)?.label)
}
