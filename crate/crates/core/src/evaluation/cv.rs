use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{train_svm, EnsembleModel, SvmModel, SvmParams};
use crate::error::{Error, Result};
use crate::evaluation::folds::{make_folds, FoldPlan};
use crate::evaluation::metrics::{confusion, metrics, ConfusionCounts, MetricSet};
use crate::imaging::Label;

/// Per-fold metrics and their element-wise mean and population std.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvSummary {
    pub k: usize,
    pub per_fold: Vec<MetricSet>,
    pub confusion: Vec<ConfusionCounts>,
    pub mean: MetricSet,
    pub std: MetricSet,
}

impl CvSummary {
    pub fn from_folds(k: usize, confusion: Vec<ConfusionCounts>) -> Result<Self> {
        let per_fold = confusion.iter().map(metrics).collect::<Result<Vec<_>>>()?;
        let (mean, std) = MetricSet::aggregate(&per_fold);
        Ok(Self {
            k,
            per_fold,
            confusion,
            mean,
            std,
        })
    }
}

/// SMO seed used for a given fold.
pub fn fold_seed(params: &SvmParams, fold: usize) -> u64 {
    params.seed.wrapping_add(fold as u64)
}

/// Trains the model for `fold` on every row outside it. The standardizer is
/// fit on those training rows alone.
pub fn train_fold(
    features: &[Vec<f64>],
    labels: &[Label],
    plan: &FoldPlan,
    fold: usize,
    params: &SvmParams,
) -> Result<SvmModel> {
    let train = plan.train_indices(fold);
    let x: Vec<Vec<f64>> = train.iter().map(|&i| features[i].clone()).collect();
    let y: Vec<Label> = train.iter().map(|&i| labels[i]).collect();
    let params = SvmParams {
        seed: fold_seed(params, fold),
        ..*params
    };
    train_svm(&x, &y, &params)
}

fn evaluate_fold(
    model: &SvmModel,
    features: &[Vec<f64>],
    labels: &[Label],
    plan: &FoldPlan,
    fold: usize,
) -> Result<ConfusionCounts> {
    let test = plan.test_indices(fold);
    let truth: Vec<Label> = test.iter().map(|&i| labels[i]).collect();
    let predicted = test
        .iter()
        .map(|&i| model.predict(&features[i]).map(|p| p.label))
        .collect::<Result<Vec<_>>>()?;
    confusion(&truth, &predicted)
}

/// Stratified k-fold cross-validation. Returns the summary and the k fold
/// models as an ensemble. Both classes need at least `k` samples.
pub fn cross_validate(
    features: &[Vec<f64>],
    labels: &[Label],
    k: usize,
    params: &SvmParams,
    seed: u64,
) -> Result<(CvSummary, EnsembleModel)> {
    if features.len() != labels.len() {
        return Err(Error::LengthMismatch(features.len(), labels.len()));
    }
    for class in [Label::Coronavirus, Label::NonCoronavirus] {
        let count = labels.iter().filter(|&&l| l == class).count();
        if count < k {
            return Err(Error::ClassTooSmall {
                label: class.to_string(),
                count,
                k,
            });
        }
    }
    let plan = make_folds(labels, k, seed)?;
    cross_validate_with_plan(features, labels, &plan, params)
}

pub fn cross_validate_with_plan(
    features: &[Vec<f64>],
    labels: &[Label],
    plan: &FoldPlan,
    params: &SvmParams,
) -> Result<(CvSummary, EnsembleModel)> {
    let folds = (0..plan.k)
        .into_par_iter()
        .map(|fold| {
            let model = train_fold(features, labels, plan, fold, params)?;
            let counts = evaluate_fold(&model, features, labels, plan, fold)?;
            Ok((model, counts))
        })
        .collect::<Result<Vec<_>>>()?;
    let (models, counts): (Vec<_>, Vec<_>) = folds.into_iter().unzip();
    Ok((CvSummary::from_folds(plan.k, counts)?, EnsembleModel::new(models)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn blobs(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<Label>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let pos = i % 2 == 0;
                let c = if pos { 5.0 } else { -5.0 };
                (
                    vec![c + rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
                    if pos { Label::Coronavirus } else { Label::NonCoronavirus },
                )
            })
            .unzip()
    }

    #[test]
    fn separable_data_scores_perfectly() {
        let (x, y) = blobs(40, 1);
        let (summary, ens) = cross_validate(&x, &y, 2, &SvmParams::default(), 3).unwrap();
        assert_eq!(summary.mean.accuracy, 1.0);
        assert_eq!(summary.std.accuracy, 0.0);
        assert_eq!(ens.len(), 2);
    }

    #[test]
    fn structure_for_k5() {
        let (x, y) = blobs(50, 2);
        let (summary, ens) = cross_validate(&x, &y, 5, &SvmParams::default(), 3).unwrap();
        assert_eq!(summary.per_fold.len(), 5);
        assert_eq!(ens.len(), 5);
        let total: u64 = summary.confusion.iter().map(|c| c.total()).sum();
        assert_eq!(total, 50);
    }

    #[test]
    fn aggregation_recomputable() {
        let (mut x, y) = blobs(60, 3);
        // add overlap so folds differ
        for row in x.iter_mut().step_by(7) {
            row[0] = -row[0];
        }
        let (s, _) = cross_validate(&x, &y, 5, &SvmParams::default(), 11).unwrap();
        let (mean, std) = MetricSet::aggregate(&s.per_fold);
        for m in crate::evaluation::Metric::ALL {
            assert!((mean.get(m) - s.mean.get(m)).abs() <= 1e-12);
            assert!((std.get(m) - s.std.get(m)).abs() <= 1e-12);
        }
    }

    #[test]
    fn class_smaller_than_k() {
        let (x, mut y) = blobs(20, 5);
        for l in y.iter_mut().skip(6) {
            *l = Label::NonCoronavirus;
        }
        assert!(matches!(
            cross_validate(&x, &y, 5, &SvmParams::default(), 0),
            Err(Error::ClassTooSmall { count: 3, k: 5, .. })
        ));
    }

    #[test]
    fn deterministic() {
        let (x, y) = blobs(40, 4);
        let a = cross_validate(&x, &y, 5, &SvmParams::default(), 8).unwrap();
        let b = cross_validate(&x, &y, 5, &SvmParams::default(), 8).unwrap();
        assert_eq!(a, b);
    }
}
