use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::Label;

/// Confusion counts with coronavirus as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }
}

impl std::ops::Add for ConfusionCounts {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self {
            tp: self.tp + o.tp,
            tn: self.tn + o.tn,
            fp: self.fp + o.fp,
            fn_: self.fn_ + o.fn_,
        }
    }
}

pub fn confusion(y_true: &[Label], y_pred: &[Label]) -> Result<ConfusionCounts> {
    if y_true.len() != y_pred.len() {
        return Err(Error::LengthMismatch(y_true.len(), y_pred.len()));
    }
    let mut c = ConfusionCounts::default();
    for (t, p) in y_true.iter().zip(y_pred) {
        match (t.is_positive(), p.is_positive()) {
            (true, true) => c.tp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fp += 1,
            (true, false) => c.fn_ += 1,
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Sensitivity,
    Specificity,
    Accuracy,
    Precision,
    FScore,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::Sensitivity,
        Metric::Specificity,
        Metric::Accuracy,
        Metric::Precision,
        Metric::FScore,
    ];

    /// Column heading used in result tables.
    pub fn short_name(self) -> &'static str {
        match self {
            Metric::Sensitivity => "SEN",
            Metric::Specificity => "SPE",
            Metric::Accuracy => "ACC",
            Metric::Precision => "PRE",
            Metric::FScore => "F-score",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

/// The five rates, each in [0, 1]. Metrics whose denominator was zero are
/// reported as 0 and listed in `degenerate`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub sensitivity: f64,
    pub specificity: f64,
    pub accuracy: f64,
    pub precision: f64,
    pub f_score: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub degenerate: Vec<Metric>,
}

impl MetricSet {
    pub fn get(&self, m: Metric) -> f64 {
        match m {
            Metric::Sensitivity => self.sensitivity,
            Metric::Specificity => self.specificity,
            Metric::Accuracy => self.accuracy,
            Metric::Precision => self.precision,
            Metric::FScore => self.f_score,
        }
    }

    fn set(&mut self, m: Metric, v: f64) {
        match m {
            Metric::Sensitivity => self.sensitivity = v,
            Metric::Specificity => self.specificity = v,
            Metric::Accuracy => self.accuracy = v,
            Metric::Precision => self.precision = v,
            Metric::FScore => self.f_score = v,
        }
    }

    pub fn values(&self) -> [f64; 5] {
        Metric::ALL.map(|m| self.get(m))
    }

    pub fn is_degenerate(&self, m: Metric) -> bool {
        self.degenerate.contains(&m)
    }

    /// Element-wise mean and population standard deviation. Degenerate
    /// flags of the inputs are merged into the mean.
    pub fn aggregate(sets: &[MetricSet]) -> (MetricSet, MetricSet) {
        let n = sets.len().max(1) as f64;
        let mut mean = MetricSet::default();
        let mut std = MetricSet::default();
        for m in Metric::ALL {
            let mu = sets.iter().map(|s| s.get(m)).sum::<f64>() / n;
            let var = sets.iter().map(|s| (s.get(m) - mu).powi(2)).sum::<f64>() / n;
            mean.set(m, mu);
            std.set(m, var.sqrt());
        }
        let mut flags: Vec<Metric> = sets.iter().flat_map(|s| s.degenerate.iter().copied()).collect();
        flags.sort();
        flags.dedup();
        mean.degenerate = flags;
        (mean, std)
    }
}

fn ratio(num: u64, den: u64, metric: Metric, flags: &mut Vec<Metric>) -> f64 {
    if den == 0 {
        flags.push(metric);
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Sensitivity TP/(TP+FN), specificity TN/(TN+FP), accuracy
/// (TP+TN)/(TP+TN+FN+FP), precision TP/(TP+FP), F-score 2TP/(2TP+FP+FN).
pub fn metrics(c: &ConfusionCounts) -> Result<MetricSet> {
    if c.total() == 0 {
        return Err(Error::EmptyCounts);
    }
    let mut flags = Vec::new();
    let sensitivity = ratio(c.tp, c.tp + c.fn_, Metric::Sensitivity, &mut flags);
    let specificity = ratio(c.tn, c.tn + c.fp, Metric::Specificity, &mut flags);
    let accuracy = ratio(c.tp + c.tn, c.total(), Metric::Accuracy, &mut flags);
    let precision = ratio(c.tp, c.tp + c.fp, Metric::Precision, &mut flags);
    let f_score = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn_, Metric::FScore, &mut flags);
    Ok(MetricSet {
        sensitivity,
        specificity,
        accuracy,
        precision,
        f_score,
        degenerate: flags,
    })
}
