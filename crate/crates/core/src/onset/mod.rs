//! Short-horizon laughter onset prediction: anchor sampling, causal feature
//! extraction, show-level splits, classifiers, threshold tuning and metrics.

mod anchors;
mod bench;
mod features;
pub mod gbdt;
pub mod logistic;
mod metrics;
mod pca;
mod split;

use std::str::FromStr;
use std::sync::Arc;

use serde_json::Value;

pub use anchors::sample_anchors;
pub use bench::{
    ablation_csv, anchors_csv, extract_anchors, fit_text_pca, project_text, run_ablation, AblationRow, BenchConfig,
    BenchReport,
};
pub use features::{history_features, trend, vision_features, HISTORY_DIM, HISTORY_NAMES, SINCE_CAP, VISION_DIM, VISION_NAMES};
pub use gbdt::{train_gbdt, Gbdt, GbdtConfig};
pub use logistic::{train_logistic, Logistic, LogisticConfig};
pub use metrics::{auroc, average_precision, compute_metrics, tune_threshold, Confusion, MetricsReport};
pub use pca::Pca;
pub use split::{group_split, split_sizes, Fold, SplitAssignment};

use crate::{Error, Result};

pub const TEXT_DIM: usize = 64;
pub const DEFAULT_DELTA: f64 = 2.0;
pub const DEFAULT_STEP: f64 = 1.0;
pub const DEFAULT_WINDOW: f64 = 10.0;
pub const DEFAULT_RATIOS: [f64; 3] = [62.0 / 90.0, 14.0 / 90.0, 14.0 / 90.0];

/// A fitted binary scorer.
pub trait Classifier: Send + Sync {
    /// Score in `[0, 1]`; higher means a positive is more likely.
    fn predict_proba(&self, x: &[f64]) -> f64;
    fn to_json(&self) -> Value;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Gbdt,
    Logistic,
}

impl ModelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::Gbdt => "gbdt",
            ModelKind::Logistic => "logistic",
        }
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gbdt" | "hgb" | "trees" => Ok(ModelKind::Gbdt),
            "logistic" | "logreg" => Ok(ModelKind::Logistic),
            other => Err(Error::invalid(format!("unknown model {other:?}"))),
        }
    }
}

/// Weights inversely proportional to class frequency, `n / (2 * n_class)`.
pub fn balanced_weights(y: &[bool]) -> Vec<f64> {
    let n = y.len() as f64;
    let pos = y.iter().filter(|&&l| l).count() as f64;
    let neg = n - pos;
    y.iter()
        .map(|&l| if l { n / (2.0 * pos) } else { n / (2.0 * neg) })
        .collect()
}

/// Trains the chosen model with balanced class weights.
pub fn train_classifier(
    kind: ModelKind,
    x: &[Vec<f64>],
    y: &[bool],
    gbdt: &GbdtConfig,
    logistic: &LogisticConfig,
) -> Result<Box<dyn Classifier>> {
    if !(y.iter().any(|&l| l) && y.iter().any(|&l| !l)) {
        return Err(Error::invalid("training set must contain both classes"));
    }
    let w = balanced_weights(y);
    Ok(match kind {
        ModelKind::Gbdt => Box::new(train_gbdt(x, y, &w, gbdt)?),
        ModelKind::Logistic => Box::new(train_logistic(x, y, &w, logistic)?),
    })
}

/// Feature groups of the ablation, in table order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum FeatureSet {
    History,
    Text,
    Vision,
    TextVision,
    All,
}

impl FeatureSet {
    pub const ALL: [FeatureSet; 5] = [
        FeatureSet::History,
        FeatureSet::Text,
        FeatureSet::Vision,
        FeatureSet::TextVision,
        FeatureSet::All,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            FeatureSet::History => "history-only",
            FeatureSet::Text => "text-only",
            FeatureSet::Vision => "vision-only",
            FeatureSet::TextVision => "text+vision",
            FeatureSet::All => "text+vision+history",
        }
    }

    /// `(history, text, vision)` inclusion flags.
    pub fn groups(&self) -> (bool, bool, bool) {
        match self {
            FeatureSet::History => (true, false, false),
            FeatureSet::Text => (false, true, false),
            FeatureSet::Vision => (false, false, true),
            FeatureSet::TextVision => (false, true, true),
            FeatureSet::All => (true, true, true),
        }
    }

    pub fn feature_names(&self) -> Vec<String> {
        let (h, t, v) = self.groups();
        let mut names = Vec::new();
        if h {
            names.extend(HISTORY_NAMES.iter().map(|n| format!("history_{n}")));
        }
        if t {
            names.extend((0..TEXT_DIM).map(|i| format!("text_pc{i:02}")));
        }
        if v {
            names.extend(VISION_NAMES.iter().map(|n| format!("vision_{n}")));
        }
        names
    }
}

impl FromStr for FeatureSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s.trim().to_ascii_lowercase().chars().filter(|c| !c.is_whitespace()).collect();
        match norm.as_str() {
            "history" | "history-only" => Ok(FeatureSet::History),
            "text" | "text-only" => Ok(FeatureSet::Text),
            "vision" | "vision-only" => Ok(FeatureSet::Vision),
            "text+vision" => Ok(FeatureSet::TextVision),
            "all" | "text+vision+history" => Ok(FeatureSet::All),
            other => Err(Error::invalid(format!("unknown feature set {other:?}"))),
        }
    }
}

/// One onset-prediction example.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorSample {
    pub show_id: String,
    pub t: f64,
    /// A new laughter event starts within `[t, t + delta)`.
    pub label: bool,
    pub history: [f64; HISTORY_DIM],
    pub vision: [f64; VISION_DIM],
    /// PCA projection of the block embedding; empty until projected.
    pub text: Vec<f64>,
    /// Index of the containing block, if any.
    pub block: Option<usize>,
    /// Embedding of the containing block, shared between its anchors.
    pub embedding: Option<Arc<Vec<f64>>>,
}

impl AnchorSample {
    pub fn features(&self, set: FeatureSet) -> Vec<f64> {
        let (h, t, v) = set.groups();
        let mut out = Vec::with_capacity(HISTORY_DIM + TEXT_DIM + VISION_DIM);
        if h {
            out.extend_from_slice(&self.history);
        }
        if t {
            if self.text.is_empty() {
                out.extend(std::iter::repeat(0.0).take(TEXT_DIM));
            } else {
                out.extend_from_slice(&self.text);
            }
        }
        if v {
            out.extend_from_slice(&self.vision);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feature_set_names_round_trip() {
        for s in FeatureSet::ALL {
            assert_eq!(s.name().parse::<FeatureSet>().unwrap(), s);
        }
        assert_eq!("all".parse::<FeatureSet>().unwrap(), FeatureSet::All);
        assert_eq!("text + vision".parse::<FeatureSet>().unwrap(), FeatureSet::TextVision);
        assert!("audio".parse::<FeatureSet>().is_err());
    }

    #[test]
    fn group_widths() {
        assert_eq!(FeatureSet::All.feature_names().len(), 94);
        assert_eq!(FeatureSet::History.feature_names().len(), 10);
        assert_eq!(FeatureSet::TextVision.feature_names().len(), 84);
    }

    #[test]
    fn balanced_weight_sums() {
        let y = [true, false, false, false];
        let w = balanced_weights(&y);
        assert_eq!(w, vec![2.0, 2.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0]);
    }
}
