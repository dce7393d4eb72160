//! Pipeline configuration: a `key = value` text file whose entries can be
//! overridden one by one (command-line flags win over the file).

use std::path::{Path, PathBuf};

use crate::analysis::DEFAULT_FEATURES;
use crate::kinematics::DEFAULT_SHOT_FILTER;
use crate::onset::{BenchConfig, FeatureSet, GbdtConfig, LogisticConfig, ModelKind, DEFAULT_RATIOS};
use crate::subtitle::Stopwords;
use crate::timeline::ShotLabel;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub corpus: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub target_duration: f64,
    pub smoothing_window: f64,
    pub laugh_threshold: f64,
    pub laugh_stride: f64,
    pub centroid_threshold: f64,
    pub delta: f64,
    pub step: f64,
    pub history_window: f64,
    pub split_ratios: [f64; 3],
    pub seed: u64,
    pub shot_filter: Vec<ShotLabel>,
    pub analysis_features: Vec<String>,
    pub feature_sets: Vec<FeatureSet>,
    pub model: ModelKind,
    pub text_dim: usize,
    pub gbdt: GbdtConfig,
    pub filler_file: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            corpus: None,
            out: None,
            target_duration: 60.0,
            smoothing_window: 30.0,
            laugh_threshold: 0.3,
            laugh_stride: 0.8,
            centroid_threshold: 0.30,
            delta: 2.0,
            step: 1.0,
            history_window: 10.0,
            split_ratios: DEFAULT_RATIOS,
            seed: 0,
            shot_filter: DEFAULT_SHOT_FILTER.to_vec(),
            analysis_features: DEFAULT_FEATURES.iter().map(|s| s.to_string()).collect(),
            feature_sets: FeatureSet::ALL.to_vec(),
            model: ModelKind::Gbdt,
            text_dim: 64,
            gbdt: GbdtConfig::default(),
            filler_file: None,
        }
    }
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::invalid(format!("config key {key}: cannot parse {value:?}")))
}

fn list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

/// Accepts `a,b,c` (must sum to 1) or `a:b:c` (normalized).
fn parse_ratios(value: &str) -> Result<[f64; 3]> {
    let (parts, normalize): (Vec<&str>, bool) = if value.contains(':') {
        (value.split(':').map(str::trim).collect(), true)
    } else {
        (list(value).collect(), false)
    };
    if parts.len() != 3 {
        return Err(Error::invalid(format!("split_ratios needs three values, got {value:?}")));
    }
    let mut r = [0.0; 3];
    for (slot, p) in r.iter_mut().zip(&parts) {
        *slot = num("split_ratios", p)?;
    }
    if normalize {
        let s: f64 = r.iter().sum();
        r = r.map(|v| v / s);
    }
    Ok(r)
}

impl PipelineConfig {
    /// Sets one entry by key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "corpus" => self.corpus = Some(PathBuf::from(value)),
            "out" => self.out = Some(PathBuf::from(value)),
            "target_duration" => self.target_duration = num(key, value)?,
            "smoothing_window" => self.smoothing_window = num(key, value)?,
            "laugh_threshold" => self.laugh_threshold = num(key, value)?,
            "laugh_stride" => self.laugh_stride = num(key, value)?,
            "centroid_threshold" => self.centroid_threshold = num(key, value)?,
            "delta" => self.delta = num(key, value)?,
            "step" => self.step = num(key, value)?,
            "history_window" => self.history_window = num(key, value)?,
            "split_ratios" => self.split_ratios = parse_ratios(value)?,
            "seed" => self.seed = num(key, value)?,
            "shot_filter" => self.shot_filter = list(value).map(str::parse).collect::<Result<_>>()?,
            "analysis_features" => self.analysis_features = list(value).map(String::from).collect(),
            "feature_sets" => self.feature_sets = list(value).map(str::parse).collect::<Result<_>>()?,
            "model" => self.model = value.parse()?,
            "text_dim" => self.text_dim = num(key, value)?,
            "gbdt.n_rounds" => self.gbdt.n_rounds = num(key, value)?,
            "gbdt.learning_rate" => self.gbdt.learning_rate = num(key, value)?,
            "gbdt.max_leaf_nodes" => self.gbdt.max_leaf_nodes = num(key, value)?,
            "gbdt.min_samples_leaf" => self.gbdt.min_samples_leaf = num(key, value)?,
            "gbdt.max_bins" => self.gbdt.max_bins = num(key, value)?,
            "gbdt.l2" => self.gbdt.l2 = num(key, value)?,
            "filler_file" => self.filler_file = Some(PathBuf::from(value)),
            other => return Err(Error::invalid(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                message: format!("expected key = value, got {line:?}"),
            })?;
            self.set(k, v).map_err(|e| Error::Parse { line: i + 1, message: e.to_string() })?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(&crate::io::read_string(path)?)?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("target_duration", self.target_duration),
            ("smoothing_window", self.smoothing_window),
            ("laugh_stride", self.laugh_stride),
            ("delta", self.delta),
            ("step", self.step),
            ("history_window", self.history_window),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.laugh_threshold) {
            return Err(Error::invalid("laugh_threshold must be in [0, 1]"));
        }
        if !(-1.0..=1.0).contains(&self.centroid_threshold) {
            return Err(Error::invalid("centroid_threshold must be in [-1, 1]"));
        }
        if self.split_ratios.iter().any(|r| *r < 0.0) || (self.split_ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("split_ratios must sum to 1, got {:?}", self.split_ratios)));
        }
        if self.text_dim == 0 {
            return Err(Error::invalid("text_dim must be at least 1"));
        }
        Ok(())
    }

    /// Standard English stopwords plus the bundled fillers, or the fillers
    /// of `filler_file` when one is set.
    pub fn stopwords(&self) -> Result<Stopwords> {
        match &self.filler_file {
            Some(p) => Stopwords::with_filler_file(p),
            None => Ok(Stopwords::default_set()),
        }
    }

    pub fn bench(&self, parallel: bool) -> BenchConfig {
        BenchConfig {
            step: self.step,
            delta: self.delta,
            window: self.history_window,
            seed: self.seed,
            ratios: self.split_ratios,
            text_dim: self.text_dim,
            model: self.model,
            gbdt: GbdtConfig { parallel, ..self.gbdt.clone() },
            logistic: LogisticConfig::default(),
            permute_labels: false,
            parallel,
        }
    }
}
