use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use super::{
    compute_metrics, group_split, history_features, sample_anchors, train_classifier, tune_threshold,
    vision_features, AnchorSample, FeatureSet, Fold, GbdtConfig, LogisticConfig, MetricsReport, ModelKind, Pca,
    SplitAssignment, DEFAULT_DELTA, DEFAULT_RATIOS, DEFAULT_STEP, DEFAULT_WINDOW, TEXT_DIM,
};
use crate::kinematics::compute_series;
use crate::timeline::ShowTimeline;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub step: f64,
    pub delta: f64,
    pub window: f64,
    pub seed: u64,
    pub ratios: [f64; 3],
    pub text_dim: usize,
    pub model: ModelKind,
    pub gbdt: GbdtConfig,
    pub logistic: LogisticConfig,
    /// Shuffle training and validation labels (chance-level control).
    pub permute_labels: bool,
    /// Extract features for several shows at once.
    pub parallel: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            step: DEFAULT_STEP,
            delta: DEFAULT_DELTA,
            window: DEFAULT_WINDOW,
            seed: 0,
            ratios: DEFAULT_RATIOS,
            text_dim: TEXT_DIM,
            model: ModelKind::Gbdt,
            gbdt: GbdtConfig::default(),
            logistic: LogisticConfig::default(),
            permute_labels: false,
            parallel: false,
        }
    }
}

/// Anchors of one show with history and vision features. Pose scalars use
/// unsmoothed kinematics so that no frame after `t` contributes.
pub fn extract_anchors(show: &ShowTimeline, cfg: &BenchConfig) -> Vec<AnchorSample> {
    let events = show.laugh_events();
    let shots = show.shot_frames();
    let kin = compute_series(&show.pose_frames());
    let embeddings: Vec<Option<Arc<Vec<f64>>>> = show
        .timeline
        .iter()
        .map(|b| b.embedding.clone().map(Arc::new))
        .collect();
    sample_anchors(&events, show.end_time(), cfg.step, cfg.delta)
        .into_iter()
        .map(|(t, label)| {
            let block = show.block_at(t);
            AnchorSample {
                show_id: show.show_id.clone(),
                t,
                label,
                history: history_features(&events, t, cfg.window),
                vision: vision_features(&shots, &kin, t, cfg.window),
                text: Vec::new(),
                block,
                embedding: block.and_then(|b| embeddings[b].clone()),
            }
        })
        .collect()
}

/// Fits the text projection on training anchors only. Each anchor
/// contributes its block's embedding once; repeated blocks enter as weights.
pub fn fit_text_pca(anchors: &[AnchorSample], train: &BTreeSet<&str>, k: usize) -> Result<Option<Pca>> {
    let mut pooled: BTreeMap<(&str, usize), (&[f64], f64)> = BTreeMap::new();
    for a in anchors.iter().filter(|a| train.contains(a.show_id.as_str())) {
        if let (Some(b), Some(e)) = (a.block, a.embedding.as_ref()) {
            pooled.entry((a.show_id.as_str(), b)).or_insert((e.as_slice(), 0.0)).1 += 1.0;
        }
    }
    let rows: Vec<&[f64]> = pooled.values().map(|v| v.0).collect();
    let weights: Vec<f64> = pooled.values().map(|v| v.1).collect();
    if weights.iter().sum::<f64>() < 2.0 {
        log::warn!("no training embeddings; text features are zero");
        return Ok(None);
    }
    Pca::fit_weighted(&rows, &weights, k).map(Some)
}

/// Fills `text` for every anchor; anchors without an embedding get zeros.
pub fn project_text(anchors: &mut [AnchorSample], pca: Option<&Pca>, k: usize) {
    let mut cache: BTreeMap<(String, usize), Vec<f64>> = BTreeMap::new();
    for a in anchors.iter_mut() {
        a.text = match (pca, a.block, &a.embedding) {
            (Some(p), Some(b), Some(e)) => cache
                .entry((a.show_id.clone(), b))
                .or_insert_with(|| p.transform(e))
                .clone(),
            _ => vec![0.0; k],
        };
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub set: FeatureSet,
    pub metrics: MetricsReport,
    pub n_test: usize,
}

pub struct BenchReport {
    pub split: SplitAssignment,
    pub n_anchors: usize,
    pub positive_rate: f64,
    pub rows: Vec<AblationRow>,
    pub models: Vec<(FeatureSet, Value)>,
    pub pca: Option<Pca>,
    pub anchors: Vec<AnchorSample>,
}

fn matrix(anchors: &[&AnchorSample], set: FeatureSet) -> Vec<Vec<f64>> {
    anchors.iter().map(|a| a.features(set)).collect()
}

/// Extracts anchors for every show, splits shows, fits the text projection
/// on training shows and runs one train/tune/test cycle per feature set on
/// the same split.
pub fn run_ablation(shows: &[ShowTimeline], cfg: &BenchConfig, sets: &[FeatureSet]) -> Result<BenchReport> {
    if !(cfg.step > 0.0 && cfg.delta > 0.0 && cfg.window > 0.0) {
        return Err(Error::invalid("step, delta and window must be positive"));
    }
    let mut order: Vec<&ShowTimeline> = shows.iter().collect();
    order.sort_by(|a, b| a.show_id.cmp(&b.show_id));
    if order.windows(2).any(|w| w[0].show_id == w[1].show_id) {
        return Err(Error::invalid("duplicate show ids"));
    }
    let per_show: Vec<Vec<AnchorSample>> = if cfg.parallel {
        order.par_iter().map(|s| extract_anchors(s, cfg)).collect()
    } else {
        order.iter().map(|s| extract_anchors(s, cfg)).collect()
    };
    let mut anchors: Vec<AnchorSample> = per_show.into_iter().flatten().collect();

    let ids: Vec<String> = order.iter().map(|s| s.show_id.clone()).collect();
    let split = group_split(&ids, cfg.ratios, cfg.seed)?;
    let folds = split.fold_of();
    let train_ids: BTreeSet<&str> = split.train.iter().map(String::as_str).collect();
    let pca = fit_text_pca(&anchors, &train_ids, cfg.text_dim)?;
    project_text(&mut anchors, pca.as_ref(), cfg.text_dim);

    if cfg.permute_labels {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_1abe);
        for fold in [Fold::Train, Fold::Val] {
            let idx: Vec<usize> = (0..anchors.len())
                .filter(|&i| folds[anchors[i].show_id.as_str()] == fold)
                .collect();
            let mut labels: Vec<bool> = idx.iter().map(|&i| anchors[i].label).collect();
            labels.shuffle(&mut rng);
            for (&i, l) in idx.iter().zip(labels) {
                anchors[i].label = l;
            }
        }
    }

    let by_fold = |f: Fold| -> Vec<&AnchorSample> {
        anchors.iter().filter(|a| folds[a.show_id.as_str()] == f).collect()
    };
    let (train, val, test) = (by_fold(Fold::Train), by_fold(Fold::Val), by_fold(Fold::Test));
    let labels = |v: &[&AnchorSample]| -> Vec<bool> { v.iter().map(|a| a.label).collect() };
    let (ytr, yva, yte) = (labels(&train), labels(&val), labels(&test));
    log::info!(
        "{} anchors: train {}, val {}, test {}",
        anchors.len(),
        train.len(),
        val.len(),
        test.len()
    );

    let mut rows = Vec::with_capacity(sets.len());
    let mut models = Vec::with_capacity(sets.len());
    for &set in sets {
        let model = train_classifier(cfg.model, &matrix(&train, set), &ytr, &cfg.gbdt, &cfg.logistic)?;
        let score = |v: &[&AnchorSample]| -> Vec<f64> { v.iter().map(|a| model.predict_proba(&a.features(set))).collect() };
        let threshold = tune_threshold(&score(&val), &yva)?;
        let metrics = compute_metrics(&score(&test), &yte, threshold)?;
        log::info!("{}: AUROC {:.3} AUPRC {:.3}", set.name(), metrics.auroc, metrics.auprc);
        rows.push(AblationRow { set, metrics, n_test: test.len() });
        let mut m = model.to_json();
        m["features"] = json!(set.feature_names());
        m["threshold"] = json!(threshold);
        models.push((set, m));
    }
    let positive_rate = if anchors.is_empty() {
        0.0
    } else {
        anchors.iter().filter(|a| a.label).count() as f64 / anchors.len() as f64
    };
    Ok(BenchReport {
        split,
        n_anchors: anchors.len(),
        positive_rate,
        rows,
        models,
        pca,
        anchors,
    })
}

fn write_csv(header: Vec<String>, rows: impl Iterator<Item = Vec<String>>) -> Result<String> {
    let err = |e: csv::Error| Error::invalid(format!("csv: {e}"));
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header).map_err(err)?;
    for r in rows {
        w.write_record(&r).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::invalid(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn ablation_csv(rows: &[AblationRow]) -> Result<String> {
    let header = ["system", "auroc", "auprc", "f1", "precision", "recall", "threshold", "positive_rate", "n_test"]
        .map(String::from)
        .to_vec();
    write_csv(
        header,
        rows.iter().map(|r| {
            let m = &r.metrics;
            vec![
                r.set.name().to_string(),
                m.auroc.to_string(),
                m.auprc.to_string(),
                m.f1.to_string(),
                m.precision.to_string(),
                m.recall.to_string(),
                m.threshold.to_string(),
                m.positive_rate.to_string(),
                r.n_test.to_string(),
            ]
        }),
    )
}

pub fn anchors_csv(anchors: &[AnchorSample], split: &SplitAssignment) -> Result<String> {
    let folds = split.fold_of();
    let mut header: Vec<String> = ["show_id", "t", "label", "fold"].map(String::from).to_vec();
    header.extend(FeatureSet::All.feature_names());
    write_csv(
        header,
        anchors.iter().map(|a| {
            let fold = match folds.get(a.show_id.as_str()) {
                Some(Fold::Train) => "train",
                Some(Fold::Val) => "val",
                Some(Fold::Test) => "test",
                None => "",
            };
            let mut r = vec![a.show_id.clone(), a.t.to_string(), (a.label as u8).to_string(), fold.to_string()];
            r.extend(a.features(FeatureSet::All).iter().map(|v| v.to_string()));
            r
        }),
    )
}
