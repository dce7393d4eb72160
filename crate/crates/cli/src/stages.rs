//! Pipeline stages behind the subcommands. Every output goes through
//! `write_atomic`; inputs are never modified.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use laughtrack::analysis::{
    clustermap, clustermap_csv, correlations_csv, feature_matrix, laughter_correlations, profiles_csv, topic_profiles,
};
use laughtrack::config::PipelineConfig;
use laughtrack::corpus::{load_corpus, postprocess_topics, read_descriptors, Corpus, DESCRIPTORS_FILE};
use laughtrack::io::{read_string, write_atomic};
use laughtrack::kinematics::{compute_series, filter_by_shots, smooth, write_samples, KinematicSample};
use laughtrack::laughter::{merge_windows, read_windows};
use laughtrack::onset::{ablation_csv, anchors_csv, run_ablation};
use laughtrack::subtitle::{build_blocks, parse_file, read_text_blocks, write_text_blocks};
use laughtrack::synth::{generate, write_corpus, SynthConfig};
use laughtrack::timeline::ingest::{read_pose_frames, read_shot_frames, write_laugh_events};
use laughtrack::timeline::{deserialize_show, serialize_show};
use laughtrack::topic::{
    diagnostics, normalize_embedding, npmi_coherence, read_assignments, resolve_descriptors, select_model,
    write_assignments, DescriptorRecord, Subsample, TopicAssignment, TopicModelDiagnostics,
};
use laughtrack::{Error, ShowTimeline};
use rayon::prelude::*;
use serde_json::{json, Value};

fn required<'a>(p: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    match p {
        Some(p) => Ok(p),
        None => Err(Error::InvalidInput(format!("missing --{flag} (or `{flag} = ...` in the config file)")).into()),
    }
}

fn write_json(path: &Path, v: &Value) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(v)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)?;
    Ok(())
}

fn summarize(warnings: &[String]) {
    if !warnings.is_empty() {
        log::warn!("finished with {} warning(s); see above", warnings.len());
    }
}

pub fn parse_subs(cfg: &PipelineConfig, input: &Path, out: &Path) -> Result<()> {
    let parsed = parse_file(input, &laughtrack::io::read_bytes(input)?)?;
    if parsed.latin1_fallback {
        log::warn!("{}: not UTF-8, decoded as Latin-1", input.display());
    }
    if parsed.skipped > 0 {
        log::warn!("{}: skipped {} malformed cue(s)", input.display(), parsed.skipped);
    }
    let stop = cfg.stopwords()?;
    let blocks: Vec<_> = build_blocks(&parsed.cues, cfg.target_duration)?
        .into_iter()
        .map(|b| b.tokenized(&stop))
        .collect();
    write_atomic(out, write_text_blocks(&blocks).as_bytes())?;
    log::info!("{} cues -> {} blocks", parsed.cues.len(), blocks.len());
    Ok(())
}

pub fn merge_laughs(cfg: &PipelineConfig, input: &Path, out: &Path) -> Result<()> {
    let windows = read_windows(&read_string(input)?).with_context(|| input.display().to_string())?;
    let events = merge_windows(&windows, cfg.laugh_threshold);
    write_atomic(out, write_laugh_events(&events).as_bytes())?;
    log::info!("{} windows -> {} events", windows.len(), events.len());
    Ok(())
}

/// Wide-shot filtering, per-frame signals and smoothing.
fn show_kinematics(show: &ShowTimeline, cfg: &PipelineConfig) -> Result<Vec<KinematicSample>> {
    let poses = filter_by_shots(&show.pose_frames(), &show.shot_frames(), &cfg.shot_filter);
    Ok(smooth(&compute_series(&poses), cfg.smoothing_window)?)
}

pub fn kinematics(cfg: &PipelineConfig, input: &Path, shots: Option<&Path>, out: &Path) -> Result<()> {
    let mut poses = read_pose_frames(&read_string(input)?).with_context(|| input.display().to_string())?;
    poses.sort_by(|a, b| a.time.total_cmp(&b.time));
    if let Some(s) = shots {
        let shots = read_shot_frames(&read_string(s)?).with_context(|| s.display().to_string())?;
        let before = poses.len();
        poses = filter_by_shots(&poses, &shots, &cfg.shot_filter);
        log::info!("shot filter kept {} of {before} pose frames", poses.len());
    }
    let samples = smooth(&compute_series(&poses), cfg.smoothing_window)?;
    write_atomic(out, write_samples(&samples).as_bytes())?;
    Ok(())
}

fn is_unified(p: &Path) -> bool {
    p.is_file()
        && p.extension().is_some_and(|e| e == "json")
        && p.file_name().is_some_and(|n| n != DESCRIPTORS_FILE)
}

/// Unified show JSONs from a directory, or a raw corpus when the directory
/// holds none.
fn load_shows(dir: &Path, cfg: &PipelineConfig, parallel: bool) -> Result<Corpus> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::Io { path: dir.to_path_buf(), source: e })?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| is_unified(p))
        .collect();
    if files.is_empty() {
        return Ok(load_corpus(dir, cfg, &cfg.stopwords()?, parallel)?);
    }
    files.sort();
    let read = |p: &PathBuf| -> Result<ShowTimeline> {
        deserialize_show(&laughtrack::io::read_bytes(p)?).with_context(|| p.display().to_string())
    };
    let mut shows: Vec<ShowTimeline> = if parallel {
        files.par_iter().map(read).collect::<Result<_>>()?
    } else {
        files.iter().map(read).collect::<Result<_>>()?
    };
    shows.sort_by(|a, b| a.show_id.cmp(&b.show_id));
    Ok(Corpus { shows, warnings: Vec::new() })
}

fn write_unified(shows: &[ShowTimeline], dir: &Path) -> Result<()> {
    for s in shows {
        write_atomic(&dir.join(format!("{}.json", s.show_id)), &serialize_show(s))?;
    }
    Ok(())
}

pub fn align(cfg: &PipelineConfig, parallel: bool) -> Result<()> {
    let corpus = required(&cfg.corpus, "corpus")?;
    let out = required(&cfg.out, "out")?;
    let c = load_corpus(corpus, cfg, &cfg.stopwords()?, parallel)?;
    write_unified(&c.shows, out)?;
    log::info!("wrote {} unified show(s) to {}", c.shows.len(), out.display());
    summarize(&c.warnings);
    Ok(())
}

fn diag_json(d: &TopicModelDiagnostics) -> Value {
    let mut v = serde_json::to_value(d).expect("diagnostics serialize");
    v["violations"] = json!(d.violations());
    v
}

fn top_words(records: &[DescriptorRecord]) -> Vec<(i32, Vec<String>)> {
    records.iter().map(|r| (r.topic_id, r.top_words.clone())).collect()
}

fn read_documents(path: &Path) -> Result<Vec<Vec<String>>> {
    Ok(read_text_blocks(&read_string(path)?)
        .with_context(|| path.display().to_string())?
        .into_iter()
        .map(|b| b.tokens)
        .collect())
}

fn read_descriptor_file(path: &Path) -> Result<Vec<DescriptorRecord>> {
    read_descriptors(path).with_context(|| path.display().to_string())
}

fn read_assignment_file(path: &Path) -> Result<Vec<TopicAssignment>> {
    read_assignments(&read_string(path)?).with_context(|| path.display().to_string())
}

/// Model selection over candidate block sizes.
pub fn topic_candidates(dir: &Path, subsample: Option<usize>, seed: u64, out: &Path) -> Result<()> {
    let mut entries: Vec<(u32, PathBuf)> = Vec::new();
    for e in std::fs::read_dir(dir).map_err(|e| Error::Io { path: dir.to_path_buf(), source: e })? {
        let p = e.map_err(|e| Error::Io { path: dir.to_path_buf(), source: e })?.path();
        if !p.is_dir() {
            continue;
        }
        match p.file_name().and_then(|n| n.to_str()).and_then(|n| n.trim_end_matches('s').parse().ok()) {
            Some(size) => entries.push((size, p)),
            None => log::warn!("{}: not a block size in seconds, skipped", p.display()),
        }
    }
    if entries.is_empty() {
        bail!(Error::InvalidInput(format!("{}: no candidate directories", dir.display())));
    }
    let sub = subsample.map(|size| Subsample { size, seed });
    let mut cands = BTreeMap::new();
    for (size, p) in entries {
        let d = diagnostics(&read_assignment_file(&p.join("assignments.jsonl"))?)?;
        let docs = read_documents(&p.join("documents.jsonl"))?;
        let words = top_words(&read_descriptor_file(&p.join(DESCRIPTORS_FILE))?);
        let c = npmi_coherence(&words, &docs, sub)?;
        cands.insert(size, d.with_coherence(c));
    }
    let selected = select_model(&cands);
    let report = json!({
        "candidates": cands.iter().map(|(k, d)| (k.to_string(), diag_json(d))).collect::<serde_json::Map<_, _>>(),
        "selected": selected.as_ref().ok(),
    });
    write_json(&out.join("topic_eval.json"), &report)?;
    let size = selected?;
    log::info!("selected {size} s blocks");
    Ok(())
}

/// Diagnostics of one model before and after outlier reduction, plus the
/// reduced assignments.
pub fn topic_single(
    cfg: &PipelineConfig,
    assignments: &Path,
    descriptors: &Path,
    documents: Option<&Path>,
    subsample: Option<usize>,
    out: &Path,
) -> Result<()> {
    let asg: Vec<TopicAssignment> = read_assignment_file(assignments)?;
    let records = read_descriptor_file(descriptors)?;
    let words = top_words(&records);
    let unit: Vec<TopicAssignment> = asg
        .iter()
        .map(|a| Ok(TopicAssignment { embedding: normalize_embedding(&a.embedding)?, ..a.clone() }))
        .collect::<laughtrack::Result<_>>()?;
    let desc = resolve_descriptors(records, &unit)?;
    let reduced = postprocess_topics(&asg, &desc, cfg.centroid_threshold)?;
    let mut before = diagnostics(&asg)?;
    let mut after = diagnostics(&reduced)?;
    if let Some(d) = documents {
        let docs = read_documents(d)?;
        let c = npmi_coherence(&words, &docs, subsample.map(|size| Subsample { size, seed: cfg.seed }))?;
        before = before.with_coherence(c);
        after = after.with_coherence(c);
    }
    let outliers = |v: &[TopicAssignment]| v.iter().filter(|a| a.is_outlier()).count();
    write_atomic(&out.join("assignments.jsonl"), write_assignments(&reduced).as_bytes())?;
    write_json(
        &out.join("topic_eval.json"),
        &json!({
            "before": diag_json(&before),
            "after": diag_json(&after),
            "outliers_before": outliers(&asg),
            "outliers_after": outliers(&reduced),
        }),
    )?;
    log::info!("outliers {} -> {}", outliers(&asg), outliers(&reduced));
    Ok(())
}

fn analysis_outputs(shows: &[ShowTimeline], cfg: &PipelineConfig, out: &Path, parallel: bool) -> Result<()> {
    let kin: Vec<Vec<KinematicSample>> = if parallel {
        shows.par_iter().map(|s| show_kinematics(s, cfg)).collect::<Result<_>>()?
    } else {
        shows.iter().map(|s| show_kinematics(s, cfg)).collect::<Result<_>>()?
    };
    for (s, k) in shows.iter().zip(&kin) {
        write_atomic(&out.join("kinematics").join(format!("{}.jsonl", s.show_id)), write_samples(k).as_bytes())?;
    }
    let profiles = topic_profiles(shows, &kin)?;
    write_atomic(&out.join("topic_profiles.csv"), profiles_csv(&profiles)?.as_bytes())?;
    let features: Vec<&str> = cfg.analysis_features.iter().map(String::as_str).collect();
    match laughter_correlations(&profiles, &features) {
        Ok(c) => write_atomic(&out.join("correlations.csv"), correlations_csv(&c)?.as_bytes())?,
        Err(e) => log::warn!("correlations skipped: {e}"),
    }
    match feature_matrix(&profiles, &features).and_then(|m| clustermap(&m)) {
        Ok(cm) => write_atomic(&out.join("clustermap.csv"), clustermap_csv(&cm)?.as_bytes())?,
        Err(e) => log::warn!("clustermap skipped: {e}"),
    }
    log::info!("{} topic profile(s) from {} show(s)", profiles.len(), shows.len());
    Ok(())
}

pub fn analyze(cfg: &PipelineConfig, parallel: bool) -> Result<()> {
    let c = load_shows(required(&cfg.corpus, "corpus")?, cfg, parallel)?;
    analysis_outputs(&c.shows, cfg, required(&cfg.out, "out")?, parallel)?;
    summarize(&c.warnings);
    Ok(())
}

fn bench_outputs(shows: &[ShowTimeline], cfg: &PipelineConfig, out: &Path, parallel: bool, dump: bool, permute: bool) -> Result<()> {
    let mut bc = cfg.bench(parallel);
    bc.permute_labels = permute;
    let report = run_ablation(shows, &bc, &cfg.feature_sets)?;
    write_atomic(&out.join("ablation.csv"), ablation_csv(&report.rows)?.as_bytes())?;
    write_json(
        &out.join("split.json"),
        &json!({
            "seed": cfg.seed,
            "ratios": cfg.split_ratios,
            "train": report.split.train,
            "val": report.split.val,
            "test": report.split.test,
        }),
    )?;
    let models: serde_json::Map<String, Value> =
        report.models.iter().map(|(set, m)| (set.name().to_string(), m.clone())).collect();
    write_json(
        &out.join("model.json"),
        &json!({
            "model": cfg.model.as_str(),
            "text_pca": report.pca,
            "feature_sets": models,
        }),
    )?;
    if dump {
        write_atomic(&out.join("anchors.csv"), anchors_csv(&report.anchors, &report.split)?.as_bytes())?;
    }
    log::info!(
        "{} anchors, positive rate {:.3}; {} row(s) written",
        report.n_anchors,
        report.positive_rate,
        report.rows.len()
    );
    for r in &report.rows {
        log::info!("{:<20} AUROC {:.3} AUPRC {:.3} F1 {:.3}", r.set.name(), r.metrics.auroc, r.metrics.auprc, r.metrics.f1);
    }
    Ok(())
}

pub fn onset_bench(cfg: &PipelineConfig, parallel: bool, dump: bool, permute: bool) -> Result<()> {
    let c = load_shows(required(&cfg.corpus, "corpus")?, cfg, parallel)?;
    bench_outputs(&c.shows, cfg, required(&cfg.out, "out")?, parallel, dump, permute)?;
    summarize(&c.warnings);
    Ok(())
}

/// Corpus-level topic diagnostics over the aligned blocks.
fn topic_outputs(shows: &[ShowTimeline], cfg: &PipelineConfig, corpus: &Path, out: &Path) -> Result<()> {
    let asg: Vec<TopicAssignment> = shows
        .iter()
        .flat_map(|s| &s.timeline)
        .enumerate()
        .map(|(i, b)| TopicAssignment { block_index: i, topic_id: b.topic_id, embedding: Vec::new() })
        .collect();
    let mut d = match diagnostics(&asg) {
        Ok(d) => d,
        Err(e) => {
            log::warn!("topic diagnostics skipped: {e}");
            return Ok(());
        }
    };
    let desc = corpus.join(DESCRIPTORS_FILE);
    if desc.is_file() {
        let stop = cfg.stopwords()?;
        let docs: Vec<Vec<String>> = shows
            .iter()
            .flat_map(|s| &s.timeline)
            .map(|b| laughtrack::subtitle::remove_stopwords(&b.text, &stop))
            .collect();
        match npmi_coherence(&top_words(&read_descriptor_file(&desc)?), &docs, None) {
            Ok(c) => d = d.with_coherence(c),
            Err(e) => log::warn!("coherence skipped: {e}"),
        }
    }
    for v in d.violations() {
        log::warn!("topic model validity: {v}");
    }
    write_json(&out.join("topic_eval.json"), &diag_json(&d))
}

pub fn all(cfg: &PipelineConfig, parallel: bool) -> Result<()> {
    let corpus = required(&cfg.corpus, "corpus")?;
    let out = required(&cfg.out, "out")?;
    let c = load_corpus(corpus, cfg, &cfg.stopwords()?, parallel)?;
    write_unified(&c.shows, &out.join("unified"))?;
    topic_outputs(&c.shows, cfg, corpus, &out.join("topics"))?;
    analysis_outputs(&c.shows, cfg, &out.join("analysis"), parallel)?;
    bench_outputs(&c.shows, cfg, &out.join("onset"), parallel, false, false)?;
    summarize(&c.warnings);
    Ok(())
}

pub fn synth(shows: usize, duration: f64, seed: u64, topics: usize, windows: bool, out: &Path) -> Result<()> {
    let cfg = SynthConfig { n_shows: shows, duration, seed, n_topics: topics, laugh_windows: windows, ..Default::default() };
    let generated = generate(&cfg)?;
    write_corpus(&cfg, &generated, out)?;
    log::info!("wrote {} synthetic show(s) to {}", generated.len(), out.display());
    Ok(())
}

