//! Corpus layout and show assembly.
//!
//! A corpus directory holds one subdirectory per show:
//!
//! ```text
//! <corpus>/<show>/subtitles.srt | subtitles.vtt
//!                 laugh_events.jsonl   merged events, or
//!                 laughter.jsonl       raw stride-window scores
//!                 shots.jsonl
//!                 poses.jsonl
//!                 topics.jsonl         one topic assignment per text block
//! <corpus>/descriptors.json            optional topic descriptors
//! ```
//!
//! Any per-show file may be missing; the show is still assembled and the
//! gap is reported.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::PipelineConfig;
use crate::io::{read_bytes, read_string};
use crate::laughter::{merge_windows, read_windows};
use crate::subtitle::{build_blocks, parse_file, Stopwords, TextBlock};
use crate::timeline::ingest::{read_laugh_events, read_pose_frames, read_shot_frames};
use crate::timeline::{align_show, grid_spans, BlockSeed, LaughterEvent, PoseFrame, ShotFrame, ShowTimeline, Streams};
use crate::topic::{
    centroid_reassign, gap_fill, normalize_embedding, read_assignments, resolve_descriptors, DescriptorRecord,
    TopicAssignment, TopicDescriptor, OUTLIER,
};
use crate::{Error, Result};

pub const DESCRIPTORS_FILE: &str = "descriptors.json";

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RawShow {
    pub id: String,
    pub dir: PathBuf,
    pub subtitles: Option<PathBuf>,
    pub laugh_events: Option<PathBuf>,
    pub laugh_windows: Option<PathBuf>,
    pub shots: Option<PathBuf>,
    pub poses: Option<PathBuf>,
    pub topics: Option<PathBuf>,
}

fn existing(dir: &Path, name: &str) -> Option<PathBuf> {
    let p = dir.join(name);
    p.is_file().then_some(p)
}

impl RawShow {
    pub fn from_dir(dir: &Path) -> Self {
        let id = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        Self {
            id,
            dir: dir.to_path_buf(),
            subtitles: existing(dir, "subtitles.srt").or_else(|| existing(dir, "subtitles.vtt")),
            laugh_events: existing(dir, "laugh_events.jsonl"),
            laugh_windows: existing(dir, "laughter.jsonl"),
            shots: existing(dir, "shots.jsonl"),
            poses: existing(dir, "poses.jsonl"),
            topics: existing(dir, "topics.jsonl"),
        }
    }

    /// Names of the modalities with no input file.
    pub fn missing(&self) -> Vec<&'static str> {
        let mut m = Vec::new();
        if self.subtitles.is_none() {
            m.push("subtitles");
        }
        if self.laugh_events.is_none() && self.laugh_windows.is_none() {
            m.push("laughter");
        }
        if self.shots.is_none() {
            m.push("shots");
        }
        if self.poses.is_none() {
            m.push("poses");
        }
        if self.topics.is_none() {
            m.push("topics");
        }
        m
    }

    fn is_empty(&self) -> bool {
        self.missing().len() == 5
    }
}

/// Show directories of a corpus, sorted by name. Hidden entries and
/// directories without any recognized input are skipped.
pub fn discover(corpus: &Path) -> Result<Vec<RawShow>> {
    let entries = std::fs::read_dir(corpus).map_err(|e| Error::io(corpus, e))?;
    let mut dirs = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(corpus, e))?;
        let path = entry.path();
        let hidden = entry.file_name().to_string_lossy().starts_with('.');
        if path.is_dir() && !hidden {
            dirs.push(path);
        }
    }
    dirs.sort();
    Ok(dirs
        .iter()
        .map(|d| RawShow::from_dir(d))
        .filter(|s| !s.is_empty())
        .collect())
}

/// Parsed per-show inputs, before alignment.
#[derive(Debug, Clone, Default)]
pub struct ShowInputs {
    pub blocks: Vec<TextBlock>,
    pub laughs: Vec<LaughterEvent>,
    pub shots: Vec<ShotFrame>,
    pub poses: Vec<PoseFrame>,
    pub topics: Option<Vec<TopicAssignment>>,
}

/// Reads subtitle cues into duration-targeted text blocks.
pub fn load_blocks(path: &Path, cfg: &PipelineConfig, stopwords: &Stopwords) -> Result<Vec<TextBlock>> {
    let parsed = parse_file(path, &read_bytes(path)?)?;
    Ok(build_blocks(&parsed.cues, cfg.target_duration)?
        .into_iter()
        .map(|b| b.tokenized(stopwords))
        .collect())
}

/// Merged laughter events, from `laugh_events.jsonl` or else from window
/// scores in `laughter.jsonl`.
pub fn load_laughs(raw: &RawShow, cfg: &PipelineConfig) -> Result<Vec<LaughterEvent>> {
    if let Some(p) = &raw.laugh_events {
        return read_laugh_events(&read_string(p)?).map_err(|e| with_path(p, e));
    }
    if let Some(p) = &raw.laugh_windows {
        let w = read_windows(&read_string(p)?).map_err(|e| with_path(p, e))?;
        return Ok(merge_windows(&w, cfg.laugh_threshold));
    }
    Ok(Vec::new())
}

fn with_path(path: &Path, e: Error) -> Error {
    match e {
        Error::Parse { line, message } => Error::Parse {
            line,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    }
}

pub fn load_inputs(raw: &RawShow, cfg: &PipelineConfig, stopwords: &Stopwords) -> Result<ShowInputs> {
    let read = |p: &Option<PathBuf>| -> Result<Option<String>> { p.as_deref().map(read_string).transpose() };
    Ok(ShowInputs {
        blocks: match &raw.subtitles {
            Some(p) => load_blocks(p, cfg, stopwords)?,
            None => Vec::new(),
        },
        laughs: load_laughs(raw, cfg)?,
        shots: match read(&raw.shots)? {
            Some(t) => read_shot_frames(&t).map_err(|e| with_path(raw.shots.as_deref().unwrap(), e))?,
            None => Vec::new(),
        },
        poses: match read(&raw.poses)? {
            Some(t) => read_pose_frames(&t).map_err(|e| with_path(raw.poses.as_deref().unwrap(), e))?,
            None => Vec::new(),
        },
        topics: match read(&raw.topics)? {
            Some(t) => Some(read_assignments(&t).map_err(|e| with_path(raw.topics.as_deref().unwrap(), e))?),
            None => None,
        },
    })
}

/// Reads `descriptors.json` (a JSON array of descriptor records).
pub fn read_descriptors(path: &Path) -> Result<Vec<DescriptorRecord>> {
    Ok(serde_json::from_str(&read_string(path)?)?)
}

fn normalized(assignments: &[TopicAssignment]) -> Result<Vec<TopicAssignment>> {
    assignments
        .iter()
        .map(|a| Ok(TopicAssignment { embedding: normalize_embedding(&a.embedding)?, ..a.clone() }))
        .collect()
}

/// Outlier reduction for one show: centroid reassignment (cosine on
/// normalized embeddings), then gap filling over the block sequence.
pub fn postprocess_topics(
    assignments: &[TopicAssignment],
    descriptors: &[TopicDescriptor],
    threshold: f64,
) -> Result<Vec<TopicAssignment>> {
    let mut out = centroid_reassign(&normalized(assignments)?, descriptors, threshold)?;
    out.sort_by_key(|a| a.block_index);
    let seq: Vec<i32> = out.iter().map(|a| a.topic_id).collect();
    for (a, t) in out.iter_mut().zip(gap_fill(&seq)) {
        a.topic_id = t;
    }
    Ok(out)
}

fn stream_end(inputs: &ShowInputs) -> f64 {
    let l = inputs.laughs.iter().map(|e| e.span.end);
    let s = inputs.shots.iter().map(|f| f.time);
    let p = inputs.poses.iter().map(|f| f.time);
    l.chain(s).chain(p).fold(0.0, f64::max)
}

/// Builds the unified timeline. Without subtitles the show is cut into a
/// regular grid of `target_duration` blocks covering every stream.
pub fn assemble(show_id: &str, inputs: ShowInputs, cfg: &PipelineConfig) -> Result<ShowTimeline> {
    let mut seeds: Vec<BlockSeed> = if inputs.blocks.is_empty() {
        let end = stream_end(&inputs).floor() + 1.0;
        grid_spans(end, cfg.target_duration)?
            .into_iter()
            .map(|span| BlockSeed { span, topic_id: OUTLIER, text: String::new(), embedding: None })
            .collect()
    } else {
        inputs
            .blocks
            .iter()
            .map(|b| BlockSeed { span: b.span, topic_id: OUTLIER, text: b.text.clone(), embedding: None })
            .collect()
    };
    if let Some(topics) = inputs.topics {
        if topics.len() != seeds.len() {
            log::warn!("show {show_id}: {} topic assignments for {} blocks", topics.len(), seeds.len());
        }
        for a in topics {
            let seed = seeds.get_mut(a.block_index).ok_or_else(|| {
                Error::invalid(format!("show {show_id}: topic assignment for missing block {}", a.block_index))
            })?;
            seed.topic_id = a.topic_id;
            seed.embedding = Some(normalize_embedding(&a.embedding)?);
        }
    }
    align_show(
        show_id,
        seeds,
        Streams { laughs: inputs.laughs, shots: inputs.shots, poses: inputs.poses },
    )
}

/// A loaded corpus: one timeline per show, in show-id order, plus the
/// per-show problems that did not stop processing.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub shows: Vec<ShowTimeline>,
    pub warnings: Vec<String>,
}

/// Loads and aligns every show of a corpus directory. With `parallel`, shows
/// are read concurrently; the result does not depend on it.
pub fn load_corpus(dir: &Path, cfg: &PipelineConfig, stopwords: &Stopwords, parallel: bool) -> Result<Corpus> {
    let raw = discover(dir)?;
    if raw.is_empty() {
        return Err(Error::invalid(format!("{}: no show directories with inputs", dir.display())));
    }
    let mut warnings: Vec<String> = raw
        .iter()
        .flat_map(|r| r.missing().into_iter().map(move |m| format!("show {}: no {m} input", r.id)))
        .collect();
    let load = |r: &RawShow| load_inputs(r, cfg, stopwords);
    let mut inputs: Vec<ShowInputs> = if parallel {
        raw.par_iter().map(load).collect::<Result<_>>()?
    } else {
        raw.iter().map(load).collect::<Result<_>>()?
    };

    let desc_path = dir.join(DESCRIPTORS_FILE);
    if desc_path.is_file() {
        let pooled: Vec<TopicAssignment> = inputs
            .iter()
            .filter_map(|i| i.topics.as_deref())
            .map(normalized)
            .collect::<Result<Vec<_>>>()?
            .concat();
        let descriptors = resolve_descriptors(read_descriptors(&desc_path)?, &pooled)?;
        for (r, i) in raw.iter().zip(inputs.iter_mut()) {
            if let Some(t) = &i.topics {
                let before = t.iter().filter(|a| a.is_outlier()).count();
                let fixed = postprocess_topics(t, &descriptors, cfg.centroid_threshold)?;
                let after = fixed.iter().filter(|a| a.is_outlier()).count();
                log::info!("show {}: outliers {before} -> {after}", r.id);
                i.topics = Some(fixed);
            }
        }
    }

    let build = |(r, i): (&RawShow, ShowInputs)| assemble(&r.id, i, cfg);
    let shows: Vec<ShowTimeline> = if parallel {
        raw.par_iter().zip(inputs.into_par_iter()).map(build).collect::<Result<_>>()?
    } else {
        raw.iter().zip(inputs).map(build).collect::<Result<_>>()?
    };
    for s in &shows {
        let n = s.overflow.laugh_events.len() + s.overflow.shot_events.len() + s.overflow.pose_keypoints.len();
        if n > 0 {
            warnings.push(format!("show {}: {n} event(s) outside every block kept in overflow", s.show_id));
        }
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(Corpus { shows, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timeline::LaughType;

    #[test]
    fn grid_fallback_without_subtitles() {
        let inputs = ShowInputs {
            laughs: vec![LaughterEvent::new(130.0, 131.0, LaughType::Laughter, 0.5).unwrap()],
            ..Default::default()
        };
        let show = assemble("x", inputs, &PipelineConfig::default()).unwrap();
        assert_eq!(show.timeline.len(), 3);
        assert_eq!(show.timeline[2].laugh_events.len(), 1);
        assert!(show.timeline.iter().all(|b| b.topic_id == OUTLIER));
    }

    #[test]
    fn discover_skips_empty_and_hidden() {
        let dir = tempfile::tempdir().unwrap();
        for d in ["b", "a", ".hidden", "empty"] {
            std::fs::create_dir(dir.path().join(d)).unwrap();
        }
        std::fs::write(dir.path().join("a/shots.jsonl"), "").unwrap();
        std::fs::write(dir.path().join("b/poses.jsonl"), "").unwrap();
        std::fs::write(dir.path().join(".hidden/poses.jsonl"), "").unwrap();
        let shows = discover(dir.path()).unwrap();
        let ids: Vec<&str> = shows.iter().map(|s| s.id.as_str()).collect();
        assert_eq!(ids, vec!["a", "b"]);
        assert!(shows[0].missing().contains(&"poses"));
    }

    #[test]
    fn postprocess_reassigns_then_fills() {
        let e = |x: f64| {
            let v = vec![x, (1.0 - x * x).sqrt()];
            v
        };
        let a = vec![
            TopicAssignment { block_index: 0, topic_id: 4, embedding: e(1.0) },
            TopicAssignment { block_index: 1, topic_id: -1, embedding: e(0.0) },
            TopicAssignment { block_index: 2, topic_id: 4, embedding: e(1.0) },
            TopicAssignment { block_index: 3, topic_id: -1, embedding: e(0.9) },
        ];
        let d = vec![TopicDescriptor { topic_id: 4, top_words: vec![], centroid: e(1.0) }];
        let out = postprocess_topics(&a, &d, 0.3).unwrap();
        let ids: Vec<i32> = out.iter().map(|x| x.topic_id).collect();
        // block 3 is reassigned (cos 0.9); block 1 (cos 0) is gap-filled
        assert_eq!(ids, vec![4, 4, 4, 4]);
    }
}
