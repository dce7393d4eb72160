//! JSON-lines readers and writers for the per-modality detector outputs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::types::{
    BoundingBox, Joint, Keypoints, LaughType, LaughterEvent, PoseFrame, ShotFrame, ShotLabel,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LaughRecord {
    pub start: f64,
    pub end: f64,
    #[serde(rename = "type")]
    pub kind: String,
    pub confidence: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShotRecord {
    pub time: f64,
    pub label: String,
    pub class_id: u8,
    pub score: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KeypointRecord {
    Named(BTreeMap<String, Vec<f64>>),
    /// 17 `[x, y]` pairs in canonical skeleton order.
    Ordered(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PoseRecord {
    pub time: f64,
    pub has_detection: bool,
    #[serde(default)]
    pub bbox: Option<BoundingBox>,
    #[serde(default)]
    pub keypoints: Option<KeypointRecord>,
}

/// Parses non-empty lines of a JSON-lines document.
pub fn parse_jsonl<T: serde::de::DeserializeOwned>(text: &str) -> Result<Vec<T>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn to_jsonl<T: Serialize>(items: &[T]) -> String {
    let mut out = String::new();
    for it in items {
        out.push_str(&serde_json::to_string(it).expect("serializable record"));
        out.push('\n');
    }
    out
}

fn at_line<T>(line: usize, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Parse {
        line,
        message: e.to_string(),
    })
}

pub fn read_laugh_events(text: &str) -> Result<Vec<LaughterEvent>> {
    let recs: Vec<LaughRecord> = parse_jsonl(text)?;
    let mut out = recs
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            at_line(
                i + 1,
                r.kind
                    .parse::<LaughType>()
                    .and_then(|label| LaughterEvent::new(r.start, r.end, label, r.confidence)),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    out.sort_by(|a, b| a.span.start.total_cmp(&b.span.start));
    Ok(out)
}

pub fn write_laugh_events(events: &[LaughterEvent]) -> String {
    let recs: Vec<LaughRecord> = events
        .iter()
        .map(|e| LaughRecord {
            start: e.span.start,
            end: e.span.end,
            kind: e.label.as_str().to_string(),
            confidence: e.confidence,
        })
        .collect();
    to_jsonl(&recs)
}

pub fn read_shot_frames(text: &str) -> Result<Vec<ShotFrame>> {
    let recs: Vec<ShotRecord> = parse_jsonl(text)?;
    let mut out = recs
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            at_line(
                i + 1,
                r.label
                    .parse::<ShotLabel>()
                    .and_then(|label| ShotFrame::new(r.time, label, r.class_id, r.score)),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    out.sort_by(|a, b| a.time.total_cmp(&b.time));
    Ok(out)
}

pub fn write_shot_frames(frames: &[ShotFrame]) -> String {
    let recs: Vec<ShotRecord> = frames
        .iter()
        .map(|s| ShotRecord {
            time: s.time,
            label: s.label.as_str().to_string(),
            class_id: s.class_id,
            score: s.score,
        })
        .collect();
    to_jsonl(&recs)
}

fn keypoints_from_record(rec: &KeypointRecord) -> Result<Keypoints> {
    let mut kp = Keypoints::default();
    match rec {
        KeypointRecord::Named(map) => {
            for (name, xy) in map {
                let joint = Joint::from_schema_name(name)
                    .ok_or_else(|| Error::invalid(format!("unknown joint {name:?}")))?;
                if xy.len() != 2 {
                    return Err(Error::invalid(format!("joint {name} needs [x, y]")));
                }
                kp.set(joint, [xy[0], xy[1]]);
            }
        }
        KeypointRecord::Ordered(list) => {
            if list.len() != Joint::COUNT {
                return Err(Error::invalid(format!(
                    "expected {} keypoints, found {}",
                    Joint::COUNT,
                    list.len()
                )));
            }
            for (joint, xy) in Joint::ALL.iter().zip(list) {
                if xy.len() != 2 {
                    return Err(Error::invalid(format!("joint {} needs [x, y]", joint.schema_name())));
                }
                kp.set(*joint, [xy[0], xy[1]]);
            }
        }
    }
    Ok(kp)
}

/// Reads pose frames. Several detections at the same timestamp are reduced
/// to the one with the largest bounding box.
pub fn read_pose_frames(text: &str) -> Result<Vec<PoseFrame>> {
    let recs: Vec<PoseRecord> = parse_jsonl(text)?;
    let mut frames = Vec::with_capacity(recs.len());
    for (i, r) in recs.into_iter().enumerate() {
        if !r.time.is_finite() || r.time < 0.0 {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("invalid pose time {}", r.time),
            });
        }
        let keypoints = match &r.keypoints {
            Some(k) => at_line(i + 1, keypoints_from_record(k))?,
            None => Keypoints::default(),
        };
        frames.push(PoseFrame {
            time: r.time,
            has_detection: r.has_detection,
            bbox: r.bbox.unwrap_or_default(),
            keypoints,
        });
    }
    frames.sort_by(|a, b| a.time.total_cmp(&b.time));

    let mut out: Vec<PoseFrame> = Vec::with_capacity(frames.len());
    let mut multi = 0usize;
    for f in frames {
        match out.last_mut() {
            Some(prev) if prev.time == f.time => {
                multi += 1;
                let better = f.has_detection && (!prev.has_detection || f.bbox.area() > prev.bbox.area());
                if better {
                    *prev = f;
                }
            }
            _ => out.push(f),
        }
    }
    if multi > 0 {
        log::warn!("{multi} extra detection(s) shared a timestamp; kept the largest bounding box");
    }
    Ok(out)
}

pub fn write_pose_frames(frames: &[PoseFrame]) -> String {
    let recs: Vec<PoseRecord> = frames
        .iter()
        .map(|p| PoseRecord {
            time: p.time,
            has_detection: p.has_detection,
            bbox: Some(p.bbox),
            keypoints: Some(KeypointRecord::Named(
                Joint::ALL
                    .iter()
                    .map(|j| {
                        let [x, y] = p.keypoints.0[j.index()];
                        (j.schema_name().to_string(), vec![x, y])
                    })
                    .collect(),
            )),
        })
        .collect();
    to_jsonl(&recs)
}
