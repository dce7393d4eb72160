//! Unified per-show JSON document.
//!
//! ```text
//! { "ID_<show>": { "metadata": {...}, "timeline": [ block, ... ], "_overflow": {...} } }
//! ```
//!
//! Blocks carry `block_id, start, end, topic_id, text, embedding,
//! laugh_events, pose_keypoints, shot_events`. Events that fell outside every
//! block are kept under the reserved `_overflow` key so per-show totals are
//! conserved.

use serde_json::{json, Map, Value};

use super::types::{
    BoundingBox, Joint, Keypoints, LaughType, LaughterEvent, Overflow, PoseFrame, ShotFrame,
    ShotLabel, ShowMetadata, ShowTimeline, TimedSpan, TopicBlock,
};
use crate::{Error, Result};

pub const OVERFLOW_KEY: &str = "_overflow";

/// Top-level key under which a show is stored.
pub fn show_key(show_id: &str) -> String {
    format!("ID_{show_id}")
}

pub fn laugh_to_json(e: &LaughterEvent) -> Value {
    json!({
        "start": e.span.start,
        "end": e.span.end,
        "type": e.label.as_str(),
        "confidence": e.confidence,
    })
}

pub fn shot_to_json(s: &ShotFrame) -> Value {
    json!({
        "time": s.time,
        "label": s.label.as_str(),
        "class_id": s.class_id,
        "score": s.score,
    })
}

pub fn pose_to_json(p: &PoseFrame) -> Value {
    let mut kp = Map::new();
    for j in Joint::ALL {
        let [x, y] = p.keypoints.0[j.index()];
        kp.insert(j.schema_name().to_string(), json!([x, y]));
    }
    json!({
        "time": p.time,
        "has_detection": p.has_detection,
        "bbox": {
            "xmin": p.bbox.xmin,
            "ymin": p.bbox.ymin,
            "xmax": p.bbox.xmax,
            "ymax": p.bbox.ymax,
        },
        "keypoints": Value::Object(kp),
    })
}

fn block_to_json(b: &TopicBlock) -> Value {
    let mut m = Map::new();
    m.insert("block_id".into(), json!(b.block_id));
    m.insert("start".into(), json!(b.span.start));
    m.insert("end".into(), json!(b.span.end));
    m.insert("topic_id".into(), json!(b.topic_id));
    m.insert("text".into(), json!(b.text));
    m.insert(
        "embedding".into(),
        match &b.embedding {
            Some(e) => json!(e),
            None => Value::Null,
        },
    );
    m.insert(
        "laugh_events".into(),
        Value::Array(b.laugh_events.iter().map(laugh_to_json).collect()),
    );
    m.insert(
        "pose_keypoints".into(),
        Value::Array(b.pose_keypoints.iter().map(pose_to_json).collect()),
    );
    m.insert(
        "shot_events".into(),
        Value::Array(b.shot_events.iter().map(shot_to_json).collect()),
    );
    Value::Object(m)
}

pub fn show_to_value(show: &ShowTimeline) -> Value {
    let body = json!({
        "metadata": {
            "show_id": show.show_id,
            "n_blocks": show.metadata.n_blocks,
            "embedding_dim": show.metadata.embedding_dim,
            "keypoint_joints": show.metadata.keypoint_joints,
        },
        "timeline": show.timeline.iter().map(block_to_json).collect::<Vec<_>>(),
        OVERFLOW_KEY: {
            "laugh_events": show.overflow.laugh_events.iter().map(laugh_to_json).collect::<Vec<_>>(),
            "pose_keypoints": show.overflow.pose_keypoints.iter().map(pose_to_json).collect::<Vec<_>>(),
            "shot_events": show.overflow.shot_events.iter().map(shot_to_json).collect::<Vec<_>>(),
        },
    });
    let mut top = Map::new();
    top.insert(show_key(&show.show_id), body);
    Value::Object(top)
}

/// Pretty-printed UTF-8 JSON; floats are written in shortest round-trip form.
pub fn serialize_show(show: &ShowTimeline) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(&show_to_value(show)).expect("in-memory JSON encoding");
    out.push(b'\n');
    out
}

pub fn deserialize_show(bytes: &[u8]) -> Result<ShowTimeline> {
    let (show, unknown) = deserialize_show_with_report(bytes)?;
    if !unknown.is_empty() {
        log::warn!(
            "show {}: ignored {} unknown field(s), first at {}",
            show.show_id,
            unknown.len(),
            unknown[0]
        );
    }
    Ok(show)
}

/// Parses and validates a show document. Also returns the paths of fields
/// that were not part of the schema and were ignored.
pub fn deserialize_show_with_report(bytes: &[u8]) -> Result<(ShowTimeline, Vec<String>)> {
    let root: Value = serde_json::from_slice(bytes)?;
    let mut r = Reader::default();
    let top = r.object(&root, "$")?;
    if top.len() != 1 {
        return Err(Error::schema("$", format!("expected exactly one show key, found {}", top.len())));
    }
    let (key, body) = top.iter().next().expect("one entry");
    let path = format!("$.{key}");
    let body_map = r.object(body, &path)?;
    r.note_unknown(body_map, &path, &["metadata", "timeline", OVERFLOW_KEY]);

    let mpath = format!("{path}.metadata");
    let meta = r.object(r.field(body_map, "metadata", &path)?, &mpath)?;
    r.note_unknown(meta, &mpath, &["show_id", "n_blocks", "embedding_dim", "keypoint_joints"]);
    let show_id = match meta.get("show_id") {
        Some(v) => r.string(v, &format!("{mpath}.show_id"))?,
        None => key.strip_prefix("ID_").unwrap_or(key).to_string(),
    };
    let n_blocks = r.uint(r.field(meta, "n_blocks", &mpath)?, &format!("{mpath}.n_blocks"))? as usize;
    let embedding_dim =
        r.uint(r.field(meta, "embedding_dim", &mpath)?, &format!("{mpath}.embedding_dim"))? as usize;
    let jpath = format!("{mpath}.keypoint_joints");
    let keypoint_joints = r
        .array(r.field(meta, "keypoint_joints", &mpath)?, &jpath)?
        .iter()
        .enumerate()
        .map(|(i, v)| r.string(v, &format!("{jpath}[{i}]")))
        .collect::<Result<Vec<_>>>()?;

    let tpath = format!("{path}.timeline");
    let timeline = r
        .array(r.field(body_map, "timeline", &path)?, &tpath)?
        .iter()
        .enumerate()
        .map(|(i, v)| r.block(v, &format!("{tpath}[{i}]")))
        .collect::<Result<Vec<_>>>()?;

    let overflow = match body_map.get(OVERFLOW_KEY) {
        None | Some(Value::Null) => Overflow::default(),
        Some(v) => {
            let opath = format!("{path}.{OVERFLOW_KEY}");
            let m = r.object(v, &opath)?;
            r.note_unknown(m, &opath, &["laugh_events", "pose_keypoints", "shot_events"]);
            Overflow {
                laugh_events: r.list(m, "laugh_events", &opath, Reader::laugh)?,
                pose_keypoints: r.list(m, "pose_keypoints", &opath, Reader::pose)?,
                shot_events: r.list(m, "shot_events", &opath, Reader::shot)?,
            }
        }
    };

    let show = ShowTimeline {
        show_id,
        metadata: ShowMetadata {
            n_blocks,
            embedding_dim,
            keypoint_joints,
        },
        timeline,
        overflow,
    };
    show.validate().map_err(|e| match e {
        Error::Invariant(msg) => Error::schema(path.clone(), msg),
        other => other,
    })?;
    Ok((show, r.unknown))
}

#[derive(Default)]
struct Reader {
    unknown: Vec<String>,
}

impl Reader {
    fn note_unknown(&mut self, m: &Map<String, Value>, path: &str, known: &[&str]) {
        for k in m.keys() {
            if !known.contains(&k.as_str()) {
                self.unknown.push(format!("{path}.{k}"));
            }
        }
    }

    fn object<'v>(&self, v: &'v Value, path: &str) -> Result<&'v Map<String, Value>> {
        v.as_object()
            .ok_or_else(|| Error::schema(path, format!("expected object, found {}", kind(v))))
    }

    fn array<'v>(&self, v: &'v Value, path: &str) -> Result<&'v Vec<Value>> {
        v.as_array()
            .ok_or_else(|| Error::schema(path, format!("expected array, found {}", kind(v))))
    }

    fn field<'v>(&self, m: &'v Map<String, Value>, key: &str, path: &str) -> Result<&'v Value> {
        m.get(key)
            .ok_or_else(|| Error::schema(format!("{path}.{key}"), "missing required field"))
    }

    fn number(&self, v: &Value, path: &str) -> Result<f64> {
        v.as_f64()
            .ok_or_else(|| Error::schema(path, format!("expected number, found {}", kind(v))))
    }

    fn uint(&self, v: &Value, path: &str) -> Result<u64> {
        v.as_u64()
            .ok_or_else(|| Error::schema(path, format!("expected non-negative integer, found {}", kind(v))))
    }

    fn int(&self, v: &Value, path: &str) -> Result<i64> {
        v.as_i64()
            .ok_or_else(|| Error::schema(path, format!("expected integer, found {}", kind(v))))
    }

    fn string(&self, v: &Value, path: &str) -> Result<String> {
        v.as_str()
            .map(str::to_string)
            .ok_or_else(|| Error::schema(path, format!("expected string, found {}", kind(v))))
    }

    fn boolean(&self, v: &Value, path: &str) -> Result<bool> {
        v.as_bool()
            .ok_or_else(|| Error::schema(path, format!("expected boolean, found {}", kind(v))))
    }

    fn num_field(&self, m: &Map<String, Value>, key: &str, path: &str) -> Result<f64> {
        self.number(self.field(m, key, path)?, &format!("{path}.{key}"))
    }

    fn list<T>(
        &mut self,
        m: &Map<String, Value>,
        key: &str,
        path: &str,
        item: fn(&mut Self, &Value, &str) -> Result<T>,
    ) -> Result<Vec<T>> {
        let lpath = format!("{path}.{key}");
        match m.get(key) {
            None | Some(Value::Null) => Ok(Vec::new()),
            Some(v) => {
                let arr = self.array(v, &lpath)?;
                arr.iter()
                    .enumerate()
                    .map(|(i, x)| item(self, x, &format!("{lpath}[{i}]")))
                    .collect()
            }
        }
    }

    fn laugh(&mut self, v: &Value, path: &str) -> Result<LaughterEvent> {
        let m = self.object(v, path)?;
        self.note_unknown(m, path, &["start", "end", "type", "confidence"]);
        let start = self.num_field(m, "start", path)?;
        let end = self.num_field(m, "end", path)?;
        let label: LaughType = self
            .string(self.field(m, "type", path)?, &format!("{path}.type"))?
            .parse()
            .map_err(|e: Error| Error::schema(format!("{path}.type"), e.to_string()))?;
        let confidence = self.num_field(m, "confidence", path)?;
        LaughterEvent::new(start, end, label, confidence).map_err(|e| Error::schema(path, e.to_string()))
    }

    fn shot(&mut self, v: &Value, path: &str) -> Result<ShotFrame> {
        let m = self.object(v, path)?;
        self.note_unknown(m, path, &["time", "label", "class_id", "score"]);
        let time = self.num_field(m, "time", path)?;
        let label: ShotLabel = self
            .string(self.field(m, "label", path)?, &format!("{path}.label"))?
            .parse()
            .map_err(|e: Error| Error::schema(format!("{path}.label"), e.to_string()))?;
        let class_id = self.uint(self.field(m, "class_id", path)?, &format!("{path}.class_id"))?;
        let class_id = u8::try_from(class_id)
            .map_err(|_| Error::schema(format!("{path}.class_id"), "class_id out of range"))?;
        let score = self.num_field(m, "score", path)?;
        ShotFrame::new(time, label, class_id, score).map_err(|e| Error::schema(path, e.to_string()))
    }

    fn pose(&mut self, v: &Value, path: &str) -> Result<PoseFrame> {
        let m = self.object(v, path)?;
        self.note_unknown(m, path, &["time", "has_detection", "bbox", "keypoints"]);
        let time = self.num_field(m, "time", path)?;
        let has_detection =
            self.boolean(self.field(m, "has_detection", path)?, &format!("{path}.has_detection"))?;
        let bpath = format!("{path}.bbox");
        let bbox = match m.get("bbox") {
            None | Some(Value::Null) => BoundingBox::default(),
            Some(b) => {
                let bm = self.object(b, &bpath)?;
                self.note_unknown(bm, &bpath, &["xmin", "ymin", "xmax", "ymax"]);
                BoundingBox {
                    xmin: self.num_field(bm, "xmin", &bpath)?,
                    ymin: self.num_field(bm, "ymin", &bpath)?,
                    xmax: self.num_field(bm, "xmax", &bpath)?,
                    ymax: self.num_field(bm, "ymax", &bpath)?,
                }
            }
        };
        let kpath = format!("{path}.keypoints");
        let mut keypoints = Keypoints::default();
        if let Some(kv) = m.get("keypoints").filter(|v| !v.is_null()) {
            let km = self.object(kv, &kpath)?;
            for (name, xy) in km {
                let jp = format!("{kpath}.{name}");
                let joint = Joint::from_schema_name(name)
                    .ok_or_else(|| Error::schema(&jp, "not a skeleton joint name"))?;
                let arr = self.array(xy, &jp)?;
                if arr.len() != 2 {
                    return Err(Error::schema(&jp, format!("expected [x, y], found {} values", arr.len())));
                }
                keypoints.set(
                    joint,
                    [self.number(&arr[0], &format!("{jp}[0]"))?, self.number(&arr[1], &format!("{jp}[1]"))?],
                );
            }
        }
        if !time.is_finite() || time < 0.0 {
            return Err(Error::schema(format!("{path}.time"), format!("invalid time {time}")));
        }
        Ok(PoseFrame {
            time,
            has_detection,
            bbox,
            keypoints,
        })
    }

    fn block(&mut self, v: &Value, path: &str) -> Result<TopicBlock> {
        let m = self.object(v, path)?;
        self.note_unknown(
            m,
            path,
            &[
                "block_id",
                "start",
                "end",
                "topic_id",
                "text",
                "embedding",
                "laugh_events",
                "pose_keypoints",
                "shot_events",
            ],
        );
        let block_id = self.uint(self.field(m, "block_id", path)?, &format!("{path}.block_id"))?;
        let block_id = u32::try_from(block_id)
            .map_err(|_| Error::schema(format!("{path}.block_id"), "block_id out of range"))?;
        let start = self.num_field(m, "start", path)?;
        let end = self.num_field(m, "end", path)?;
        let span = TimedSpan::new(start, end).map_err(|e| Error::schema(path, e.to_string()))?;
        let topic_id = self.int(self.field(m, "topic_id", path)?, &format!("{path}.topic_id"))?;
        let topic_id = i32::try_from(topic_id)
            .map_err(|_| Error::schema(format!("{path}.topic_id"), "topic_id out of range"))?;
        let text = match m.get("text") {
            None | Some(Value::Null) => String::new(),
            Some(t) => self.string(t, &format!("{path}.text"))?,
        };
        let epath = format!("{path}.embedding");
        let embedding = match m.get("embedding") {
            None | Some(Value::Null) => None,
            Some(e) => Some(
                self.array(e, &epath)?
                    .iter()
                    .enumerate()
                    .map(|(i, x)| self.number(x, &format!("{epath}[{i}]")))
                    .collect::<Result<Vec<_>>>()?,
            ),
        };
        Ok(TopicBlock {
            block_id,
            span,
            topic_id,
            text,
            embedding,
            laugh_events: self.list(m, "laugh_events", path, Reader::laugh)?,
            pose_keypoints: self.list(m, "pose_keypoints", path, Reader::pose)?,
            shot_events: self.list(m, "shot_events", path, Reader::shot)?,
        })
    }
}

fn kind(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "boolean",
        Value::Number(_) => "number",
        Value::String(_) => "string",
        Value::Array(_) => "array",
        Value::Object(_) => "object",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_show_is_valid_json() {
        let show = ShowTimeline::new("7", Vec::new(), Overflow::default()).unwrap();
        let bytes = serialize_show(&show);
        let v: Value = serde_json::from_slice(&bytes).unwrap();
        assert_eq!(v["ID_7"]["metadata"]["n_blocks"], json!(0));
        assert_eq!(deserialize_show(&bytes).unwrap(), show);
    }

    #[test]
    fn missing_field_names_path() {
        let doc = br#"{"ID_1": {"metadata": {"show_id": "1", "n_blocks": 1, "embedding_dim": 384,
            "keypoint_joints": []}, "timeline": [{"block_id": 0, "end": 60.0, "topic_id": 1}]}}"#;
        match deserialize_show(doc).unwrap_err() {
            Error::Schema { path, .. } => assert_eq!(path, "$.ID_1.timeline[0].start"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn wrong_type_names_path() {
        let doc = br#"{"ID_1": {"metadata": {"n_blocks": "x", "embedding_dim": 384,
            "keypoint_joints": []}, "timeline": []}}"#;
        match deserialize_show(doc).unwrap_err() {
            Error::Schema { path, message } => {
                assert_eq!(path, "$.ID_1.metadata.n_blocks");
                assert!(message.contains("string"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_fields_are_counted() {
        let names = serde_json::to_string(&Joint::schema_names()).unwrap();
        let doc = format!(
            r#"{{"ID_2": {{"metadata": {{"show_id": "2", "n_blocks": 0, "embedding_dim": 384,
            "keypoint_joints": {names}, "comedian": "x"}}, "timeline": [], "extra": 1}}}}"#
        );
        let (show, unknown) = deserialize_show_with_report(doc.as_bytes()).unwrap();
        assert_eq!(show.show_id, "2");
        assert_eq!(unknown.len(), 2);
        assert!(unknown.contains(&"$.ID_2.metadata.comedian".to_string()));
    }

    #[test]
    fn n_blocks_mismatch_is_schema_error() {
        let names = serde_json::to_string(&Joint::schema_names()).unwrap();
        let doc = format!(
            r#"{{"ID_2": {{"metadata": {{"n_blocks": 3, "embedding_dim": 384,
            "keypoint_joints": {names}}}, "timeline": []}}}}"#
        );
        assert!(matches!(deserialize_show(doc.as_bytes()), Err(Error::Schema { .. })));
    }
}
