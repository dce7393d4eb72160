use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Dimension of the sentence embeddings stored on topic blocks.
pub const EMBEDDING_DIM: usize = 384;

/// Tolerance on the L2 norm of stored embeddings.
pub const UNIT_NORM_TOL: f64 = 1e-6;

/// Half-open time interval `[start, end)` in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimedSpan {
    pub start: f64,
    pub end: f64,
}

impl TimedSpan {
    pub fn new(start: f64, end: f64) -> Result<Self> {
        if !start.is_finite() || !end.is_finite() {
            return Err(Error::invariant(format!(
                "span bounds must be finite, got [{start}, {end})"
            )));
        }
        if start < 0.0 {
            return Err(Error::invariant(format!("span start {start} is negative")));
        }
        if start >= end {
            return Err(Error::invariant(format!(
                "span start {start} must be before end {end}"
            )));
        }
        Ok(Self { start, end })
    }

    pub fn duration(&self) -> f64 {
        self.end - self.start
    }

    #[inline]
    pub fn contains(&self, t: f64) -> bool {
        self.start <= t && t < self.end
    }

    /// Length of the intersection with `[start, end)`; zero when disjoint.
    pub fn overlap(&self, start: f64, end: f64) -> f64 {
        (self.end.min(end) - self.start.max(start)).max(0.0)
    }
}

impl fmt::Display for TimedSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.start, self.end)
    }
}

/// Laughter category emitted by the audio tagger.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LaughType {
    Laughter,
    BellyLaugh,
    Giggle,
    Snicker,
    Chuckle,
    BabyLaughter,
    Other,
}

impl LaughType {
    pub const ALL: [LaughType; 7] = [
        LaughType::Laughter,
        LaughType::BellyLaugh,
        LaughType::Giggle,
        LaughType::Snicker,
        LaughType::Chuckle,
        LaughType::BabyLaughter,
        LaughType::Other,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            LaughType::Laughter => "laughter",
            LaughType::BellyLaugh => "belly_laugh",
            LaughType::Giggle => "giggle",
            LaughType::Snicker => "snicker",
            LaughType::Chuckle => "chuckle",
            LaughType::BabyLaughter => "baby_laughter",
            LaughType::Other => "other",
        }
    }
}

impl FromStr for LaughType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace([' ', '-'], "_");
        LaughType::ALL
            .iter()
            .copied()
            .find(|t| t.as_str() == norm)
            .ok_or_else(|| Error::invalid(format!("unknown laughter type {s:?}")))
    }
}

impl fmt::Display for LaughType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LaughterEvent {
    pub span: TimedSpan,
    pub label: LaughType,
    pub confidence: f64,
}

impl LaughterEvent {
    pub fn new(start: f64, end: f64, label: LaughType, confidence: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&confidence) {
            return Err(Error::invariant(format!(
                "laughter confidence {confidence} outside [0, 1]"
            )));
        }
        Ok(Self {
            span: TimedSpan::new(start, end)?,
            label,
            confidence,
        })
    }

    /// Timestamp used for containment: the onset.
    pub fn timestamp(&self) -> f64 {
        self.span.start
    }
}

/// Shot framing classes, in histogram order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ShotLabel {
    FullShot,
    MediumCloseUp,
    MediumLongShot,
    MediumShot,
    OtherAngles,
    Other,
}

impl ShotLabel {
    pub const ALL: [ShotLabel; 6] = [
        ShotLabel::FullShot,
        ShotLabel::MediumCloseUp,
        ShotLabel::MediumLongShot,
        ShotLabel::MediumShot,
        ShotLabel::OtherAngles,
        ShotLabel::Other,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ShotLabel::FullShot => "full_shot",
            ShotLabel::MediumCloseUp => "medium_close_up",
            ShotLabel::MediumLongShot => "medium_long_shot",
            ShotLabel::MediumShot => "medium_shot",
            ShotLabel::OtherAngles => "other_angles",
            ShotLabel::Other => "other",
        }
    }

    /// Position in [`ShotLabel::ALL`].
    pub fn index(&self) -> usize {
        *self as usize
    }
}

impl FromStr for ShotLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace([' ', '-'], "_");
        ShotLabel::ALL
            .iter()
            .copied()
            .find(|l| l.as_str() == norm)
            .ok_or_else(|| Error::invalid(format!("unknown shot label {s:?}")))
    }
}

impl fmt::Display for ShotLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One shot-classifier output, sampled at 1 Hz.
///
/// `class_id` is the upstream classifier's own class index and is kept
/// verbatim; it is not required to equal `label.index()`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShotFrame {
    pub time: f64,
    pub label: ShotLabel,
    pub class_id: u8,
    pub score: f64,
}

impl ShotFrame {
    pub fn new(time: f64, label: ShotLabel, class_id: u8, score: f64) -> Result<Self> {
        if !time.is_finite() || time < 0.0 {
            return Err(Error::invariant(format!("shot time {time} is invalid")));
        }
        if class_id > 5 {
            return Err(Error::invariant(format!("shot class_id {class_id} outside 0..=5")));
        }
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::invariant(format!("shot score {score} outside [0, 1]")));
        }
        Ok(Self {
            time,
            label,
            class_id,
            score,
        })
    }
}

/// COCO-17 skeleton joints, in canonical COCO order.
///
/// Serialized names follow the corpus schema (`Nez`, `Epaule_1`, ...).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Joint {
    Nose,
    LeftEye,
    RightEye,
    LeftEar,
    RightEar,
    LeftShoulder,
    RightShoulder,
    LeftElbow,
    RightElbow,
    LeftWrist,
    RightWrist,
    LeftHip,
    RightHip,
    LeftKnee,
    RightKnee,
    LeftAnkle,
    RightAnkle,
}

impl Joint {
    pub const COUNT: usize = 17;

    pub const ALL: [Joint; 17] = [
        Joint::Nose,
        Joint::LeftEye,
        Joint::RightEye,
        Joint::LeftEar,
        Joint::RightEar,
        Joint::LeftShoulder,
        Joint::RightShoulder,
        Joint::LeftElbow,
        Joint::RightElbow,
        Joint::LeftWrist,
        Joint::RightWrist,
        Joint::LeftHip,
        Joint::RightHip,
        Joint::LeftKnee,
        Joint::RightKnee,
        Joint::LeftAnkle,
        Joint::RightAnkle,
    ];

    pub fn index(&self) -> usize {
        *self as usize
    }

    pub fn schema_name(&self) -> &'static str {
        match self {
            Joint::Nose => "Nez",
            Joint::LeftEye => "Oeil_1",
            Joint::RightEye => "Oeil_2",
            Joint::LeftEar => "Oreille_1",
            Joint::RightEar => "Oreille_2",
            Joint::LeftShoulder => "Epaule_1",
            Joint::RightShoulder => "Epaule_2",
            Joint::LeftElbow => "Coude_1",
            Joint::RightElbow => "Coude_2",
            Joint::LeftWrist => "Poignet_1",
            Joint::RightWrist => "Poignet_2",
            Joint::LeftHip => "Hanche_1",
            Joint::RightHip => "Hanche_2",
            Joint::LeftKnee => "Genou_1",
            Joint::RightKnee => "Genou_2",
            Joint::LeftAnkle => "Cheville_1",
            Joint::RightAnkle => "Cheville_2",
        }
    }

    pub fn from_schema_name(name: &str) -> Option<Joint> {
        Joint::ALL.iter().copied().find(|j| j.schema_name() == name)
    }

    pub fn schema_names() -> Vec<String> {
        Joint::ALL.iter().map(|j| j.schema_name().to_string()).collect()
    }
}

/// Raw pixel coordinates for the 17 joints. `(0, 0)` marks an undetected joint.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Keypoints(pub [[f64; 2]; Joint::COUNT]);

impl Keypoints {
    /// Coordinates of a joint, or `None` when it carries the invalid sentinel.
    #[inline]
    pub fn get(&self, joint: Joint) -> Option<[f64; 2]> {
        let p = self.0[joint.index()];
        if p[0] == 0.0 && p[1] == 0.0 {
            None
        } else {
            Some(p)
        }
    }

    pub fn set(&mut self, joint: Joint, xy: [f64; 2]) {
        self.0[joint.index()] = xy;
    }

    pub fn is_valid(&self, joint: Joint) -> bool {
        self.get(joint).is_some()
    }

    pub fn map(&self, f: impl Fn([f64; 2]) -> [f64; 2]) -> Keypoints {
        let mut out = *self;
        for p in out.0.iter_mut() {
            if !(p[0] == 0.0 && p[1] == 0.0) {
                *p = f(*p);
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BoundingBox {
    pub xmin: f64,
    pub ymin: f64,
    pub xmax: f64,
    pub ymax: f64,
}

impl BoundingBox {
    pub fn height(&self) -> f64 {
        self.ymax - self.ymin
    }

    pub fn width(&self) -> f64 {
        self.xmax - self.xmin
    }

    pub fn area(&self) -> f64 {
        self.width().max(0.0) * self.height().max(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoseFrame {
    pub time: f64,
    pub has_detection: bool,
    pub bbox: BoundingBox,
    pub keypoints: Keypoints,
}

impl PoseFrame {
    pub fn undetected(time: f64) -> Self {
        Self {
            time,
            has_detection: false,
            bbox: BoundingBox::default(),
            keypoints: Keypoints::default(),
        }
    }

    /// Joint position if the frame has a detection and the joint is valid.
    pub fn joint(&self, joint: Joint) -> Option<[f64; 2]> {
        if self.has_detection {
            self.keypoints.get(joint)
        } else {
            None
        }
    }
}

/// A 60 s anchor segment with its nested modality streams.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicBlock {
    pub block_id: u32,
    pub span: TimedSpan,
    /// `-1` marks an outlier block.
    pub topic_id: i32,
    pub text: String,
    pub embedding: Option<Vec<f64>>,
    pub laugh_events: Vec<LaughterEvent>,
    pub pose_keypoints: Vec<PoseFrame>,
    pub shot_events: Vec<ShotFrame>,
}

impl TopicBlock {
    pub fn new(block_id: u32, span: TimedSpan, topic_id: i32, text: impl Into<String>) -> Self {
        Self {
            block_id,
            span,
            topic_id,
            text: text.into(),
            embedding: None,
            laugh_events: Vec::new(),
            pose_keypoints: Vec::new(),
            shot_events: Vec::new(),
        }
    }

    pub fn is_outlier(&self) -> bool {
        self.topic_id < 0
    }
}

/// Events that fell outside every block of a show.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Overflow {
    pub laugh_events: Vec<LaughterEvent>,
    pub pose_keypoints: Vec<PoseFrame>,
    pub shot_events: Vec<ShotFrame>,
}

impl Overflow {
    pub fn is_empty(&self) -> bool {
        self.laugh_events.is_empty() && self.pose_keypoints.is_empty() && self.shot_events.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShowMetadata {
    pub n_blocks: usize,
    pub embedding_dim: usize,
    pub keypoint_joints: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShowTimeline {
    pub show_id: String,
    pub metadata: ShowMetadata,
    pub timeline: Vec<TopicBlock>,
    pub overflow: Overflow,
}

impl ShowTimeline {
    /// Builds a timeline, filling in metadata and checking every invariant.
    pub fn new(show_id: impl Into<String>, timeline: Vec<TopicBlock>, overflow: Overflow) -> Result<Self> {
        let show = Self {
            show_id: show_id.into(),
            metadata: ShowMetadata {
                n_blocks: timeline.len(),
                embedding_dim: EMBEDDING_DIM,
                keypoint_joints: Joint::schema_names(),
            },
            timeline,
            overflow,
        };
        show.validate()?;
        Ok(show)
    }

    pub fn validate(&self) -> Result<()> {
        if self.metadata.n_blocks != self.timeline.len() {
            return Err(Error::invariant(format!(
                "show {}: n_blocks = {} but timeline holds {} blocks",
                self.show_id,
                self.metadata.n_blocks,
                self.timeline.len()
            )));
        }
        if self.metadata.keypoint_joints != Joint::schema_names() {
            return Err(Error::invariant(format!(
                "show {}: keypoint_joints must list the 17 skeleton joints in canonical order",
                self.show_id
            )));
        }
        let spans: Vec<TimedSpan> = self.timeline.iter().map(|b| b.span).collect();
        super::align::check_blocks(&spans)?;

        for block in &self.timeline {
            if let Some(e) = &block.embedding {
                if self.metadata.embedding_dim != EMBEDDING_DIM {
                    return Err(Error::invariant(format!(
                        "embedding_dim must be {EMBEDDING_DIM}, got {}",
                        self.metadata.embedding_dim
                    )));
                }
                if e.len() != self.metadata.embedding_dim {
                    return Err(Error::invariant(format!(
                        "block {}: embedding has {} dims, expected {}",
                        block.block_id,
                        e.len(),
                        self.metadata.embedding_dim
                    )));
                }
                let norm = e.iter().map(|x| x * x).sum::<f64>().sqrt();
                if (norm - 1.0).abs() > UNIT_NORM_TOL {
                    return Err(Error::invariant(format!(
                        "block {}: embedding norm {norm} is not 1",
                        block.block_id
                    )));
                }
            }
            let contained = block.laugh_events.iter().all(|e| block.span.contains(e.timestamp()))
                && block.pose_keypoints.iter().all(|p| block.span.contains(p.time))
                && block.shot_events.iter().all(|s| block.span.contains(s.time));
            if !contained {
                return Err(Error::invariant(format!(
                    "block {}: nested event outside {}",
                    block.block_id, block.span
                )));
            }
        }
        for p in &self.overflow.pose_keypoints {
            if spans.iter().any(|s| s.contains(p.time)) {
                return Err(Error::invariant(format!("overflow pose frame at {} lies inside a block", p.time)));
            }
        }
        for s in &self.overflow.shot_events {
            if spans.iter().any(|b| b.contains(s.time)) {
                return Err(Error::invariant(format!("overflow shot frame at {} lies inside a block", s.time)));
            }
        }
        for e in &self.overflow.laugh_events {
            if spans.iter().any(|b| b.contains(e.timestamp())) {
                return Err(Error::invariant(format!(
                    "overflow laughter event at {} lies inside a block",
                    e.timestamp()
                )));
            }
        }

        let events = self.laugh_events();
        for pair in events.windows(2) {
            if pair[1].span.start < pair[0].span.end {
                return Err(Error::invariant(format!(
                    "show {}: laughter events {} and {} overlap",
                    self.show_id, pair[0].span, pair[1].span
                )));
            }
        }
        Ok(())
    }

    /// All laughter events of the show (blocks and overflow), sorted by start.
    pub fn laugh_events(&self) -> Vec<LaughterEvent> {
        let mut all: Vec<LaughterEvent> = self
            .timeline
            .iter()
            .flat_map(|b| b.laugh_events.iter().cloned())
            .chain(self.overflow.laugh_events.iter().cloned())
            .collect();
        all.sort_by(|a, b| a.span.start.total_cmp(&b.span.start));
        all
    }

    pub fn shot_frames(&self) -> Vec<ShotFrame> {
        let mut all: Vec<ShotFrame> = self
            .timeline
            .iter()
            .flat_map(|b| b.shot_events.iter().cloned())
            .chain(self.overflow.shot_events.iter().cloned())
            .collect();
        all.sort_by(|a, b| a.time.total_cmp(&b.time));
        all
    }

    pub fn pose_frames(&self) -> Vec<PoseFrame> {
        let mut all: Vec<PoseFrame> = self
            .timeline
            .iter()
            .flat_map(|b| b.pose_keypoints.iter().cloned())
            .chain(self.overflow.pose_keypoints.iter().cloned())
            .collect();
        all.sort_by(|a, b| a.time.total_cmp(&b.time));
        all
    }

    /// End of the last block, or zero for an empty show.
    pub fn end_time(&self) -> f64 {
        self.timeline.last().map(|b| b.span.end).unwrap_or(0.0)
    }

    /// Index of the block whose span contains `t`.
    pub fn block_at(&self, t: f64) -> Option<usize> {
        let idx = self.timeline.partition_point(|b| b.span.start <= t);
        if idx == 0 {
            return None;
        }
        if self.timeline[idx - 1].span.contains(t) {
            Some(idx - 1)
        } else {
            None
        }
    }
}
