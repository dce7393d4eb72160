//! Multimodal alignment, kinematics and laughter analytics for recorded
//! stand-up performances.
//!
//! The crate consumes detector outputs (subtitle files, laughter window
//! scores, shot labels, pose keypoints, topic assignments) and produces:
//!
//! * per-show unified timelines anchored on 60 s topic blocks
//!   ([`timeline`]),
//! * kinematic signals derived from raw keypoints ([`kinematics`]),
//! * topic-model diagnostics and outlier post-processing ([`topic`]),
//! * topic-level laughter profiles and correlations ([`analysis`]),
//! * a short-horizon laughter-onset prediction benchmark ([`onset`]).


mod error;

pub mod analysis;
pub mod config;
pub mod corpus;
pub mod io;
pub mod kinematics;
pub mod laughter;
pub mod onset;

pub mod subtitle;
pub mod synth;
pub mod timeline;
pub mod topic;

pub use error::{Error, Result};
pub use timeline::{
    BoundingBox, Joint, Keypoints, LaughType, LaughterEvent, PoseFrame, ShotFrame, ShotLabel,
    ShowMetadata, ShowTimeline, TimedSpan, TopicBlock,
};
