//! Shared temporal data model, containment alignment and the unified show
//! document.

mod align;
pub mod ingest;
mod json;
mod types;

pub use align::{
    align_show, assign_by_containment, check_blocks, grid_spans, BlockSeed, Containment, Streams,
};
pub use json::{
    deserialize_show, deserialize_show_with_report, serialize_show, show_key, show_to_value,
    OVERFLOW_KEY,
};
pub use types::{
    BoundingBox, Joint, Keypoints, LaughType, LaughterEvent, Overflow, PoseFrame, ShotFrame,
    ShotLabel, ShowMetadata, ShowTimeline, TimedSpan, TopicBlock, EMBEDDING_DIM, UNIT_NORM_TOL,
};
