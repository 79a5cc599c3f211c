//! File formats: calibration, ego trajectory, feature streams, keystep
//! annotations and ranking caches, plus the [`Take`] container.
//!
//! All parsers are pure functions over their input and never panic on
//! malformed data; they return a structured [`crate::Error`] instead.

mod cache;
mod dir;
mod features;
mod keysteps;
mod pose;
mod take;
mod text;

pub use cache::{parse_ranking_cache, serialize_ranking_cache, RankOrder};
pub use dir::{
    load_keysteps, load_take_dir, read_bytes, read_text, stream_file_name, write_atomic, write_take_dir,
    CALIBRATION_FILE, KEYSTEP_EMBEDDING_FILE, KEYSTEP_FILE, TRAJECTORY_FILE,
};
pub use features::{read_feature_stream, write_feature_stream, FeatureStream, HEADER_LEN, MAGIC, VERSION};
pub use keysteps::{
    parse_keystep_annotations, parse_keystep_records, serialize_keystep_records, EmbeddingRef, Keystep, KeystepRecord,
    KeystepSet,
};
pub use pose::{orthonormality_error, Frame, Pose, PoseTrack, ORTHONORMAL_KEEP_TOL, ORTHONORMAL_REJECT_TOL};
pub use take::Take;
pub use text::{parse_calibration, parse_ego_trajectory, serialize_calibration, serialize_ego_trajectory, ExoCamera};
