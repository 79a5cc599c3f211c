//! Grounding losses, Recall@K and mIoU, view-quality buckets and
//! feature-alignment diagnostics.

pub mod alignment;
mod losses;
mod metrics;
mod report;
mod stratify;

pub use alignment::{alignment_report, AlignmentReport, AlignmentStats};
pub use losses::{
    combined_loss, grounding_loss, iou_loss, span_iou, GroundTruth, GroundingWeights, IouLoss, Span, SpanPrediction,
    MIN_DURATION,
};
pub use metrics::{miou, recall_at_k, GroundingCase, ScoredSpan, DEFAULT_THRESHOLDS};
pub use report::{case_bucket, evaluate, BucketMetrics, EvalReport, ViewCase};
pub use stratify::{stratify_by_view, Bucket, ViewBuckets};
