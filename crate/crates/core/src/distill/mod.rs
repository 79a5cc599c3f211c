//! Cross-view knowledge distillation: target selection, the InfoNCE
//! objective and its gradients, the projection head and the training loop.

mod head;
mod loss;
mod select;
mod train;

pub use head::{ProjectionHead, Trace, HEAD_MAGIC, HEAD_VERSION};
pub use loss::{batch_info_nce, info_nce, info_nce_grad, pretrain_loss, BatchDirection, InfoNceGrad};
pub use select::{same_view_negative, select_targets, DistillTriple, Provenance, TaggedFeature};
pub use train::{
    epoch_triples, metrics_csv, train_distill, train_distill_with, triple_gradient, DistillConfig, EpochMetrics,
    LabeledTake, TrainOutcome, METRICS_HEADER,
};
