//! Activity-centric multi-view distillation toolkit.
//!
//! The crate is organised around the pipeline it supports:
//!
//! * [`calib_io`] reads and writes calibration, trajectory, feature, keystep
//!   and ranking-cache files.
//! * [`ranking`] orders the views of a take at every second by how well they
//!   observe the hand-object interaction region.
//! * [`curriculum`] maps epochs to phases and picks the positive target rank.
//! * [`distill`] builds contrastive triples, evaluates InfoNCE with analytic
//!   gradients and trains a projection head.
//! * [`ground_eval`] holds the grounding losses, Recall@K / mIoU metrics and
//!   view-quality stratification.
//! * [`sim`] generates synthetic takes with a ray-cast visibility oracle.
//!
//! Data-parallel loops go through [`par::Execution`]; with the default
//! `parallel` feature they run on rayon, otherwise sequentially. Both paths
//! produce identical results.

pub mod calib_io;
pub mod curriculum;
pub mod distill;
pub mod error;
pub mod ground_eval;
pub mod par;
pub mod ranking;
pub mod rng;
pub mod sim;
pub mod stats;

pub use error::{Error, Result};

use std::fmt;

use serde::{Deserialize, Serialize};

/// Identifier of a camera view within a take. The ego camera is always
/// [`ViewId::EGO`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ViewId(pub u32);

impl ViewId {
    pub const EGO: ViewId = ViewId(0);

    pub fn is_ego(self) -> bool {
        self == Self::EGO
    }
}

impl fmt::Display for ViewId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}
