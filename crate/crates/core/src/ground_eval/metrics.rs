//! Recall@K at IoU thresholds and mean IoU.

use super::losses::{span_iou, Span};
use crate::stats::mean;
use crate::{Error, Result};

/// Thresholds reported by default.
pub const DEFAULT_THRESHOLDS: [f64; 4] = [0.1, 0.3, 0.5, 0.7];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredSpan {
    pub span: Span,
    pub confidence: Option<f64>,
}

/// All predictions for one ground-truth keystep occurrence.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundingCase {
    pub keystep_id: String,
    pub gt: Span,
    pub predictions: Vec<ScoredSpan>,
}

impl GroundingCase {
    /// Predictions by descending confidence; unscored predictions follow the
    /// scored ones and keep their listed order.
    pub fn ranked(&self) -> Vec<ScoredSpan> {
        let mut p = self.predictions.clone();
        p.sort_by(|a, b| match (a.confidence, b.confidence) {
            (Some(x), Some(y)) => y.total_cmp(&x),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => std::cmp::Ordering::Equal,
        });
        p
    }

    /// IoU of each of the top `k` predictions.
    pub fn top_k_ious(&self, k: usize) -> Result<Vec<f64>> {
        self.ranked().iter().take(k).map(|p| span_iou(p.span, self.gt)).collect()
    }

    pub fn top1_iou(&self) -> Result<f64> {
        self.top_k_ious(1)?
            .first()
            .copied()
            .ok_or_else(|| Error::Contract(format!("keystep `{}` has no prediction", self.keystep_id)))
    }
}

fn check_cases(cases: &[GroundingCase]) -> Result<()> {
    if cases.is_empty() {
        return Err(Error::Contract("no ground-truth keysteps to evaluate".into()));
    }
    if let Some(c) = cases.iter().find(|c| c.predictions.is_empty()) {
        return Err(Error::Contract(format!("keystep `{}` has no prediction", c.keystep_id)));
    }
    Ok(())
}

/// Fraction of cases whose top-`k` predictions include one with IoU ≥ θ.
pub fn recall_at_k(cases: &[GroundingCase], theta: f64, k: usize) -> Result<f64> {
    check_cases(cases)?;
    if k == 0 {
        return Err(Error::Contract("K must be at least 1".into()));
    }
    let mut hits = 0usize;
    for c in cases {
        if c.top_k_ious(k)?.iter().any(|&iou| iou >= theta) {
            hits += 1;
        }
    }
    Ok(hits as f64 / cases.len() as f64)
}

/// Mean top-1 IoU.
pub fn miou(cases: &[GroundingCase]) -> Result<f64> {
    check_cases(cases)?;
    let ious = cases.iter().map(GroundingCase::top1_iou).collect::<Result<Vec<_>>>()?;
    Ok(mean(&ious).expect("non-empty"))
}
