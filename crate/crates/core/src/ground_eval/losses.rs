//! Grounding losses over relative (center, duration) span predictions.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Lower bound applied to predicted relative durations.
pub const MIN_DURATION: f64 = 1e-6;

/// Closed interval `[start, end]` in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Span {
    pub start: f64,
    pub end: f64,
}

impl Span {
    pub fn new(start: f64, end: f64) -> Span {
        Span { start, end }
    }

    pub fn length(&self) -> f64 {
        self.end - self.start
    }
}

pub fn span_iou(a: Span, b: Span) -> Result<f64> {
    if a.start > a.end || b.start > b.end {
        return Err(Error::Contract(format!("span with start after end: {a:?} / {b:?}")));
    }
    let inter = (a.end.min(b.end) - a.start.max(b.start)).max(0.0);
    let union = a.length() + b.length() - inter;
    if union <= 0.0 {
        return Ok(0.0);
    }
    Ok((inter / union).clamp(0.0, 1.0))
}

/// Relative prediction for one keystep within a chunk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpanPrediction {
    pub keystep_id: String,
    /// Relative center in `[0, 1]`.
    pub center: f64,
    /// Relative duration in `[0, 1]`.
    pub duration: f64,
}

impl SpanPrediction {
    pub fn new(keystep_id: impl Into<String>, center: f64, duration: f64) -> Result<SpanPrediction> {
        if !(0.0..=1.0).contains(&center) || !(0.0..=1.0).contains(&duration) {
            return Err(Error::Contract(format!("relative center/duration out of [0, 1]: {center}, {duration}")));
        }
        Ok(SpanPrediction { keystep_id: keystep_id.into(), center, duration })
    }

    /// Absolute span `[(c - d/2) T, (c + d/2) T]` clamped to `[0, T]`.
    pub fn to_span(&self, chunk_len: f64) -> Span {
        let d = self.duration.max(MIN_DURATION);
        Span::new(
            ((self.center - d / 2.0) * chunk_len).clamp(0.0, chunk_len),
            ((self.center + d / 2.0) * chunk_len).clamp(0.0, chunk_len),
        )
    }
}

/// Ground-truth keystep interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub keystep_id: String,
    pub span: Span,
}

impl GroundTruth {
    pub fn relative_center(&self, chunk_len: f64) -> f64 {
        (self.span.start + self.span.end) / (2.0 * chunk_len)
    }

    pub fn relative_duration(&self, chunk_len: f64) -> f64 {
        self.span.length() / chunk_len
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IouLoss {
    pub loss: f64,
    pub d_center: f64,
    pub d_duration: f64,
}

/// `1 - IoU` with gradients in relative center and duration.
///
/// Gradients ignore the `[0, T]` clamp (interior branch). When the spans
/// are disjoint the IoU is flat, so the gradient of the generalized-IoU
/// continuation `1 - IoU + (hull - union) / hull` is returned instead; it
/// moves the prediction toward the ground truth.
pub fn iou_loss(pred: &SpanPrediction, gt: Span, chunk_len: f64) -> Result<IouLoss> {
    if chunk_len.is_nan() || chunk_len <= 0.0 {
        return Err(Error::Contract("chunk length must be positive".into()));
    }
    let p = pred.to_span(chunk_len);
    let (a, b, s, e) = (p.start, p.end, gt.start, gt.end);
    let iou = span_iou(p, gt)?;
    let inter = b.min(e) - a.max(s);
    // partial derivatives w.r.t. the predicted endpoints a and b
    let (dl_da, dl_db) = if inter > 0.0 {
        let union = (b - a) + (e - s) - inter;
        let di_da = if a > s { -1.0 } else { 0.0 };
        let di_db = if b < e { 1.0 } else { 0.0 };
        let du_da = -1.0 - di_da;
        let du_db = 1.0 - di_db;
        let u2 = union * union;
        (-(di_da * union - inter * du_da) / u2, -(di_db * union - inter * du_db) / u2)
    } else {
        let union = (b - a) + (e - s);
        let hull = b.max(e) - a.min(s);
        if hull <= 0.0 {
            (0.0, 0.0)
        } else {
            let dh_da = if a < s { -1.0 } else { 0.0 };
            let dh_db = if b > e { 1.0 } else { 0.0 };
            let h2 = hull * hull;
            (-(-hull - union * dh_da) / h2, -(1.0 * hull - union * dh_db) / h2)
        }
    };
    // a = (c - d/2) T, b = (c + d/2) T
    Ok(IouLoss {
        loss: 1.0 - iou,
        d_center: chunk_len * (dl_da + dl_db),
        d_duration: chunk_len * 0.5 * (dl_db - dl_da),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundingWeights {
    pub lambda_c: f64,
    pub lambda_d: f64,
    pub lambda_iou: f64,
    pub lambda_infonce: f64,
}

impl Default for GroundingWeights {
    fn default() -> Self {
        GroundingWeights { lambda_c: 1.0, lambda_d: 1.0, lambda_iou: 1.0, lambda_infonce: 1.0 }
    }
}

impl GroundingWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [self.lambda_c, self.lambda_d, self.lambda_iou, self.lambda_infonce];
        if all.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Config(format!("loss weights must be non-negative: {all:?}")));
        }
        Ok(())
    }
}

/// Mean over keysteps of the weighted L1 center, L1 duration and IoU terms.
pub fn grounding_loss(
    preds: &[SpanPrediction],
    gts: &[GroundTruth],
    weights: &GroundingWeights,
    chunk_len: f64,
) -> Result<f64> {
    weights.validate()?;
    if preds.is_empty() || preds.len() != gts.len() {
        return Err(Error::Contract(format!("{} predictions for {} ground truths", preds.len(), gts.len())));
    }
    let mut total = 0.0;
    for (p, g) in preds.iter().zip(gts) {
        if p.keystep_id != g.keystep_id {
            return Err(Error::Contract(format!("prediction `{}` aligned with `{}`", p.keystep_id, g.keystep_id)));
        }
        let l_center = (p.center - g.relative_center(chunk_len)).abs();
        let l_dur = (p.duration - g.relative_duration(chunk_len)).abs();
        let l_iou = iou_loss(p, g.span, chunk_len)?.loss;
        total += weights.lambda_c * l_center + weights.lambda_d * l_dur + weights.lambda_iou * l_iou;
    }
    Ok(total / preds.len() as f64)
}

/// `L_ground + λ_InfoNCE · L_InfoNCE`.
pub fn combined_loss(l_ground: f64, l_infonce: f64, weights: &GroundingWeights) -> f64 {
    l_ground + weights.lambda_infonce * l_infonce
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iou_examples() {
        assert_eq!(span_iou(Span::new(0., 2.), Span::new(0., 2.)), Ok(1.0));
        assert_eq!(span_iou(Span::new(0., 1.), Span::new(2., 3.)), Ok(0.0));
        assert!((span_iou(Span::new(0., 2.), Span::new(1., 3.)).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(span_iou(Span::new(1., 1.), Span::new(1., 1.)), Ok(0.0));
        assert!(span_iou(Span::new(2., 1.), Span::new(0., 1.)).is_err());
    }

    #[test]
    fn perfect_prediction_has_zero_loss() {
        let p = SpanPrediction::new("k", 0.5, 0.25).unwrap();
        let l = iou_loss(&p, Span::new(12.0, 20.0), 32.0).unwrap();
        assert!(l.loss.abs() < 1e-15);
    }

    #[test]
    fn disjoint_gradient_points_at_ground_truth() {
        let left = SpanPrediction::new("k", 0.1, 0.1).unwrap();
        let l = iou_loss(&left, Span::new(50.0, 60.0), 100.0).unwrap();
        assert_eq!(l.loss, 1.0);
        assert!(l.d_center < 0.0);
        let right = SpanPrediction::new("k", 0.9, 0.1).unwrap();
        assert!(iou_loss(&right, Span::new(10.0, 20.0), 100.0).unwrap().d_center > 0.0);
    }

    #[test]
    fn grounding_loss_hand_case() {
        let gts = vec![
            GroundTruth { keystep_id: "a".into(), span: Span::new(0.0, 20.0) },
            GroundTruth { keystep_id: "b".into(), span: Span::new(80.0, 90.0) },
        ];
        // b: gt center .85 dur .1; prediction center .35 dur .2, disjoint
        let preds = vec![SpanPrediction::new("a", 0.1, 0.2).unwrap(), SpanPrediction::new("b", 0.35, 0.2).unwrap()];
        let l = grounding_loss(&preds, &gts, &GroundingWeights::default(), 100.0).unwrap();
        assert!((l - 0.8).abs() < 1e-12, "{l}");
        let zero = GroundingWeights { lambda_c: 0.0, lambda_d: 0.0, lambda_iou: 0.0, lambda_infonce: 0.0 };
        assert_eq!(grounding_loss(&preds, &gts, &zero, 100.0), Ok(0.0));
        let swapped = vec![preds[1].clone(), preds[0].clone()];
        assert!(matches!(grounding_loss(&swapped, &gts, &zero, 100.0), Err(Error::Contract(_))));
    }

    #[test]
    fn combined_examples() {
        let w = GroundingWeights { lambda_infonce: 0.0, ..Default::default() };
        assert_eq!(combined_loss(0.7, 3.0, &w), 0.7);
        assert_eq!(combined_loss(0.5, 0.5, &GroundingWeights::default()), 1.0);
    }
}
