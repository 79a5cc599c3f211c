//! Grounding evaluation report with per-bucket breakdown.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::metrics::{miou, recall_at_k, GroundingCase};
use super::stratify::{Bucket, ViewBuckets};
use crate::{Error, Result, ViewId};

/// A grounding case tagged with the video it was evaluated on.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewCase {
    pub take_id: String,
    pub view: ViewId,
    pub case: GroundingCase,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketMetrics {
    pub count: usize,
    /// `(θ, recall)` pairs in threshold order.
    pub recall: Vec<(f64, f64)>,
    pub miou: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub k: usize,
    pub overall: BucketMetrics,
    pub buckets: BTreeMap<Bucket, BucketMetrics>,
    /// Takes with fewer than three exo views, which have no middle bucket.
    pub middle_omitted: Vec<String>,
}

fn bucket_metrics(cases: &[GroundingCase], thresholds: &[f64], k: usize) -> Result<BucketMetrics> {
    let recall = thresholds.iter().map(|&th| Ok((th, recall_at_k(cases, th, k)?))).collect::<Result<Vec<_>>>()?;
    Ok(BucketMetrics { count: cases.len(), recall, miou: miou(cases)? })
}

/// Bucket of one case; ego-view cases and takes without buckets land in
/// [`Bucket::Other`].
pub fn case_bucket(case: &ViewCase, buckets: &BTreeMap<String, ViewBuckets>) -> Bucket {
    buckets.get(&case.take_id).and_then(|b| b.bucket_of(case.view)).unwrap_or(Bucket::Other)
}

pub fn evaluate(
    cases: &[ViewCase],
    buckets: &BTreeMap<String, ViewBuckets>,
    thresholds: &[f64],
    k: usize,
) -> Result<EvalReport> {
    if thresholds.is_empty() {
        return Err(Error::Config("at least one IoU threshold is required".into()));
    }
    if let Some(th) = thresholds.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(Error::Config(format!("IoU threshold {th} outside [0, 1]")));
    }
    let all: Vec<GroundingCase> = cases.iter().map(|c| c.case.clone()).collect();
    let overall = bucket_metrics(&all, thresholds, k)?;
    let mut grouped: BTreeMap<Bucket, Vec<GroundingCase>> = BTreeMap::new();
    for c in cases {
        grouped.entry(case_bucket(c, buckets)).or_default().push(c.case.clone());
    }
    let buckets_out = grouped
        .iter()
        .map(|(&b, cs)| Ok((b, bucket_metrics(cs, thresholds, k)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    let middle_omitted = buckets.iter().filter(|(_, b)| b.middle.is_none()).map(|(id, _)| id.clone()).collect();
    Ok(EvalReport { k, overall, buckets: buckets_out, middle_omitted })
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One row per `(bucket, θ)`; the overall row uses the label `all`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bucket,theta,recall,miou,count\n");
        let rows = std::iter::once(("all", &self.overall)).chain(self.buckets.iter().map(|(b, m)| (b.label(), m)));
        for (label, m) in rows {
            for (th, r) in &m.recall {
                let _ = writeln!(out, "{label},{th},{r:?},{:?},{}", m.miou, m.count);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ground_eval::losses::Span;
    use crate::ground_eval::metrics::ScoredSpan;

    fn vc(take: &str, view: u32, end: f64) -> ViewCase {
        ViewCase {
            take_id: take.into(),
            view: ViewId(view),
            case: GroundingCase {
                keystep_id: format!("k{view}"),
                gt: Span::new(0.0, 10.0),
                predictions: vec![ScoredSpan { span: Span::new(0.0, end), confidence: None }],
            },
        }
    }

    #[test]
    fn buckets_and_csv() {
        let mut b = BTreeMap::new();
        b.insert("t".to_string(), ViewBuckets { best: ViewId(1), middle: None, worst: ViewId(2) });
        let cases = vec![vc("t", 1, 10.0), vc("t", 2, 2.0), vc("u", 1, 5.0)];
        let r = evaluate(&cases, &b, &[0.1, 0.5], 1).unwrap();
        assert_eq!(r.buckets[&Bucket::Best].miou, 1.0);
        assert_eq!(r.buckets[&Bucket::Worst].miou, 0.2);
        assert_eq!(r.buckets[&Bucket::Other].count, 1);
        assert_eq!(r.middle_omitted, vec!["t".to_string()]);
        let csv = r.to_csv();
        assert!(csv.starts_with("bucket,theta,recall,miou,count\nall,0.1,1.0,"));
        assert_eq!(csv.lines().count(), 1 + 2 * 4);
        let back: EvalReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
    }
}
