//! Feature-alignment diagnostics: how close projected exo features sit to
//! the synchronous ego feature and how far from their negatives.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::stratify::{stratify_by_view, Bucket};
use crate::distill::{info_nce, same_view_negative, LabeledTake, ProjectionHead};
use crate::par::Execution;
use crate::rng;
use crate::stats::{cosine, mean};
use crate::{Error, Result, ViewId};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignmentStats {
    /// Anchors that contributed.
    pub anchors: usize,
    /// Anchors dropped for zero-norm projections.
    pub skipped: usize,
    pub avg_neg_cosine: f64,
    pub mean_infonce: f64,
    pub avg_pos_cosine: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub overall: AlignmentStats,
    pub strata: BTreeMap<Bucket, AlignmentStats>,
}

#[derive(Default)]
struct Acc {
    infonce: Vec<f64>,
    pos: Vec<f64>,
    neg: Vec<f64>,
    skipped: usize,
}

impl Acc {
    fn merge(&mut self, other: &Acc) {
        self.infonce.extend_from_slice(&other.infonce);
        self.pos.extend_from_slice(&other.pos);
        self.neg.extend_from_slice(&other.neg);
        self.skipped += other.skipped;
    }

    fn stats(&self) -> AlignmentStats {
        AlignmentStats {
            anchors: self.infonce.len(),
            skipped: self.skipped,
            avg_neg_cosine: mean(&self.neg).unwrap_or(0.0),
            mean_infonce: mean(&self.infonce).unwrap_or(0.0),
            avg_pos_cosine: mean(&self.pos).unwrap_or(0.0),
        }
    }
}

/// Scores one exo view of one take. Negatives are the synchronous
/// worst-ranked view (unless it is the anchor's own view) and a same-view
/// feature drawn from a dissimilar keystep; the ego feature is the positive.
fn view_accumulator(
    lt: &LabeledTake,
    take_index: usize,
    view: ViewId,
    projected: &BTreeMap<ViewId, Vec<Vec<f64>>>,
    gamma: f64,
    seed: u64,
) -> Result<Acc> {
    let take = &lt.take;
    let stream = take.stream(view).ok_or_else(|| Error::Contract(format!("no stream for view {view}")))?;
    let mut rng = rng::stream(seed, &[rng::tag::EVAL, take_index as u64, u64::from(view.0)]);
    let proj = &projected[&view];
    let ego = &projected[&ViewId::EGO];
    let mut acc = Acc::default();
    for ranking in &lt.rankings {
        let t = ranking.timestamp;
        let ti = t as usize;
        let anchor = &proj[ti];
        let mut negatives = Vec::with_capacity(2);
        let worst = ranking.worst();
        if worst != view {
            negatives.push(projected[&worst][ti].clone());
        }
        let raw = stream.row_f64(ti);
        match same_view_negative(view, t, &raw, &take.keysteps, take.duration_s, &mut rng) {
            Ok(t_neg) => negatives.push(proj[t_neg as usize].clone()),
            Err(Error::NoEligibleNegative { .. }) => {}
            Err(e) => return Err(e),
        }
        let positive = std::slice::from_ref(&ego[ti]);
        let loss = match info_nce(anchor, positive, &negatives, gamma) {
            Ok(l) => l,
            Err(Error::DegenerateInput(_)) => {
                acc.skipped += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        acc.infonce.push(loss);
        acc.pos.push(cosine(anchor, &ego[ti]).expect("checked by info_nce"));
        for n in &negatives {
            acc.neg.push(cosine(anchor, n).expect("checked by info_nce"));
        }
    }
    Ok(acc)
}

/// Evaluates every exo view of every take against a fixed random stream, so
/// repeated calls with the same `seed` see the same negatives. Strata follow
/// the per-take view buckets.
pub fn alignment_report(
    takes: &[LabeledTake],
    head: &ProjectionHead,
    gamma: f64,
    seed: u64,
    exec: Execution,
) -> Result<AlignmentReport> {
    let mut jobs = Vec::new();
    for (i, lt) in takes.iter().enumerate() {
        if head.input_dim() != lt.take.dim() {
            return Err(Error::Contract(format!(
                "head expects {} inputs, take {} has dimension {}",
                head.input_dim(),
                lt.take.take_id,
                lt.take.dim()
            )));
        }
        jobs.extend(lt.take.streams.keys().filter(|v| !v.is_ego()).map(|&v| (i, v)));
    }
    let projections: Vec<BTreeMap<ViewId, Vec<Vec<f64>>>> = exec.map(takes, |lt| {
        lt.take
            .streams
            .iter()
            .map(|(&v, s)| (v, (0..s.rows()).map(|t| head.forward(&s.row_f64(t))).collect()))
            .collect()
    });
    let per_view = exec.map(&jobs, |&(i, v)| view_accumulator(&takes[i], i, v, &projections[i], gamma, seed));

    let buckets: Vec<_> = takes.iter().map(|lt| stratify_by_view(&lt.rankings)).collect();
    let mut overall = Acc::default();
    let mut strata: BTreeMap<Bucket, Acc> = BTreeMap::new();
    for (&(i, v), acc) in jobs.iter().zip(per_view) {
        let acc = acc?;
        overall.merge(&acc);
        let bucket = buckets[i].as_ref().and_then(|b| b.bucket_of(v)).unwrap_or(Bucket::Other);
        strata.entry(bucket).or_default().merge(&acc);
    }
    Ok(AlignmentReport { overall: overall.stats(), strata: strata.iter().map(|(&b, a)| (b, a.stats())).collect() })
}
