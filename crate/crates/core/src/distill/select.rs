//! Choosing the positive and negative targets of one anchor feature.

use rand::Rng;

use crate::calib_io::{KeystepSet, RankOrder, Take};
use crate::curriculum::positive_rank;
use crate::stats::cosine;
use crate::{Error, Result, ViewId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    CrossViewPositive,
    CrossViewNegative,
    SameViewNegative,
}

/// A feature taken from `view` at second `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct TaggedFeature {
    pub view: ViewId,
    pub t: u32,
    pub provenance: Provenance,
    pub feature: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistillTriple {
    pub view: ViewId,
    pub t: u32,
    pub anchor: Vec<f64>,
    pub positives: Vec<TaggedFeature>,
    pub negatives: Vec<TaggedFeature>,
}

impl DistillTriple {
    pub fn positive_features(&self) -> Vec<Vec<f64>> {
        self.positives.iter().map(|f| f.feature.clone()).collect()
    }

    pub fn negative_features(&self) -> Vec<Vec<f64>> {
        self.negatives.iter().map(|f| f.feature.clone()).collect()
    }
}

/// Picks the keystep least similar to `feature` among those whose interval
/// does not contain `t` and that cover at least one whole second of the
/// stream, then samples a second uniformly from that interval.
pub fn same_view_negative<R: Rng + ?Sized>(
    view: ViewId,
    t: u32,
    feature: &[f64],
    keysteps: &KeystepSet,
    stream_len: u32,
    rng: &mut R,
) -> Result<u32> {
    let mut best: Option<(f64, std::ops::Range<u32>)> = None;
    for k in keysteps.entries() {
        if k.contains(f64::from(t)) {
            continue;
        }
        let seconds = k.integer_seconds(stream_len);
        if seconds.is_empty() {
            continue;
        }
        let Some(sim) = cosine(feature, &k.embedding) else { continue };
        if best.as_ref().is_none_or(|(s, _)| sim < *s) {
            best = Some((sim, seconds));
        }
    }
    let (_, range) = best.ok_or(Error::NoEligibleNegative { view, t })?;
    Ok(rng.gen_range(range))
}

/// Builds the contrastive triple for `source` at `ranking.timestamp`.
///
/// The positive comes from the view at the curriculum rank; the negatives
/// are the synchronous worst-ranked view (dropped when it is the source or
/// the positive view) and a same-view feature from a dissimilar keystep
/// (dropped when no keystep qualifies).
pub fn select_targets<R: Rng + ?Sized>(
    ranking: &RankOrder,
    source: ViewId,
    phase: usize,
    take: &Take,
    rng: &mut R,
) -> Result<DistillTriple> {
    let n_views = ranking.order.len();
    if n_views < 2 {
        return Err(Error::Config("target selection needs at least two views".into()));
    }
    if phase == 0 {
        return Err(Error::Contract("phases are 1-based".into()));
    }
    let t = ranking.timestamp;
    let source_rank = ranking
        .rank_of(source)
        .ok_or_else(|| Error::Contract(format!("view {source} missing from ranking at t={t}")))?;
    let feature_of = |view: ViewId, at: u32| -> Result<Vec<f64>> {
        let stream = take.stream(view).ok_or_else(|| Error::Contract(format!("no feature stream for view {view}")))?;
        if at as usize >= stream.rows() {
            return Err(Error::Contract(format!("t={at} beyond stream of {} rows", stream.rows())));
        }
        Ok(stream.row_f64(at as usize))
    };
    let anchor = feature_of(source, t)?;
    let pos_view = ranking.order[positive_rank(source_rank, phase, n_views)];
    let positives = vec![TaggedFeature {
        view: pos_view,
        t,
        provenance: Provenance::CrossViewPositive,
        feature: feature_of(pos_view, t)?,
    }];
    let mut negatives = Vec::with_capacity(2);
    let worst = ranking.worst();
    if worst != source && worst != pos_view {
        negatives.push(TaggedFeature {
            view: worst,
            t,
            provenance: Provenance::CrossViewNegative,
            feature: feature_of(worst, t)?,
        });
    }
    match same_view_negative(source, t, &anchor, &take.keysteps, take.duration_s, rng) {
        Ok(t_neg) => negatives.push(TaggedFeature {
            view: source,
            t: t_neg,
            provenance: Provenance::SameViewNegative,
            feature: feature_of(source, t_neg)?,
        }),
        Err(Error::NoEligibleNegative { .. }) => {}
        Err(e) => return Err(e),
    }
    Ok(DistillTriple { view: source, t, anchor, positives, negatives })
}
