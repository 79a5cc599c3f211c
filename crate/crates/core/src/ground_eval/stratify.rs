//! Best / middle / worst view assignment per take.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::calib_io::RankOrder;
use crate::ViewId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Bucket {
    Best,
    Middle,
    Worst,
    /// Exo views that are none of the three.
    Other,
}

impl Bucket {
    pub fn label(self) -> &'static str {
        match self {
            Bucket::Best => "B",
            Bucket::Middle => "M",
            Bucket::Worst => "W",
            Bucket::Other => "other",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViewBuckets {
    pub best: ViewId,
    /// `None` when the take has fewer than three exo views.
    pub middle: Option<ViewId>,
    pub worst: ViewId,
}

impl ViewBuckets {
    pub fn bucket_of(&self, view: ViewId) -> Option<Bucket> {
        if view.is_ego() {
            None
        } else if view == self.best {
            Some(Bucket::Best)
        } else if view == self.worst {
            Some(Bucket::Worst)
        } else if Some(view) == self.middle {
            Some(Bucket::Middle)
        } else {
            Some(Bucket::Other)
        }
    }
}

/// `B` = exo view most often at rank 1, `W` = most often last (excluding
/// `B`), `M` = among the rest, the view at the median position when sorted
/// by mean rank. Ties go to the lower view id. Returns `None` for takes with
/// fewer than two exo views or an empty timeline.
pub fn stratify_by_view(orders: &[RankOrder]) -> Option<ViewBuckets> {
    let first = orders.first()?;
    let mut exo: Vec<ViewId> = first.order.iter().copied().filter(|v| !v.is_ego()).collect();
    exo.sort();
    if exo.len() < 2 {
        return None;
    }
    let last_rank = exo.len();
    let mut top = BTreeMap::new();
    let mut bottom = BTreeMap::new();
    let mut rank_sum: BTreeMap<ViewId, usize> = BTreeMap::new();
    for r in orders {
        for (k, &v) in r.order.iter().enumerate().skip(1) {
            *rank_sum.entry(v).or_default() += k;
            if k == 1 {
                *top.entry(v).or_insert(0usize) += 1;
            }
            if k == last_rank {
                *bottom.entry(v).or_insert(0usize) += 1;
            }
        }
    }
    let most = |counts: &BTreeMap<ViewId, usize>, exclude: Option<ViewId>| -> ViewId {
        // ascending id iteration; strict > keeps the lower id on ties
        let mut best: Option<(ViewId, usize)> = None;
        for &v in exo.iter().filter(|&&v| Some(v) != exclude) {
            let c = counts.get(&v).copied().unwrap_or(0);
            if best.is_none_or(|(_, bc)| c > bc) {
                best = Some((v, c));
            }
        }
        best.expect("at least one candidate").0
    };
    let best = most(&top, None);
    let worst = most(&bottom, Some(best));
    let mut rest: Vec<ViewId> = exo.iter().copied().filter(|&v| v != best && v != worst).collect();
    rest.sort_by(|a, b| rank_sum[a].cmp(&rank_sum[b]).then(a.cmp(b)));
    let middle = if exo.len() >= 3 { rest.get((rest.len() - 1) / 2).copied() } else { None };
    Some(ViewBuckets { best, middle, worst })
}
