//! InfoNCE over cosine similarities, with exact gradients.

use crate::stats::{dot, norm};
use crate::{Error, Result};

/// Loss value plus gradients with respect to every input vector.
#[derive(Debug, Clone, PartialEq)]
pub struct InfoNceGrad {
    pub loss: f64,
    pub anchor: Vec<f64>,
    pub positives: Vec<Vec<f64>>,
    pub negatives: Vec<Vec<f64>>,
}

fn check_inputs(anchor: &[f64], positives: &[Vec<f64>], negatives: &[Vec<f64>], gamma: f64) -> Result<()> {
    if positives.is_empty() {
        return Err(Error::Contract("InfoNCE needs at least one positive".into()));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::Contract(format!("temperature must be positive, got {gamma}")));
    }
    let d = anchor.len();
    if positives.iter().chain(negatives).any(|v| v.len() != d) {
        return Err(Error::Contract("InfoNCE vectors differ in dimension".into()));
    }
    if std::iter::once(anchor).chain(positives.iter().chain(negatives).map(Vec::as_slice)).any(|v| norm(v) < 1e-12) {
        return Err(Error::DegenerateInput("zero-norm vector in InfoNCE input".into()));
    }
    Ok(())
}

fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `-log(Σ_Q e^{s/γ} / (Σ_Q e^{s/γ} + Σ_G e^{s/γ}))` with `s` the cosine to
/// the anchor.
pub fn info_nce(anchor: &[f64], positives: &[Vec<f64>], negatives: &[Vec<f64>], gamma: f64) -> Result<f64> {
    check_inputs(anchor, positives, negatives, gamma)?;
    let na = norm(anchor);
    let logit = |v: &Vec<f64>| dot(v, anchor) / (norm(v) * na) / gamma;
    let pos: Vec<f64> = positives.iter().map(logit).collect();
    let all: Vec<f64> = pos.iter().copied().chain(negatives.iter().map(logit)).collect();
    Ok((log_sum_exp(all.iter().copied()) - log_sum_exp(pos.iter().copied())).max(0.0))
}

pub fn info_nce_grad(
    anchor: &[f64],
    positives: &[Vec<f64>],
    negatives: &[Vec<f64>],
    gamma: f64,
) -> Result<InfoNceGrad> {
    check_inputs(anchor, positives, negatives, gamma)?;
    let d = anchor.len();
    let na = norm(anchor);
    let others: Vec<&Vec<f64>> = positives.iter().chain(negatives).collect();
    let norms: Vec<f64> = others.iter().map(|v| norm(v)).collect();
    let sims: Vec<f64> = others.iter().zip(&norms).map(|(v, n)| dot(v, anchor) / (n * na)).collect();
    let logits: Vec<f64> = sims.iter().map(|s| s / gamma).collect();
    let n_pos = positives.len();
    let lse_all = log_sum_exp(logits.iter().copied());
    let lse_pos = log_sum_exp(logits[..n_pos].iter().copied());
    let loss = (lse_all - lse_pos).max(0.0);

    // dL/dz_k = softmax_all(k) - [k ∈ Q] softmax_Q(k)
    let dz: Vec<f64> = logits
        .iter()
        .enumerate()
        .map(|(k, z)| {
            let p_all = (z - lse_all).exp();
            if k < n_pos {
                p_all - (z - lse_pos).exp()
            } else {
                p_all
            }
        })
        .collect();

    let mut g_anchor = vec![0.0; d];
    let mut g_others = Vec::with_capacity(others.len());
    for (k, v) in others.iter().enumerate() {
        let ds = dz[k] / gamma;
        let (nv, s) = (norms[k], sims[k]);
        // ∂s/∂v = a/(|v||a|) - s v/|v|²,  ∂s/∂a = v/(|v||a|) - s a/|a|²
        let g_v: Vec<f64> = (0..d).map(|i| ds * (anchor[i] / (nv * na) - s * v[i] / (nv * nv))).collect();
        for i in 0..d {
            g_anchor[i] += ds * (v[i] / (nv * na) - s * anchor[i] / (na * na));
        }
        g_others.push(g_v);
    }
    let negatives_grad = g_others.split_off(n_pos);
    Ok(InfoNceGrad { loss, anchor: g_anchor, positives: g_others, negatives: negatives_grad })
}

/// Direction(s) of the batch contrastive objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BatchDirection {
    /// Average of `A → B` and `B → A`.
    #[default]
    Symmetric,
    /// Rows of `A` are anchors, rows of `B` the candidates.
    OneWay,
}

fn one_way(anchors: &[Vec<f64>], candidates: &[Vec<f64>], gamma: f64) -> Result<f64> {
    let mut total = 0.0;
    for (i, a) in anchors.iter().enumerate() {
        let negs: Vec<Vec<f64>> =
            candidates.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, c)| c.clone()).collect();
        total += info_nce(a, std::slice::from_ref(&candidates[i]), &negs, gamma)?;
    }
    Ok(total / anchors.len() as f64)
}

/// Batch InfoNCE: row `i` of `a` matches row `i` of `b`; every other row of
/// the opposite batch is a negative.
pub fn batch_info_nce(a: &[Vec<f64>], b: &[Vec<f64>], gamma: f64, direction: BatchDirection) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Contract(format!("batch sizes differ ({} vs {})", a.len(), b.len())));
    }
    if a.len() < 2 {
        return Err(Error::Config("batch InfoNCE needs at least two rows".into()));
    }
    match direction {
        BatchDirection::OneWay => one_way(a, b, gamma),
        BatchDirection::Symmetric => Ok(0.5 * (one_way(a, b, gamma)? + one_way(b, a, gamma)?)),
    }
}

/// Pre-training objective: ego aligned with the best exo view of each
/// sample, plus the best exo view aligned with every other exo view.
///
/// `exo_by_view[k][i]` is sample `i` seen from exo view `k`; `best[i]` picks
/// the best view of sample `i`.
pub fn pretrain_loss(
    ego: &[Vec<f64>],
    exo_by_view: &[Vec<Vec<f64>>],
    best: &[usize],
    gamma: f64,
    direction: BatchDirection,
) -> Result<f64> {
    let n = ego.len();
    if exo_by_view.is_empty() {
        return Err(Error::Contract("pre-training needs at least one exo view".into()));
    }
    if best.len() != n || exo_by_view.iter().any(|v| v.len() != n) {
        return Err(Error::Contract("inconsistent batch sizes in pre-training input".into()));
    }
    if let Some(&b) = best.iter().find(|&&b| b >= exo_by_view.len()) {
        return Err(Error::Contract(format!("best view index {b} out of range")));
    }
    let best_rows: Vec<Vec<f64>> = (0..n).map(|i| exo_by_view[best[i]][i].clone()).collect();
    let mut loss = batch_info_nce(ego, &best_rows, gamma, direction)?;
    // slot j holds, for every sample, its j-th non-best exo view
    for slot in 0..exo_by_view.len() - 1 {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let k = (0..exo_by_view.len()).filter(|&k| k != best[i]).nth(slot).expect("slot in range");
                exo_by_view[k][i].clone()
            })
            .collect();
        loss += batch_info_nce(&best_rows, &rows, gamma, direction)?;
    }
    Ok(loss)
}
