//! Curriculum distillation training of a projection head.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::seq::SliceRandom;

use super::head::{ProjectionHead, Trace};
use super::loss::info_nce_grad;
use super::select::{select_targets, DistillTriple};
use crate::calib_io::{RankOrder, Take};
use crate::curriculum::CurriculumSchedule;
use crate::ground_eval::alignment::{alignment_report, AlignmentStats};
use crate::par::Execution;
use crate::rng;
use crate::stats::norm;
use crate::{Error, Result, ViewId};

/// A take together with its per-second ranking cache.
#[derive(Debug, Clone)]
pub struct LabeledTake {
    pub take: Take,
    pub rankings: Vec<RankOrder>,
}

impl LabeledTake {
    pub fn new(take: Take, rankings: Vec<RankOrder>) -> Result<LabeledTake> {
        if rankings.len() != take.duration_s as usize {
            return Err(Error::invalid(
                None,
                format!("{} rankings for a {}-second take", rankings.len(), take.duration_s),
            ));
        }
        let views: BTreeSet<ViewId> = take.streams.keys().copied().collect();
        for (t, r) in rankings.iter().enumerate() {
            if r.timestamp as usize != t {
                return Err(Error::invalid(
                    None,
                    format!("ranking timestamps must run 0..T, found {} at {t}", r.timestamp),
                ));
            }
            if r.order.first() != Some(&ViewId::EGO) || r.order.iter().copied().collect::<BTreeSet<_>>() != views {
                return Err(Error::invalid(None, format!("ranking at t={t} does not cover the take's views")));
            }
        }
        Ok(LabeledTake { take, rankings })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistillConfig {
    /// InfoNCE temperature.
    pub gamma: f64,
    pub lambda_infonce: f64,
    pub seed: u64,
    /// Layer sizes including the input; `None` means a linear `[D, D]` head.
    pub head_dims: Option<Vec<usize>>,
    /// Update biases too. Off by default: biases stay at their zero init.
    pub train_bias: bool,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
}

impl Default for DistillConfig {
    fn default() -> Self {
        DistillConfig {
            gamma: 0.1,
            lambda_infonce: 1.0,
            seed: 0,
            head_dims: None,
            train_bias: false,
            learning_rate: 0.01,
            epochs: 200,
            batch_size: 64,
        }
    }
}

impl DistillConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::Config(format!("gamma must be positive, got {}", self.gamma)));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning rate must be non-negative, got {}", self.learning_rate)));
        }
        if !(self.lambda_infonce >= 0.0 && self.lambda_infonce.is_finite()) {
            return Err(Error::Config("lambda_infonce must be non-negative".into()));
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::Config("epochs and batch size must be positive".into()));
        }
        Ok(())
    }
}

/// One row of the metrics timeline, measured on the evaluation takes with
/// the head as it stands at the start of the epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub phase: usize,
    pub mean_infonce: f64,
    pub avg_neg_cosine: f64,
    pub avg_pos_cosine: f64,
    /// Mean training loss over the epoch's anchors.
    pub train_loss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub head: ProjectionHead,
    pub metrics: Vec<EpochMetrics>,
    /// Evaluation after the last update.
    pub final_metrics: AlignmentStats,
}

pub const METRICS_HEADER: &str = "epoch,phase,mean_infonce,avg_neg_cosine,avg_pos_cosine";

pub fn metrics_csv(metrics: &[EpochMetrics]) -> String {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for m in metrics {
        let _ =
            writeln!(out, "{},{},{:?},{:?},{:?}", m.epoch, m.phase, m.mean_infonce, m.avg_neg_cosine, m.avg_pos_cosine);
    }
    out
}

/// Builds every triple of one epoch. Each `(take, view)` pair draws from
/// its own random stream so the result does not depend on scheduling.
pub fn epoch_triples(
    takes: &[LabeledTake],
    epoch: usize,
    phase: usize,
    seed: u64,
    exec: Execution,
) -> Result<Vec<DistillTriple>> {
    let jobs: Vec<(usize, ViewId)> =
        takes.iter().enumerate().flat_map(|(i, lt)| lt.take.streams.keys().map(move |&v| (i, v))).collect();
    let per_job = exec.map(&jobs, |&(i, view)| -> Result<Vec<DistillTriple>> {
        let lt = &takes[i];
        let mut g = rng::stream(seed, &[rng::tag::TRAIN, epoch as u64, i as u64, u64::from(view.0)]);
        lt.rankings.iter().map(|r| select_targets(r, view, phase, &lt.take, &mut g)).collect()
    });
    let mut out = Vec::new();
    for triples in per_job {
        out.extend(triples?);
    }
    Ok(out)
}

/// Loss and parameter gradient for one triple, or `None` when a projected
/// vector has zero norm.
pub fn triple_gradient(head: &ProjectionHead, triple: &DistillTriple, gamma: f64) -> Result<Option<(f64, Vec<f64>)>> {
    let (anchor, anchor_trace) = head.forward_traced(&triple.anchor);
    let project = |fs: &[super::select::TaggedFeature]| -> Vec<(Vec<f64>, Trace)> {
        fs.iter().map(|f| head.forward_traced(&f.feature)).collect()
    };
    let pos = project(&triple.positives);
    let neg = project(&triple.negatives);
    let degenerate = std::iter::once(&anchor).chain(pos.iter().chain(&neg).map(|(v, _)| v)).any(|v| norm(v) < 1e-12);
    if degenerate {
        return Ok(None);
    }
    let pos_v: Vec<Vec<f64>> = pos.iter().map(|(v, _)| v.clone()).collect();
    let neg_v: Vec<Vec<f64>> = neg.iter().map(|(v, _)| v.clone()).collect();
    let g = info_nce_grad(&anchor, &pos_v, &neg_v, gamma)?;
    let mut grad = vec![0.0; head.n_params()];
    head.backward(&anchor_trace, &g.anchor, &mut grad);
    for ((_, trace), gv) in pos.iter().zip(&g.positives).chain(neg.iter().zip(&g.negatives)) {
        head.backward(trace, gv, &mut grad);
    }
    Ok(Some((g.loss, grad)))
}

pub fn train_distill(
    train: &[LabeledTake],
    eval: &[LabeledTake],
    schedule: &CurriculumSchedule,
    config: &DistillConfig,
) -> Result<TrainOutcome> {
    train_distill_with(train, eval, schedule, config, Execution::default())
}

/// Training loop. `eval` supplies the metric takes; when empty the training
/// takes are used.
pub fn train_distill_with(
    train: &[LabeledTake],
    eval: &[LabeledTake],
    schedule: &CurriculumSchedule,
    config: &DistillConfig,
    exec: Execution,
) -> Result<TrainOutcome> {
    config.validate()?;
    if train.is_empty() {
        return Err(Error::Config("no training takes".into()));
    }
    if schedule.total_epochs() != config.epochs {
        return Err(Error::Config(format!(
            "schedule covers {} epochs, config asks for {}",
            schedule.total_epochs(),
            config.epochs
        )));
    }
    let dim = train[0].take.dim();
    if train.iter().chain(eval).any(|lt| lt.take.dim() != dim) {
        return Err(Error::Config("takes have differing feature dimensions".into()));
    }
    let dims = config.head_dims.clone().unwrap_or_else(|| vec![dim, dim]);
    if dims.first() != Some(&dim) {
        return Err(Error::Config(format!("head input {:?} does not match feature dim {dim}", dims.first())));
    }
    let mut head = ProjectionHead::new(&dims, rng::derive_seed(config.seed, &[rng::tag::INIT]))?;
    let eval_takes = if eval.is_empty() { train } else { eval };
    let eval_seed = rng::derive_seed(config.seed, &[rng::tag::EVAL]);
    let step = config.learning_rate * config.lambda_infonce;

    let mut metrics = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let phase = schedule.phase_at(epoch)?;
        let report = alignment_report(eval_takes, &head, config.gamma, eval_seed, exec)?;
        let triples = epoch_triples(train, epoch, phase, config.seed, exec)?;
        let mut order: Vec<usize> = (0..triples.len()).collect();
        order.shuffle(&mut rng::stream(config.seed, &[rng::tag::SHUFFLE, epoch as u64]));

        let (mut loss_sum, mut counted) = (0.0, 0usize);
        for batch in order.chunks(config.batch_size) {
            let results = exec.map(batch, |&i| triple_gradient(&head, &triples[i], config.gamma));
            let mut grad = vec![0.0; head.n_params()];
            let mut n = 0usize;
            for r in results {
                if let Some((loss, g)) = r? {
                    if !loss.is_finite() {
                        return Err(Error::NonFinite(format!("training loss at epoch {epoch}")));
                    }
                    loss_sum += loss;
                    n += 1;
                    for (acc, v) in grad.iter_mut().zip(&g) {
                        *acc += v;
                    }
                }
            }
            if n > 0 && step > 0.0 {
                if !config.train_bias {
                    head.mask_bias_grads(&mut grad);
                }
                head.apply_step(&grad, step / n as f64);
                if !head.is_finite() {
                    return Err(Error::NonFinite(format!("head parameters diverged at epoch {epoch}")));
                }
            }
            counted += n;
        }
        let row = EpochMetrics {
            epoch,
            phase,
            mean_infonce: report.overall.mean_infonce,
            avg_neg_cosine: report.overall.avg_neg_cosine,
            avg_pos_cosine: report.overall.avg_pos_cosine,
            train_loss: if counted > 0 { loss_sum / counted as f64 } else { 0.0 },
        };
        if !(row.mean_infonce.is_finite() && row.avg_neg_cosine.is_finite()) {
            return Err(Error::NonFinite(format!("evaluation metrics at epoch {epoch}")));
        }
        log::debug!("epoch {epoch} phase {phase}: eval infonce {:.4} train {:.4}", row.mean_infonce, row.train_loss);
        metrics.push(row);
    }
    let final_metrics = alignment_report(eval_takes, &head, config.gamma, eval_seed, exec)?.overall;
    Ok(TrainOutcome { head, metrics, final_metrics })
}
