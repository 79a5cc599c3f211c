//! Synthetic multi-view takes with a ray-cast visibility oracle.

mod features;
mod oracle;
mod scene;

use std::collections::BTreeMap;

pub use features::{emit_view, synth_features, FeatureConfig, SynthFeatures};
pub use oracle::{point_visible, segment_distance, visible_fraction, CameraRig, Capsule};
pub use scene::{
    generate_scene, generate_scene_with, parse_visibility_csv, rig_pose, BodyModel, EgoPath, Scene, SceneConfig,
    VisibilityTable,
};

use crate::calib_io::{RankOrder, Take};
use crate::distill::{LabeledTake, ProjectionHead};
use crate::par::Execution;
use crate::ranking::{apply_mode, rank_take_with, timeline_orders, HoiConfig, RankingMode, ViewRanking};
use crate::stats::{cosine, mean, spearman};
use crate::{Error, Result, ViewId};

/// A take built from a scene, with the ground truth it was generated from.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticTake {
    pub take: Take,
    pub scene: Scene,
    pub latent: Vec<Vec<f64>>,
}

impl SyntheticTake {
    pub fn visibility(&self) -> BTreeMap<ViewId, Vec<f64>> {
        self.scene.exo.iter().map(|(id, _)| (*id, self.scene.visibility_of(*id).expect("own view"))).collect()
    }
}

pub fn generate_take(
    take_id: &str,
    scene_cfg: &SceneConfig,
    feature_cfg: &FeatureConfig,
    exec: Execution,
) -> Result<SyntheticTake> {
    let scene = generate_scene_with(scene_cfg, exec)?;
    let f = synth_features(&scene, feature_cfg)?;
    let take = Take::new(take_id, scene.ego_track()?, scene.exo_cameras()?, f.streams, f.keysteps)?;
    Ok(SyntheticTake { take, scene, latent: f.latent })
}

/// A train/eval split of synthetic takes for distillation runs.
///
/// Take `i` of the training split uses scene seed `100·seed + i`, the
/// evaluation split `100·seed + 50 + i`, so the two never overlap. Rigs
/// cycle through 4, 5 and 6 exo cameras by scene seed.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusConfig {
    pub seed: u64,
    pub n_train: usize,
    pub n_eval: usize,
    /// Template; `seed` and `n_exo` are overridden per take.
    pub scene: SceneConfig,
    /// Template; `seed` is overridden per take.
    pub features: FeatureConfig,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            seed: 0,
            n_train: 8,
            n_eval: 2,
            scene: SceneConfig::default(),
            features: FeatureConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub train: Vec<SyntheticTake>,
    pub eval: Vec<SyntheticTake>,
}

fn corpus_take(cfg: &CorpusConfig, scene_seed: u64, exec: Execution) -> Result<SyntheticTake> {
    let scene = SceneConfig { seed: scene_seed, n_exo: 4 + (scene_seed % 3) as usize, ..cfg.scene.clone() };
    let features = FeatureConfig { seed: scene_seed, ..cfg.features.clone() };
    generate_take(&format!("sim{scene_seed:05}"), &scene, &features, exec)
}

pub fn synthetic_corpus(cfg: &CorpusConfig, exec: Execution) -> Result<Corpus> {
    if cfg.n_train == 0 || cfg.n_train > 50 || cfg.n_eval > 50 {
        return Err(Error::Config(format!(
            "corpus needs 1..=50 training and at most 50 evaluation takes, got {} and {}",
            cfg.n_train, cfg.n_eval
        )));
    }
    let base = cfg.seed.checked_mul(100).ok_or_else(|| Error::Config("corpus seed too large".into()))?;
    let build = |offset: u64, n: usize| {
        (0..n as u64).map(|i| corpus_take(cfg, base + offset + i, exec)).collect::<Result<Vec<_>>>()
    };
    Ok(Corpus { train: build(0, cfg.n_train)?, eval: build(50, cfg.n_eval)? })
}

/// Ranks each take geometrically, then applies `mode`.
pub fn label_takes(
    takes: &[SyntheticTake],
    mode: RankingMode,
    hoi: &HoiConfig,
    exec: Execution,
) -> Result<Vec<LabeledTake>> {
    takes
        .iter()
        .map(|st| {
            let t = &st.take;
            let timeline = rank_take_with(&t.ego_track, &t.exo, t.duration_s, hoi, exec)?;
            LabeledTake::new(t.clone(), apply_mode(&timeline_orders(&timeline), mode))
        })
        .collect()
}

/// Spearman correlation, at each second, between rank position (best
/// first) and visible fraction over the exo views, averaged over seconds
/// where both vary. `None` if no second qualifies or a view is missing
/// from `visibility`.
pub fn order_visibility_spearman(orders: &[RankOrder], visibility: impl Fn(u32, ViewId) -> Option<f64>) -> Option<f64> {
    let rhos = orders
        .iter()
        .map(|r| {
            let exo = &r.order[1..];
            let goodness: Vec<f64> = (0..exo.len()).map(|k| -(k as f64)).collect();
            let vis = exo.iter().map(|&v| visibility(r.timestamp, v)).collect::<Option<Vec<f64>>>()?;
            Some(spearman(&goodness, &vis))
        })
        .collect::<Option<Vec<Option<f64>>>>()?;
    mean(&rhos.into_iter().flatten().collect::<Vec<_>>())
}

pub fn ranking_visibility_spearman(timeline: &[ViewRanking], scene: &Scene) -> Option<f64> {
    let orders: Vec<RankOrder> = timeline.iter().map(ViewRanking::rank_order).collect();
    order_visibility_spearman(&orders, |t, v| {
        let i = scene.exo.iter().position(|(id, _)| *id == v)?;
        scene.visibility.get(t as usize).map(|row| row[i])
    })
}

/// Mean cosine between each projected exo feature and the projected latent
/// action vector of the same second.
pub fn latent_alignment(takes: &[SyntheticTake], head: &ProjectionHead, exec: Execution) -> Option<f64> {
    let per_take = exec.map(takes, |st| {
        let lat: Vec<Vec<f64>> = st.latent.iter().map(|a| head.forward(a)).collect();
        let mut out = Vec::new();
        for (id, s) in &st.take.streams {
            if id.is_ego() {
                continue;
            }
            for (t, a) in lat.iter().enumerate() {
                if let Some(c) = cosine(&head.forward(&s.row_f64(t)), a) {
                    out.push(c);
                }
            }
        }
        out
    });
    mean(&per_take.concat())
}
