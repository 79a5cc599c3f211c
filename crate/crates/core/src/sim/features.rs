//! Synthetic feature streams carrying a latent action signal.
//!
//! The first half of the coordinates is the semantic subspace holding the
//! latent action vector; the second half holds a per-view nuisance offset.
//! A view at time `t` emits `vis·a_t + σ·(ε + n_v)` with isotropic noise `ε`
//! of unit expected norm and the view's nuisance direction `n_v`.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::scene::Scene;
use crate::calib_io::{FeatureStream, Keystep, KeystepSet};
use crate::rng::{self, StreamRng};
use crate::stats::norm;
use crate::{Error, Result, ViewId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub dim: usize,
    pub sigma: f64,
    /// Norm of each view's nuisance offset, before scaling by `sigma`.
    pub nuisance: f64,
    pub keystep_min_s: u32,
    pub keystep_max_s: u32,
    /// Random-walk step of the latent within a keystep.
    pub drift: f64,
    pub seed: u64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig { dim: 16, sigma: 0.05, nuisance: 20.0, keystep_min_s: 4, keystep_max_s: 10, drift: 0.1, seed: 0 }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::Config(format!("feature dim must be at least 2, got {}", self.dim)));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite() && self.nuisance >= 0.0 && self.nuisance.is_finite()) {
            return Err(Error::Config("sigma and nuisance must be finite and non-negative".into()));
        }
        if !(self.drift >= 0.0 && self.drift.is_finite()) {
            return Err(Error::Config("drift must be finite and non-negative".into()));
        }
        if self.keystep_min_s == 0 || self.keystep_min_s > self.keystep_max_s {
            return Err(Error::Config("keystep lengths need 1 <= min <= max".into()));
        }
        Ok(())
    }

    fn semantic_dim(&self) -> usize {
        self.dim / 2
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthFeatures {
    /// Ego stream first, then exo views in scene order.
    pub streams: Vec<FeatureStream>,
    pub keysteps: KeystepSet,
    /// Unit latent action vector per second.
    pub latent: Vec<Vec<f64>>,
}

fn gaussian(rng: &mut StreamRng) -> f64 {
    StandardNormal.sample(rng)
}

/// Random unit vector supported on `coords`.
fn unit_in(rng: &mut StreamRng, dim: usize, coords: std::ops::Range<usize>) -> Vec<f64> {
    loop {
        let mut v = vec![0.0; dim];
        for c in coords.clone() {
            v[c] = gaussian(rng);
        }
        let n = norm(&v);
        if n > 1e-9 {
            v.iter_mut().for_each(|x| *x /= n);
            return v;
        }
    }
}

/// Splits `[0, T)` into consecutive intervals with lengths drawn from
/// `[min, max]`; a short tail is merged into the previous interval.
fn keystep_bounds(rng: &mut StreamRng, total: u32, min: u32, max: u32) -> Vec<(u32, u32)> {
    let mut out: Vec<(u32, u32)> = Vec::new();
    let mut s = 0;
    while s < total {
        let e = (s + rng.gen_range(min..=max)).min(total);
        if e - s < min && !out.is_empty() {
            out.last_mut().expect("non-empty").1 = e;
        } else {
            out.push((s, e));
        }
        s = e;
    }
    out
}

/// `vis[t]·latent[t] + sigma·(ε_t + nuisance)`.
pub fn emit_view(latent: &[Vec<f64>], vis: &[f64], sigma: f64, nuisance: &[f64], rng: &mut StreamRng) -> Vec<Vec<f64>> {
    let scale = 1.0 / (nuisance.len() as f64).sqrt();
    latent
        .iter()
        .zip(vis)
        .map(|(a, &w)| {
            a.iter()
                .zip(nuisance)
                .map(|(&ai, &ni)| {
                    let eps = gaussian(rng) * scale;
                    w * ai + sigma * (eps + ni)
                })
                .collect()
        })
        .collect()
}

/// Generates keysteps, the latent trajectory and one stream per view of
/// `scene`, using the scene's ground-truth visibility for exo views and full
/// visibility for the ego view.
pub fn synth_features(scene: &Scene, cfg: &FeatureConfig) -> Result<SynthFeatures> {
    cfg.validate()?;
    let total = scene.duration_s();
    let (d, ds) = (cfg.dim, cfg.semantic_dim());
    let mut krng = rng::stream(cfg.seed, &[rng::tag::FEATURES, 0]);
    let bounds = keystep_bounds(&mut krng, total, cfg.keystep_min_s, cfg.keystep_max_s);
    let mut entries = Vec::with_capacity(bounds.len());
    let mut latent = Vec::with_capacity(total as usize);
    for (k, &(s, e)) in bounds.iter().enumerate() {
        let emb = unit_in(&mut krng, d, 0..ds);
        let mut drift = vec![0.0; d];
        for _ in s..e {
            let mut a: Vec<f64> = emb.iter().zip(&drift).map(|(x, y)| x + y).collect();
            let n = norm(&a);
            a.iter_mut().for_each(|x| *x /= n);
            latent.push(a);
            for x in drift.iter_mut().take(ds) {
                *x += cfg.drift * gaussian(&mut krng) / (ds as f64).sqrt();
            }
        }
        entries.push(Keystep { id: format!("k{k}"), embedding: emb, start_s: f64::from(s), end_s: f64::from(e) });
    }
    let keysteps = KeystepSet::new(entries)?;

    let mut views = vec![(ViewId::EGO, vec![1.0; total as usize])];
    views.extend(
        scene.exo.iter().enumerate().map(|(i, (id, _))| (*id, scene.visibility.iter().map(|r| r[i]).collect())),
    );
    let streams = views
        .into_iter()
        .map(|(id, vis)| {
            let mut vrng = rng::stream(cfg.seed, &[rng::tag::FEATURES, 1, u64::from(id.0)]);
            let nuisance: Vec<f64> = unit_in(&mut vrng, d, ds..d).iter().map(|x| x * cfg.nuisance).collect();
            FeatureStream::from_rows(id, &emit_view(&latent, &vis, cfg.sigma, &nuisance, &mut vrng))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SynthFeatures { streams, keysteps, latent })
}
