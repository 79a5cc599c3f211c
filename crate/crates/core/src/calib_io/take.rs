use std::collections::{BTreeMap, HashSet};

use super::features::FeatureStream;
use super::keysteps::KeystepSet;
use super::pose::PoseTrack;
use super::text::ExoCamera;
use crate::{Error, Result, ViewId};

/// One synchronised capture: a moving ego camera, static exo cameras and one
/// feature stream per view.
#[derive(Debug, Clone, PartialEq)]
pub struct Take {
    pub take_id: String,
    pub ego_track: PoseTrack,
    pub exo: Vec<ExoCamera>,
    pub streams: BTreeMap<ViewId, FeatureStream>,
    pub keysteps: KeystepSet,
    pub duration_s: u32,
}

impl Take {
    pub fn new(
        take_id: impl Into<String>,
        ego_track: PoseTrack,
        exo: Vec<ExoCamera>,
        streams: Vec<FeatureStream>,
        keysteps: KeystepSet,
    ) -> Result<Take> {
        if exo.is_empty() {
            return Err(Error::invalid(None, "a take needs at least one exo camera"));
        }
        let mut ids = HashSet::from([ViewId::EGO]);
        for cam in &exo {
            if !ids.insert(cam.view_id) {
                return Err(Error::invalid(None, format!("duplicate view id {}", cam.view_id)));
            }
        }
        let mut by_view = BTreeMap::new();
        for s in streams {
            if !ids.contains(&s.view_id()) {
                return Err(Error::invalid(None, format!("stream for unknown view {}", s.view_id())));
            }
            if by_view.insert(s.view_id(), s).is_some() {
                return Err(Error::invalid(None, "two streams for the same view"));
            }
        }
        let ego = by_view.get(&ViewId::EGO).ok_or_else(|| Error::invalid(None, "ego feature stream missing"))?;
        let (rows, dim) = (ego.rows(), ego.dim());
        if let Some(s) = by_view.values().find(|s| s.rows() != rows || s.dim() != dim) {
            return Err(Error::invalid(
                None,
                format!("stream {} is {}x{}, ego stream is {rows}x{dim}", s.view_id(), s.rows(), s.dim()),
            ));
        }
        Ok(Take { take_id: take_id.into(), ego_track, exo, streams: by_view, keysteps, duration_s: rows as u32 })
    }

    pub fn dim(&self) -> usize {
        self.streams[&ViewId::EGO].dim()
    }

    /// Ego plus exo view count.
    pub fn n_views(&self) -> usize {
        self.exo.len() + 1
    }

    pub fn stream(&self, view: ViewId) -> Option<&FeatureStream> {
        self.streams.get(&view)
    }
}
