//! Activity-centric view ranking.
//!
//! At each second the exo cameras are split into those facing the ego
//! wearer and those behind them (by the sign of the XY-plane cosine between
//! gaze vectors), and each block is sorted by how directly the camera looks
//! at the estimated hand-object interaction (HOI) centre. The ego camera is
//! always ranked first.

use nalgebra::{Vector2, Vector3};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::calib_io::{ExoCamera, Frame, Pose, PoseTrack, RankOrder};
use crate::par::Execution;
use crate::rng;
use crate::{Error, Result, ViewId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum GazeAxis {
    #[default]
    PlusZ,
    MinusZ,
}

impl std::str::FromStr for GazeAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<GazeAxis> {
        match s.to_ascii_lowercase().as_str() {
            "+z" | "z" | "plus-z" | "plusz" => Ok(GazeAxis::PlusZ),
            "-z" | "minus-z" | "minusz" => Ok(GazeAxis::MinusZ),
            other => Err(Error::Config(format!("unknown gaze axis `{other}` (expected +z or -z)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoiConfig {
    /// Distance from the ego camera to the HOI centre along the gaze, meters.
    pub d_ego_hand: f64,
    pub gaze_axis: GazeAxis,
    /// Views with `cos_xy <= front_tie_epsilon` count as facing the wearer.
    pub front_tie_epsilon: f64,
}

impl Default for HoiConfig {
    fn default() -> Self {
        HoiConfig { d_ego_hand: 0.6, gaze_axis: GazeAxis::PlusZ, front_tie_epsilon: 0.0 }
    }
}

impl HoiConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.d_ego_hand > 0.0 && self.d_ego_hand.is_finite()) {
            return Err(Error::Config(format!("d_ego_hand must be positive, got {}", self.d_ego_hand)));
        }
        if !self.front_tie_epsilon.is_finite() {
            return Err(Error::Config("front_tie_epsilon must be finite".into()));
        }
        Ok(())
    }
}

/// Ranking of all views at one second.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewRanking {
    pub timestamp: u32,
    /// Ego first, then front views, then back views.
    pub order: Vec<ViewId>,
    /// HOI score of each exo view, aligned with `order[1..]`.
    pub scores: Vec<f64>,
    /// Front membership of each exo view, aligned with `order[1..]`.
    pub front_mask: Vec<bool>,
}

impl ViewRanking {
    pub fn rank_order(&self) -> RankOrder {
        RankOrder { timestamp: self.timestamp, order: self.order.clone() }
    }

    pub fn rank_of(&self, view: ViewId) -> Option<usize> {
        self.order.iter().position(|&v| v == view)
    }
}

pub type RankingTimeline = Vec<ViewRanking>;

/// `[Rᵀ | -Rᵀ t]`: extrinsics to camera pose in the world.
pub fn to_world(pose: &Pose) -> Result<Pose> {
    if pose.frame() != Frame::CameraFromWorld {
        return Err(Error::Contract("to_world expects a CameraFromWorld pose".into()));
    }
    Ok(pose.inverse())
}

/// Viewing direction: the last column of the world-frame rotation.
pub fn gaze_vector(pose_world: &Pose, axis: GazeAxis) -> Vector3<f64> {
    let g = pose_world.rotation().column(2).into_owned().normalize();
    match axis {
        GazeAxis::PlusZ => g,
        GazeAxis::MinusZ => -g,
    }
}

pub fn camera_center(pose_world: &Pose) -> Vector3<f64> {
    *pose_world.translation()
}

/// `t' + d · g'` for the ego camera.
pub fn hoi_center(ego_world: &Pose, cfg: &HoiConfig) -> Vector3<f64> {
    camera_center(ego_world) + cfg.d_ego_hand * gaze_vector(ego_world, cfg.gaze_axis)
}

/// Cosine between an exo gaze and the direction from that camera to `p_center`.
pub fn hoi_alignment_from_gaze(center: &Vector3<f64>, gaze: &Vector3<f64>, p_center: &Vector3<f64>) -> Result<f64> {
    let to_hoi = p_center - center;
    let (n1, n2) = (gaze.norm(), to_hoi.norm());
    if n2 < 1e-12 {
        return Err(Error::DegenerateGeometry("HOI centre coincides with the camera position".into()));
    }
    if n1 < 1e-12 {
        return Err(Error::DegenerateGeometry("zero-length gaze vector".into()));
    }
    Ok((gaze.dot(&to_hoi) / (n1 * n2)).clamp(-1.0, 1.0))
}

pub fn hoi_alignment(exo_world: &Pose, p_center: &Vector3<f64>, axis: GazeAxis) -> Result<f64> {
    hoi_alignment_from_gaze(&camera_center(exo_world), &gaze_vector(exo_world, axis), p_center)
}

/// Cosine of the XY projections. A (near) vertical gaze on either side has
/// no horizontal direction; the cosine is then defined as 0.
pub fn cos_xy(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    let (pa, pb) = (Vector2::new(a.x, a.y), Vector2::new(b.x, b.y));
    let (na, nb) = (pa.norm(), pb.norm());
    if na < 1e-9 || nb < 1e-9 {
        return 0.0;
    }
    (pa.dot(&pb) / (na * nb)).clamp(-1.0, 1.0)
}

/// Returns `(front, back)` as indices into `exo_gazes`, each in input order.
pub fn partition_front_back(
    ego_gaze: &Vector3<f64>,
    exo_gazes: &[Vector3<f64>],
    epsilon: f64,
) -> (Vec<usize>, Vec<usize>) {
    (0..exo_gazes.len()).partition(|&i| cos_xy(ego_gaze, &exo_gazes[i]) <= epsilon)
}

/// Exo camera geometry in the world frame, precomputed once per take.
#[derive(Debug, Clone, Copy)]
pub struct ExoGeometry {
    pub view_id: ViewId,
    pub center: Vector3<f64>,
    pub gaze: Vector3<f64>,
}

pub fn exo_geometry(cameras: &[ExoCamera], axis: GazeAxis) -> Result<Vec<ExoGeometry>> {
    cameras
        .iter()
        .map(|c| {
            let w = to_world(&c.pose)?;
            Ok(ExoGeometry { view_id: c.view_id, center: camera_center(&w), gaze: gaze_vector(&w, axis) })
        })
        .collect()
}

/// Ranks every view at one second given the ego extrinsics at that second.
pub fn rank_views(timestamp: u32, ego_pose: &Pose, exo: &[ExoGeometry], cfg: &HoiConfig) -> Result<ViewRanking> {
    if exo.is_empty() {
        return Err(Error::Config("ranking needs at least one exo camera".into()));
    }
    let ego_world = to_world(ego_pose)?;
    let ego_gaze = gaze_vector(&ego_world, cfg.gaze_axis);
    let p_center = hoi_center(&ego_world, cfg);
    let scores =
        exo.iter().map(|e| hoi_alignment_from_gaze(&e.center, &e.gaze, &p_center)).collect::<Result<Vec<f64>>>()?;
    let gazes: Vec<Vector3<f64>> = exo.iter().map(|e| e.gaze).collect();
    let (mut front, mut back) = partition_front_back(&ego_gaze, &gazes, cfg.front_tie_epsilon);
    let by_score = |a: &usize, b: &usize| scores[*b].total_cmp(&scores[*a]).then(exo[*a].view_id.cmp(&exo[*b].view_id));
    front.sort_by(by_score);
    back.sort_by(by_score);
    let n_front = front.len();
    let ranked: Vec<usize> = front.into_iter().chain(back).collect();
    let mut order = Vec::with_capacity(exo.len() + 1);
    order.push(ViewId::EGO);
    order.extend(ranked.iter().map(|&i| exo[i].view_id));
    Ok(ViewRanking {
        timestamp,
        order,
        scores: ranked.iter().map(|&i| scores[i]).collect(),
        front_mask: (0..ranked.len()).map(|k| k < n_front).collect(),
    })
}

/// One ranking per second `0..duration`.
pub fn rank_take(track: &PoseTrack, cameras: &[ExoCamera], duration: u32, cfg: &HoiConfig) -> Result<RankingTimeline> {
    rank_take_with(track, cameras, duration, cfg, Execution::default())
}

pub fn rank_take_sequential(
    track: &PoseTrack,
    cameras: &[ExoCamera],
    duration: u32,
    cfg: &HoiConfig,
) -> Result<RankingTimeline> {
    rank_take_with(track, cameras, duration, cfg, Execution::Sequential)
}

pub fn rank_take_with(
    track: &PoseTrack,
    cameras: &[ExoCamera],
    duration: u32,
    cfg: &HoiConfig,
    exec: Execution,
) -> Result<RankingTimeline> {
    cfg.validate()?;
    let missing: Vec<u32> = (0..duration).filter(|&t| track.at(t).is_none()).collect();
    if !missing.is_empty() {
        return Err(Error::MissingPoses { missing });
    }
    let exo = exo_geometry(cameras, cfg.gaze_axis)?;
    exec.map_range(duration as usize, |t| {
        let t = t as u32;
        rank_views(t, track.at(t).expect("checked above"), &exo, cfg)
    })
    .into_iter()
    .collect()
}

/// Duration implied by a trajectory: last timestamp + 1.
pub fn track_duration(track: &PoseTrack) -> u32 {
    track.timestamps().last().map_or(0, |&t| t + 1)
}

/// Ablation orders applied to an existing ranking (ego stays first).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum RankingMode {
    #[default]
    Geometric,
    Reversed,
    /// Exo order shuffled uniformly and independently at every second.
    Random {
        seed: u64,
    },
}

pub fn apply_mode(orders: &[RankOrder], mode: RankingMode) -> Vec<RankOrder> {
    orders
        .iter()
        .map(|r| {
            let mut order = r.order.clone();
            match mode {
                RankingMode::Geometric => {}
                RankingMode::Reversed => order[1..].reverse(),
                RankingMode::Random { seed } => {
                    let mut g = rng::stream(seed, &[rng::tag::ABLATION, u64::from(r.timestamp)]);
                    order[1..].shuffle(&mut g);
                }
            }
            RankOrder { timestamp: r.timestamp, order }
        })
        .collect()
}

pub fn timeline_orders(timeline: &[ViewRanking]) -> Vec<RankOrder> {
    timeline.iter().map(ViewRanking::rank_order).collect()
}

/// For each exo view, how many seconds it held each exo rank (1-based rank
/// index `k` is stored at position `k - 1`).
pub fn rank_frequencies(orders: &[RankOrder]) -> Vec<(ViewId, Vec<usize>)> {
    let Some(first) = orders.first() else { return Vec::new() };
    let mut views: Vec<ViewId> = first.order[1..].to_vec();
    views.sort();
    let n = views.len();
    views
        .into_iter()
        .map(|v| {
            let mut counts = vec![0; n];
            for r in orders {
                if let Some(k) = r.rank_of(v).filter(|&k| k >= 1 && k <= n) {
                    counts[k - 1] += 1;
                }
            }
            (v, counts)
        })
        .collect()
}
