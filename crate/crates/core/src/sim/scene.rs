//! Synthetic rigs: static exo cameras on a circle, a moving wearer with a
//! body capsule, and a per-second interaction point cloud.

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

use nalgebra::Vector3;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::oracle::{segment_distance, visible_fraction, CameraRig, Capsule};
use crate::calib_io::{ExoCamera, Frame, Pose, PoseTrack};
use crate::par::Execution;
use crate::rng::{self, StreamRng};
use crate::{Error, Result, ViewId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EgoPath {
    Static,
    Orbit,
    RandomWalk,
}

impl std::str::FromStr for EgoPath {
    type Err = Error;

    fn from_str(s: &str) -> Result<EgoPath> {
        match s.to_ascii_lowercase().as_str() {
            "static" => Ok(EgoPath::Static),
            "orbit" => Ok(EgoPath::Orbit),
            "randomwalk" | "random-walk" | "random_walk" => Ok(EgoPath::RandomWalk),
            other => Err(Error::Config(format!("unknown ego path `{other}`"))),
        }
    }
}

/// Body occluder relative to the wearer: a vertical capsule from
/// `top_above_eye` over the eye down to `bottom_height` above the floor,
/// shifted `back_offset` against the horizontal gaze.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodyModel {
    pub radius: f64,
    pub top_above_eye: f64,
    pub bottom_height: f64,
    pub back_offset: f64,
}

impl Default for BodyModel {
    fn default() -> Self {
        // wide enough to cover torso and forearms
        BodyModel { radius: 0.6, top_above_eye: 0.1, bottom_height: 0.0, back_offset: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    pub n_exo: usize,
    pub arena_radius: f64,
    pub exo_height: f64,
    pub exo_height_jitter: f64,
    /// Height of the arena-centre point every exo camera aims at.
    pub aim_height: f64,
    pub ego_height: f64,
    pub ego_pitch_deg: f64,
    /// The wearer stays within this distance of the arena centre.
    pub walk_radius: f64,
    pub body: BodyModel,
    pub hoi_points: usize,
    pub hoi_radius: f64,
    pub d_ego_hand: f64,
    pub ego_path: EgoPath,
    pub duration_s: u32,
    pub seed: u64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            n_exo: 4,
            arena_radius: 3.0,
            exo_height: 1.5,
            exo_height_jitter: 0.3,
            aim_height: 1.0,
            ego_height: 1.6,
            ego_pitch_deg: 40.0,
            walk_radius: 1.0,
            body: BodyModel::default(),
            hoi_points: 64,
            hoi_radius: 0.15,
            d_ego_hand: 0.6,
            ego_path: EgoPath::RandomWalk,
            duration_s: 60,
            seed: 0,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n_exo == 0 {
            return bad("at least one exo camera is required".into());
        }
        if self.hoi_points < 8 {
            return bad(format!("HOI cloud needs at least 8 points, got {}", self.hoi_points));
        }
        if self.duration_s == 0 {
            return bad("duration must be at least one second".into());
        }
        for (name, v) in [
            ("arena_radius", self.arena_radius),
            ("hoi_radius", self.hoi_radius),
            ("body.radius", self.body.radius),
            ("d_ego_hand", self.d_ego_hand),
            ("ego_height", self.ego_height),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        for (name, v) in [
            ("walk_radius", self.walk_radius),
            ("exo_height_jitter", self.exo_height_jitter),
            ("exo_height", self.exo_height),
            ("aim_height", self.aim_height),
            ("body.top_above_eye", self.body.top_above_eye),
            ("body.bottom_height", self.body.bottom_height),
            ("body.back_offset", self.body.back_offset),
            ("ego_pitch_deg", self.ego_pitch_deg),
        ] {
            if !v.is_finite() || (name != "body.back_offset" && name != "ego_pitch_deg" && v < 0.0) {
                return bad(format!("{name} must be finite and non-negative, got {v}"));
            }
        }
        if self.walk_radius >= self.arena_radius {
            return bad("walk_radius must be smaller than arena_radius".into());
        }
        if self.ego_pitch_deg.abs() >= 89.0 {
            return bad("ego pitch must stay within ±89°".into());
        }
        Ok(())
    }
}

/// A generated scene with ground-truth visibility. Interaction points are
/// drawn from the part of the ball that lies outside the body.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub config: SceneConfig,
    /// Exo views are numbered `1..=n_exo`.
    pub exo: Vec<(ViewId, CameraRig)>,
    /// Ego camera at each second.
    pub ego: Vec<CameraRig>,
    pub bodies: Vec<Capsule>,
    pub clouds: Vec<Vec<Vector3<f64>>>,
    /// `visibility[t][i]` for exo camera `exo[i]`.
    pub visibility: Vec<Vec<f64>>,
}

fn gaussian(rng: &mut StreamRng) -> f64 {
    StandardNormal.sample(rng)
}

/// Uniform sample in the ball of `radius` around `center`.
fn ball_point(rng: &mut StreamRng, center: &Vector3<f64>, radius: f64) -> Vector3<f64> {
    loop {
        let d = Vector3::new(gaussian(rng), gaussian(rng), gaussian(rng));
        let n = d.norm();
        if n > 1e-9 {
            let r = radius * rng.gen::<f64>().cbrt();
            return center + d * (r / n);
        }
    }
}

const MAX_TRIES_PER_POINT: usize = 10_000;

/// Uniform sample of `n` points from the part of the ball outside `body`.
fn hoi_cloud(
    rng: &mut StreamRng,
    center: &Vector3<f64>,
    radius: f64,
    body: &Capsule,
    n: usize,
) -> Result<Vec<Vector3<f64>>> {
    let mut out = Vec::with_capacity(n);
    let mut tries = 0;
    while out.len() < n {
        tries += 1;
        if tries > MAX_TRIES_PER_POINT * n {
            return Err(Error::DegenerateGeometry("interaction ball lies inside the body capsule".into()));
        }
        let p = ball_point(rng, center, radius);
        if segment_distance(&p, &p, &body.a, &body.b) >= body.radius {
            out.push(p);
        }
    }
    Ok(out)
}

/// Wearer position (xy) and heading per second.
fn ego_path(cfg: &SceneConfig, rng: &mut StreamRng) -> Vec<(f64, f64, f64)> {
    let n = cfg.duration_s as usize;
    let start_r = cfg.walk_radius * rng.gen::<f64>().sqrt();
    let start_a = rng.gen_range(0.0..TAU);
    let (mut x, mut y) = (start_r * start_a.cos(), start_r * start_a.sin());
    let mut yaw = rng.gen_range(0.0..TAU);
    let mut out = Vec::with_capacity(n);
    match cfg.ego_path {
        EgoPath::Static => out.resize(n, (x, y, yaw)),
        EgoPath::Orbit => {
            let r = 0.5 * cfg.walk_radius;
            let omega = if rng.gen::<bool>() { 0.2 } else { -0.2 };
            for t in 0..n {
                let a = start_a + omega * t as f64;
                // walk along the circle, facing the direction of travel
                out.push((r * a.cos(), r * a.sin(), a + omega.signum() * PI / 2.0));
            }
        }
        EgoPath::RandomWalk => {
            for _ in 0..n {
                out.push((x, y, yaw));
                x += 0.1 * gaussian(rng);
                y += 0.1 * gaussian(rng);
                let r = x.hypot(y);
                if r > cfg.walk_radius {
                    x *= cfg.walk_radius / r;
                    y *= cfg.walk_radius / r;
                }
                yaw += 0.3 * gaussian(rng);
            }
        }
    }
    out
}

pub fn generate_scene(cfg: &SceneConfig) -> Result<Scene> {
    generate_scene_with(cfg, Execution::default())
}

/// Deterministic in `cfg.seed`; `exec` only affects the visibility sweep.
pub fn generate_scene_with(cfg: &SceneConfig, exec: Execution) -> Result<Scene> {
    cfg.validate()?;
    let mut rig_rng = rng::stream(cfg.seed, &[rng::tag::SCENE, 0]);
    let spacing = TAU / cfg.n_exo as f64;
    let base = rig_rng.gen_range(0.0..TAU);
    let aim = Vector3::new(0.0, 0.0, cfg.aim_height);
    let exo = (0..cfg.n_exo)
        .map(|i| {
            let a = base + spacing * (i as f64 + rig_rng.gen_range(-0.3..0.3));
            let h = cfg.exo_height + cfg.exo_height_jitter * rig_rng.gen_range(-1.0..1.0);
            let c = Vector3::new(cfg.arena_radius * a.cos(), cfg.arena_radius * a.sin(), h);
            (ViewId(i as u32 + 1), CameraRig::looking(c, aim - c))
        })
        .collect::<Vec<_>>();

    let path = ego_path(cfg, &mut rng::stream(cfg.seed, &[rng::tag::SCENE, 1]));
    let pitch = cfg.ego_pitch_deg.to_radians();
    let mut ego = Vec::with_capacity(path.len());
    let mut bodies = Vec::with_capacity(path.len());
    let mut clouds: Vec<Vec<Vector3<f64>>> = Vec::with_capacity(path.len());
    for (t, &(x, y, yaw)) in path.iter().enumerate() {
        let eye = Vector3::new(x, y, cfg.ego_height);
        let heading = Vector3::new(yaw.cos(), yaw.sin(), 0.0);
        let gaze = heading * pitch.cos() - Vector3::z() * pitch.sin();
        let rig = CameraRig::looking(eye, gaze);
        let back = heading * cfg.body.back_offset;
        let body = Capsule {
            a: Vector3::new(x, y, cfg.ego_height + cfg.body.top_above_eye) - back,
            b: Vector3::new(x, y, cfg.body.bottom_height) - back,
            radius: cfg.body.radius,
        };
        let center = eye + rig.gaze() * cfg.d_ego_hand;
        let mut cloud_rng = rng::stream(cfg.seed, &[rng::tag::SCENE, 2, t as u64]);
        clouds.push(hoi_cloud(&mut cloud_rng, &center, cfg.hoi_radius, &body, cfg.hoi_points)?);
        bodies.push(body);
        ego.push(rig);
    }

    let n = exo.len();
    let flat = exec.map_range(path.len() * n, |k| {
        let (t, i) = (k / n, k % n);
        visible_fraction(&exo[i].1, &bodies[t], &clouds[t])
    });
    let visibility = flat.chunks(n).map(<[f64]>::to_vec).collect();
    Ok(Scene { config: cfg.clone(), exo, ego, bodies, clouds, visibility })
}

/// Extrinsics (camera-from-world) of a rig.
pub fn rig_pose(rig: &CameraRig) -> Result<Pose> {
    let r = rig.axes.transpose();
    Pose::new(r, -(r * rig.center), Frame::CameraFromWorld)
}

impl Scene {
    pub fn duration_s(&self) -> u32 {
        self.ego.len() as u32
    }

    pub fn exo_cameras(&self) -> Result<Vec<ExoCamera>> {
        self.exo.iter().map(|(id, rig)| Ok(ExoCamera { view_id: *id, pose: rig_pose(rig)? })).collect()
    }

    pub fn ego_track(&self) -> Result<PoseTrack> {
        let poses = self.ego.iter().map(rig_pose).collect::<Result<Vec<_>>>()?;
        PoseTrack::new((0..self.duration_s()).collect(), poses)
    }

    /// Per-second visible fraction of one exo view.
    pub fn visibility_of(&self, view: ViewId) -> Option<Vec<f64>> {
        let i = self.exo.iter().position(|(id, _)| *id == view)?;
        Some(self.visibility.iter().map(|row| row[i]).collect())
    }

    /// `t,view_id,visible_fraction` rows.
    pub fn visibility_csv(&self) -> String {
        let mut out = String::from("t,view_id,visible_fraction\n");
        for (t, row) in self.visibility.iter().enumerate() {
            for ((id, _), v) in self.exo.iter().zip(row) {
                let _ = writeln!(out, "{t},{id},{v:?}");
            }
        }
        out
    }
}

/// Visible fraction keyed by `(t, view)`.
pub type VisibilityTable = std::collections::BTreeMap<(u32, ViewId), f64>;

/// Reads the `t,view_id,visible_fraction` table written by
/// [`Scene::visibility_csv`].
pub fn parse_visibility_csv(text: &str) -> Result<VisibilityTable> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == "t,view_id,visible_fraction" => {}
        _ => return Err(Error::Format("visibility CSV must start with `t,view_id,visible_fraction`".into())),
    }
    let mut out = VisibilityTable::new();
    for (i, line) in lines {
        let n = i + 1;
        let bad = |what: &str| Error::Parse { line: n, message: format!("bad {what} in `{}`", line.trim()) };
        let mut f = line.trim().split(',');
        let (Some(t), Some(v), Some(x), None) = (f.next(), f.next(), f.next(), f.next()) else {
            return Err(bad("field count"));
        };
        let t: u32 = t.parse().map_err(|_| bad("timestamp"))?;
        let v = ViewId(v.parse().map_err(|_| bad("view id"))?);
        let x: f64 = x.parse().map_err(|_| bad("fraction"))?;
        if !(0.0..=1.0).contains(&x) {
            return Err(bad("fraction"));
        }
        if out.insert((t, v), x).is_some() {
            return Err(Error::Validation { line: Some(n), message: format!("duplicate entry for t={t}, view {v}") });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn visibility_csv_round_trips() {
        let cfg = SceneConfig { duration_s: 5, ..SceneConfig::default() };
        let s = generate_scene(&cfg).unwrap();
        let table = parse_visibility_csv(&s.visibility_csv()).unwrap();
        assert_eq!(table.len(), 5 * 4);
        for (id, _) in &s.exo {
            let col = s.visibility_of(*id).unwrap();
            for (t, v) in col.iter().enumerate() {
                assert_eq!(table[&(t as u32, *id)], *v);
            }
        }
        assert!(parse_visibility_csv("t,view\n").is_err());
        assert!(parse_visibility_csv("t,view_id,visible_fraction\n0,1,1.5\n").is_err());
    }

    #[test]
    fn static_scene_has_constant_ego() {
        let cfg = SceneConfig { ego_path: EgoPath::Static, duration_s: 10, ..SceneConfig::default() };
        let s = generate_scene(&cfg).unwrap();
        assert_eq!(s.exo.len(), 4);
        assert!(s.ego.windows(2).all(|w| w[0] == w[1]));
        assert_eq!(s.visibility.len(), 10);
        assert_eq!(s.ego_track().unwrap().len(), 10);
    }

    #[test]
    fn deterministic_and_strategy_independent() {
        let cfg = SceneConfig { duration_s: 8, seed: 3, ..SceneConfig::default() };
        let a = generate_scene_with(&cfg, Execution::Parallel).unwrap();
        let b = generate_scene_with(&cfg, Execution::Sequential).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, generate_scene(&SceneConfig { seed: 4, ..cfg }).unwrap());
    }

    #[test]
    fn orbit_stays_inside_walk_radius() {
        let cfg = SceneConfig { ego_path: EgoPath::Orbit, duration_s: 30, ..SceneConfig::default() };
        let s = generate_scene(&cfg).unwrap();
        assert!(s.ego.iter().all(|r| r.center.xy().norm() <= cfg.walk_radius + 1e-9));
    }

    #[test]
    fn invalid_configs() {
        for cfg in [
            SceneConfig { n_exo: 0, ..SceneConfig::default() },
            SceneConfig { hoi_points: 4, ..SceneConfig::default() },
            SceneConfig { hoi_radius: 0.0, ..SceneConfig::default() },
            SceneConfig { walk_radius: 5.0, ..SceneConfig::default() },
        ] {
            assert!(matches!(generate_scene(&cfg), Err(Error::Config(_))));
        }
    }

    #[test]
    fn csv_shape() {
        let s = generate_scene(&SceneConfig { duration_s: 3, ..SceneConfig::default() }).unwrap();
        let csv = s.visibility_csv();
        assert_eq!(csv.lines().count(), 1 + 3 * 4);
        assert!(csv.lines().nth(1).unwrap().starts_with("0,1,"));
    }
}
