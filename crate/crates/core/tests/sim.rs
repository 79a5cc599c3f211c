//! Scene generator and ray-cast oracle checks on randomly seeded rigs.

use nalgebra::{Matrix3, Vector3};

use viewdistill::par::Execution;
use viewdistill::ranking::{exo_geometry, rank_take_with, rank_views, HoiConfig};
use viewdistill::rng;
use viewdistill::sim::*;

fn scene(seed: u64) -> Scene {
    generate_scene(&SceneConfig { seed, duration_s: 5, n_exo: 4 + (seed % 3) as usize, ..SceneConfig::default() })
        .unwrap()
}

fn hoi_center(s: &Scene, t: usize) -> Vector3<f64> {
    s.ego[t].center + s.ego[t].gaze() * s.config.d_ego_hand
}

fn horizontal(v: &Vector3<f64>) -> Vector3<f64> {
    Vector3::new(v.x, v.y, 0.0).normalize()
}

#[test]
fn static_four_camera_take() {
    let cfg = SceneConfig { ego_path: EgoPath::Static, n_exo: 4, duration_s: 10, seed: 3, ..SceneConfig::default() };
    let st = generate_take("static", &cfg, &FeatureConfig::default(), Execution::Sequential).unwrap();
    assert_eq!(st.take.streams.len(), 5);
    assert_eq!(st.take.duration_s, 10);
    let poses = st.take.ego_track.poses();
    assert_eq!(poses.len(), 10);
    assert!(poses.iter().all(|p| p == &poses[0]));
}

#[test]
fn same_seed_same_take() {
    let cfg = SceneConfig { duration_s: 15, seed: 77, ..SceneConfig::default() };
    let f = FeatureConfig { seed: 77, ..FeatureConfig::default() };
    let a = generate_take("a", &cfg, &f, Execution::Sequential).unwrap();
    let b = generate_take("a", &cfg, &f, Execution::Parallel).unwrap();
    assert_eq!(a, b);
    let c = generate_take("a", &SceneConfig { seed: 78, ..cfg }, &f, Execution::Sequential).unwrap();
    assert_ne!(a.scene, c.scene);
}

#[test]
fn exo_cameras_look_into_the_arena() {
    for seed in 0..100 {
        let s = scene(seed);
        for (_, rig) in &s.exo {
            let to_center = Vector3::new(0.0, 0.0, s.config.aim_height) - rig.center;
            assert!(rig.gaze().dot(&to_center.normalize()) > 0.0);
            assert!(horizontal(&rig.gaze()).dot(&horizontal(&to_center)) > 0.0);
            assert!((rig.center.xy().norm() - s.config.arena_radius).abs() < 1e-9);
        }
    }
}

#[test]
fn oracle_is_deterministic() {
    let s = scene(9);
    for t in 0..s.duration_s() as usize {
        for (i, (_, rig)) in s.exo.iter().enumerate() {
            let a = visible_fraction(rig, &s.bodies[t], &s.clouds[t]);
            assert_eq!(a, visible_fraction(rig, &s.bodies[t], &s.clouds[t]));
            assert_eq!(a, s.visibility[t][i]);
        }
    }
}

#[test]
fn camera_facing_away_sees_nothing() {
    for seed in 0..100 {
        let s = scene(seed);
        for t in 0..s.duration_s() as usize {
            let c = hoi_center(&s, t);
            for (_, rig) in &s.exo {
                let away = CameraRig::looking(rig.center, rig.center - c);
                assert_eq!(visible_fraction(&away, &s.bodies[t], &s.clouds[t]), 0.0);
            }
        }
    }
}

#[test]
fn mirrored_scene_has_identical_visibility() {
    for seed in 0..30 {
        let s = scene(seed);
        // reflection across a vertical plane through the origin at a seed-dependent angle
        let a = seed as f64 * 0.37;
        let n = Vector3::new(a.cos(), a.sin(), 0.0);
        let m: Matrix3<f64> = Matrix3::identity() - 2.0 * n * n.transpose();
        for t in 0..s.duration_s() as usize {
            let body = &s.bodies[t];
            let body_m = Capsule { a: m * body.a, b: m * body.b, radius: body.radius };
            let cloud_m: Vec<Vector3<f64>> = s.clouds[t].iter().map(|p| m * p).collect();
            for (i, (_, rig)) in s.exo.iter().enumerate() {
                let rig_m = CameraRig::looking(m * rig.center, m * rig.gaze());
                let v = visible_fraction(&rig_m, &body_m, &cloud_m);
                assert!(
                    (v - s.visibility[t][i]).abs() <= 1e-9,
                    "seed {seed} t {t} view {i}: {v} vs {}",
                    s.visibility[t][i]
                );
            }
        }
    }
}

#[test]
fn camera_behind_the_wearer_sees_less_than_its_mirror_in_front() {
    for seed in 0..100 {
        let s = scene(seed);
        let t = 0;
        let c = hoi_center(&s, t);
        let eye = s.ego[t].center;
        let h = horizontal(&s.ego[t].gaze());
        let at = |dir: f64| Vector3::new(eye.x, eye.y, 1.5) + h * (dir * 2.5);
        let front = CameraRig::looking(at(1.0), c - at(1.0));
        let behind = CameraRig::looking(at(-1.0), c - at(-1.0));
        let vf = visible_fraction(&front, &s.bodies[t], &s.clouds[t]);
        let vb = visible_fraction(&behind, &s.bodies[t], &s.clouds[t]);
        assert!(vb < vf, "seed {seed}: behind {vb} front {vf}");
    }
}

#[test]
fn unobstructed_collinear_camera_sees_everything() {
    let mut g = rng::stream(1, &[0]);
    let c = Vector3::new(0.0, 0.0, 1.0);
    let cloud: Vec<Vector3<f64>> = (0..64)
        .map(|_| {
            use rand::Rng;
            c + Vector3::new(g.gen_range(-0.08..0.08), g.gen_range(-0.08..0.08), g.gen_range(-0.08..0.08))
        })
        .collect();
    let cam = CameraRig::looking(Vector3::new(3.0, 0.0, 1.0), -Vector3::x());
    let far_body = Capsule { a: Vector3::new(-5.0, 0.0, 2.0), b: Vector3::new(-5.0, 0.0, 0.0), radius: 0.5 };
    assert_eq!(visible_fraction(&cam, &far_body, &cloud), 1.0);
    let blocking = Capsule { a: Vector3::new(1.5, 0.0, 2.0), b: Vector3::new(1.5, 0.0, 0.0), radius: 1.0 };
    assert_eq!(visible_fraction(&cam, &blocking, &cloud), 0.0);
}

#[test]
fn noiseless_streams_follow_visibility() {
    let s = generate_scene(&SceneConfig { duration_s: 12, seed: 4, ..SceneConfig::default() }).unwrap();
    let f = synth_features(&s, &FeatureConfig { sigma: 0.0, ..FeatureConfig::default() }).unwrap();
    let d = f.latent[0].len();
    let mut g = rng::stream(0, &[1]);
    let nuisance = vec![0.0; d];
    assert_eq!(emit_view(&f.latent, &[1.0; 12], 0.0, &nuisance, &mut g), f.latent);
    assert!(emit_view(&f.latent, &[0.0; 12], 0.0, &nuisance, &mut g).iter().flatten().all(|&x| x == 0.0));
    // ego stream carries the latent itself, up to f32 storage
    let ego = &f.streams[0];
    for (t, a) in f.latent.iter().enumerate() {
        let row = ego.row(t);
        assert!(row.iter().zip(a).all(|(&x, &y)| (f64::from(x) - y).abs() < 1e-6));
    }
}

#[test]
fn timeline_matches_per_second_ranking() {
    let s = generate_scene(&SceneConfig { n_exo: 5, duration_s: 20, seed: 21, ..SceneConfig::default() }).unwrap();
    let (track, cams) = (s.ego_track().unwrap(), s.exo_cameras().unwrap());
    let hoi = HoiConfig::default();
    let timeline = rank_take_with(&track, &cams, 20, &hoi, Execution::Sequential).unwrap();
    let geo = exo_geometry(&cams, hoi.gaze_axis).unwrap();
    for (t, r) in timeline.iter().enumerate() {
        assert_eq!(r, &rank_views(t as u32, &track.poses()[t], &geo, &hoi).unwrap());
    }
}

#[test]
fn corpus_splits_are_disjoint_and_validated() {
    let cfg = CorpusConfig {
        n_train: 3,
        n_eval: 2,
        seed: 1,
        scene: SceneConfig { duration_s: 8, ..SceneConfig::default() },
        ..CorpusConfig::default()
    };
    let c = synthetic_corpus(&cfg, Execution::Sequential).unwrap();
    let ids: Vec<&str> = c.train.iter().chain(&c.eval).map(|t| t.take.take_id.as_str()).collect();
    assert_eq!(ids, ["sim00100", "sim00101", "sim00102", "sim00150", "sim00151"]);
    assert_eq!(c.train.iter().map(|t| t.scene.exo.len()).collect::<Vec<_>>(), [5, 6, 4]);
    for bad in [CorpusConfig { n_train: 0, ..cfg.clone() }, CorpusConfig { n_train: 51, ..cfg.clone() }] {
        assert!(synthetic_corpus(&bad, Execution::Sequential).is_err());
    }
}
