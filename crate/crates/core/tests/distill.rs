//! Curriculum, InfoNCE and training-loop properties.

mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use viewdistill::calib_io::{Keystep, KeystepSet};
use viewdistill::curriculum::{build_schedule, positive_rank};
use viewdistill::distill::*;
use viewdistill::par::Execution;
use viewdistill::ranking::{HoiConfig, RankingMode};
use viewdistill::sim::{label_takes, synthetic_corpus, CorpusConfig, FeatureConfig, SceneConfig};
use viewdistill::ViewId;

use common::*;

proptest! {
    #[test]
    fn phase_lengths_sum_to_total(m in 1usize..500, p in 1usize..12, frac in 0.01f64..0.99) {
        if let Ok(s) = build_schedule(m, p, frac) {
            prop_assert_eq!(s.phase_lengths().iter().sum::<usize>(), m);
            prop_assert_eq!(s.phase_lengths().len(), p);
            prop_assert!(s.phase_lengths().iter().all(|&l| l >= 1));
            for e in 0..m {
                let ph = s.phase_at(e).unwrap();
                prop_assert!((1..=p).contains(&ph));
            }
        }
    }

    #[test]
    fn cosine_loss_ignores_positive_rescaling(
        seed in any::<u64>(), d in 2usize..10, scales in prop::array::uniform4(1e-3f64..1e3)
    ) {
        let mut g = ChaCha8Rng::seed_from_u64(seed);
        let (q, p, n1, n2) = (gaussian(&mut g, d), gaussian(&mut g, d), gaussian(&mut g, d), gaussian(&mut g, d));
        let base = info_nce(&q, std::slice::from_ref(&p), &[n1.clone(), n2.clone()], 0.1).unwrap();
        let sc = |v: &[f64], k: f64| v.iter().map(|x| x * k).collect::<Vec<_>>();
        let scaled = info_nce(&sc(&q, scales[0]), &[sc(&p, scales[1])], &[sc(&n1, scales[2]), sc(&n2, scales[3])], 0.1).unwrap();
        prop_assert!((base - scaled).abs() < 1e-9);
    }

    #[test]
    fn stable_form_matches_naive(seed in any::<u64>(), d in 2usize..16, n_neg in 1usize..6, gamma in 0.05f64..2.0) {
        let mut g = ChaCha8Rng::seed_from_u64(seed);
        let q = gaussian(&mut g, d);
        let pos = vec![gaussian(&mut g, d)];
        let neg: Vec<Vec<f64>> = (0..n_neg).map(|_| gaussian(&mut g, d)).collect();
        let stable = info_nce(&q, &pos, &neg, gamma).unwrap();
        prop_assert!((stable - info_nce_reference(&q, &pos, &neg, gamma)).abs() < 1e-9);
    }

    // Moving the positive toward the anchor raises their cosine and must
    // lower the loss.
    #[test]
    fn loss_falls_as_positive_aligns(seed in any::<u64>(), d in 2usize..10, t in 0.05f64..0.95) {
        let mut g = ChaCha8Rng::seed_from_u64(seed);
        let (q, p, n) = (gaussian(&mut g, d), gaussian(&mut g, d), gaussian(&mut g, d));
        let qn: f64 = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        let pn: f64 = p.iter().map(|x| x * x).sum::<f64>().sqrt();
        let toward: Vec<f64> = p.iter().zip(&q).map(|(pi, qi)| (1.0 - t) * pi / pn + t * qi / qn).collect();
        let cos = |a: &[f64]| viewdistill::stats::cosine(&q, a).unwrap();
        prop_assume!(cos(&toward) > cos(&p) + 1e-9);
        let before = info_nce(&q, std::slice::from_ref(&p), std::slice::from_ref(&n), 0.1).unwrap();
        let after = info_nce(&q, &[toward], &[n], 0.1).unwrap();
        prop_assert!(after < before);
    }
}

#[test]
fn positive_rank_is_better_and_non_increasing_in_phase() {
    for n_views in 2..10 {
        for r in 1..n_views {
            let mut prev = usize::MAX;
            for p in 1..=n_views {
                let k = positive_rank(r, p, n_views);
                assert!(k < r, "rank {k} not better than source {r}");
                assert!(k <= prev);
                if r <= p {
                    assert_eq!(k, 0, "final-phase sources distil from ego");
                }
                prev = k;
            }
        }
    }
}

#[test]
fn info_nce_gradients_match_central_differences() {
    let (n, worst) = info_nce_grad_check(150, 42);
    assert!(n >= 100);
    assert!(worst <= FD_REL_TOL, "max relative error {worst:e}");
}

#[test]
fn gradient_check_flags_a_slightly_wrong_gradient() {
    let mut g = ChaCha8Rng::seed_from_u64(44);
    let (q, p, n) = (gaussian(&mut g, 8), gaussian(&mut g, 8), gaussian(&mut g, 8));
    let grad = info_nce_grad(&q, std::slice::from_ref(&p), std::slice::from_ref(&n), 0.1).unwrap();
    let at = |x: f64| {
        let mut q2 = q.clone();
        q2[0] = x;
        info_nce_reference(&q2, std::slice::from_ref(&p), std::slice::from_ref(&n), 0.1)
    };
    let (up, down) = (at(q[0] + FD_STEP), at(q[0] - FD_STEP));
    assert!(fd_rel_err(grad.anchor[0], up, down) <= FD_REL_TOL);
    assert!(fd_rel_err(grad.anchor[0] * 1.001, up, down) > FD_REL_TOL);
}

#[test]
fn iou_gradients_match_central_differences() {
    let (n, worst) = iou_grad_check(150, 43);
    assert!(n >= 100);
    assert!(worst <= FD_REL_TOL, "max relative error {worst:e}");
}

#[test]
fn same_view_negative_is_uniform_over_the_interval() {
    let ks = KeystepSet::new(vec![
        Keystep { id: "here".into(), embedding: vec![1.0, 0.0], start_s: 0.0, end_s: 2.0 },
        Keystep { id: "far".into(), embedding: vec![-1.0, 0.0], start_s: 2.0, end_s: 7.0 },
    ])
    .unwrap();
    let mut g = ChaCha8Rng::seed_from_u64(17);
    let mut counts = [0f64; 5];
    let draws = 10_000;
    for _ in 0..draws {
        let t = same_view_negative(ViewId(1), 0, &[1.0, 0.1], &ks, 10, &mut g).unwrap();
        assert!((2..7).contains(&t));
        counts[(t - 2) as usize] += 1.0;
    }
    let expected = draws as f64 / 5.0;
    let chi2: f64 = counts.iter().map(|c| (c - expected).powi(2) / expected).sum();
    // 4 degrees of freedom, p = 0.01 critical value
    assert!(chi2 < 13.277, "chi2 {chi2}, counts {counts:?}");
}

fn small_corpus(seed: u64) -> (Vec<LabeledTake>, Vec<LabeledTake>) {
    let cfg = CorpusConfig {
        seed,
        n_train: 2,
        n_eval: 1,
        scene: SceneConfig { duration_s: 20, ..SceneConfig::default() },
        features: FeatureConfig::default(),
    };
    let c = synthetic_corpus(&cfg, Execution::Sequential).unwrap();
    let hoi = HoiConfig::default();
    (
        label_takes(&c.train, RankingMode::Geometric, &hoi, Execution::Sequential).unwrap(),
        label_takes(&c.eval, RankingMode::Geometric, &hoi, Execution::Sequential).unwrap(),
    )
}

#[test]
fn exo_positives_always_come_from_better_ranks() {
    let (train, _) = small_corpus(1);
    for (phase, lt) in (1..=6).flat_map(|p| train.iter().map(move |lt| (p, lt))) {
        let triples = epoch_triples(std::slice::from_ref(lt), 0, phase, 9, Execution::Sequential).unwrap();
        for tr in triples {
            let r = &lt.rankings[tr.t as usize];
            let src = r.rank_of(tr.view).unwrap();
            for p in &tr.positives {
                let pr = r.rank_of(p.view).unwrap();
                if src > 0 {
                    assert!(pr < src);
                }
                assert_ne!(p.view, tr.view);
            }
            for n in tr.negatives.iter().filter(|n| n.view == tr.view) {
                assert_ne!(n.t, tr.t);
            }
        }
    }
}

#[test]
fn training_is_bit_reproducible_and_strategy_independent() {
    let (train, eval) = small_corpus(2);
    let sched = build_schedule(12, 3, 0.5).unwrap();
    let cfg = DistillConfig { epochs: 12, seed: 5, ..DistillConfig::default() };
    let a = train_distill_with(&train, &eval, &sched, &cfg, Execution::Sequential).unwrap();
    let b = train_distill_with(&train, &eval, &sched, &cfg, Execution::Sequential).unwrap();
    let c = train_distill_with(&train, &eval, &sched, &cfg, Execution::Parallel).unwrap();
    assert_eq!(metrics_csv(&a.metrics), metrics_csv(&b.metrics));
    assert_eq!(metrics_csv(&a.metrics), metrics_csv(&c.metrics));
    assert_eq!(a.head, c.head);
    let d = train_distill_with(&train, &eval, &sched, &DistillConfig { seed: 6, ..cfg.clone() }, Execution::Sequential)
        .unwrap();
    assert_ne!(metrics_csv(&a.metrics), metrics_csv(&d.metrics));
}

#[test]
fn zero_learning_rate_keeps_the_head() {
    let (train, eval) = small_corpus(3);
    let sched = build_schedule(4, 2, 0.5).unwrap();
    let cfg = DistillConfig { epochs: 4, learning_rate: 0.0, ..DistillConfig::default() };
    let out = train_distill(&train, &eval, &sched, &cfg).unwrap();
    assert!(out.metrics.iter().all(|m| m.mean_infonce == out.metrics[0].mean_infonce));
    assert_eq!(out.final_metrics.mean_infonce, out.metrics[0].mean_infonce);
}

#[test]
fn frozen_biases_stay_zero() {
    let (train, eval) = small_corpus(4);
    let sched = build_schedule(3, 1, 0.5).unwrap();
    let dims = vec![16, 8, 16];
    let frozen = DistillConfig { epochs: 3, head_dims: Some(dims.clone()), ..DistillConfig::default() };
    let out = train_distill(&train, &eval, &sched, &frozen).unwrap();
    let biases = |h: &ProjectionHead| -> Vec<f64> {
        let mut off = 0;
        let mut b = Vec::new();
        for w in h.dims().windows(2) {
            off += w[0] * w[1];
            b.extend_from_slice(&h.params()[off..off + w[1]]);
            off += w[1];
        }
        b
    };
    assert!(biases(&out.head).iter().all(|&b| b == 0.0));
    let trained = train_distill(&train, &eval, &sched, &DistillConfig { train_bias: true, ..frozen }).unwrap();
    assert!(biases(&trained.head).iter().any(|&b| b != 0.0));
}

#[test]
fn metrics_csv_layout() {
    let (train, eval) = small_corpus(5);
    let sched = build_schedule(3, 1, 0.5).unwrap();
    let out = train_distill(&train, &eval, &sched, &DistillConfig { epochs: 3, ..DistillConfig::default() }).unwrap();
    let csv = metrics_csv(&out.metrics);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "epoch,phase,mean_infonce,avg_neg_cosine,avg_pos_cosine");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("0,1,"));
}
