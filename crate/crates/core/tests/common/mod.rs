//! Oracles shared by the integration suites.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use viewdistill::distill::info_nce_grad;
use viewdistill::ground_eval::{iou_loss, Span, SpanPrediction};

pub const FD_STEP: f64 = 1e-5;
pub const FD_REL_TOL: f64 = 1e-4;

/// Relative error of `analytic` against the central difference of `up` and
/// `down`, ignoring disagreement within the quotient's own rounding bound
/// `4ε·max(|up|, |down|) / h`. The denominator is floored at 1e-6. Large
/// loss values with tiny partials otherwise measure the oracle's noise
/// rather than the gradient.
pub fn fd_rel_err(analytic: f64, up: f64, down: f64) -> f64 {
    let numeric = (up - down) / (2.0 * FD_STEP);
    let noise = 4.0 * f64::EPSILON * up.abs().max(down.abs()) / FD_STEP;
    ((analytic - numeric).abs() - noise).max(0.0) / analytic.abs().max(numeric.abs()).max(1e-6)
}

pub fn gaussian(g: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| g.sample(StandardNormal)).collect()
}

/// Independent scalar InfoNCE: plain cosines, naive exponentials, no
/// shared code with the library.
pub fn info_nce_reference(q: &[f64], pos: &[Vec<f64>], neg: &[Vec<f64>], gamma: f64) -> f64 {
    let cos = |a: &[f64], b: &[f64]| {
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        dot / (na * nb)
    };
    if neg.is_empty() {
        return 0.0;
    }
    let p: f64 = pos.iter().map(|f| (cos(q, f) / gamma).exp()).sum();
    let n: f64 = neg.iter().map(|f| (cos(q, f) / gamma).exp()).sum();
    -(p / (p + n)).ln()
}

/// Worst relative error of `info_nce_grad` against central differences
/// over `instances` random problems cycling through D ∈ {2, 8, 64} and
/// |G| ∈ {1, 2, 5}. Returns `(instances checked, max relative error)`.
pub fn info_nce_grad_check(instances: usize, seed: u64) -> (usize, f64) {
    let mut g = ChaCha8Rng::seed_from_u64(seed);
    let gamma = 0.1;
    let mut worst: f64 = 0.0;
    for i in 0..instances {
        let d = [2, 8, 64][i % 3];
        let n_neg = [1, 2, 5][(i / 3) % 3];
        let n_pos = 1 + usize::from(i % 7 == 0);
        let q = gaussian(&mut g, d);
        let pos: Vec<Vec<f64>> = (0..n_pos).map(|_| gaussian(&mut g, d)).collect();
        let neg: Vec<Vec<f64>> = (0..n_neg).map(|_| gaussian(&mut g, d)).collect();
        let grad = info_nce_grad(&q, &pos, &neg, gamma).unwrap();

        // flatten all inputs into one vector, perturb coordinate by coordinate
        let mut flat: Vec<f64> = q.iter().chain(pos.iter().flatten()).chain(neg.iter().flatten()).copied().collect();
        let analytic: Vec<f64> = grad
            .anchor
            .iter()
            .chain(grad.positives.iter().flatten())
            .chain(grad.negatives.iter().flatten())
            .copied()
            .collect();
        let eval = |flat: &[f64]| {
            let q = &flat[..d];
            let chunk = |k: usize| flat[d * (1 + k)..d * (2 + k)].to_vec();
            let pos: Vec<Vec<f64>> = (0..n_pos).map(chunk).collect();
            let neg: Vec<Vec<f64>> = (n_pos..n_pos + n_neg).map(chunk).collect();
            info_nce_reference(q, &pos, &neg, gamma)
        };
        for k in 0..flat.len() {
            let x = flat[k];
            flat[k] = x + FD_STEP;
            let up = eval(&flat);
            flat[k] = x - FD_STEP;
            let down = eval(&flat);
            flat[k] = x;
            worst = worst.max(fd_rel_err(analytic[k], up, down));
        }
    }
    (instances, worst)
}

/// Same check for `iou_loss` on overlapping spans kept away from the
/// clamp and from coinciding endpoints, where the loss is smooth.
pub fn iou_grad_check(instances: usize, seed: u64) -> (usize, f64) {
    let mut g = ChaCha8Rng::seed_from_u64(seed);
    let chunk: f64 = 20.0;
    let margin = 1e-3;
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < instances {
        let s: f64 = g.gen_range(0.0..chunk - 1.0);
        let e = g.gen_range(s + 0.5..chunk);
        let c = g.gen_range(0.05..0.95);
        let d = g.gen_range(0.02..0.9);
        let (a, b) = ((c - d / 2.0) * chunk, (c + d / 2.0) * chunk);
        let inter = b.min(e) - a.max(s);
        let smooth =
            a > margin && b < chunk - margin && inter > margin && (a - s).abs() > margin && (b - e).abs() > margin;
        if !smooth {
            continue;
        }
        let gt = Span::new(s, e);
        let loss = |c: f64, d: f64| {
            // independent value: 1 - |∩| / |∪| straight from the endpoints
            let (a, b) = ((c - d / 2.0) * chunk, (c + d / 2.0) * chunk);
            let inter = (b.min(e) - a.max(s)).max(0.0);
            1.0 - inter / ((b - a) + (e - s) - inter)
        };
        let r = iou_loss(&SpanPrediction::new("k", c, d).unwrap(), gt, chunk).unwrap();
        assert!((r.loss - loss(c, d)).abs() < 1e-12);
        let dc = fd_rel_err(r.d_center, loss(c + FD_STEP, d), loss(c - FD_STEP, d));
        let dd = fd_rel_err(r.d_duration, loss(c, d + FD_STEP), loss(c, d - FD_STEP));
        worst = worst.max(dc).max(dd);
        done += 1;
    }
    (done, worst)
}
