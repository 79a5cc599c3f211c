use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use viewdistill::calib_io::{
    load_take_dir, parse_calibration, parse_ego_trajectory, parse_keystep_records, parse_ranking_cache, read_text,
    serialize_ranking_cache, write_atomic, write_take_dir, KeystepRecord, RankOrder,
};
use viewdistill::curriculum::{build_schedule, phases_for_takes};
use viewdistill::distill::{self, metrics_csv, DistillConfig, LabeledTake};
use viewdistill::ground_eval::{
    evaluate, stratify_by_view, GroundingCase, ScoredSpan, Span, ViewCase, DEFAULT_THRESHOLDS,
};
use viewdistill::ranking::{
    apply_mode, rank_frequencies, rank_take, timeline_orders, track_duration, GazeAxis, HoiConfig, RankingMode,
};
use viewdistill::sim::{
    generate_take, order_visibility_spearman, parse_visibility_csv, EgoPath, FeatureConfig, SceneConfig,
};
use viewdistill::ViewId;

use crate::config::ConfigFile;
use crate::{CliError, EvalArgs, RankArgs, ScheduleArgs, SimulateArgs, TrainArgs};

type Result<T> = std::result::Result<T, CliError>;

fn required<T>(value: Option<T>, name: &str) -> Result<T> {
    value.ok_or_else(|| CliError::Input(format!("--{name} is required (flag or config key)")))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Input(format!("cannot create {}: {e}", dir.display())))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    Ok(write_atomic(path, bytes)?)
}

pub fn rank(a: RankArgs) -> Result<()> {
    let mut cfg = ConfigFile::load(a.config.as_deref())?;
    let calib: PathBuf = required(cfg.take("calib", a.calib)?, "calib")?;
    let traj: PathBuf = required(cfg.take("traj", a.traj)?, "traj")?;
    let out: PathBuf = required(cfg.take("out", a.out)?, "out")?;
    let mut hoi = HoiConfig::default();
    if let Some(d) = cfg.take("d-ego-hand", a.d_ego_hand)? {
        hoi.d_ego_hand = d;
    }
    if let Some(axis) = cfg.take::<String>("gaze-axis", a.gaze_axis)? {
        hoi.gaze_axis = axis.parse::<GazeAxis>()?;
    }
    let reverse = cfg.switch("reverse", a.reverse)?;
    let random = cfg.switch("random", a.random)?;
    let seed: u64 = cfg.take("seed", a.seed)?.unwrap_or(0);
    let visibility: Option<PathBuf> = cfg.take("visibility", a.visibility)?;
    cfg.finish()?;
    let mode = match (reverse, random) {
        (true, true) => return Err(CliError::Input("--reverse and --random are mutually exclusive".into())),
        (true, false) => RankingMode::Reversed,
        (false, true) => RankingMode::Random { seed },
        (false, false) => RankingMode::Geometric,
    };

    let cameras = parse_calibration(&read_text(&calib)?)?;
    let track = parse_ego_trajectory(&read_text(&traj)?)?;
    let timeline = rank_take(&track, &cameras, track_duration(&track), &hoi)?;
    let orders = apply_mode(&timeline_orders(&timeline), mode);
    write(&out, serialize_ranking_cache(&orders).as_bytes())?;

    print!("{}", frequency_table(&orders));
    if let Some(path) = visibility {
        let table = parse_visibility_csv(&read_text(&path)?)?;
        let rho = order_visibility_spearman(&orders, |t, v| table.get(&(t, v)).copied())
            .ok_or_else(|| CliError::Input(format!("{} does not cover the ranked views", path.display())))?;
        println!("spearman vs visibility: {rho:.4}");
    }
    log::info!("wrote {} rankings to {}", orders.len(), out.display());
    Ok(())
}

fn frequency_table(orders: &[RankOrder]) -> String {
    let freq = rank_frequencies(orders);
    let n = freq.first().map_or(0, |(_, c)| c.len());
    let mut s = String::from("view");
    for k in 1..=n {
        let _ = write!(s, "\trank{k}");
    }
    s.push('\n');
    for (v, counts) in &freq {
        let _ = write!(s, "{v}");
        for c in counts {
            let _ = write!(s, "\t{c}");
        }
        s.push('\n');
    }
    s
}

pub fn schedule(a: ScheduleArgs) -> Result<()> {
    let s = build_schedule(a.epochs, a.phases, a.final_frac.unwrap_or(0.5))?;
    println!("{}", s.to_json());
    Ok(())
}

fn load_labeled(takes: &[PathBuf], caches: &[PathBuf], what: &str) -> Result<Vec<LabeledTake>> {
    if takes.len() != caches.len() {
        return Err(CliError::Input(format!(
            "{} {what} take directories but {} ranking caches",
            takes.len(),
            caches.len()
        )));
    }
    takes
        .iter()
        .zip(caches)
        .map(|(dir, cache)| {
            let take = load_take_dir(dir)?;
            let orders = parse_ranking_cache(&read_text(cache)?)?;
            Ok(LabeledTake::new(take, orders)?)
        })
        .collect()
}

pub fn train_distill(a: TrainArgs) -> Result<()> {
    let mut cfg = ConfigFile::load(a.config.as_deref())?;
    let out: PathBuf = required(cfg.take("out", a.out)?, "out")?;
    let defaults = DistillConfig::default();
    let config = DistillConfig {
        seed: cfg.take("seed", a.seed)?.unwrap_or(defaults.seed),
        gamma: cfg.take("gamma", a.gamma)?.unwrap_or(defaults.gamma),
        epochs: cfg.take("epochs", a.epochs)?.unwrap_or(defaults.epochs),
        learning_rate: cfg.take("lr", a.lr)?.unwrap_or(defaults.learning_rate),
        batch_size: cfg.take("batch-size", a.batch_size)?.unwrap_or(defaults.batch_size),
        ..defaults
    };
    let phases: Option<usize> = cfg.take("phases", a.phases)?;
    let final_frac: f64 = cfg.take("final-frac", a.final_frac)?.unwrap_or(0.5);
    cfg.finish()?;

    let train = load_labeled(&a.features, &a.rankings, "training")?;
    let eval = load_labeled(&a.eval_features, &a.eval_rankings, "evaluation")?;
    let phases = phases.unwrap_or_else(|| phases_for_takes(train.iter().map(|lt| &lt.take)));
    let schedule = build_schedule(config.epochs, phases, final_frac)?;
    let outcome = distill::train_distill(&train, &eval, &schedule, &config)?;

    ensure_dir(&out)?;
    write(&out.join("head.vdph"), &outcome.head.to_bytes())?;
    write(&out.join("metrics.csv"), metrics_csv(&outcome.metrics).as_bytes())?;
    let first = outcome.metrics[0];
    let last = outcome.final_metrics;
    println!(
        "mean InfoNCE {:.6} -> {:.6} over {} epochs; avg neg cosine {:.4} -> {:.4}",
        first.mean_infonce, last.mean_infonce, config.epochs, first.avg_neg_cosine, last.avg_neg_cosine
    );
    Ok(())
}

/// `VIEW=PATH`, or a bare path for the ego view.
fn parse_prediction_arg(arg: &str) -> Result<(ViewId, PathBuf)> {
    match arg.split_once('=') {
        Some((v, p)) => {
            let v = v.trim().parse().map_err(|_| CliError::Input(format!("bad view id in `{arg}`")))?;
            Ok((ViewId(v), PathBuf::from(p)))
        }
        None => Ok((ViewId::EGO, PathBuf::from(arg))),
    }
}

fn parse_thresholds(s: &str) -> Result<Vec<f64>> {
    let ths = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| CliError::Input(format!("bad threshold `{t}`"))))
        .collect::<Result<Vec<_>>>()?;
    if let Some(t) = ths.iter().find(|t| !(**t > 0.0 && **t <= 1.0)) {
        return Err(CliError::Input(format!("threshold {t} outside (0, 1]")));
    }
    Ok(ths)
}

fn view_cases(view: ViewId, gt: &[KeystepRecord], preds: Vec<KeystepRecord>) -> Result<Vec<ViewCase>> {
    let mut by_id: BTreeMap<String, Vec<ScoredSpan>> = BTreeMap::new();
    for p in preds {
        if !gt.iter().any(|g| g.id == p.id) {
            return Err(CliError::Input(format!("view {view}: prediction for unknown keystep `{}`", p.id)));
        }
        by_id
            .entry(p.id)
            .or_default()
            .push(ScoredSpan { span: Span::new(p.start_s, p.end_s), confidence: p.confidence });
    }
    gt.iter()
        .map(|g| {
            let predictions = by_id
                .remove(&g.id)
                .ok_or_else(|| CliError::Input(format!("view {view}: no prediction for keystep `{}`", g.id)))?;
            Ok(ViewCase {
                take_id: "take".into(),
                view,
                case: GroundingCase { keystep_id: g.id.clone(), gt: Span::new(g.start_s, g.end_s), predictions },
            })
        })
        .collect()
}

pub fn eval_ground(a: EvalArgs) -> Result<()> {
    let mut cfg = ConfigFile::load(a.config.as_deref())?;
    let keysteps: PathBuf = required(cfg.take("keysteps", a.keysteps)?, "keysteps")?;
    let out: PathBuf = required(cfg.take("out", a.out)?, "out")?;
    let rankings: Option<PathBuf> = cfg.take("rankings", a.rankings)?;
    let thresholds = match cfg.take::<String>("thresholds", a.thresholds)? {
        Some(s) => parse_thresholds(&s)?,
        None => DEFAULT_THRESHOLDS.to_vec(),
    };
    let k: usize = cfg.take("k", a.k)?.unwrap_or(1);
    cfg.finish()?;

    let gt = parse_keystep_records(&read_text(&keysteps)?)?;
    if gt.is_empty() {
        return Err(CliError::Input(format!("{} has no keysteps", keysteps.display())));
    }
    let mut cases = Vec::new();
    for arg in &a.predictions {
        let (view, path) = parse_prediction_arg(arg)?;
        cases.extend(view_cases(view, &gt, parse_keystep_records(&read_text(&path)?)?)?);
    }
    let mut buckets = BTreeMap::new();
    if let Some(path) = rankings {
        let orders = parse_ranking_cache(&read_text(&path)?)?;
        if let Some(b) = stratify_by_view(&orders) {
            buckets.insert("take".to_string(), b);
        }
    }
    let report = evaluate(&cases, &buckets, &thresholds, k)?;
    ensure_dir(&out)?;
    write(&out.join("report.json"), report.to_json().as_bytes())?;
    write(&out.join("report.csv"), report.to_csv().as_bytes())?;
    for (th, r) in &report.overall.recall {
        println!("R@{k} IoU>={th}: {r:.4}");
    }
    println!("mIoU: {:.4}", report.overall.miou);
    Ok(())
}

pub fn simulate(a: SimulateArgs) -> Result<()> {
    let mut cfg = ConfigFile::load(a.config.as_deref())?;
    let out: PathBuf = required(cfg.take("out", a.out)?, "out")?;
    let mut scene = SceneConfig::default();
    let mut features = FeatureConfig::default();
    let seed: u64 = cfg.take("seed", a.seed)?.unwrap_or(0);
    scene.seed = seed;
    features.seed = seed;
    if let Some(v) = cfg.take("n-exo", a.n_exo)? {
        scene.n_exo = v;
    }
    if let Some(v) = cfg.take("duration", a.duration)? {
        scene.duration_s = v;
    }
    if let Some(v) = cfg.take::<String>("ego-path", a.ego_path)? {
        scene.ego_path = v.parse::<EgoPath>()?;
    }
    if let Some(v) = cfg.take("d-ego-hand", a.d_ego_hand)? {
        scene.d_ego_hand = v;
    }
    if let Some(v) = cfg.take("body-radius", a.body_radius)? {
        scene.body.radius = v;
    }
    if let Some(v) = cfg.take("dim", a.dim)? {
        features.dim = v;
    }
    if let Some(v) = cfg.take("sigma", a.sigma)? {
        features.sigma = v;
    }
    if let Some(v) = cfg.take("nuisance", a.nuisance)? {
        features.nuisance = v;
    }
    cfg.finish()?;

    let take_id = out.file_name().and_then(|n| n.to_str()).unwrap_or("take").to_string();
    let st = generate_take(&take_id, &scene, &features, Default::default())?;
    let written = write_take_dir(&out, &st.take)?;
    write(&out.join("visibility.csv"), st.scene.visibility_csv().as_bytes())?;
    println!(
        "wrote {} files and visibility.csv to {} ({} exo views, {} s)",
        written.len(),
        out.display(),
        scene.n_exo,
        scene.duration_s
    );
    Ok(())
}
