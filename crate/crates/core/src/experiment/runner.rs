//! Monte Carlo sweep over trials, radar counts, SNR and jitter.

use std::cmp::Ordering;
use std::io::{BufRead, Write};

use rayon::prelude::*;

use super::config::{ExperimentConfig, GridSource, Jitter, RetrainMode, TrainSnr};
use super::dataset::{
    class_of_index, generate_train_dataset, simulate_record, trajectory_rngs, TAG_FUSION, TAG_MLP,
    TAG_TRAIN,
};
use crate::classifier::{train_logreg, train_mlp, ClassifierModel, ModelKind};
use crate::error::{Error, Result};
use crate::fusion::{recursive_posteriors, FusionKind, FusionRule};
use crate::kinematics::make_radar_grid;
use crate::seed::{derive_seed, derived_rng, real_tag};
use crate::signature::{load_library, synth_library, GridLibrary};

/// Accuracy curve and time-to-correct of one (model, rule, condition, trial).
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRow {
    pub model: ModelKind,
    pub rule: FusionKind,
    pub radars: usize,
    pub snr_db: f64,
    pub jitter: Jitter,
    pub trial: usize,
    pub n_trajectories: usize,
    /// Fraction of trajectories whose posterior argmax is correct after
    /// step `t + 1`.
    pub accuracy: Vec<f64>,
    /// Mean first step from which the decision stays correct; `L + 1` when
    /// the final decision is wrong.
    pub mean_time_to_correct: f64,
}

impl MetricsRow {
    pub fn final_accuracy(&self) -> f64 {
        self.accuracy.last().copied().unwrap_or(f64::NAN)
    }

    fn sort_key_cmp(&self, other: &Self) -> Ordering {
        self.model
            .cmp(&other.model)
            .then(self.rule.cmp(&other.rule))
            .then(self.radars.cmp(&other.radars))
            .then(self.snr_db.total_cmp(&other.snr_db))
            .then(self.jitter.az_deg.total_cmp(&other.jitter.az_deg))
            .then(self.jitter.el_deg.total_cmp(&other.jitter.el_deg))
            .then(self.trial.cmp(&other.trial))
    }
}

/// A condition that could not be evaluated.
#[derive(Clone, Debug, PartialEq)]
pub struct Failure {
    pub condition: String,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunReport {
    pub rows: Vec<MetricsRow>,
    pub failures: Vec<Failure>,
}

/// First step from which every decision equals `truth` (1-based), or
/// `decisions.len() + 1` if the last decision is wrong.
pub fn time_to_correct(decisions: &[usize], truth: usize) -> usize {
    let wrong_tail = decisions.iter().rposition(|&d| d != truth);
    match wrong_tail {
        None => 1,
        Some(t) => t + 2,
    }
}

/// Loads or synthesises the RCS library and checks it against the config.
pub fn load_grid(cfg: &ExperimentConfig) -> Result<GridLibrary> {
    let lib = match &cfg.grid {
        GridSource::Synthetic { seed, params } => synth_library(*seed, cfg.classes, params)?,
        GridSource::File(path) => load_library(path)?,
    };
    if lib.n_classes() != cfg.classes {
        return Err(Error::Config(format!(
            "grid has {} classes but config says classes = {}",
            lib.n_classes(),
            cfg.classes
        )));
    }
    Ok(lib)
}

fn trial_tag(cfg: &ExperimentConfig, trial: usize) -> u64 {
    match cfg.retrain {
        RetrainMode::PerTrial => trial as u64,
        RetrainMode::Once => u64::MAX,
    }
}

/// Trains one model per configured kind for a (trial, SNR, jitter) condition.
pub fn train_models(
    cfg: &ExperimentConfig,
    lib: &GridLibrary,
    trial: usize,
    snr_db: f64,
    jitter: Jitter,
) -> Result<Vec<ClassifierModel>> {
    let train_snr = match cfg.train_snr {
        TrainSnr::Same => snr_db,
        TrainSnr::Fixed(s) => s,
    };
    let tags = [
        trial_tag(cfg, trial),
        real_tag(train_snr),
        real_tag(jitter.az_deg),
        real_tag(jitter.el_deg),
    ];
    let mut rng = derived_rng(cfg.base_seed, &[&[TAG_TRAIN][..], &tags].concat());
    let data = generate_train_dataset(
        lib,
        cfg.train_size,
        &cfg.noise(train_snr, jitter),
        cfg.include_angles,
        &mut rng,
    )?;
    cfg.models
        .iter()
        .map(|kind| match kind {
            ModelKind::LogReg => train_logreg(&data, &cfg.logreg),
            ModelKind::Mlp => {
                let mut hyper = cfg.mlp.clone();
                hyper.seed = derive_seed(cfg.base_seed, &[&[TAG_MLP][..], &tags].concat());
                train_mlp(&data, &hyper)
            }
        })
        .collect()
}

struct Outcome {
    correct: Vec<bool>,
    ttc: usize,
}

/// Evaluates every (model, rule) pair at one condition and radar count.
fn evaluate(
    cfg: &ExperimentConfig,
    lib: &GridLibrary,
    models: &[ClassifierModel],
    trial: usize,
    snr_db: f64,
    jitter: Jitter,
    n_radars: usize,
) -> Result<Vec<MetricsRow>> {
    let radars = make_radar_grid(n_radars, cfg.radar_area_m)?;
    let noise = cfg.noise(snr_db, jitter);
    let rules: Vec<FusionRule> = cfg
        .fusion_rules
        .iter()
        .map(|&k| FusionRule::new(k).with_epsilon(cfg.hard_epsilon))
        .collect();
    let k = lib.n_classes();
    let steps = cfg.kinematics.steps;

    let per_traj: Vec<Vec<Outcome>> = (0..cfg.test_trajectories)
        .into_par_iter()
        .map(|i| {
            let class_id = class_of_index(i, k);
            let (mut kin, mut obs) = trajectory_rngs(cfg.base_seed, trial, n_radars, &noise, i);
            let rec = simulate_record(
                lib,
                class_id,
                &cfg.kinematics,
                &radars,
                &noise,
                &mut kin,
                &mut obs,
            )?;
            let mut out = Vec::with_capacity(models.len() * rules.len());
            for model in models {
                let probs = rec
                    .observations
                    .iter()
                    .map(|step| step.iter().map(|o| model.predict_proba(o)).collect())
                    .collect::<Result<Vec<Vec<_>>>>()?;
                for rule in &rules {
                    let mut rng = derived_rng(
                        cfg.base_seed,
                        &[
                            TAG_FUSION,
                            trial as u64,
                            n_radars as u64,
                            real_tag(snr_db),
                            real_tag(jitter.az_deg),
                            real_tag(jitter.el_deg),
                            model.kind() as u64,
                            rule.kind as u64,
                            i as u64,
                        ],
                    );
                    let decisions: Vec<usize> = recursive_posteriors(&probs, rule, &mut rng)?
                        .iter()
                        .map(|s| s.decision())
                        .collect();
                    out.push(Outcome {
                        correct: decisions.iter().map(|&d| d == class_id).collect(),
                        ttc: time_to_correct(&decisions, class_id),
                    });
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let n = per_traj.len();
    let mut rows = Vec::with_capacity(models.len() * rules.len());
    for (mi, model) in models.iter().enumerate() {
        for (ri, rule) in rules.iter().enumerate() {
            let idx = mi * rules.len() + ri;
            let mut hits = vec![0usize; steps];
            let mut ttc = 0usize;
            for traj in &per_traj {
                let o = &traj[idx];
                for (h, &c) in hits.iter_mut().zip(&o.correct) {
                    *h += usize::from(c);
                }
                ttc += o.ttc;
            }
            rows.push(MetricsRow {
                model: model.kind(),
                rule: rule.kind,
                radars: n_radars,
                snr_db,
                jitter,
                trial,
                n_trajectories: n,
                accuracy: hits.iter().map(|&h| h as f64 / n as f64).collect(),
                mean_time_to_correct: ttc as f64 / n as f64,
            });
        }
    }
    Ok(rows)
}

fn condition_name(trial: usize, snr_db: f64, jitter: Jitter, radars: Option<usize>) -> String {
    let mut s = format!(
        "trial={trial} snr_db={snr_db} jitter_deg={}",
        jitter.label()
    );
    if let Some(j) = radars {
        s.push_str(&format!(" radars={j}"));
    }
    s
}

/// Runs the whole sweep on the configured grid.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunReport> {
    cfg.validate()?;
    let lib = load_grid(cfg)?;
    run_experiment_with_library(cfg, &lib)
}

/// Runs the sweep on an already-loaded library.
///
/// A failing condition is logged and reported in [`RunReport::failures`];
/// the others still run. Rows are sorted, so output does not depend on the
/// worker count.
pub fn run_experiment_with_library(cfg: &ExperimentConfig, lib: &GridLibrary) -> Result<RunReport> {
    cfg.validate()?;
    if lib.n_classes() != cfg.classes {
        return Err(Error::Config(format!(
            "grid has {} classes but config says classes = {}",
            lib.n_classes(),
            cfg.classes
        )));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| sweep(cfg, lib))
}

fn sweep(cfg: &ExperimentConfig, lib: &GridLibrary) -> Result<RunReport> {
    let mut units = Vec::new();
    for trial in 0..cfg.trials {
        for &snr in &cfg.snr_db {
            for &jit in &cfg.jitter {
                units.push((trial, snr, jit));
            }
        }
    }

    let trained: Vec<_> = units
        .par_iter()
        .map(|&(trial, snr, jit)| {
            log::info!("training {}", condition_name(trial, snr, jit, None));
            train_models(cfg, lib, trial, snr, jit)
        })
        .collect();

    let mut failures = Vec::new();
    let mut jobs = Vec::new();
    for (&(trial, snr, jit), models) in units.iter().zip(&trained) {
        match models {
            Ok(m) => {
                for &j in &cfg.radar_counts {
                    jobs.push((trial, snr, jit, j, m));
                }
            }
            Err(e) => {
                let condition = condition_name(trial, snr, jit, None);
                log::error!("{condition}: {e}");
                failures.push(Failure {
                    condition,
                    message: e.to_string(),
                });
            }
        }
    }

    let evaluated: Vec<_> = jobs
        .par_iter()
        .map(|&(trial, snr, jit, j, models)| {
            log::info!("evaluating {}", condition_name(trial, snr, jit, Some(j)));
            evaluate(cfg, lib, models, trial, snr, jit, j)
        })
        .collect();

    let mut rows = Vec::new();
    for (&(trial, snr, jit, j, _), res) in jobs.iter().zip(evaluated) {
        match res {
            Ok(r) => rows.extend(r),
            Err(e) => {
                let condition = condition_name(trial, snr, jit, Some(j));
                log::error!("{condition}: {e}");
                failures.push(Failure {
                    condition,
                    message: e.to_string(),
                });
            }
        }
    }
    rows.sort_by(MetricsRow::sort_key_cmp);
    Ok(RunReport { rows, failures })
}

const SCHEMA: &str = "metrics-v1";
const FIXED_COLUMNS: [&str; 10] = [
    "model",
    "rule",
    "radars",
    "snr_db",
    "jitter_az_deg",
    "jitter_el_deg",
    "trial",
    "n_trajectories",
    "final_accuracy",
    "mean_time_to_correct",
];

/// Writes rows as CSV, preceded by a `# schema=... config_hash=...` line.
pub fn write_metrics<W: Write>(
    mut w: W,
    rows: &[MetricsRow],
    config_hash: &str,
) -> std::io::Result<()> {
    let steps = rows.first().map_or(0, |r| r.accuracy.len());
    writeln!(w, "# schema={SCHEMA} config_hash={config_hash}")?;
    write!(w, "{}", FIXED_COLUMNS.join(","))?;
    for t in 1..=steps {
        write!(w, ",acc_t{t}")?;
    }
    writeln!(w)?;
    for r in rows {
        write!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            r.model,
            r.rule,
            r.radars,
            r.snr_db,
            r.jitter.az_deg,
            r.jitter.el_deg,
            r.trial,
            r.n_trajectories,
            r.final_accuracy(),
            r.mean_time_to_correct
        )?;
        for a in &r.accuracy {
            write!(w, ",{a}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Reads a metrics CSV, returning the rows and the recorded config hash.
pub fn read_metrics<R: BufRead>(r: R) -> Result<(Vec<MetricsRow>, Option<String>)> {
    let mut hash = None;
    let mut header: Option<Vec<String>> = None;
    let mut rows = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let loc = format!("line {}", i + 1);
        let line = line.map_err(|e| Error::parse(&loc, e.to_string()))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            for field in comment.split_whitespace() {
                match field.split_once('=') {
                    Some(("schema", s)) if s != SCHEMA => {
                        return Err(Error::parse(&loc, format!("unsupported schema {s:?}")))
                    }
                    Some(("config_hash", h)) => hash = Some(h.to_string()),
                    _ => {}
                }
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let Some(cols) = &header else {
            if fields.len() < FIXED_COLUMNS.len() || fields[..FIXED_COLUMNS.len()] != FIXED_COLUMNS
            {
                return Err(Error::parse(&loc, "unexpected metrics header"));
            }
            header = Some(fields.iter().map(|s| s.to_string()).collect());
            continue;
        };
        if fields.len() != cols.len() {
            return Err(Error::parse(
                &loc,
                format!("{} fields, expected {}", fields.len(), cols.len()),
            ));
        }
        let num = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| Error::parse(&loc, format!("bad number {s:?}")))
        };
        let int = |s: &str| -> Result<usize> {
            s.parse()
                .map_err(|_| Error::parse(&loc, format!("bad integer {s:?}")))
        };
        rows.push(MetricsRow {
            model: fields[0]
                .parse()
                .map_err(|e: Error| Error::parse(&loc, e.to_string()))?,
            rule: fields[1]
                .parse()
                .map_err(|e: Error| Error::parse(&loc, e.to_string()))?,
            radars: int(fields[2])?,
            snr_db: num(fields[3])?,
            jitter: Jitter {
                az_deg: num(fields[4])?,
                el_deg: num(fields[5])?,
            },
            trial: int(fields[6])?,
            n_trajectories: int(fields[7])?,
            accuracy: fields[FIXED_COLUMNS.len()..]
                .iter()
                .map(|s| num(s))
                .collect::<Result<_>>()?,
            mean_time_to_correct: num(fields[9])?,
        });
    }
    if header.is_none() {
        return Err(Error::parse("line 1", "metrics file has no header"));
    }
    Ok((rows, hash))
}
