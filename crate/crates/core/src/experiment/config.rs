//! Experiment configuration and its flat `key = value` file format.
//!
//! Blank lines and `#` comments are ignored; lists are comma-separated.
//! A `preset = desk|full` line, if present, must come first and resets every
//! key to that preset before the remaining lines are applied.

use std::fmt::Write as _;
use std::path::PathBuf;

use sha2::{Digest, Sha256};

use crate::classifier::{LogRegHyper, MlpHyper, ModelKind};
use crate::error::{Error, Result};
use crate::fusion::{FusionKind, DEFAULT_EPSILON};
use crate::kinematics::{GaussianParam, KinematicsConfig};
use crate::signature::SynthParams;

#[derive(Clone, Debug, PartialEq)]
pub enum GridSource {
    Synthetic { seed: u64, params: SynthParams },
    File(PathBuf),
}

/// Angle-jitter half-widths (degrees) for one sweep condition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jitter {
    pub az_deg: f64,
    pub el_deg: f64,
}

impl Jitter {
    pub fn both(a: f64) -> Self {
        Self {
            az_deg: a,
            el_deg: a,
        }
    }

    /// Standard deviation of `U(-a, a)` azimuth jitter, `a / sqrt(3)`.
    pub fn az_std_deg(&self) -> f64 {
        self.az_deg / 3f64.sqrt()
    }

    pub fn label(&self) -> String {
        if self.az_deg == self.el_deg {
            format!("{}", self.az_deg)
        } else {
            format!("{}x{}", self.az_deg, self.el_deg)
        }
    }

    fn parse(s: &str) -> Result<Self> {
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad jitter {s:?}")))
        };
        let j = match s.split_once(':') {
            Some((a, e)) => Self {
                az_deg: num(a)?,
                el_deg: num(e)?,
            },
            None => Self::both(num(s)?),
        };
        if !(j.az_deg >= 0.0 && j.el_deg >= 0.0 && j.az_deg.is_finite() && j.el_deg.is_finite()) {
            return Err(Error::Config(format!(
                "jitter must be finite and >= 0, got {s:?}"
            )));
        }
        Ok(j)
    }

    fn to_config(self) -> String {
        if self.az_deg == self.el_deg {
            format!("{}", self.az_deg)
        } else {
            format!("{}:{}", self.az_deg, self.el_deg)
        }
    }
}

/// SNR used for training data.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TrainSnr {
    /// Same as the evaluated condition.
    Same,
    Fixed(f64),
}

/// Whether classifiers are retrained for every Monte Carlo trial.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RetrainMode {
    PerTrial,
    Once,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub grid: GridSource,
    pub classes: usize,
    pub radar_counts: Vec<usize>,
    pub radar_area_m: (f64, f64),
    pub snr_db: Vec<f64>,
    pub jitter: Vec<Jitter>,
    pub fusion_rules: Vec<FusionKind>,
    pub hard_epsilon: f64,
    pub models: Vec<ModelKind>,
    pub trials: usize,
    /// Total test trajectories, split across classes as evenly as possible.
    pub test_trajectories: usize,
    /// Total training samples, split across classes as evenly as possible.
    pub train_size: usize,
    pub train_snr: TrainSnr,
    pub retrain: RetrainMode,
    pub include_angles: bool,
    pub kinematics: KinematicsConfig,
    pub logreg: LogRegHyper,
    pub mlp: MlpHyper,
    pub base_seed: u64,
    pub out_dir: PathBuf,
    /// 0 uses every available core.
    pub workers: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::desk()
    }
}

impl ExperimentConfig {
    /// Small sweep that completes in minutes on one core.
    pub fn desk() -> Self {
        Self {
            grid: GridSource::Synthetic {
                seed: 7,
                params: SynthParams::default(),
            },
            classes: 4,
            radar_counts: vec![1, 4, 16],
            radar_area_m: (-150.0, 150.0),
            snr_db: vec![0.0],
            jitter: vec![Jitter::both(40.0)],
            fusion_rules: FusionKind::ALL.to_vec(),
            hard_epsilon: DEFAULT_EPSILON,
            models: vec![ModelKind::LogReg],
            trials: 3,
            test_trajectories: 200,
            train_size: 2000,
            train_snr: TrainSnr::Same,
            retrain: RetrainMode::PerTrial,
            // angle features add a per-trajectory bias that cancels the
            // benefit of extra radars for a linear model at this scale
            include_angles: false,
            kinematics: KinematicsConfig::default(),
            logreg: LogRegHyper {
                l2: 0.3,
                ..LogRegHyper::default()
            },
            mlp: MlpHyper::default(),
            base_seed: 1,
            out_dir: PathBuf::from("out"),
            workers: 0,
        }
    }

    /// Full-size sweep matching the reference experiment protocol.
    pub fn full() -> Self {
        Self {
            classes: 7,
            radar_counts: vec![1, 4, 16, 64],
            snr_db: vec![-20.0, -10.0, 0.0, 10.0, 20.0],
            models: vec![ModelKind::LogReg, ModelKind::Mlp],
            trials: 10,
            test_trajectories: 2000,
            train_size: 10_000,
            include_angles: true,
            logreg: LogRegHyper::default(),
            ..Self::desk()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let nonempty = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::Config(format!("{what} must be non-empty")))
            }
        };
        nonempty(!self.radar_counts.is_empty(), "radar_counts")?;
        nonempty(!self.snr_db.is_empty(), "snr_db")?;
        nonempty(!self.jitter.is_empty(), "jitter_deg")?;
        nonempty(!self.fusion_rules.is_empty(), "fusion_rules")?;
        nonempty(!self.models.is_empty(), "models")?;
        if self.classes < 2 {
            return Err(Error::Config(format!(
                "classes must be >= 2, got {}",
                self.classes
            )));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        if self.train_size < self.classes {
            return Err(Error::Config(format!(
                "train_size {} is smaller than the number of classes",
                self.train_size
            )));
        }
        if self.test_trajectories == 0 {
            return Err(Error::Config("test_trajectories must be >= 1".into()));
        }
        for &j in &self.radar_counts {
            let n = (j as f64).sqrt().round() as usize;
            if j == 0 || n * n != j {
                return Err(Error::Config(format!(
                    "radar count {j} is not a positive perfect square"
                )));
            }
        }
        if !(self.radar_area_m.0 < self.radar_area_m.1) {
            return Err(Error::Config(
                "radar_area_m must be `min,max` with min < max".into(),
            ));
        }
        if self
            .snr_db
            .iter()
            .any(|s| s.is_nan() || *s == f64::NEG_INFINITY)
        {
            return Err(Error::Config(
                "snr_db values must be numbers (or inf)".into(),
            ));
        }
        if !(self.hard_epsilon > 0.0 && self.hard_epsilon < 1.0) {
            return Err(Error::Config("hard_epsilon must be in (0, 1)".into()));
        }
        if let GridSource::Synthetic { params, .. } = &self.grid {
            params
                .validate()
                .map_err(|e| Error::Config(e.to_string()))?;
        }
        self.kinematics
            .validate()
            .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::desk();
        let mut first = true;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if key == "preset" {
                if !first {
                    return Err(Error::Config(format!(
                        "line {}: `preset` must be the first key",
                        i + 1
                    )));
                }
                cfg = match value {
                    "desk" => Self::desk(),
                    "full" => Self::full(),
                    other => return Err(Error::Config(format!("unknown preset {other:?}"))),
                };
            } else {
                cfg.set(key, value)
                    .map_err(|e| Error::Config(format!("line {}: {e}", i + 1)))?;
            }
            first = false;
        }
        Ok(cfg)
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| Error::Config(format!("bad value {v:?} for `{key}`")))
        }
        fn list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
            v.split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| num(key, s))
                .collect()
        }
        fn boolean(key: &str, v: &str) -> Result<bool> {
            match v {
                "true" | "yes" | "1" => Ok(true),
                "false" | "no" | "0" => Ok(false),
                _ => Err(Error::Config(format!("bad boolean {v:?} for `{key}`"))),
            }
        }
        fn synth<'a>(cfg: &'a mut ExperimentConfig, key: &str) -> Result<&'a mut SynthParams> {
            match &mut cfg.grid {
                GridSource::Synthetic { params, .. } => Ok(params),
                GridSource::File(_) => Err(Error::Config(format!(
                    "`{key}` only applies to a synthetic grid"
                ))),
            }
        }
        match key {
            "grid" => {
                self.grid = if value == "synthetic" {
                    match &self.grid {
                        GridSource::Synthetic { .. } => self.grid.clone(),
                        GridSource::File(_) => GridSource::Synthetic {
                            seed: 7,
                            params: SynthParams::default(),
                        },
                    }
                } else {
                    GridSource::File(PathBuf::from(value))
                }
            }
            "grid_seed" => match &mut self.grid {
                GridSource::Synthetic { seed, .. } => *seed = num(key, value)?,
                GridSource::File(_) => {
                    return Err(Error::Config(
                        "`grid_seed` only applies to a synthetic grid".into(),
                    ))
                }
            },
            "synth_mean_level_dbsm" => synth(self, key)?.mean_level_dbsm = num(key, value)?,
            "synth_class_offset_db" => synth(self, key)?.class_offset_db = num(key, value)?,
            "synth_spectral_db" => synth(self, key)?.spectral_db = num(key, value)?,
            "synth_angular_db" => synth(self, key)?.angular_db = num(key, value)?,
            "synth_common_angular_db" => synth(self, key)?.common_angular_db = num(key, value)?,
            "synth_harmonics" => synth(self, key)?.harmonics = num(key, value)?,
            "classes" => self.classes = num(key, value)?,
            "radar_counts" => self.radar_counts = list(key, value)?,
            "radar_area_m" => {
                let v: Vec<f64> = list(key, value)?;
                let [lo, hi] = v[..] else {
                    return Err(Error::Config("`radar_area_m` takes `min,max`".into()));
                };
                self.radar_area_m = (lo, hi);
            }
            "snr_db" => self.snr_db = list(key, value)?,
            "jitter_deg" => {
                self.jitter = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(Jitter::parse)
                    .collect::<Result<_>>()?
            }
            "fusion_rules" => self.fusion_rules = list(key, value)?,
            "hard_epsilon" => self.hard_epsilon = num(key, value)?,
            "models" => self.models = list(key, value)?,
            "trials" => self.trials = num(key, value)?,
            "test_trajectories" => self.test_trajectories = num(key, value)?,
            "train_size" => self.train_size = num(key, value)?,
            "train_snr_db" => {
                self.train_snr = if value == "same" {
                    TrainSnr::Same
                } else {
                    TrainSnr::Fixed(num(key, value)?)
                }
            }
            "retrain" => {
                self.retrain = match value {
                    "per_trial" => RetrainMode::PerTrial,
                    "once" => RetrainMode::Once,
                    _ => return Err(Error::Config(format!("bad retrain mode {value:?}"))),
                }
            }
            "angles" => self.include_angles = boolean(key, value)?,
            "steps" => self.kinematics.steps = num(key, value)?,
            "dt_s" => self.kinematics.dt_s = num(key, value)?,
            "velocity_mps" => self.kinematics.velocity_mps = num(key, value)?,
            "yaw_noise" => self.kinematics.yaw_noise = num(key, value)?,
            "roll_noise" => self.kinematics.roll_noise = num(key, value)?,
            "attitude_noise_param" => {
                self.kinematics.noise_param = match value {
                    "variance" => GaussianParam::Variance,
                    "std" => GaussianParam::StdDev,
                    _ => return Err(Error::Config(format!("bad attitude_noise_param {value:?}"))),
                }
            }
            "logreg_learning_rate" => self.logreg.learning_rate = num(key, value)?,
            "logreg_epochs" => self.logreg.epochs = num(key, value)?,
            "logreg_l2" => self.logreg.l2 = num(key, value)?,
            "mlp_hidden" => self.mlp.hidden = list(key, value)?,
            "mlp_learning_rate" => self.mlp.learning_rate = num(key, value)?,
            "mlp_momentum" => self.mlp.momentum = num(key, value)?,
            "mlp_epochs" => self.mlp.epochs = num(key, value)?,
            "mlp_batch_size" => self.mlp.batch_size = num(key, value)?,
            "mlp_l2" => self.mlp.l2 = num(key, value)?,
            "base_seed" => self.base_seed = num(key, value)?,
            "out" => self.out_dir = PathBuf::from(value),
            "workers" => self.workers = num(key, value)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Every experiment-defining key, excluding output location and worker
    /// count, which do not affect results.
    fn defining_text(&self) -> String {
        let join = |v: Vec<String>| v.join(",");
        let nums = |v: &[f64]| join(v.iter().map(|x| format!("{x}")).collect());
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        match &self.grid {
            GridSource::Synthetic { seed, params } => {
                kv("grid", "synthetic".into());
                kv("grid_seed", seed.to_string());
                kv("synth_mean_level_dbsm", params.mean_level_dbsm.to_string());
                kv("synth_class_offset_db", params.class_offset_db.to_string());
                kv("synth_spectral_db", params.spectral_db.to_string());
                kv("synth_angular_db", params.angular_db.to_string());
                kv(
                    "synth_common_angular_db",
                    params.common_angular_db.to_string(),
                );
                kv("synth_harmonics", params.harmonics.to_string());
            }
            GridSource::File(p) => kv("grid", p.display().to_string()),
        }
        kv("classes", self.classes.to_string());
        kv(
            "radar_counts",
            join(self.radar_counts.iter().map(|j| j.to_string()).collect()),
        );
        kv(
            "radar_area_m",
            format!("{},{}", self.radar_area_m.0, self.radar_area_m.1),
        );
        kv("snr_db", nums(&self.snr_db));
        kv(
            "jitter_deg",
            join(self.jitter.iter().map(|j| j.to_config()).collect()),
        );
        kv(
            "fusion_rules",
            join(self.fusion_rules.iter().map(|r| r.to_string()).collect()),
        );
        kv("hard_epsilon", self.hard_epsilon.to_string());
        kv(
            "models",
            join(self.models.iter().map(|m| m.to_string()).collect()),
        );
        kv("trials", self.trials.to_string());
        kv("test_trajectories", self.test_trajectories.to_string());
        kv("train_size", self.train_size.to_string());
        kv(
            "train_snr_db",
            match self.train_snr {
                TrainSnr::Same => "same".into(),
                TrainSnr::Fixed(v) => v.to_string(),
            },
        );
        kv(
            "retrain",
            match self.retrain {
                RetrainMode::PerTrial => "per_trial".into(),
                RetrainMode::Once => "once".into(),
            },
        );
        kv("angles", self.include_angles.to_string());
        let k = &self.kinematics;
        kv("steps", k.steps.to_string());
        kv("dt_s", k.dt_s.to_string());
        kv("velocity_mps", k.velocity_mps.to_string());
        kv("yaw_noise", k.yaw_noise.to_string());
        kv("roll_noise", k.roll_noise.to_string());
        kv(
            "attitude_noise_param",
            match k.noise_param {
                GaussianParam::Variance => "variance".into(),
                GaussianParam::StdDev => "std".into(),
            },
        );
        kv(
            "logreg_learning_rate",
            self.logreg.learning_rate.to_string(),
        );
        kv("logreg_epochs", self.logreg.epochs.to_string());
        kv("logreg_l2", self.logreg.l2.to_string());
        kv(
            "mlp_hidden",
            join(self.mlp.hidden.iter().map(|h| h.to_string()).collect()),
        );
        kv("mlp_learning_rate", self.mlp.learning_rate.to_string());
        kv("mlp_momentum", self.mlp.momentum.to_string());
        kv("mlp_epochs", self.mlp.epochs.to_string());
        kv("mlp_batch_size", self.mlp.batch_size.to_string());
        kv("mlp_l2", self.mlp.l2.to_string());
        kv("base_seed", self.base_seed.to_string());
        s
    }

    /// Fully resolved configuration; parses back to an equal config.
    pub fn to_text(&self) -> String {
        let mut s = self.defining_text();
        let _ = writeln!(s, "out = {}", self.out_dir.display());
        let _ = writeln!(s, "workers = {}", self.workers);
        s
    }

    /// Short hex digest of the experiment-defining keys.
    pub fn config_hash(&self) -> String {
        let digest = Sha256::digest(self.defining_text().as_bytes());
        hex::encode(&digest[..8])
    }

    /// Noise configuration of one sweep condition.
    pub fn noise(&self, snr_db: f64, jitter: Jitter) -> crate::noise::NoiseConfig {
        crate::noise::NoiseConfig {
            snr_db,
            jitter_az_deg: jitter.az_deg,
            jitter_el_deg: jitter.el_deg,
        }
    }
}
