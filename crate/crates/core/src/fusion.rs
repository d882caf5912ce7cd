//! Fusion of per-radar class probabilities and recursive Bayesian
//! classification over time.
//!
//! Products over radars and time steps are accumulated in log space with one
//! max-subtraction renormalisation per fuse/update; a 64-radar, 100-step
//! product of probabilities underflows in linear space.

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::classifier::{ClassProbVector, Observation, ProbabilisticClassifier, P_MIN};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FusionKind {
    Obf,
    Soft,
    Hard,
    Max,
    Random,
}

impl FusionKind {
    pub const ALL: [FusionKind; 5] = [
        FusionKind::Obf,
        FusionKind::Soft,
        FusionKind::Hard,
        FusionKind::Max,
        FusionKind::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FusionKind::Obf => "obf",
            FusionKind::Soft => "soft",
            FusionKind::Hard => "hard",
            FusionKind::Max => "max",
            FusionKind::Random => "random",
        }
    }

    /// Rules that consume random numbers while fusing.
    pub fn is_stochastic(self) -> bool {
        matches!(self, FusionKind::Hard | FusionKind::Random)
    }
}

impl std::str::FromStr for FusionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FusionKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown fusion rule {s:?} (obf | soft | hard | max | random)"
                ))
            })
    }
}

impl std::fmt::Display for FusionKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Default hard-voting smoothing: losing classes get 0.001 each at K = 7.
pub const DEFAULT_EPSILON: f64 = 0.007;

/// A fusion rule with its parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct FusionRule {
    pub kind: FusionKind,
    /// Hard-voting smoothing, in (0, 1).
    pub epsilon: f64,
    /// Class prior for OBF; `None` means uniform.
    pub prior: Option<ClassProbVector>,
}

impl FusionRule {
    pub fn new(kind: FusionKind) -> Self {
        Self {
            kind,
            epsilon: DEFAULT_EPSILON,
            prior: None,
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_prior(mut self, prior: ClassProbVector) -> Self {
        self.prior = Some(prior);
        self
    }

    pub fn validate(&self, k: usize) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::Parameter(format!(
                "hard-voting epsilon must be in (0, 1), got {}",
                self.epsilon
            )));
        }
        if let Some(p) = &self.prior {
            if p.len() != k {
                return Err(Error::Shape(format!(
                    "prior has {} classes, expected {k}",
                    p.len()
                )));
            }
            if p.as_slice().iter().any(|v| *v <= 0.0) {
                return Err(Error::Parameter("OBF prior entries must be > 0".into()));
            }
        }
        Ok(())
    }

    /// Fuses one time step of per-radar probabilities.
    pub fn fuse<R: Rng + ?Sized>(
        &self,
        per_radar: &[ClassProbVector],
        rng: &mut R,
    ) -> Result<ClassProbVector> {
        let k = common_len(per_radar)?;
        match self.kind {
            FusionKind::Obf => match &self.prior {
                Some(p) => fuse_obf(per_radar, p),
                None => fuse_obf(per_radar, &ClassProbVector::uniform(k)),
            },
            FusionKind::Soft => fuse_soft(per_radar),
            FusionKind::Hard => fuse_hard(per_radar, self.epsilon, rng),
            FusionKind::Max => fuse_max(per_radar),
            FusionKind::Random => fuse_random(k, rng),
        }
    }
}

fn common_len(per_radar: &[ClassProbVector]) -> Result<usize> {
    let first = per_radar
        .first()
        .ok_or_else(|| Error::Input("no per-radar probability vectors to fuse".into()))?;
    let k = first.len();
    if per_radar.iter().any(|p| p.len() != k) {
        return Err(Error::Shape("per-radar vectors differ in length".into()));
    }
    Ok(k)
}

/// Optimal Bayesian fusion: `P(C)^(1-J) ∏_j P(C | x_j)`, normalised.
pub fn fuse_obf(per_radar: &[ClassProbVector], prior: &ClassProbVector) -> Result<ClassProbVector> {
    let k = common_len(per_radar)?;
    if prior.len() != k {
        return Err(Error::Shape(format!(
            "prior has {} classes, expected {k}",
            prior.len()
        )));
    }
    if per_radar.len() == 1 {
        return Ok(per_radar[0].clone());
    }
    let logs: Vec<Vec<f64>> = per_radar
        .iter()
        .map(|p| p.as_slice().iter().map(|v| v.ln()).collect())
        .collect();
    let log_prior: Vec<f64> = prior.as_slice().iter().map(|v| v.ln()).collect();
    fuse_obf_log(&logs, &log_prior)
}

/// OBF over (possibly unnormalised) per-radar log-probabilities.
///
/// Adding a constant to any radar's log vector does not change the result.
pub fn fuse_obf_log(per_radar_log: &[Vec<f64>], log_prior: &[f64]) -> Result<ClassProbVector> {
    let j = per_radar_log.len();
    if j == 0 {
        return Err(Error::Input("no per-radar vectors to fuse".into()));
    }
    let k = log_prior.len();
    if per_radar_log.iter().any(|l| l.len() != k) {
        return Err(Error::Shape(
            "per-radar log vectors differ from prior length".into(),
        ));
    }
    if log_prior.iter().any(|l| !l.is_finite()) {
        return Err(Error::Parameter("OBF prior entries must be > 0".into()));
    }
    let exponent = 1.0 - j as f64;
    let acc: Vec<f64> = (0..k)
        .map(|c| exponent * log_prior[c] + per_radar_log.iter().map(|l| l[c]).sum::<f64>())
        .collect();
    ClassProbVector::from_log_weights(&acc)
}

/// Arithmetic mean across radars.
pub fn fuse_soft(per_radar: &[ClassProbVector]) -> Result<ClassProbVector> {
    let k = common_len(per_radar)?;
    let j = per_radar.len() as f64;
    let mean: Vec<f64> = (0..k)
        .map(|c| per_radar.iter().map(|p| p.as_slice()[c]).sum::<f64>() / j)
        .collect();
    ClassProbVector::from_weights(&mean)
}

/// Unnormalised hard-voting vector: the winner gets `1 - Kε/(K+1)`, every
/// other class `ε/K`.
pub fn hard_vote_weights(k: usize, epsilon: f64, winner: usize) -> Vec<f64> {
    let kf = k as f64;
    let mut w = vec![epsilon / kf; k];
    w[winner] = 1.0 - kf * epsilon / (kf + 1.0);
    w
}

/// Modal class of the per-radar argmax votes. Ties between modal classes
/// are broken uniformly at random; `rng` is only used when there is a tie.
pub fn modal_vote<R: Rng + ?Sized>(per_radar: &[ClassProbVector], rng: &mut R) -> Result<usize> {
    let k = common_len(per_radar)?;
    let mut counts = vec![0usize; k];
    for p in per_radar {
        counts[p.argmax()] += 1;
    }
    let top = *counts.iter().max().expect("k >= 1");
    let tied: Vec<usize> = (0..k).filter(|&c| counts[c] == top).collect();
    Ok(if tied.len() == 1 {
        tied[0]
    } else {
        tied[rng.random_range(0..tied.len())]
    })
}

/// Majority vote of per-radar decisions, smoothed by `epsilon` and renormalised.
pub fn fuse_hard<R: Rng + ?Sized>(
    per_radar: &[ClassProbVector],
    epsilon: f64,
    rng: &mut R,
) -> Result<ClassProbVector> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Parameter(format!(
            "epsilon must be in (0, 1), got {epsilon}"
        )));
    }
    let k = common_len(per_radar)?;
    let winner = modal_vote(per_radar, rng)?;
    ClassProbVector::from_weights(&hard_vote_weights(k, epsilon, winner))
}

/// Per-class maximum across radars, renormalised.
pub fn fuse_max(per_radar: &[ClassProbVector]) -> Result<ClassProbVector> {
    let k = common_len(per_radar)?;
    let max: Vec<f64> = (0..k)
        .map(|c| {
            per_radar
                .iter()
                .map(|p| p.as_slice()[c])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    ClassProbVector::from_weights(&max)
}

/// One draw from the symmetric Dirichlet with concentration `1/k`, floored
/// at [`P_MIN`] like classifier outputs.
///
/// Gamma variates with shape below one are drawn in log space as
/// `ln G(a + 1) + ln(U) / a`, which never underflows.
pub fn fuse_random<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Result<ClassProbVector> {
    if k < 2 {
        return Err(Error::Parameter(format!("need k >= 2, got {k}")));
    }
    let alpha = 1.0 / k as f64;
    let gamma = Gamma::new(alpha + 1.0, 1.0).expect("shape > 0");
    let logs: Vec<f64> = (0..k)
        .map(|_| {
            let g: f64 = gamma.sample(rng);
            let u = 1.0 - rng.random::<f64>();
            g.ln() + u.ln() / alpha
        })
        .collect();
    Ok(ClassProbVector::from_log_weights(&logs)?.floored(P_MIN))
}

/// Running class posterior after `t` fused observations.
#[derive(Clone, Debug, PartialEq)]
pub struct PosteriorState {
    log_posterior: Vec<f64>,
    posterior: ClassProbVector,
    t: usize,
}

impl PosteriorState {
    /// Uniform prior at `t = 0`.
    pub fn uniform(k: usize) -> Self {
        let posterior = ClassProbVector::uniform(k);
        Self {
            log_posterior: posterior.as_slice().iter().map(|p| p.ln()).collect(),
            posterior,
            t: 0,
        }
    }

    pub fn posterior(&self) -> &ClassProbVector {
        &self.posterior
    }

    /// Normalised log posterior.
    pub fn log_posterior(&self) -> &[f64] {
        &self.log_posterior
    }

    pub fn steps(&self) -> usize {
        self.t
    }

    /// Posterior argmax, ties to the lowest class index.
    pub fn decision(&self) -> usize {
        self.posterior.argmax()
    }
}

/// `posterior ∝ fused ⊙ previous posterior`.
pub fn rbc_update(state: &PosteriorState, fused: &ClassProbVector) -> Result<PosteriorState> {
    let k = state.log_posterior.len();
    if fused.len() != k {
        return Err(Error::Shape(format!(
            "fused vector has {} classes, posterior has {k}",
            fused.len()
        )));
    }
    if fused.as_slice().iter().all(|&p| p < P_MIN) {
        return Err(Error::Numerical(
            "fused vector has every entry below the probability floor".into(),
        ));
    }
    let acc: Vec<f64> = state
        .log_posterior
        .iter()
        .zip(fused.as_slice())
        .map(|(l, p)| l + p.ln())
        .collect();
    let max = acc.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::Numerical("posterior support became empty".into()));
    }
    let lse = max + acc.iter().map(|a| (a - max).exp()).sum::<f64>().ln();
    let log_posterior: Vec<f64> = acc.iter().map(|a| a - lse).collect();
    let posterior = ClassProbVector::from_log_weights(&log_posterior)?;
    Ok(PosteriorState {
        log_posterior,
        posterior,
        t: state.t + 1,
    })
}

/// Fuses precomputed per-radar probabilities step by step and runs the
/// recursive posterior update. `per_step[t][j]` is radar `j` at step `t`.
pub fn recursive_posteriors<R: Rng + ?Sized>(
    per_step: &[Vec<ClassProbVector>],
    rule: &FusionRule,
    rng: &mut R,
) -> Result<Vec<PosteriorState>> {
    let Some(first) = per_step.first() else {
        return Ok(Vec::new());
    };
    let k = common_len(first)?;
    rule.validate(k)?;
    let mut state = PosteriorState::uniform(k);
    let mut out = Vec::with_capacity(per_step.len());
    for (t, probs) in per_step.iter().enumerate() {
        if probs.is_empty() {
            return Err(Error::Shape(format!("step {t} has no observations")));
        }
        let fused = rule.fuse(probs, rng)?;
        state = rbc_update(&state, &fused)?;
        out.push(state.clone());
    }
    Ok(out)
}

/// Classifies every radar observation, fuses each time step and runs the
/// recursive posterior update.
///
/// `steps[t][j]` is radar `j`'s observation at step `t`. `models` holds
/// either one shared classifier or one per radar. Returns the posterior after
/// each step.
pub fn classify_trajectory<R: Rng + ?Sized>(
    models: &[&dyn ProbabilisticClassifier],
    steps: &[Vec<Observation>],
    rule: &FusionRule,
    rng: &mut R,
) -> Result<Vec<PosteriorState>> {
    let first = models
        .first()
        .ok_or_else(|| Error::Input("no classifier supplied".into()))?;
    let k = first.n_classes();
    if models.iter().any(|m| m.n_classes() != k) {
        return Err(Error::Shape(
            "classifiers disagree on the number of classes".into(),
        ));
    }
    rule.validate(k)?;
    let per_step = steps
        .iter()
        .enumerate()
        .map(|(t, obs)| {
            if models.len() != 1 && models.len() != obs.len() {
                return Err(Error::Shape(format!(
                    "{} classifiers for {} radars at step {t}",
                    models.len(),
                    obs.len()
                )));
            }
            obs.iter()
                .enumerate()
                .map(|(j, x)| models[if models.len() == 1 { 0 } else { j }].predict_proba(x))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    recursive_posteriors(&per_step, rule, rng)
}
