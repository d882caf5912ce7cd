//! Per-radar probabilistic classifiers.
//!
//! Both model kinds are feed-forward networks over standardized features
//! with a softmax output: logistic regression has no hidden layer, the MLP
//! has leaky-rectifier hidden layers. Any other model can take part in
//! fusion by implementing [`ProbabilisticClassifier`].

mod logreg;
mod mlp;
mod network;
mod persist;

pub use logreg::{train_logreg, train_logreg_traced, LogRegHyper};
pub use mlp::{train_mlp, train_mlp_traced, MlpHyper};
pub use network::{DenseLayer, Network, LEAKY_SLOPE};
pub use persist::{load_model, save_model};

use crate::error::{Error, Result};

/// Probability floor applied to every classifier output.
pub const P_MIN: f64 = 1e-9;

/// Normalisation tolerance for [`ClassProbVector`].
pub const SUM_TOLERANCE: f64 = 1e-9;

/// One radar's noisy measurement at one time step.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub rcs_dbsm: Vec<f64>,
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
}

impl Observation {
    pub fn new(rcs_dbsm: Vec<f64>, azimuth_deg: f64, elevation_deg: f64) -> Result<Self> {
        let obs = Self {
            rcs_dbsm,
            azimuth_deg,
            elevation_deg,
        };
        if !obs.is_finite() {
            return Err(Error::Input("observation has non-finite entries".into()));
        }
        Ok(obs)
    }

    pub fn is_finite(&self) -> bool {
        self.rcs_dbsm.iter().all(|v| v.is_finite())
            && self.azimuth_deg.is_finite()
            && self.elevation_deg.is_finite()
    }

    /// `[σ(1..F), φ, θ]`, or just `σ` when angles are masked out.
    pub fn features(&self, include_angles: bool) -> Vec<f64> {
        let mut x = self.rcs_dbsm.clone();
        if include_angles {
            x.push(self.azimuth_deg);
            x.push(self.elevation_deg);
        }
        x
    }
}

/// A probability vector over the K classes.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassProbVector(Vec<f64>);

impl ClassProbVector {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Input("empty probability vector".into()));
        }
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Input(format!(
                "probabilities outside [0, 1]: {probs:?}"
            )));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::Input(format!("probabilities sum to {sum}")));
        }
        Ok(Self(probs))
    }

    pub fn uniform(k: usize) -> Self {
        Self(vec![1.0 / k as f64; k])
    }

    /// Normalises non-negative weights.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::Input(format!("invalid weights {weights:?}")));
        }
        let sum: f64 = weights.iter().sum();
        if !(sum > 0.0) {
            return Err(Error::Numerical("weights sum to zero".into()));
        }
        Ok(Self(weights.iter().map(|w| w / sum).collect()))
    }

    /// Normalises log-weights with a single max subtraction. `-inf` entries
    /// map to zero probability.
    pub fn from_log_weights(logw: &[f64]) -> Result<Self> {
        let max = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() || logw.iter().any(|l| l.is_nan()) {
            return Err(Error::Numerical(format!("degenerate log-weights {logw:?}")));
        }
        let w: Vec<f64> = logw.iter().map(|l| (l - max).exp()).collect();
        let sum: f64 = w.iter().sum();
        Ok(Self(w.into_iter().map(|v| v / sum).collect()))
    }

    /// Raises every entry to at least `floor` and renormalises.
    pub fn floored(&self, floor: f64) -> Self {
        let w: Vec<f64> = self.0.iter().map(|p| p.max(floor)).collect();
        let sum: f64 = w.iter().sum();
        Self(w.into_iter().map(|v| v / sum).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Index of the largest entry; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        argmax(&self.0)
    }
}

pub(crate) fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// Feature rows with class labels.
///
/// `include_angles` records whether rows built from observations carry the
/// two angle columns; it is carried into trained models so that
/// [`ClassifierModel::predict_proba`] extracts matching features.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    rows: Vec<Vec<f64>>,
    labels: Vec<usize>,
    n_classes: usize,
    include_angles: bool,
}

impl LabeledDataset {
    pub fn from_rows(rows: Vec<Vec<f64>>, labels: Vec<usize>, n_classes: usize) -> Result<Self> {
        Self::build(rows, labels, n_classes, true)
    }

    pub fn from_observations(
        observations: &[Observation],
        labels: Vec<usize>,
        n_classes: usize,
        include_angles: bool,
    ) -> Result<Self> {
        let rows = observations
            .iter()
            .map(|o| o.features(include_angles))
            .collect();
        Self::build(rows, labels, n_classes, include_angles)
    }

    fn build(
        rows: Vec<Vec<f64>>,
        labels: Vec<usize>,
        n_classes: usize,
        include_angles: bool,
    ) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Input("dataset is empty".into()));
        }
        if rows.len() != labels.len() {
            return Err(Error::Shape(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        if n_classes < 2 {
            return Err(Error::Parameter(format!(
                "need K >= 2 classes, got {n_classes}"
            )));
        }
        let d = rows[0].len();
        if d == 0 {
            return Err(Error::Shape("rows have no features".into()));
        }
        for (i, r) in rows.iter().enumerate() {
            if r.len() != d {
                return Err(Error::Shape(format!(
                    "row {i} has {} features, expected {d}",
                    r.len()
                )));
            }
            if r.iter().any(|v| !v.is_finite()) {
                return Err(Error::Input(format!("row {i} has non-finite features")));
            }
        }
        if let Some(bad) = labels.iter().find(|&&c| c >= n_classes) {
            return Err(Error::Range {
                what: "class label",
                index: *bad,
                len: n_classes,
            });
        }
        Ok(Self {
            rows,
            labels,
            n_classes,
            include_angles,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.rows[0].len()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn include_angles(&self) -> bool {
        self.include_angles
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &c in &self.labels {
            counts[c] += 1;
        }
        counts
    }

    pub(crate) fn require_two_classes(&self) -> Result<()> {
        let present = self.class_counts().iter().filter(|&&n| n > 0).count();
        if present < 2 {
            return Err(Error::Input(format!(
                "training needs at least 2 classes present, found {present}"
            )));
        }
        Ok(())
    }
}

/// Per-feature z-score statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    /// Population statistics; zero-variance features get `std = 1`.
    pub fn fit(rows: &[Vec<f64>]) -> Self {
        let d = rows[0].len();
        let n = rows.len() as f64;
        let mut mean = vec![0.0; d];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for r in rows {
            for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 1e-12 && sd.is_finite() {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, std }
    }

    pub fn identity(d: usize) -> Self {
        Self {
            mean: vec![0.0; d],
            std: vec![1.0; d],
        }
    }

    pub fn transform(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    LogReg,
    Mlp,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::LogReg => "logreg",
            ModelKind::Mlp => "mlp",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logreg" => Ok(ModelKind::LogReg),
            "mlp" => Ok(ModelKind::Mlp),
            other => Err(Error::Config(format!(
                "unknown model {other:?} (logreg | mlp)"
            ))),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Anything that maps one radar observation to class probabilities.
pub trait ProbabilisticClassifier: Send + Sync {
    fn n_classes(&self) -> usize;
    fn predict_proba(&self, x: &Observation) -> Result<ClassProbVector>;
}

/// A trained network plus its input standardisation.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassifierModel {
    kind: ModelKind,
    include_angles: bool,
    standardizer: Standardizer,
    network: Network,
}

impl ClassifierModel {
    pub fn new(
        kind: ModelKind,
        include_angles: bool,
        standardizer: Standardizer,
        network: Network,
    ) -> Result<Self> {
        if standardizer.mean.len() != network.n_inputs()
            || standardizer.std.len() != network.n_inputs()
        {
            return Err(Error::Shape(format!(
                "standardizer has {} features, network expects {}",
                standardizer.mean.len(),
                network.n_inputs()
            )));
        }
        if standardizer.std.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::Input("standardization stds must be > 0".into()));
        }
        if network.n_outputs() < 2 {
            return Err(Error::Shape("model needs at least 2 outputs".into()));
        }
        Ok(Self {
            kind,
            include_angles,
            standardizer,
            network,
        })
    }

    /// Zero-weight logistic regression: predicts the uniform vector.
    pub fn zero_logreg(n_features: usize, n_classes: usize, include_angles: bool) -> Result<Self> {
        Self::new(
            ModelKind::LogReg,
            include_angles,
            Standardizer::identity(n_features),
            Network::zeros(&[n_features, n_classes]),
        )
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn include_angles(&self) -> bool {
        self.include_angles
    }

    pub fn n_features(&self) -> usize {
        self.network.n_inputs()
    }

    pub fn n_classes(&self) -> usize {
        self.network.n_outputs()
    }

    pub fn standardizer(&self) -> &Standardizer {
        &self.standardizer
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    /// Class probabilities for a raw (unstandardised) feature row.
    pub fn predict_proba_features(&self, x: &[f64]) -> Result<ClassProbVector> {
        if x.len() != self.n_features() {
            return Err(Error::Shape(format!(
                "got {} features, model expects {}",
                x.len(),
                self.n_features()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("non-finite feature".into()));
        }
        let p = self.network.predict(&self.standardizer.transform(x));
        Ok(ClassProbVector(p).floored(P_MIN))
    }

    pub fn predict_proba(&self, x: &Observation) -> Result<ClassProbVector> {
        self.predict_proba_features(&x.features(self.include_angles))
    }

    /// Fraction of rows whose argmax matches the label.
    pub fn accuracy(&self, data: &LabeledDataset) -> Result<f64> {
        let mut hits = 0usize;
        for (x, &y) in data.rows().iter().zip(data.labels()) {
            if self.predict_proba_features(x)?.argmax() == y {
                hits += 1;
            }
        }
        Ok(hits as f64 / data.len() as f64)
    }
}

impl ProbabilisticClassifier for ClassifierModel {
    fn n_classes(&self) -> usize {
        ClassifierModel::n_classes(self)
    }

    fn predict_proba(&self, x: &Observation) -> Result<ClassProbVector> {
        ClassifierModel::predict_proba(self, x)
    }
}

/// Free-function form of [`ClassifierModel::predict_proba`].
pub fn predict_proba(model: &ClassifierModel, x: &Observation) -> Result<ClassProbVector> {
    model.predict_proba(x)
}
