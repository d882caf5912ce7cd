//! Multinomial logistic regression by full-batch gradient descent.

use super::{ClassifierModel, LabeledDataset, ModelKind, Network, Standardizer};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct LogRegHyper {
    /// Requested step size. The effective step is capped at `1 / L`, where
    /// `L` bounds the curvature of the loss, so every epoch is a descent step.
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
}

impl Default for LogRegHyper {
    fn default() -> Self {
        Self {
            learning_rate: 1.0,
            epochs: 500,
            l2: 1e-4,
        }
    }
}

pub fn train_logreg(data: &LabeledDataset, hyper: &LogRegHyper) -> Result<ClassifierModel> {
    train_logreg_traced(data, hyper).map(|(m, _)| m)
}

/// Like [`train_logreg`], also returning the loss before every epoch and
/// after the last one (`epochs + 1` values).
pub fn train_logreg_traced(
    data: &LabeledDataset,
    hyper: &LogRegHyper,
) -> Result<(ClassifierModel, Vec<f64>)> {
    data.require_two_classes()?;
    if !(hyper.learning_rate > 0.0) || !(hyper.l2 >= 0.0) {
        return Err(Error::Parameter(
            "logreg needs learning_rate > 0 and l2 >= 0".into(),
        ));
    }
    let standardizer = Standardizer::fit(data.rows());
    let rows: Vec<Vec<f64>> = data
        .rows()
        .iter()
        .map(|r| standardizer.transform(r))
        .collect();
    let labels = data.labels();
    let idx: Vec<usize> = (0..rows.len()).collect();

    // softmax cross-entropy has Hessian bounded by 1/2 * E[x xᵀ] (bias included)
    let mean_sq_norm = rows
        .iter()
        .map(|r| 1.0 + r.iter().map(|v| v * v).sum::<f64>())
        .sum::<f64>()
        / rows.len() as f64;
    let curvature = 0.5 * mean_sq_norm + hyper.l2;
    let step = hyper.learning_rate.min(1.0 / curvature);

    let mut net = Network::zeros(&[data.n_features(), data.n_classes()]);
    let mut params = net.params();
    let mut history = Vec::with_capacity(hyper.epochs + 1);
    for _ in 0..hyper.epochs {
        let (loss, grad) = net.loss_and_grad(&rows, labels, &idx, hyper.l2);
        if !loss.is_finite() {
            return Err(Error::Training(format!("logreg loss became {loss}")));
        }
        history.push(loss);
        for (p, g) in params.iter_mut().zip(&grad) {
            *p -= step * g;
        }
        net.set_params(&params);
    }
    let final_loss = net.loss(&rows, labels, &idx, hyper.l2);
    if !final_loss.is_finite() {
        return Err(Error::Training(format!("logreg loss became {final_loss}")));
    }
    history.push(final_loss);
    let model = ClassifierModel::new(ModelKind::LogReg, data.include_angles(), standardizer, net)?;
    Ok((model, history))
}
