//! Multilayer perceptron trained by mini-batch SGD with momentum.

use rand::seq::SliceRandom;

use super::{ClassifierModel, LabeledDataset, ModelKind, Network, Standardizer};
use crate::error::{Error, Result};
use crate::seed::rng_from_seed;

#[derive(Clone, Debug, PartialEq)]
pub struct MlpHyper {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub l2: f64,
    pub seed: u64,
}

impl Default for MlpHyper {
    fn default() -> Self {
        Self {
            hidden: vec![50, 50, 50],
            learning_rate: 0.01,
            momentum: 0.9,
            epochs: 60,
            batch_size: 64,
            l2: 1e-4,
            seed: 0,
        }
    }
}

pub fn train_mlp(data: &LabeledDataset, hyper: &MlpHyper) -> Result<ClassifierModel> {
    train_mlp_traced(data, hyper).map(|(m, _)| m)
}

/// Like [`train_mlp`], also returning the full-data loss after each epoch.
pub fn train_mlp_traced(
    data: &LabeledDataset,
    hyper: &MlpHyper,
) -> Result<(ClassifierModel, Vec<f64>)> {
    data.require_two_classes()?;
    if hyper.hidden.contains(&0) || hyper.batch_size == 0 {
        return Err(Error::Parameter(
            "hidden sizes and batch size must be >= 1".into(),
        ));
    }
    if !(hyper.learning_rate > 0.0) || !(0.0..1.0).contains(&hyper.momentum) || !(hyper.l2 >= 0.0) {
        return Err(Error::Parameter(
            "mlp needs learning_rate > 0, momentum in [0, 1), l2 >= 0".into(),
        ));
    }
    let standardizer = Standardizer::fit(data.rows());
    let rows: Vec<Vec<f64>> = data
        .rows()
        .iter()
        .map(|r| standardizer.transform(r))
        .collect();
    let labels = data.labels();

    let mut sizes = vec![data.n_features()];
    sizes.extend(&hyper.hidden);
    sizes.push(data.n_classes());

    let mut rng = rng_from_seed(hyper.seed);
    let mut net = Network::random(&sizes, &mut rng);
    let mut params = net.params();
    let mut velocity = vec![0.0; params.len()];
    let mut order: Vec<usize> = (0..rows.len()).collect();
    let all: Vec<usize> = order.clone();
    let mut history = Vec::with_capacity(hyper.epochs);

    for epoch in 0..hyper.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(hyper.batch_size) {
            let (loss, grad) = net.loss_and_grad(&rows, labels, batch, hyper.l2);
            if !loss.is_finite() {
                return Err(Error::Training(format!(
                    "mlp loss became {loss} during epoch {epoch}"
                )));
            }
            for ((p, v), g) in params.iter_mut().zip(&mut velocity).zip(&grad) {
                *v = hyper.momentum * *v - hyper.learning_rate * g;
                *p += *v;
            }
            net.set_params(&params);
        }
        let loss = net.loss(&rows, labels, &all, hyper.l2);
        if !loss.is_finite() {
            return Err(Error::Training(format!(
                "mlp loss became {loss} after epoch {epoch}"
            )));
        }
        history.push(loss);
    }
    let model = ClassifierModel::new(ModelKind::Mlp, data.include_angles(), standardizer, net)?;
    Ok((model, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::{train_logreg, LogRegHyper};
    use crate::seed::rng_from_seed;
    use rand::Rng;

    fn xor(n_per_cluster: usize, seed: u64) -> LabeledDataset {
        let mut rng = rng_from_seed(seed);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (cx, cy, c) in [
            (1.0, 1.0, 0),
            (-1.0, -1.0, 0),
            (1.0, -1.0, 1),
            (-1.0, 1.0, 1),
        ] {
            for _ in 0..n_per_cluster {
                rows.push(vec![
                    cx + rng.random_range(-0.3..0.3),
                    cy + rng.random_range(-0.3..0.3),
                ]);
                labels.push(c);
            }
        }
        LabeledDataset::from_rows(rows, labels, 2).unwrap()
    }

    #[test]
    fn learns_xor_where_logreg_cannot() {
        let data = xor(50, 1);
        let hyper = MlpHyper {
            epochs: 100,
            batch_size: 16,
            ..Default::default()
        };
        let mlp = train_mlp(&data, &hyper).unwrap();
        assert!(mlp.accuracy(&data).unwrap() >= 0.95);
        let lr = train_logreg(&data, &LogRegHyper::default()).unwrap();
        assert!(lr.accuracy(&data).unwrap() <= 0.6);
    }

    #[test]
    fn training_is_deterministic() {
        let data = xor(10, 2);
        let hyper = MlpHyper {
            hidden: vec![8, 8],
            epochs: 5,
            ..Default::default()
        };
        let a = train_mlp(&data, &hyper).unwrap();
        let b = train_mlp(&data, &hyper).unwrap();
        assert_eq!(a, b);
        let c = train_mlp(&data, &MlpHyper { seed: 1, ..hyper }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn divergence_is_reported() {
        let data = xor(10, 3);
        let hyper = MlpHyper {
            hidden: vec![8],
            learning_rate: 1e300,
            momentum: 0.0,
            epochs: 20,
            ..Default::default()
        };
        assert!(matches!(train_mlp(&data, &hyper), Err(Error::Training(_))));
    }
}
