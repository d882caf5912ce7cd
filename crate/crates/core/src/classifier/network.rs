//! Dense feed-forward network with softmax output and cross-entropy loss.

use rand::Rng;
use rand_distr::StandardNormal;

/// Negative-side slope of the hidden-layer activation.
pub const LEAKY_SLOPE: f64 = 0.01;

#[derive(Clone, Debug, PartialEq)]
pub struct DenseLayer {
    pub n_in: usize,
    pub n_out: usize,
    /// Row-major `n_out x n_in`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    pub fn zeros(n_in: usize, n_out: usize) -> Self {
        Self {
            n_in,
            n_out,
            weights: vec![0.0; n_in * n_out],
            bias: vec![0.0; n_out],
        }
    }

    fn affine(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for o in 0..self.n_out {
            let row = &self.weights[o * self.n_in..(o + 1) * self.n_in];
            out.push(self.bias[o] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>());
        }
    }
}

/// Hidden layers use a leaky rectifier; the last layer produces logits.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    layers: Vec<DenseLayer>,
}

fn leaky(z: f64) -> f64 {
    if z > 0.0 {
        z
    } else {
        LEAKY_SLOPE * z
    }
}

fn leaky_grad(z: f64) -> f64 {
    if z > 0.0 {
        1.0
    } else {
        LEAKY_SLOPE
    }
}

pub(crate) fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

fn log_softmax_at(logits: &[f64], y: usize) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    logits[y] - lse
}

impl Network {
    /// `sizes = [inputs, hidden..., outputs]`.
    pub fn zeros(sizes: &[usize]) -> Self {
        assert!(sizes.len() >= 2, "network needs input and output sizes");
        Self {
            layers: sizes
                .windows(2)
                .map(|w| DenseLayer::zeros(w[0], w[1]))
                .collect(),
        }
    }

    /// He-normal weights, zero biases.
    pub fn random<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Self {
        let mut net = Self::zeros(sizes);
        for layer in &mut net.layers {
            let scale = (2.0 / layer.n_in as f64).sqrt();
            for w in &mut layer.weights {
                *w = scale * rng.sample::<f64, _>(StandardNormal);
            }
        }
        net
    }

    pub fn from_layers(layers: Vec<DenseLayer>) -> Option<Self> {
        if layers.is_empty() {
            return None;
        }
        let consistent = layers.windows(2).all(|w| w[0].n_out == w[1].n_in)
            && layers
                .iter()
                .all(|l| l.weights.len() == l.n_in * l.n_out && l.bias.len() == l.n_out);
        consistent.then_some(Self { layers })
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn n_inputs(&self) -> usize {
        self.layers[0].n_in
    }

    pub fn n_outputs(&self) -> usize {
        self.layers[self.layers.len() - 1].n_out
    }

    pub fn n_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    /// Layer by layer: weights then biases.
    pub fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.n_params());
        for l in &self.layers {
            p.extend_from_slice(&l.weights);
            p.extend_from_slice(&l.bias);
        }
        p
    }

    pub fn set_params(&mut self, p: &[f64]) {
        assert_eq!(p.len(), self.n_params(), "parameter vector length");
        let mut at = 0;
        for l in &mut self.layers {
            let nw = l.weights.len();
            l.weights.copy_from_slice(&p[at..at + nw]);
            at += nw;
            let nb = l.bias.len();
            l.bias.copy_from_slice(&p[at..at + nb]);
            at += nb;
        }
    }

    pub fn logits(&self, x: &[f64]) -> Vec<f64> {
        let mut a = x.to_vec();
        let mut z = Vec::new();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            layer.affine(&a, &mut z);
            if i < last {
                a.clear();
                a.extend(z.iter().map(|&v| leaky(v)));
            }
        }
        z
    }

    pub fn predict(&self, x: &[f64]) -> Vec<f64> {
        softmax(&self.logits(x))
    }

    /// Mean cross-entropy over `idx` plus `l2 / 2 * ||W||²` (weights only).
    pub fn loss(&self, rows: &[Vec<f64>], labels: &[usize], idx: &[usize], l2: f64) -> f64 {
        let ce: f64 = idx
            .iter()
            .map(|&i| -log_softmax_at(&self.logits(&rows[i]), labels[i]))
            .sum::<f64>()
            / idx.len() as f64;
        ce + 0.5 * l2 * self.weight_sq_norm()
    }

    fn weight_sq_norm(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter())
            .map(|w| w * w)
            .sum()
    }

    /// Loss and gradient (flattened like [`Network::params`]) by backprop.
    pub fn loss_and_grad(
        &self,
        rows: &[Vec<f64>],
        labels: &[usize],
        idx: &[usize],
        l2: f64,
    ) -> (f64, Vec<f64>) {
        let n_layers = self.layers.len();
        let mut grads: Vec<DenseLayer> = self
            .layers
            .iter()
            .map(|l| DenseLayer::zeros(l.n_in, l.n_out))
            .collect();
        let mut ce = 0.0;

        let mut acts: Vec<Vec<f64>> = vec![Vec::new(); n_layers + 1];
        let mut pre: Vec<Vec<f64>> = vec![Vec::new(); n_layers];
        for &i in idx {
            acts[0].clear();
            acts[0].extend_from_slice(&rows[i]);
            for (l, layer) in self.layers.iter().enumerate() {
                let mut z = std::mem::take(&mut pre[l]);
                layer.affine(&acts[l], &mut z);
                let next = &mut acts[l + 1];
                next.clear();
                if l + 1 < n_layers {
                    next.extend(z.iter().map(|&v| leaky(v)));
                } else {
                    next.extend_from_slice(&z);
                }
                pre[l] = z;
            }
            let logits = &pre[n_layers - 1];
            let y = labels[i];
            ce -= log_softmax_at(logits, y);

            let mut delta = softmax(logits);
            delta[y] -= 1.0;
            for l in (0..n_layers).rev() {
                let layer = &self.layers[l];
                let g = &mut grads[l];
                let input = &acts[l];
                for (o, &d) in delta.iter().enumerate() {
                    g.bias[o] += d;
                    let row = &mut g.weights[o * layer.n_in..(o + 1) * layer.n_in];
                    for (gw, a) in row.iter_mut().zip(input) {
                        *gw += d * a;
                    }
                }
                if l > 0 {
                    let z_prev = &pre[l - 1];
                    let mut back = vec![0.0; layer.n_in];
                    for (o, &d) in delta.iter().enumerate() {
                        let row = &layer.weights[o * layer.n_in..(o + 1) * layer.n_in];
                        for (b, w) in back.iter_mut().zip(row) {
                            *b += w * d;
                        }
                    }
                    for (b, z) in back.iter_mut().zip(z_prev) {
                        *b *= leaky_grad(*z);
                    }
                    delta = back;
                }
            }
        }

        let n = idx.len() as f64;
        let mut flat = Vec::with_capacity(self.n_params());
        for (g, layer) in grads.iter().zip(&self.layers) {
            flat.extend(
                g.weights
                    .iter()
                    .zip(&layer.weights)
                    .map(|(gw, w)| gw / n + l2 * w),
            );
            flat.extend(g.bias.iter().map(|gb| gb / n));
        }
        (ce / n + 0.5 * l2 * self.weight_sq_norm(), flat)
    }
}
