//! Desk-scale SGD harness for the H-Softmax head and a flat softmax
//! baseline trained under the same schedule.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{derive_codes, log_probs_from_scores, node_scores, sigmoid, NodeParams, SignBias};
use crate::embedding::dot;
use crate::error::{Error, Result};
use crate::tree::VocabTree;

/// A labelled input vector; `label` is a token id.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub features: Vec<f64>,
    pub label: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Standard deviation of the initial parameters.
    pub init_scale: f64,
    /// Append a constant 1 to every input so each node has an offset.
    pub bias: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.1,
            epochs: 20,
            seed: 0,
            init_scale: 0.01,
            bias: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutcome {
    pub params: NodeParams,
    /// Argmax-decoding accuracy on the training set after training.
    pub accuracy: f64,
    /// Mean loss of each epoch.
    pub epoch_losses: Vec<f64>,
}

fn hidden_state(features: &[f64], bias: bool) -> Vec<f64> {
    let mut h = features.to_vec();
    if bias {
        h.push(1.0);
    }
    h
}

fn validate(data: &[Sample], classes: usize, config: &TrainConfig) -> Result<usize> {
    let first = data
        .first()
        .ok_or_else(|| Error::InvalidConfig("empty dataset".into()))?;
    let dim = first.features.len();
    for s in data {
        if s.label >= classes {
            return Err(Error::UnknownToken(s.label));
        }
        if s.features.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: s.features.len(),
            });
        }
    }
    if !(config.learning_rate > 0.0 && config.learning_rate.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "learning rate {} must be positive",
            config.learning_rate
        )));
    }
    if !(config.init_scale >= 0.0 && config.init_scale.is_finite()) {
        return Err(Error::InvalidConfig(format!("init scale {}", config.init_scale)));
    }
    Ok(dim + usize::from(config.bias))
}

fn init(rows: usize, hidden: usize, scale: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    (0..rows * hidden).map(|_| scale * normal.sample(rng)).collect()
}

/// Index of the largest value, ties to the lowest index.
fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Most probable token under the vectorized log-probabilities.
pub fn predict(h: &[f64], params: &NodeParams, sb: &SignBias) -> usize {
    argmax(&log_probs_from_scores(&node_scores(h, params), sb))
}

/// Fraction of samples whose predicted token equals the label.
pub fn accuracy(data: &[Sample], params: &NodeParams, sb: &SignBias, bias: bool) -> f64 {
    let hits = data
        .iter()
        .filter(|s| predict(&hidden_state(&s.features, bias), params, sb) == s.label)
        .count();
    hits as f64 / data.len() as f64
}

/// Train the node vectors of `tree` with per-sample SGD on the negative
/// log-likelihood. The visiting order is reshuffled every epoch from
/// `config.seed`, so a run is reproducible bit for bit.
pub fn train_toy(data: &[Sample], tree: &VocabTree, config: &TrainConfig) -> Result<TrainOutcome> {
    let hidden = validate(data, tree.num_tokens(), config)?;
    let codes = derive_codes(tree);
    let sb = SignBias::from_codes(&codes);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let rows = tree.num_internal();
    let mut params = NodeParams::from_flat(rows, hidden, init(rows, hidden, config.init_scale, &mut rng))?;
    let inputs: Vec<Vec<f64>> = data.iter().map(|s| hidden_state(&s.features, config.bias)).collect();
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for &i in &order {
            let h = &inputs[i];
            let label = data[i].label;
            for (&right, &node) in codes.code(label).iter().zip(codes.path_nodes(label)) {
                let r = params.row_mut(node);
                let x = dot(r, h);
                let s = sigmoid(x);
                let g = if right {
                    total += super::softplus(x);
                    s
                } else {
                    total += super::softplus(-x);
                    s - 1.0
                };
                for (rv, hv) in r.iter_mut().zip(h) {
                    *rv -= config.learning_rate * g * hv;
                }
            }
        }
        epoch_losses.push(total / data.len() as f64);
    }
    let accuracy = accuracy(data, &params, &sb, config.bias);
    Ok(TrainOutcome {
        params,
        accuracy,
        epoch_losses,
    })
}

/// Multinomial logistic regression, the flat-softmax reference.
#[derive(Clone, Debug, PartialEq)]
pub struct FlatSoftmax {
    pub classes: usize,
    pub hidden: usize,
    /// Row-major `classes x hidden`.
    pub weights: Vec<f64>,
    pub accuracy: f64,
    pub epoch_losses: Vec<f64>,
}

impl FlatSoftmax {
    fn logits(&self, h: &[f64]) -> Vec<f64> {
        self.weights.chunks_exact(self.hidden).map(|w| dot(w, h)).collect()
    }

    pub fn predict(&self, features: &[f64], bias: bool) -> usize {
        argmax(&self.logits(&hidden_state(features, bias)))
    }
}

/// Train a flat softmax over `classes` outputs with the same SGD schedule,
/// initialization and shuffling as [`train_toy`].
pub fn train_flat_softmax(data: &[Sample], classes: usize, config: &TrainConfig) -> Result<FlatSoftmax> {
    let hidden = validate(data, classes, config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = FlatSoftmax {
        classes,
        hidden,
        weights: init(classes, hidden, config.init_scale, &mut rng),
        accuracy: 0.0,
        epoch_losses: Vec::with_capacity(config.epochs),
    };
    let inputs: Vec<Vec<f64>> = data.iter().map(|s| hidden_state(&s.features, config.bias)).collect();
    let mut order: Vec<usize> = (0..data.len()).collect();
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for &i in &order {
            let h = &inputs[i];
            let logits = model.logits(h);
            let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = logits.iter().map(|l| (l - max).exp()).sum();
            total += max + z.ln() - logits[data[i].label];
            for (c, w) in model.weights.chunks_exact_mut(hidden).enumerate() {
                let p = (logits[c] - max).exp() / z;
                let g = p - f64::from(u8::from(c == data[i].label));
                for (wv, hv) in w.iter_mut().zip(h) {
                    *wv -= config.learning_rate * g * hv;
                }
            }
        }
        model.epoch_losses.push(total / data.len() as f64);
    }
    let hits = data
        .iter()
        .filter(|s| model.predict(&s.features, config.bias) == s.label)
        .count();
    model.accuracy = hits as f64 / data.len() as f64;
    Ok(model)
}

/// Synthetic classification data: one Gaussian blob per class.
#[derive(Clone, Debug, PartialEq)]
pub struct BlobConfig {
    /// Samples drawn for each class; the class count is its length.
    pub class_sizes: Vec<usize>,
    pub dim: usize,
    /// Standard deviation of the class centres around the origin.
    pub centre_scale: f64,
    /// Standard deviation of samples around their class centre.
    pub spread: f64,
    pub seed: u64,
}

impl BlobConfig {
    /// `samples` split as evenly as possible over `classes`.
    pub fn uniform(classes: usize, samples: usize, dim: usize, seed: u64) -> Self {
        BlobConfig {
            class_sizes: split_evenly(samples, &vec![1.0; classes]),
            dim,
            centre_scale: 1.0,
            spread: 0.1,
            seed,
        }
    }

    /// `samples` split proportionally to `weights` (largest remainder, at
    /// least one sample per class).
    pub fn weighted(weights: &[f64], samples: usize, dim: usize, seed: u64) -> Self {
        BlobConfig {
            class_sizes: split_evenly(samples, weights),
            ..BlobConfig::uniform(weights.len(), samples, dim, seed)
        }
    }
}

fn split_evenly(samples: usize, weights: &[f64]) -> Vec<usize> {
    let k = weights.len();
    assert!(k > 0 && samples >= k, "need at least one sample per class");
    let spare = (samples - k) as f64;
    let total: f64 = weights.iter().sum();
    let exact: Vec<f64> = weights.iter().map(|w| spare * w / total).collect();
    let mut sizes: Vec<usize> = exact.iter().map(|e| 1 + e.floor() as usize).collect();
    let mut left = samples - sizes.iter().sum::<usize>();
    let mut by_remainder: Vec<usize> = (0..k).collect();
    by_remainder.sort_by(|&a, &b| {
        (exact[b] - exact[b].floor())
            .total_cmp(&(exact[a] - exact[a].floor()))
            .then(a.cmp(&b))
    });
    for &c in by_remainder.iter().cycle() {
        if left == 0 {
            break;
        }
        sizes[c] += 1;
        left -= 1;
    }
    sizes
}

/// Draw the blobs. Returns the samples (class by class) and the centres.
pub fn gaussian_blobs(config: &BlobConfig) -> (Vec<Sample>, Vec<Vec<f64>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let centres: Vec<Vec<f64>> = (0..config.class_sizes.len())
        .map(|_| (0..config.dim).map(|_| config.centre_scale * unit.sample(&mut rng)).collect())
        .collect();
    let mut samples = Vec::with_capacity(config.class_sizes.iter().sum());
    for (label, (&n, centre)) in config.class_sizes.iter().zip(&centres).enumerate() {
        for _ in 0..n {
            let features = centre
                .iter()
                .map(|c| c + config.spread * unit.sample(&mut rng))
                .collect();
            samples.push(Sample { features, label });
        }
    }
    (samples, centres)
}
