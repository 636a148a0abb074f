use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::activation::Activation;
use crate::irt::logistic;
use crate::rng::rng_from_seed;
use crate::{ClassLabel, Error, Result};

pub const MODEL_SCHEMA_VERSION: u32 = 1;

/// Optimisation settings shared by every training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Mini-batch size; 0 means full-batch gradient descent.
    pub batch_size: usize,
    /// Stop once the best epoch loss has improved by less than
    /// `min_improvement` over this many epochs.
    pub patience: usize,
    pub min_improvement: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 200,
            batch_size: 32,
            patience: 10,
            min_improvement: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub activation: Activation,
    pub learning_rate: f64,
    /// 0 gives plain logistic regression.
    pub hidden_units: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub class: ClassLabel,
    /// Probability of class 2.
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub epochs_run: usize,
    pub seed: u64,
    pub final_loss: f64,
    pub batch_size: usize,
}

/// A trained network together with the input standardisation it was fitted
/// with. `hidden_weights` is row-major, `hidden_units x n_features`; with no
/// hidden layer `output_weights` applies directly to the inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub schema_version: u32,
    pub hyperparameters: Hyperparameters,
    pub n_features: usize,
    pub feature_mean: Vec<f64>,
    pub feature_scale: Vec<f64>,
    pub hidden_weights: Vec<f64>,
    pub hidden_bias: Vec<f64>,
    pub output_weights: Vec<f64>,
    pub output_bias: f64,
    pub training: TrainingMeta,
}

struct Scratch {
    x: Vec<f64>,
    z: Vec<f64>,
    a: Vec<f64>,
}

impl TrainedModel {
    fn scratch(&self) -> Scratch {
        let h = self.hyperparameters.hidden_units;
        Scratch {
            x: vec![0.0; self.n_features],
            z: vec![0.0; h],
            a: vec![0.0; h],
        }
    }

    /// Output logit for an already standardised input held in `s.x`.
    fn logit(&self, s: &mut Scratch) -> f64 {
        let h = self.hyperparameters.hidden_units;
        if h == 0 {
            return dot(&self.output_weights, &s.x) + self.output_bias;
        }
        let d = self.n_features;
        for j in 0..h {
            s.z[j] = dot(&self.hidden_weights[j * d..(j + 1) * d], &s.x) + self.hidden_bias[j];
        }
        self.hyperparameters.activation.forward(&s.z, &mut s.a);
        dot(&self.output_weights, &s.a) + self.output_bias
    }

    fn standardize_into(&self, features: &[f64], out: &mut [f64]) {
        for (k, o) in out.iter_mut().enumerate() {
            *o = (features[k] - self.feature_mean[k]) / self.feature_scale[k];
        }
    }

    /// Class 2 iff the score is at least 0.5.
    pub fn predict(&self, features: &[f64]) -> Result<Prediction> {
        if features.len() != self.n_features {
            return Err(Error::FeatureLength {
                expected: self.n_features,
                got: features.len(),
            });
        }
        let mut s = self.scratch();
        self.standardize_into(features, &mut s.x);
        let score = logistic(self.logit(&mut s));
        let class = if score >= 0.5 { ClassLabel::Class2 } else { ClassLabel::Class1 };
        Ok(Prediction { class, score })
    }

    pub fn predict_batch(&self, rows: &[Vec<f64>]) -> Result<Vec<Prediction>> {
        rows.iter().map(|r| self.predict(r)).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::json("model", e))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: TrainedModel = serde_json::from_str(s).map_err(|e| Error::json("model", e))?;
        if m.schema_version != MODEL_SCHEMA_VERSION {
            return Err(Error::Classifier(format!("unsupported model schema version {}", m.schema_version)));
        }
        let h = m.hyperparameters.hidden_units;
        let width = if h == 0 { m.n_features } else { h };
        if m.feature_mean.len() != m.n_features
            || m.feature_scale.len() != m.n_features
            || m.hidden_weights.len() != h * m.n_features
            || m.hidden_bias.len() != h
            || m.output_weights.len() != width
        {
            return Err(Error::Classifier("model weight shapes are inconsistent".into()));
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Binary cross-entropy of a logit against target `y`, without overflow.
fn bce(logit: f64, y: f64) -> f64 {
    logit.max(0.0) + (-logit.abs()).exp().ln_1p() - y * logit
}

fn target(label: ClassLabel) -> f64 {
    match label {
        ClassLabel::Class1 => 0.0,
        ClassLabel::Class2 => 1.0,
    }
}

fn standardizer(rows: &[Vec<f64>], d: usize) -> (Vec<f64>, Vec<f64>) {
    let n = rows.len() as f64;
    let mean: Vec<f64> = (0..d).map(|k| rows.iter().map(|r| r[k]).sum::<f64>() / n).collect();
    let scale = (0..d)
        .map(|k| {
            let var = rows.iter().map(|r| (r[k] - mean[k]).powi(2)).sum::<f64>() / n;
            if var > 0.0 {
                var.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    (mean, scale)
}

/// Trains one network with mini-batch gradient descent on binary
/// cross-entropy. Weights use Glorot-uniform initialisation.
pub fn train_network(
    rows: &[Vec<f64>],
    labels: &[ClassLabel],
    hp: Hyperparameters,
    config: &TrainConfig,
    seed: u64,
) -> Result<TrainedModel> {
    if rows.is_empty() || rows.len() != labels.len() {
        return Err(Error::Classifier(format!(
            "need matching non-empty rows and labels, got {} and {}",
            rows.len(),
            labels.len()
        )));
    }
    if !(hp.learning_rate > 0.0 && hp.learning_rate.is_finite()) {
        return Err(Error::Classifier(format!("invalid learning rate {}", hp.learning_rate)));
    }
    let d = rows[0].len();
    if let Some(bad) = rows.iter().find(|r| r.len() != d) {
        return Err(Error::FeatureLength { expected: d, got: bad.len() });
    }
    let h = hp.hidden_units;
    let width = if h == 0 { d } else { h };
    let mut rng = rng_from_seed(seed);
    let (mean, scale) = standardizer(rows, d);

    let glorot = |rng: &mut crate::rng::StdRng, fan_in: usize, fan_out: usize, n: usize| -> Vec<f64> {
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        (0..n).map(|_| rng.random_range(-limit..=limit)).collect()
    };
    let hidden_weights = glorot(&mut rng, d, h, h * d);
    let output_weights = glorot(&mut rng, width, 1, width);
    let mut model = TrainedModel {
        schema_version: MODEL_SCHEMA_VERSION,
        hyperparameters: hp,
        n_features: d,
        feature_mean: mean,
        feature_scale: scale,
        hidden_weights,
        hidden_bias: vec![0.0; h],
        output_weights,
        output_bias: 0.0,
        training: TrainingMeta {
            epochs_run: 0,
            seed,
            final_loss: f64::NAN,
            batch_size: config.batch_size,
        },
    };

    let x: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| {
            let mut v = vec![0.0; d];
            model.standardize_into(r, &mut v);
            v
        })
        .collect();
    let y: Vec<f64> = labels.iter().map(|&l| target(l)).collect();

    let n = x.len();
    let batch = if config.batch_size == 0 { n } else { config.batch_size.min(n) };
    let mut order: Vec<usize> = (0..n).collect();
    let mut s = model.scratch();
    let mut g_hw = vec![0.0; h * d];
    let mut g_hb = vec![0.0; h];
    let mut g_ow = vec![0.0; width];
    let mut da = vec![0.0; h];
    let mut history: Vec<f64> = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(batch) {
            g_hw.iter_mut().for_each(|v| *v = 0.0);
            g_hb.iter_mut().for_each(|v| *v = 0.0);
            g_ow.iter_mut().for_each(|v| *v = 0.0);
            let mut g_ob = 0.0;
            for &i in chunk {
                s.x.copy_from_slice(&x[i]);
                let logit = model.logit(&mut s);
                epoch_loss += bce(logit, y[i]);
                let g = logistic(logit) - y[i];
                g_ob += g;
                if h == 0 {
                    for (gw, xi) in g_ow.iter_mut().zip(&s.x) {
                        *gw += g * xi;
                    }
                    continue;
                }
                for j in 0..h {
                    g_ow[j] += g * s.a[j];
                    da[j] = g * model.output_weights[j];
                }
                hp.activation.backward(&s.z, &s.a, &mut da);
                for j in 0..h {
                    g_hb[j] += da[j];
                    let row = &mut g_hw[j * d..(j + 1) * d];
                    for (gw, xi) in row.iter_mut().zip(&s.x) {
                        *gw += da[j] * xi;
                    }
                }
            }
            let step = hp.learning_rate / chunk.len() as f64;
            for (w, g) in model.output_weights.iter_mut().zip(&g_ow) {
                *w -= step * g;
            }
            model.output_bias -= step * g_ob;
            for (w, g) in model.hidden_weights.iter_mut().zip(&g_hw) {
                *w -= step * g;
            }
            for (b, g) in model.hidden_bias.iter_mut().zip(&g_hb) {
                *b -= step * g;
            }
        }
        let epoch_loss = epoch_loss / n as f64;
        if !epoch_loss.is_finite() {
            return Err(Error::Classifier(format!(
                "training diverged at epoch {epoch} ({hp:?})"
            )));
        }
        history.push(epoch_loss);
        model.training.epochs_run = epoch + 1;
        model.training.final_loss = epoch_loss;
        if history.len() > config.patience {
            let k = history.len() - 1 - config.patience;
            let best_before = history[..=k].iter().copied().fold(f64::INFINITY, f64::min);
            let best_recent = history[k + 1..].iter().copied().fold(f64::INFINITY, f64::min);
            if best_before - best_recent < config.min_improvement {
                break;
            }
        }
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    fn blobs(n: usize, sep: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<ClassLabel>) {
        let mut rng = rng_from_seed(seed);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            let (label, c) = if i % 2 == 0 { (ClassLabel::Class1, -sep) } else { (ClassLabel::Class2, sep) };
            rows.push(vec![c + noise.sample(&mut rng), c + noise.sample(&mut rng)]);
            labels.push(label);
        }
        (rows, labels)
    }

    fn accuracy(m: &TrainedModel, rows: &[Vec<f64>], labels: &[ClassLabel]) -> f64 {
        let hits = rows.iter().zip(labels).filter(|(r, &l)| m.predict(r).unwrap().class == l).count();
        hits as f64 / rows.len() as f64
    }

    #[test]
    fn separable_blobs_are_learned_by_every_activation() {
        let (rows, labels) = blobs(400, 4.0, 1);
        for act in Activation::ALL {
            for hidden in [0, 6] {
                let hp = Hyperparameters { activation: act, learning_rate: 0.1, hidden_units: hidden };
                let m = train_network(&rows, &labels, hp, &TrainConfig::default(), 9).unwrap();
                let acc = accuracy(&m, &rows, &labels);
                assert!(acc >= 0.99, "{act:?}/{hidden}: {acc}");
            }
        }
    }

    #[test]
    fn zero_weights_score_one_half_and_tie_goes_to_class2() {
        let (rows, labels) = blobs(20, 1.0, 2);
        let hp = Hyperparameters { activation: Activation::Tanh, learning_rate: 0.1, hidden_units: 3 };
        let mut m = train_network(&rows, &labels, hp, &TrainConfig::default(), 0).unwrap();
        m.output_weights.iter_mut().for_each(|w| *w = 0.0);
        m.output_bias = 0.0;
        let p = m.predict(&[0.3, -2.0]).unwrap();
        assert_eq!(p.score, 0.5);
        assert_eq!(p.class, ClassLabel::Class2);
    }

    #[test]
    fn training_is_deterministic_and_batch_predict_is_pure() {
        let (rows, labels) = blobs(100, 1.0, 3);
        let hp = Hyperparameters { activation: Activation::Relu, learning_rate: 0.2, hidden_units: 8 };
        let a = train_network(&rows, &labels, hp, &TrainConfig::default(), 5).unwrap();
        let b = train_network(&rows, &labels, hp, &TrainConfig::default(), 5).unwrap();
        assert_eq!(a, b);
        let batch = a.predict_batch(&rows).unwrap();
        for (r, p) in rows.iter().zip(batch) {
            assert_eq!(a.predict(r).unwrap(), p);
        }
    }

    #[test]
    fn wrong_feature_length_is_rejected() {
        let (rows, labels) = blobs(10, 1.0, 4);
        let hp = Hyperparameters { activation: Activation::Sigmoid, learning_rate: 0.1, hidden_units: 0 };
        let m = train_network(&rows, &labels, hp, &TrainConfig::default(), 0).unwrap();
        assert!(matches!(m.predict(&[1.0]), Err(Error::FeatureLength { expected: 2, got: 1 })));
    }

    #[test]
    fn json_roundtrip() {
        let (rows, labels) = blobs(30, 1.0, 5);
        let hp = Hyperparameters { activation: Activation::Softmax, learning_rate: 0.3, hidden_units: 4 };
        let m = train_network(&rows, &labels, hp, &TrainConfig::default(), 1).unwrap();
        assert_eq!(TrainedModel::from_json(&m.to_json().unwrap()).unwrap(), m);
    }

    #[test]
    fn huge_learning_rate_reports_divergence_or_finishes_finite() {
        let (mut rows, labels) = blobs(50, 1.0, 6);
        rows[0][0] = 1e300;
        let hp = Hyperparameters { activation: Activation::Relu, learning_rate: 1e300, hidden_units: 4 };
        match train_network(&rows, &labels, hp, &TrainConfig::default(), 0) {
            Err(Error::Classifier(msg)) => assert!(msg.contains("diverged")),
            Ok(m) => assert!(m.training.final_loss.is_finite()),
            Err(e) => panic!("{e}"),
        }
    }
}
