//! Dependency-free multilayer perceptron used as the error detector.
//!
//! Networks are chains of inner-product layers (y = W*x + b) with ReLU
//! activations in between and a two-output inner-product layer at the
//! end. The two outputs are one-hot scores for "correct" (component 0)
//! and "incorrect" (component 1); the argmax is the verdict and an
//! exact tie resolves to incorrect.
//!
//! Deployed models run inference in 32-bit floats. Training happens on
//! a 64-bit mirror ([`TrainNet`]) with softmax cross-entropy loss and
//! momentum SGD; the trained parameters are rounded to f32 once when
//! the model is snapshotted.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::arch::ArchitectureSpec;
use crate::cost;
use crate::error::{Error, Result};
use crate::stream::chacha_stream;

/// Version tag written into every serialized model file.
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Floor applied to per-dimension feature standard deviations.
pub const STD_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerKind {
    InnerProduct,
    Relu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub kind: LayerKind,
    pub in_dim: usize,
    pub out_dim: usize,
}

/// Detector verdict for one feature vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Correct,
    Incorrect,
}

impl Classification {
    /// One-hot index: correct = 0, incorrect = 1.
    pub fn index(self) -> usize {
        match self {
            Classification::Correct => 0,
            Classification::Incorrect => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelMetadata {
    pub task_kind: String,
    pub feature_dim: usize,
    pub architecture: String,
    pub train_seed: u64,
}

/// Weights and bias of one inner-product layer. Weights are row-major,
/// `out_dim` rows of `in_dim` columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IpLayerParams {
    pub weights: Vec<f32>,
    pub bias: Vec<f32>,
}

/// A trained detector: layer chain, f32 parameters, and the feature
/// normalization statistics captured from the training set.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorModel {
    pub metadata: ModelMetadata,
    pub layers: Vec<LayerSpec>,
    pub feature_mean: Vec<f32>,
    pub feature_std: Vec<f32>,
    /// One entry per inner-product layer, in chain order.
    pub params: Vec<IpLayerParams>,
}

/// y_j = sum_i W[j][i] * x_i + b_j, computed in f32.
pub fn inner_product(weights: &[f32], bias: &[f32], input: &[f32]) -> Result<Vec<f32>> {
    let out_dim = bias.len();
    let in_dim = input.len();
    if weights.len() != out_dim * in_dim {
        return Err(Error::DimensionMismatch {
            context: "inner_product weights",
            expected: out_dim * in_dim,
            actual: weights.len(),
        });
    }
    let mut out = Vec::with_capacity(out_dim);
    for j in 0..out_dim {
        let row = &weights[j * in_dim..(j + 1) * in_dim];
        let mut acc = bias[j];
        for (w, x) in row.iter().zip(input) {
            acc += w * x;
        }
        out.push(acc);
    }
    Ok(out)
}

/// Elementwise max(0, x).
pub fn relu(x: &[f32]) -> Vec<f32> {
    x.iter().map(|&v| v.max(0.0)).collect()
}

impl DetectorModel {
    pub fn new(
        metadata: ModelMetadata,
        layers: Vec<LayerSpec>,
        feature_mean: Vec<f32>,
        feature_std: Vec<f32>,
        params: Vec<IpLayerParams>,
    ) -> Result<Self> {
        let model = Self {
            metadata,
            layers,
            feature_mean,
            feature_std,
            params,
        };
        model.validate()?;
        Ok(model)
    }

    fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::ModelFormat(msg));
        if self.layers.is_empty() {
            return fail("model has no layers".into());
        }
        let n = self.metadata.feature_dim;
        if self.feature_mean.len() != n || self.feature_std.len() != n {
            return fail(format!(
                "normalization vectors must have length {n} (got {} and {})",
                self.feature_mean.len(),
                self.feature_std.len()
            ));
        }
        if self.feature_std.iter().any(|&s| !(s > 0.0)) {
            return fail("feature_std components must be positive".into());
        }
        if self.layers[0].in_dim != n {
            return fail(format!(
                "first layer expects {} inputs, feature_dim is {n}",
                self.layers[0].in_dim
            ));
        }
        for pair in self.layers.windows(2) {
            if pair[0].out_dim != pair[1].in_dim {
                return fail("consecutive layer dimensions do not match".into());
            }
        }
        let last = self.layers.last().unwrap();
        if last.kind != LayerKind::InnerProduct || last.out_dim != 2 {
            return fail("final layer must be inner_product with out_dim 2".into());
        }
        let mut ip = 0;
        for layer in &self.layers {
            match layer.kind {
                LayerKind::InnerProduct => {
                    let Some(p) = self.params.get(ip) else {
                        return fail("missing parameters for inner_product layer".into());
                    };
                    if p.bias.len() != layer.out_dim
                        || p.weights.len() != layer.out_dim * layer.in_dim
                    {
                        return fail(format!(
                            "parameter shapes do not match layer {ip} spec"
                        ));
                    }
                    ip += 1;
                }
                LayerKind::Relu => {
                    if layer.in_dim != layer.out_dim {
                        return fail("relu layer requires in_dim == out_dim".into());
                    }
                }
            }
        }
        if ip != self.params.len() {
            return fail("more parameter blocks than inner_product layers".into());
        }
        Ok(())
    }

    /// Normalizes the feature vector and applies the layer chain.
    /// Returns the raw two-component scores.
    pub fn forward(&self, fv: &[f32]) -> Result<[f32; 2]> {
        if fv.len() != self.metadata.feature_dim {
            return Err(Error::DimensionMismatch {
                context: "feature vector",
                expected: self.metadata.feature_dim,
                actual: fv.len(),
            });
        }
        let mut cur: Vec<f32> = fv
            .iter()
            .zip(self.feature_mean.iter().zip(&self.feature_std))
            .map(|(&x, (&m, &s))| (x - m) / s)
            .collect();
        let mut ip = 0;
        for layer in &self.layers {
            match layer.kind {
                LayerKind::InnerProduct => {
                    cur = inner_product(&self.params[ip].weights, &self.params[ip].bias, &cur)?;
                    ip += 1;
                }
                LayerKind::Relu => cur = relu(&cur),
            }
        }
        Ok([cur[0], cur[1]])
    }

    /// Argmax of the forward scores; an exact tie resolves to
    /// incorrect. Feature vectors containing non-finite components are
    /// classified incorrect without evaluating the network.
    pub fn classify(&self, fv: &[f32]) -> Result<Classification> {
        if !fv.iter().all(|v| v.is_finite()) {
            if fv.len() != self.metadata.feature_dim {
                return Err(Error::DimensionMismatch {
                    context: "feature vector",
                    expected: self.metadata.feature_dim,
                    actual: fv.len(),
                });
            }
            return Ok(Classification::Incorrect);
        }
        let logits = self.forward(fv)?;
        if logits[0] > logits[1] {
            Ok(Classification::Correct)
        } else {
            Ok(Classification::Incorrect)
        }
    }

    /// Cost of one classification in the op-count cycle model:
    /// normalization, the layer chain, and the final argmax compare.
    pub fn inference_cost(&self) -> f64 {
        let n = self.metadata.feature_dim as f64;
        let mut cycles = n * (cost::ADD + cost::DIV);
        for layer in &self.layers {
            match layer.kind {
                LayerKind::InnerProduct => {
                    let (i, o) = (layer.in_dim as f64, layer.out_dim as f64);
                    cycles += o * i * (cost::MUL + cost::ADD) + o * cost::ADD;
                }
                LayerKind::Relu => cycles += layer.out_dim as f64 * cost::ADD,
            }
        }
        cycles + cost::ADD
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            metadata: self.metadata.clone(),
            layers: self.layers.clone(),
            feature_mean: self.feature_mean.clone(),
            feature_std: self.feature_std.clone(),
            weights: self.params.iter().map(|p| p.weights.clone()).collect(),
            biases: self.params.iter().map(|p| p.bias.clone()).collect(),
        };
        let mut json = serde_json::to_string_pretty(&file).expect("model serialization");
        json.push('\n');
        json
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::ModelFormat(format!(
                "unsupported model format version {} (expected {})",
                file.format_version, MODEL_FORMAT_VERSION
            )));
        }
        if file.weights.len() != file.biases.len() {
            return Err(Error::ModelFormat(
                "weights and biases arrays differ in length".into(),
            ));
        }
        let params = file
            .weights
            .into_iter()
            .zip(file.biases)
            .map(|(weights, bias)| IpLayerParams { weights, bias })
            .collect();
        Self::new(
            file.metadata,
            file.layers,
            file.feature_mean,
            file.feature_std,
            params,
        )
    }
}

/// On-disk model layout. Field order is the serialization order.
#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    metadata: ModelMetadata,
    layers: Vec<LayerSpec>,
    feature_mean: Vec<f32>,
    feature_std: Vec<f32>,
    weights: Vec<Vec<f32>>,
    biases: Vec<Vec<f32>>,
}

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub minibatch_size: usize,
    pub initial_tickets: i32,
    pub ticket_cap: i32,
    pub augment_period_epochs: u32,
    pub rng_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            momentum: 0.9,
            minibatch_size: 64,
            initial_tickets: 100,
            ticket_cap: 100,
            augment_period_epochs: 5,
            rng_seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidConfig("learning_rate must be > 0".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidConfig("momentum must be in [0, 1)".into()));
        }
        if self.minibatch_size == 0 {
            return Err(Error::InvalidConfig("minibatch_size must be >= 1".into()));
        }
        if self.augment_period_epochs == 0 {
            return Err(Error::InvalidConfig(
                "augment_period_epochs must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

fn softmax2(logits: [f64; 2]) -> [f64; 2] {
    let m = logits[0].max(logits[1]);
    let e0 = (logits[0] - m).exp();
    let e1 = (logits[1] - m).exp();
    let z = e0 + e1;
    [e0 / z, e1 / z]
}

/// Softmax cross-entropy of a two-component score vector, stabilized by
/// max subtraction: -log(softmax(logits)[label]).
pub fn loss(logits: [f64; 2], label: Classification) -> f64 {
    let m = logits[0].max(logits[1]);
    let lse = m + ((logits[0] - m).exp() + (logits[1] - m).exp()).ln();
    lse - logits[label.index()]
}

/// f64 parameters of one inner-product layer (training mirror).
#[derive(Debug, Clone, PartialEq)]
pub struct IpParams64 {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Per-parameter tensors with the same shapes as the network; used for
/// gradients and for the momentum velocity.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrads {
    pub layers: Vec<IpParams64>,
}

impl ParamGrads {
    pub fn zeros_like(net: &TrainNet) -> Self {
        Self {
            layers: net
                .params
                .iter()
                .map(|p| IpParams64 {
                    weights: vec![0.0; p.weights.len()],
                    bias: vec![0.0; p.bias.len()],
                })
                .collect(),
        }
    }
}

/// The 64-bit training-side network.
#[derive(Debug, Clone)]
pub struct TrainNet {
    pub layers: Vec<LayerSpec>,
    pub feature_mean: Vec<f64>,
    pub feature_std: Vec<f64>,
    pub params: Vec<IpParams64>,
}

struct ForwardCache {
    /// Input vector seen by each inner-product layer, in order.
    ip_inputs: Vec<Vec<f64>>,
    /// Input vector seen by each ReLU layer, in order.
    relu_inputs: Vec<Vec<f64>>,
    logits: [f64; 2],
}

impl TrainNet {
    /// Fresh network for an architecture: weights drawn from a seeded
    /// zero-mean uniform scaled by sqrt(2 / fan_in), biases zero.
    pub fn new(
        arch: &ArchitectureSpec,
        feature_mean: Vec<f64>,
        feature_std: Vec<f64>,
        seed: u64,
    ) -> Self {
        let layers = arch.layer_chain();
        let mut rng = chacha_stream(seed, 0);
        let mut params = Vec::new();
        for layer in &layers {
            if layer.kind != LayerKind::InnerProduct {
                continue;
            }
            let limit = (2.0 / layer.in_dim as f64).sqrt();
            let weights = (0..layer.in_dim * layer.out_dim)
                .map(|_| rng.random_range(-limit..limit))
                .collect();
            params.push(IpParams64 {
                weights,
                bias: vec![0.0; layer.out_dim],
            });
        }
        let feature_std = feature_std.into_iter().map(|s| s.max(STD_FLOOR)).collect();
        Self {
            layers,
            feature_mean,
            feature_std,
            params,
        }
    }

    pub fn feature_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    fn normalize(&self, fv: &[f32]) -> Vec<f64> {
        fv.iter()
            .zip(self.feature_mean.iter().zip(&self.feature_std))
            .map(|(&x, (&m, &s))| (x as f64 - m) / s)
            .collect()
    }

    fn forward_cached(&self, fv: &[f32]) -> Result<ForwardCache> {
        if fv.len() != self.feature_dim() {
            return Err(Error::DimensionMismatch {
                context: "feature vector",
                expected: self.feature_dim(),
                actual: fv.len(),
            });
        }
        let mut cur = self.normalize(fv);
        let mut ip_inputs = Vec::new();
        let mut relu_inputs = Vec::new();
        let mut ip = 0;
        for layer in &self.layers {
            match layer.kind {
                LayerKind::InnerProduct => {
                    let p = &self.params[ip];
                    let mut out = Vec::with_capacity(layer.out_dim);
                    for j in 0..layer.out_dim {
                        let row = &p.weights[j * layer.in_dim..(j + 1) * layer.in_dim];
                        let mut acc = p.bias[j];
                        for (w, x) in row.iter().zip(&cur) {
                            acc += w * x;
                        }
                        out.push(acc);
                    }
                    ip_inputs.push(std::mem::replace(&mut cur, out));
                    ip += 1;
                }
                LayerKind::Relu => {
                    let out = cur.iter().map(|&v| v.max(0.0)).collect();
                    relu_inputs.push(std::mem::replace(&mut cur, out));
                }
            }
        }
        Ok(ForwardCache {
            ip_inputs,
            relu_inputs,
            logits: [cur[0], cur[1]],
        })
    }

    pub fn forward(&self, fv: &[f32]) -> Result<[f64; 2]> {
        Ok(self.forward_cached(fv)?.logits)
    }

    /// Mean loss over a batch.
    pub fn batch_loss(&self, batch: &[(&[f32], Classification)]) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let mut sum = 0.0;
        for (fv, label) in batch {
            sum += loss(self.forward(fv)?, *label);
        }
        Ok(sum / batch.len() as f64)
    }

    /// Mean gradient of the loss over the batch with respect to every
    /// weight and bias. The ReLU subgradient at exactly 0 is 0.
    pub fn gradients(&self, batch: &[(&[f32], Classification)]) -> Result<ParamGrads> {
        Ok(self.gradients_with_loss(batch)?.0)
    }

    /// Gradients plus the mean batch loss from the same forward passes.
    pub fn gradients_with_loss(
        &self,
        batch: &[(&[f32], Classification)],
    ) -> Result<(ParamGrads, f64)> {
        if batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let mut grads = ParamGrads::zeros_like(self);
        let mut loss_sum = 0.0;
        for (fv, label) in batch {
            let cache = self.forward_cached(fv)?;
            loss_sum += loss(cache.logits, *label);
            let probs = softmax2(cache.logits);
            let mut delta = vec![probs[0], probs[1]];
            delta[label.index()] -= 1.0;

            let mut ip = self.params.len();
            let mut r = cache.relu_inputs.len();
            for layer in self.layers.iter().rev() {
                match layer.kind {
                    LayerKind::InnerProduct => {
                        ip -= 1;
                        let input = &cache.ip_inputs[ip];
                        let g = &mut grads.layers[ip];
                        for j in 0..layer.out_dim {
                            let dj = delta[j];
                            g.bias[j] += dj;
                            let row = &mut g.weights[j * layer.in_dim..(j + 1) * layer.in_dim];
                            for (gw, x) in row.iter_mut().zip(input) {
                                *gw += dj * x;
                            }
                        }
                        if ip > 0 || r > 0 {
                            let w = &self.params[ip].weights;
                            let mut prev = vec![0.0; layer.in_dim];
                            for j in 0..layer.out_dim {
                                let dj = delta[j];
                                let row = &w[j * layer.in_dim..(j + 1) * layer.in_dim];
                                for (p, wv) in prev.iter_mut().zip(row) {
                                    *p += dj * wv;
                                }
                            }
                            delta = prev;
                        }
                    }
                    LayerKind::Relu => {
                        r -= 1;
                        let input = &cache.relu_inputs[r];
                        for (d, &x) in delta.iter_mut().zip(input) {
                            if x <= 0.0 {
                                *d = 0.0;
                            }
                        }
                    }
                }
            }
        }
        let scale = 1.0 / batch.len() as f64;
        for layer in &mut grads.layers {
            for w in &mut layer.weights {
                *w *= scale;
            }
            for b in &mut layer.bias {
                *b *= scale;
            }
        }
        Ok((grads, loss_sum * scale))
    }

    /// One momentum-SGD update: v <- momentum*v - lr*g; p <- p + v.
    pub fn sgd_step(&mut self, grads: &ParamGrads, velocity: &mut ParamGrads, config: &TrainConfig) {
        let lr = config.learning_rate;
        let mu = config.momentum;
        for ((p, g), v) in self
            .params
            .iter_mut()
            .zip(&grads.layers)
            .zip(&mut velocity.layers)
        {
            for ((pw, gw), vw) in p.weights.iter_mut().zip(&g.weights).zip(&mut v.weights) {
                *vw = mu * *vw - lr * gw;
                *pw += *vw;
            }
            for ((pb, gb), vb) in p.bias.iter_mut().zip(&g.bias).zip(&mut v.bias) {
                *vb = mu * *vb - lr * gb;
                *pb += *vb;
            }
        }
    }

    /// Rounds the trained parameters to the deployed f32 model.
    pub fn to_model(&self, metadata: ModelMetadata) -> Result<DetectorModel> {
        let params = self
            .params
            .iter()
            .map(|p| IpLayerParams {
                weights: p.weights.iter().map(|&w| w as f32).collect(),
                bias: p.bias.iter().map(|&b| b as f32).collect(),
            })
            .collect();
        DetectorModel::new(
            metadata,
            self.layers.clone(),
            self.feature_mean.iter().map(|&m| m as f32).collect(),
            self.feature_std.iter().map(|&s| s as f32).collect(),
            params,
        )
    }
}
