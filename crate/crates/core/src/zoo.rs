//! The six activity-recognition pipelines and their parameter audit.
//!
//! CNN family: three blocks `conv → ReLU → batchnorm → maxpool2` with
//! (kernel, channels) = (3, 32), (5, 64), (7, 128); then nothing, SE, or
//! WSense; flatten, dropout 0.5, dense 512 ReLU, dense K softmax.
//!
//! ConvLSTM family: four blocks with (1, 16), (3, 32), (5, 64), (7, 128);
//! LSTM 32 and LSTM 128 (both returning sequences); then flatten, SE +
//! flatten, or WSense; dense 512 ReLU, dense K softmax.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::attention::{SqueezeExcitation, WSense};
use crate::nn::{
    run_backward, run_forward, Activation, BatchNorm1d, Context, Conv1d, Dense, Dropout, Flatten,
    GradTape, Layer, LayerKind, Lstm, MaxPool1d, Mode, Module, ParamCount,
};
use crate::{rng_from_seed, Error, Result, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Arch {
    Cnn,
    CnnSe,
    CnnWSense,
    ConvLstm,
    ConvLstmSe,
    ConvLstmWSense,
}

impl Arch {
    pub const ALL: [Arch; 6] = [
        Arch::Cnn,
        Arch::CnnSe,
        Arch::CnnWSense,
        Arch::ConvLstm,
        Arch::ConvLstmSe,
        Arch::ConvLstmWSense,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Arch::Cnn => "cnn",
            Arch::CnnSe => "cnn-se",
            Arch::CnnWSense => "cnn-wsense",
            Arch::ConvLstm => "convlstm",
            Arch::ConvLstmSe => "convlstm-se",
            Arch::ConvLstmWSense => "convlstm-wsense",
        }
    }

    pub fn is_convlstm(self) -> bool {
        matches!(self, Arch::ConvLstm | Arch::ConvLstmSe | Arch::ConvLstmWSense)
    }

    pub fn has_wsense(self) -> bool {
        matches!(self, Arch::CnnWSense | Arch::ConvLstmWSense)
    }

    pub fn has_se(self) -> bool {
        matches!(self, Arch::CnnSe | Arch::ConvLstmSe)
    }

    /// Number of pool-2 stages, which sets the minimum window length.
    pub fn pool_depth(self) -> usize {
        if self.is_convlstm() {
            4
        } else {
            3
        }
    }

    /// Shortest window that leaves at least two time steps after pooling.
    pub fn min_window(self) -> usize {
        2 << self.pool_depth()
    }
}

impl fmt::Display for Arch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Arch {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Arch::ALL
            .into_iter()
            .find(|a| a.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Value(format!("unknown architecture '{s}'")))
    }
}

/// Knobs the source architecture leaves unstated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConfig {
    pub bn_momentum: f64,
    pub bn_epsilon: f64,
    pub dropout: f64,
    pub se_ratio: usize,
    pub hidden_units: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            bn_momentum: 0.99,
            bn_epsilon: 1e-3,
            dropout: 0.5,
            se_ratio: 8,
            hidden_units: 512,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub arch: Arch,
    pub window_size: usize,
    pub in_channels: usize,
    pub n_classes: usize,
    pub rng_seed: u64,
    pub layers: Vec<Layer>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerAudit {
    pub name: String,
    pub kind: LayerKind,
    /// Per-sample output shape.
    pub output_shape: Vec<usize>,
    pub params: ParamCount,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamAudit {
    pub total: usize,
    pub trainable: usize,
    pub layers: Vec<LayerAudit>,
}

impl ParamAudit {
    pub fn non_trainable(&self) -> usize {
        self.total - self.trainable
    }
}

/// Per-layer parameter gradients, parallel to [`ModelSpec::layers`].
#[derive(Debug, Clone)]
pub struct Gradients(pub Vec<Vec<Tensor>>);

impl Gradients {
    pub fn flat(&self) -> impl Iterator<Item = &Tensor> {
        self.0.iter().flatten()
    }
}

const CNN_BLOCKS: [(usize, usize); 3] = [(3, 32), (5, 64), (7, 128)];
const CONVLSTM_BLOCKS: [(usize, usize); 4] = [(1, 16), (3, 32), (5, 64), (7, 128)];
const LSTM_UNITS: [usize; 2] = [32, 128];

pub fn build_model(
    arch: Arch,
    window_size: usize,
    in_channels: usize,
    n_classes: usize,
    seed: u64,
) -> Result<ModelSpec> {
    build_model_with(arch, window_size, in_channels, n_classes, seed, &ModelConfig::default())
}

pub fn build_model_with(
    arch: Arch,
    window_size: usize,
    in_channels: usize,
    n_classes: usize,
    seed: u64,
    cfg: &ModelConfig,
) -> Result<ModelSpec> {
    if window_size < arch.min_window() {
        return Err(Error::Config(format!(
            "{arch} needs windows of at least {} samples, got {window_size}",
            arch.min_window()
        )));
    }
    if in_channels == 0 || n_classes < 2 {
        return Err(Error::Config(format!(
            "need at least one channel and two classes, got {in_channels} and {n_classes}"
        )));
    }
    let mut rng = rng_from_seed(seed);
    let mut layers = Vec::new();
    let mut channels = in_channels;
    let mut time = window_size;
    let blocks: &[(usize, usize)] = if arch.is_convlstm() {
        &CONVLSTM_BLOCKS
    } else {
        &CNN_BLOCKS
    };
    for &(kernel, out) in blocks {
        let mut conv = Conv1d::new(kernel, channels, out);
        conv.init(6.0, &mut rng);
        layers.push(Layer::Conv1d(conv));
        layers.push(Layer::Activation(Activation::Relu));
        layers.push(Layer::BatchNorm1d(BatchNorm1d::new(out, cfg.bn_momentum, cfg.bn_epsilon)));
        layers.push(Layer::MaxPool1d(MaxPool1d::default()));
        channels = out;
        time /= 2;
    }
    if arch.is_convlstm() {
        for units in LSTM_UNITS {
            let mut lstm = Lstm::new(channels, units, true);
            lstm.init(3.0, &mut rng);
            layers.push(Layer::Lstm(lstm));
            channels = units;
        }
    }
    let features = if arch.has_wsense() {
        let mut ws = WSense::new(channels);
        ws.init(&mut rng);
        layers.push(Layer::WSense(ws));
        channels
    } else {
        if arch.has_se() {
            let mut se = SqueezeExcitation::new(channels, cfg.se_ratio)?;
            se.init(&mut rng);
            layers.push(Layer::SqueezeExcitation(se));
        }
        time * channels
    };
    layers.push(Layer::Flatten(Flatten));
    if !arch.is_convlstm() {
        layers.push(Layer::Dropout(Dropout::new(cfg.dropout)?));
    }
    let mut hidden = Dense::new(features, cfg.hidden_units, true);
    hidden.init(6.0, &mut rng);
    layers.push(Layer::Dense(hidden));
    layers.push(Layer::Activation(Activation::Relu));
    let mut head = Dense::new(cfg.hidden_units, n_classes, true);
    head.init(3.0, &mut rng);
    layers.push(Layer::Dense(head));
    layers.push(Layer::Activation(Activation::Softmax));

    let spec = ModelSpec {
        arch,
        window_size,
        in_channels,
        n_classes,
        rng_seed: seed,
        layers,
    };
    spec.layer_shapes()?;
    Ok(spec)
}

impl ModelSpec {
    /// Keras-style names: `conv1d_1`, `batchnorm1d_2`, ...
    pub fn layer_names(&self) -> Vec<String> {
        let mut counts: Vec<(LayerKind, usize)> = Vec::new();
        self.layers
            .iter()
            .map(|l| {
                let kind = l.kind();
                let n = match counts.iter_mut().find(|(k, _)| *k == kind) {
                    Some((_, n)) => {
                        *n += 1;
                        *n
                    }
                    None => {
                        counts.push((kind, 1));
                        1
                    }
                };
                format!("{}_{n}", kind.as_str())
            })
            .collect()
    }

    /// Per-sample output shape of every layer.
    pub fn layer_shapes(&self) -> Result<Vec<Vec<usize>>> {
        let mut shape = vec![self.window_size, self.in_channels];
        self.layers
            .iter()
            .map(|l| {
                shape = l.output_shape(&shape)?;
                Ok(shape.clone())
            })
            .collect()
    }

    pub fn audit(&self) -> ParamAudit {
        let shapes = self.layer_shapes().expect("validated at build time");
        let layers: Vec<LayerAudit> = self
            .layer_names()
            .into_iter()
            .zip(&self.layers)
            .zip(shapes)
            .map(|((name, layer), output_shape)| LayerAudit {
                name,
                kind: layer.kind(),
                output_shape,
                params: layer.count_params(),
            })
            .collect();
        let sum: ParamCount = layers.iter().map(|l| l.params).sum();
        ParamAudit {
            total: sum.total,
            trainable: sum.trainable,
            layers,
        }
    }

    fn check_batch(&self, batch: &Tensor) -> Result<()> {
        match *batch.shape() {
            [_, t, c] if t == self.window_size && c == self.in_channels => Ok(()),
            _ => Err(Error::shape(
                "model input",
                batch.shape(),
                &[0, self.window_size, self.in_channels],
            )),
        }
    }

    /// Class probabilities `[B, K]` plus the tape for a later backward pass.
    pub fn forward(&self, batch: &Tensor, mode: Mode, rng: &mut crate::Rng) -> Result<(Tensor, GradTape)> {
        self.check_batch(batch)?;
        run_forward(&self.layers, batch, &mut Context::new(mode, rng))
    }

    /// Inference-mode probabilities.
    pub fn predict(&self, batch: &Tensor) -> Result<Tensor> {
        let mut rng = rng_from_seed(0);
        Ok(self.forward(batch, Mode::Infer, &mut rng)?.0)
    }

    /// Backward from a gradient w.r.t. the output probabilities.
    pub fn backward(&self, tape: &GradTape, grad_probs: &Tensor) -> Result<Gradients> {
        let (_, grads) = run_backward(&self.layers, tape, grad_probs)?;
        Ok(Gradients(grads))
    }

    /// Backward from a gradient w.r.t. the logits feeding the final softmax,
    /// as produced by fused softmax + cross-entropy.
    pub fn backward_logits(&self, tape: &GradTape, grad_logits: &Tensor) -> Result<Gradients> {
        if tape.len() != self.layers.len() {
            return Err(Error::State("backward called before a full forward pass"));
        }
        if !matches!(self.layers.last(), Some(Layer::Activation(Activation::Softmax))) {
            return Err(Error::State("model does not end in softmax"));
        }
        let mut inner = tape.clone();
        inner.truncate(self.layers.len() - 1);
        let (_, mut grads) = run_backward(&self.layers, &inner, grad_logits)?;
        grads.push(Vec::new());
        Ok(Gradients(grads))
    }

    /// Fold batch statistics recorded on a training tape into the moving
    /// averages.
    pub fn commit(&mut self, tape: &GradTape) {
        for (layer, cache) in self.layers.iter_mut().zip(tape.entries()) {
            layer.commit(cache);
        }
    }

    pub fn params(&self) -> Vec<&Tensor> {
        self.layers.iter().flat_map(|l| l.params()).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        self.layers.iter_mut().flat_map(|l| l.params_mut()).collect()
    }

    /// Every stored tensor as `layer_name/param`.
    pub fn named_tensors(&self) -> Vec<(String, &Tensor)> {
        self.layer_names()
            .into_iter()
            .zip(&self.layers)
            .flat_map(|(ln, l)| {
                l.named_tensors()
                    .into_iter()
                    .map(move |(pn, t)| (format!("{ln}/{pn}"), t))
            })
            .collect()
    }

    /// Copies of every stored tensor, trainable or not.
    pub fn snapshot(&self) -> Vec<Tensor> {
        self.layers
            .iter()
            .flat_map(|l| l.named_tensors().into_iter().map(|(_, t)| t.clone()))
            .collect()
    }

    pub fn restore(&mut self, snapshot: &[Tensor]) -> Result<()> {
        let mut slots: Vec<&mut Tensor> = self
            .layers
            .iter_mut()
            .flat_map(|l| l.named_tensors_mut().into_iter().map(|(_, t)| t))
            .collect();
        if slots.len() != snapshot.len() {
            return Err(Error::State("snapshot taken from a different model"));
        }
        for (slot, saved) in slots.iter_mut().zip(snapshot) {
            if slot.shape() != saved.shape() {
                return Err(Error::shape("restore", slot.shape(), saved.shape()));
            }
            **slot = saved.clone();
        }
        Ok(())
    }

    /// Overwrite a stored tensor by name; the shape must match.
    pub fn set_tensor(&mut self, name: &str, value: Tensor) -> Result<()> {
        let names = self.layer_names();
        let (layer_name, param) = name
            .split_once('/')
            .ok_or_else(|| Error::Value(format!("bad tensor name '{name}'")))?;
        let idx = names
            .iter()
            .position(|n| n == layer_name)
            .ok_or_else(|| Error::Value(format!("no layer '{layer_name}'")))?;
        let slot = self.layers[idx]
            .named_tensors_mut()
            .into_iter()
            .find(|(n, _)| n == param)
            .map(|(_, t)| t)
            .ok_or_else(|| Error::Value(format!("layer '{layer_name}' has no '{param}'")))?;
        if slot.shape() != value.shape() {
            return Err(Error::shape("set_tensor", slot.shape(), value.shape()));
        }
        *slot = value;
        if let Layer::BatchNorm1d(bn) = &self.layers[idx] {
            bn.validate()?;
        }
        Ok(())
    }
}
