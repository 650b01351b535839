//! Layers with hand-written forward and backward passes.
//!
//! Sequence tensors are `[batch, time, channels]`; a rank-2 `[time, channels]`
//! input is accepted as a batch of one and yields a rank-2 output. Flat
//! tensors are `[batch, features]`.

mod activation;
mod conv;
mod dense;
mod dropout;
mod lstm;
mod norm;
mod pool;
mod tape;

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use core::ops::{Add, AddAssign};

use rand::Rng as _;

pub use activation::{elu, sigmoid, softmax_rows, Activation};
pub use conv::Conv1d;
pub use dense::Dense;
pub use dropout::Dropout;
pub use lstm::{Lstm, LstmCache};
pub use norm::BatchNorm1d;
pub use pool::{GlobalMaxPool, MaxPool1d};
pub use tape::{run_backward, run_forward, GradTape};

use crate::attention::{SeCache, SqueezeExcitation, WSense, WSenseCache};
use crate::{Error, Result, Rng, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

/// Per-call forward state: mode plus the generator for dropout masks.
pub struct Context<'a> {
    pub mode: Mode,
    pub rng: &'a mut Rng,
}

impl<'a> Context<'a> {
    pub fn new(mode: Mode, rng: &'a mut Rng) -> Self {
        Self { mode, rng }
    }

    pub fn is_train(&self) -> bool {
        self.mode == Mode::Train
    }
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct ParamCount {
    pub trainable: usize,
    /// Trainable plus non-trainable (batchnorm moving statistics).
    pub total: usize,
}

impl ParamCount {
    pub fn trainable(n: usize) -> Self {
        Self {
            trainable: n,
            total: n,
        }
    }
}

impl Add for ParamCount {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self {
            trainable: self.trainable + rhs.trainable,
            total: self.total + rhs.total,
        }
    }
}

impl AddAssign for ParamCount {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl core::iter::Sum for ParamCount {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), Add::add)
    }
}

/// Forward intermediates a layer needs for its backward pass.
#[derive(Debug, Clone)]
pub enum Cache {
    /// The layer input (conv, dense).
    Input(Tensor),
    /// Only the input shape (flatten).
    Shape(Vec<usize>),
    Activation {
        input: Tensor,
        output: Tensor,
    },
    BatchNorm {
        xhat: Tensor,
        inv_std: Vec<f64>,
        batch_mean: Vec<f64>,
        batch_var: Vec<f64>,
        train: bool,
    },
    /// Flat input offsets of each pooled output element.
    Argmax {
        input_shape: Vec<usize>,
        winners: Vec<usize>,
    },
    /// Inverted-dropout multipliers; `None` in inference mode.
    Mask(Option<Vec<f64>>),
    Lstm(Box<LstmCache>),
    WSense(Box<WSenseCache>),
    Se(Box<SeCache>),
}

pub(crate) fn wrong_cache() -> Error {
    Error::State("cache does not belong to this layer")
}

/// Common interface of every layer kind.
pub trait Module {
    fn forward(&self, x: &Tensor, ctx: &mut Context<'_>) -> Result<(Tensor, Cache)>;

    /// Returns the input gradient and one gradient per [`Module::params`]
    /// entry, in the same order.
    fn backward(&self, cache: &Cache, grad: &Tensor) -> Result<(Tensor, Vec<Tensor>)>;

    /// Trainable tensors.
    fn params(&self) -> Vec<&Tensor> {
        Vec::new()
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        Vec::new()
    }

    /// Every stored tensor (trainable and not), for serialization.
    fn named_tensors(&self) -> Vec<(String, &Tensor)> {
        Vec::new()
    }

    fn named_tensors_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        Vec::new()
    }

    fn count_params(&self) -> ParamCount {
        ParamCount::default()
    }

    /// Per-sample output shape (no batch axis) for a per-sample input shape.
    fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>>;

    /// Fold training-time side effects (moving statistics) back into the layer.
    fn commit(&mut self, _cache: &Cache) {}
}

/// Reshapes `[B, rest...]` to `[B, prod(rest)]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Flatten;

impl Module for Flatten {
    fn forward(&self, x: &Tensor, _ctx: &mut Context<'_>) -> Result<(Tensor, Cache)> {
        let b = x.shape()[0];
        let out = x.clone().reshape(&[b, x.len() / b])?;
        Ok((out, Cache::Shape(x.shape().to_vec())))
    }

    fn backward(&self, cache: &Cache, grad: &Tensor) -> Result<(Tensor, Vec<Tensor>)> {
        let Cache::Shape(shape) = cache else {
            return Err(wrong_cache());
        };
        Ok((grad.clone().reshape(shape)?, Vec::new()))
    }

    fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        Ok(alloc::vec![input.iter().product()])
    }
}

/// Tag naming a layer kind, used in audits and checkpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerKind {
    Conv1d,
    BatchNorm1d,
    MaxPool1d,
    GlobalMaxPool,
    Dense,
    Lstm,
    Dropout,
    Activation,
    Flatten,
    WSense,
    SqueezeExcitation,
}

impl LayerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LayerKind::Conv1d => "conv1d",
            LayerKind::BatchNorm1d => "batchnorm1d",
            LayerKind::MaxPool1d => "maxpool1d",
            LayerKind::GlobalMaxPool => "globalmaxpool",
            LayerKind::Dense => "dense",
            LayerKind::Lstm => "lstm",
            LayerKind::Dropout => "dropout",
            LayerKind::Activation => "activation",
            LayerKind::Flatten => "flatten",
            LayerKind::WSense => "wsense",
            LayerKind::SqueezeExcitation => "squeeze_excitation",
        }
    }
}

#[derive(Debug, Clone)]
pub enum Layer {
    Conv1d(Conv1d),
    BatchNorm1d(BatchNorm1d),
    MaxPool1d(MaxPool1d),
    GlobalMaxPool(GlobalMaxPool),
    Dense(Dense),
    Lstm(Lstm),
    Dropout(Dropout),
    Activation(Activation),
    Flatten(Flatten),
    WSense(WSense),
    SqueezeExcitation(SqueezeExcitation),
}

macro_rules! dispatch {
    ($self:expr, $l:ident => $e:expr) => {
        match $self {
            Layer::Conv1d($l) => $e,
            Layer::BatchNorm1d($l) => $e,
            Layer::MaxPool1d($l) => $e,
            Layer::GlobalMaxPool($l) => $e,
            Layer::Dense($l) => $e,
            Layer::Lstm($l) => $e,
            Layer::Dropout($l) => $e,
            Layer::Activation($l) => $e,
            Layer::Flatten($l) => $e,
            Layer::WSense($l) => $e,
            Layer::SqueezeExcitation($l) => $e,
        }
    };
}

impl Layer {
    pub fn kind(&self) -> LayerKind {
        match self {
            Layer::Conv1d(_) => LayerKind::Conv1d,
            Layer::BatchNorm1d(_) => LayerKind::BatchNorm1d,
            Layer::MaxPool1d(_) => LayerKind::MaxPool1d,
            Layer::GlobalMaxPool(_) => LayerKind::GlobalMaxPool,
            Layer::Dense(_) => LayerKind::Dense,
            Layer::Lstm(_) => LayerKind::Lstm,
            Layer::Dropout(_) => LayerKind::Dropout,
            Layer::Activation(_) => LayerKind::Activation,
            Layer::Flatten(_) => LayerKind::Flatten,
            Layer::WSense(_) => LayerKind::WSense,
            Layer::SqueezeExcitation(_) => LayerKind::SqueezeExcitation,
        }
    }
}

impl Module for Layer {
    fn forward(&self, x: &Tensor, ctx: &mut Context<'_>) -> Result<(Tensor, Cache)> {
        dispatch!(self, l => l.forward(x, ctx))
    }
    fn backward(&self, cache: &Cache, grad: &Tensor) -> Result<(Tensor, Vec<Tensor>)> {
        dispatch!(self, l => l.backward(cache, grad))
    }
    fn params(&self) -> Vec<&Tensor> {
        dispatch!(self, l => l.params())
    }
    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        dispatch!(self, l => l.params_mut())
    }
    fn named_tensors(&self) -> Vec<(String, &Tensor)> {
        dispatch!(self, l => l.named_tensors())
    }
    fn named_tensors_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        dispatch!(self, l => l.named_tensors_mut())
    }
    fn count_params(&self) -> ParamCount {
        dispatch!(self, l => l.count_params())
    }
    fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        dispatch!(self, l => l.output_shape(input))
    }
    fn commit(&mut self, cache: &Cache) {
        dispatch!(self, l => l.commit(cache))
    }
}

/// Unpack a sequence tensor into `(batch, time, channels)`.
pub(crate) fn seq_dims(op: &'static str, x: &Tensor) -> Result<(usize, usize, usize)> {
    match *x.shape() {
        [t, c] => Ok((1, t, c)),
        [b, t, c] => Ok((b, t, c)),
        _ => Err(Error::shape(op, x.shape(), &[0, 0, 0])),
    }
}

/// Shape of a sequence output with the same batching convention as `x`.
pub(crate) fn seq_shape(x: &Tensor, b: usize, t: usize, c: usize) -> Vec<usize> {
    if x.rank() == 2 {
        alloc::vec![t, c]
    } else {
        alloc::vec![b, t, c]
    }
}

/// Fill with `U(-limit, limit)`.
pub(crate) fn fill_uniform(t: &mut Tensor, limit: f64, rng: &mut Rng) {
    for v in t.data_mut() {
        *v = rng.gen_range(-limit..limit);
    }
}
