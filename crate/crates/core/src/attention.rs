//! Channel-attention blocks: the WSense module and the squeeze-and-excitation
//! block it is compared against.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::nn::{
    sigmoid, wrong_cache, Activation, Cache, Context, Conv1d, Dense, GlobalMaxPool, Module,
    ParamCount,
};
use crate::{Error, Result, Rng, Tensor};

/// WSense: `m = gmp(elu(conv₅(x)))`, `g = σ(conv₁(m))`, output `m ⊙ g`.
///
/// Global max pooling collapses the time axis before the kernel-1 gate, so
/// the output is a `(C,)` summary for every input length. Input `[B, T, C]`
/// gives `[B, C]`; a single `[T, C]` sequence gives `[C]`.
#[derive(Debug, Clone)]
pub struct WSense {
    /// Kernel 5, `C → C`, ELU.
    pub conv_a: Conv1d,
    /// Kernel 1, `C → C`, sigmoid gate.
    pub conv_b: Conv1d,
}

#[derive(Debug, Clone)]
pub struct WSenseCache {
    conv_a: Cache,
    pre_elu: Tensor,
    post_elu: Tensor,
    pool: Cache,
    pooled: Tensor,
    conv_b: Cache,
    gate: Tensor,
    input_rank: usize,
}

impl WSense {
    pub const KERNEL_A: usize = 5;
    pub const KERNEL_B: usize = 1;

    pub fn new(channels: usize) -> Self {
        Self {
            conv_a: Conv1d::new(Self::KERNEL_A, channels, channels),
            conv_b: Conv1d::new(Self::KERNEL_B, channels, channels),
        }
    }

    pub fn from_convs(conv_a: Conv1d, conv_b: Conv1d) -> Result<Self> {
        let c = conv_a.in_channels();
        let ok = conv_a.kernel_size() == Self::KERNEL_A
            && conv_b.kernel_size() == Self::KERNEL_B
            && [conv_a.out_channels(), conv_b.in_channels(), conv_b.out_channels()] == [c, c, c];
        if !ok {
            return Err(Error::Config(format!(
                "wsense needs kernels 5 and 1 with equal channels, got {:?} and {:?}",
                conv_a.kernel.shape(),
                conv_b.kernel.shape()
            )));
        }
        Ok(Self { conv_a, conv_b })
    }

    pub fn channels(&self) -> usize {
        self.conv_a.in_channels()
    }

    pub fn init(&mut self, rng: &mut Rng) {
        self.conv_a.init(6.0, rng);
        self.conv_b.init(3.0, rng);
    }

    /// Gate values `σ(conv₁(m))` for an input, shape `[B, 1, C]`.
    pub fn gates(&self, x: &Tensor, ctx: &mut Context<'_>) -> Result<Tensor> {
        let (_, cache) = self.forward(x, ctx)?;
        match cache {
            Cache::WSense(c) => Ok(c.gate),
            _ => unreachable!(),
        }
    }
}

impl Module for WSense {
    fn forward(&self, x: &Tensor, ctx: &mut Context<'_>) -> Result<(Tensor, Cache)> {
        let batched = x.rank() == 3;
        let (pre_elu, conv_a) = self.conv_a.forward(x, ctx)?;
        let post_elu = Activation::Elu.apply(&pre_elu);
        let (pooled, pool) = GlobalMaxPool.forward(&post_elu, ctx)?;
        let (logits, conv_b) = self.conv_b.forward(&pooled, ctx)?;
        let gate = logits.map(sigmoid);
        let out = pooled.mul(&gate)?;
        let c = self.channels();
        let out = if batched {
            let b = out.len() / c;
            out.reshape(&[b, c])?
        } else {
            out.reshape(&[c])?
        };
        let cache = WSenseCache {
            conv_a,
            pre_elu,
            post_elu,
            pool,
            pooled,
            conv_b,
            gate,
            input_rank: x.rank(),
        };
        Ok((out, Cache::WSense(alloc::boxed::Box::new(cache))))
    }

    fn backward(&self, cache: &Cache, grad: &Tensor) -> Result<(Tensor, Vec<Tensor>)> {
        let Cache::WSense(c) = cache else {
            return Err(wrong_cache());
        };
        if grad.len() != c.pooled.len() {
            return Err(Error::shape("wsense backward", grad.shape(), c.pooled.shape()));
        }
        let grad = grad.clone().reshape(c.pooled.shape())?;
        // out = m ⊙ g: m feeds the output directly and through the gate
        let d_gate = grad.mul(&c.pooled)?;
        let d_logits = Tensor::new(
            d_gate.shape().to_vec(),
            d_gate
                .data()
                .iter()
                .zip(c.gate.data())
                .map(|(d, g)| d * g * (1.0 - g))
                .collect(),
        )?;
        let (dm_gate, grads_b) = self.conv_b.backward(&c.conv_b, &d_logits)?;
        let dm = grad.mul(&c.gate)?.add(&dm_gate)?;
        let (d_post, _) = GlobalMaxPool.backward(&c.pool, &dm)?;
        let d_pre = Activation::Elu.grad(&c.pre_elu, &c.post_elu, &d_post);
        let (dx, grads_a) = self.conv_a.backward(&c.conv_a, &d_pre)?;
        debug_assert!(c.input_rank == dx.rank());
        let mut grads = grads_a;
        grads.extend(grads_b);
        Ok((dx, grads))
    }

    fn params(&self) -> Vec<&Tensor> {
        let mut p = self.conv_a.params();
        p.extend(self.conv_b.params());
        p
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut p = self.conv_a.params_mut();
        p.extend(self.conv_b.params_mut());
        p
    }

    fn named_tensors(&self) -> Vec<(String, &Tensor)> {
        let a = self.conv_a.named_tensors().into_iter().map(|(n, t)| (format!("conv_a/{n}"), t));
        let b = self.conv_b.named_tensors().into_iter().map(|(n, t)| (format!("conv_b/{n}"), t));
        a.chain(b).collect()
    }

    fn named_tensors_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        let a = self.conv_a.named_tensors_mut().into_iter().map(|(n, t)| (format!("conv_a/{n}"), t));
        let b = self.conv_b.named_tensors_mut().into_iter().map(|(n, t)| (format!("conv_b/{n}"), t));
        a.chain(b).collect()
    }

    fn count_params(&self) -> ParamCount {
        self.conv_a.count_params() + self.conv_b.count_params()
    }

    fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        self.conv_a.output_shape(input)?;
        Ok(vec![self.channels()])
    }
}

/// Squeeze-and-excitation: average-pool over time, bias-free bottleneck
/// `C → C/r → C` with ReLU then sigmoid, and per-channel rescaling of the
/// input.
#[derive(Debug, Clone)]
pub struct SqueezeExcitation {
    pub fc1: Dense,
    pub fc2: Dense,
    pub ratio: usize,
}

#[derive(Debug, Clone)]
pub struct SeCache {
    x: Tensor,
    fc1: Cache,
    hidden_pre: Tensor,
    fc2: Cache,
    scale: Tensor,
}

impl SqueezeExcitation {
    pub fn new(channels: usize, ratio: usize) -> Result<Self> {
        if ratio == 0 || channels % ratio != 0 {
            return Err(Error::Config(format!(
                "reduction ratio {ratio} does not divide {channels} channels"
            )));
        }
        Ok(Self {
            fc1: Dense::new(channels, channels / ratio, false),
            fc2: Dense::new(channels / ratio, channels, false),
            ratio,
        })
    }

    pub fn channels(&self) -> usize {
        self.fc1.in_features()
    }

    pub fn init(&mut self, rng: &mut Rng) {
        self.fc1.init(6.0, rng);
        self.fc2.init(3.0, rng);
    }
}

impl Module for SqueezeExcitation {
    fn forward(&self, x: &Tensor, ctx: &mut Context<'_>) -> Result<(Tensor, Cache)> {
        let (b, t, c) = crate::nn::seq_dims("squeeze_excitation", x)?;
        if c != self.channels() {
            return Err(Error::shape("squeeze_excitation", x.shape(), &[self.channels()]));
        }
        let xb = x.clone().reshape(&[b, t, c])?;
        let squeezed = xb.reduce(crate::tensor::Reduce::Mean, 1)?;
        let (hidden_pre, fc1) = self.fc1.forward(&squeezed, ctx)?;
        let hidden = Activation::Relu.apply(&hidden_pre);
        let (logits, fc2) = self.fc2.forward(&hidden, ctx)?;
        let scale = logits.map(sigmoid);
        let out = xb.mul(&scale.clone().reshape(&[b, 1, c])?)?.reshape(x.shape())?;
        let cache = SeCache {
            x: x.clone(),
            fc1,
            hidden_pre,
            fc2,
            scale,
        };
        Ok((out, Cache::Se(alloc::boxed::Box::new(cache))))
    }

    fn backward(&self, cache: &Cache, grad: &Tensor) -> Result<(Tensor, Vec<Tensor>)> {
        let Cache::Se(cache) = cache else {
            return Err(wrong_cache());
        };
        let (b, t, c) = crate::nn::seq_dims("squeeze_excitation", &cache.x)?;
        if grad.len() != cache.x.len() {
            return Err(Error::shape("squeeze_excitation backward", grad.shape(), cache.x.shape()));
        }
        let (gd, xd, sd) = (grad.data(), cache.x.data(), cache.scale.data());
        let mut dx = vec![0.0; xd.len()];
        let mut d_scale = vec![0.0; b * c];
        for bi in 0..b {
            for ti in 0..t {
                for ch in 0..c {
                    let o = (bi * t + ti) * c + ch;
                    dx[o] = gd[o] * sd[bi * c + ch];
                    d_scale[bi * c + ch] += gd[o] * xd[o];
                }
            }
        }
        let d_logits = Tensor::new(
            vec![b, c],
            d_scale.iter().zip(sd).map(|(d, s)| d * s * (1.0 - s)).collect(),
        )?;
        let (d_hidden, g2) = self.fc2.backward(&cache.fc2, &d_logits)?;
        let hidden = Activation::Relu.apply(&cache.hidden_pre);
        let d_hidden_pre = Activation::Relu.grad(&cache.hidden_pre, &hidden, &d_hidden);
        let (d_squeezed, g1) = self.fc1.backward(&cache.fc1, &d_hidden_pre)?;
        // the mean over time spreads evenly back to every step
        let ds = d_squeezed.data();
        for bi in 0..b {
            for ti in 0..t {
                for ch in 0..c {
                    dx[(bi * t + ti) * c + ch] += ds[bi * c + ch] / t as f64;
                }
            }
        }
        let mut grads = g1;
        grads.extend(g2);
        Ok((Tensor::new(cache.x.shape().to_vec(), dx)?, grads))
    }

    fn params(&self) -> Vec<&Tensor> {
        vec![&self.fc1.weight, &self.fc2.weight]
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.fc1.weight, &mut self.fc2.weight]
    }

    fn named_tensors(&self) -> Vec<(String, &Tensor)> {
        vec![
            ("fc1/kernel".into(), &self.fc1.weight),
            ("fc2/kernel".into(), &self.fc2.weight),
        ]
    }

    fn named_tensors_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        vec![
            ("fc1/kernel".into(), &mut self.fc1.weight),
            ("fc2/kernel".into(), &mut self.fc2.weight),
        ]
    }

    fn count_params(&self) -> ParamCount {
        self.fc1.count_params() + self.fc2.count_params()
    }

    fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        match *input {
            [_, c] if c == self.channels() => Ok(input.to_vec()),
            _ => Err(Error::Config(format!(
                "squeeze_excitation over {} channels got {input:?}",
                self.channels()
            ))),
        }
    }
}
