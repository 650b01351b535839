use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{seq_dims, seq_shape, wrong_cache, Cache, Context, Module};
use crate::{Error, Result, Tensor};

/// Non-overlapping max pooling over time; a trailing remainder is dropped.
#[derive(Debug, Clone, Copy)]
pub struct MaxPool1d {
    pub pool: usize,
}

impl Default for MaxPool1d {
    fn default() -> Self {
        Self { pool: 2 }
    }
}

/// Per-channel maximum over the whole time axis, keeping a length-1 time
/// axis: `[B, T, C] → [B, 1, C]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct GlobalMaxPool;

/// Route `grad` back to the recorded winner offsets.
fn scatter(cache: &Cache, grad: &Tensor) -> Result<(Tensor, Vec<Tensor>)> {
    let Cache::Argmax {
        input_shape,
        winners,
    } = cache
    else {
        return Err(wrong_cache());
    };
    if grad.len() != winners.len() {
        return Err(Error::shape("pool backward", grad.shape(), input_shape));
    }
    let mut dx = Tensor::zeros(input_shape);
    let d = dx.data_mut();
    for (&w, &g) in winners.iter().zip(grad.data()) {
        d[w] += g;
    }
    Ok((dx, Vec::new()))
}

/// Max over `len` time steps starting at `t0`; ties go to the earliest step.
fn argmax_lane(xd: &[f64], base: usize, t0: usize, len: usize, c: usize, ch: usize) -> usize {
    let mut best = base + t0 * c + ch;
    for s in 1..len {
        let o = base + (t0 + s) * c + ch;
        if xd[o] > xd[best] {
            best = o;
        }
    }
    best
}

impl Module for MaxPool1d {
    fn forward(&self, x: &Tensor, _ctx: &mut Context<'_>) -> Result<(Tensor, Cache)> {
        let (b, t, c) = seq_dims("maxpool1d", x)?;
        if t < self.pool {
            return Err(Error::shape("maxpool1d", x.shape(), &[self.pool]));
        }
        let to = t / self.pool;
        let xd = x.data();
        let mut winners = Vec::with_capacity(b * to * c);
        for bi in 0..b {
            for o in 0..to {
                for ch in 0..c {
                    winners.push(argmax_lane(xd, bi * t * c, o * self.pool, self.pool, c, ch));
                }
            }
        }
        let y = Tensor::new(seq_shape(x, b, to, c), winners.iter().map(|&w| xd[w]).collect())?;
        Ok((
            y,
            Cache::Argmax {
                input_shape: x.shape().to_vec(),
                winners,
            },
        ))
    }

    fn backward(&self, cache: &Cache, grad: &Tensor) -> Result<(Tensor, Vec<Tensor>)> {
        scatter(cache, grad)
    }

    fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        match *input {
            [t, c] if t >= self.pool => Ok(vec![t / self.pool, c]),
            _ => Err(Error::Config(format!(
                "maxpool{} cannot reduce {input:?}",
                self.pool
            ))),
        }
    }
}

impl Module for GlobalMaxPool {
    fn forward(&self, x: &Tensor, _ctx: &mut Context<'_>) -> Result<(Tensor, Cache)> {
        let (b, t, c) = seq_dims("globalmaxpool", x)?;
        let xd = x.data();
        let mut winners = Vec::with_capacity(b * c);
        for bi in 0..b {
            for ch in 0..c {
                winners.push(argmax_lane(xd, bi * t * c, 0, t, c, ch));
            }
        }
        let y = Tensor::new(seq_shape(x, b, 1, c), winners.iter().map(|&w| xd[w]).collect())?;
        Ok((
            y,
            Cache::Argmax {
                input_shape: x.shape().to_vec(),
                winners,
            },
        ))
    }

    fn backward(&self, cache: &Cache, grad: &Tensor) -> Result<(Tensor, Vec<Tensor>)> {
        scatter(cache, grad)
    }

    fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        match *input {
            [t, c] if t >= 1 => Ok(vec![1, c]),
            _ => Err(Error::Config(format!("globalmaxpool cannot reduce {input:?}"))),
        }
    }
}
