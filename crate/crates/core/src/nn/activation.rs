use alloc::vec;
use alloc::vec::Vec;

use super::{wrong_cache, Cache, Context, Module};
use crate::{Result, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    /// `z` for `z >= 0`, `exp(z) - 1` otherwise.
    Elu,
    Sigmoid,
    Tanh,
    /// Over the trailing axis.
    Softmax,
}

impl Activation {
    pub fn as_str(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Elu => "elu",
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
            Activation::Softmax => "softmax",
        }
    }

    pub fn apply(self, x: &Tensor) -> Tensor {
        match self {
            Activation::Relu => x.map(|v| v.max(0.0)),
            Activation::Elu => x.map(elu),
            Activation::Sigmoid => x.map(sigmoid),
            Activation::Tanh => x.map(libm::tanh),
            Activation::Softmax => {
                let k = *x.shape().last().unwrap();
                let mut out = x.clone();
                softmax_rows(out.data_mut(), k);
                out
            }
        }
    }

    /// Gradient w.r.t. the input given the forward input/output pair.
    pub fn grad(self, input: &Tensor, output: &Tensor, grad: &Tensor) -> Tensor {
        let (x, y, g) = (input.data(), output.data(), grad.data());
        let data: Vec<f64> = match self {
            Activation::Relu => x
                .iter()
                .zip(g)
                .map(|(&x, &g)| if x > 0.0 { g } else { 0.0 })
                .collect(),
            Activation::Elu => x
                .iter()
                .zip(y)
                .zip(g)
                // d/dz (exp(z) - 1) = y + 1 below zero
                .map(|((&x, &y), &g)| if x >= 0.0 { g } else { g * (y + 1.0) })
                .collect(),
            Activation::Sigmoid => y.iter().zip(g).map(|(&s, &g)| g * s * (1.0 - s)).collect(),
            Activation::Tanh => y.iter().zip(g).map(|(&t, &g)| g * (1.0 - t * t)).collect(),
            Activation::Softmax => {
                let k = *input.shape().last().unwrap();
                let mut out = vec![0.0; y.len()];
                for ((o, s), gr) in out.chunks_mut(k).zip(y.chunks(k)).zip(g.chunks(k)) {
                    let dot: f64 = s.iter().zip(gr).map(|(a, b)| a * b).sum();
                    for ((o, &s), &gr) in o.iter_mut().zip(s).zip(gr) {
                        *o = s * (gr - dot);
                    }
                }
                out
            }
        };
        Tensor::new(input.shape().to_vec(), data).expect("shape preserved")
    }
}

pub fn elu(z: f64) -> f64 {
    if z >= 0.0 {
        z
    } else {
        libm::expm1(z)
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}

/// In-place max-shifted softmax over consecutive rows of length `k`.
pub fn softmax_rows(data: &mut [f64], k: usize) {
    for row in data.chunks_mut(k) {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = libm::exp(*v - max);
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
}

impl Module for Activation {
    fn forward(&self, x: &Tensor, _ctx: &mut Context<'_>) -> Result<(Tensor, Cache)> {
        let y = self.apply(x).check_finite("activation")?;
        Ok((
            y.clone(),
            Cache::Activation {
                input: x.clone(),
                output: y,
            },
        ))
    }

    fn backward(&self, cache: &Cache, grad: &Tensor) -> Result<(Tensor, Vec<Tensor>)> {
        let Cache::Activation { input, output } = cache else {
            return Err(wrong_cache());
        };
        Ok((self.grad(input, output, grad), Vec::new()))
    }

    fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        Ok(input.to_vec())
    }
}
