use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::{fill_uniform, wrong_cache, Cache, Context, Module, ParamCount};
use crate::{Error, Result, Rng, Tensor};

/// Fully connected layer `x·W + b` over the trailing axis.
#[derive(Debug, Clone)]
pub struct Dense {
    /// `[in_features, units]`
    pub weight: Tensor,
    pub bias: Option<Tensor>,
}

impl Dense {
    pub fn new(in_features: usize, units: usize, bias: bool) -> Self {
        Self {
            weight: Tensor::zeros(&[in_features, units]),
            bias: bias.then(|| Tensor::zeros(&[units])),
        }
    }

    pub fn from_weights(weight: Tensor, bias: Option<Tensor>) -> Result<Self> {
        if weight.rank() != 2 {
            return Err(Error::shape("dense", weight.shape(), &[0, 0]));
        }
        if let Some(b) = &bias {
            if b.shape() != [weight.shape()[1]] {
                return Err(Error::shape("dense", weight.shape(), b.shape()));
            }
        }
        Ok(Self { weight, bias })
    }

    pub fn in_features(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn units(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn init(&mut self, gain: f64, rng: &mut Rng) {
        let limit = libm::sqrt(gain / self.in_features() as f64);
        fill_uniform(&mut self.weight, limit, rng);
        if let Some(b) = &mut self.bias {
            b.fill(0.0);
        }
    }

    fn rows(&self, x: &Tensor) -> Result<usize> {
        if x.shape().last() != Some(&self.in_features()) {
            return Err(Error::shape("dense", x.shape(), self.weight.shape()));
        }
        Ok(x.len() / self.in_features())
    }
}

impl Module for Dense {
    fn forward(&self, x: &Tensor, _ctx: &mut Context<'_>) -> Result<(Tensor, Cache)> {
        let rows = self.rows(x)?;
        let x2 = x.clone().reshape(&[rows, self.in_features()])?;
        let mut y = x2.matmul(&self.weight)?;
        if let Some(b) = &self.bias {
            y = y.add(b)?;
        }
        let mut shape = x.shape().to_vec();
        *shape.last_mut().unwrap() = self.units();
        Ok((y.reshape(&shape)?, Cache::Input(x.clone())))
    }

    fn backward(&self, cache: &Cache, grad: &Tensor) -> Result<(Tensor, Vec<Tensor>)> {
        let Cache::Input(x) = cache else {
            return Err(wrong_cache());
        };
        let rows = self.rows(x)?;
        let x2 = x.clone().reshape(&[rows, self.in_features()])?;
        let g2 = grad.clone().reshape(&[rows, self.units()])?;
        let dw = x2.matmul_tn(&g2)?;
        let dx = g2.matmul_nt(&self.weight)?.reshape(x.shape())?;
        let mut grads = vec![dw];
        if self.bias.is_some() {
            let mut db = vec![0.0; self.units()];
            for row in g2.data().chunks(self.units()) {
                for (d, &g) in db.iter_mut().zip(row) {
                    *d += g;
                }
            }
            grads.push(Tensor::new(vec![self.units()], db)?);
        }
        Ok((dx, grads))
    }

    fn params(&self) -> Vec<&Tensor> {
        let mut p = vec![&self.weight];
        p.extend(self.bias.as_ref());
        p
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut p = vec![&mut self.weight];
        p.extend(self.bias.as_mut());
        p
    }

    fn named_tensors(&self) -> Vec<(String, &Tensor)> {
        let mut p = vec![(String::from("kernel"), &self.weight)];
        p.extend(self.bias.as_ref().map(|b| (String::from("bias"), b)));
        p
    }

    fn named_tensors_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        let mut p = vec![(String::from("kernel"), &mut self.weight)];
        p.extend(self.bias.as_mut().map(|b| (String::from("bias"), b)));
        p
    }

    fn count_params(&self) -> ParamCount {
        ParamCount::trainable(self.weight.len() + self.bias.as_ref().map_or(0, Tensor::len))
    }

    fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        if input.last() != Some(&self.in_features()) {
            return Err(Error::Config(format!(
                "dense expects trailing extent {}, got {input:?}",
                self.in_features()
            )));
        }
        let mut out = input.to_vec();
        *out.last_mut().unwrap() = self.units();
        Ok(out)
    }
}
