use alloc::vec::Vec;

use rand::Rng as _;

use super::{wrong_cache, Cache, Context, Module};
use crate::{Error, Result, Tensor};

/// Inverted dropout: kept units are scaled by `1 / (1 - rate)` during
/// training, so inference is the identity.
#[derive(Debug, Clone, Copy)]
pub struct Dropout {
    pub rate: f64,
}

impl Dropout {
    pub fn new(rate: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::Config(alloc::format!("dropout rate {rate} not in [0, 1)")));
        }
        Ok(Self { rate })
    }

    /// Apply a fixed multiplier mask, as replayed in backward.
    pub fn forward_with_mask(&self, x: &Tensor, mask: Vec<f64>) -> Result<(Tensor, Cache)> {
        if mask.len() != x.len() {
            return Err(Error::shape("dropout", x.shape(), &[mask.len()]));
        }
        let y: Vec<f64> = x.data().iter().zip(&mask).map(|(a, m)| a * m).collect();
        Ok((Tensor::new(x.shape().to_vec(), y)?, Cache::Mask(Some(mask))))
    }
}

impl Module for Dropout {
    fn forward(&self, x: &Tensor, ctx: &mut Context<'_>) -> Result<(Tensor, Cache)> {
        if !ctx.is_train() || self.rate == 0.0 {
            return Ok((x.clone(), Cache::Mask(None)));
        }
        let keep = 1.0 - self.rate;
        let mask = (0..x.len())
            .map(|_| if ctx.rng.gen::<f64>() < keep { 1.0 / keep } else { 0.0 })
            .collect();
        self.forward_with_mask(x, mask)
    }

    fn backward(&self, cache: &Cache, grad: &Tensor) -> Result<(Tensor, Vec<Tensor>)> {
        let Cache::Mask(mask) = cache else {
            return Err(wrong_cache());
        };
        let dx = match mask {
            None => grad.clone(),
            Some(m) => Tensor::new(
                grad.shape().to_vec(),
                grad.data().iter().zip(m).map(|(g, m)| g * m).collect(),
            )?,
        };
        Ok((dx, Vec::new()))
    }

    fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        Ok(input.to_vec())
    }
}
