use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::{wrong_cache, Cache, Context, Module, ParamCount};
use crate::{Error, Result, Tensor};

/// Batch normalization over every axis but the last (channels).
///
/// Training mode normalizes with the biased batch variance; inference uses
/// the moving statistics. Moving statistics are updated in
/// [`Module::commit`] as `m ← momentum·m + (1 − momentum)·batch`.
#[derive(Debug, Clone)]
pub struct BatchNorm1d {
    pub gamma: Tensor,
    pub beta: Tensor,
    pub moving_mean: Tensor,
    pub moving_var: Tensor,
    pub momentum: f64,
    pub epsilon: f64,
}

impl BatchNorm1d {
    pub fn new(channels: usize, momentum: f64, epsilon: f64) -> Self {
        Self {
            gamma: Tensor::full(&[channels], 1.0),
            beta: Tensor::zeros(&[channels]),
            moving_mean: Tensor::zeros(&[channels]),
            moving_var: Tensor::full(&[channels], 1.0),
            momentum,
            epsilon,
        }
    }

    pub fn channels(&self) -> usize {
        self.gamma.len()
    }

    /// Reject non-positive moving variances (e.g. from a corrupt checkpoint).
    pub fn validate(&self) -> Result<()> {
        let c = self.channels();
        for t in [&self.beta, &self.moving_mean, &self.moving_var] {
            if t.shape() != [c] {
                return Err(Error::shape("batchnorm1d", t.shape(), &[c]));
            }
        }
        if self.moving_var.data().iter().any(|&v| v.is_nan() || v <= 0.0) {
            return Err(Error::Value("batchnorm moving_var must be positive".into()));
        }
        Ok(())
    }
}

impl Module for BatchNorm1d {
    fn forward(&self, x: &Tensor, ctx: &mut Context<'_>) -> Result<(Tensor, Cache)> {
        let c = self.channels();
        if x.shape().last() != Some(&c) {
            return Err(Error::shape("batchnorm1d", x.shape(), &[c]));
        }
        let n = x.len() / c;
        let xd = x.data();
        let (mean, var) = if ctx.is_train() {
            let mut mean = vec![0.0; c];
            for row in xd.chunks(c) {
                for (m, &v) in mean.iter_mut().zip(row) {
                    *m += v;
                }
            }
            mean.iter_mut().for_each(|m| *m /= n as f64);
            let mut var = vec![0.0; c];
            for row in xd.chunks(c) {
                for ((s, &v), &m) in var.iter_mut().zip(row).zip(&mean) {
                    *s += (v - m) * (v - m);
                }
            }
            var.iter_mut().for_each(|s| *s /= n as f64);
            (mean, var)
        } else {
            (
                self.moving_mean.data().to_vec(),
                self.moving_var.data().to_vec(),
            )
        };
        let inv_std: Vec<f64> = var
            .iter()
            .map(|v| 1.0 / libm::sqrt(v + self.epsilon))
            .collect();
        let mut xhat = vec![0.0; xd.len()];
        let mut y = vec![0.0; xd.len()];
        for ((hr, yr), xr) in xhat.chunks_mut(c).zip(y.chunks_mut(c)).zip(xd.chunks(c)) {
            for ch in 0..c {
                hr[ch] = (xr[ch] - mean[ch]) * inv_std[ch];
                yr[ch] = self.gamma.data()[ch] * hr[ch] + self.beta.data()[ch];
            }
        }
        let shape = x.shape().to_vec();
        let y = Tensor::new(shape.clone(), y)?.check_finite("batchnorm1d")?;
        Ok((
            y,
            Cache::BatchNorm {
                xhat: Tensor::new(shape, xhat)?,
                inv_std,
                batch_mean: mean,
                batch_var: var,
                train: ctx.is_train(),
            },
        ))
    }

    fn backward(&self, cache: &Cache, grad: &Tensor) -> Result<(Tensor, Vec<Tensor>)> {
        let Cache::BatchNorm {
            xhat,
            inv_std,
            train,
            ..
        } = cache
        else {
            return Err(wrong_cache());
        };
        let c = self.channels();
        if grad.shape() != xhat.shape() {
            return Err(Error::shape("batchnorm1d backward", grad.shape(), xhat.shape()));
        }
        let n = (grad.len() / c) as f64;
        let (gd, hd) = (grad.data(), xhat.data());
        let mut dgamma = vec![0.0; c];
        let mut dbeta = vec![0.0; c];
        for (gr, hr) in gd.chunks(c).zip(hd.chunks(c)) {
            for ch in 0..c {
                dgamma[ch] += gr[ch] * hr[ch];
                dbeta[ch] += gr[ch];
            }
        }
        let gamma = self.gamma.data();
        let mut dx = vec![0.0; gd.len()];
        for ((dr, gr), hr) in dx.chunks_mut(c).zip(gd.chunks(c)).zip(hd.chunks(c)) {
            for ch in 0..c {
                let scale = gamma[ch] * inv_std[ch];
                dr[ch] = if *train {
                    // batch statistics depend on every element of the channel
                    scale * (gr[ch] - (dbeta[ch] + hr[ch] * dgamma[ch]) / n)
                } else {
                    scale * gr[ch]
                };
            }
        }
        Ok((
            Tensor::new(grad.shape().to_vec(), dx)?,
            vec![Tensor::new(vec![c], dgamma)?, Tensor::new(vec![c], dbeta)?],
        ))
    }

    fn params(&self) -> Vec<&Tensor> {
        vec![&self.gamma, &self.beta]
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.gamma, &mut self.beta]
    }

    fn named_tensors(&self) -> Vec<(String, &Tensor)> {
        vec![
            ("gamma".into(), &self.gamma),
            ("beta".into(), &self.beta),
            ("moving_mean".into(), &self.moving_mean),
            ("moving_var".into(), &self.moving_var),
        ]
    }

    fn named_tensors_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        vec![
            ("gamma".into(), &mut self.gamma),
            ("beta".into(), &mut self.beta),
            ("moving_mean".into(), &mut self.moving_mean),
            ("moving_var".into(), &mut self.moving_var),
        ]
    }

    /// Two trainable vectors plus two non-trainable moving statistics.
    fn count_params(&self) -> ParamCount {
        let c = self.channels();
        ParamCount {
            trainable: 2 * c,
            total: 4 * c,
        }
    }

    fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        if input.last() == Some(&self.channels()) {
            Ok(input.to_vec())
        } else {
            Err(Error::Config(format!(
                "batchnorm1d over {} channels got {input:?}",
                self.channels()
            )))
        }
    }

    fn commit(&mut self, cache: &Cache) {
        if let Cache::BatchNorm {
            batch_mean,
            batch_var,
            train: true,
            ..
        } = cache
        {
            let m = self.momentum;
            for (mm, &b) in self.moving_mean.data_mut().iter_mut().zip(batch_mean) {
                *mm = m * *mm + (1.0 - m) * b;
            }
            for (mv, &b) in self.moving_var.data_mut().iter_mut().zip(batch_var) {
                *mv = m * *mv + (1.0 - m) * b;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Mode;

    #[test]
    fn inference_with_unit_stats_is_identity() {
        let bn = BatchNorm1d::new(2, 0.99, 0.0);
        let x = Tensor::new(vec![3, 2], vec![1.0, -2.0, 0.5, 4.0, 3.0, 3.0]).unwrap();
        let mut rng = crate::rng_from_seed(0);
        let y = bn.forward(&x, &mut Context::new(Mode::Infer, &mut rng)).unwrap().0;
        assert_eq!(y, x);
    }

    #[test]
    fn train_mode_normalizes_two_values_to_plus_minus_one() {
        let bn = BatchNorm1d::new(1, 0.99, 1e-5);
        let x = Tensor::new(vec![2, 1], vec![1.0, 3.0]).unwrap();
        let mut rng = crate::rng_from_seed(0);
        let y = bn.forward(&x, &mut Context::new(Mode::Train, &mut rng)).unwrap().0;
        let expect = 1.0 / libm::sqrt(1.0 + 1e-5);
        assert!((y.data()[0] + expect).abs() < 1e-12);
        assert!((y.data()[1] - expect).abs() < 1e-12);
    }

    #[test]
    fn commit_moves_statistics_toward_batch() {
        let mut bn = BatchNorm1d::new(1, 0.9, 1e-3);
        let x = Tensor::new(vec![2, 1], vec![1.0, 3.0]).unwrap();
        let mut rng = crate::rng_from_seed(0);
        let (_, cache) = bn.forward(&x, &mut Context::new(Mode::Train, &mut rng)).unwrap();
        bn.commit(&cache);
        assert!((bn.moving_mean.data()[0] - 0.2).abs() < 1e-12);
        assert!((bn.moving_var.data()[0] - (0.9 + 0.1 * 1.0)).abs() < 1e-12);
    }

    #[test]
    fn constant_channel_does_not_error() {
        let bn = BatchNorm1d::new(1, 0.99, 1e-3);
        let x = Tensor::full(&[4, 1], 2.0);
        let mut rng = crate::rng_from_seed(0);
        let y = bn.forward(&x, &mut Context::new(Mode::Train, &mut rng)).unwrap().0;
        assert!(y.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn counts_two_trainable_four_total_per_channel() {
        let c = BatchNorm1d::new(32, 0.99, 1e-3).count_params();
        assert_eq!((c.trainable, c.total), (64, 128));
    }
}
