use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::{fill_uniform, seq_dims, seq_shape, wrong_cache, Cache, Context, Module, ParamCount};
use crate::{Error, Result, Rng, Tensor};

/// Stride-1 1-D convolution with "same" zero padding.
///
/// `z_i = Σ_j f_iʲ ∗ xʲ + b_i`, implemented as cross-correlation: output step
/// `t` reads inputs `t - left .. t - left + k` with `left = (k - 1) / 2`, so
/// any odd-sized kernel is centered and an even one leans right.
#[derive(Debug, Clone)]
pub struct Conv1d {
    /// `[kernel_size, in_channels, out_channels]`
    pub kernel: Tensor,
    /// `[out_channels]`
    pub bias: Tensor,
}

impl Conv1d {
    pub fn new(kernel_size: usize, in_channels: usize, out_channels: usize) -> Self {
        Self {
            kernel: Tensor::zeros(&[kernel_size, in_channels, out_channels]),
            bias: Tensor::zeros(&[out_channels]),
        }
    }

    pub fn from_weights(kernel: Tensor, bias: Tensor) -> Result<Self> {
        if kernel.rank() != 3 || bias.shape() != [kernel.shape()[2]] {
            return Err(Error::shape("conv1d", kernel.shape(), bias.shape()));
        }
        Ok(Self { kernel, bias })
    }

    pub fn kernel_size(&self) -> usize {
        self.kernel.shape()[0]
    }

    pub fn in_channels(&self) -> usize {
        self.kernel.shape()[1]
    }

    pub fn out_channels(&self) -> usize {
        self.kernel.shape()[2]
    }

    /// Uniform init scaled by fan-in (`k · C'`); biases stay zero.
    pub fn init(&mut self, gain: f64, rng: &mut Rng) {
        let fan_in = (self.kernel_size() * self.in_channels()) as f64;
        fill_uniform(&mut self.kernel, libm::sqrt(gain / fan_in), rng);
        self.bias.fill(0.0);
    }

    fn left_pad(&self) -> usize {
        (self.kernel_size() - 1) / 2
    }
}

impl Module for Conv1d {
    fn forward(&self, x: &Tensor, _ctx: &mut Context<'_>) -> Result<(Tensor, Cache)> {
        let (b, t, cin) = seq_dims("conv1d", x)?;
        if cin != self.in_channels() {
            return Err(Error::shape("conv1d", x.shape(), self.kernel.shape()));
        }
        let (k, cout, left) = (self.kernel_size(), self.out_channels(), self.left_pad());
        let w = self.kernel.data();
        let xd = x.data();
        let mut out = vec![0.0; b * t * cout];
        for bi in 0..b {
            for ti in 0..t {
                let row = &mut out[(bi * t + ti) * cout..(bi * t + ti + 1) * cout];
                row.copy_from_slice(self.bias.data());
                for j in 0..k {
                    let Some(src) = (ti + j).checked_sub(left).filter(|&s| s < t) else {
                        continue;
                    };
                    let xr = &xd[(bi * t + src) * cin..(bi * t + src + 1) * cin];
                    let wj = &w[j * cin * cout..(j + 1) * cin * cout];
                    for (ci, &xv) in xr.iter().enumerate() {
                        for (o, &wv) in row.iter_mut().zip(&wj[ci * cout..(ci + 1) * cout]) {
                            *o += xv * wv;
                        }
                    }
                }
            }
        }
        let y = Tensor::new(seq_shape(x, b, t, cout), out)?.check_finite("conv1d")?;
        Ok((y, Cache::Input(x.clone())))
    }

    fn backward(&self, cache: &Cache, grad: &Tensor) -> Result<(Tensor, Vec<Tensor>)> {
        let Cache::Input(x) = cache else {
            return Err(wrong_cache());
        };
        let (b, t, cin) = seq_dims("conv1d", x)?;
        let (k, cout, left) = (self.kernel_size(), self.out_channels(), self.left_pad());
        if grad.len() != b * t * cout {
            return Err(Error::shape("conv1d backward", grad.shape(), &[b, t, cout]));
        }
        let w = self.kernel.data();
        let (xd, gd) = (x.data(), grad.data());
        let mut dx = vec![0.0; xd.len()];
        let mut dw = vec![0.0; w.len()];
        let mut db = vec![0.0; cout];
        for bi in 0..b {
            for ti in 0..t {
                let g = &gd[(bi * t + ti) * cout..(bi * t + ti + 1) * cout];
                for (d, &gv) in db.iter_mut().zip(g) {
                    *d += gv;
                }
                for j in 0..k {
                    let Some(src) = (ti + j).checked_sub(left).filter(|&s| s < t) else {
                        continue;
                    };
                    let base = (bi * t + src) * cin;
                    for ci in 0..cin {
                        let off = (j * cin + ci) * cout;
                        let wr = &w[off..off + cout];
                        let dwr = &mut dw[off..off + cout];
                        let xv = xd[base + ci];
                        let mut acc = 0.0;
                        for ((dwv, &wv), &gv) in dwr.iter_mut().zip(wr).zip(g) {
                            *dwv += xv * gv;
                            acc += wv * gv;
                        }
                        dx[base + ci] += acc;
                    }
                }
            }
        }
        Ok((
            Tensor::new(x.shape().to_vec(), dx)?,
            vec![
                Tensor::new(self.kernel.shape().to_vec(), dw)?,
                Tensor::new(vec![cout], db)?,
            ],
        ))
    }

    fn params(&self) -> Vec<&Tensor> {
        vec![&self.kernel, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.kernel, &mut self.bias]
    }

    fn named_tensors(&self) -> Vec<(String, &Tensor)> {
        vec![("kernel".into(), &self.kernel), ("bias".into(), &self.bias)]
    }

    fn named_tensors_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        vec![
            ("kernel".into(), &mut self.kernel),
            ("bias".into(), &mut self.bias),
        ]
    }

    fn count_params(&self) -> ParamCount {
        ParamCount::trainable(self.kernel.len() + self.bias.len())
    }

    fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        match *input {
            [t, c] if c == self.in_channels() => Ok(vec![t, self.out_channels()]),
            _ => Err(Error::Config(format!(
                "conv1d expects [time, {}], got {input:?}",
                self.in_channels()
            ))),
        }
    }
}
