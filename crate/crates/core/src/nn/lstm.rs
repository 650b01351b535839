use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::activation::sigmoid;
use super::{fill_uniform, seq_dims, wrong_cache, Cache, Context, Module, ParamCount};
use crate::tensor::{gemm_nn, gemm_nt, gemm_tn};
use crate::{Error, Result, Rng, Tensor};

/// Single-layer LSTM with zero initial state.
///
/// One fused weight `[F + U, 4U]` acting on `[x_t, h_{t-1}]` and a single
/// `4U` bias; gate blocks are ordered input, forget, cell, output.
#[derive(Debug, Clone)]
pub struct Lstm {
    pub weight: Tensor,
    pub bias: Tensor,
    pub return_sequences: bool,
}

/// Per-step activations saved for backpropagation through time.
#[derive(Debug, Clone)]
pub struct LstmCache {
    input_shape: Vec<usize>,
    /// `[T][B][F + U]` concatenated inputs.
    xh: Vec<f64>,
    /// `[T][B][4U]` activated gates `(i, f, g, o)`.
    gates: Vec<f64>,
    /// `[T][B][U]` cell states.
    cells: Vec<f64>,
    /// `[T][B][U]` `tanh(c_t)`.
    tanh_cells: Vec<f64>,
}

impl Lstm {
    pub fn new(in_features: usize, units: usize, return_sequences: bool) -> Self {
        Self {
            weight: Tensor::zeros(&[in_features + units, 4 * units]),
            bias: Tensor::zeros(&[4 * units]),
            return_sequences,
        }
    }

    pub fn units(&self) -> usize {
        self.bias.len() / 4
    }

    pub fn in_features(&self) -> usize {
        self.weight.shape()[0] - self.units()
    }

    /// Uniform fan-in init over the fused `[x, h]` input; zero bias.
    pub fn init(&mut self, gain: f64, rng: &mut Rng) {
        let limit = libm::sqrt(gain / self.weight.shape()[0] as f64);
        fill_uniform(&mut self.weight, limit, rng);
        self.bias.fill(0.0);
    }
}

impl Module for Lstm {
    fn forward(&self, x: &Tensor, _ctx: &mut Context<'_>) -> Result<(Tensor, Cache)> {
        let (b, t, f) = seq_dims("lstm", x)?;
        if f != self.in_features() {
            return Err(Error::shape("lstm", x.shape(), self.weight.shape()));
        }
        let u = self.units();
        let (fu, g4) = (f + u, 4 * u);
        let w = self.weight.data();
        let xd = x.data();

        let mut xh = vec![0.0; t * b * fu];
        let mut gates = vec![0.0; t * b * g4];
        let mut cells = vec![0.0; t * b * u];
        let mut tanh_cells = vec![0.0; t * b * u];
        let mut h = vec![0.0; b * u];
        let mut c = vec![0.0; b * u];
        let mut out = vec![0.0; if self.return_sequences { b * t * u } else { b * u }];

        for ti in 0..t {
            let xh_t = &mut xh[ti * b * fu..(ti + 1) * b * fu];
            for bi in 0..b {
                let row = &mut xh_t[bi * fu..(bi + 1) * fu];
                row[..f].copy_from_slice(&xd[(bi * t + ti) * f..(bi * t + ti + 1) * f]);
                row[f..].copy_from_slice(&h[bi * u..(bi + 1) * u]);
            }
            let z = &mut gates[ti * b * g4..(ti + 1) * b * g4];
            for row in z.chunks_mut(g4) {
                row.copy_from_slice(self.bias.data());
            }
            gemm_nn(xh_t, w, z, b, fu, g4);
            for bi in 0..b {
                let zr = &mut z[bi * g4..(bi + 1) * g4];
                for k in 0..u {
                    let i = sigmoid(zr[k]);
                    let fg = sigmoid(zr[u + k]);
                    let g = libm::tanh(zr[2 * u + k]);
                    let o = sigmoid(zr[3 * u + k]);
                    zr[k] = i;
                    zr[u + k] = fg;
                    zr[2 * u + k] = g;
                    zr[3 * u + k] = o;
                    let idx = bi * u + k;
                    c[idx] = fg * c[idx] + i * g;
                    let tc = libm::tanh(c[idx]);
                    h[idx] = o * tc;
                    cells[ti * b * u + idx] = c[idx];
                    tanh_cells[ti * b * u + idx] = tc;
                }
                if self.return_sequences {
                    out[(bi * t + ti) * u..(bi * t + ti + 1) * u]
                        .copy_from_slice(&h[bi * u..(bi + 1) * u]);
                }
            }
        }
        if !self.return_sequences {
            out.copy_from_slice(&h);
        }
        let shape = match (x.rank(), self.return_sequences) {
            (2, true) => vec![t, u],
            (2, false) => vec![u],
            (_, true) => vec![b, t, u],
            (_, false) => vec![b, u],
        };
        let y = Tensor::new(shape, out)?.check_finite("lstm")?;
        let cache = LstmCache {
            input_shape: x.shape().to_vec(),
            xh,
            gates,
            cells,
            tanh_cells,
        };
        Ok((y, Cache::Lstm(Box::new(cache))))
    }

    fn backward(&self, cache: &Cache, grad: &Tensor) -> Result<(Tensor, Vec<Tensor>)> {
        let Cache::Lstm(cache) = cache else {
            return Err(wrong_cache());
        };
        let input = Tensor::zeros(&cache.input_shape);
        let (b, t, f) = seq_dims("lstm", &input)?;
        let u = self.units();
        let (fu, g4) = (f + u, 4 * u);
        let expected = if self.return_sequences { b * t * u } else { b * u };
        if grad.len() != expected {
            return Err(Error::shape("lstm backward", grad.shape(), &[b, t, u]));
        }
        let w = self.weight.data();
        let gd = grad.data();

        let mut dw = vec![0.0; w.len()];
        let mut db = vec![0.0; g4];
        let mut dx = vec![0.0; b * t * f];
        let mut dh_next = vec![0.0; b * u];
        let mut dc_next = vec![0.0; b * u];
        let mut dz = vec![0.0; b * g4];
        let mut dxh = vec![0.0; b * fu];

        for ti in (0..t).rev() {
            let gates = &cache.gates[ti * b * g4..(ti + 1) * b * g4];
            for bi in 0..b {
                for k in 0..u {
                    let idx = bi * u + k;
                    let mut dh = dh_next[idx];
                    if self.return_sequences {
                        dh += gd[(bi * t + ti) * u + k];
                    } else if ti == t - 1 {
                        dh += gd[idx];
                    }
                    let gr = &gates[bi * g4..(bi + 1) * g4];
                    let (i, fg, g, o) = (gr[k], gr[u + k], gr[2 * u + k], gr[3 * u + k]);
                    let tc = cache.tanh_cells[ti * b * u + idx];
                    let c_prev = if ti == 0 {
                        0.0
                    } else {
                        cache.cells[(ti - 1) * b * u + idx]
                    };
                    let dc = dh * o * (1.0 - tc * tc) + dc_next[idx];
                    dc_next[idx] = dc * fg;
                    let dzr = &mut dz[bi * g4..(bi + 1) * g4];
                    dzr[k] = dc * g * i * (1.0 - i);
                    dzr[u + k] = dc * c_prev * fg * (1.0 - fg);
                    dzr[2 * u + k] = dc * i * (1.0 - g * g);
                    dzr[3 * u + k] = dh * tc * o * (1.0 - o);
                }
            }
            let xh_t = &cache.xh[ti * b * fu..(ti + 1) * b * fu];
            gemm_tn(xh_t, &dz, &mut dw, b, fu, g4);
            for row in dz.chunks(g4) {
                for (d, &v) in db.iter_mut().zip(row) {
                    *d += v;
                }
            }
            dxh.fill(0.0);
            gemm_nt(&dz, w, &mut dxh, b, g4, fu);
            for bi in 0..b {
                let row = &dxh[bi * fu..(bi + 1) * fu];
                dx[(bi * t + ti) * f..(bi * t + ti + 1) * f].copy_from_slice(&row[..f]);
                dh_next[bi * u..(bi + 1) * u].copy_from_slice(&row[f..]);
            }
        }
        Ok((
            Tensor::new(cache.input_shape.clone(), dx)?,
            vec![
                Tensor::new(self.weight.shape().to_vec(), dw)?,
                Tensor::new(vec![g4], db)?,
            ],
        ))
    }

    fn params(&self) -> Vec<&Tensor> {
        vec![&self.weight, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.weight, &mut self.bias]
    }

    fn named_tensors(&self) -> Vec<(String, &Tensor)> {
        vec![("kernel".into(), &self.weight), ("bias".into(), &self.bias)]
    }

    fn named_tensors_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        vec![
            ("kernel".into(), &mut self.weight),
            ("bias".into(), &mut self.bias),
        ]
    }

    /// `4·(F·U + U² + U)`
    fn count_params(&self) -> ParamCount {
        ParamCount::trainable(self.weight.len() + self.bias.len())
    }

    fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        match *input {
            [t, f] if f == self.in_features() => Ok(if self.return_sequences {
                vec![t, self.units()]
            } else {
                vec![self.units()]
            }),
            _ => Err(Error::Config(format!(
                "lstm expects [time, {}], got {input:?}",
                self.in_features()
            ))),
        }
    }
}
