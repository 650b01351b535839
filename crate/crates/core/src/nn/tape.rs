use alloc::vec::Vec;

use super::{Cache, Context, Layer, Module};
use crate::{Error, Result, Tensor};

/// Forward intermediates of one pass through a layer stack, consumed by
/// [`run_backward`].
#[derive(Debug, Default, Clone)]
pub struct GradTape {
    entries: Vec<Cache>,
}

impl GradTape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Cache] {
        &self.entries
    }

    /// Keep only the first `len` entries, e.g. to start backward below a
    /// fused softmax.
    pub fn truncate(&mut self, len: usize) {
        self.entries.truncate(len);
    }
}

/// Run `x` through `layers`, recording each layer's cache.
pub fn run_forward(layers: &[Layer], x: &Tensor, ctx: &mut Context<'_>) -> Result<(Tensor, GradTape)> {
    let mut tape = GradTape {
        entries: Vec::with_capacity(layers.len()),
    };
    let mut h = x.clone();
    for layer in layers {
        let (y, cache) = layer.forward(&h, ctx)?;
        tape.entries.push(cache);
        h = y;
    }
    Ok((h, tape))
}

/// Reverse pass over the first `tape.len()` layers, starting from the
/// gradient w.r.t. the output of the last recorded layer. Returns the input
/// gradient and per-layer parameter gradients.
pub fn run_backward(layers: &[Layer], tape: &GradTape, grad: &Tensor) -> Result<(Tensor, Vec<Vec<Tensor>>)> {
    if tape.is_empty() {
        return Err(Error::State("backward called before forward"));
    }
    if tape.len() > layers.len() {
        return Err(Error::State("tape longer than layer stack"));
    }
    let mut grads: Vec<Vec<Tensor>> = (0..tape.len()).map(|_| Vec::new()).collect();
    let mut g = grad.clone();
    for (i, cache) in tape.entries.iter().enumerate().rev() {
        let (dx, dp) = layers[i].backward(cache, &g)?;
        grads[i] = dp;
        g = dx;
    }
    Ok((g, grads))
}
