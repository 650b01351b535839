//! Sliding-window segmentation.
//!
//! Window `k` covers samples `k·(n−p) ..= k·(n−p) + n − 1`; windows whose
//! samples carry more than one label are dropped.

use alloc::format;
use alloc::vec::Vec;

use crate::{Error, Result, Tensor};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentationConfig {
    /// Window length in samples.
    pub n: usize,
    /// Samples shared by consecutive windows.
    pub p: usize,
    /// Sampling period in seconds.
    pub delta_t: f64,
}

impl SegmentationConfig {
    pub fn new(n: usize, p: usize, delta_t: f64) -> Result<Self> {
        if n < 2 || p == 0 || p >= n {
            return Err(Error::Config(format!(
                "overlap must lie in 1..={} for window {n}, got {p}",
                n.saturating_sub(1)
            )));
        }
        if !(delta_t.is_finite() && delta_t > 0.0) {
            return Err(Error::Config(format!("sampling period must be positive, got {delta_t}")));
        }
        Ok(Self { n, p, delta_t })
    }

    /// `p = round(n · pct / 100)`.
    pub fn from_overlap_pct(n: usize, pct: f64, delta_t: f64) -> Result<Self> {
        if !(0.0..100.0).contains(&pct) {
            return Err(Error::Config(format!("overlap percentage {pct} outside [0, 100)")));
        }
        Self::new(n, libm::round(n as f64 * pct / 100.0) as usize, delta_t)
    }

    pub fn step(&self) -> usize {
        self.n - self.p
    }

    /// Window duration `(n − 1)·ΔT` in seconds.
    pub fn duration(&self) -> f64 {
        (self.n - 1) as f64 * self.delta_t
    }

    /// Overlap `p·ΔT` in seconds.
    pub fn overlap_seconds(&self) -> f64 {
        self.p as f64 * self.delta_t
    }

    pub fn overlap_fraction(&self) -> f64 {
        self.p as f64 / self.n as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub start: usize,
    /// `[n, c]`
    pub values: Tensor,
    pub label: usize,
    pub source: u32,
}

/// `floor((L − n)/(n − p)) + 1`, or 0 when `L < n`.
pub fn expected_count(len: usize, n: usize, p: usize) -> usize {
    if len < n || p >= n {
        0
    } else {
        (len - n) / (n - p) + 1
    }
}

/// Start indices of every window that fits in a stream of `len` samples.
pub fn window_starts(len: usize, cfg: &SegmentationConfig) -> impl Iterator<Item = usize> {
    let step = cfg.step();
    (0..expected_count(len, cfg.n, cfg.p)).map(move |k| k * step)
}

/// Cut a `[L, c]` stream into label-pure windows.
pub fn segment(
    stream: &Tensor,
    labels: &[usize],
    cfg: &SegmentationConfig,
    source: u32,
) -> Result<Vec<Window>> {
    let [len, c] = *stream.shape() else {
        return Err(Error::shape("segment", stream.shape(), &[labels.len(), 0]));
    };
    if labels.len() != len {
        return Err(Error::shape("segment", stream.shape(), &[labels.len(), c]));
    }
    let data = stream.data();
    let n = cfg.n;
    Ok(window_starts(len, cfg)
        .filter(|&s| labels[s..s + n].iter().all(|&l| l == labels[s]))
        .map(|s| Window {
            start: s,
            values: Tensor::new(alloc::vec![n, c], data[s * c..(s + n) * c].to_vec())
                .expect("non-empty window"),
            label: labels[s],
            source,
        })
        .collect())
}
