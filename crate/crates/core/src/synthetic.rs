//! Seeded, class-separable sensor streams for smoke runs and tests.
//!
//! Class `k` on channel `j` is a sinusoid at `(1 + k)·base_hz` around a
//! per-class offset, plus uniform noise. The offsets alone separate the
//! classes, so a working model should fit them almost perfectly.

use alloc::vec::Vec;

use rand::Rng as _;

use crate::dataset::SensorStream;
use crate::segment::{SegmentationConfig, Window};
use crate::{rng_from_seed, Result, Tensor};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticConfig {
    pub channels: usize,
    pub classes: usize,
    pub sources: usize,
    /// Activity runs per source; run `r` of source `s` has class `(s + r) % K`.
    pub runs_per_source: usize,
    pub run_length: usize,
    pub sample_rate: f64,
    pub base_hz: f64,
    pub noise: f64,
    pub seed: u64,
}

impl SyntheticConfig {
    pub fn new(channels: usize, classes: usize, seed: u64) -> Self {
        Self {
            channels,
            classes,
            sources: 4,
            runs_per_source: 2 * classes,
            run_length: 400,
            sample_rate: 20.0,
            base_hz: 0.5,
            noise: 0.3,
            seed,
        }
    }

    fn offset(&self, class: usize, channel: usize) -> f64 {
        let k = self.classes.max(2) as f64 - 1.0;
        let rank = (class + channel) % self.classes;
        2.0 * rank as f64 / k - 1.0
    }

    pub fn streams(&self) -> Result<Vec<SensorStream>> {
        let mut rng = rng_from_seed(self.seed);
        let phases: Vec<f64> = (0..self.channels)
            .map(|_| rng.gen_range(0.0..core::f64::consts::TAU))
            .collect();
        (0..self.sources)
            .map(|s| {
                let len = self.runs_per_source * self.run_length;
                let mut data = Vec::with_capacity(len * self.channels);
                let mut labels = Vec::with_capacity(len);
                for r in 0..self.runs_per_source {
                    let class = (s + r) % self.classes;
                    let w = core::f64::consts::TAU * (1 + class) as f64 * self.base_hz / self.sample_rate;
                    for i in 0..self.run_length {
                        for (j, &ph) in phases.iter().enumerate() {
                            let v = self.offset(class, j)
                                + 0.5 * libm::sin(w * i as f64 + ph)
                                + rng.gen_range(-self.noise..=self.noise);
                            data.push(v);
                        }
                        labels.push(class);
                    }
                }
                let x = Tensor::new(alloc::vec![len, self.channels], data)?;
                SensorStream::new(s as u32, x, labels, self.sample_rate)
            })
            .collect()
    }

    /// Segment every stream with the given window and overlap.
    pub fn windows(&self, n: usize, p: usize) -> Result<Vec<Window>> {
        let cfg = SegmentationConfig::new(n, p, 1.0 / self.sample_rate)?;
        let mut out = Vec::new();
        for s in self.streams()? {
            out.extend(s.segment(&cfg)?);
        }
        Ok(out)
    }
}
