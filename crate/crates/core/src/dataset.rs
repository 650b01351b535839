//! Dataset descriptors, labeled sensor streams and stratified splits.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::seq::SliceRandom;

use crate::segment::{segment, SegmentationConfig, Window};
use crate::{rng_from_seed, Error, Result, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dataset {
    Wisdm,
    Pamap2,
}

pub const WISDM_CLASSES: [&str; 6] = [
    "Downstairs",
    "Jogging",
    "Sitting",
    "Standing",
    "Upstairs",
    "Walking",
];

/// Protocol activity ids in label order.
pub const PAMAP2_ACTIVITY_IDS: [u32; 12] = [1, 2, 3, 4, 5, 6, 7, 12, 13, 16, 17, 24];

pub const PAMAP2_CLASSES: [&str; 12] = [
    "lying",
    "sitting",
    "standing",
    "walking",
    "running",
    "cycling",
    "Nordic walking",
    "ascending stairs",
    "descending stairs",
    "vacuum cleaning",
    "ironing",
    "rope jumping",
];

impl Dataset {
    pub const ALL: [Dataset; 2] = [Dataset::Wisdm, Dataset::Pamap2];

    pub fn as_str(self) -> &'static str {
        match self {
            Dataset::Wisdm => "wisdm",
            Dataset::Pamap2 => "pamap2",
        }
    }

    pub fn channels(self) -> usize {
        match self {
            Dataset::Wisdm => 3,
            Dataset::Pamap2 => 36,
        }
    }

    pub fn n_classes(self) -> usize {
        self.class_names().len()
    }

    pub fn class_names(self) -> &'static [&'static str] {
        match self {
            Dataset::Wisdm => &WISDM_CLASSES,
            Dataset::Pamap2 => &PAMAP2_CLASSES,
        }
    }

    /// Native sampling rate in Hz.
    pub fn sample_rate(self) -> f64 {
        match self {
            Dataset::Wisdm => 20.0,
            Dataset::Pamap2 => 100.0,
        }
    }

    pub fn overlap_pct(self) -> f64 {
        match self {
            Dataset::Wisdm => 50.0,
            Dataset::Pamap2 => 78.0,
        }
    }

    pub fn batch_size(self) -> usize {
        match self {
            Dataset::Wisdm => 16,
            Dataset::Pamap2 => 32,
        }
    }

    /// Window sizes of the experiment grid.
    pub fn windows(self) -> &'static [usize] {
        match self {
            Dataset::Wisdm => &[80, 120, 160, 200, 240, 280, 320, 360],
            Dataset::Pamap2 => &[171, 250, 300, 360, 400, 450, 500, 550],
        }
    }
}

impl fmt::Display for Dataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Dataset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Dataset::ALL
            .into_iter()
            .find(|d| d.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Value(format!("unknown dataset '{s}'")))
    }
}

/// One subject's (or one contiguous recording's) samples.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorStream {
    pub source: u32,
    /// `[L, c]`
    pub channels: Tensor,
    pub labels: Vec<usize>,
    pub sample_rate: f64,
}

impl SensorStream {
    pub fn new(source: u32, channels: Tensor, labels: Vec<usize>, sample_rate: f64) -> Result<Self> {
        if channels.rank() != 2 || channels.shape()[0] != labels.len() {
            return Err(Error::shape("stream", channels.shape(), &[labels.len(), 0]));
        }
        let channels = channels.check_finite("stream")?;
        Ok(Self {
            source,
            channels,
            labels,
            sample_rate,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_channels(&self) -> usize {
        self.channels.shape()[1]
    }

    pub fn segment(&self, cfg: &SegmentationConfig) -> Result<Vec<Window>> {
        segment(&self.channels, &self.labels, cfg, self.source)
    }
}

/// Per-channel z-score parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalizer {
    pub mean: Vec<f64>,
    /// Population standard deviation; 0 marks a constant channel.
    pub std: Vec<f64>,
}

impl Normalizer {
    const DEGENERATE: f64 = 1e-12;

    /// Two-pass per-channel statistics over every sample of `windows`.
    pub fn fit<'a>(windows: impl IntoIterator<Item = &'a Window> + Clone) -> Result<Self> {
        let mut count = 0usize;
        let mut mean: Vec<f64> = Vec::new();
        for w in windows.clone() {
            let c = w.values.shape()[1];
            if mean.is_empty() {
                mean = vec![0.0; c];
            } else if mean.len() != c {
                return Err(Error::shape("normalizer", &[mean.len()], &[c]));
            }
            for row in w.values.data().chunks(c) {
                for (m, &v) in mean.iter_mut().zip(row) {
                    *m += v;
                }
            }
            count += w.values.shape()[0];
        }
        if count == 0 {
            return Err(Error::Value("no samples to fit normalization on".into()));
        }
        mean.iter_mut().for_each(|m| *m /= count as f64);
        let mut var = vec![0.0; mean.len()];
        for w in windows {
            for row in w.values.data().chunks(mean.len()) {
                for ((s, &v), &m) in var.iter_mut().zip(row).zip(&mean) {
                    *s += (v - m) * (v - m);
                }
            }
        }
        let std = var
            .into_iter()
            .map(|s| {
                let sd = libm::sqrt(s / count as f64);
                if sd < Self::DEGENERATE {
                    0.0
                } else {
                    sd
                }
            })
            .collect();
        Ok(Self { mean, std })
    }

    pub fn apply(&self, values: &mut Tensor) {
        let c = self.mean.len();
        for row in values.data_mut().chunks_mut(c) {
            for ((v, &m), &s) in row.iter_mut().zip(&self.mean).zip(&self.std) {
                *v = if s == 0.0 { 0.0 } else { (*v - m) / s };
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit {
    pub train: Vec<Window>,
    pub test: Vec<Window>,
    pub normalizer: Normalizer,
    pub class_names: Vec<String>,
    pub seed: u64,
    pub test_fraction: f64,
}

impl DatasetSplit {
    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn window_shape(&self) -> (usize, usize) {
        let s = self.train[0].values.shape();
        (s[0], s[1])
    }
}

/// Window count per class id.
pub fn class_histogram(windows: &[Window], n_classes: usize) -> Vec<usize> {
    let mut h = vec![0; n_classes];
    for w in windows {
        h[w.label] += 1;
    }
    h
}

/// Seeded stratified partition followed by train-fitted z-scoring.
///
/// Each class contributes `round(count · test_fraction)` test windows,
/// clamped so that a class keeps at least one window on each side.
pub fn make_split(
    windows: Vec<Window>,
    test_fraction: f64,
    seed: u64,
    class_names: Vec<String>,
) -> Result<DatasetSplit> {
    if !(0.0..1.0).contains(&test_fraction) {
        return Err(Error::Config(format!("test fraction {test_fraction} outside [0, 1)")));
    }
    if windows.is_empty() {
        return Err(Error::Value("no windows to split".into()));
    }
    let k = class_names.len();
    if let Some(w) = windows.iter().find(|w| w.label >= k) {
        return Err(Error::Value(format!("label {} outside 0..{k}", w.label)));
    }
    let hist = class_histogram(&windows, k);
    if let Some(c) = hist.iter().position(|&n| n == 1) {
        return Err(Error::Value(format!(
            "class '{}' has a single window and cannot be stratified",
            class_names[c]
        )));
    }

    let mut rng = rng_from_seed(seed);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, w) in windows.iter().enumerate() {
        by_class[w.label].push(i);
    }
    let mut is_test = vec![false; windows.len()];
    for idx in &mut by_class {
        if idx.is_empty() {
            continue;
        }
        idx.shuffle(&mut rng);
        let mut n_test = libm::round(idx.len() as f64 * test_fraction) as usize;
        if test_fraction > 0.0 {
            n_test = n_test.clamp(1, idx.len() - 1);
        }
        for &i in &idx[..n_test] {
            is_test[i] = true;
        }
    }
    let (mut train, mut test): (Vec<_>, Vec<_>) = windows
        .into_iter()
        .zip(is_test)
        .partition(|(_, t)| !*t);
    train.shuffle(&mut rng);
    test.shuffle(&mut rng);
    let mut train: Vec<Window> = train.into_iter().map(|(w, _)| w).collect();
    let mut test: Vec<Window> = test.into_iter().map(|(w, _)| w).collect();

    let normalizer = Normalizer::fit(&train)?;
    for w in train.iter_mut().chain(test.iter_mut()) {
        normalizer.apply(&mut w.values);
    }
    Ok(DatasetSplit {
        train,
        test,
        normalizer,
        class_names,
        seed,
        test_fraction,
    })
}

/// Stack the selected windows into a `[B, n, c]` batch plus labels.
pub fn stack(windows: &[Window], idx: &[usize]) -> Result<(Tensor, Vec<usize>)> {
    let Some(&first) = idx.first() else {
        return Err(Error::Value("empty batch".into()));
    };
    let shape = windows[first].values.shape().to_vec();
    let mut data = Vec::with_capacity(idx.len() * windows[first].values.len());
    let mut labels = Vec::with_capacity(idx.len());
    for &i in idx {
        let w = &windows[i];
        if w.values.shape() != shape.as_slice() {
            return Err(Error::shape("stack", w.values.shape(), &shape));
        }
        data.extend_from_slice(w.values.data());
        labels.push(w.label);
    }
    Ok((Tensor::new(vec![idx.len(), shape[0], shape[1]], data)?, labels))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn windows(per_class: &[usize]) -> Vec<Window> {
        let mut out = Vec::new();
        for (label, &n) in per_class.iter().enumerate() {
            for i in 0..n {
                let v = (label * 100 + i) as f64;
                out.push(Window {
                    start: i,
                    values: Tensor::new(vec![2, 2], vec![v, 1.0, v + 1.0, 1.0]).unwrap(),
                    label,
                    source: 0,
                });
            }
        }
        out
    }

    fn names(k: usize) -> Vec<String> {
        (0..k).map(|i| format!("c{i}")).collect()
    }

    #[test]
    fn stratified_sizes() {
        let s = make_split(windows(&[10, 20, 5]), 0.2, 3, names(3)).unwrap();
        assert_eq!(class_histogram(&s.test, 3), [2, 4, 1]);
        assert_eq!(class_histogram(&s.train, 3), [8, 16, 4]);
    }

    #[test]
    fn zero_fraction_keeps_everything_in_train() {
        let s = make_split(windows(&[3, 3]), 0.0, 1, names(2)).unwrap();
        assert!(s.test.is_empty());
        assert_eq!(s.train.len(), 6);
    }

    #[test]
    fn singleton_class_is_rejected() {
        assert!(make_split(windows(&[3, 1]), 0.2, 1, names(2)).is_err());
        assert!(make_split(windows(&[3, 2]), 0.2, 1, names(1)).is_err());
    }

    #[test]
    fn constant_channel_normalizes_to_zero() {
        let s = make_split(windows(&[4, 4]), 0.25, 1, names(2)).unwrap();
        assert_eq!(s.normalizer.std[1], 0.0);
        for w in s.train.iter().chain(&s.test) {
            assert_eq!(w.values.data()[1], 0.0);
        }
    }

    #[test]
    fn dataset_descriptors() {
        assert_eq!(Dataset::Wisdm.n_classes(), 6);
        assert_eq!(Dataset::Pamap2.n_classes(), PAMAP2_ACTIVITY_IDS.len());
        assert_eq!("PAMAP2".parse::<Dataset>().unwrap(), Dataset::Pamap2);
    }
}
