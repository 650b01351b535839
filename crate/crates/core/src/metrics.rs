//! Confusion matrices, classification metrics and confidence intervals.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// `K × K` counts, rows = true class, columns = predicted class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    k: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn zeros(k: usize) -> Self {
        Self {
            k,
            counts: vec![0; k * k],
        }
    }

    pub fn from_rows(rows: &[Vec<u64>]) -> Result<Self> {
        let k = rows.len();
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::Value("confusion matrix must be square".into()));
        }
        Ok(Self {
            k,
            counts: rows.concat(),
        })
    }

    pub fn n_classes(&self) -> usize {
        self.k
    }

    pub fn get(&self, truth: usize, pred: usize) -> u64 {
        self.counts[truth * self.k + pred]
    }

    pub fn row(&self, truth: usize) -> &[u64] {
        &self.counts[truth * self.k..(truth + 1) * self.k]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u64]> {
        self.counts.chunks(self.k.max(1))
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.k).map(|c| self.get(c, c)).sum()
    }

    /// Per-class one-vs-rest counts.
    pub fn binary(&self, class: usize) -> BinaryCounts {
        let tp = self.get(class, class);
        let row: u64 = self.row(class).iter().sum();
        let col: u64 = (0..self.k).map(|t| self.get(t, class)).sum();
        let (fp, fn_) = (col - tp, row - tp);
        BinaryCounts {
            tp,
            fp,
            fn_,
            tn: self.total() - tp - fp - fn_,
        }
    }

    /// Row-normalized percentages; empty rows stay zero.
    pub fn row_percentages(&self) -> Vec<Vec<f64>> {
        self.rows()
            .map(|r| {
                let s: u64 = r.iter().sum();
                r.iter()
                    .map(|&v| if s == 0 { 0.0 } else { 100.0 * v as f64 / s as f64 })
                    .collect()
            })
            .collect()
    }
}

pub fn confusion(truth: &[usize], pred: &[usize], k: usize) -> Result<ConfusionMatrix> {
    if truth.len() != pred.len() {
        return Err(Error::Value(format!(
            "{} true labels but {} predictions",
            truth.len(),
            pred.len()
        )));
    }
    let mut cm = ConfusionMatrix::zeros(k);
    for (&t, &p) in truth.iter().zip(pred) {
        if t >= k || p >= k {
            return Err(Error::Value(format!("label pair ({t}, {p}) outside 0..{k}")));
        }
        cm.counts[t * k + p] += 1;
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BinaryCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
}

fn ratio(num: u64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num as f64 / den
    }
}

impl BinaryCounts {
    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, (self.tp + self.tn + self.fp + self.fn_) as f64)
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, (self.tp + self.fp) as f64)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, (self.tp + self.fn_) as f64)
    }

    /// `TP / (TP + (FP + FN)/2)`
    pub fn f1(&self) -> f64 {
        ratio(self.tp, self.tp as f64 + 0.5 * (self.fp + self.fn_) as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsSummary {
    pub accuracy: f64,
    pub per_class: Vec<ClassMetrics>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
}

pub fn compute_metrics(cm: &ConfusionMatrix) -> Result<MetricsSummary> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::Value("confusion matrix is empty".into()));
    }
    let per_class: Vec<ClassMetrics> = (0..cm.n_classes())
        .map(|c| {
            let b = cm.binary(c);
            ClassMetrics {
                precision: b.precision(),
                recall: b.recall(),
                f1: b.f1(),
                support: b.tp + b.fn_,
            }
        })
        .collect();
    let k = per_class.len() as f64;
    let avg = |f: fn(&ClassMetrics) -> f64| per_class.iter().map(f).sum::<f64>() / k;
    Ok(MetricsSummary {
        accuracy: cm.trace() as f64 / total as f64,
        macro_precision: avg(|m| m.precision),
        macro_recall: avg(|m| m.recall),
        macro_f1: avg(|m| m.f1),
        per_class,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceInterval {
    pub mean: f64,
    /// Sample (n − 1) standard deviation.
    pub std_dev: f64,
    pub n: usize,
    /// `1.96 · s/√n`
    pub half_width_z: f64,
    /// `t(0.975, n − 1) · s/√n`
    pub half_width_t: f64,
}

pub fn confidence_interval(values: &[f64]) -> Result<ConfidenceInterval> {
    let n = values.len();
    if n < 2 {
        return Err(Error::Value(format!("need at least two values, got {n}")));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    let std_dev = libm::sqrt(var);
    let se = std_dev / libm::sqrt(n as f64);
    Ok(ConfidenceInterval {
        mean,
        std_dev,
        n,
        half_width_z: 1.96 * se,
        half_width_t: student_t_quantile(0.975, (n - 1) as f64) * se,
    })
}

/// Regularized incomplete beta `I_x(a, b)` by Lentz's continued fraction.
fn inc_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front =
        libm::lgamma(a + b) - libm::lgamma(a) - libm::lgamma(b) + a * libm::log(x) + b * libm::log1p(-x);
    if x > (a + 1.0) / (a + b + 2.0) {
        return 1.0 - inc_beta(1.0 - x, b, a);
    }
    const TINY: f64 = 1e-300;
    let mut c = 1.0;
    let mut d = 1.0 - (a + b) * x / (a + 1.0);
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..500 {
        let m = m as f64;
        let m2 = 2.0 * m;
        for num in [
            m * (b - m) * x / ((a + m2 - 1.0) * (a + m2)),
            -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1.0)),
        ] {
            d = 1.0 + num * d;
            if d.abs() < TINY {
                d = TINY;
            }
            c = 1.0 + num / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            h *= d * c;
        }
        if (d * c - 1.0).abs() < 1e-15 {
            break;
        }
    }
    libm::exp(ln_front) * h / a
}

/// Student-t CDF with `df` degrees of freedom.
pub fn student_t_cdf(t: f64, df: f64) -> f64 {
    let tail = 0.5 * inc_beta(df / (df + t * t), 0.5 * df, 0.5);
    if t >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// Inverse of [`student_t_cdf`] by bisection.
pub fn student_t_quantile(p: f64, df: f64) -> f64 {
    if p == 0.5 {
        return 0.0;
    }
    if p < 0.5 {
        return -student_t_quantile(1.0 - p, df);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while student_t_cdf(hi, df) < p {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if student_t_cdf(mid, df) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_counted_matrix() {
        let cm = confusion(&[0, 0, 1], &[0, 1, 1], 2).unwrap();
        assert_eq!(cm.rows().collect::<Vec<_>>(), [[1, 1], [0, 1]]);
        assert!(confusion(&[2], &[0], 2).is_err());
        assert_eq!(confusion(&[], &[], 3).unwrap().total(), 0);
    }

    #[test]
    fn worked_binary_example() {
        let b = BinaryCounts {
            tp: 50,
            tn: 40,
            fp: 5,
            fn_: 5,
        };
        assert!((b.accuracy() - 0.9).abs() < 1e-12);
        for v in [b.precision(), b.recall(), b.f1()] {
            assert!((v - 50.0 / 55.0).abs() < 1e-12);
        }
    }

    #[test]
    fn absent_class_scores_zero() {
        let cm = ConfusionMatrix::from_rows(&[vec![3, 0, 0], vec![0, 2, 0], vec![0, 0, 0]]).unwrap();
        let m = compute_metrics(&cm).unwrap();
        assert_eq!(m.accuracy, 1.0);
        assert_eq!(m.per_class[2].f1, 0.0);
        assert_eq!(m.per_class[0].f1, 1.0);
        assert!(compute_metrics(&ConfusionMatrix::zeros(2)).is_err());
    }

    #[test]
    fn constant_values_have_zero_width() {
        let ci = confidence_interval(&[5.0, 5.0, 5.0]).unwrap();
        assert_eq!((ci.mean, ci.half_width_z, ci.half_width_t), (5.0, 0.0, 0.0));
        assert!(confidence_interval(&[1.0]).is_err());
    }

    #[test]
    fn t_quantile_known_values() {
        // Cauchy: tan(0.475π)
        assert!((student_t_quantile(0.975, 1.0) - 12.706_204_736_174_7).abs() < 1e-8);
        assert!((student_t_quantile(0.975, 7.0) - 2.364_624_251_592_78).abs() < 1e-8);
        assert!((student_t_cdf(0.0, 3.0) - 0.5).abs() < 1e-15);
    }
}
