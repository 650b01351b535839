//! Cross-entropy, Adam, plateau learning-rate reduction, early stopping and
//! the epoch loop.

use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::dataset::{stack, Dataset, DatasetSplit};
use crate::nn::Mode;
use crate::segment::Window;
use crate::zoo::ModelSpec;
use crate::{rng_from_seed, Error, Result, Tensor};

const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr_init: f64,
    pub lr_min: f64,
    pub lr_patience: usize,
    pub lr_factor: f64,
    pub early_stop_patience: usize,
    pub seed: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 32,
            lr_init: 1e-4,
            lr_min: 1e-7,
            lr_patience: 5,
            lr_factor: 0.1,
            early_stop_patience: 20,
            seed: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl TrainConfig {
    pub fn for_dataset(dataset: Dataset, seed: u64) -> Self {
        Self {
            batch_size: dataset.batch_size(),
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("train config: {m}")));
        if self.epochs == 0 || self.batch_size == 0 {
            return bad("epochs and batch size must be positive");
        }
        if !(self.lr_min > 0.0 && self.lr_min <= self.lr_init && self.lr_init.is_finite()) {
            return bad("need 0 < lr_min <= lr_init");
        }
        if self.lr_patience == 0 || self.early_stop_patience == 0 {
            return bad("patience values must be positive");
        }
        if !(self.lr_factor > 0.0 && self.lr_factor < 1.0) {
            return bad("lr_factor must lie in (0, 1)");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || self.epsilon <= 0.0 {
            return bad("adam betas must lie in [0, 1) and epsilon be positive");
        }
        Ok(())
    }
}

/// Mean `−ln p[target]` (probabilities clamped at 1e-12) and the gradient
/// with respect to the logits of a fused softmax, `(p − y)/B`.
pub fn cross_entropy(probs: &Tensor, labels: &[usize]) -> Result<(f64, Tensor)> {
    let [b, k] = *probs.shape() else {
        return Err(Error::shape("cross_entropy", probs.shape(), &[labels.len(), 0]));
    };
    if b != labels.len() {
        return Err(Error::shape("cross_entropy", probs.shape(), &[labels.len(), k]));
    }
    let mut grad = probs.clone();
    let mut loss = 0.0;
    for (row, &y) in grad.data_mut().chunks_mut(k).zip(labels) {
        if y >= k {
            return Err(Error::Value(format!("label {y} outside 0..{k}")));
        }
        loss -= libm::log(row[y].max(PROB_FLOOR));
        row[y] -= 1.0;
        row.iter_mut().for_each(|v| *v /= b as f64);
    }
    let loss = loss / b as f64;
    if !loss.is_finite() {
        return Err(Error::NonFinite { op: "cross_entropy" });
    }
    Ok((loss, grad))
}

/// Adam with bias correction.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub t: u64,
    pub m: Vec<Tensor>,
    pub v: Vec<Tensor>,
}

impl Adam {
    pub fn new<'a>(params: impl IntoIterator<Item = &'a Tensor>, beta1: f64, beta2: f64, epsilon: f64) -> Self {
        let m: Vec<Tensor> = params.into_iter().map(|p| Tensor::zeros(p.shape())).collect();
        Self {
            beta1,
            beta2,
            epsilon,
            t: 0,
            v: m.clone(),
            m,
        }
    }

    pub fn step<'a>(
        &mut self,
        params: Vec<&mut Tensor>,
        grads: impl IntoIterator<Item = &'a Tensor>,
        lr: f64,
    ) -> Result<()> {
        let grads: Vec<&Tensor> = grads.into_iter().collect();
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::State("parameter list does not match optimizer state"));
        }
        self.t += 1;
        let c1 = 1.0 - libm::pow(self.beta1, self.t as f64);
        let c2 = 1.0 - libm::pow(self.beta2, self.t as f64);
        for (((p, g), m), v) in params.into_iter().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            if p.shape() != g.shape() || p.shape() != m.shape() {
                return Err(Error::shape("adam", p.shape(), g.shape()));
            }
            for (((p, &g), m), v) in p
                .data_mut()
                .iter_mut()
                .zip(g.data())
                .zip(m.data_mut())
                .zip(v.data_mut())
            {
                *m = self.beta1 * *m + (1.0 - self.beta1) * g;
                *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
                *p -= lr * (*m / c1) / (libm::sqrt(*v / c2) + self.epsilon);
            }
        }
        Ok(())
    }
}

/// Multiplies the learning rate by `factor` after `patience` epochs without
/// a new best monitored loss, never going below `min`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlateauScheduler {
    pub lr: f64,
    pub factor: f64,
    pub min: f64,
    pub patience: usize,
    best: f64,
    wait: usize,
}

impl PlateauScheduler {
    pub fn new(lr: f64, factor: f64, min: f64, patience: usize) -> Self {
        Self {
            lr,
            factor,
            min,
            patience,
            best: f64::INFINITY,
            wait: 0,
        }
    }

    /// Feed one epoch's monitored loss; returns the learning rate for the
    /// next epoch.
    pub fn observe(&mut self, loss: f64) -> f64 {
        if loss < self.best {
            self.best = loss;
            self.wait = 0;
        } else {
            self.wait += 1;
            if self.wait >= self.patience {
                let next = self.lr * self.factor;
                // 1e-4 · 0.1³ lands a few ulps above 1e-7
                self.lr = if next <= self.min * (1.0 + 1e-9) { self.min } else { next };
                self.wait = 0;
            }
        }
        self.lr
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    Improved,
    Continue,
    Stop,
}

/// Stops once `patience` epochs pass without a new best monitored loss.
#[derive(Debug, Clone, PartialEq)]
pub struct EarlyStopping {
    pub patience: usize,
    pub best: f64,
    pub best_epoch: usize,
    wait: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            best: f64::INFINITY,
            best_epoch: 0,
            wait: 0,
        }
    }

    pub fn since_improvement(&self) -> usize {
        self.wait
    }

    pub fn observe(&mut self, epoch: usize, loss: f64) -> StopDecision {
        if loss < self.best {
            self.best = loss;
            self.best_epoch = epoch;
            self.wait = 0;
            StopDecision::Improved
        } else {
            self.wait += 1;
            if self.wait >= self.patience {
                StopDecision::Stop
            } else {
                StopDecision::Continue
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_loss: f64,
    pub val_acc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainState {
    pub epochs_run: usize,
    pub lr: f64,
    pub best_val_loss: f64,
    pub best_epoch: usize,
    pub since_improvement: usize,
    pub stopped_early: bool,
    pub optimizer: Adam,
    pub history: Vec<EpochRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub loss: f64,
    pub accuracy: f64,
    pub predictions: Vec<usize>,
    pub labels: Vec<usize>,
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Inference-mode loss, accuracy and predicted classes.
pub fn evaluate(model: &ModelSpec, windows: &[Window], batch_size: usize) -> Result<Evaluation> {
    if windows.is_empty() {
        return Err(Error::Value("nothing to evaluate".into()));
    }
    let idx: Vec<usize> = (0..windows.len()).collect();
    let mut loss = 0.0;
    let mut predictions = Vec::with_capacity(windows.len());
    let mut labels = Vec::with_capacity(windows.len());
    for chunk in idx.chunks(batch_size.max(1)) {
        let (x, y) = stack(windows, chunk)?;
        let probs = model.predict(&x)?;
        loss += cross_entropy(&probs, &y)?.0 * chunk.len() as f64;
        predictions.extend(probs.data().chunks(model.n_classes).map(argmax));
        labels.extend(y);
    }
    let correct = predictions.iter().zip(&labels).filter(|(p, y)| p == y).count();
    Ok(Evaluation {
        loss: loss / windows.len() as f64,
        accuracy: correct as f64 / windows.len() as f64,
        predictions,
        labels,
    })
}

/// One optimizer step on a batch; returns the batch loss and the number of
/// correct training-mode predictions.
pub fn train_step(
    model: &mut ModelSpec,
    optimizer: &mut Adam,
    x: &Tensor,
    y: &[usize],
    lr: f64,
    rng: &mut crate::Rng,
) -> Result<(f64, usize)> {
    let (probs, tape) = model.forward(x, Mode::Train, rng)?;
    let (loss, grad) = cross_entropy(&probs, y)?;
    let correct = probs
        .data()
        .chunks(model.n_classes)
        .zip(y)
        .filter(|(row, &t)| argmax(row) == t)
        .count();
    let grads = model.backward_logits(&tape, &grad)?;
    model.commit(&tape);
    optimizer.step(model.params_mut(), grads.flat(), lr)?;
    Ok((loss, correct))
}

pub fn fit(model: &mut ModelSpec, split: &DatasetSplit, cfg: &TrainConfig) -> Result<TrainState> {
    fit_with(model, split, cfg, |_| {})
}

/// The epoch loop. The test partition is the monitored validation set (the
/// training partition when the test set is empty). On exit the parameters
/// with the lowest monitored loss are restored.
pub fn fit_with(
    model: &mut ModelSpec,
    split: &DatasetSplit,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainState> {
    cfg.validate()?;
    if split.train.is_empty() {
        return Err(Error::Value("empty training partition".into()));
    }
    let (n, c) = split.window_shape();
    if n != model.window_size || c != model.in_channels || split.n_classes() != model.n_classes {
        return Err(Error::shape(
            "fit",
            &[n, c, split.n_classes()],
            &[model.window_size, model.in_channels, model.n_classes],
        ));
    }
    let monitor = if split.test.is_empty() { &split.train } else { &split.test };
    let mut rng = rng_from_seed(cfg.seed);
    let mut optimizer = Adam::new(model.params(), cfg.beta1, cfg.beta2, cfg.epsilon);
    let mut plateau = PlateauScheduler::new(cfg.lr_init, cfg.lr_factor, cfg.lr_min, cfg.lr_patience);
    let mut stopper = EarlyStopping::new(cfg.early_stop_patience);
    let mut best = model.snapshot();
    let mut history = Vec::new();
    let mut order: Vec<usize> = (0..split.train.len()).collect();
    let mut lr = cfg.lr_init;
    let mut stopped_early = false;

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let (mut loss_sum, mut correct) = (0.0, 0);
        for chunk in order.chunks(cfg.batch_size) {
            let (x, y) = stack(&split.train, chunk)?;
            let (loss, ok) = train_step(model, &mut optimizer, &x, &y, lr, &mut rng)?;
            loss_sum += loss * chunk.len() as f64;
            correct += ok;
        }
        let val = evaluate(model, monitor, cfg.batch_size)?;
        let record = EpochRecord {
            epoch,
            lr,
            train_loss: loss_sum / order.len() as f64,
            train_acc: correct as f64 / order.len() as f64,
            val_loss: val.loss,
            val_acc: val.accuracy,
        };
        on_epoch(&record);
        history.push(record);
        let decision = stopper.observe(epoch, val.loss);
        if decision == StopDecision::Improved {
            best = model.snapshot();
        }
        lr = plateau.observe(val.loss);
        if decision == StopDecision::Stop {
            stopped_early = true;
            break;
        }
    }
    model.restore(&best)?;
    Ok(TrainState {
        epochs_run: history.len(),
        lr,
        best_val_loss: stopper.best,
        best_epoch: stopper.best_epoch,
        since_improvement: stopper.since_improvement(),
        stopped_early,
        optimizer,
        history,
    })
}
