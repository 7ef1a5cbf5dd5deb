use std::time::Instant;

use rand::seq::SliceRandom;

use crate::corpus::RefexInstance;
use crate::error::{Error, Result};
use crate::eval::accuracy;
use crate::par::{map_indexed, map_range, Execution};
use crate::tensor::{clip_global_norm, AdadeltaState, Gradients, RngState, Scalar, Tape};

use super::network::{Dropout, NeuralModel};

/// Instances per gradient shard. Fixed so the summation order, and therefore
/// the result, does not depend on the thread count.
pub const SHARD_SIZE: usize = 8;

const SHUFFLE_STREAM: u64 = 0x5348_5546;
const DROPOUT_STREAM: u64 = 0x4452_4f50;

#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev_accuracy: f64,
    pub seconds: f64,
}

impl EpochRecord {
    pub const HEADER: &'static str = "epoch\ttrain_loss\tdev_accuracy\tseconds";

    pub fn tsv_row(&self) -> String {
        format!(
            "{}\t{:.6}\t{:.6}\t{:.3}",
            self.epoch, self.train_loss, self.dev_accuracy, self.seconds
        )
    }
}

/// Early-stopping bookkeeping plus the optimizer.
#[derive(Clone, Debug)]
pub struct TrainState<S: Scalar> {
    pub epoch: usize,
    pub best_dev_accuracy: Option<f64>,
    pub best_epoch: usize,
    pub epochs_since_improvement: usize,
    pub optimizer: AdadeltaState<S>,
}

impl<S: Scalar> TrainState<S> {
    pub fn new(optimizer: AdadeltaState<S>) -> Self {
        TrainState {
            epoch: 0,
            best_dev_accuracy: None,
            best_epoch: 0,
            epochs_since_improvement: 0,
            optimizer,
        }
    }

    /// Records the dev accuracy of `epoch`; returns whether it is a new best.
    pub fn record(&mut self, epoch: usize, dev_accuracy: f64) -> bool {
        self.epoch = epoch;
        let improved = self.best_dev_accuracy.is_none_or(|b| dev_accuracy > b);
        if improved {
            self.best_dev_accuracy = Some(dev_accuracy);
            self.best_epoch = epoch;
            self.epochs_since_improvement = 0;
        } else {
            self.epochs_since_improvement += 1;
        }
        improved
    }

    pub fn should_stop(&self, patience: usize) -> bool {
        self.epochs_since_improvement > patience
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    MaxEpochs,
    Patience,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::MaxEpochs => "max_epochs",
            StopReason::Patience => "patience",
        }
    }
}

#[derive(Debug)]
pub struct TrainOutcome<S: Scalar> {
    /// Parameters from the best dev epoch.
    pub model: NeuralModel<S>,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_dev_accuracy: f64,
    pub stop: StopReason,
}

impl<S: Scalar> NeuralModel<S> {
    /// Mean summed-NLL over `batch` and its gradient, with dropout drawn from
    /// streams keyed by `(seed, key, position)`.
    pub fn batch_gradients(&self, batch: &[RefexInstance], key: u64, exec: Execution) -> Result<(f64, Gradients<S>)> {
        if batch.is_empty() {
            return Err(Error::Contract("empty batch".into()));
        }
        let shards = batch.len().div_ceil(SHARD_SIZE);
        let seed = self.config().seed;
        let p = self.config().dropout;
        let results = map_range(exec, shards, |k| -> Result<(f64, Gradients<S>)> {
            let start = k * SHARD_SIZE;
            let end = (start + SHARD_SIZE).min(batch.len());
            let mut tape = Tape::new(self.params());
            let mut losses = Vec::with_capacity(end - start);
            for (pos, inst) in batch[start..end].iter().enumerate() {
                let rng = RngState::derive(seed, &[DROPOUT_STREAM, key, (start + pos) as u64]);
                let mut dropout = if p > 0.0 { Dropout::training(p, rng) } else { Dropout::eval() };
                losses.push(self.instance_loss(&mut tape, inst, &mut dropout)?);
            }
            let mean = tape.mean(&losses)?;
            let total = tape.scale(mean, S::lit(losses.len() as f64))?;
            let value = tape.value(total).item().as_f64();
            Ok((value, tape.backward(total)?))
        });
        let mut loss = 0.0;
        let mut grads = Gradients::zeros_like(self.params());
        for r in results {
            let (l, g) = r?;
            loss += l;
            grads.add_assign(&g);
        }
        let inv = 1.0 / batch.len() as f64;
        grads.scale(S::lit(inv));
        Ok((loss * inv, grads))
    }

    /// Beam-decodes every instance.
    pub fn predict_all(&self, instances: &[RefexInstance], beam_size: usize, exec: Execution) -> Result<Vec<Vec<String>>> {
        map_indexed(exec, instances, |_, inst| self.beam_search(inst, beam_size))
            .into_iter()
            .collect()
    }

    /// Exact-match accuracy with the configured beam.
    pub fn evaluate_accuracy(&self, instances: &[RefexInstance], exec: Execution) -> Result<f64> {
        let preds = self.predict_all(instances, self.config().beam_size, exec)?;
        let golds: Vec<Vec<String>> = instances.iter().map(|i| i.refex.clone()).collect();
        accuracy(&preds, &golds)
    }
}

/// Minibatch Adadelta training with dev-accuracy early stopping. `on_epoch`
/// sees each epoch record as it is produced.
pub fn train<S: Scalar>(
    model: NeuralModel<S>,
    train_set: &[RefexInstance],
    dev_set: &[RefexInstance],
    exec: Execution,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainOutcome<S>> {
    if train_set.is_empty() || dev_set.is_empty() {
        return Err(Error::Contract("training needs non-empty train and dev sets".into()));
    }
    let cfg = model.config().clone();
    let mut model = model;
    let optimizer = AdadeltaState::new(model.params(), cfg.adadelta_rho, cfg.adadelta_eps)?;
    let mut state = TrainState::new(optimizer);
    let mut best = model.clone();
    let mut history = Vec::new();
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut stop = StopReason::MaxEpochs;
    for epoch in 1..=cfg.max_epochs {
        let started = Instant::now();
        let mut rng = RngState::derive(cfg.seed, &[SHUFFLE_STREAM, epoch as u64]);
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        for (b, idx) in order.chunks(cfg.batch_size).enumerate() {
            let batch: Vec<RefexInstance> = idx.iter().map(|&i| train_set[i].clone()).collect();
            let key = ((epoch as u64) << 32) | b as u64;
            let (loss, mut grads) = model
                .batch_gradients(&batch, key, exec)
                .map_err(|e| with_position(e, epoch, b))?;
            if !loss.is_finite() || !grads.is_finite() {
                return Err(Error::NonFinite(format!("loss {loss} at epoch {epoch}, batch {b}")));
            }
            if cfg.clip_norm > 0.0 {
                clip_global_norm(&mut grads, cfg.clip_norm);
            }
            state
                .optimizer
                .step(model.params_mut(), &grads)
                .map_err(|e| with_position(e, epoch, b))?;
            loss_sum += loss;
            batches += 1;
        }
        let dev_accuracy = model.evaluate_accuracy(dev_set, exec)?;
        if state.record(epoch, dev_accuracy) {
            best = model.clone();
        }
        let record = EpochRecord {
            epoch,
            train_loss: loss_sum / batches as f64,
            dev_accuracy,
            seconds: started.elapsed().as_secs_f64(),
        };
        on_epoch(&record);
        history.push(record);
        if state.should_stop(cfg.patience) {
            stop = StopReason::Patience;
            break;
        }
    }
    Ok(TrainOutcome {
        model: best,
        history,
        best_epoch: state.best_epoch,
        best_dev_accuracy: state.best_dev_accuracy.unwrap_or(0.0),
        stop,
    })
}

fn with_position(e: Error, epoch: usize, batch: usize) -> Error {
    match e {
        Error::NonFinite(msg) => Error::NonFinite(format!("{msg} (epoch {epoch}, batch {batch})")),
        other => other,
    }
}
