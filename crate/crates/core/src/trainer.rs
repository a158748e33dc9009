//! Supervised mini-batch training with Adam, global-norm clipping and
//! patience-based early stopping on validation loss.

use log::info;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::neuro::{Adam, AdamConfig, Gradients, Graph, ParamStore, Var};
use crate::oracle::{Oracle, OracleSample};
use crate::questioner::{Guesser, GuesserSample, QGen, QGenSample};

/// A model trainable on per-sample losses.
pub trait Trainable: Sync {
    type Sample: Sync;

    fn store(&self) -> &ParamStore<f32>;
    fn store_mut(&mut self) -> &mut ParamStore<f32>;
    fn sample_loss(&self, g: &mut Graph<'_, f32>, s: &Self::Sample) -> Result<Var>;
}

impl Trainable for Oracle<f32> {
    type Sample = OracleSample;

    fn store(&self) -> &ParamStore<f32> {
        &self.store
    }

    fn store_mut(&mut self) -> &mut ParamStore<f32> {
        &mut self.store
    }

    fn sample_loss(&self, g: &mut Graph<'_, f32>, s: &OracleSample) -> Result<Var> {
        Oracle::sample_loss(self, g, s)
    }
}

impl Trainable for Guesser<f32> {
    type Sample = GuesserSample;

    fn store(&self) -> &ParamStore<f32> {
        &self.store
    }

    fn store_mut(&mut self) -> &mut ParamStore<f32> {
        &mut self.store
    }

    fn sample_loss(&self, g: &mut Graph<'_, f32>, s: &GuesserSample) -> Result<Var> {
        Guesser::sample_loss(self, g, s)
    }
}

impl Trainable for QGen<f32> {
    type Sample = QGenSample;

    fn store(&self) -> &ParamStore<f32> {
        &self.store
    }

    fn store_mut(&mut self) -> &mut ParamStore<f32> {
        &mut self.store
    }

    fn sample_loss(&self, g: &mut Graph<'_, f32>, s: &QGenSample) -> Result<Var> {
        QGen::sample_loss(self, g, s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
    pub clip_norm: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 0.001,
            batch_size: 32,
            max_epochs: 30,
            patience: 5,
            seed: 1,
            clip_norm: 5.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0) {
            return Err(Error::Config(format!("learning rate must be positive, got {}", self.lr)));
        }
        if self.patience == 0 || self.batch_size == 0 || self.max_epochs == 0 {
            return Err(Error::Config("patience, batch size and max epochs must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopSignal {
    Improved,
    Continue,
    Stop,
}

/// Stops once `patience` consecutive epochs fail to strictly improve on the
/// best validation loss. Epochs are 1-based.
#[derive(Clone, Debug, PartialEq)]
pub struct EarlyStopping {
    pub patience: usize,
    pub best_loss: f64,
    pub best_epoch: usize,
    pub epoch: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            best_loss: f64::INFINITY,
            best_epoch: 0,
            epoch: 0,
        }
    }

    pub fn observe(&mut self, val_loss: f64) -> StopSignal {
        self.epoch += 1;
        if val_loss < self.best_loss {
            self.best_loss = val_loss;
            self.best_epoch = self.epoch;
            StopSignal::Improved
        } else if self.epoch - self.best_epoch >= self.patience {
            StopSignal::Stop
        } else {
            StopSignal::Continue
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainLog {
    pub epochs: Vec<EpochLog>,
    pub best_epoch: usize,
    pub best_val_loss: f64,
}

impl TrainLog {
    pub fn render(&self) -> String {
        let mut s = String::from("epoch,train_loss,val_loss\n");
        for e in &self.epochs {
            s.push_str(&format!("{},{:.6},{:.6}\n", e.epoch, e.train_loss, e.val_loss));
        }
        s
    }
}

fn sample_grad<M: Trainable>(model: &M, s: &M::Sample) -> Result<(f64, Gradients<f32>)> {
    let mut g = Graph::new(model.store());
    let loss = model.sample_loss(&mut g, s)?;
    let value = g.value(loss)[0] as f64;
    Ok((value, g.backward(loss)?.params))
}

/// Mean per-sample loss without gradients. Summation is sequential in
/// sample order so the result does not depend on thread scheduling.
pub fn mean_loss<M: Trainable>(model: &M, samples: &[M::Sample]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Argument("cannot evaluate a loss over an empty split".into()));
    }
    let losses = samples
        .par_iter()
        .map(|s| {
            let mut g = Graph::new(model.store());
            let l = model.sample_loss(&mut g, s)?;
            Ok(g.value(l)[0] as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(losses.iter().sum::<f64>() / samples.len() as f64)
}

/// Trains `model` in place and leaves it holding the best-validation-loss
/// weights.
pub fn fit<M: Trainable>(model: &mut M, train: &[M::Sample], val: &[M::Sample], cfg: &TrainConfig) -> Result<TrainLog> {
    cfg.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(Error::Argument(format!(
            "training needs non-empty splits (train {}, validation {})",
            train.len(),
            val.len()
        )));
    }
    let mut adam = Adam::new(
        model.store(),
        AdamConfig {
            lr: cfg.lr,
            ..AdamConfig::default()
        },
    );
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut stopper = EarlyStopping::new(cfg.patience);
    let mut best = model.store().clone();
    let mut log = TrainLog {
        epochs: Vec::new(),
        best_epoch: 0,
        best_val_loss: f64::INFINITY,
    };
    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for (b, batch) in order.chunks(cfg.batch_size).enumerate() {
            let per = batch
                .par_iter()
                .map(|&i| sample_grad(&*model, &train[i]))
                .collect::<Result<Vec<_>>>()?;
            let mut grads = Gradients::zeros_like(model.store());
            let mut batch_loss = 0.0;
            for (l, g) in &per {
                batch_loss += l;
                grads.add_assign(g);
            }
            if !batch_loss.is_finite() || !grads.is_finite() {
                return Err(Error::Numeric(format!(
                    "non-finite loss or gradient at epoch {epoch}, batch {}",
                    b + 1
                )));
            }
            total += batch_loss;
            grads.scale(1.0 / batch.len() as f32);
            grads.clip_global_norm(cfg.clip_norm as f32);
            adam.step(model.store_mut(), &grads)?;
        }
        let train_loss = total / train.len() as f64;
        let val_loss = mean_loss(&*model, val)?;
        if !val_loss.is_finite() {
            return Err(Error::Numeric(format!("non-finite validation loss at epoch {epoch}")));
        }
        info!("epoch {epoch}: train {train_loss:.5} val {val_loss:.5}");
        log.epochs.push(EpochLog {
            epoch,
            train_loss,
            val_loss,
        });
        match stopper.observe(val_loss) {
            StopSignal::Improved => {
                best = model.store().clone();
                log.best_epoch = epoch;
                log.best_val_loss = val_loss;
            }
            StopSignal::Continue => {}
            StopSignal::Stop => break,
        }
    }
    *model.store_mut() = best;
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn early_stopping_reference_sequence() {
        let mut s = EarlyStopping::new(5);
        let losses = [3.0, 2.0, 2.5, 2.4, 2.6, 2.7, 2.9, 3.0];
        let mut stopped_at = None;
        for &l in &losses {
            if s.observe(l) == StopSignal::Stop {
                stopped_at = Some(s.epoch);
                break;
            }
        }
        assert_eq!(stopped_at, Some(7));
        assert_eq!(s.best_epoch, 2);
    }

    #[test]
    fn monotone_losses_never_stop() {
        let mut s = EarlyStopping::new(2);
        for k in 0..20 {
            assert_eq!(s.observe(10.0 - k as f64), StopSignal::Improved);
        }
        assert_eq!(s.best_epoch, 20);
    }

    #[test]
    fn equal_loss_is_not_improvement() {
        let mut s = EarlyStopping::new(1);
        assert_eq!(s.observe(1.0), StopSignal::Improved);
        assert_eq!(s.observe(1.0), StopSignal::Stop);
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig { lr: 0.0, ..TrainConfig::default() }.validate().is_err());
        assert!(TrainConfig { patience: 0, ..TrainConfig::default() }.validate().is_err());
        TrainConfig::default().validate().unwrap();
    }
}
