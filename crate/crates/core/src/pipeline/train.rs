use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::corpus::TrainingInstance;
use crate::neuro::Array2;
use crate::topnn::{save_checkpoint, ModelConfig, ModelParams};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    /// Global gradient norm ceiling.
    pub clip_norm: f64,
    pub seed: u64,
    pub checkpoint_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 10,
            batch_size: 1,
            learning_rate: 1e-3,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            clip_norm: 5.0,
            seed: 0,
            checkpoint_every: 1,
        }
    }
}

impl TrainConfig {
    /// A zero learning rate is accepted: it freezes the parameters.
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: &str| Err(PipelineError::Config(m.to_owned()));
        if self.epochs == 0 || self.batch_size == 0 || self.checkpoint_every == 0 {
            return bad("epochs, batch_size and checkpoint_every must be positive");
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be a finite non-negative number");
        }
        if !(self.adam_beta1 > 0.0 && self.adam_beta1 < 1.0 && self.adam_beta2 > 0.0 && self.adam_beta2 < 1.0) {
            return bad("adam betas must lie in (0, 1)");
        }
        if !(self.adam_eps > 0.0 && self.clip_norm > 0.0) {
            return bad("adam_eps and clip_norm must be positive");
        }
        Ok(())
    }
}

/// First and second moment estimates, one pair per parameter array.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: Vec<Array2>,
    pub v: Vec<Array2>,
    /// Number of updates taken so far.
    pub t: u64,
}

impl AdamState {
    pub fn new<'a>(shapes: impl IntoIterator<Item = &'a Array2>) -> Self {
        let m: Vec<Array2> = shapes.into_iter().map(|a| Array2::zeros(a.rows(), a.cols())).collect();
        AdamState { v: m.clone(), m, t: 0 }
    }
}

/// One bias-corrected Adam update, in place.
pub fn adam_step(params: &mut [&mut Array2], grads: &[Array2], state: &mut AdamState, config: &TrainConfig) {
    state.t += 1;
    let (b1, b2) = (config.adam_beta1, config.adam_beta2);
    let c1 = 1.0 - b1.powi(state.t as i32);
    let c2 = 1.0 - b2.powi(state.t as i32);
    for (((p, g), m), v) in params.iter_mut().zip(grads).zip(&mut state.m).zip(&mut state.v) {
        let it = p
            .data_mut()
            .iter_mut()
            .zip(g.data())
            .zip(m.data_mut().iter_mut().zip(v.data_mut()));
        for ((theta, &g), (m, v)) in it {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *theta -= config.learning_rate * m_hat / (v_hat.sqrt() + config.adam_eps);
        }
    }
}

/// Rescales `grads` so their joint L2 norm is at most `max_norm`; returns
/// the norm before clipping.
pub fn clip_global_norm(grads: &mut [Array2], max_norm: f64) -> f64 {
    let norm = grads.iter().map(Array2::sq_norm).sum::<f64>().sqrt();
    if norm > max_norm {
        let k = max_norm / norm;
        grads.iter_mut().for_each(|g| g.data_mut().iter_mut().for_each(|v| *v *= k));
    }
    norm
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub mean_loss: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutput {
    pub params: ModelParams,
    pub losses: Vec<EpochLoss>,
}

/// Trains from a seeded initialization.
///
/// Each batch's per-instance losses are differentiated in parallel and
/// their gradients summed in batch order, averaged, clipped, then applied
/// with Adam. Parameters are kept at `f32` precision after every update.
/// With `checkpoint_dir` set, `epoch-NNNN.json` is written every
/// `checkpoint_every` epochs.
pub fn train(
    model_config: &ModelConfig,
    config: &TrainConfig,
    instances: &[TrainingInstance],
    checkpoint_dir: Option<&Path>,
) -> Result<TrainOutput, PipelineError> {
    config.validate()?;
    let params = ModelParams::init(model_config, config.seed)?;
    train_from(params, config, instances, checkpoint_dir)
}

/// As [`train`], continuing from existing parameters.
pub fn train_from(
    mut params: ModelParams,
    config: &TrainConfig,
    instances: &[TrainingInstance],
    checkpoint_dir: Option<&Path>,
) -> Result<TrainOutput, PipelineError> {
    config.validate()?;
    if instances.is_empty() {
        return Err(PipelineError::NoInstances);
    }
    if let Some(dir) = checkpoint_dir {
        fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5e_ed0f_0de7);
    let mut adam = AdamState::new(params.arrays().into_iter().map(|(_, a)| a));
    let mut order: Vec<usize> = (0..instances.len()).collect();
    let mut losses = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_total = 0.0;
        for batch in order.chunks(config.batch_size) {
            let results: Vec<_> = batch
                .par_iter()
                .map(|&i| params.loss_and_gradients(&instances[i]))
                .collect();
            let mut sum: Option<Vec<Array2>> = None;
            for (&i, r) in batch.iter().zip(results) {
                let (loss, grads) = r?;
                if !loss.is_finite() {
                    return Err(PipelineError::NonFiniteLoss { index: i, epoch });
                }
                epoch_total += loss;
                let grads = grads.into_vec();
                match sum.as_mut() {
                    None => sum = Some(grads),
                    Some(acc) => acc.iter_mut().zip(&grads).for_each(|(a, g)| a.add_assign(g).expect("same layout")),
                }
            }
            let mut grads = sum.expect("non-empty batch");
            let k = 1.0 / batch.len() as f64;
            grads.iter_mut().for_each(|g| g.data_mut().iter_mut().for_each(|v| *v *= k));
            clip_global_norm(&mut grads, config.clip_norm);
            let mut slots: Vec<&mut Array2> = params.arrays_mut().into_iter().map(|(_, a)| a).collect();
            adam_step(&mut slots, &grads, &mut adam, config);
            params.round_to_f32();
        }
        let mean_loss = epoch_total / instances.len() as f64;
        log::info!("epoch {epoch}: mean loss {mean_loss:.6}");
        losses.push(EpochLoss { epoch, mean_loss });
        if let Some(dir) = checkpoint_dir {
            if epoch % config.checkpoint_every == 0 {
                save_checkpoint(&params, &dir.join(format!("epoch-{epoch:04}.json")))?;
            }
        }
    }
    Ok(TrainOutput { params, losses })
}

/// Fraction of gold target tokens that are the argmax of the model's
/// teacher-forced distribution.
pub fn teacher_forced_accuracy(params: &ModelParams, instances: &[TrainingInstance]) -> Result<f64, PipelineError> {
    let per: Vec<_> = instances
        .par_iter()
        .map(|inst| params.teacher_forced_hits(inst))
        .collect::<Result<_, _>>()?;
    let total: usize = per.iter().map(Vec::len).sum();
    let hits: usize = per.iter().flatten().filter(|&&h| h).count();
    Ok(if total == 0 { 0.0 } else { hits as f64 / total as f64 })
}

/// CSV with header `epoch,mean_loss`.
pub fn write_loss_log(path: &Path, losses: &[EpochLoss]) -> Result<(), PipelineError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| PipelineError::io(path, e))?;
    for l in losses {
        w.serialize(l).map_err(|e| PipelineError::io(path, e))?;
    }
    w.flush().map_err(|e| PipelineError::io(path, e))
}

pub fn read_loss_log(path: &Path) -> Result<Vec<EpochLoss>, PipelineError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| PipelineError::io(path, e))?;
    r.deserialize()
        .map(|row| row.map_err(|e| PipelineError::Format(e.to_string())))
        .collect()
}
