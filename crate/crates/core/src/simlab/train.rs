//! Mini-batch SGD with momentum.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{shuffle, substream};

use super::cohort::{task_label, Split, SyntheticCohort};
use super::loss::Loss;
use super::mlp::MlpModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub loss: Loss,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    /// Mean training loss before the first update, dropout disabled.
    pub initial_loss: f64,
    /// Mean mini-batch loss of each epoch, dropout as configured.
    pub epoch_loss: Vec<f64>,
    /// Mean training loss after the last update, dropout disabled.
    pub final_loss: f64,
    /// Validation loss per epoch, dropout disabled; empty without validation data.
    pub validation_loss: Vec<f64>,
}

/// A labelled example borrowed from a cohort or built by hand.
#[derive(Debug, Clone, Copy)]
pub struct Example<'a> {
    pub features: &'a [f64],
    pub label: usize,
}

/// Mean loss with dropout disabled.
pub fn mean_loss(model: &MlpModel, loss: Loss, data: &[Example<'_>]) -> f64 {
    let total: f64 = data
        .iter()
        .map(|e| loss.evaluate(&model.forward_trace(e.features, None).logits, e.label).0)
        .sum();
    total / data.len() as f64
}

/// Mean loss and gradient over a batch under fixed dropout masks drawn from `rng`.
pub fn batch_gradient(
    model: &MlpModel,
    loss: Loss,
    batch: &[Example<'_>],
    rng: Option<&mut crate::rng::StreamRng>,
) -> (f64, Vec<f64>) {
    let mut grad = vec![0.0; model.num_parameters()];
    let mut total = 0.0;
    let mut rng = rng;
    for e in batch {
        let masks = match rng.as_deref_mut() {
            Some(r) if model.dropout_rate() > 0.0 => Some(model.sample_masks(r)),
            _ => None,
        };
        let trace = model.forward_trace(e.features, masks.as_ref());
        let (l, dlogits) = loss.evaluate(&trace.logits, e.label);
        total += l;
        model.backward(&trace, &dlogits, &mut grad);
    }
    let n = batch.len() as f64;
    grad.iter_mut().for_each(|g| *g /= n);
    (total / n, grad)
}

/// Trains `model` in place. Epoch `e` shuffles and draws dropout masks from
/// substream `e` of the config seed, so runs are reproducible.
pub fn fit(
    model: &mut MlpModel,
    train: &[Example<'_>],
    validation: &[Example<'_>],
    cfg: &TrainConfig,
) -> Result<TrainHistory> {
    if !cfg.loss.matches(model.head()) {
        return Err(Error::InvalidInput(format!("loss {:?} does not fit head {}", cfg.loss, model.head())));
    }
    if train.is_empty() {
        return Err(Error::InsufficientData("empty training split".into()));
    }
    if cfg.batch_size == 0 || !cfg.learning_rate.is_finite() || cfg.learning_rate < 0.0 {
        return Err(Error::InvalidInput("batch size and learning rate must be positive".into()));
    }
    if !(0.0..1.0).contains(&cfg.momentum) {
        return Err(Error::InvalidInput(format!("momentum {} outside [0, 1)", cfg.momentum)));
    }
    let initial_loss = mean_loss(model, cfg.loss, train);
    let mut velocity = vec![0.0; model.num_parameters()];
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut epoch_loss = Vec::with_capacity(cfg.epochs);
    let mut validation_loss = Vec::new();
    for epoch in 0..cfg.epochs {
        let mut rng = substream(cfg.seed, epoch as u64);
        shuffle(&mut rng, &mut order);
        let mut sum = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<Example<'_>> = chunk.iter().map(|&i| train[i]).collect();
            let (l, grad) = batch_gradient(model, cfg.loss, &batch, Some(&mut rng));
            if !l.is_finite() {
                return Err(Error::Diverged { epoch });
            }
            sum += l * batch.len() as f64;
            let params = model.parameters_mut();
            for ((p, v), g) in params.iter_mut().zip(&mut velocity).zip(&grad) {
                *v = cfg.momentum * *v - cfg.learning_rate * g;
                *p += *v;
            }
            model.sort_ordinal_biases();
        }
        if model.parameters().iter().any(|p| !p.is_finite()) {
            return Err(Error::Diverged { epoch });
        }
        epoch_loss.push(sum / train.len() as f64);
        if !validation.is_empty() {
            validation_loss.push(mean_loss(model, cfg.loss, validation));
        }
    }
    Ok(TrainHistory {
        initial_loss,
        epoch_loss,
        final_loss: mean_loss(model, cfg.loss, train),
        validation_loss,
    })
}

/// Examples of one split, one per image, labelled for the model's head.
pub fn split_examples<'a>(cohort: &'a SyntheticCohort, split: Split, model: &MlpModel) -> Vec<Example<'a>> {
    cohort
        .images_in(split)
        .into_iter()
        .map(|(s, img)| Example {
            features: &img.features,
            label: task_label(model.head(), cohort.config.k, s.label),
        })
        .collect()
}

/// Trains on the cohort's training split, tracking validation loss.
pub fn train(model: &mut MlpModel, cohort: &SyntheticCohort, cfg: &TrainConfig) -> Result<TrainHistory> {
    let tr = split_examples(cohort, Split::Train, model);
    let va = split_examples(cohort, Split::Validation, model);
    fit(model, &tr, &va, cfg)
}
