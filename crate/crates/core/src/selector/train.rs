//! Head training: weighted cross-entropy, decoupled weight decay with
//! adaptive moments, early stopping on validation F1.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::head::{head_gradient, GradExample, SphereHead};
use super::{selector_score, SelectorError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectorTrainConfig {
    pub learning_rate: f64,
    /// How many times each positive pair appears per epoch.
    pub repetition: u32,
    /// Epochs without a validation F1 improvement before stopping.
    pub patience: u32,
    pub max_epochs: u32,
    pub batch_size: usize,
    pub weight_decay: f64,
    pub seed: u64,
}

impl Default for SelectorTrainConfig {
    fn default() -> Self {
        SelectorTrainConfig {
            learning_rate: 5e-4,
            repetition: 5,
            patience: 10,
            max_epochs: 500,
            batch_size: 32,
            weight_decay: 0.01,
            seed: 0,
        }
    }
}

impl SelectorTrainConfig {
    pub fn validate(&self) -> Result<(), SelectorError> {
        if self.repetition == 0 || self.patience == 0 || self.batch_size == 0 {
            return Err(SelectorError::InvalidConfig("repetition, patience and batch size must be positive"));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(SelectorError::InvalidConfig("learning rate must be finite and non-negative"));
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return Err(SelectorError::InvalidConfig("weight decay must be finite and non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledVectors {
    pub premise: Vec<f64>,
    pub hypothesis: Vec<f64>,
    pub label: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub initial_f1: f64,
    pub best_f1: f64,
    /// Epoch whose parameters were kept; 0 means the initialization.
    pub best_epoch: usize,
    pub epochs_run: usize,
    /// Validation F1 after each epoch.
    pub history: Vec<f64>,
}

/// F1 of the prediction `selector_score > 0.5`.
pub fn f1_score(head: &SphereHead, data: &[LabeledVectors]) -> Result<f64, SelectorError> {
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for pair in data {
        let p = head.sphere_of(&pair.premise)?;
        let q = head.sphere_of(&pair.hypothesis)?;
        let predicted = selector_score(&p, &q) > 0.5;
        match (predicted, pair.label) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    if tp == 0 {
        return Ok(0.0);
    }
    Ok(2.0 * tp as f64 / (2 * tp + fp + fn_) as f64)
}

struct AdamW {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
    lr: f64,
    weight_decay: f64,
}

impl AdamW {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize, lr: f64, weight_decay: f64) -> Self {
        AdamW { m: vec![0.0; n], v: vec![0.0; n], t: 0, lr, weight_decay }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - libm::pow(Self::BETA1, self.t as f64);
        let c2 = 1.0 - libm::pow(Self::BETA2, self.t as f64);
        for i in 0..params.len() {
            self.m[i] = Self::BETA1 * self.m[i] + (1.0 - Self::BETA1) * grad[i];
            self.v[i] = Self::BETA2 * self.v[i] + (1.0 - Self::BETA2) * grad[i] * grad[i];
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= self.lr * (m_hat / (libm::sqrt(v_hat) + Self::EPS) + self.weight_decay * params[i]);
        }
    }
}

/// Trains `init` on `train` and returns the parameters with the best
/// validation F1 (the initialization if no epoch improves on it). When
/// `valid` is empty the training pairs double as validation pairs.
pub fn train_head(
    init: SphereHead,
    train: &[LabeledVectors],
    valid: &[LabeledVectors],
    cfg: &SelectorTrainConfig,
) -> Result<(SphereHead, TrainReport), SelectorError> {
    cfg.validate()?;
    let positives = train.iter().filter(|p| p.label).count();
    if positives == 0 || positives == train.len() {
        return Err(SelectorError::DegenerateData);
    }
    let valid = if valid.is_empty() { train } else { valid };

    let mut order: Vec<usize> = Vec::new();
    for (i, pair) in train.iter().enumerate() {
        let copies = if pair.label { cfg.repetition } else { 1 };
        order.extend(core::iter::repeat_n(i, copies as usize));
    }

    let mut head = init;
    let initial_f1 = f1_score(&head, valid)?;
    let mut best = head.clone();
    let mut report = TrainReport { initial_f1, best_f1: initial_f1, best_epoch: 0, epochs_run: 0, history: Vec::new() };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut opt = AdamW::new(head.params().len(), cfg.learning_rate, cfg.weight_decay);
    let mut stale = 0u32;

    for epoch in 1..=cfg.max_epochs as usize {
        for i in (1..order.len()).rev() {
            let j = rng.random_range(0..=i);
            order.swap(i, j);
        }
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<GradExample<'_>> = chunk
                .iter()
                .map(|&i| GradExample {
                    premise: &train[i].premise,
                    hypothesis: &train[i].hypothesis,
                    target: if train[i].label { 1.0 } else { 0.0 },
                    weight: 1.0,
                })
                .collect();
            let (_, grad) = head_gradient(&head, &batch)?;
            opt.step(head.params_mut(), &grad);
        }
        let f1 = f1_score(&head, valid)?;
        report.history.push(f1);
        report.epochs_run = epoch;
        if f1 > report.best_f1 {
            report.best_f1 = f1;
            report.best_epoch = epoch;
            best = head.clone();
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                break;
            }
        }
    }
    Ok((best, report))
}
