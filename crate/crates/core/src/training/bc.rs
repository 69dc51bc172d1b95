//! Behavioral cloning with a one-hidden-layer tanh MLP trained by minibatch SGD.
//!
//! Parameters live in one flat `Vec<f64>`: `W1 [hidden x obs]`, `b1 [hidden]`,
//! `W2 [out x hidden]`, `b2 [out]`. Discrete heads minimize softmax
//! cross-entropy of the expert action; continuous heads minimize the mean
//! squared error per action component.

use std::ops::Range;

use crate::dataset::DatasetFile;
use crate::envs::Policy;
use crate::training::split::{transitions, ActionRef};
use crate::{Action, ActionSpace, Error, Result, RngStream};

pub const DEFAULT_HIDDEN: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub train_seed: u64,
    pub hidden: usize,
    /// Snapshot the model every this many epochs (the final epoch is always kept).
    pub checkpoint_every: Option<usize>,
}

impl TrainConfig {
    pub fn new(epochs: usize, train_seed: u64) -> Self {
        Self {
            epochs,
            learning_rate: 0.05,
            batch_size: 64,
            train_seed,
            hidden: DEFAULT_HIDDEN,
            checkpoint_every: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || self.hidden == 0 {
            return Err(Error::InvalidConfig("epochs, batch_size and hidden must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!("learning rate {}", self.learning_rate)));
        }
        if self.checkpoint_every == Some(0) {
            return Err(Error::InvalidConfig("checkpoint_every must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Head {
    /// Logits over `n` actions.
    Discrete,
    /// Raw action components, clamped to these bounds when acting.
    Continuous { low: Vec<f64>, high: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    Class(usize),
    Values(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub input: Vec<f64>,
    pub target: Target,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BcModel {
    pub obs_dim: usize,
    pub hidden: usize,
    pub out_dim: usize,
    pub head: Head,
    pub params: Vec<f64>,
}

/// Gradient of the mean batch loss, same layout as `BcModel::params`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients(pub Vec<f64>);

impl BcModel {
    pub fn param_count(obs_dim: usize, hidden: usize, out_dim: usize) -> usize {
        hidden * obs_dim + hidden + out_dim * hidden + out_dim
    }

    /// Uniform `±1/sqrt(fan_in)` initialization for weights and biases.
    pub fn init(obs_dim: usize, hidden: usize, out_dim: usize, head: Head, rng: &mut RngStream) -> Self {
        let mut params = Vec::with_capacity(Self::param_count(obs_dim, hidden, out_dim));
        let b1 = 1.0 / (obs_dim as f64).sqrt();
        let b2 = 1.0 / (hidden as f64).sqrt();
        params.extend((0..hidden * obs_dim + hidden).map(|_| rng.uniform(-b1, b1)));
        params.extend((0..out_dim * hidden + out_dim).map(|_| rng.uniform(-b2, b2)));
        Self {
            obs_dim,
            hidden,
            out_dim,
            head,
            params,
        }
    }

    pub fn for_space(obs_dim: usize, hidden: usize, space: &ActionSpace, rng: &mut RngStream) -> Self {
        let head = match space {
            ActionSpace::Discrete { .. } => Head::Discrete,
            ActionSpace::Continuous { low, high } => Head::Continuous {
                low: low.clone(),
                high: high.clone(),
            },
        };
        Self::init(obs_dim, hidden, space.output_dim(), head, rng)
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }

    fn offsets(&self) -> (usize, usize, usize) {
        let w1 = self.hidden * self.obs_dim;
        let b1 = w1 + self.hidden;
        let w2 = b1 + self.out_dim * self.hidden;
        (w1, b1, w2)
    }

    fn hidden_activations(&self, input: &[f64], h: &mut [f64]) {
        let (w1_end, _, _) = self.offsets();
        let (w1, rest) = self.params.split_at(w1_end);
        let b1 = &rest[..self.hidden];
        for (j, hj) in h.iter_mut().enumerate() {
            let row = &w1[j * self.obs_dim..(j + 1) * self.obs_dim];
            let z: f64 = b1[j] + row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>();
            *hj = z.tanh();
        }
    }

    fn output(&self, h: &[f64], out: &mut [f64]) {
        let (_, b1_end, w2_end) = self.offsets();
        let w2 = &self.params[b1_end..w2_end];
        let b2 = &self.params[w2_end..];
        for (k, ok) in out.iter_mut().enumerate() {
            let row = &w2[k * self.hidden..(k + 1) * self.hidden];
            *ok = b2[k] + row.iter().zip(h).map(|(w, x)| w * x).sum::<f64>();
        }
    }

    pub fn forward(&self, input: &[f64]) -> Vec<f64> {
        let mut h = vec![0.0; self.hidden];
        let mut out = vec![0.0; self.out_dim];
        self.hidden_activations(input, &mut h);
        self.output(&h, &mut out);
        out
    }

    pub fn forward_f32(&self, state: &[f32]) -> Vec<f64> {
        let input: Vec<f64> = state.iter().map(|&x| x as f64).collect();
        self.forward(&input)
    }

    fn sample_loss(out: &[f64], target: &Target, grad_out: Option<&mut [f64]>) -> f64 {
        match target {
            Target::Class(c) => {
                let max = out.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let sum: f64 = out.iter().map(|o| (o - max).exp()).sum();
                let log_z = max + sum.ln();
                if let Some(g) = grad_out {
                    for (k, gk) in g.iter_mut().enumerate() {
                        let p = (out[k] - log_z).exp();
                        *gk = p - if k == *c { 1.0 } else { 0.0 };
                    }
                }
                log_z - out[*c]
            }
            Target::Values(y) => {
                let d = out.len() as f64;
                if let Some(g) = grad_out {
                    for (k, gk) in g.iter_mut().enumerate() {
                        *gk = 2.0 * (out[k] - y[k]) / d;
                    }
                }
                out.iter().zip(y).map(|(o, t)| (o - t).powi(2)).sum::<f64>() / d
            }
        }
    }

    /// Mean loss over `batch`.
    pub fn loss(&self, batch: &[&Sample]) -> f64 {
        let mut h = vec![0.0; self.hidden];
        let mut out = vec![0.0; self.out_dim];
        let total: f64 = batch
            .iter()
            .map(|s| {
                self.hidden_activations(&s.input, &mut h);
                self.output(&h, &mut out);
                Self::sample_loss(&out, &s.target, None)
            })
            .sum();
        total / batch.len() as f64
    }

    /// Mean loss over `batch` and its analytic gradient.
    pub fn loss_and_grad(&self, batch: &[&Sample]) -> (f64, Gradients) {
        let (w1_end, b1_end, w2_end) = self.offsets();
        let mut grad = vec![0.0; self.params.len()];
        let mut h = vec![0.0; self.hidden];
        let mut out = vec![0.0; self.out_dim];
        let mut d_out = vec![0.0; self.out_dim];
        let mut d_z = vec![0.0; self.hidden];
        let scale = 1.0 / batch.len() as f64;
        let mut total = 0.0;
        for s in batch {
            self.hidden_activations(&s.input, &mut h);
            self.output(&h, &mut out);
            total += Self::sample_loss(&out, &s.target, Some(&mut d_out));
            d_z.iter_mut().for_each(|d| *d = 0.0);
            for k in 0..self.out_dim {
                let g = d_out[k] * scale;
                grad[w2_end + k] += g;
                let row = k * self.hidden;
                for j in 0..self.hidden {
                    grad[b1_end + row + j] += g * h[j];
                    d_z[j] += g * self.params[b1_end + row + j];
                }
            }
            for j in 0..self.hidden {
                let dz = d_z[j] * (1.0 - h[j] * h[j]);
                grad[w1_end + j] += dz;
                let row = j * self.obs_dim;
                for (i, x) in s.input.iter().enumerate() {
                    grad[row + i] += dz * x;
                }
            }
        }
        (total * scale, Gradients(grad))
    }

    pub fn sgd_step(&mut self, grad: &Gradients, learning_rate: f64) {
        for (p, g) in self.params.iter_mut().zip(&grad.0) {
            *p -= learning_rate * g;
        }
    }
}

/// Greedy action: lowest-index argmax of the logits, or the clamped output.
pub fn policy_act_greedy(model: &BcModel, state: &[f32]) -> Action {
    let out = model.forward_f32(state);
    match &model.head {
        Head::Discrete => {
            let mut best = 0;
            for (k, v) in out.iter().enumerate() {
                if *v > out[best] {
                    best = k;
                }
            }
            Action::Discrete(best as u32)
        }
        Head::Continuous { low, high } => Action::Continuous(
            out.iter()
                .zip(low.iter().zip(high))
                .map(|(v, (lo, hi))| if v.is_nan() { 0.0f64.clamp(*lo, *hi) } else { v.clamp(*lo, *hi) })
                .collect(),
        ),
    }
}

#[derive(Debug, Clone)]
pub struct BcPolicy {
    pub model: BcModel,
}

impl Policy for BcPolicy {
    fn reset(&mut self, _seed: u64) {}

    fn act(&mut self, state: &[f32]) -> Result<Action> {
        if state.len() != self.model.obs_dim {
            return Err(Error::InvalidState(format!(
                "state has {} components, model expects {}",
                state.len(),
                self.model.obs_dim
            )));
        }
        Ok(policy_act_greedy(&self.model, state))
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: BcModel,
    /// Full training-set loss after each epoch.
    pub losses: Vec<f64>,
    /// `(epoch, model)` snapshots, ascending by epoch.
    pub checkpoints: Vec<(usize, BcModel)>,
    pub samples: Vec<Sample>,
}

impl TrainOutcome {
    /// Fraction of training samples whose greedy action matches (discrete only).
    pub fn accuracy(&self, model: &BcModel) -> Option<f64> {
        let mut hits = 0usize;
        for s in &self.samples {
            let Target::Class(c) = s.target else { return None };
            let out = model.forward(&s.input);
            let mut best = 0;
            for (k, v) in out.iter().enumerate() {
                if *v > out[best] {
                    best = k;
                }
            }
            hits += (best == c) as usize;
        }
        Some(hits as f64 / self.samples.len() as f64)
    }
}

pub(crate) fn samples(dataset: &DatasetFile, range: Range<usize>) -> Result<Vec<Sample>> {
    Ok(transitions(dataset, range)?
        .into_iter()
        .map(|t| Sample {
            input: t.s.iter().map(|&x| x as f64).collect(),
            target: match t.a {
                ActionRef::Discrete(a) => Target::Class(a as usize),
                ActionRef::Continuous(a) => Target::Values(a.iter().map(|&x| x as f64).collect()),
            },
        })
        .collect())
}

/// Fit a BC policy on the transitions of `range`.
///
/// Initialization and the per-epoch shuffles all come from
/// `RngStream::new(cfg.train_seed)`, so equal configs give bit-equal models.
pub fn train_bc(dataset: &DatasetFile, range: Range<usize>, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let samples = samples(dataset, range)?;
    if samples.is_empty() {
        return Err(Error::EmptySplit);
    }
    let mut rng = RngStream::new(cfg.train_seed);
    let mut model = BcModel::for_space(dataset.obs_dim(), cfg.hidden, &dataset.descriptor.action_space, &mut rng);
    let all: Vec<&Sample> = samples.iter().collect();
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut losses = Vec::with_capacity(cfg.epochs);
    let mut checkpoints = Vec::new();
    let mut batch: Vec<&Sample> = Vec::with_capacity(cfg.batch_size);
    for epoch in 1..=cfg.epochs {
        rng.shuffle(&mut order);
        for chunk in order.chunks(cfg.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| &samples[i]));
            let (_, grad) = model.loss_and_grad(&batch);
            model.sgd_step(&grad, cfg.learning_rate);
        }
        if !model.is_finite() {
            return Err(Error::InvalidConfig(format!("training diverged at epoch {epoch}")));
        }
        losses.push(model.loss(&all));
        let snapshot = cfg.checkpoint_every.is_some_and(|k| epoch % k == 0) || epoch == cfg.epochs;
        if snapshot && cfg.checkpoint_every.is_some() {
            checkpoints.push((epoch, model.clone()));
        }
    }
    Ok(TrainOutcome {
        model,
        losses,
        checkpoints,
        samples,
    })
}
