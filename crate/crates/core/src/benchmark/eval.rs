use rayon::prelude::*;

use crate::collector::enjoy_episode;
use crate::envs::{make_env, EnvDescriptor, Environment, Policy, RolloutFactory};
use crate::training::{BcModel, BcPolicy};
use crate::{average_episodic_reward, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    /// `(seed, return)` in the order of the requested seeds.
    pub returns: Vec<(u64, f64)>,
    pub mean: f64,
    pub std: f64,
}

/// One greedy episode per seed, run in parallel with per-thread env/policy pairs.
pub fn evaluate(factory: &dyn RolloutFactory, seeds: &[u64]) -> Result<Evaluation> {
    if seeds.is_empty() {
        return Err(Error::EmptyInput);
    }
    let returns = seeds
        .par_iter()
        .map_init(
            || (factory.make_env(), factory.make_policy()),
            |(env, policy), &seed| enjoy_episode(env.as_mut(), policy.as_mut(), seed).map(|e| (seed, e.total_return)),
        )
        .collect::<Result<Vec<_>>>()?;
    let values: Vec<f64> = returns.iter().map(|(_, r)| *r).collect();
    let (mean, std) = average_episodic_reward(&values)?;
    Ok(Evaluation { returns, mean, std })
}

/// Index of the candidate with the highest validation AER; ties go to the earliest.
pub fn select_best<F: RolloutFactory>(candidates: &[F], validation_seeds: &[u64]) -> Result<(usize, Vec<f64>)> {
    if candidates.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut scores = Vec::with_capacity(candidates.len());
    let mut best = 0;
    for (i, c) in candidates.iter().enumerate() {
        let score = evaluate(c, validation_seeds)?.mean;
        if i > 0 && score > scores[best] {
            best = i;
        }
        scores.push(score);
    }
    Ok((best, scores))
}

/// A trained model rolled out in a catalog environment.
#[derive(Debug, Clone)]
pub struct ModelRollout {
    pub descriptor: EnvDescriptor,
    pub model: BcModel,
}

impl ModelRollout {
    pub fn new(env_id: &str, model: BcModel) -> Result<Self> {
        let descriptor = make_env(env_id)?.descriptor().clone();
        if descriptor.obs_dim != model.obs_dim || descriptor.action_space.output_dim() != model.out_dim {
            return Err(Error::InvalidConfig(format!(
                "model shape [{}, {}, {}] does not fit {env_id}",
                model.obs_dim, model.hidden, model.out_dim
            )));
        }
        Ok(Self { descriptor, model })
    }
}

impl RolloutFactory for ModelRollout {
    fn descriptor(&self) -> EnvDescriptor {
        self.descriptor.clone()
    }

    fn make_env(&self) -> Box<dyn Environment> {
        make_env(&self.descriptor.env_id).expect("validated in ModelRollout::new")
    }

    fn make_policy(&self) -> Box<dyn Policy> {
        Box::new(BcPolicy {
            model: self.model.clone(),
        })
    }
}
