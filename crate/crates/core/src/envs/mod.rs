//! Desk-scale environments with scripted experts and a uniform random baseline.
//!
//! Environments and policies are plain single-threaded values; the collector
//! and the evaluator build one pair per worker through a [`RolloutFactory`].

mod fixed_cost;
mod gridworld;
mod line_reacher;
mod random;

use serde::{Deserialize, Serialize};

pub use fixed_cost::{FixedCost, FixedCostFactory, NoopPolicy, FIXED_COST_ID};
pub use gridworld::{GridWorld, GridWorldExpert, GRID_GOAL, GRID_MAX_STEPS, GRID_SIZE};
pub use line_reacher::{LineReacher, LineReacherExpert, REACHER_MAX_STEPS, REACHER_MAX_SPEED};
pub use random::{random_policy_act, RandomPolicy};

use crate::{Action, ActionSpace, Error, Result};

pub const GRIDWORLD_ID: &str = "gridworld-5x5";
pub const LINEREACHER_ID: &str = "linereacher-v1";
pub const GRIDWORLD_EXPERT_ID: &str = "gridworld-shortest-path";
pub const LINEREACHER_EXPERT_ID: &str = "linereacher-clamped-proportional";
pub const RANDOM_POLICY_ID: &str = "random";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvDescriptor {
    pub env_id: String,
    pub obs_dim: usize,
    pub action_space: ActionSpace,
    pub max_steps: usize,
}

impl EnvDescriptor {
    pub fn validate(&self) -> Result<()> {
        if self.obs_dim == 0 || self.max_steps == 0 {
            return Err(Error::InvalidDataset(format!(
                "descriptor {} needs obs_dim >= 1 and max_steps >= 1",
                self.env_id
            )));
        }
        self.action_space.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: Vec<f32>,
    pub reward: f64,
    pub done: bool,
}

pub trait Environment: Send {
    fn descriptor(&self) -> &EnvDescriptor;

    /// Start a new episode. Equal seeds give equal initial states.
    fn reset(&mut self, seed: u64) -> Vec<f32>;

    /// Apply `action`. Errors once the episode is done until the next reset.
    fn step(&mut self, action: &Action) -> Result<StepOutcome>;
}

pub trait Policy: Send {
    fn reset(&mut self, seed: u64);

    fn act(&mut self, state: &[f32]) -> Result<Action>;
}

/// Builds thread-confined environment/policy pairs.
pub trait RolloutFactory: Sync {
    fn descriptor(&self) -> EnvDescriptor;
    fn make_env(&self) -> Box<dyn Environment>;
    fn make_policy(&self) -> Box<dyn Policy>;
}

pub fn make_env(env_id: &str) -> Result<Box<dyn Environment>> {
    match env_id {
        GRIDWORLD_ID => Ok(Box::new(GridWorld::new())),
        LINEREACHER_ID => Ok(Box::new(LineReacher::new())),
        other => Err(Error::UnknownEnvironment(other.to_string())),
    }
}

pub fn descriptor(env_id: &str) -> Result<EnvDescriptor> {
    make_env(env_id).map(|e| e.descriptor().clone())
}

/// Resolve a policy id for an environment. `random` works for every environment.
pub fn make_policy(policy_id: &str, env_id: &str) -> Result<Box<dyn Policy>> {
    match (policy_id, env_id) {
        (GRIDWORLD_EXPERT_ID, GRIDWORLD_ID) => Ok(Box::new(GridWorldExpert)),
        (LINEREACHER_EXPERT_ID, LINEREACHER_ID) => Ok(Box::new(LineReacherExpert::new())),
        (RANDOM_POLICY_ID, _) => Ok(Box::new(RandomPolicy::new(descriptor(env_id)?.action_space))),
        _ => Err(Error::UnknownEnvironment(format!("{policy_id} for {env_id}"))),
    }
}

/// Factory for a named (environment, policy) pair from the built-in catalog.
#[derive(Debug, Clone)]
pub struct CatalogPair {
    env_id: String,
    policy_id: String,
    descriptor: EnvDescriptor,
}

impl CatalogPair {
    pub fn new(env_id: &str, policy_id: &str) -> Result<Self> {
        let descriptor = descriptor(env_id)?;
        make_policy(policy_id, env_id)?;
        Ok(Self {
            env_id: env_id.to_string(),
            policy_id: policy_id.to_string(),
            descriptor,
        })
    }

    pub fn policy_id(&self) -> &str {
        &self.policy_id
    }
}

impl RolloutFactory for CatalogPair {
    fn descriptor(&self) -> EnvDescriptor {
        self.descriptor.clone()
    }

    fn make_env(&self) -> Box<dyn Environment> {
        make_env(&self.env_id).expect("validated in CatalogPair::new")
    }

    fn make_policy(&self) -> Box<dyn Policy> {
        make_policy(&self.policy_id, &self.env_id).expect("validated in CatalogPair::new")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_resolution() {
        assert!(make_env("walker").is_err());
        assert!(make_policy(GRIDWORLD_EXPERT_ID, LINEREACHER_ID).is_err());
        assert!(CatalogPair::new(GRIDWORLD_ID, RANDOM_POLICY_ID).is_ok());
        assert_eq!(descriptor(LINEREACHER_ID).unwrap().max_steps, 20);
        assert_eq!(descriptor(GRIDWORLD_ID).unwrap().max_steps, 50);
    }
}
