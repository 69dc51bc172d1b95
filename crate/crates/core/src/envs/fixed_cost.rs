//! A fake environment whose episodes take a fixed wall-clock time.
//!
//! Used to measure collector scheduling overhead without CPU contention:
//! each step sleeps, so workers overlap even on a single core.

use std::time::Duration;

use super::{EnvDescriptor, Environment, Policy, RolloutFactory, StepOutcome};
use crate::{Action, ActionSpace, Error, Result, RngStream};

pub const FIXED_COST_ID: &str = "fixed-cost";

#[derive(Debug, Clone)]
pub struct FixedCost {
    descriptor: EnvDescriptor,
    step_cost: Duration,
    t: usize,
    x: f32,
}

impl FixedCost {
    /// Episodes last `steps` steps of `step_cost` each.
    pub fn new(steps: usize, step_cost: Duration) -> Self {
        Self {
            descriptor: EnvDescriptor {
                env_id: FIXED_COST_ID.into(),
                obs_dim: 1,
                action_space: ActionSpace::Discrete { n: 1 },
                max_steps: steps.max(1),
            },
            step_cost,
            t: 0,
            x: 0.0,
        }
    }
}

impl Environment for FixedCost {
    fn descriptor(&self) -> &EnvDescriptor {
        &self.descriptor
    }

    fn reset(&mut self, seed: u64) -> Vec<f32> {
        self.t = 0;
        self.x = RngStream::new(seed).below(1000) as f32;
        vec![self.x]
    }

    fn step(&mut self, _action: &Action) -> Result<StepOutcome> {
        if self.t >= self.descriptor.max_steps {
            return Err(Error::StepAfterDone);
        }
        std::thread::sleep(self.step_cost);
        self.t += 1;
        self.x += 1.0;
        Ok(StepOutcome {
            state: vec![self.x],
            reward: 1.0,
            done: self.t == self.descriptor.max_steps,
        })
    }
}

/// Always takes action 0.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoopPolicy;

impl Policy for NoopPolicy {
    fn reset(&mut self, _seed: u64) {}

    fn act(&mut self, _state: &[f32]) -> Result<Action> {
        Ok(Action::Discrete(0))
    }
}

/// Factory for [`FixedCost`] with [`NoopPolicy`].
#[derive(Debug, Clone, Copy)]
pub struct FixedCostFactory {
    pub steps: usize,
    pub step_cost: Duration,
}

impl RolloutFactory for FixedCostFactory {
    fn descriptor(&self) -> EnvDescriptor {
        FixedCost::new(self.steps, self.step_cost).descriptor.clone()
    }

    fn make_env(&self) -> Box<dyn Environment> {
        Box::new(FixedCost::new(self.steps, self.step_cost))
    }

    fn make_policy(&self) -> Box<dyn Policy> {
        Box::new(NoopPolicy)
    }
}
