use super::{EnvDescriptor, Environment, Policy, StepOutcome, LINEREACHER_ID};
use crate::{Action, ActionSpace, Error, Result, RngStream};

pub const REACHER_MAX_STEPS: usize = 20;
pub const REACHER_MAX_SPEED: f64 = 0.2;

/// Point on `[-1, 1]` steered toward the origin; reward `-|x|` after each move.
///
/// Position is tracked in f64 and observed as f32, so returns are exact to
/// f64 precision even though datasets store f32 states.
#[derive(Debug, Clone)]
pub struct LineReacher {
    descriptor: EnvDescriptor,
    x: f64,
    steps: usize,
    done: bool,
}

impl Default for LineReacher {
    fn default() -> Self {
        Self::new()
    }
}

impl LineReacher {
    pub fn new() -> Self {
        Self {
            descriptor: EnvDescriptor {
                env_id: LINEREACHER_ID.to_string(),
                obs_dim: 1,
                action_space: ActionSpace::Continuous {
                    low: vec![-REACHER_MAX_SPEED],
                    high: vec![REACHER_MAX_SPEED],
                },
                max_steps: REACHER_MAX_STEPS,
            },
            x: 0.0,
            steps: 0,
            done: true,
        }
    }

    pub fn reset_to(&mut self, x0: f64) -> Vec<f32> {
        self.x = x0.clamp(-1.0, 1.0);
        self.steps = 0;
        self.done = false;
        vec![self.x as f32]
    }
}

impl Environment for LineReacher {
    fn descriptor(&self) -> &EnvDescriptor {
        &self.descriptor
    }

    fn reset(&mut self, seed: u64) -> Vec<f32> {
        let x0 = RngStream::new(seed).uniform(-1.0, 1.0);
        self.reset_to(x0)
    }

    fn step(&mut self, action: &Action) -> Result<StepOutcome> {
        if self.done {
            return Err(Error::StepAfterDone);
        }
        if !self.descriptor.action_space.contains(action) {
            return Err(Error::InvalidAction(format!("{action:?} outside [-0.2, 0.2]")));
        }
        let Action::Continuous(a) = action else {
            unreachable!("checked by contains")
        };
        self.x = (self.x + a[0]).clamp(-1.0, 1.0);
        self.steps += 1;
        self.done = self.steps >= REACHER_MAX_STEPS;
        Ok(StepOutcome {
            state: vec![self.x as f32],
            reward: -self.x.abs(),
            done: self.done,
        })
    }
}

/// `a = clamp(-x, -0.2, 0.2)`.
#[derive(Debug, Clone, Default)]
pub struct LineReacherExpert;

impl LineReacherExpert {
    pub fn new() -> Self {
        Self
    }

    pub fn action_for(x: f64) -> f64 {
        (-x).clamp(-REACHER_MAX_SPEED, REACHER_MAX_SPEED)
    }
}

impl Policy for LineReacherExpert {
    fn reset(&mut self, _seed: u64) {}

    fn act(&mut self, state: &[f32]) -> Result<Action> {
        match state {
            [x] if x.is_finite() => Ok(Action::Continuous(vec![Self::action_for(*x as f64)])),
            _ => Err(Error::InvalidState(format!("{state:?} is not a line position"))),
        }
    }
}
