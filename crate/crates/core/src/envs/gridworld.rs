use super::{EnvDescriptor, Environment, Policy, StepOutcome, GRIDWORLD_ID};
use crate::{Action, ActionSpace, Error, Result, RngStream};

pub const GRID_SIZE: i32 = 5;
pub const GRID_GOAL: (i32, i32) = (4, 4);
pub const GRID_MAX_STEPS: usize = 50;

pub const UP: u32 = 0;
pub const DOWN: u32 = 1;
pub const LEFT: u32 = 2;
pub const RIGHT: u32 = 3;

/// 5x5 grid, goal in the bottom-right corner, reward -1 per move.
#[derive(Debug, Clone)]
pub struct GridWorld {
    descriptor: EnvDescriptor,
    cell: (i32, i32),
    steps: usize,
    done: bool,
}

impl Default for GridWorld {
    fn default() -> Self {
        Self::new()
    }
}

impl GridWorld {
    pub fn new() -> Self {
        Self {
            descriptor: EnvDescriptor {
                env_id: GRIDWORLD_ID.to_string(),
                obs_dim: 2,
                action_space: ActionSpace::Discrete { n: 4 },
                max_steps: GRID_MAX_STEPS,
            },
            cell: (0, 0),
            steps: 0,
            done: true,
        }
    }

    /// Start cell for `seed`: one of the 24 non-goal cells, uniformly.
    pub fn start_cell(seed: u64) -> (i32, i32) {
        // The goal is the last cell in row-major order, so indices 0..24 skip it.
        let idx = RngStream::new(seed).below(24) as i32;
        (idx / GRID_SIZE, idx % GRID_SIZE)
    }

    /// Reset to a chosen cell; used by oracles that enumerate starts.
    pub fn reset_to(&mut self, cell: (i32, i32)) -> Vec<f32> {
        self.cell = cell;
        self.steps = 0;
        self.done = false;
        self.observe()
    }

    fn observe(&self) -> Vec<f32> {
        vec![self.cell.0 as f32, self.cell.1 as f32]
    }

    /// One clamped move, independent of episode bookkeeping.
    pub fn transition(cell: (i32, i32), action: u32) -> Result<(i32, i32)> {
        let (r, c) = cell;
        let next = match action {
            UP => (r - 1, c),
            DOWN => (r + 1, c),
            LEFT => (r, c - 1),
            RIGHT => (r, c + 1),
            other => return Err(Error::InvalidAction(format!("gridworld action {other} >= 4"))),
        };
        Ok((next.0.clamp(0, GRID_SIZE - 1), next.1.clamp(0, GRID_SIZE - 1)))
    }
}

pub(crate) fn parse_cell(state: &[f32]) -> Result<(i32, i32)> {
    let valid = |x: f32| x.fract() == 0.0 && (0.0..GRID_SIZE as f32).contains(&x);
    match state {
        [r, c] if valid(*r) && valid(*c) => Ok((*r as i32, *c as i32)),
        _ => Err(Error::InvalidState(format!("{state:?} is not a gridworld cell"))),
    }
}

impl Environment for GridWorld {
    fn descriptor(&self) -> &EnvDescriptor {
        &self.descriptor
    }

    fn reset(&mut self, seed: u64) -> Vec<f32> {
        self.reset_to(Self::start_cell(seed))
    }

    fn step(&mut self, action: &Action) -> Result<StepOutcome> {
        if self.done {
            return Err(Error::StepAfterDone);
        }
        let a = action
            .as_discrete()
            .ok_or_else(|| Error::InvalidAction("gridworld expects a discrete action".into()))?;
        self.cell = Self::transition(self.cell, a)?;
        self.steps += 1;
        self.done = self.cell == GRID_GOAL || self.steps >= GRID_MAX_STEPS;
        Ok(StepOutcome {
            state: self.observe(),
            reward: -1.0,
            done: self.done,
        })
    }
}

/// Shortest-path expert: close the row gap first (down), then the column gap (right).
#[derive(Debug, Clone, Copy, Default)]
pub struct GridWorldExpert;

impl GridWorldExpert {
    pub fn action_for(cell: (i32, i32)) -> Result<u32> {
        if cell == GRID_GOAL {
            return Err(Error::PolicyOnTerminalState);
        }
        Ok(if cell.0 < GRID_GOAL.0 { DOWN } else { RIGHT })
    }
}

impl Policy for GridWorldExpert {
    fn reset(&mut self, _seed: u64) {}

    fn act(&mut self, state: &[f32]) -> Result<Action> {
        Self::action_for(parse_cell(state)?).map(Action::Discrete)
    }
}
