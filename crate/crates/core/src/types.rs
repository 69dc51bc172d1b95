use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Action space of an environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ActionSpace {
    Discrete { n: u32 },
    Continuous { low: Vec<f64>, high: Vec<f64> },
}

impl ActionSpace {
    pub fn discrete(n: u32) -> Result<Self> {
        let space = ActionSpace::Discrete { n };
        space.validate()?;
        Ok(space)
    }

    pub fn continuous(low: Vec<f64>, high: Vec<f64>) -> Result<Self> {
        let space = ActionSpace::Continuous { low, high };
        space.validate()?;
        Ok(space)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ActionSpace::Discrete { n } if *n == 0 => {
                Err(Error::InvalidActionSpace("discrete space needs n >= 1".into()))
            }
            ActionSpace::Discrete { .. } => Ok(()),
            ActionSpace::Continuous { low, high } => {
                if low.is_empty() || low.len() != high.len() {
                    return Err(Error::InvalidActionSpace(format!(
                        "bounds have lengths {} and {}",
                        low.len(),
                        high.len()
                    )));
                }
                if let Some(i) = (0..low.len()).find(|&i| low[i].partial_cmp(&high[i]) != Some(std::cmp::Ordering::Less)) {
                    return Err(Error::InvalidActionSpace(format!(
                        "dimension {i}: low {} is not below high {}",
                        low[i], high[i]
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, ActionSpace::Discrete { .. })
    }

    /// Number of stored action components per step (1 for discrete).
    pub fn act_dim(&self) -> usize {
        match self {
            ActionSpace::Discrete { .. } => 1,
            ActionSpace::Continuous { low, .. } => low.len(),
        }
    }

    /// Width of a policy network's output head: logits or action components.
    pub fn output_dim(&self) -> usize {
        match self {
            ActionSpace::Discrete { n } => *n as usize,
            ActionSpace::Continuous { low, .. } => low.len(),
        }
    }

    pub fn contains(&self, action: &Action) -> bool {
        match (self, action) {
            (ActionSpace::Discrete { n }, Action::Discrete(a)) => a < n,
            (ActionSpace::Continuous { low, high }, Action::Continuous(a)) => {
                a.len() == low.len()
                    && a.iter()
                        .zip(low.iter().zip(high))
                        .all(|(x, (lo, hi))| x.is_finite() && lo <= x && x <= hi)
            }
            _ => false,
        }
    }
}

/// An action as passed to an environment.
///
/// Continuous components are f64 in-process; datasets store them as f32.
#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    Discrete(u32),
    Continuous(Vec<f64>),
}

impl Action {
    pub fn as_discrete(&self) -> Option<u32> {
        match self {
            Action::Discrete(a) => Some(*a),
            Action::Continuous(_) => None,
        }
    }
}

/// Action as stored in a step record.
#[derive(Debug, Clone, PartialEq)]
pub enum StoredAction {
    Discrete(u32),
    Continuous(Vec<f32>),
}

impl From<&Action> for StoredAction {
    fn from(a: &Action) -> Self {
        match a {
            Action::Discrete(i) => StoredAction::Discrete(*i),
            Action::Continuous(v) => StoredAction::Continuous(v.iter().map(|&x| x as f32).collect()),
        }
    }
}

/// One recorded transition: the state the action was taken from, the action,
/// its reward and the running episode return.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub state: Vec<f32>,
    pub action: StoredAction,
    pub reward: f64,
    pub accumulated_reward: f64,
    pub episode_start: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub index: usize,
    pub seed: u64,
    pub steps: Vec<Step>,
    pub total_return: f64,
}

impl Episode {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn space_validation() {
        assert!(ActionSpace::discrete(0).is_err());
        assert!(ActionSpace::discrete(4).is_ok());
        assert!(ActionSpace::continuous(vec![0.2], vec![-0.2]).is_err());
        assert!(ActionSpace::continuous(vec![0.0], vec![0.0]).is_err());
        assert!(ActionSpace::continuous(vec![-1.0], vec![1.0, 2.0]).is_err());
        assert!(ActionSpace::continuous(vec![], vec![]).is_err());
        let s = ActionSpace::continuous(vec![-0.2], vec![0.2]).unwrap();
        assert_eq!(s.act_dim(), 1);
        assert!(s.contains(&Action::Continuous(vec![0.2])));
        assert!(!s.contains(&Action::Continuous(vec![0.21])));
        assert!(!s.contains(&Action::Discrete(0)));
    }
}
