use super::Policy;
use crate::{derive_seed, Action, ActionSpace, Result, RngStream};

/// Stream index used to decorrelate the policy's draws from the environment reset.
const POLICY_STREAM: u64 = 0x5A17;

/// Uniform action: an index for discrete spaces, per-dimension uniform otherwise.
pub fn random_policy_act(space: &ActionSpace, rng: &mut RngStream) -> Action {
    match space {
        ActionSpace::Discrete { n } => Action::Discrete(rng.below(*n as u64) as u32),
        ActionSpace::Continuous { low, high } => Action::Continuous(
            low.iter()
                .zip(high)
                .map(|(&lo, &hi)| rng.uniform(lo, hi))
                .collect(),
        ),
    }
}

#[derive(Debug, Clone)]
pub struct RandomPolicy {
    space: ActionSpace,
    rng: RngStream,
}

impl RandomPolicy {
    pub fn new(space: ActionSpace) -> Self {
        Self {
            space,
            rng: RngStream::new(0),
        }
    }
}

impl Policy for RandomPolicy {
    fn reset(&mut self, seed: u64) {
        self.rng = RngStream::new(derive_seed(seed, POLICY_STREAM));
    }

    fn act(&mut self, _state: &[f32]) -> Result<Action> {
        Ok(random_policy_act(&self.space, &mut self.rng))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_given_rng_state() {
        let space = ActionSpace::Discrete { n: 4 };
        let mut a = RngStream::new(77);
        let mut b = a.clone();
        for _ in 0..100 {
            assert_eq!(random_policy_act(&space, &mut a), random_policy_act(&space, &mut b));
        }
    }

    #[test]
    fn discrete_frequencies() {
        let space = ActionSpace::Discrete { n: 4 };
        let mut rng = RngStream::new(5);
        let mut counts = [0usize; 4];
        let n = 100_000;
        for _ in 0..n {
            counts[random_policy_act(&space, &mut rng).as_discrete().unwrap() as usize] += 1;
        }
        for c in counts {
            let f = c as f64 / n as f64;
            assert!((f - 0.25).abs() <= 0.05 * 0.25, "{f}");
        }
    }

    #[test]
    fn continuous_within_bounds() {
        let space = ActionSpace::Continuous {
            low: vec![-0.2, 1.0],
            high: vec![0.2, 3.0],
        };
        let mut rng = RngStream::new(8);
        for _ in 0..10_000 {
            let a = random_policy_act(&space, &mut rng);
            assert!(space.contains(&a));
        }
    }
}
