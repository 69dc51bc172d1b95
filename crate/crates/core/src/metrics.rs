//! Episodic reward aggregation and expert/random normalized performance.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Mean and population standard deviation of episode returns.
pub fn average_episodic_reward(returns: &[f64]) -> Result<(f64, f64)> {
    if returns.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = returns.len() as f64;
    let mean = returns.iter().sum::<f64>() / n;
    let var = returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
    // Rounding can push the mean a hair outside [min, max] for constant inputs.
    let (lo, hi) = returns
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &r| (lo.min(r), hi.max(r)));
    Ok((mean.clamp(lo, hi), var.sqrt()))
}

/// `(agent - random) / (expert - random)`: 0 at the random baseline, 1 at the expert.
pub fn performance(agent_aer: f64, random_aer: f64, expert_aer: f64) -> Result<f64> {
    let span = expert_aer - random_aer;
    if span == 0.0 {
        return Err(Error::DegenerateBaseline(expert_aer));
    }
    Ok((agent_aer - random_aer) / span)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub method: String,
    pub env: String,
    pub aer_mean: f64,
    pub aer_std: f64,
    pub performance: f64,
    pub n_eval: usize,
    pub config_fp: String,
    pub seed_fp: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub rows: Vec<MetricsRow>,
}

impl MetricsReport {
    pub fn push(&mut self, row: MetricsRow) -> Result<()> {
        if !row.performance.is_finite() || row.aer_std.is_nan() || row.aer_std < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "metrics row for {}/{} has performance {} and std {}",
                row.method, row.env, row.performance, row.aer_std
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn row(&self, method: &str) -> Option<&MetricsRow> {
        self.rows.iter().find(|r| r.method == method)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn aer_examples() {
        assert_eq!(average_episodic_reward(&[5.0, 5.0, 5.0]).unwrap(), (5.0, 0.0));
        assert_eq!(average_episodic_reward(&[0.0, 10.0]).unwrap(), (5.0, 5.0));
        let (m, s) = average_episodic_reward(&[-8.0, -6.0, -7.0, -7.0]).unwrap();
        assert_eq!(m, -7.0);
        // deviations 1,1,0,0 -> var 0.5
        assert!((s - 0.5f64.sqrt()).abs() < 1e-12);
        assert!(matches!(average_episodic_reward(&[]), Err(Error::EmptyInput)));
    }

    #[test]
    fn performance_examples() {
        assert_eq!(performance(90.0, 10.0, 90.0).unwrap(), 1.0);
        assert_eq!(performance(10.0, 10.0, 90.0).unwrap(), 0.0);
        assert_eq!(performance(50.0, 10.0, 90.0).unwrap(), 0.5);
        assert!(matches!(performance(1.0, 3.0, 3.0), Err(Error::DegenerateBaseline(_))));
    }

    proptest! {
        #[test]
        fn performance_affine_invariant(
            agent in -100.0f64..100.0,
            random in -100.0f64..100.0,
            gap in 1.0f64..100.0,
            scale in 0.5f64..2.0,
            shift in -10.0f64..10.0,
        ) {
            let expert = random + gap;
            let base = performance(agent, random, expert).unwrap();
            let moved = performance(agent * scale + shift, random * scale + shift, expert * scale + shift).unwrap();
            prop_assert!((base - moved).abs() <= 1e-12 * base.abs().max(1.0), "{base} vs {moved}");
        }

        #[test]
        fn mean_within_bounds(returns in prop::collection::vec(-1e6f64..1e6, 1..50)) {
            let (m, s) = average_episodic_reward(&returns).unwrap();
            let lo = returns.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = returns.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(lo <= m && m <= hi);
            prop_assert!(s >= 0.0);
        }
    }
}
