//! Monte Carlo success estimates with Wilson score intervals.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::schedule::{can_advance, Target};
use crate::walk::{random_steps, RandomSource, Walk};
use rand::Rng;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Estimate {
    pub trials: u64,
    pub successes: u64,
    /// `None` when `trials == 0`; the interval is then undefined too.
    pub fraction: Option<f64>,
    pub std_error: Option<f64>,
    pub wilson_low: Option<f64>,
    pub wilson_high: Option<f64>,
}

impl Estimate {
    pub fn from_counts(successes: u64, trials: u64) -> Self {
        if trials == 0 {
            return Self {
                trials,
                successes,
                fraction: None,
                std_error: None,
                wilson_low: None,
                wilson_high: None,
            };
        }
        let n = trials as f64;
        let p = successes as f64 / n;
        let z2 = Z95 * Z95;
        let denom = 1.0 + z2 / n;
        let center = (p + z2 / (2.0 * n)) / denom;
        let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
        Self {
            trials,
            successes,
            fraction: Some(p),
            std_error: Some((p * (1.0 - p) / n).sqrt()),
            wilson_low: Some((center - half).max(0.0)),
            wilson_high: Some((center + half).min(1.0)),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.trials == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvasivenessEstimate {
    pub horizon: usize,
    /// Forced first vertex of the random partner walk, if any.
    pub condition: Option<usize>,
    pub estimate: Estimate,
}

/// Fraction of random walks `R` (length `horizon + 1`, uniform or forced
/// start) for which both tokens can make `horizon` moves against `s`.
/// Trial `t` draws from substream `t`, so results do not depend on how the
/// trials are spread over threads.
pub fn estimate_evasiveness(
    s: &Walk,
    horizon: usize,
    trials: u64,
    src: RandomSource,
    condition: Option<usize>,
) -> Result<EvasivenessEstimate> {
    if horizon + 1 > s.len() {
        return Err(Error::Precondition(format!(
            "horizon {horizon} needs at least {} vertices of S, got {}",
            horizon + 1,
            s.len()
        )));
    }
    let g = s.graph();
    if let Some(c) = condition {
        if c >= g.len() {
            return Err(Error::UnknownVertex(format!("#{c}")));
        }
    }
    let successes = (0..trials)
        .into_par_iter()
        .filter(|&t| {
            let mut rng = src.substream(t).rng();
            let start = condition.unwrap_or_else(|| rng.random_range(0..g.len()));
            let r = random_steps(g, start, horizon + 1, &mut rng);
            can_advance(&r, s.steps(), Target::MinAdvance(horizon))
        })
        .count() as u64;
    Ok(EvasivenessEstimate {
        horizon,
        condition,
        estimate: Estimate::from_counts(successes, trials),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::families;
    use std::sync::Arc;

    #[test]
    fn wilson_interval_basics() {
        let e = Estimate::from_counts(0, 10_000);
        assert_eq!(e.fraction, Some(0.0));
        assert_eq!(e.wilson_low, Some(0.0));
        assert!(e.wilson_high.unwrap() < 0.0004);

        let e = Estimate::from_counts(50, 100);
        let (lo, hi) = (e.wilson_low.unwrap(), e.wilson_high.unwrap());
        assert!((lo - 0.4038).abs() < 1e-3 && (hi - 0.5962).abs() < 1e-3);
    }

    #[test]
    fn zero_trials_is_flagged() {
        let g = Arc::new(families::complete(4));
        let s = Walk::new(g, vec![0, 1, 0, 1]).unwrap();
        let est = estimate_evasiveness(&s, 2, 0, RandomSource::new(1), None).unwrap();
        assert!(est.estimate.is_empty());
        assert_eq!(est.estimate.fraction, None);
        assert_eq!(est.estimate.wilson_low, None);
    }

    #[test]
    fn horizon_beyond_walk_is_rejected() {
        let g = Arc::new(families::complete(4));
        let s = Walk::new(g, vec![0, 1, 0]).unwrap();
        assert!(estimate_evasiveness(&s, 3, 10, RandomSource::new(1), None).is_err());
    }

    #[test]
    fn paths_defeat_the_demon() {
        let g = Arc::new(families::path(5));
        let mut steps = Vec::new();
        for k in 0..50 {
            steps.extend(if k % 2 == 0 { [0, 1, 2, 3] } else { [4, 3, 2, 1] });
        }
        let s = Walk::new(g, steps).unwrap();
        let est = estimate_evasiveness(&s, 150, 2_000, RandomSource::new(5), None).unwrap();
        assert!(est.estimate.fraction.unwrap() < 0.01, "{:?}", est);
    }

    #[test]
    fn estimates_are_reproducible() {
        let g = Arc::new(families::complete(4));
        let s = Walk::new(g, [1, 2, 3].repeat(40)).unwrap();
        let a = estimate_evasiveness(&s, 60, 300, RandomSource::new(3), Some(0)).unwrap();
        let b = estimate_evasiveness(&s, 60, 300, RandomSource::new(3), Some(0)).unwrap();
        assert_eq!(a, b);
    }
}
