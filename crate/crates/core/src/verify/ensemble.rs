use rayon::prelude::*;
use serde::Serialize;

use super::checks::run_check;
use super::{Params, Real, SlackReport, TheoremId};
use crate::error::{Error, Result};
use crate::recovery::BetaQuadrature;

/// Seed of trial `i` in an ensemble started from `seed` (SplitMix64 output).
pub fn trial_seed(seed: u64, i: usize) -> u64 {
    let mut z = seed.wrapping_add((i as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Serialize)]
pub struct EnsembleSummary {
    pub theorem: TheoremId,
    pub trials: usize,
    pub seed: u64,
    pub min_slack: Real,
    /// Mean over trials with finite slack; `+inf` if every trial was vacuous.
    pub mean_slack: Real,
    pub failures: usize,
    /// Per-trial seed of the smallest slack; replays with a single check.
    pub worst_seed: u64,
    pub reports: Vec<SlackReport>,
}

impl EnsembleSummary {
    pub fn pass(&self) -> bool {
        self.failures == 0
    }
}

/// Runs `trials` independent checks in parallel; reports keep trial order.
pub fn run_ensemble(
    theorem: TheoremId,
    params: &Params,
    trials: usize,
    seed: u64,
    quad: &BetaQuadrature,
) -> Result<EnsembleSummary> {
    if trials == 0 {
        return Err(Error::param("trials must be positive"));
    }
    let reports: Vec<SlackReport> = (0..trials)
        .into_par_iter()
        .map(|i| run_check(theorem, params, trial_seed(seed, i), quad))
        .collect::<Result<_>>()?;
    Ok(EnsembleSummary::from_reports(theorem, seed, reports))
}

impl EnsembleSummary {
    /// Aggregates reports given in trial order.
    pub fn from_reports(theorem: TheoremId, seed: u64, reports: Vec<SlackReport>) -> Self {
        let worst_seed = reports
            .iter()
            .min_by(|a, b| a.slack().total_cmp(&b.slack()))
            .map_or(seed, |r| r.seed);
        let min_slack = reports.iter().map(SlackReport::slack).fold(f64::INFINITY, f64::min);
        let finite: Vec<f64> = reports.iter().map(SlackReport::slack).filter(|s| s.is_finite()).collect();
        let mean = if finite.is_empty() {
            f64::INFINITY
        } else {
            finite.iter().sum::<f64>() / finite.len() as f64
        };
        Self {
            theorem,
            trials: reports.len(),
            seed,
            min_slack: Real(min_slack),
            mean_slack: Real(mean),
            failures: reports.iter().filter(|r| !r.pass).count(),
            worst_seed,
            reports,
        }
    }
}
