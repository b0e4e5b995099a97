//! Best-response regret of an equilibrium candidate.
//!
//! Opponents play `β(v) + shift`. A deviator choosing output `b′` wins the
//! allocation of the ability whose output it matches, so one table of
//! allocations over the deviation grid serves every sampled ability.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ContestRef, Outputs};
use crate::dist::AbilityDistribution;
use crate::error::{Error, Result};
use crate::numeric::{bisect_predicate, linspace, ROOT_TOL};
use crate::orderstats::rank_prob_at;
use crate::report::OracleReport;

pub const MIN_SAMPLES: u64 = 1000;
const STEP_BACK: f64 = 1e-11;

pub fn best_response_regret(
    dist: &AbilityDistribution,
    contest: ContestRef<'_>,
    samples: u64,
    deviation_grid: usize,
    seed: u64,
) -> Result<OracleReport> {
    best_response_regret_shifted(dist, contest, samples, deviation_grid, seed, 0.0)
}

/// Regret when every player's output is raised by `shift`.
pub fn best_response_regret_shifted(
    dist: &AbilityDistribution,
    contest: ContestRef<'_>,
    samples: u64,
    deviation_grid: usize,
    seed: u64,
    shift: f64,
) -> Result<OracleReport> {
    dist.validate()?;
    if samples < MIN_SAMPLES {
        return Err(Error::Constraint(format!("regret needs at least {MIN_SAMPLES} samples, got {samples}")));
    }
    if deviation_grid < 2 {
        return Err(Error::Constraint("deviation grid needs at least 2 points".into()));
    }
    if !(shift.is_finite() && shift >= 0.0) {
        return Err(Error::Constraint(format!("shift must be >= 0, got {shift}")));
    }
    let outputs = Outputs::new(dist, contest);
    let allocation = |v: f64| -> f64 {
        match contest {
            ContestRef::Rank { contest, .. } => {
                let y = dist.cdf(v);
                contest.prizes.iter().enumerate().map(|(j, w)| w * rank_prob_at(contest.n, j + 1, y)).sum()
            }
            ContestRef::General(g) => g.xi.value(dist, v),
        }
    };
    // Allocation won by output `b` against opponents playing `β + shift`.
    let won = |b: f64| -> f64 {
        let target = b - shift;
        if target < 0.0 {
            return 0.0;
        }
        match contest {
            ContestRef::Rank { .. } => {
                if outputs.output(1.0) <= target {
                    allocation(1.0)
                } else {
                    allocation(bisect_predicate(0.0, 1.0, |v| outputs.output(v) >= target, ROOT_TOL))
                }
            }
            ContestRef::General(g) => {
                // Everyone at or below `target` is beaten or tied; a tie with
                // a pool shares its expected allocation.
                if outputs.output(1.0) <= target {
                    g.xi.left_value(dist, 1.0).max(g.xi.value(dist, 1.0))
                } else {
                    // The bisection lands just above the first ability that
                    // outbids `target`; step back below it.
                    let v = bisect_predicate(0.0, 1.0, |v| outputs.output(v) > target, ROOT_TOL * 1e-2);
                    g.xi.value(dist, (v - STEP_BACK).max(0.0))
                }
            }
        }
    };
    let top = outputs.output(1.0) + shift;
    let grid = linspace(0.0, top, deviation_grid);
    let gains: Vec<(f64, f64)> = grid.iter().map(|&b| (won(b), b)).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut regret = 0.0f64;
    for _ in 0..samples {
        let v = dist.quantile(rng.random::<f64>());
        let on_path = v * allocation(v) - outputs.output(v) - shift;
        let best = gains.iter().map(|&(x, b)| v * x - b).fold(f64::NEG_INFINITY, f64::max);
        regret = regret.max(best - on_path);
    }
    let mut r = OracleReport::named("best_response_regret");
    r.regret = regret.max(0.0);
    r.samples = samples;
    r.seed = seed;
    r.resolution = top / (deviation_grid - 1) as f64;
    Ok(r)
}
