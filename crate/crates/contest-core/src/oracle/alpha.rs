//! Exhaustive search over mixture weights `α ≥ 0`, `Σα ≤ 1`, on a lattice.

use rayon::prelude::*;

use crate::dist::AbilityDistribution;
use crate::error::{Error, Result};
use crate::numeric::binomial;
use crate::orderstats::Regime;
use crate::rank::{RankModel, ThresholdObjective};
use crate::report::OracleReport;

pub const MAX_LATTICE_POINTS: u128 = 10_000_000;
const MAX_STEPS: usize = 200;

/// Number of points `α ∈ {0, 1/s, …, 1}^{weights}` with `Σα ≤ 1`.
pub fn lattice_size(steps: usize, weights: usize) -> u128 {
    // One extra part absorbs the slack 1 − Σα.
    let b = binomial(steps + weights, weights);
    if b > u128::MAX as f64 {
        u128::MAX
    } else {
        b.round() as u128
    }
}

fn steps_for(resolution: f64) -> Result<usize> {
    if !(resolution.is_finite() && resolution > 0.0 && resolution <= 1.0) {
        return Err(Error::Constraint(format!("resolution must lie in (0, 1], got {resolution}")));
    }
    let steps = (1.0 / resolution).round() as usize;
    if (steps as f64 * resolution - 1.0).abs() > 1e-9 || steps > MAX_STEPS {
        return Err(Error::Constraint(format!("resolution {resolution} must divide 1 into at most {MAX_STEPS} steps")));
    }
    Ok(steps)
}

/// Calls `visit` with every composition of `total` into `parts` non-negative parts.
fn compositions(total: usize, parts: usize, prefix: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize])) {
    if parts == 1 {
        prefix.push(total);
        visit(prefix);
        prefix.pop();
        return;
    }
    for k in 0..=total {
        prefix.push(k);
        compositions(total - k, parts - 1, prefix, visit);
        prefix.pop();
    }
}

pub fn grid_optimal_alpha(
    dist: &AbilityDistribution,
    n: usize,
    regime: Regime,
    objective: &ThresholdObjective,
    resolution: f64,
) -> Result<OracleReport> {
    let model = RankModel::new(dist, n, regime)?;
    grid_optimal_alpha_model(&model, objective, resolution)
}

/// Same search reusing the simple-contest tables of `model`.
pub fn grid_optimal_alpha_model(
    model: &RankModel,
    objective: &ThresholdObjective,
    resolution: f64,
) -> Result<OracleReport> {
    objective.validate()?;
    let steps = steps_for(resolution)?;
    let weights = model.n - 1;
    let points = lattice_size(steps, weights);
    if points > MAX_LATTICE_POINTS {
        return Err(Error::Budget { points, limit: MAX_LATTICE_POINTS });
    }
    let scale = 1.0 / steps as f64;
    // Best per leading coordinate; ties go to the first lattice point visited.
    let per_first: Vec<(f64, Vec<f64>)> = (0..=steps)
        .into_par_iter()
        .map(|first| {
            let mut best = (f64::NEG_INFINITY, Vec::new());
            let mut visit = |rest: &[usize]| {
                // The last entry of `rest` is the slack.
                let alpha: Vec<f64> = std::iter::once(first)
                    .chain(rest[..rest.len() - 1].iter().copied())
                    .map(|k| k as f64 * scale)
                    .collect();
                let value = model.objective(&alpha, objective);
                if value > best.0 {
                    best = (value, alpha);
                }
            };
            compositions(steps - first, weights, &mut Vec::with_capacity(weights), &mut visit);
            best
        })
        .collect();
    let mut best = (f64::NEG_INFINITY, Vec::new());
    for (value, alpha) in per_first {
        if value > best.0 {
            best = (value, alpha);
        }
    }
    let mut r = OracleReport::named("grid_optimal_alpha");
    r.oracle_objective = best.0;
    r.resolution = resolution;
    r.samples = points as u64;
    r.argmax = best.1;
    Ok(r)
}
