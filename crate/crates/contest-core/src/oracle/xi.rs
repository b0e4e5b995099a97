//! Brute-force optimum over step allocations on equal-probability cells.
//!
//! With `ξ` constant on each cell `[b_i, b_{i+1})`, output is constant there too:
//! `β_i = b_i ξ_i − Σ_{i'<i} ξ_{i'} (b_{i'+1} − b_{i'})`. The discretized problem is
//! therefore exact for step allocations. It becomes a linear program once the
//! first allocated cell `k` is fixed, because output is non-decreasing and every
//! cell from `k` up then clears `B_L`. Each `k` is solved with the simplex
//! method and the best is kept.

use microlp::{ComparisonOp, OptimizationDirection, Problem, Variable};
use rayon::prelude::*;

use crate::dist::AbilityDistribution;
use crate::error::{Error, Result};
use crate::general::matthews_bound;
use crate::numeric::Neumaier;
use crate::rank::ThresholdObjective;
use crate::report::OracleReport;

pub const MAX_CELLS: usize = 512;

/// Cell boundaries `F⁻¹(i/m)`, `i = 0..=m`.
pub fn cell_boundaries(dist: &AbilityDistribution, cells: usize) -> Vec<f64> {
    (0..=cells).map(|i| if i == cells { 1.0 } else { dist.quantile(i as f64 / cells as f64) }).collect()
}

/// Output on each cell of a step allocation.
pub fn step_outputs(bounds: &[f64], xi: &[f64]) -> Vec<f64> {
    let mut below = Neumaier::default();
    xi.iter()
        .enumerate()
        .map(|(i, &x)| {
            let beta = bounds[i] * x - below.value();
            below.add(x * (bounds[i + 1] - bounds[i]));
            beta
        })
        .collect()
}

/// Optimal step allocation, found exactly for the discretized problem.
#[derive(Debug, Clone)]
pub struct XiOptimum {
    pub objective: f64,
    pub xi: Vec<f64>,
    pub bounds: Vec<f64>,
    /// Lower edge of the first cell with a positive allocation.
    pub reserve: f64,
}

struct Lp {
    problem: Problem,
    xi: Vec<Variable>,
    beta: Vec<(Variable, f64, Variable)>,
}

/// Variables `ξ_i` for cells `k..m` with monotonicity, bounds and the
/// Matthews inequality at every cell edge. `beta[i]` carries the pieces of
/// `β_i = b_i ξ_i − A_i`.
fn base_lp(bounds: &[f64], n: usize, k: usize, direction: OptimizationDirection) -> Lp {
    let m = bounds.len() - 1;
    let mut p = Problem::new(direction);
    let xi: Vec<Variable> = (k..m).map(|_| p.add_var(0.0, (0.0, 1.0))).collect();
    for w in xi.windows(2) {
        p.add_constraint([(w[0], 1.0), (w[1], -1.0)], ComparisonOp::Le, 0.0);
    }
    // A_i = Σ_{k≤i'<i} ξ_{i'} Δb_{i'}, kept as a chain so rows stay sparse.
    let mut beta = Vec::with_capacity(m - k);
    let mut prev: Option<(Variable, usize)> = None;
    for (off, i) in (k..m).enumerate() {
        let a = p.add_var(0.0, (0.0, f64::INFINITY));
        match prev {
            None => p.add_constraint([(a, 1.0)], ComparisonOp::Eq, 0.0),
            Some((pa, pi)) => {
                p.add_constraint([(a, 1.0), (pa, -1.0), (xi[off - 1], -(bounds[pi + 1] - bounds[pi]))], ComparisonOp::Eq, 0.0)
            }
        }
        beta.push((xi[off], bounds[i], a));
        prev = Some((a, i));
    }
    // T_j = Σ_{i≥j} ξ_i / m ≤ (1 − (j/m)ⁿ)/n.
    let mut next: Option<Variable> = None;
    for (off, j) in (k..m).enumerate().rev() {
        let t = p.add_var(0.0, (0.0, f64::INFINITY));
        let mut row = vec![(t, 1.0), (xi[off], -1.0 / m as f64)];
        if let Some(nt) = next {
            row.push((nt, -1.0));
        }
        p.add_constraint(row, ComparisonOp::Eq, 0.0);
        p.add_constraint([(t, 1.0)], ComparisonOp::Le, matthews_bound(j as f64 / m as f64, n));
        next = Some(t);
    }
    Lp { problem: p, xi, beta }
}

fn solve(lp: &Lp, k: usize, m: usize) -> Option<(f64, Vec<f64>)> {
    let sol = lp.problem.solve().ok()?.into_solution().ok()?;
    let mut xi = vec![0.0; m];
    for (off, v) in lp.xi.iter().enumerate() {
        xi[k + off] = sol.var_value(*v).clamp(0.0, 1.0);
    }
    Some((sol.objective(), xi))
}

fn linear_lp(bounds: &[f64], n: usize, k: usize, b_l: f64, b_h: f64) -> Option<(f64, Vec<f64>)> {
    let m = bounds.len() - 1;
    let mut lp = base_lp(bounds, n, k, OptimizationDirection::Maximize);
    for &(x, b, a) in &lp.beta.clone() {
        let t = lp.problem.add_var(1.0 / m as f64, (f64::NEG_INFINITY, b_h));
        lp.problem.add_constraint([(t, 1.0), (x, -b), (a, 1.0)], ComparisonOp::Le, 0.0);
        lp.problem.add_constraint([(x, b), (a, -1.0)], ComparisonOp::Ge, b_l);
    }
    let (value, xi) = solve(&lp, k, m)?;
    Some((value + b_l * k as f64 / m as f64, xi))
}

/// Largest achievable `β_k` when cell `k` is the first allocated one.
fn max_output_lp(bounds: &[f64], n: usize, k: usize) -> Option<(f64, Vec<f64>)> {
    let m = bounds.len() - 1;
    let mut lp = base_lp(bounds, n, k, OptimizationDirection::Maximize);
    let (x, b, a) = lp.beta[0];
    let t = lp.problem.add_var(1.0, (f64::NEG_INFINITY, f64::INFINITY));
    lp.problem.add_constraint([(t, 1.0), (x, -b), (a, 1.0)], ComparisonOp::Eq, 0.0);
    solve(&lp, k, m)
}

fn total_lp(bounds: &[f64], n: usize) -> Option<(f64, Vec<f64>)> {
    let m = bounds.len() - 1;
    let mut lp = base_lp(bounds, n, 0, OptimizationDirection::Maximize);
    for &(x, b, a) in &lp.beta.clone() {
        let t = lp.problem.add_var(1.0 / m as f64, (f64::NEG_INFINITY, f64::INFINITY));
        lp.problem.add_constraint([(t, 1.0), (x, -b), (a, 1.0)], ComparisonOp::Eq, 0.0);
    }
    solve(&lp, 0, m)
}

fn first_positive(bounds: &[f64], xi: &[f64]) -> f64 {
    xi.iter().position(|&x| x > 1e-9).map_or(1.0, |i| bounds[i])
}

/// Exact optimum of the cell-discretized unit-sum problem.
pub fn optimize_step_xi(
    dist: &AbilityDistribution,
    n: usize,
    objective: &ThresholdObjective,
    cells: usize,
) -> Result<XiOptimum> {
    dist.validate()?;
    objective.validate()?;
    if n == 0 {
        return Err(Error::Players { n, min: 1 });
    }
    if cells > MAX_CELLS {
        return Err(Error::Budget { points: cells as u128, limit: MAX_CELLS as u128 });
    }
    if cells < 2 {
        return Err(Error::Constraint(format!("grid_optimal_xi needs at least 2 cells, got {cells}")));
    }
    let bounds = cell_boundaries(dist, cells);
    let fail = || Error::Solver("cell linear program failed".into());
    let (objective_value, xi) = match objective {
        ThresholdObjective::Linear { b_l, b_h } => {
            let results: Vec<Option<(f64, Vec<f64>)>> =
                (0..cells).into_par_iter().map(|k| linear_lp(&bounds, n, k, *b_l, *b_h)).collect();
            // Allocating nothing yields B_L for everyone.
            let mut best = (*b_l, vec![0.0; cells]);
            for (value, xi) in results.into_iter().flatten() {
                if value > best.0 + 1e-12 {
                    best = (value, xi);
                }
            }
            best
        }
        ThresholdObjective::Binary { b } => {
            // Feasibility of β_k ≥ B only improves as k grows.
            let feasible = |k: usize| max_output_lp(&bounds, n, k).filter(|(v, _)| *v >= *b - 1e-12);
            let (mut lo, mut hi) = (0usize, cells);
            let mut found = None;
            while lo < hi {
                let mid = (lo + hi) / 2;
                match feasible(mid) {
                    Some(r) => {
                        found = Some((mid, r.1));
                        hi = mid;
                    }
                    None => lo = mid + 1,
                }
            }
            match found {
                Some((k, xi)) => ((cells - k) as f64 / cells as f64, xi),
                None => (0.0, vec![0.0; cells]),
            }
        }
        ThresholdObjective::TotalOutput => total_lp(&bounds, n).ok_or_else(fail)?,
        ThresholdObjective::Transformed { .. } => {
            return Err(Error::Constraint("grid_optimal_xi supports binary, linear and total-output objectives".into()))
        }
    };
    let reserve = first_positive(&bounds, &xi);
    Ok(XiOptimum { objective: objective_value, xi, bounds, reserve })
}

/// Oracle report for the step-allocation optimum (unit-sum).
pub fn grid_optimal_xi(
    dist: &AbilityDistribution,
    n: usize,
    objective: &ThresholdObjective,
    cells: usize,
) -> Result<OracleReport> {
    let opt = optimize_step_xi(dist, n, objective, cells)?;
    let mut r = OracleReport::named("grid_optimal_xi");
    r.oracle_objective = opt.objective;
    r.resolution = 1.0 / cells as f64;
    r.argmax = opt.xi;
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::general::eta;

    #[test]
    fn step_outputs_match_formula() {
        let bounds = [0.0, 0.25, 0.5, 0.75, 1.0];
        let beta = step_outputs(&bounds, &[0.0, 0.2, 0.2, 0.6]);
        let expect = [0.0, 0.05, 0.05, 0.35];
        for (a, b) in beta.iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn binary_reserve_within_one_cell() {
        let u = AbilityDistribution::Uniform;
        let opt = optimize_step_xi(&u, 2, &ThresholdObjective::binary(0.25).unwrap(), 128).unwrap();
        let v = (3f64.sqrt() - 1.0) / 2.0;
        assert!((opt.reserve - v).abs() <= 1.0 / 128.0 + 1e-12, "{}", opt.reserve);
        // Equal split above the reserve cell.
        let k = opt.xi.iter().position(|&x| x > 0.0).unwrap();
        assert!((opt.xi[k] - eta(opt.bounds[k], 2)).abs() < 1e-6);
    }

    #[test]
    fn myerson_reserve_within_one_cell() {
        let u = AbilityDistribution::Uniform;
        let opt = optimize_step_xi(&u, 2, &ThresholdObjective::linear(0.0, 1.0).unwrap(), 128).unwrap();
        assert!((opt.reserve - 0.5).abs() <= 1.0 / 128.0 + 1e-12, "{}", opt.reserve);
        assert!((opt.objective - 5.0 / 24.0).abs() < 5e-3);
    }

    #[test]
    fn single_player_allocates_everything_above_reserve() {
        // n = 1: a posted price; revenue v(1 − v) peaks at 1/2.
        let u = AbilityDistribution::Uniform;
        let opt = optimize_step_xi(&u, 1, &ThresholdObjective::linear(0.0, 1.0).unwrap(), 64).unwrap();
        assert!((opt.objective - 0.25).abs() < 1e-9);
        assert!((opt.reserve - 0.5).abs() < 1e-12);
    }

    #[test]
    fn budget() {
        let u = AbilityDistribution::Uniform;
        assert!(matches!(
            optimize_step_xi(&u, 2, &ThresholdObjective::TotalOutput, 1024),
            Err(Error::Budget { .. })
        ));
    }
}
