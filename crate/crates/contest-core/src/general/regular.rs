//! Optimal general contest for the linear threshold objective under a
//! regular ability distribution.
//!
//! Unit-sum solutions come in two shapes. Either the highest ability above a
//! reserve `V_L` wins and output never reaches `B_H`, or that rule is capped at
//! `V_H` where everyone above shares the prize equally and produces exactly
//! `B_H`. Both are solved and the better one is returned.

use super::{
    eta, psi_or_floor, solve_increasing, Characteristic, ExpectedAllocation, GeneralContest, GeneralKind, Segment,
    SegmentForm,
};
use crate::dist::AbilityDistribution;
use crate::error::{Error, Result};
use crate::numeric::{bisect_predicate, linspace, maximize_scan_golden, powi, BRACKET_STEP, ROOT_TOL};
use crate::orderstats::Regime;
use crate::rank::ThresholdObjective;

/// Grid and tolerance of the regularity pre-check.
const REGULARITY_GRID: usize = 2001;
const REGULARITY_TOL: f64 = 1e-9;
/// Scan points for the saturation level before golden refinement.
const SATURATION_SCAN: usize = 200;

pub(crate) fn check_linear(b_l: f64, b_h: f64) -> Result<ThresholdObjective> {
    ThresholdObjective::linear(b_l, b_h)
}

pub fn optimize_linear_regular(
    dist: &AbilityDistribution,
    n: usize,
    regime: Regime,
    b_l: f64,
    b_h: f64,
) -> Result<GeneralContest> {
    dist.validate()?;
    if n == 0 {
        return Err(Error::Players { n, min: 1 });
    }
    let objective = check_linear(b_l, b_h)?;
    let reg = dist.is_regular(REGULARITY_GRID, REGULARITY_TOL);
    if !reg.regular {
        return Err(Error::Irregular { at: reg.violation.unwrap_or(0.0) });
    }
    match regime {
        Regime::UnitRange => unit_range(dist, n, b_l, b_h, &objective),
        Regime::UnitSum => unit_sum(dist, n, b_l, b_h, &objective),
    }
}

fn score(xi: &ExpectedAllocation, dist: &AbilityDistribution, objective: &ThresholdObjective) -> f64 {
    xi.view(dist).objective(objective)
}

fn unit_range(
    dist: &AbilityDistribution,
    n: usize,
    b_l: f64,
    b_h: f64,
    objective: &ThresholdObjective,
) -> Result<GeneralContest> {
    let psi_inv = bisect_predicate(0.0, 1.0, |v| psi_or_floor(dist, 1.0, v) >= b_l, ROOT_TOL * 1e-2);
    let v = b_l.max(b_h.min(psi_inv));
    let xi = ExpectedAllocation::new(
        vec![Segment::new(0.0, v, SegmentForm::Zero), Segment::new(v, 1.0, SegmentForm::Constant { c: 1.0 })],
        n,
        Regime::UnitRange,
    )?
    .with_markers(Some(v), None);
    let value = score(&xi, dist, objective);
    Ok(GeneralContest::new(xi, GeneralKind::LinearRegularRange { v }, value))
}

/// Highest ability wins above `v_l`; nobody below.
pub(crate) fn no_saturation(n: usize, v_l: f64) -> Result<ExpectedAllocation> {
    Ok(ExpectedAllocation::new(
        vec![Segment::new(0.0, v_l, SegmentForm::Zero), Segment::new(v_l, 1.0, SegmentForm::CdfPower)],
        n,
        Regime::UnitSum,
    )?
    .with_markers(Some(v_l), None))
}

/// Highest ability wins on `[v_l, v_h)`, equal split above `v_h`.
pub(crate) fn saturated(dist: &AbilityDistribution, n: usize, v_l: f64, v_h: f64) -> Result<ExpectedAllocation> {
    Ok(ExpectedAllocation::new(
        vec![
            Segment::new(0.0, v_l, SegmentForm::Zero),
            Segment::new(v_l, v_h, SegmentForm::CdfPower),
            Segment::new(v_h, 1.0, SegmentForm::Constant { c: eta(dist.cdf(v_h), n) }),
        ],
        n,
        Regime::UnitSum,
    )?
    .with_markers(Some(v_l), Some(v_h)))
}

/// `B_L / F(v)^{n−1}`, zero when `B_L = 0`.
fn reserve_ratio(dist: &AbilityDistribution, n: usize, b_l: f64, v: f64) -> f64 {
    if b_l == 0.0 {
        return 0.0;
    }
    let p = powi(dist.cdf(v), n - 1);
    if p > 0.0 {
        b_l / p
    } else {
        f64::INFINITY
    }
}

/// `V_low`, `V_mid` and `V_up`. `V_mid` is `None` when even `V_L = 0` leaves
/// `β(1) > B_H`.
pub(crate) fn characteristic(dist: &AbilityDistribution, n: usize, b_l: f64, b_h: f64) -> Characteristic {
    let v_low = solve_increasing(|v| v * powi(dist.cdf(v), n - 1), b_l, 0.0, 1.0);
    let total = dist.cdf_power_integral(n - 1, 0.0, 1.0);
    let v_mid = (total >= 1.0 - b_h).then(|| {
        // ∫_V^1 F^{n−1} decreases in V.
        bisect_predicate(0.0, 1.0, |v| dist.cdf_power_integral(n - 1, v, 1.0) <= 1.0 - b_h, ROOT_TOL * 1e-2)
    });
    let v_up = solve_increasing(|v| v * eta(dist.cdf(v), n), b_h, 0.0, 1.0);
    Characteristic { v_low: Some(v_low), v_mid, v_up: Some(v_up) }
}

fn unit_sum(
    dist: &AbilityDistribution,
    n: usize,
    b_l: f64,
    b_h: f64,
    objective: &ThresholdObjective,
) -> Result<GeneralContest> {
    let ch = characteristic(dist, n, b_l, b_h);
    let (v_low, v_up) = (ch.v_low.unwrap(), ch.v_up.unwrap());
    let mut candidates: Vec<(ExpectedAllocation, GeneralKind)> = Vec::new();

    if let Some(v_mid) = ch.v_mid {
        // B_L/F^{n−1} decreases and ψ increases, so the difference crosses once.
        let bar =
            bisect_predicate(0.0, 1.0, |v| reserve_ratio(dist, n, b_l, v) - psi_or_floor(dist, 1.0, v) <= 0.0, ROOT_TOL);
        let v_l = v_mid.min(v_low.max(bar));
        candidates.push((no_saturation(n, v_l)?, GeneralKind::LinearRegularSumNoSat { v_l }));
    }

    // Along β(V_H) = B_H the reserve V_L(V_H) falls from V_up (at V_H = V_up)
    // towards V_mid (at V_H = 1).
    let reserve_for = |v_h: f64| -> Option<f64> {
        let need = v_h * eta(dist.cdf(v_h), n) - b_h;
        if need < 0.0 || need > dist.cdf_power_integral(n - 1, 0.0, v_h) {
            return None;
        }
        Some(bisect_predicate(0.0, v_h, |v| dist.cdf_power_integral(n - 1, v, v_h) <= need, ROOT_TOL * 1e-2))
    };
    let gap = |v_h: f64| -> Option<f64> {
        let v_l = reserve_for(v_h)?;
        Some(reserve_ratio(dist, n, b_l, v_l) - psi_or_floor(dist, v_h, v_l))
    };
    let mut tops = vec![v_up, 1.0];
    let steps = (((1.0 - v_up) / BRACKET_STEP).ceil() as usize).max(1);
    let grid = linspace(v_up, 1.0, steps + 1);
    for w in grid.windows(2) {
        if let (Some(g0), Some(g1)) = (gap(w[0]), gap(w[1])) {
            if (g0 <= 0.0) != (g1 <= 0.0) {
                let neg0 = g0 <= 0.0;
                tops.push(bisect_predicate(w[0], w[1], |x| gap(x).is_some_and(|g| (g <= 0.0) != neg0), ROOT_TOL));
            }
        }
    }
    // The first-order condition above treats β as continuous at V_H, but β
    // jumps there by V_H (η − F^{n−1}). Maximize along the curve directly.
    let along = |v_h: f64| -> f64 {
        match reserve_for(v_h).and_then(|v_l| saturated(dist, n, v_l.min(v_h), v_h).ok()) {
            Some(xi) => {
                let view = xi.view(dist);
                if view.max_output() > b_h + 1e-8 {
                    f64::NEG_INFINITY
                } else {
                    view.objective(objective)
                }
            }
            None => f64::NEG_INFINITY,
        }
    };
    if v_up < 1.0 {
        tops.push(maximize_scan_golden(along, v_up, 1.0, SATURATION_SCAN, 60).0);
    }
    for v_h in tops {
        if let Some(v_l) = reserve_for(v_h) {
            let v_l = v_l.min(v_h);
            candidates.push((saturated(dist, n, v_l, v_h)?, GeneralKind::LinearRegularSumSat { v_l, v_h }));
        }
    }
    let mut best: Option<GeneralContest> = None;
    for (xi, kind) in candidates {
        let view = xi.view(dist);
        if view.max_output() > b_h + 1e-8 {
            continue;
        }
        let value = view.objective(objective);
        if best.as_ref().is_none_or(|b| value > b.objective + 1e-12) {
            best = Some(GeneralContest::new(xi, kind, value));
        }
    }
    let mut best = best.ok_or_else(|| Error::Infeasible("no regular unit-sum candidate keeps output below B_H".into()))?;
    best.characteristic = ch;
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::general::matthews_feasible;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn unit_range_examples() {
        let u = AbilityDistribution::Uniform;
        let c = optimize_linear_regular(&u, 2, Regime::UnitRange, 0.2, 0.9).unwrap();
        close(c.v_l().unwrap(), 0.6, 1e-9);
        let c = optimize_linear_regular(&u, 2, Regime::UnitRange, 0.8, 0.85).unwrap();
        close(c.v_l().unwrap(), 0.85, 1e-12);
    }

    #[test]
    fn myerson_reserve() {
        let u = AbilityDistribution::Uniform;
        let c = optimize_linear_regular(&u, 2, Regime::UnitSum, 0.0, 1.0).unwrap();
        assert!(matches!(c.kind, GeneralKind::LinearRegularSumNoSat { .. }));
        close(c.v_l().unwrap(), 0.5, 1e-9);
        // Revenue of the second-price auction with reserve 1/2, per player.
        close(c.objective, 5.0 / 24.0, 1e-9);
    }

    #[test]
    fn saturation_case_is_capped_and_feasible() {
        let u = AbilityDistribution::Uniform;
        let c = optimize_linear_regular(&u, 3, Regime::UnitSum, 0.02, 0.1).unwrap();
        let view = c.xi.view(&u);
        assert!(view.max_output() <= 0.1 + 1e-8);
        assert!(matthews_feasible(&c.xi, &u, 1001).feasible);
        if let GeneralKind::LinearRegularSumSat { v_h, .. } = c.kind {
            close(view.output(v_h), 0.1, 1e-8);
        } else {
            panic!("expected the saturated shape, got {:?}", c.kind);
        }
    }

    #[test]
    fn irregular_input_is_rejected() {
        let d = AbilityDistribution::bimodal();
        assert!(matches!(optimize_linear_regular(&d, 2, Regime::UnitSum, 0.0, 0.5), Err(Error::Irregular { .. })));
    }
}
