//! Optimal general contest for the binary threshold objective: split the
//! prize equally among everyone whose output reaches `B`.

use super::{eta, solve_increasing, ExpectedAllocation, GeneralContest, GeneralKind, Segment, SegmentForm};
use crate::dist::AbilityDistribution;
use crate::error::{Error, Result};
use crate::orderstats::Regime;

pub fn optimize_binary_general(dist: &AbilityDistribution, n: usize, regime: Regime, b: f64) -> Result<GeneralContest> {
    dist.validate()?;
    if n == 0 {
        return Err(Error::Players { n, min: 1 });
    }
    if !(b.is_finite() && b > 0.0) {
        return Err(Error::Constraint(format!("binary threshold needs B > 0, got {b}")));
    }
    let (v, level) = match regime {
        Regime::UnitRange => {
            if b > 1.0 {
                return Err(Error::Infeasible(format!("B = {b} exceeds the largest unit-range output 1")));
            }
            (b, 1.0)
        }
        Regime::UnitSum => {
            if b >= 1.0 {
                return Err(Error::Infeasible(format!("B = {b} is not below the unit-sum supremum 1")));
            }
            let v = solve_increasing(|v| v * eta(dist.cdf(v), n), b, 0.0, 1.0);
            (v, eta(dist.cdf(v), n))
        }
    };
    let xi = ExpectedAllocation::new(
        vec![Segment::new(0.0, v, SegmentForm::Zero), Segment::new(v, 1.0, SegmentForm::Constant { c: level })],
        n,
        regime,
    )?
    .with_markers(Some(v), None);
    // Exactly the players at or above the reserve produce B.
    let objective = if v < 1.0 { 1.0 - dist.cdf(v) } else { 0.0 };
    Ok(GeneralContest::new(xi, GeneralKind::BinaryOptimal { b }, objective))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::general::{general_objective, matthews_feasible, output_from_allocation};
    use crate::rank::ThresholdObjective;

    #[test]
    fn unit_range_reserve_is_threshold() {
        for d in [AbilityDistribution::Uniform, AbilityDistribution::bimodal()] {
            let c = optimize_binary_general(&d, 3, Regime::UnitRange, 0.4).unwrap();
            assert_eq!(c.v_l(), Some(0.4));
            for v in [0.4, 0.7, 1.0] {
                assert!((output_from_allocation(&c.xi, &d, v) - 0.4).abs() <= 1e-15);
            }
            assert_eq!(output_from_allocation(&c.xi, &d, 0.39), 0.0);
        }
    }

    #[test]
    fn unit_sum_uniform_pair() {
        let u = AbilityDistribution::Uniform;
        let c = optimize_binary_general(&u, 2, Regime::UnitSum, 0.25).unwrap();
        let v = c.v_l().unwrap();
        assert!((v - (3f64.sqrt() - 1.0) / 2.0).abs() < 1e-12);
        assert!((0.25 - v * eta(v, 2)).abs() <= 1e-12);
        assert!(matthews_feasible(&c.xi, &u, 1001).feasible);
        let obj = general_objective(&c.xi, &u, &ThresholdObjective::binary(0.25).unwrap());
        assert!((obj - c.objective).abs() < 1e-9);
    }

    #[test]
    fn unreachable_thresholds() {
        let u = AbilityDistribution::Uniform;
        assert!(matches!(optimize_binary_general(&u, 2, Regime::UnitSum, 1.0), Err(Error::Infeasible(_))));
        assert!(matches!(optimize_binary_general(&u, 2, Regime::UnitRange, 1.2), Err(Error::Infeasible(_))));
        assert!(optimize_binary_general(&u, 2, Regime::UnitRange, 1.0).is_ok());
    }
}
