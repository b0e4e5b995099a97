//! Ex-post allocation rules that implement an expected allocation.
//!
//! Unit-sum rules work by priority: the segment holding the highest ability
//! decides. A `CdfPower` segment gives the prize to the highest ability. A
//! pooled segment splits a fraction `c / eq` of the prize equally among its
//! members, where `eq` is the equal-split share of the pool.
//!
//! A pool just below a constant top segment may need more than `eq`, which
//! happens when the top share is below `η(F(V_H))`. The rule then mixes. With
//! probability `θ`, pool and top are merged and split equally. Otherwise
//! strict priority applies, with the pool's factor adjusted to match.

use super::{ExpectedAllocation, GeneralContest, SegmentForm};
use crate::dist::AbilityDistribution;
use crate::error::{Error, Result};
use crate::orderstats::{equal_split_at, Regime};

/// Pool factors may exceed one by this much before merging is required.
const FACTOR_TOL: f64 = 1e-9;
/// Outputs this close are the same output; plateaus are computed with rounding.
const OUTPUT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Class {
    Nothing,
    Highest,
    /// Fraction of the prize split among the segment's members.
    Pool(f64),
}

#[derive(Debug, Clone)]
pub struct AllocationRule {
    pub xi: ExpectedAllocation,
    dist: AbilityDistribution,
    classes: Vec<Class>,
    /// Pool segment below the top that is merged with it with probability
    /// `θ`.
    merge: Option<(usize, f64)>,
}

impl AllocationRule {
    pub fn new(xi: &ExpectedAllocation, dist: &AbilityDistribution) -> Result<Self> {
        let mut rule = AllocationRule { xi: xi.clone(), dist: dist.clone(), classes: Vec::new(), merge: None };
        if xi.regime == Regime::UnitRange {
            return Ok(rule);
        }
        let n = xi.n;
        let last = xi.pieces.len() - 1;
        for (k, s) in xi.pieces.iter().enumerate() {
            let class = match s.form {
                SegmentForm::Zero => Class::Nothing,
                SegmentForm::CdfPower => Class::Highest,
                SegmentForm::Constant { c } | SegmentForm::IronedFlat { c, .. } => {
                    let (fa, fb) = (dist.cdf(s.v_lo), dist.cdf(s.v_hi));
                    if c == 0.0 || fb <= fa {
                        Class::Nothing
                    } else {
                        let eq = equal_split_at(n, fa, fb);
                        let factor = c / eq;
                        if factor <= 1.0 + FACTOR_TOL {
                            Class::Pool(factor.min(1.0))
                        } else if k + 1 == last && xi.pieces[last].level().is_some() {
                            let top = xi.pieces[last].level().unwrap();
                            let (eta_pool, eta_top) = (equal_split_at(n, fa, 1.0), equal_split_at(n, fb, 1.0));
                            let theta = (eta_top - top) / (eta_top - eta_pool);
                            let pool = (c - theta * eta_pool) / ((1.0 - theta) * eq);
                            if !(-FACTOR_TOL..=1.0 + FACTOR_TOL).contains(&theta)
                                || !(-FACTOR_TOL..=1.0 + FACTOR_TOL).contains(&pool)
                            {
                                return Err(Error::Constraint(format!(
                                    "pool on [{}, {}] with share {c} under a top share {top} is not implementable \
                                     by merging (theta {theta}, factor {pool})",
                                    s.v_lo, s.v_hi
                                )));
                            }
                            rule.merge = Some((k, theta.clamp(0.0, 1.0)));
                            Class::Pool(pool.clamp(0.0, 1.0))
                        } else {
                            return Err(Error::Constraint(format!(
                                "pool on [{}, {}] needs share {c} above its equal split {eq}; \
                                 the priority rule cannot implement it",
                                s.v_lo, s.v_hi
                            )));
                        }
                    }
                }
            };
            rule.classes.push(class);
        }
        if rule.merge.is_some() {
            rule.classes[last] = Class::Pool(1.0);
        }
        Ok(rule)
    }

    fn segment_index(&self, v: f64) -> usize {
        let v = v.clamp(0.0, 1.0);
        self.xi.pieces.partition_point(|s| s.v_hi <= v).min(self.xi.pieces.len() - 1)
    }

    /// Prize shares for one ability profile.
    pub fn shares(&self, profile: &[f64]) -> Result<Vec<f64>> {
        if profile.len() != self.xi.n {
            return Err(Error::Constraint(format!("profile has {} entries, contest has n = {}", profile.len(), self.xi.n)));
        }
        for &v in profile {
            crate::error::check_unit("ability", v)?;
        }
        let mut out = vec![0.0; profile.len()];
        if self.xi.regime == Regime::UnitRange {
            for (x, &v) in out.iter_mut().zip(profile) {
                *x = self.xi.value(&self.dist, v);
            }
            return Ok(out);
        }
        let seg: Vec<usize> = profile.iter().map(|&v| self.segment_index(v)).collect();
        let top = *seg.iter().max().unwrap();
        let top_v = profile.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut split = |members: Vec<usize>, amount: f64| {
            let each = amount / members.len() as f64;
            for i in members {
                out[i] += each;
            }
        };
        let mut priority = 1.0;
        if let Some((pool, theta)) = self.merge {
            if top == pool || top == self.classes.len() - 1 {
                split((0..profile.len()).filter(|&i| seg[i] >= pool).collect(), theta);
                priority = 1.0 - theta;
            }
        }
        match self.classes[top] {
            Class::Nothing => {}
            Class::Highest => split((0..profile.len()).filter(|&i| profile[i] == top_v).collect(), priority),
            Class::Pool(f) => split((0..profile.len()).filter(|&i| seg[i] == top).collect(), priority * f),
        }
        Ok(out)
    }
}

/// Prize shares for an ability profile under `contest`.
pub fn allocation_rule(contest: &GeneralContest, dist: &AbilityDistribution, profile: &[f64]) -> Result<Vec<f64>> {
    AllocationRule::new(&contest.xi, dist)?.shares(profile)
}

/// Clipped score `g(b)` of an output: zero below the reserve output, the
/// output itself up to the output just below saturation, that value on the
/// dead zone, and `B_H` from `B_H` up.
pub fn output_space_rule(contest: &GeneralContest, dist: &AbilityDistribution, b: f64) -> f64 {
    let view = contest.xi.view(dist);
    let reserve = view.output(contest.xi.v_l.unwrap_or(0.0));
    let (below, cap) = match contest.xi.v_h {
        Some(v_h) => (view.left_output(v_h), view.output(v_h)),
        None => {
            let m = view.max_output();
            (m, m)
        }
    };
    if b < reserve - OUTPUT_TOL {
        0.0
    } else if b <= below + OUTPUT_TOL {
        b.min(below)
    } else if b < cap - OUTPUT_TOL {
        below
    } else {
        cap
    }
}

/// Shares when the designer only observes outputs: each output is clipped by
/// [`output_space_rule`] and mapped to the least ability producing it.
pub fn allocation_from_outputs(
    contest: &GeneralContest,
    dist: &AbilityDistribution,
    outputs: &[f64],
) -> Result<Vec<f64>> {
    let view = contest.xi.view(dist);
    let reserve = view.output(contest.xi.v_l.unwrap_or(0.0));
    let abilities: Vec<f64> = outputs
        .iter()
        .map(|&b| {
            if b < reserve - OUTPUT_TOL {
                0.0
            } else {
                view.inverse(output_space_rule(contest, dist, b)).unwrap_or(1.0)
            }
        })
        .collect();
    AllocationRule::new(&contest.xi, dist)?.shares(&abilities)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::general::{eta, GeneralKind, Segment};
    use crate::numeric::powi;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn contest(pieces: Vec<Segment>, n: usize, v_l: Option<f64>, v_h: Option<f64>) -> GeneralContest {
        let xi = ExpectedAllocation::new(pieces, n, Regime::UnitSum).unwrap().with_markers(v_l, v_h);
        let kind = GeneralKind::LinearIrregular { v_l: v_l.unwrap_or(0.0), v_h: v_h.unwrap_or(1.0) };
        GeneralContest::new(xi, kind, 0.0)
    }

    #[test]
    fn examples() {
        let u = AbilityDistribution::Uniform;
        let c = contest(
            vec![Segment::new(0.0, 0.5, SegmentForm::Zero), Segment::new(0.5, 1.0, SegmentForm::CdfPower)],
            2,
            Some(0.5),
            None,
        );
        assert_eq!(allocation_rule(&c, &u, &[0.7, 0.3]).unwrap(), vec![1.0, 0.0]);
        assert_eq!(allocation_rule(&c, &u, &[0.2, 0.3]).unwrap(), vec![0.0, 0.0]);
        let c = contest(
            vec![
                Segment::new(0.0, 0.2, SegmentForm::Zero),
                Segment::new(0.2, 0.8, SegmentForm::CdfPower),
                Segment::new(0.8, 1.0, SegmentForm::Constant { c: eta(0.8, 2) }),
            ],
            2,
            Some(0.2),
            Some(0.8),
        );
        assert_eq!(allocation_rule(&c, &u, &[0.9, 0.85]).unwrap(), vec![0.5, 0.5]);
        assert!(allocation_rule(&c, &u, &[0.9]).is_err());
    }

    /// Top share below η(F(V_H)) with a pool beneath that needs merging.
    fn merge_contest() -> GeneralContest {
        let (l, vh, n) = (0.6, 0.85, 3);
        let xi_h = 0.8;
        let m = |y: f64| (1.0 - powi(y, n)) / n as f64;
        let c_h = (m(l) - xi_h * (1.0 - vh)) / (vh - l);
        contest(
            vec![
                Segment::new(0.0, 0.3, SegmentForm::Zero),
                Segment::new(0.3, l, SegmentForm::CdfPower),
                Segment::new(l, vh, SegmentForm::Constant { c: c_h }),
                Segment::new(vh, 1.0, SegmentForm::Constant { c: xi_h }),
            ],
            n,
            Some(0.3),
            Some(vh),
        )
    }

    #[test]
    fn merge_is_used_and_budget_balanced() {
        let u = AbilityDistribution::Uniform;
        let c = merge_contest();
        let rule = AllocationRule::new(&c.xi, &u).unwrap();
        assert!(rule.merge.is_some());
        let x = rule.shares(&[0.9, 0.7, 0.1]).unwrap();
        assert!(x.iter().sum::<f64>() <= 1.0 + 1e-12 && x[1] > 0.0);
    }

    #[test]
    fn sampled_shares_reproduce_xi() {
        let u = AbilityDistribution::Uniform;
        let c = merge_contest();
        let rule = AllocationRule::new(&c.xi, &u).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let samples = 100_000;
        for v in [0.2, 0.45, 0.7, 0.8, 0.95] {
            let mut sum = 0.0;
            let mut sq = 0.0;
            for _ in 0..samples {
                let profile = [v, rng.random::<f64>(), rng.random::<f64>()];
                let x = rule.shares(&profile).unwrap()[0];
                sum += x;
                sq += x * x;
            }
            let mean = sum / samples as f64;
            let se = ((sq / samples as f64 - mean * mean) / samples as f64).sqrt();
            let target = c.xi.value(&u, v);
            assert!((mean - target).abs() <= 3.0 * se + 1e-12, "v = {v}: {mean} vs {target} (se {se})");
        }
    }

    #[test]
    fn output_rule_branches() {
        let u = AbilityDistribution::Uniform;
        let c = contest(
            vec![
                Segment::new(0.0, 0.2, SegmentForm::Zero),
                Segment::new(0.2, 0.8, SegmentForm::CdfPower),
                Segment::new(0.8, 1.0, SegmentForm::Constant { c: eta(0.8, 2) }),
            ],
            2,
            Some(0.2),
            Some(0.8),
        );
        let view = c.xi.view(&u);
        let (reserve, below, cap) = (view.output(0.2), view.left_output(0.8), view.output(0.8));
        assert!(reserve < below && below < cap);
        assert_eq!(output_space_rule(&c, &u, reserve * 0.5), 0.0);
        let mid = 0.5 * (reserve + below);
        assert_eq!(output_space_rule(&c, &u, mid), mid);
        assert_eq!(output_space_rule(&c, &u, 0.5 * (below + cap)), below);
        assert_eq!(output_space_rule(&c, &u, cap + 0.1), cap);
        for profile in [[0.9, 0.85], [0.5, 0.7], [0.1, 0.3], [0.95, 0.3]] {
            let outputs: Vec<f64> = profile.iter().map(|&v| view.output(v)).collect();
            assert_eq!(
                allocation_from_outputs(&c, &u, &outputs).unwrap(),
                allocation_rule(&c, &u, &profile).unwrap()
            );
        }
    }
}
