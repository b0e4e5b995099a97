//! Rank-order contests: prize vectors, the equilibrium output as a mixture
//! of simple contests, and objective evaluation.

mod optimize;

pub use optimize::{
    crossing_point, optimize_binary, optimize_linear_full, optimize_linear_upper, optimize_total,
    optimize_transformed, simple_vs_optimal, total_output_scores,
};

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dist::AbilityDistribution;
use crate::error::{Error, Result};
use crate::numeric::{bisect_predicate, ROOT_TOL};
use crate::orderstats::{Regime, SimpleOutputTable};

/// Slack allowed on `Σα ≤ 1` and on prize inequalities.
const PRIZE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankContest {
    pub n: usize,
    pub regime: Regime,
    /// `α_j` for `j = 1..n−1` (stored 0-based).
    pub alpha: Vec<f64>,
    /// Prizes `w_1 ≥ … ≥ w_n = 0`.
    pub prizes: Vec<f64>,
}

impl RankContest {
    /// Builds a contest from prizes. `w` may have `n` entries with `w_n = 0`
    /// or `n − 1` entries with the last prize implied.
    pub fn from_prizes(n: usize, regime: Regime, w: &[f64]) -> Result<Self> {
        if n < 2 {
            return Err(Error::Players { n, min: 2 });
        }
        let mut w = w.to_vec();
        if w.len() == n - 1 {
            w.push(0.0);
        }
        if w.len() != n {
            return Err(Error::Constraint(format!("expected {n} prizes, got {}", w.len())));
        }
        if w[n - 1] != 0.0 {
            return Err(Error::Constraint(format!("last prize w_n = {} must be 0", w[n - 1])));
        }
        for (j, pair) in w.windows(2).enumerate() {
            if pair[1] > pair[0] + PRIZE_TOL {
                return Err(Error::Constraint(format!(
                    "prizes must be non-increasing: w_{} = {} < w_{} = {}",
                    j + 1,
                    pair[0],
                    j + 2,
                    pair[1]
                )));
            }
        }
        if let Some(&x) = w.iter().find(|x| !x.is_finite() || **x < 0.0) {
            return Err(Error::Constraint(format!("prize {x} must be a non-negative number")));
        }
        match regime {
            Regime::UnitSum => {
                let total: f64 = w.iter().sum();
                if total > 1.0 + PRIZE_TOL {
                    return Err(Error::Constraint(format!("unit-sum prizes must satisfy sum w <= 1, got {total}")));
                }
            }
            Regime::UnitRange => {
                if w[0] > 1.0 + PRIZE_TOL {
                    return Err(Error::Constraint(format!("unit-range prizes must satisfy w_1 <= 1, got {}", w[0])));
                }
            }
        }
        let alpha = (0..n - 1)
            .map(|j| {
                let step = w[j] - w[j + 1];
                match regime {
                    Regime::UnitSum => (j + 1) as f64 * step,
                    Regime::UnitRange => step,
                }
            })
            .collect();
        Ok(RankContest { n, regime, alpha, prizes: w })
    }

    /// Builds a contest from mixture weights with `α ≥ 0` and `Σα ≤ 1`.
    pub fn from_alpha(n: usize, regime: Regime, alpha: &[f64]) -> Result<Self> {
        if n < 2 {
            return Err(Error::Players { n, min: 2 });
        }
        if alpha.len() != n - 1 {
            return Err(Error::Constraint(format!("expected {} mixture weights, got {}", n - 1, alpha.len())));
        }
        if let Some(&a) = alpha.iter().find(|a| !a.is_finite() || **a < -PRIZE_TOL) {
            return Err(Error::Constraint(format!("mixture weight {a} must be >= 0")));
        }
        let total: f64 = alpha.iter().sum();
        if total > 1.0 + 1e-9 {
            return Err(Error::Constraint(format!("mixture weights must satisfy sum alpha <= 1, got {total}")));
        }
        let alpha: Vec<f64> = alpha.iter().map(|a| a.max(0.0)).collect();
        Ok(RankContest { n, regime, prizes: prizes_from_alpha(regime, &alpha), alpha })
    }

    /// The simple contest rewarding the top `j` players.
    pub fn simple(n: usize, regime: Regime, j: usize) -> Result<Self> {
        if j == 0 || j >= n {
            return Err(Error::Index { j, n });
        }
        let mut alpha = vec![0.0; n - 1];
        alpha[j - 1] = 1.0;
        RankContest::from_alpha(n, regime, &alpha)
    }
}

/// Inverts `α_j = j (w_j − w_{j+1})` (unit-sum) or `α_j = w_j − w_{j+1}`.
pub fn prizes_from_alpha(regime: Regime, alpha: &[f64]) -> Vec<f64> {
    let m = alpha.len();
    let mut w = vec![0.0; m + 1];
    for j in (0..m).rev() {
        let step = match regime {
            Regime::UnitSum => alpha[j] / (j + 1) as f64,
            Regime::UnitRange => alpha[j],
        };
        w[j] = w[j + 1] + step;
    }
    w
}

/// Monotone transformation of a player's output in the designer objective.
#[derive(Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Transform {
    Identity,
    /// `x^exponent`.
    Power { exponent: f64 },
    /// `min(x, level)`.
    Cap { level: f64 },
    /// `min(x, level)` with the corner replaced by a quadratic of half-width
    /// `width`; concave and continuously differentiable.
    SmoothCap { level: f64, width: f64 },
    #[serde(skip)]
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Transform::Identity => write!(f, "Identity"),
            Transform::Power { exponent } => write!(f, "Power({exponent})"),
            Transform::Cap { level } => write!(f, "Cap({level})"),
            Transform::SmoothCap { level, width } => write!(f, "SmoothCap({level}, {width})"),
            Transform::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl Transform {
    pub fn apply(&self, x: f64) -> f64 {
        match self {
            Transform::Identity => x,
            Transform::Power { exponent } => x.max(0.0).powf(*exponent),
            Transform::Cap { level } => x.min(*level),
            Transform::SmoothCap { level, width } => {
                let (c, w) = (*level, *width);
                if x <= c - w {
                    x
                } else if x >= c + w {
                    c
                } else {
                    x - (x - (c - w)).powi(2) / (4.0 * w)
                }
            }
            Transform::Custom(h) => h(x),
        }
    }

    /// Outputs at which the transform has a kink or changes formula.
    fn kinks(&self) -> Vec<f64> {
        match self {
            Transform::Cap { level } => vec![*level],
            Transform::SmoothCap { level, width } => vec![level - width, level + width],
            _ => Vec::new(),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Transform::Power { exponent } if !(exponent.is_finite() && *exponent > 0.0) => {
                Err(Error::Constraint(format!("power transform needs exponent > 0, got {exponent}")))
            }
            Transform::Cap { level } if !(level.is_finite() && *level > 0.0) => {
                Err(Error::Constraint(format!("cap level must be > 0, got {level}")))
            }
            Transform::SmoothCap { level, width }
                if !(level.is_finite() && width.is_finite() && *width > 0.0 && *level > *width) =>
            {
                Err(Error::Constraint(format!("smooth cap needs level > width > 0, got {level}, {width}")))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Convex,
    Concave,
}

/// Designer objective over equilibrium outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ThresholdObjective {
    Binary {
        #[serde(rename = "B")]
        b: f64,
    },
    Linear {
        #[serde(rename = "B_L")]
        b_l: f64,
        #[serde(rename = "B_H")]
        b_h: f64,
    },
    TotalOutput,
    Transformed { transform: Transform, shape: Shape },
}

impl ThresholdObjective {
    pub fn binary(b: f64) -> Result<Self> {
        let o = ThresholdObjective::Binary { b };
        o.validate()?;
        Ok(o)
    }

    pub fn linear(b_l: f64, b_h: f64) -> Result<Self> {
        let o = ThresholdObjective::Linear { b_l, b_h };
        o.validate()?;
        Ok(o)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ThresholdObjective::Binary { b } => {
                if b.is_finite() && *b > 0.0 {
                    Ok(())
                } else {
                    Err(Error::Constraint(format!("binary threshold needs B > 0, got {b}")))
                }
            }
            ThresholdObjective::Linear { b_l, b_h } => {
                if !(b_l.is_finite() && b_h.is_finite()) {
                    return Err(Error::Constraint("thresholds must be finite".into()));
                }
                if *b_l < 0.0 {
                    return Err(Error::Constraint(format!("linear threshold needs B_L >= 0, got {b_l}")));
                }
                if b_l >= b_h {
                    return Err(Error::Constraint(format!("linear threshold needs B_L < B_H, got {b_l} >= {b_h}")));
                }
                if *b_h > 1.0 {
                    return Err(Error::Constraint(format!("linear threshold needs B_H <= 1, got {b_h}")));
                }
                Ok(())
            }
            ThresholdObjective::TotalOutput => Ok(()),
            ThresholdObjective::Transformed { transform, .. } => transform.validate(),
        }
    }
}

/// The `n − 1` simple-contest tables for one distribution, player count and
/// regime. Every rank-order computation goes through one of these.
#[derive(Debug, Clone)]
pub struct RankModel {
    pub dist: AbilityDistribution,
    pub n: usize,
    pub regime: Regime,
    tables: Vec<SimpleOutputTable>,
}

impl RankModel {
    pub fn new(dist: &AbilityDistribution, n: usize, regime: Regime) -> Result<Self> {
        dist.validate()?;
        if n < 2 {
            return Err(Error::Players { n, min: 2 });
        }
        let tables = (1..n).map(|j| SimpleOutputTable::new(dist, n, j, regime)).collect::<Result<Vec<_>>>()?;
        Ok(RankModel { dist: dist.clone(), n, regime, tables })
    }

    /// Table of `β_j`, 1-based.
    pub fn simple(&self, j: usize) -> &SimpleOutputTable {
        &self.tables[j - 1]
    }

    pub fn contest(&self, alpha: &[f64]) -> Result<RankContest> {
        RankContest::from_alpha(self.n, self.regime, alpha)
    }

    fn check(&self, contest: &RankContest) {
        debug_assert_eq!(contest.n, self.n);
        debug_assert_eq!(contest.regime, self.regime);
    }

    /// `β(v) = Σ α_j β_j(v)`.
    pub fn output(&self, alpha: &[f64], v: f64) -> f64 {
        alpha.iter().zip(&self.tables).filter(|(a, _)| **a != 0.0).map(|(a, t)| a * t.beta(v)).sum()
    }

    pub fn equilibrium_output(&self, contest: &RankContest, v: f64) -> f64 {
        self.check(contest);
        self.output(&contest.alpha, v)
    }

    /// `∫₀^v β f`.
    pub fn cumulative(&self, alpha: &[f64], v: f64) -> f64 {
        alpha.iter().zip(&self.tables).filter(|(a, _)| **a != 0.0).map(|(a, t)| a * t.cumulative(v)).sum()
    }

    /// Least `v` with `β(v) ≥ b`; `None` means `b` is above the output range.
    pub fn inverse(&self, alpha: &[f64], b: f64) -> Option<f64> {
        if b <= 0.0 {
            return Some(0.0);
        }
        if self.output(alpha, 1.0) < b {
            return None;
        }
        Some(bisect_predicate(0.0, 1.0, |v| self.output(alpha, v) >= b, ROOT_TOL))
    }

    pub fn inverse_output(&self, contest: &RankContest, b: f64) -> Option<f64> {
        self.check(contest);
        self.inverse(&contest.alpha, b)
    }

    /// Designer objective for mixture weights `alpha`.
    pub fn objective(&self, alpha: &[f64], objective: &ThresholdObjective) -> f64 {
        match objective {
            ThresholdObjective::Binary { b } => match self.inverse(alpha, *b) {
                Some(v) => 1.0 - self.dist.cdf(v),
                None => 0.0,
            },
            ThresholdObjective::Linear { b_l, b_h } => self.linear_objective(alpha, *b_l, *b_h),
            ThresholdObjective::TotalOutput => self.cumulative(alpha, 1.0),
            ThresholdObjective::Transformed { transform, .. } => {
                let mut breaks = self.dist.breakpoints();
                breaks.extend(transform.kinks().into_iter().filter_map(|c| self.inverse(alpha, c)));
                breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
                self.dist.expectation(|v| transform.apply(self.output(alpha, v)), &breaks)
            }
        }
    }

    pub fn eval_objective(&self, contest: &RankContest, objective: &ThresholdObjective) -> f64 {
        self.check(contest);
        self.objective(&contest.alpha, objective)
    }

    /// `B_L F(V_L) + ∫_{V_L}^{V_H} β f + B_H (1 − F(V_H))`.
    pub fn linear_objective(&self, alpha: &[f64], b_l: f64, b_h: f64) -> f64 {
        let Some(v_l) = self.inverse(alpha, b_l) else {
            return b_l;
        };
        let v_h = self.inverse(alpha, b_h).unwrap_or(1.0);
        let f = |v: f64| self.dist.cdf(v);
        b_l * f(v_l) + self.cumulative(alpha, v_h) - self.cumulative(alpha, v_l) + b_h * (1.0 - f(v_h))
    }
}
