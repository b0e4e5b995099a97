//! Order-statistic kernels and the simple-contest outputs `β_j`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dist::AbilityDistribution;
use crate::error::{check_unit, Error, Result};
use crate::numeric::{binomial, bisect_predicate, integrate, powi, ROOT_TOL};
use crate::table::{CumulativeTable, TABLE_KNOTS};

/// Prize normalization: `Σ w ≤ 1` or `0 ≤ w_j ≤ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    UnitSum,
    UnitRange,
}

fn check_rank(n: usize, j: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Players { n, min: 1 });
    }
    if j == 0 || j > n {
        return Err(Error::Index { j, n });
    }
    Ok(())
}

/// Probability that a player of ability `v` is `j`th highest among `n`.
pub fn rank_prob(dist: &AbilityDistribution, n: usize, j: usize, v: f64) -> Result<f64> {
    check_rank(n, j)?;
    check_unit("ability", v)?;
    Ok(rank_prob_at(n, j, dist.cdf(v)))
}

/// `C(n−1, j−1) F^{n−j} (1−F)^{j−1}` given `F` directly.
pub fn rank_prob_at(n: usize, j: usize, cdf: f64) -> f64 {
    binomial(n - 1, j - 1) * powi(cdf, n - j) * powi(1.0 - cdf, j - 1)
}

/// Density of the `j`th highest of `n` samples.
pub fn order_pdf(dist: &AbilityDistribution, n: usize, j: usize, v: f64) -> Result<f64> {
    check_rank(n, j)?;
    check_unit("ability", v)?;
    Ok(order_pdf_with(n, j, dist.cdf(v), dist.pdf(v)))
}

fn order_pdf_with(n: usize, j: usize, cdf: f64, density: f64) -> f64 {
    n as f64 * rank_prob_at(n, j, cdf) * density
}

/// `t·f_{m,j}(t)`, zero at `t = 0` even where the density blows up.
fn weighted_kernel(dist: &AbilityDistribution, m: usize, j: usize, t: f64, left: bool) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let density = if left { dist.pdf_left(t) } else { dist.pdf(t) };
    t * order_pdf_with(m, j, dist.cdf(t), density)
}

fn check_simple(n: usize, j: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::Players { n, min: 2 });
    }
    if j == 0 || j >= n {
        return Err(Error::Index { j, n });
    }
    Ok(())
}

fn regime_scale(regime: Regime, j: usize) -> f64 {
    match regime {
        Regime::UnitSum => 1.0 / j as f64,
        Regime::UnitRange => 1.0,
    }
}

/// Equilibrium output of the simple contest rewarding the top `j`, by direct
/// quadrature.
pub fn beta_simple(dist: &AbilityDistribution, n: usize, j: usize, regime: Regime, v: f64) -> Result<f64> {
    check_simple(n, j)?;
    check_unit("ability", v)?;
    let raw = integrate(|t| weighted_kernel(dist, n - 1, j, t, false), 0.0, v, &dist.breakpoints());
    Ok(regime_scale(regime, j) * raw)
}

/// `(1/n) Σ_{k<n} F(b)^k F(a)^{n−1−k}`, the closed form
/// `(F(b)^n − F(a)^n) / (n (F(b) − F(a)))` without the cancellation.
pub fn equal_split_at(n: usize, fa: f64, fb: f64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let mut acc = 0.0;
    let mut pb = 1.0;
    for k in 0..n {
        acc += pb * powi(fa, n - 1 - k);
        pb *= fb;
    }
    acc / n as f64
}

/// Expected share of a player whose ability lies in `[a, b]` when the prize is
/// split equally among everyone in that interval and nobody is above it.
pub fn expected_equal_split(dist: &AbilityDistribution, n: usize, a: f64, b: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Players { n, min: 1 });
    }
    check_unit("ability", a)?;
    check_unit("ability", b)?;
    if a >= b {
        return Err(Error::Order { lo: a, hi: b });
    }
    let (fa, fb) = (dist.cdf(a), dist.cdf(b));
    if fb <= fa {
        return Err(Error::DegenerateInterval { a, b });
    }
    Ok(equal_split_at(n, fa, fb))
}

/// The same quantity as a sum over how many of the other `n − 1` players share
/// the interval.
pub fn equal_split_binomial(n: usize, fa: f64, fb: f64) -> f64 {
    let width = fb - fa;
    (0..n)
        .map(|k| binomial(n - 1, k) * powi(fa, n - 1 - k) * powi(width, k) / (k + 1) as f64)
        .sum()
}

/// Cached `β_j` and `G_j(v) = ∫₀^v β_j f` for one simple contest.
#[derive(Debug, Clone)]
pub struct SimpleOutputTable {
    pub n: usize,
    pub j: usize,
    pub regime: Regime,
    scale: f64,
    dist: AbilityDistribution,
    raw: CumulativeTable,
    /// `∫₀^v t f_{n−1,j}(t) F(t) dt`.
    raw_weighted: CumulativeTable,
}

impl SimpleOutputTable {
    pub fn new(dist: &AbilityDistribution, n: usize, j: usize, regime: Regime) -> Result<Self> {
        check_simple(n, j)?;
        let breaks = dist.breakpoints();
        let (d1, d2) = (dist.clone(), dist.clone());
        let raw = CumulativeTable::build(
            Arc::new(move |t| weighted_kernel(&d1, n - 1, j, t, false)),
            |t| weighted_kernel(dist, n - 1, j, t, true),
            &breaks,
            TABLE_KNOTS,
        )?;
        let raw_weighted = CumulativeTable::build(
            Arc::new(move |t| weighted_kernel(&d2, n - 1, j, t, false) * d2.cdf(t)),
            |t| weighted_kernel(dist, n - 1, j, t, true) * dist.cdf(t),
            &breaks,
            TABLE_KNOTS,
        )?;
        Ok(SimpleOutputTable { n, j, regime, scale: regime_scale(regime, j), dist: dist.clone(), raw, raw_weighted })
    }

    pub fn beta(&self, v: f64) -> f64 {
        self.scale * self.raw.eval(v)
    }

    /// `β_j'(v) = scale · v f_{n−1,j}(v)`.
    pub fn beta_slope(&self, v: f64) -> f64 {
        self.scale * self.raw.integrand(v)
    }

    /// `∫₀^v β_j f`, by parts from the two tables.
    pub fn cumulative(&self, v: f64) -> f64 {
        let v = v.clamp(0.0, 1.0);
        self.beta(v) * self.dist.cdf(v) - self.scale * self.raw_weighted.eval(v)
    }

    pub fn max_output(&self) -> f64 {
        self.beta(1.0)
    }

    /// Least `v` with `β_j(v) ≥ b`, or `None` when `β_j(1) < b`.
    pub fn inverse(&self, b: f64) -> Option<f64> {
        if b <= 0.0 {
            return Some(0.0);
        }
        if self.max_output() < b {
            return None;
        }
        Some(bisect_predicate(0.0, 1.0, |v| self.beta(v) >= b, ROOT_TOL))
    }
}
