//! Tabulated running integrals `Φ(v) = ∫₀^v g` on [0, 1].
//!
//! Knots are a uniform grid merged with the distribution breakpoints. Inside a
//! cell the value is a cubic Hermite interpolant whose slopes are the exact
//! integrand (one-sided at kinks). Cells where that interpolant is not accurate
//! enough, e.g. next to an integrable singularity, fall back to quadrature.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numeric::{adaptive_simpson, integrate, linspace, Neumaier, QUAD_MAX_DEPTH};

pub const TABLE_KNOTS: usize = 2048;
/// Allowed disagreement between the table and direct quadrature.
pub const TABLE_TOL: f64 = 1e-8;
const CELL_TOL: f64 = 1e-13;
const VERIFY_POINTS: usize = 64;

pub type Integrand = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct CumulativeTable {
    x: Vec<f64>,
    y: Vec<f64>,
    /// Integrand at the left end of each cell (right limit).
    d0: Vec<f64>,
    /// Integrand at the right end of each cell (left limit).
    d1: Vec<f64>,
    direct: Vec<bool>,
    g: Integrand,
    /// Distribution breakpoints plus a coarse grid, so the independent
    /// quadrature cannot alias on oscillating integrands.
    check_breaks: Vec<f64>,
}

impl std::fmt::Debug for CumulativeTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CumulativeTable").field("knots", &self.x.len()).field("total", &self.total()).finish()
    }
}

impl CumulativeTable {
    /// `g` must be right-continuous and `g_left` its left limit. Both must be
    /// finite on [0, 1]; callers guard integrable endpoint singularities.
    pub fn build(g: Integrand, g_left: impl Fn(f64) -> f64, breaks: &[f64], knots: usize) -> Result<Self> {
        let mut x = linspace(0.0, 1.0, knots.max(2));
        x.extend(breaks.iter().copied().filter(|&b| b > 0.0 && b < 1.0));
        x.sort_by(|a, b| a.partial_cmp(b).unwrap());
        x.dedup();

        let cells = x.len() - 1;
        let mut y = Vec::with_capacity(x.len());
        let mut d0 = Vec::with_capacity(cells);
        let mut d1 = Vec::with_capacity(cells);
        let mut direct = Vec::with_capacity(cells);
        let mut acc = Neumaier::default();
        y.push(0.0);
        for k in 0..cells {
            let (a, b) = (x[k], x[k + 1]);
            let whole = adaptive_simpson(&*g, a, b, CELL_TOL, QUAD_MAX_DEPTH);
            let (ga, gb) = (g(a), g_left(b));
            d0.push(ga);
            d1.push(gb);
            let mid = 0.5 * (a + b);
            let exact_mid = adaptive_simpson(&*g, a, mid, CELL_TOL, QUAD_MAX_DEPTH);
            let approx_mid = hermite(0.0, whole, ga, gb, b - a, 0.5);
            direct.push(!(ga.is_finite() && gb.is_finite()) || (approx_mid - exact_mid).abs() > 1e-12);
            acc.add(whole);
            y.push(acc.value());
        }
        let mut check_breaks = linspace(0.0, 1.0, VERIFY_POINTS + 1);
        check_breaks.extend_from_slice(breaks);
        check_breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let table = CumulativeTable { x, y, d0, d1, direct, g, check_breaks };
        table.verify()?;
        Ok(table)
    }

    fn verify(&self) -> Result<()> {
        for k in 0..VERIFY_POINTS {
            // Irrational stride so the check points avoid the knots.
            let v = ((k as f64 + 0.5) * 0.618_033_988_749_895).fract();
            let direct = integrate(|t| (self.g)(t), 0.0, v, &self.check_breaks);
            let error = (self.eval(v) - direct).abs();
            if !(error <= TABLE_TOL) {
                return Err(Error::Interpolation { v, error });
            }
        }
        Ok(())
    }

    pub fn eval(&self, v: f64) -> f64 {
        if v <= 0.0 {
            return 0.0;
        }
        if v >= 1.0 {
            return self.total();
        }
        let k = self.x.partition_point(|&t| t <= v).saturating_sub(1).min(self.x.len() - 2);
        let (a, b) = (self.x[k], self.x[k + 1]);
        if v == a {
            return self.y[k];
        }
        if self.direct[k] {
            return self.y[k] + adaptive_simpson(&*self.g, a, v, CELL_TOL, QUAD_MAX_DEPTH);
        }
        let s = (v - a) / (b - a);
        let value = hermite(self.y[k], self.y[k + 1], self.d0[k], self.d1[k], b - a, s);
        let (lo, hi) = if self.y[k] <= self.y[k + 1] { (self.y[k], self.y[k + 1]) } else { (self.y[k + 1], self.y[k]) };
        value.clamp(lo, hi)
    }

    pub fn total(&self) -> f64 {
        self.y[self.y.len() - 1]
    }

    pub fn integrand(&self, v: f64) -> f64 {
        (self.g)(v)
    }
}

fn hermite(y0: f64, y1: f64, d0: f64, d1: f64, h: f64, s: f64) -> f64 {
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * y0 + (s3 - 2.0 * s2 + s) * h * d0 + (-2.0 * s3 + 3.0 * s2) * y1 + (s3 - s2) * h * d1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_reproduced() {
        let t = CumulativeTable::build(Arc::new(|x: f64| 3.0 * x * x), |x| 3.0 * x * x, &[], 64).unwrap();
        for k in 0..=100 {
            let v = k as f64 / 100.0;
            assert!((t.eval(v) - v * v * v).abs() < 1e-14);
        }
    }

    #[test]
    fn kinks_at_breakpoints() {
        let g = |x: f64| if x < 0.3 { 2.0 } else { 0.5 };
        let t = CumulativeTable::build(Arc::new(g), |x| if x <= 0.3 { 2.0 } else { 0.5 }, &[0.3], 100).unwrap();
        assert!((t.eval(0.3) - 0.6).abs() < 1e-14);
        assert!((t.eval(0.8) - 0.85).abs() < 1e-14);
    }

    #[test]
    fn singular_slope_uses_quadrature() {
        let g = |x: f64| 1.5 * x.sqrt();
        let t = CumulativeTable::build(Arc::new(g), g, &[], 256).unwrap();
        for v in [1e-5, 1e-3, 0.1, 0.7] {
            assert!((t.eval(v) - v.powf(1.5)).abs() < 1e-10, "{v}");
        }
    }

    #[test]
    fn coarse_grid_on_oscillating_integrand() {
        let g = |x: f64| (40.0 * x).cos();
        let t = CumulativeTable::build(Arc::new(g), g, &[], 16).unwrap();
        for v in [0.05, 0.33, 0.9] {
            assert!((t.eval(v) - (40.0 * v).sin() / 40.0).abs() < 1e-8);
        }
    }
}
