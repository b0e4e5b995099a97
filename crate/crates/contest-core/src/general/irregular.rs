//! Optimal general contest for the linear threshold objective under an
//! arbitrary (possibly irregular) ability distribution.
//!
//! The search runs over the saturation ability `V_H` and the reserve `V_L`.
//! For fixed `V_H`, `ξ` on `[V_L, V_H)` follows the ironing of `ψ_{V_L,V_H}`:
//! the highest ability wins off flats and flats split equally. Two pools are
//! free: one at the bottom, where the flat containing `V_L` is cut, and one
//! below `V_H` whose level keeps the Matthews inequality tight at its left
//! end. The budget `β(V_H) = B_H` and the objective are both linear in the
//! pool levels and `ξ(V_H)`, so the best choice sits at an end of the
//! feasible interval. The budget's multiplier also moves the ironing, so the
//! hull is taken of `H + λ F⁻¹` over a small grid of `λ`.
//!
//! Suffix hulls of `H` are built right to left on a quantile grid, so every
//! reserve on the grid is scored in amortised constant time.

use super::{
    eta, matthews_bound, matthews_feasible, ExpectedAllocation, GeneralContest, GeneralKind, Segment, SegmentForm,
};
use crate::dist::{AbilityDistribution, IronedVirtual, DEFAULT_KNOTS};
use crate::error::{Error, Result};
use crate::numeric::{linspace, powi};
use crate::orderstats::{equal_split_at, Regime};

use super::regular::check_linear;

pub const DEFAULT_RESOLUTION: f64 = 1.0 / 256.0;
/// Quantile knots per unit of search resolution.
const KNOTS_PER_STEP: f64 = 4.0;
const MIN_KNOTS: usize = 256;
const FEAS_TOL: f64 = 1e-12;
/// Golden-section steps when refining `V_H` between grid points.
const REFINE_ITERS: usize = 40;
/// Grid for the budget multiplier that shifts the ironed function.
const LAMBDA_SPAN: f64 = 0.5;
const LAMBDA_STEPS: usize = 40;

pub fn optimize_linear_irregular(
    dist: &AbilityDistribution,
    n: usize,
    regime: Regime,
    b_l: f64,
    b_h: f64,
    resolution: f64,
) -> Result<GeneralContest> {
    dist.validate()?;
    if n == 0 {
        return Err(Error::Players { n, min: 1 });
    }
    let objective = check_linear(b_l, b_h)?;
    if !(resolution.is_finite() && resolution > 0.0 && resolution <= 0.25) {
        return Err(Error::Constraint(format!("search resolution must lie in (0, 0.25], got {resolution}")));
    }
    // Under unit-range each player's allocation is independent, which is the
    // single-player unit-sum problem.
    let m = match regime {
        Regime::UnitSum => n,
        Regime::UnitRange => 1,
    };
    let search = Search::new(dist, m, b_l, b_h, resolution);
    let plan = search.run();
    let pieces = search.pieces(&plan);
    let pieces = match regime {
        Regime::UnitSum => pieces,
        Regime::UnitRange => pieces
            .into_iter()
            .map(|s| match s.form {
                SegmentForm::CdfPower => Segment::new(s.v_lo, s.v_hi, SegmentForm::Constant { c: 1.0 }),
                _ => s,
            })
            .collect(),
    };
    let (v_l, v_h) = plan.markers();
    let xi = ExpectedAllocation::new(pieces, n, regime)?.with_markers(v_l, v_h.filter(|&v| v < 1.0));
    xi.validate(dist)?;
    let (value, max_output) = {
        let view = xi.view(dist);
        (view.objective(&objective), view.max_output())
    };
    let kind = GeneralKind::LinearIrregular { v_l: v_l.unwrap_or(1.0), v_h: v_h.unwrap_or(1.0) };
    let mut contest = GeneralContest::new(xi, kind, value);
    contest.corner_case = matches!(plan.shape, Shape::Pool { .. });
    contest.experimental = regime == Regime::UnitRange;
    if (value - plan.score).abs() > 1e-8 {
        contest.diagnostics.push(format!("closed-form score {} differs from quadrature {value}", plan.score));
    }
    if max_output > b_h + 1e-8 {
        contest.diagnostics.push(format!("maximum output {max_output} exceeds B_H"));
    }
    let check = matthews_feasible(&contest.xi, dist, 1001);
    if !check.feasible {
        contest.diagnostics.push(format!("Matthews slack {} at {}", check.worst_slack, check.at));
    }
    if let (Some(lo), Some(hi)) = (v_l, v_h) {
        if lo < hi {
            contest.ironed = IronedVirtual::shifted(dist, lo, hi, DEFAULT_KNOTS, plan.lambda).ok();
        }
    }
    Ok(contest)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Shape {
    /// Nothing is allocated.
    Empty,
    /// `ξ = x` from `V_H` up, zero below.
    Step,
    /// One pool on `[V_L, V_H)` with level `c`.
    Pool { c: f64 },
    /// Hull-shaped middle with optional bottom pool level `c_l`.
    Ironed { c_l: Option<f64> },
}

/// The best candidate found: `V_H`, the reserve knot, `ξ(V_H)` and its shape.
#[derive(Debug, Clone, Copy)]
struct Plan {
    v_h: f64,
    lambda: f64,
    knot: usize,
    v_l: f64,
    x: f64,
    shape: Shape,
    score: f64,
}

impl Plan {
    fn markers(&self) -> (Option<f64>, Option<f64>) {
        match self.shape {
            Shape::Empty => (None, None),
            Shape::Step => (Some(self.v_h), Some(self.v_h)),
            _ => (Some(self.v_l), Some(self.v_h)),
        }
    }
}

struct Search<'a> {
    dist: &'a AbilityDistribution,
    n: usize,
    b_l: f64,
    b_h: f64,
    resolution: f64,
    /// Quantile knots, their abilities and prefix integrals of `F^{n−1}`, `Fⁿ`.
    y: Vec<f64>,
    v: Vec<f64>,
    p1: Vec<f64>,
    pn: Vec<f64>,
}

/// Hull sweep for one `V_H`; index `m` is the end point `(F(V_H), V_H)`.
struct Sweep {
    v_h: f64,
    lambda: f64,
    y_h: f64,
    y: Vec<f64>,
    v: Vec<f64>,
    p1: Vec<f64>,
    pn: Vec<f64>,
    cum_i: Vec<f64>,
    cum_s: Vec<f64>,
    /// Level at the right end of the hull edge leaving each vertex.
    right_level: Vec<f64>,
}

/// Feasible interval for a scalar unknown under linear constraints.
#[derive(Debug, Clone, Copy)]
struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    /// Imposes `a x ≤ b`.
    fn le(&mut self, a: f64, b: f64) {
        if a > 0.0 {
            self.hi = self.hi.min(b / a);
        } else if a < 0.0 {
            self.lo = self.lo.max(b / a);
        } else if b < -FEAS_TOL {
            self.hi = f64::NEG_INFINITY;
        }
    }

    fn ge(&mut self, a: f64, b: f64) {
        self.le(-a, -b);
    }

    fn ends(&self) -> Option<[f64; 2]> {
        (self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi + FEAS_TOL).then(|| {
            let hi = self.hi.max(self.lo);
            [self.lo, hi]
        })
    }

    fn contains(&self, x: f64) -> bool {
        x >= self.lo - FEAS_TOL && x <= self.hi + FEAS_TOL
    }
}

/// Affine function `a + b x` of the free level.
#[derive(Debug, Clone, Copy)]
struct Affine {
    a: f64,
    b: f64,
}

impl Affine {
    fn at(&self, x: f64) -> f64 {
        self.a + self.b * x
    }
}

impl<'a> Search<'a> {
    fn new(dist: &'a AbilityDistribution, n: usize, b_l: f64, b_h: f64, resolution: f64) -> Self {
        let count = ((KNOTS_PER_STEP / resolution).ceil() as usize).max(MIN_KNOTS);
        let y = linspace(0.0, 1.0, count + 1);
        let v: Vec<f64> = y.iter().map(|&q| dist.quantile(q)).collect();
        let prefix = |power: usize| {
            let mut acc = vec![0.0; v.len()];
            for k in 1..v.len() {
                acc[k] = acc[k - 1] + dist.cdf_power_integral(power, v[k - 1], v[k]);
            }
            acc
        };
        let (p1, pn) = (prefix(n - 1), prefix(n));
        Search { dist, n, b_l, b_h, resolution, y, v, p1, pn }
    }

    fn eq(&self, a: f64, b: f64) -> f64 {
        equal_split_at(self.n, a, b)
    }

    fn sweep(&self, v_h: f64, lambda: f64) -> Sweep {
        let y_h = self.dist.cdf(v_h).min(1.0);
        // Knots strictly below F(V_H), then the end point.
        let m = self.y.partition_point(|&q| q < y_h - 1e-14).max(1);
        let mut y = self.y[..m].to_vec();
        let mut v = self.v[..m].to_vec();
        let mut p1 = self.p1[..m].to_vec();
        let mut pn = self.pn[..m].to_vec();
        let last = v[m - 1];
        p1.push(p1[m - 1] + self.dist.cdf_power_integral(self.n - 1, last, v_h.max(last)));
        pn.push(pn[m - 1] + self.dist.cdf_power_integral(self.n, last, v_h.max(last)));
        y.push(y_h);
        v.push(v_h.max(last));
        let len = m + 1;
        let mut sw = Sweep {
            v_h,
            lambda,
            y_h,
            y,
            v,
            p1,
            pn,
            cum_i: vec![0.0; len],
            cum_s: vec![0.0; len],
            right_level: vec![0.0; len],
        };
        sw.right_level[m] = self.eq(y_h, 1.0);
        sw
    }

    /// `H(y) = (y − F(V_H) + λ) F⁻¹(y)`; `λ` prices the budget at `V_H`.
    fn h(sw: &Sweep, k: usize) -> f64 {
        (sw.y[k] - sw.y_h + sw.lambda) * sw.v[k]
    }

    /// `(∫ξ, ∫ξ (t f + F − F(V_H)))` over the hull edge `a → b`, and its end levels.
    fn edge(&self, sw: &Sweep, a: usize, b: usize) -> (f64, f64, f64) {
        let (ya, yb, va, vb) = (sw.y[a], sw.y[b], sw.v[a], sw.v[b]);
        if b == a + 1 {
            let n = self.n as f64;
            let i1 = sw.p1[b] - sw.p1[a];
            let s = (vb * powi(yb, self.n) - va * powi(ya, self.n)) / n + (1.0 - 1.0 / n) * (sw.pn[b] - sw.pn[a])
                - sw.y_h * i1;
            (i1, s, powi(yb, self.n - 1))
        } else {
            let e = self.eq(ya, yb);
            (e * (vb - va), e * pool_weight(va, ya, vb, yb, sw.y_h), e)
        }
    }

    fn lower(&self, v_l: f64) -> f64 {
        if self.b_l == 0.0 {
            0.0
        } else if v_l > 0.0 {
            self.b_l / v_l
        } else {
            f64::INFINITY
        }
    }

    /// Scores every reserve knot for one `V_H` and returns the best plan.
    fn best_for(&self, v_h: f64, lambda: f64, stop_at: Option<usize>) -> (Option<Plan>, Vec<usize>) {
        let mut sw = self.sweep(v_h, lambda);
        let m = sw.y.len() - 1;
        let saturates = sw.y_h < 1.0;
        let tail = self.b_h * (1.0 - sw.y_h);
        let eta_h = eta(sw.y_h, self.n);
        let mut best: Option<Plan> = None;
        let offer = |p: Plan, best: &mut Option<Plan>| {
            if best.is_none_or(|b| p.score > b.score + 1e-15) {
                *best = Some(p);
            }
        };
        if saturates {
            // Reserve and saturation coincide: ξ jumps from 0 to B_H / V_H.
            let x = self.b_h / v_h;
            if x <= eta_h + FEAS_TOL && v_h > 0.0 {
                let score = self.b_l * sw.y_h + tail;
                offer(Plan { v_h, lambda: sw.lambda, knot: m, v_l: v_h, x, shape: Shape::Step, score }, &mut best);
            }
        }
        let mut stack = vec![m];
        for i in (0..m).rev() {
            while stack.len() >= 2 {
                let (a, b) = (stack[stack.len() - 1], stack[stack.len() - 2]);
                let lhs = (Self::h(&sw, a) - Self::h(&sw, i)) * (sw.y[b] - sw.y[i]);
                let rhs = (Self::h(&sw, b) - Self::h(&sw, i)) * (sw.y[a] - sw.y[i]);
                if lhs >= rhs {
                    stack.pop();
                } else {
                    break;
                }
            }
            let t = *stack.last().unwrap();
            let (ei, es, lev) = self.edge(&sw, i, t);
            sw.cum_i[i] = ei + sw.cum_i[t];
            sw.cum_s[i] = es + sw.cum_s[t];
            sw.right_level[i] = lev;
            stack.push(i);
            if stop_at == Some(i) {
                return (best, stack);
            }
            if sw.v[i] >= v_h {
                continue;
            }
            for p in self.pool_plans(&sw, i) {
                offer(p, &mut best);
            }
            for p in self.ironed_plans(&sw, &stack) {
                offer(p, &mut best);
            }
        }
        let empty = Plan { v_h: 1.0, lambda, knot: 0, v_l: 1.0, x: 0.0, shape: Shape::Empty, score: self.b_l };
        offer(empty, &mut best);
        (best, stack)
    }

    /// One pool `c` on `[V_L, V_H)` and `x` above.
    fn pool_plans(&self, sw: &Sweep, i: usize) -> Vec<Plan> {
        let (v_l, y_l, v_h, y_h) = (sw.v[i], sw.y[i], sw.v_h, sw.y_h);
        let lo_c = self.lower(v_l).max(0.0);
        let weight = pool_weight(v_l, y_l, v_h, y_h, y_h);
        let base = self.b_l * y_l + self.b_h * (1.0 - y_h);
        let mut out = Vec::new();
        if y_h >= 1.0 {
            // No saturation: β(1⁻) = c V_L must stay below B_H.
            let mut iv = Interval::new(lo_c, self.eq(y_l, 1.0));
            iv.le(v_l, self.b_h);
            if let Some(ends) = iv.ends() {
                for c in ends {
                    let score = base + c * weight;
                    out.push(Plan { v_h, lambda: sw.lambda, knot: i, v_l, x: c, shape: Shape::Pool { c }, score });
                }
            }
            return out;
        }
        // c = (V_H x − B_H)/(V_H − V_L).
        let w = v_h - v_l;
        let c = Affine { a: -self.b_h / w, b: v_h / w };
        let mut iv = Interval::new(0.0, eta(y_h, self.n));
        iv.ge(c.b, lo_c - c.a);
        iv.le(c.b - 1.0, -c.a);
        iv.le(c.b * (y_h - y_l) + (1.0 - y_h), matthews_bound(y_l, self.n) - c.a * (y_h - y_l));
        if let Some(ends) = iv.ends() {
            for x in ends {
                let level = c.at(x);
                let score = base + level * weight;
                out.push(Plan { v_h, lambda: sw.lambda, knot: i, v_l, x, shape: Shape::Pool { c: level }, score });
            }
        }
        out
    }

    /// Hull-shaped `ξ` from the reserve knot on top of the stack.
    fn ironed_plans(&self, sw: &Sweep, stack: &[usize]) -> Vec<Plan> {
        let len = stack.len();
        let m = stack[0];
        let i = stack[len - 1];
        let t = stack[len - 2];
        let h = stack[1];
        if h == i {
            return Vec::new();
        }
        let (v_l, y_l, v_h, y_h) = (sw.v[i], sw.y[i], sw.v_h, sw.y_h);
        let bottom_pool = t > i + 1;
        let top_pool = m > h + 1;
        let start = if bottom_pool { t } else { i };
        // Without a top pool the last edge belongs to the middle.
        let end = if top_pool { h } else { m };
        let mid_i = sw.cum_i[start] - sw.cum_i[end];
        let mid_s = sw.cum_s[start] - sw.cum_s[end];
        let saturates = y_h < 1.0;

        // Top pool level c_H = α − γ x keeps Matthews tight at its left end.
        let (y_top, v_top) = (sw.y[h], sw.v[h]);
        let (alpha, gamma) = if top_pool {
            let d = y_h - y_top;
            (matthews_bound(y_top, self.n) / d, (1.0 - y_h) / d)
        } else {
            (0.0, 0.0)
        };
        let c_top = Affine { a: alpha, b: -gamma };
        let w_top = if top_pool { v_h - v_top } else { 0.0 };
        let a_top = if top_pool { pool_weight(v_top, y_top, v_h, y_h, y_h) } else { 0.0 };
        // Level arriving at the top pool from the left, when it is fixed.
        let arriving = if len >= 3 && !(bottom_pool && t == h) { Some(sw.right_level[stack[2]]) } else { None };

        let base = self.b_l * y_l + mid_s + self.b_h * (1.0 - y_h);
        let lo_l = self.lower(v_l).max(0.0);
        let mut out = Vec::new();

        if !saturates {
            // x plays no role; β(1⁻) = ξ(1⁻) − ∫ξ ≤ B_H.
            let top_level = if top_pool { alpha } else { 1.0 };
            if let Some(a) = arriving {
                if top_pool && alpha < a - FEAS_TOL {
                    return out;
                }
            }
            let fixed = mid_i + if top_pool { alpha * w_top } else { 0.0 };
            let score_fixed = base + if top_pool { alpha * a_top } else { 0.0 };
            if bottom_pool {
                let (w_l, a_l) = (sw.v[t] - v_l, pool_weight(v_l, y_l, sw.v[t], sw.y[t], y_h));
                let mut iv = Interval::new(lo_l, self.eq(y_l, sw.y[t]));
                iv.ge(w_l, top_level - fixed - self.b_h);
                if top_pool && t == h {
                    iv.le(1.0, alpha);
                }
                if let Some(ends) = iv.ends() {
                    for c in ends {
                        let score = score_fixed + c * a_l;
                        out.push(Plan { v_h, lambda: sw.lambda, knot: i, v_l, x: c, shape: Shape::Ironed { c_l: Some(c) }, score });
                    }
                }
            } else if powi(y_l, self.n - 1) >= lo_l - FEAS_TOL && top_level - fixed <= self.b_h + FEAS_TOL {
                out.push(Plan { v_h, lambda: sw.lambda, knot: i, v_l, x: top_level, shape: Shape::Ironed { c_l: None }, score: score_fixed });
            }
            return out;
        }

        let mut iv = Interval::new(0.0, eta(y_h, self.n));
        if top_pool {
            // α − γ x ≤ x and α − γ x ≥ arriving level.
            iv.ge(1.0 + gamma, alpha);
            if let Some(a) = arriving {
                iv.le(gamma, alpha - a);
            }
        } else {
            iv.ge(1.0, powi(y_h, self.n - 1));
        }
        // Budget: V_H x − c_L w_L − mid − c_H w_H = B_H.
        let slope = v_h + gamma * w_top;
        let offset = alpha * w_top + mid_i + self.b_h;
        if bottom_pool {
            let (w_l, a_l) = (sw.v[t] - v_l, pool_weight(v_l, y_l, sw.v[t], sw.y[t], y_h));
            let c_l = Affine { a: -offset / w_l, b: slope / w_l };
            iv.ge(c_l.b, lo_l - c_l.a);
            iv.le(c_l.b, self.eq(y_l, sw.y[t]) - c_l.a);
            if top_pool && t == h {
                // c_L ≤ c_H.
                iv.le(c_l.b - c_top.b, c_top.a - c_l.a);
            }
            if let Some(ends) = iv.ends() {
                for x in ends {
                    let cl = c_l.at(x);
                    let score = base + cl * a_l + if top_pool { c_top.at(x) * a_top } else { 0.0 };
                    out.push(Plan { v_h, lambda: sw.lambda, knot: i, v_l, x, shape: Shape::Ironed { c_l: Some(cl) }, score });
                }
            }
        } else {
            let x = offset / slope;
            if iv.contains(x) && v_l * powi(y_l, self.n - 1) >= self.b_l - FEAS_TOL {
                let score = base + if top_pool { c_top.at(x) * a_top } else { 0.0 };
                out.push(Plan { v_h, lambda: sw.lambda, knot: i, v_l, x, shape: Shape::Ironed { c_l: None }, score });
            }
        }
        out
    }

    fn run(&self) -> Plan {
        let mut best = self.run_at(0.0);
        for &lambda in &linspace(-LAMBDA_SPAN, LAMBDA_SPAN, LAMBDA_STEPS + 1) {
            if lambda == 0.0 {
                continue;
            }
            let p = self.run_at(lambda);
            if p.score > best.score + 1e-15 {
                best = p;
            }
        }
        best
    }

    fn run_at(&self, lambda: f64) -> Plan {
        let steps = (1.0 / self.resolution).round().max(1.0) as usize;
        let grid = linspace(0.0, 1.0, steps + 1);
        let mut best: Option<Plan> = None;
        for &v_h in &grid[1..] {
            if let (Some(p), _) = self.best_for(v_h, lambda, None) {
                if best.is_none_or(|b| p.score > b.score + 1e-15) {
                    best = Some(p);
                }
            }
        }
        let mut best = best.expect("the empty contest is always a candidate");
        // Refine V_H between its grid neighbours.
        if best.v_h < 1.0 && !matches!(best.shape, Shape::Empty) {
            let score_at = |v: f64| self.best_for(v, lambda, None).0.map_or(f64::NEG_INFINITY, |p| p.score);
            let (mut a, mut b) = ((best.v_h - self.resolution).max(1e-9), (best.v_h + self.resolution).min(1.0));
            let g = 0.5 * (5f64.sqrt() - 1.0);
            let (mut c, mut d) = (b - g * (b - a), a + g * (b - a));
            let (mut fc, mut fd) = (score_at(c), score_at(d));
            for _ in 0..REFINE_ITERS {
                if fc >= fd {
                    b = d;
                    d = c;
                    fd = fc;
                    c = b - g * (b - a);
                    fc = score_at(c);
                } else {
                    a = c;
                    c = d;
                    fc = fd;
                    d = a + g * (b - a);
                    fd = score_at(d);
                }
            }
            let v = if fc >= fd { c } else { d };
            if let (Some(p), _) = self.best_for(v, lambda, None) {
                if p.score > best.score {
                    best = p;
                }
            }
        }
        best
    }

    /// Segments of `ξ` for a plan.
    fn pieces(&self, plan: &Plan) -> Vec<Segment> {
        let zero = |a: f64, b: f64| Segment::new(a, b, SegmentForm::Zero);
        match plan.shape {
            Shape::Empty => vec![Segment::new(0.0, 1.0, SegmentForm::Zero)],
            Shape::Step => {
                vec![zero(0.0, plan.v_h), Segment::new(plan.v_h, 1.0, SegmentForm::Constant { c: plan.x })]
            }
            Shape::Pool { c } => {
                let mut out = vec![zero(0.0, plan.v_l), Segment::new(plan.v_l, plan.v_h, SegmentForm::Constant { c })];
                if plan.v_h < 1.0 {
                    out.push(Segment::new(plan.v_h, 1.0, SegmentForm::Constant { c: plan.x }));
                }
                out
            }
            Shape::Ironed { c_l } => {
                let (_, stack) = self.best_for(plan.v_h, plan.lambda, Some(plan.knot));
                let sw = self.sweep(plan.v_h, plan.lambda);
                let m = stack[0];
                let y_h = sw.y_h;
                let mut out = vec![zero(0.0, plan.v_l)];
                // Walk the hull edges from the reserve up.
                let verts: Vec<usize> = stack.iter().rev().copied().collect();
                for (k, w) in verts.windows(2).enumerate() {
                    let (a, b) = (w[0], w[1]);
                    let (va, vb) = (sw.v[a], sw.v[b]);
                    if vb <= va {
                        continue;
                    }
                    let form = if k == 0 && b > a + 1 {
                        SegmentForm::Constant { c: c_l.expect("bottom pool level") }
                    } else if b == m && b > a + 1 && y_h < 1.0 {
                        let d = y_h - sw.y[a];
                        let c = (matthews_bound(sw.y[a], self.n) - plan.x * (1.0 - y_h)) / d;
                        SegmentForm::IronedFlat { c, source: [va, vb] }
                    } else if b > a + 1 {
                        SegmentForm::IronedFlat { c: self.eq(sw.y[a], sw.y[b]), source: [va, vb] }
                    } else {
                        SegmentForm::CdfPower
                    };
                    push_merged(&mut out, Segment::new(va, vb, form));
                }
                if y_h < 1.0 {
                    out.push(Segment::new(plan.v_h, 1.0, SegmentForm::Constant { c: plan.x }));
                }
                out
            }
        }
    }
}

/// `[t F(t) − F(V_H) t]` from `a` to `b`: the objective weight of a unit pool.
fn pool_weight(va: f64, ya: f64, vb: f64, yb: f64, y_h: f64) -> f64 {
    vb * yb - va * ya - y_h * (vb - va)
}

fn push_merged(out: &mut Vec<Segment>, s: Segment) {
    if let Some(last) = out.last_mut() {
        if last.form == SegmentForm::CdfPower && s.form == SegmentForm::CdfPower {
            last.v_hi = s.v_hi;
            return;
        }
    }
    out.push(s);
}
