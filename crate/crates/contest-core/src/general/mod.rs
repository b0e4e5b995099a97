//! General contests, described by their expected allocation `ξ(v)`: the
//! probability-weighted share of the prize a player of ability `v` receives.
//! Any implementable `ξ` pins down the equilibrium output
//! `β(v) = v ξ(v) − ∫₀^v ξ`.

mod binary;
mod irregular;
mod regular;
mod rule;

pub use binary::optimize_binary_general;
pub use irregular::{optimize_linear_irregular, DEFAULT_RESOLUTION};
pub use regular::optimize_linear_regular;
pub use rule::{allocation_from_outputs, allocation_rule, output_space_rule, AllocationRule};

use serde::{Deserialize, Serialize};

use crate::dist::{AbilityDistribution, IronedVirtual};
use crate::error::{Error, Result};
use crate::numeric::{bisect_predicate, linspace, powi, Neumaier, ROOT_TOL};
use crate::orderstats::{equal_split_at, Regime};
use crate::rank::ThresholdObjective;

/// Tolerance of the Matthews (implementability) inequality.
pub const MATTHEWS_TOL: f64 = 1e-8;
/// Slack allowed when checking that `ξ` does not decrease across a boundary.
const MONOTONE_TOL: f64 = 1e-9;

/// `η(x) = (1 − xⁿ)/(n(1 − x))` in the form `(1/n) Σ_{k<n} x^k`.
pub fn eta(x: f64, n: usize) -> f64 {
    equal_split_at(n, 1.0, x)
}

/// `(1 − yⁿ)/n`: the probability that some player above quantile `y` wins.
pub fn matthews_bound(y: f64, n: usize) -> f64 {
    (1.0 - powi(y, n)) / n as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum SegmentForm {
    Zero,
    /// `ξ = F^{n−1}`: the highest ability wins.
    CdfPower,
    Constant { c: f64 },
    /// Constant on an ironed interval of the virtual ability.
    IronedFlat { c: f64, source: [f64; 2] },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub v_lo: f64,
    pub v_hi: f64,
    #[serde(flatten)]
    pub form: SegmentForm,
}

impl Segment {
    pub fn new(v_lo: f64, v_hi: f64, form: SegmentForm) -> Self {
        Segment { v_lo, v_hi, form }
    }

    /// The pooled level, if the segment is constant.
    pub fn level(&self) -> Option<f64> {
        match self.form {
            SegmentForm::Zero => Some(0.0),
            SegmentForm::Constant { c } | SegmentForm::IronedFlat { c, .. } => Some(c),
            SegmentForm::CdfPower => None,
        }
    }
}

/// Piecewise `ξ` on `[0, 1]` with optional reserve and saturation markers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectedAllocation {
    pub pieces: Vec<Segment>,
    pub n: usize,
    pub regime: Regime,
    #[serde(rename = "V_L", default, skip_serializing_if = "Option::is_none")]
    pub v_l: Option<f64>,
    #[serde(rename = "V_H", default, skip_serializing_if = "Option::is_none")]
    pub v_h: Option<f64>,
}

impl ExpectedAllocation {
    /// Checks that the pieces tile `[0, 1]` in order with levels in `[0, 1]`.
    /// Empty pieces are dropped.
    pub fn new(pieces: Vec<Segment>, n: usize, regime: Regime) -> Result<Self> {
        if n == 0 {
            return Err(Error::Players { n, min: 1 });
        }
        let pieces: Vec<Segment> = pieces.into_iter().filter(|s| s.v_hi > s.v_lo).collect();
        let Some(first) = pieces.first() else {
            return Err(Error::Constraint("allocation needs at least one segment".into()));
        };
        if first.v_lo != 0.0 || pieces.last().unwrap().v_hi != 1.0 {
            return Err(Error::Constraint("allocation segments must cover [0, 1]".into()));
        }
        for w in pieces.windows(2) {
            if w[0].v_hi != w[1].v_lo {
                return Err(Error::Constraint(format!("gap or overlap at v = {}", w[0].v_hi)));
            }
        }
        for s in &pieces {
            if let Some(c) = s.level() {
                if !(0.0..=1.0 + MONOTONE_TOL).contains(&c) {
                    return Err(Error::Constraint(format!("allocation level {c} outside [0, 1]")));
                }
            }
        }
        Ok(ExpectedAllocation { pieces, n, regime, v_l: None, v_h: None })
    }

    pub fn with_markers(mut self, v_l: Option<f64>, v_h: Option<f64>) -> Self {
        self.v_l = v_l;
        self.v_h = v_h;
        self
    }

    fn segment_index(&self, v: f64) -> usize {
        let i = self.pieces.partition_point(|s| s.v_hi <= v);
        i.min(self.pieces.len() - 1)
    }

    pub fn segment_at(&self, v: f64) -> &Segment {
        &self.pieces[self.segment_index(v.clamp(0.0, 1.0))]
    }

    fn piece_value(&self, dist: &AbilityDistribution, s: &Segment, v: f64) -> f64 {
        s.level().unwrap_or_else(|| powi(dist.cdf(v), self.n - 1))
    }

    /// `ξ(v)`, right-continuous.
    pub fn value(&self, dist: &AbilityDistribution, v: f64) -> f64 {
        let v = v.clamp(0.0, 1.0);
        self.piece_value(dist, self.segment_at(v), v)
    }

    /// `ξ(v⁻)`.
    pub fn left_value(&self, dist: &AbilityDistribution, v: f64) -> f64 {
        let v = v.clamp(0.0, 1.0);
        let i = self.pieces.partition_point(|s| s.v_hi < v).min(self.pieces.len() - 1);
        self.piece_value(dist, &self.pieces[i], v)
    }

    fn piece_integral(&self, dist: &AbilityDistribution, s: &Segment, a: f64, b: f64) -> f64 {
        let (a, b) = (a.max(s.v_lo), b.min(s.v_hi));
        if b <= a {
            return 0.0;
        }
        match s.level() {
            Some(c) => c * (b - a),
            None => dist.cdf_power_integral(self.n - 1, a, b),
        }
    }

    /// `∫_a^b ξ(t) dt`.
    pub fn integral(&self, dist: &AbilityDistribution, a: f64, b: f64) -> f64 {
        let mut acc = Neumaier::default();
        for s in self.pieces.iter().filter(|s| s.v_hi > a && s.v_lo < b) {
            acc.add(self.piece_integral(dist, s, a, b));
        }
        acc.value()
    }

    /// `∫_v^1 ξ f`, the left side of the Matthews inequality.
    pub fn mass_above(&self, dist: &AbilityDistribution, v: f64) -> f64 {
        let mut acc = Neumaier::default();
        for s in self.pieces.iter().filter(|s| s.v_hi > v) {
            let a = v.max(s.v_lo);
            let (fa, fb) = (dist.cdf(a), dist.cdf(s.v_hi));
            acc.add(match s.level() {
                Some(c) => c * (fb - fa),
                None => (powi(fb, self.n) - powi(fa, self.n)) / self.n as f64,
            });
        }
        acc.value()
    }

    /// Segment boundaries strictly inside `(0, 1)`.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.pieces[1..].iter().map(|s| s.v_lo).collect()
    }

    /// Largest decrease of `ξ` across a segment boundary (zero when monotone).
    pub fn monotonicity_defect(&self, dist: &AbilityDistribution) -> f64 {
        self.pieces
            .windows(2)
            .map(|w| {
                let x = w[1].v_lo;
                self.piece_value(dist, &w[0], x) - self.piece_value(dist, &w[1], x)
            })
            .fold(0.0, f64::max)
    }

    /// Errors when `ξ` decreases or Matthews fails on a 1e-3 grid.
    pub fn validate(&self, dist: &AbilityDistribution) -> Result<()> {
        let defect = self.monotonicity_defect(dist);
        if defect > MONOTONE_TOL {
            return Err(Error::Constraint(format!("expected allocation decreases by {defect:e}")));
        }
        let check = matthews_feasible(self, dist, 1001);
        if !check.feasible {
            return Err(Error::Constraint(format!(
                "Matthews inequality fails at v = {} (slack {:e})",
                check.at, check.worst_slack
            )));
        }
        Ok(())
    }

    pub fn view<'a>(&'a self, dist: &'a AbilityDistribution) -> AllocationView<'a> {
        AllocationView::new(self, dist)
    }
}

/// An allocation bound to its distribution with cached prefix integrals, for
/// repeated output evaluation.
#[derive(Debug, Clone)]
pub struct AllocationView<'a> {
    pub xi: &'a ExpectedAllocation,
    pub dist: &'a AbilityDistribution,
    prefix: Vec<f64>,
}

impl<'a> AllocationView<'a> {
    fn new(xi: &'a ExpectedAllocation, dist: &'a AbilityDistribution) -> Self {
        let mut prefix = Vec::with_capacity(xi.pieces.len());
        let mut acc = 0.0;
        for s in &xi.pieces {
            prefix.push(acc);
            acc += xi.piece_integral(dist, s, s.v_lo, s.v_hi);
        }
        AllocationView { xi, dist, prefix }
    }

    pub fn value(&self, v: f64) -> f64 {
        self.xi.value(self.dist, v)
    }

    /// `∫₀^v ξ`.
    pub fn integral_to(&self, v: f64) -> f64 {
        let v = v.clamp(0.0, 1.0);
        let i = self.xi.segment_index(v);
        let s = &self.xi.pieces[i];
        self.prefix[i] + self.xi.piece_integral(self.dist, s, s.v_lo, v)
    }

    /// `β(v) = v ξ(v) − ∫₀^v ξ`.
    pub fn output(&self, v: f64) -> f64 {
        let v = v.clamp(0.0, 1.0);
        (v * self.value(v) - self.integral_to(v)).max(0.0)
    }

    /// `β(v⁻)`.
    pub fn left_output(&self, v: f64) -> f64 {
        let v = v.clamp(0.0, 1.0);
        (v * self.xi.left_value(self.dist, v) - self.integral_to(v)).max(0.0)
    }

    pub fn max_output(&self) -> f64 {
        self.output(1.0)
    }

    /// Least `v` with `β(v) ≥ b`; `None` when `b` exceeds `β(1)`.
    pub fn inverse(&self, b: f64) -> Option<f64> {
        if b <= 0.0 {
            return Some(0.0);
        }
        if self.max_output() < b {
            return None;
        }
        Some(bisect_predicate(0.0, 1.0, |v| self.output(v) >= b, 1e-14))
    }

    /// Designer objective of this contest.
    pub fn objective(&self, objective: &ThresholdObjective) -> f64 {
        let mut breaks = self.dist.breakpoints();
        breaks.extend(self.xi.breakpoints());
        let with_levels = |levels: &[f64]| {
            let mut b = breaks.clone();
            b.extend(levels.iter().filter_map(|&x| self.inverse(x)));
            b.sort_by(|x, y| x.partial_cmp(y).unwrap());
            b
        };
        match objective {
            ThresholdObjective::Binary { b } => match self.inverse(*b) {
                Some(v) => 1.0 - self.dist.cdf(v),
                None => 0.0,
            },
            ThresholdObjective::Linear { b_l, b_h } => {
                self.dist.expectation(|v| self.output(v).clamp(*b_l, *b_h), &with_levels(&[*b_l, *b_h]))
            }
            ThresholdObjective::TotalOutput => self.dist.expectation(|v| self.output(v), &with_levels(&[])),
            ThresholdObjective::Transformed { transform, .. } => {
                self.dist.expectation(|v| transform.apply(self.output(v)), &with_levels(&[]))
            }
        }
    }
}

/// Equilibrium output of a player of ability `v` under `xi`.
pub fn output_from_allocation(xi: &ExpectedAllocation, dist: &AbilityDistribution, v: f64) -> f64 {
    xi.view(dist).output(v)
}

/// Designer objective of a general contest.
pub fn general_objective(xi: &ExpectedAllocation, dist: &AbilityDistribution, objective: &ThresholdObjective) -> f64 {
    xi.view(dist).objective(objective)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatthewsCheck {
    pub feasible: bool,
    /// Minimum over the grid of `(1 − F(V)ⁿ)/n − ∫_V^1 ξ f` (unit-sum) or of
    /// `1 − ξ(V)` (unit-range).
    pub worst_slack: f64,
    pub at: f64,
}

/// Implementability check on `grid` evenly spaced abilities.
pub fn matthews_feasible(xi: &ExpectedAllocation, dist: &AbilityDistribution, grid: usize) -> MatthewsCheck {
    let mut worst = MatthewsCheck { feasible: true, worst_slack: f64::INFINITY, at: 0.0 };
    for v in linspace(0.0, 1.0, grid.max(2)) {
        let slack = match xi.regime {
            Regime::UnitSum => matthews_bound(dist.cdf(v), xi.n) - xi.mass_above(dist, v),
            Regime::UnitRange => 1.0 - xi.value(dist, v),
        };
        if slack < worst.worst_slack {
            worst.worst_slack = slack;
            worst.at = v;
        }
    }
    worst.feasible = worst.worst_slack >= -MATTHEWS_TOL;
    worst
}

/// Which optimal mechanism a [`GeneralContest`] is.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneralKind {
    BinaryOptimal {
        #[serde(rename = "B")]
        b: f64,
    },
    LinearRegularRange {
        #[serde(rename = "V")]
        v: f64,
    },
    LinearRegularSumNoSat {
        #[serde(rename = "V_L")]
        v_l: f64,
    },
    LinearRegularSumSat {
        #[serde(rename = "V_L")]
        v_l: f64,
        #[serde(rename = "V_H")]
        v_h: f64,
    },
    LinearIrregular {
        #[serde(rename = "V_L")]
        v_l: f64,
        #[serde(rename = "V_H")]
        v_h: f64,
    },
}

impl GeneralKind {
    pub fn name(&self) -> &'static str {
        match self {
            GeneralKind::BinaryOptimal { .. } => "binary_optimal",
            GeneralKind::LinearRegularRange { .. } => "linear_regular_range",
            GeneralKind::LinearRegularSumNoSat { .. } => "linear_regular_sum_no_sat",
            GeneralKind::LinearRegularSumSat { .. } => "linear_regular_sum_sat",
            GeneralKind::LinearIrregular { .. } => "linear_irregular",
        }
    }
}

/// Characteristic abilities of the regular unit-sum solution.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Characteristic {
    #[serde(rename = "V_low", default, skip_serializing_if = "Option::is_none")]
    pub v_low: Option<f64>,
    #[serde(rename = "V_mid", default, skip_serializing_if = "Option::is_none")]
    pub v_mid: Option<f64>,
    #[serde(rename = "V_up", default, skip_serializing_if = "Option::is_none")]
    pub v_up: Option<f64>,
}

/// An optimal general contest with its objective value.
#[derive(Debug, Clone)]
pub struct GeneralContest {
    pub xi: ExpectedAllocation,
    pub kind: GeneralKind,
    pub objective: f64,
    pub characteristic: Characteristic,
    pub corner_case: bool,
    pub experimental: bool,
    pub ironed: Option<IronedVirtual>,
    pub diagnostics: Vec<String>,
}

impl GeneralContest {
    pub(crate) fn new(xi: ExpectedAllocation, kind: GeneralKind, objective: f64) -> Self {
        GeneralContest {
            xi,
            kind,
            objective,
            characteristic: Characteristic::default(),
            corner_case: false,
            experimental: false,
            ironed: None,
            diagnostics: Vec::new(),
        }
    }

    pub fn v_l(&self) -> Option<f64> {
        self.xi.v_l
    }

    pub fn v_h(&self) -> Option<f64> {
        self.xi.v_h
    }

    pub fn to_json(&self) -> GeneralContestJson {
        GeneralContestJson {
            kind: self.kind.name().to_string(),
            n: self.xi.n,
            regime: self.xi.regime,
            v_l: self.xi.v_l,
            v_h: self.xi.v_h,
            b: match self.kind {
                GeneralKind::BinaryOptimal { b } => Some(b),
                _ => None,
            },
            characteristic: self.characteristic,
            xi_segments: self.xi.pieces.clone(),
            objective: self.objective,
            corner_case: self.corner_case,
            experimental: self.experimental,
            diagnostics: self.diagnostics.clone(),
        }
    }

    /// Rebuilds a contest from its JSON form. The ironing is not stored and
    /// comes back as `None`.
    pub fn from_json(j: GeneralContestJson) -> Result<Self> {
        let xi = ExpectedAllocation::new(j.xi_segments, j.n, j.regime)?.with_markers(j.v_l, j.v_h);
        let need = |x: Option<f64>, what: &str| {
            x.ok_or_else(|| Error::Constraint(format!("contest kind {} needs {what}", j.kind)))
        };
        let kind = match j.kind.as_str() {
            "binary_optimal" => GeneralKind::BinaryOptimal { b: need(j.b, "B")? },
            "linear_regular_range" => GeneralKind::LinearRegularRange { v: need(j.v_l, "V_L")? },
            "linear_regular_sum_no_sat" => GeneralKind::LinearRegularSumNoSat { v_l: need(j.v_l, "V_L")? },
            "linear_regular_sum_sat" => {
                GeneralKind::LinearRegularSumSat { v_l: need(j.v_l, "V_L")?, v_h: need(j.v_h, "V_H")? }
            }
            "linear_irregular" => GeneralKind::LinearIrregular { v_l: need(j.v_l, "V_L")?, v_h: need(j.v_h, "V_H")? },
            other => return Err(Error::Constraint(format!("unknown general contest kind {other:?}"))),
        };
        let mut c = GeneralContest::new(xi, kind, j.objective);
        c.characteristic = j.characteristic;
        c.corner_case = j.corner_case;
        c.experimental = j.experimental;
        c.diagnostics = j.diagnostics;
        Ok(c)
    }
}

/// Serialized form of a [`GeneralContest`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneralContestJson {
    pub kind: String,
    pub n: usize,
    pub regime: Regime,
    #[serde(rename = "V_L", default, skip_serializing_if = "Option::is_none")]
    pub v_l: Option<f64>,
    #[serde(rename = "V_H", default, skip_serializing_if = "Option::is_none")]
    pub v_h: Option<f64>,
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(flatten)]
    pub characteristic: Characteristic,
    pub xi_segments: Vec<Segment>,
    pub objective: f64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub corner_case: bool,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub experimental: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

impl Serialize for GeneralContest {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for GeneralContest {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = GeneralContestJson::deserialize(d)?;
        GeneralContest::from_json(j).map_err(serde::de::Error::custom)
    }
}

/// `ψ_u(v)`, with `−∞` where the density vanishes below `u`.
pub(crate) fn psi_or_floor(dist: &AbilityDistribution, u: f64, v: f64) -> f64 {
    dist.interval_virtual(u, v).unwrap_or(f64::NEG_INFINITY)
}

/// Least `v` in `[lo, hi]` where the non-decreasing `g` reaches `target`.
pub(crate) fn solve_increasing<G: Fn(f64) -> f64>(g: G, target: f64, lo: f64, hi: f64) -> f64 {
    bisect_predicate(lo, hi, |v| g(v) >= target, ROOT_TOL * 1e-3)
}
