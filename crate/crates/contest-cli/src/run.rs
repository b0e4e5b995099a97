//! The subcommands. Each returns the JSON or CSV text it wrote so `main` can
//! echo it.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;

use contest_core::general::{
    allocation_rule, optimize_binary_general, optimize_linear_irregular, optimize_linear_regular, GeneralContest,
    DEFAULT_RESOLUTION,
};
use contest_core::oracle::{best_response_regret, grid_optimal_alpha_model, grid_optimal_xi, mc_objective, ContestRef};
use contest_core::orderstats::rank_prob;
use contest_core::rank::{
    optimize_binary, optimize_linear_full, optimize_total, optimize_transformed, simple_vs_optimal,
};
use contest_core::{AbilityDistribution, OracleReport, RankContest, RankModel, Regime, SolveReport, ThresholdObjective};

use crate::config::{OracleConfig, OracleKind, RunConfig, Solver};

/// Why a command failed; the variant picks the exit status.
#[derive(Debug)]
pub enum Failure {
    /// Bad input of any kind: exit status 1.
    Input(String),
    /// A certification tolerance was violated: exit status 2.
    Certification(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 1,
            Failure::Certification(_) => 2,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Input(m) => write!(f, "{m}"),
            Failure::Certification(m) => write!(f, "certification failed: {m}"),
        }
    }
}

fn core(e: contest_core::Error) -> Failure {
    Failure::Input(e.to_string())
}

pub enum Solved {
    Rank { model: RankModel, contest: RankContest, report: SolveReport },
    General(GeneralContest),
}

impl Solved {
    fn contest_ref(&self) -> ContestRef<'_> {
        match self {
            Solved::Rank { model, contest, .. } => ContestRef::Rank { model, contest },
            Solved::General(g) => ContestRef::General(g),
        }
    }

    fn objective(&self) -> f64 {
        match self {
            Solved::Rank { report, .. } => report.objective,
            Solved::General(g) => g.objective,
        }
    }

    fn result_json(&self) -> Value {
        match self {
            Solved::Rank { report, .. } => serde_json::to_value(report),
            Solved::General(g) => serde_json::to_value(g.to_json()),
        }
        .expect("reports serialize")
    }

    fn family(&self) -> &'static str {
        match self {
            Solved::Rank { .. } => "rank",
            Solved::General(_) => "general",
        }
    }
}

pub fn solve(cfg: &RunConfig) -> Result<Solved, Failure> {
    let dist = &cfg.distribution;
    if cfg.solver.is_rank() {
        let model = RankModel::new(dist, cfg.n, cfg.regime).map_err(core)?;
        let report = match (&cfg.solver, &cfg.objective) {
            (Solver::RankBinary, ThresholdObjective::Binary { b }) => optimize_binary(&model, *b),
            (Solver::RankLinear, ThresholdObjective::Linear { b_l, b_h }) => optimize_linear_full(&model, *b_l, *b_h),
            (Solver::RankTotal, _) => Ok(optimize_total(&model)),
            (Solver::RankTransformed, ThresholdObjective::Transformed { transform, shape }) => {
                optimize_transformed(&model, transform.clone(), *shape)
            }
            _ => unreachable!("solver and objective are checked when the config loads"),
        }
        .map_err(core)?;
        let contest = model.contest(&report.alpha).map_err(core)?;
        return Ok(Solved::Rank { model, contest, report });
    }
    let contest = match (&cfg.solver, &cfg.objective) {
        (Solver::GeneralBinary, ThresholdObjective::Binary { b }) => optimize_binary_general(dist, cfg.n, cfg.regime, *b),
        (Solver::GeneralLinear, ThresholdObjective::Linear { b_l, b_h }) => {
            optimize_linear_regular(dist, cfg.n, cfg.regime, *b_l, *b_h)
        }
        (Solver::GeneralIrregular, ThresholdObjective::Linear { b_l, b_h }) => {
            let res = cfg.search_resolution.unwrap_or(DEFAULT_RESOLUTION);
            optimize_linear_irregular(dist, cfg.n, cfg.regime, *b_l, *b_h, res)
        }
        _ => unreachable!("solver and objective are checked when the config loads"),
    }
    .map_err(core)?;
    Ok(Solved::General(contest))
}

/// Oracle used by `verify` when the config names none.
fn default_oracle(cfg: &RunConfig) -> OracleConfig {
    let kind = if cfg.solver.is_rank() {
        OracleKind::GridAlpha
    } else if cfg.regime == Regime::UnitSum {
        OracleKind::GridXi
    } else {
        OracleKind::MonteCarlo
    };
    OracleConfig { kind, resolution: None, cells: None, samples: None, seed: None, deviation_grid: None, tolerance: None }
}

#[derive(Debug, Clone, Serialize)]
pub struct Certification {
    #[serde(flatten)]
    pub report: OracleReport,
    pub tolerance: f64,
    pub certified: bool,
}

fn certify(cfg: &RunConfig, oracle: &OracleConfig, solved: &Solved, seed: Option<u64>) -> Result<Certification, Failure> {
    let dist = &cfg.distribution;
    let seed = seed.or(oracle.seed).unwrap_or(0);
    let samples = oracle.samples.unwrap_or(10_000);
    let (report, tolerance, certified) = match oracle.kind {
        OracleKind::GridAlpha => {
            let Solved::Rank { model, .. } = solved else { unreachable!("checked when the config loads") };
            let r = grid_optimal_alpha_model(model, &cfg.objective, oracle.resolution.unwrap_or(0.02))
                .map_err(core)?
                .against(solved.objective());
            let tol = oracle.tolerance.unwrap_or(1e-4);
            let ok = r.gap >= -tol;
            (r, tol, ok)
        }
        OracleKind::GridXi => {
            let r = grid_optimal_xi(dist, cfg.n, &cfg.objective, oracle.cells.unwrap_or(128))
                .map_err(core)?
                .against(solved.objective());
            let tol = oracle.tolerance.unwrap_or(2e-3);
            let ok = r.gap >= -tol;
            (r, tol, ok)
        }
        OracleKind::MonteCarlo => {
            let r = mc_objective(dist, solved.contest_ref(), &cfg.objective, samples, seed).map_err(core)?;
            let tol = oracle.tolerance.unwrap_or(3.0 * r.standard_error.unwrap_or(0.0));
            let ok = r.gap.abs() <= tol;
            (r, tol, ok)
        }
        OracleKind::Regret => {
            let grid = oracle.deviation_grid.unwrap_or(200);
            let r = best_response_regret(dist, solved.contest_ref(), samples, grid, seed).map_err(core)?;
            let tol = oracle.tolerance.unwrap_or(5e-3);
            let ok = r.regret <= tol;
            (r, tol, ok)
        }
    };
    Ok(Certification { report, tolerance, certified })
}

#[derive(Serialize)]
struct SolveDocument<'a> {
    solver: &'a str,
    family: &'a str,
    result: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<Certification>,
}

fn solver_name(s: Solver) -> &'static str {
    match s {
        Solver::RankBinary => "rank-binary",
        Solver::RankLinear => "rank-linear",
        Solver::RankTotal => "rank-total",
        Solver::RankTransformed => "rank-transformed",
        Solver::GeneralBinary => "general-binary",
        Solver::GeneralLinear => "general-linear",
        Solver::GeneralIrregular => "general-irregular",
    }
}

fn pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("documents serialize");
    s.push('\n');
    s
}

/// Solve, and certify when the config asks for an oracle. The document is
/// returned even when certification fails.
pub fn run_solve(cfg: &RunConfig, seed: Option<u64>) -> Result<(String, Option<Failure>), Failure> {
    let solved = solve(cfg)?;
    let oracle = cfg.oracle.as_ref().map(|o| certify(cfg, o, &solved, seed)).transpose()?;
    let failure = oracle.as_ref().filter(|c| !c.certified).map(|c| {
        Failure::Certification(format!("{} gap {:e}, tolerance {:e}", c.report.oracle, c.report.gap, c.tolerance))
    });
    let doc = SolveDocument {
        solver: solver_name(cfg.solver),
        family: solved.family(),
        result: solved.result_json(),
        oracle,
    };
    Ok((pretty(&doc), failure))
}

pub fn run_verify(cfg: &RunConfig, seed: Option<u64>) -> Result<(String, Option<Failure>), Failure> {
    let solved = solve(cfg)?;
    let oracle = cfg.oracle.clone().unwrap_or_else(|| default_oracle(cfg));
    let c = certify(cfg, &oracle, &solved, seed)?;
    let failure = (!c.certified).then(|| {
        let value = if oracle.kind == OracleKind::Regret { c.report.regret } else { c.report.gap };
        Failure::Certification(format!("{} measured {value:e}, tolerance {:e}", c.report.oracle, c.tolerance))
    });
    Ok((pretty(&c), failure))
}

/// Prize shares when every player's rank is known; ties share their slots.
fn rank_shares(contest: &RankContest, profile: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..profile.len()).collect();
    order.sort_by(|&a, &b| profile[b].total_cmp(&profile[a]));
    let mut shares = vec![0.0; profile.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && profile[order[end]] == profile[order[start]] {
            end += 1;
        }
        let each = contest.prizes[start..end].iter().sum::<f64>() / (end - start) as f64;
        for &i in &order[start..end] {
            shares[i] = each;
        }
        start = end;
    }
    shares
}

#[derive(Serialize)]
struct AllocationDocument<'a> {
    solver: &'a str,
    profiles: &'a [Vec<f64>],
    shares: Vec<Vec<f64>>,
}

pub fn run_allocate(cfg: &RunConfig, profiles: &[Vec<f64>]) -> Result<String, Failure> {
    for (k, p) in profiles.iter().enumerate() {
        if p.len() != cfg.n {
            return Err(Failure::Input(format!("profile {} has {} abilities, n = {}", k + 1, p.len(), cfg.n)));
        }
        if let Some(v) = p.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Failure::Input(format!("profile {} has ability {v} outside [0, 1]", k + 1)));
        }
    }
    let solved = solve(cfg)?;
    let shares = profiles
        .iter()
        .map(|p| match &solved {
            Solved::Rank { contest, .. } => Ok(rank_shares(contest, p)),
            Solved::General(g) => allocation_rule(g, &cfg.distribution, p).map_err(core),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(pretty(&AllocationDocument { solver: solver_name(cfg.solver), profiles, shares }))
}

/// Reads one profile per line; a first line that is not numeric is a header.
pub fn parse_profiles(text: &str, source: &str) -> Result<Vec<Vec<f64>>, Failure> {
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parsed: Result<Vec<f64>, _> = line.split(',').map(|x| x.trim().parse::<f64>()).collect();
        match parsed {
            Ok(p) => out.push(p),
            Err(_) if k == 0 => {}
            Err(e) => return Err(Failure::Input(format!("{source}:{}: {e}", k + 1))),
        }
    }
    Ok(out)
}

/// 17 significant digits, independent of locale.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub const CURVE_POINTS: usize = 1001;

pub fn run_curve(cfg: &RunConfig) -> Result<String, Failure> {
    let solved = solve(cfg)?;
    let dist = &cfg.distribution;
    let mut csv = String::from("v,F,f,beta,xi,psi\n");
    for k in 0..CURVE_POINTS {
        let v = k as f64 / (CURVE_POINTS - 1) as f64;
        let (beta, xi) = match &solved {
            Solved::Rank { model, contest, .. } => {
                let xi = contest
                    .prizes
                    .iter()
                    .enumerate()
                    .map(|(j, w)| w * rank_prob(dist, cfg.n, j + 1, v).unwrap_or(0.0))
                    .sum::<f64>();
                (model.equilibrium_output(contest, v), xi)
            }
            Solved::General(g) => (g.xi.view(dist).output(v), g.xi.value(dist, v)),
        };
        let psi = dist.virtual_ability(v).map(num).unwrap_or_default();
        writeln!(csv, "{},{},{},{},{},{psi}", num(v), num(dist.cdf(v)), num(dist.pdf(v)), num(beta), num(xi))
            .expect("writing to a string");
    }
    Ok(csv)
}

#[derive(Serialize)]
struct BatteryEntry {
    distribution: &'static str,
    n: usize,
    objective: ThresholdObjective,
    solver_objective: f64,
    oracle_objective: f64,
    gap: f64,
    best_simple: f64,
    ratio: f64,
}

#[derive(Serialize)]
struct BatteryDocument {
    regime: Regime,
    resolution: f64,
    tolerance: f64,
    entries: Vec<BatteryEntry>,
    worst_gap: f64,
    max_ratio: f64,
    passed: bool,
}

pub const BATTERY_RESOLUTION: f64 = 0.02;
pub const BATTERY_TOLERANCE: f64 = 1e-4;

/// Three distributions, n ∈ {2, 3, 5} and four threshold objectives; each
/// rank-order optimum against the α-lattice oracle and the best simple contest.
pub fn run_battery() -> Result<(String, Option<Failure>), Failure> {
    let dists = [
        ("uniform", AbilityDistribution::Uniform),
        ("power2", AbilityDistribution::power(2.0).map_err(core)?),
        ("bimodal", AbilityDistribution::bimodal()),
    ];
    let objectives = [
        ThresholdObjective::binary(0.05).map_err(core)?,
        ThresholdObjective::binary(0.1).map_err(core)?,
        ThresholdObjective::linear(0.0, 0.1).map_err(core)?,
        ThresholdObjective::linear(0.02, 0.1).map_err(core)?,
    ];
    let mut entries = Vec::new();
    for (name, dist) in &dists {
        for n in [2, 3, 5] {
            let model = RankModel::new(dist, n, Regime::UnitSum).map_err(core)?;
            for objective in &objectives {
                let (solver_objective, ratio) = match *objective {
                    ThresholdObjective::Binary { b } => (optimize_binary(&model, b).map_err(core)?.objective, 1.0),
                    ThresholdObjective::Linear { b_l, b_h } => (
                        optimize_linear_full(&model, b_l, b_h).map_err(core)?.objective,
                        simple_vs_optimal(&model, b_l, b_h).map_err(core)?,
                    ),
                    _ => unreachable!("battery objectives are thresholds"),
                };
                let best_simple = (1..n)
                    .map(|j| {
                        let mut e = vec![0.0; n - 1];
                        e[j - 1] = 1.0;
                        model.objective(&e, objective)
                    })
                    .fold(f64::NEG_INFINITY, f64::max);
                let oracle = grid_optimal_alpha_model(&model, objective, BATTERY_RESOLUTION)
                    .map_err(core)?
                    .against(solver_objective);
                entries.push(BatteryEntry {
                    distribution: name,
                    n,
                    objective: objective.clone(),
                    solver_objective,
                    oracle_objective: oracle.oracle_objective,
                    gap: oracle.gap,
                    best_simple,
                    ratio,
                });
            }
        }
    }
    let worst_gap = entries.iter().map(|e| e.gap).fold(f64::INFINITY, f64::min);
    let max_ratio = entries.iter().map(|e| e.ratio).fold(1.0, f64::max);
    let passed = worst_gap >= -BATTERY_TOLERANCE;
    let doc = BatteryDocument {
        regime: Regime::UnitSum,
        resolution: BATTERY_RESOLUTION,
        tolerance: BATTERY_TOLERANCE,
        entries,
        worst_gap,
        max_ratio,
        passed,
    };
    let failure = (!passed).then(|| Failure::Certification(format!("worst battery gap {worst_gap:e}")));
    Ok((pretty(&doc), failure))
}
