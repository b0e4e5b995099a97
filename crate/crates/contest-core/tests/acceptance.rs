//! Acceptance criteria 1–8. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use contest_core::general::{
    eta, matthews_feasible, optimize_binary_general, optimize_linear_irregular, optimize_linear_regular,
    GeneralContest, DEFAULT_RESOLUTION,
};
use contest_core::oracle::{
    best_response_regret, best_response_regret_shifted, grid_optimal_alpha_model, grid_optimal_xi, ContestRef,
};
use contest_core::orderstats::{beta_simple, expected_equal_split, order_pdf};
use contest_core::rank::{optimize_binary, optimize_linear_full, optimize_linear_upper, simple_vs_optimal};
use contest_core::{AbilityDistribution, RankModel, Regime, ThresholdObjective};

/// Upper threshold of the uniform n = 3 example: β of the mixed contest at 2/3.
const EXAMPLE_B_H: f64 = 13.0 / 81.0;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new() -> Self {
        Outcome { pass: true, detail: String::new() }
    }

    /// Records a failed check; the first few are kept for the report.
    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            if self.pass || self.detail.matches(';').count() < 4 {
                if !self.detail.is_empty() {
                    self.detail.push_str("; ");
                }
                self.detail.push_str(&what());
            }
            self.pass = false;
        }
    }

    fn within(&mut self, label: &str, value: f64, target: f64, tol: f64) {
        self.check((value - target).abs() <= tol, || format!("{label} = {value} not within {tol:e} of {target}"));
    }

    fn limit(&mut self, started: Instant, budget: Duration) {
        let spent = started.elapsed();
        self.check(spent < budget, || format!("runtime {spent:.1?} over {budget:?}"));
    }
}

fn distributions() -> Vec<(&'static str, AbilityDistribution)> {
    vec![
        ("uniform", AbilityDistribution::Uniform),
        ("power2", AbilityDistribution::power(2.0).unwrap()),
        ("bimodal", AbilityDistribution::bimodal()),
    ]
}

fn battery_objectives() -> Vec<ThresholdObjective> {
    vec![
        ThresholdObjective::binary(0.05).unwrap(),
        ThresholdObjective::binary(0.1).unwrap(),
        ThresholdObjective::linear(0.0, 0.1).unwrap(),
        ThresholdObjective::linear(0.02, 0.1).unwrap(),
    ]
}

fn rank_solve(model: &RankModel, objective: &ThresholdObjective) -> contest_core::SolveReport {
    match *objective {
        ThresholdObjective::Binary { b } => optimize_binary(model, b).unwrap(),
        ThresholdObjective::Linear { b_l, b_h } => optimize_linear_full(model, b_l, b_h).unwrap(),
        _ => unreachable!("battery objectives are threshold objectives"),
    }
}

fn criterion_1() -> Outcome {
    let started = Instant::now();
    let mut out = Outcome::new();
    let model = RankModel::new(&AbilityDistribution::Uniform, 3, Regime::UnitSum).unwrap();
    let lin = ThresholdObjective::linear(0.0, EXAMPLE_B_H).unwrap();
    out.within("simple j=1", model.objective(&[1.0, 0.0], &lin), 0.0857, 5e-4);
    out.within("simple j=2", model.objective(&[0.0, 1.0], &lin), 0.08333, 5e-4);
    out.within("mixed", model.objective(&[0.5, 0.5], &lin), 0.0864, 5e-4);
    out.within("beta_1 inverse", model.inverse(&[1.0, 0.0], EXAMPLE_B_H).unwrap_or(f64::NAN), 0.6221, 5e-4);
    out.within("mixed inverse", model.inverse(&[0.5, 0.5], EXAMPLE_B_H).unwrap_or(f64::NAN), 2.0 / 3.0, 1e-6);
    let up = optimize_linear_upper(&model, EXAMPLE_B_H).unwrap();
    out.within("upper alpha_1", up.alpha[0], 0.5, 1e-3);
    out.within("upper alpha_2", up.alpha[1], 0.5, 1e-3);
    out.check(up.objective >= 0.0864 - 1e-4, || format!("upper objective {}", up.objective));
    out.limit(started, Duration::from_secs(5));
    out
}

fn criterion_2() -> Outcome {
    let started = Instant::now();
    let mut out = Outcome::new();
    let mut worst = f64::INFINITY;
    for (name, dist) in distributions() {
        for n in [2, 3, 5] {
            let model = RankModel::new(&dist, n, Regime::UnitSum).unwrap();
            for objective in battery_objectives() {
                let solver = rank_solve(&model, &objective).objective;
                let oracle = grid_optimal_alpha_model(&model, &objective, 0.02).unwrap().against(solver);
                worst = worst.min(oracle.gap);
                out.check(oracle.gap >= -1e-4, || format!("{name} n={n} {objective:?}: gap {:e}", oracle.gap));
            }
        }
    }
    out.detail = format!("worst gap {worst:.2e}{}{}", if out.detail.is_empty() { "" } else { "; " }, out.detail);
    out.limit(started, Duration::from_secs(600));
    out
}

fn criterion_3() -> Outcome {
    let started = Instant::now();
    let mut out = Outcome::new();
    let dists = distributions();
    let mut largest = 0.0f64;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (name, dist) = &dists[(rng.random::<f64>() * 3.0) as usize % 3];
        let n = 2 + (rng.random::<f64>() * 5.0) as usize % 5;
        let regime = if rng.random::<f64>() < 0.5 { Regime::UnitSum } else { Regime::UnitRange };
        let b_h = 0.02 + 0.38 * rng.random::<f64>();
        let b_l = if rng.random::<f64>() < 0.5 { 0.0 } else { 0.5 * b_h * rng.random::<f64>() };
        let model = RankModel::new(dist, n, regime).unwrap();
        let ratio = simple_vs_optimal(&model, b_l, b_h).unwrap();
        largest = largest.max(ratio);
        out.check((1.0..=2.0 + 1e-6).contains(&ratio), || {
            format!("seed {seed} ({name}, n={n}, {regime:?}, {b_l:.4}, {b_h:.4}): ratio {ratio}")
        });
    }
    out.check(largest > 1.005, || format!("no ratio above 1.005 (largest {largest})"));
    out.detail = format!("largest ratio {largest:.5}{}{}", if out.detail.is_empty() { "" } else { "; " }, out.detail);
    out.limit(started, Duration::from_secs(600));
    out
}

fn criterion_4() -> Outcome {
    let started = Instant::now();
    let mut out = Outcome::new();
    let u = AbilityDistribution::Uniform;
    let b = 0.25;
    let sum = optimize_binary_general(&u, 2, Regime::UnitSum, b).unwrap();
    let v = sum.v_l().unwrap();
    out.within("unit-sum reserve", v, 0.366025, 1e-6);
    out.within("B − V η(F(V))", b - v * eta(u.cdf(v), 2), 0.0, 1e-10);
    let range = optimize_binary_general(&u, 2, Regime::UnitRange, b).unwrap();
    out.within("unit-range reserve", range.v_l().unwrap(), b, 0.0);
    let view = range.xi.view(&u);
    for k in 0..=1000 {
        let v = b + (1.0 - b) * k as f64 / 1000.0;
        out.within("unit-range output", view.output(v), b, 1e-8);
    }
    out.limit(started, Duration::from_secs(60));
    out
}

fn general_checks(out: &mut Outcome, label: &str, c: &GeneralContest, dist: &AbilityDistribution, b_h: f64) {
    let max = c.xi.view(dist).max_output();
    out.check(max <= b_h + 1e-8, || format!("{label}: max output {max} above B_H {b_h}"));
    let slack = matthews_feasible(&c.xi, dist, 1001).worst_slack;
    out.check(slack >= -1e-8, || format!("{label}: Matthews slack {slack:e}"));
}

fn criterion_5() -> Outcome {
    let started = Instant::now();
    let mut out = Outcome::new();
    let u = AbilityDistribution::Uniform;
    let myerson = optimize_linear_regular(&u, 2, Regime::UnitSum, 0.0, 1.0).unwrap();
    out.within("Myerson reserve", myerson.v_l().unwrap_or(f64::NAN), 0.5, 1e-6);
    let dists = [("uniform", u.clone()), ("power2", AbilityDistribution::power(2.0).unwrap())];
    let mut worst = f64::INFINITY;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let (name, dist) = &dists[seed as usize % 2];
        let n = 2 + (rng.random::<f64>() * 4.0) as usize % 4;
        let b_h = 0.05 + 0.55 * rng.random::<f64>();
        let b_l = 0.5 * b_h * rng.random::<f64>();
        let label = format!("seed {seed} ({name}, n={n}, {b_l:.4}, {b_h:.4})");
        let c = optimize_linear_regular(dist, n, Regime::UnitSum, b_l, b_h).unwrap();
        let objective = ThresholdObjective::linear(b_l, b_h).unwrap();
        let oracle = grid_optimal_xi(dist, n, &objective, 128).unwrap().against(c.objective);
        worst = worst.min(oracle.gap);
        out.check(oracle.gap >= -2e-3, || format!("{label}: gap {:e}", oracle.gap));
        general_checks(&mut out, &label, &c, dist, b_h);
    }
    out.detail = format!("worst gap {worst:.2e}{}{}", if out.detail.is_empty() { "" } else { "; " }, out.detail);
    out.limit(started, Duration::from_secs(600));
    out
}

fn criterion_6() -> Outcome {
    let started = Instant::now();
    let mut out = Outcome::new();
    let bimodal = AbilityDistribution::bimodal();
    for (lo, hi) in [(0.0, 1.0), (0.1, 0.9), (0.3, 0.8)] {
        let iv = bimodal.iron(lo, hi, 4096).unwrap();
        let last = iv.knots.len() - 1;
        out.within("H̄ − H at lower end", iv.cum_bar[0] - iv.cum[0], 0.0, 1e-10);
        out.within("H̄ − H at upper end", iv.cum_bar[last] - iv.cum[last], 0.0, 1e-10);
        let above = iv.cum_bar.iter().zip(&iv.cum).map(|(b, h)| b - h).fold(f64::NEG_INFINITY, f64::max);
        out.check(above <= 1e-12, || format!("H̄ exceeds H by {above:e} on [{lo}, {hi}]"));
        let drop = iv.slope_bar.windows(2).map(|w| w[0] - w[1]).fold(f64::NEG_INFINITY, f64::max);
        out.check(drop <= 1e-9, || format!("h̄ decreases by {drop:e} on [{lo}, {hi}]"));
    }
    out.check(bimodal.iron(0.0, 1.0, 4096).unwrap().is_ironed(), || "bimodal ironing has no flat".into());

    let mut worst = f64::INFINITY;
    for n in [2, 3, 5] {
        for (b_l, b_h) in [(0.0, 0.1), (0.02, 0.1), (0.05, 0.3), (0.0, 0.5), (0.2, 0.6)] {
            let label = format!("bimodal n={n} ({b_l}, {b_h})");
            let c = optimize_linear_irregular(&bimodal, n, Regime::UnitSum, b_l, b_h, DEFAULT_RESOLUTION).unwrap();
            let objective = ThresholdObjective::linear(b_l, b_h).unwrap();
            let oracle = grid_optimal_xi(&bimodal, n, &objective, 128).unwrap().against(c.objective);
            worst = worst.min(oracle.gap);
            out.check(oracle.gap >= -2e-3, || format!("{label}: gap {:e}", oracle.gap));
            general_checks(&mut out, &label, &c, &bimodal, b_h);
        }
    }
    let c = optimize_linear_irregular(&bimodal, 2, Regime::UnitSum, 0.05, 0.3, DEFAULT_RESOLUTION).unwrap();
    let objective = ThresholdObjective::linear(0.05, 0.3).unwrap();
    let oracle = grid_optimal_xi(&bimodal, 2, &objective, 64).unwrap().against(c.objective);
    out.check(oracle.gap >= -2e-3, || format!("bimodal at 64 cells: gap {:e}", oracle.gap));

    let mut regular_gap = 0.0f64;
    for (name, dist) in [("uniform", AbilityDistribution::Uniform), ("power2", AbilityDistribution::power(2.0).unwrap())] {
        for n in [2, 3, 5] {
            for (b_l, b_h) in [(0.0, 1.0), (0.02, 0.1), (0.05, 0.3), (0.0, 0.5)] {
                let reg = optimize_linear_regular(&dist, n, Regime::UnitSum, b_l, b_h).unwrap();
                let irr = optimize_linear_irregular(&dist, n, Regime::UnitSum, b_l, b_h, DEFAULT_RESOLUTION).unwrap();
                let diff = (reg.objective - irr.objective).abs();
                regular_gap = regular_gap.max(diff);
                out.check(diff <= 2.0 / 256.0, || format!("{name} n={n} ({b_l}, {b_h}): differs by {diff:e}"));
            }
        }
    }
    out.detail = format!(
        "worst oracle gap {worst:.2e}, largest regular difference {regular_gap:.2e}{}{}",
        if out.detail.is_empty() { "" } else { "; " },
        out.detail
    );
    out.limit(started, Duration::from_secs(900));
    out
}

fn criterion_7() -> Outcome {
    let started = Instant::now();
    let mut out = Outcome::new();
    let (mut worst, mut weakest) = (0.0f64, f64::INFINITY);
    for (name, dist) in distributions() {
        for n in [2, 3, 5] {
            let model = RankModel::new(&dist, n, Regime::UnitSum).unwrap();
            for objective in battery_objectives() {
                let report = rank_solve(&model, &objective);
                let contest = model.contest(&report.alpha).unwrap();
                let at = ContestRef::Rank { model: &model, contest: &contest };
                let honest = best_response_regret(&dist, at, 10_000, 200, 7).unwrap().regret;
                let shifted = best_response_regret_shifted(&dist, at, 10_000, 200, 7, 0.05).unwrap().regret;
                worst = worst.max(honest);
                weakest = weakest.min(shifted);
                out.check(honest <= 5e-3, || format!("{name} n={n} {objective:?}: regret {honest:e}"));
                out.check(shifted >= 1e-2, || format!("{name} n={n} {objective:?}: shifted regret {shifted:e}"));
            }
        }
    }
    out.detail = format!(
        "largest regret {worst:.2e}, smallest perturbed regret {weakest:.2e}{}{}",
        if out.detail.is_empty() { "" } else { "; " },
        out.detail
    );
    out.limit(started, Duration::from_secs(600));
    out
}

/// Σ_k C(n−1, k) F(a)^{n−1−k} (F(b) − F(a))^k / (k + 1), built term by term.
fn binomial_split(n: usize, fa: f64, fb: f64) -> f64 {
    let mut coeff = 1.0;
    let mut total = 0.0;
    for k in 0..n {
        if k > 0 {
            coeff *= (n - k) as f64 / k as f64;
        }
        total += coeff * fa.powi((n - 1 - k) as i32) * (fb - fa).powi(k as i32) / (k + 1) as f64;
    }
    total
}

fn criterion_8() -> Outcome {
    let started = Instant::now();
    let mut out = Outcome::new();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let dists = distributions();
    for trial in 0..100 {
        let (_, dist) = &dists[trial % 3];
        let (x, y) = (rng.random::<f64>(), rng.random::<f64>());
        let (a, b) = (x.min(y), x.max(y));
        if dist.cdf(b) - dist.cdf(a) < 1e-9 {
            continue;
        }
        for n in 1..=10 {
            let closed = expected_equal_split(dist, n, a, b).unwrap();
            let sum = binomial_split(n, dist.cdf(a), dist.cdf(b));
            out.check((closed - sum).abs() <= 1e-12, || format!("equal split n={n} ({a}, {b}): {closed} vs {sum}"));
        }
    }
    for (name, dist) in &dists {
        for n in 2..=8 {
            for j in 1..n {
                for k in 0..=20 {
                    let v = k as f64 / 20.0;
                    let s = beta_simple(dist, n, j, Regime::UnitSum, v).unwrap();
                    let r = beta_simple(dist, n, j, Regime::UnitRange, v).unwrap();
                    out.check((r - j as f64 * s).abs() <= 1e-10, || format!("{name} n={n} j={j} v={v}: β_R {r}, jβ_S {}", j as f64 * s));
                }
            }
        }
    }
    for (name, dist) in &dists {
        for n in 3..=8 {
            let m = n - 1;
            let kernels: Vec<Vec<f64>> = (1..=m)
                .map(|j| (1..1000).map(|k| k as f64 / 1000.0).map(|t| t * order_pdf(dist, m, j, t).unwrap()).collect())
                .collect();
            for i in 0..m {
                for j in i + 1..m {
                    let changes = sign_changes(kernels[i].iter().zip(&kernels[j]).map(|(a, b)| a - b));
                    out.check(changes <= 1, || format!("{name} n={n} kernels {},{}: {changes} sign changes", i + 1, j + 1));
                }
            }
        }
    }
    out.limit(started, Duration::from_secs(120));
    out
}

/// Sign changes in a sequence, ignoring values indistinguishable from zero.
fn sign_changes(values: impl Iterator<Item = f64>) -> usize {
    let mut last = 0i8;
    let mut changes = 0;
    for d in values {
        let s = if d > 1e-12 {
            1
        } else if d < -1e-12 {
            -1
        } else {
            0
        };
        if s != 0 {
            if last != 0 && s != last {
                changes += 1;
            }
            last = s;
        }
    }
    changes
}

fn main() -> ExitCode {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 8] = [
        ("worked example reproduction", criterion_1),
        ("rank-order oracle dominance battery", criterion_2),
        ("simple contest two-approximation", criterion_3),
        ("general binary contest", criterion_4),
        ("general linear threshold, regular", criterion_5),
        ("irregular pipeline", criterion_6),
        ("equilibrium certification", criterion_7),
        ("identity suite", criterion_8),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let outcome = run();
        let status = if outcome.pass { "PASS" } else { "FAIL" };
        let detail = if outcome.detail.is_empty() { String::new() } else { format!(" ({})", outcome.detail) };
        println!("criterion {}: {status} {name} [{:.1?}]{detail}", k + 1, started.elapsed());
        if !outcome.pass {
            failed += 1;
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
