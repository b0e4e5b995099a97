//! Rank-order optimizers. Each enumerates the finite candidate set the
//! optimum is known to lie in and re-scores every candidate with the common
//! objective evaluator, so candidates are compared on equal footing.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{prizes_from_alpha, RankModel, Shape, ThresholdObjective, Transform};
use crate::error::{Error, Result};
use crate::numeric::{bisect_predicate, integrate, project_simplex, BRACKET_STEP, ROOT_TOL};
use crate::orderstats::{order_pdf, Regime};
use crate::report::SolveReport;

/// Objectives closer than this are treated as tied.
const TIE_TOL: f64 = 1e-9;
/// Relative size below which an integral difference counts as zero.
const SIGN_TOL: f64 = 1e-10;
const SIMPLEX_SLACK: f64 = 1e-9;

#[derive(Debug, Clone)]
struct Candidate {
    alpha: Vec<f64>,
    objective: f64,
}

fn support_of(alpha: &[f64]) -> Vec<usize> {
    alpha.iter().enumerate().filter(|(_, &a)| a > 0.0).map(|(j, _)| j + 1).collect()
}

fn unit(m: usize, j: usize) -> Vec<f64> {
    let mut a = vec![0.0; m];
    a[j - 1] = 1.0;
    a
}

/// Highest objective; within [`TIE_TOL`] the lexicographically smallest
/// support wins and the tie is described.
fn pick_best(candidates: Vec<Candidate>) -> (Candidate, Option<String>) {
    let top = candidates.iter().map(|c| c.objective).fold(f64::NEG_INFINITY, f64::max);
    let mut tied: Vec<&Candidate> = candidates.iter().filter(|c| c.objective >= top - TIE_TOL).collect();
    tied.sort_by_key(|c| support_of(&c.alpha));
    let best = tied[0].clone();
    let mut supports: Vec<Vec<usize>> = tied.iter().map(|c| support_of(&c.alpha)).collect();
    supports.dedup();
    let note = (supports.len() > 1).then(|| {
        format!("{} supports tie within {TIE_TOL:e}: {supports:?}; returned {:?}", supports.len(), supports[0])
    });
    (best, note)
}

fn report(model: &RankModel, solver: &str, alpha: Vec<f64>, objective: f64) -> SolveReport {
    let prizes = prizes_from_alpha(model.regime, &alpha);
    SolveReport::new(solver, model.n, model.regime, alpha, prizes, objective)
}

fn score(model: &RankModel, alpha: Vec<f64>, objective: &ThresholdObjective) -> Candidate {
    let value = model.objective(&alpha, objective);
    Candidate { alpha, objective: value }
}

/// Optimum for the binary threshold: the simple contest whose
/// output reaches `B` at the lowest ability.
pub fn optimize_binary(model: &RankModel, b: f64) -> Result<SolveReport> {
    ThresholdObjective::binary(b)?;
    let m = model.n - 1;
    let mut best: Option<(usize, f64)> = None;
    for j in 1..=m {
        if let Some(v) = model.simple(j).inverse(b) {
            if best.is_none_or(|(_, bv)| v < bv) {
                best = Some((j, v));
            }
        }
    }
    let Some((j, v)) = best else {
        let mut r = report(model, "rank-binary", unit(m, 1), 0.0);
        r.j_star = Some(1);
        r.infeasible = true;
        r.diagnostics.push(format!("every simple contest stays below B = {b}"));
        return Ok(r);
    };
    let mut r = report(model, "rank-binary", unit(m, j), 1.0 - model.dist.cdf(v));
    r.j_star = Some(j);
    r.v_b = Some(v);
    Ok(r)
}

/// `j ∫ x f_{n,j+1}(x) dx` for `j = 1..n−1`; the unit-range total-output
/// optimum is the argmax.
pub fn total_output_scores(model: &RankModel) -> Vec<f64> {
    let d = &model.dist;
    let n = model.n;
    (1..n)
        .map(|j| {
            let mean = integrate(
                |x| if x <= 0.0 { 0.0 } else { x * order_pdf(d, n, j + 1, x).unwrap_or(0.0) },
                0.0,
                1.0,
                &d.breakpoints(),
            );
            j as f64 * mean
        })
        .collect()
}

pub fn optimize_total(model: &RankModel) -> SolveReport {
    let m = model.n - 1;
    let j = match model.regime {
        Regime::UnitSum => 1,
        Regime::UnitRange => {
            let scores = total_output_scores(model);
            let mut best = 0;
            for (k, s) in scores.iter().enumerate() {
                if *s > scores[best] {
                    best = k;
                }
            }
            best + 1
        }
    };
    let alpha = unit(m, j);
    let value = model.objective(&alpha, &ThresholdObjective::TotalOutput);
    let mut r = report(model, "rank-total", alpha, value);
    r.j_star = Some(j);
    r
}

/// Sign of `x` relative to `scale`, with a dead band for rounding noise.
fn rel_sign(x: f64, scale: f64) -> i8 {
    let band = SIGN_TOL * scale.abs() + 1e-300;
    if x > band {
        1
    } else if x < -band {
        -1
    } else {
        0
    }
}

fn grid_points() -> Vec<f64> {
    let cells = (1.0 / BRACKET_STEP).round() as usize;
    (0..=cells).map(|k| k as f64 / cells as f64).collect()
}

/// `G_i − G_j` with its natural scale.
fn integral_gap(model: &RankModel, i: usize, j: usize, v: f64) -> (f64, f64) {
    let (gi, gj) = (model.simple(i).cumulative(v), model.simple(j).cumulative(v));
    (gi - gj, gi + gj)
}

/// Positive ability where `∫₀^V β_i f = ∫₀^V β_j f`. When the solutions form
/// an interval its midpoint is returned.
fn equal_integral_point(model: &RankModel, i: usize, j: usize) -> Option<f64> {
    let sign = |v: f64| {
        let (d, s) = integral_gap(model, i, j, v);
        rel_sign(d, s)
    };
    let grid = grid_points();
    let signs: Vec<i8> = grid.iter().map(|&v| sign(v)).collect();
    let first_neg = signs.iter().position(|&s| s < 0)?;
    let first_pos = signs[first_neg..].iter().position(|&s| s > 0).map(|k| k + first_neg);
    let last_neg = match first_pos {
        Some(p) => (first_neg..p).rev().find(|&k| signs[k] < 0)?,
        None => (first_neg..signs.len()).rev().find(|&k| signs[k] < 0)?,
    };
    if last_neg + 1 >= grid.len() {
        return None;
    }
    let a = bisect_predicate(grid[last_neg], grid[last_neg + 1], |v| sign(v) >= 0, ROOT_TOL);
    let b = match first_pos {
        Some(p) => bisect_predicate(grid[p - 1], grid[p], |v| sign(v) > 0, ROOT_TOL),
        // The gap closes exactly at the top of the support and nowhere else.
        None if signs[signs.len() - 1] == 0 => 1.0,
        None => return None,
    };
    Some(0.5 * (a + b))
}

/// Best contest for `B_L = 0`: a simple contest or a two-index mixture
/// whose output reaches `B_H` where the two simple integrals agree.
pub fn optimize_linear_upper(model: &RankModel, b_h: f64) -> Result<SolveReport> {
    let objective = ThresholdObjective::linear(0.0, b_h)?;
    let m = model.n - 1;
    let mut candidates: Vec<Candidate> = (1..=m).map(|j| score(model, unit(m, j), &objective)).collect();
    let pairs: Vec<(usize, usize)> = (1..=m).flat_map(|i| (i + 1..=m).map(move |j| (i, j))).collect();
    let mixed: Vec<Option<Candidate>> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let v = equal_integral_point(model, i, j)?;
            let (bi, bj) = (model.simple(i).beta(v), model.simple(j).beta(v));
            if !(bi >= b_h && b_h >= bj) || bi <= bj {
                return None;
            }
            let mut alpha = vec![0.0; m];
            alpha[i - 1] = (b_h - bj) / (bi - bj);
            alpha[j - 1] = 1.0 - alpha[i - 1];
            Some(score(model, alpha, &objective))
        })
        .collect();
    candidates.extend(mixed.into_iter().flatten());
    Ok(finish_linear(model, "rank-linear-upper", candidates, 0.0, b_h))
}

fn finish_linear(model: &RankModel, solver: &str, candidates: Vec<Candidate>, b_l: f64, b_h: f64) -> SolveReport {
    let (best, tie) = pick_best(candidates);
    let v_l = model.inverse(&best.alpha, b_l);
    let v_h = model.inverse(&best.alpha, b_h);
    let mut r = report(model, solver, best.alpha, best.objective);
    if b_l > 0.0 {
        r.v_l = v_l;
    }
    r.v_h = v_h;
    if r.support.len() == 1 {
        r.j_star = Some(r.support[0]);
    }
    if v_h.is_none() {
        r.diagnostics.push(format!("output never reaches B_H = {b_h}"));
    }
    r.diagnostics.extend(tie);
    r
}

/// Best contest for general thresholds: simple contests, stationary
/// two-index mixtures, and three-index mixtures meeting the equal-integral
/// conditions on `[V_L, V_H]`.
pub fn optimize_linear_full(model: &RankModel, b_l: f64, b_h: f64) -> Result<SolveReport> {
    let objective = ThresholdObjective::linear(b_l, b_h)?;
    if b_l == 0.0 {
        let mut r = optimize_linear_upper(model, b_h)?;
        r.solver = "rank-linear".into();
        return Ok(r);
    }
    let m = model.n - 1;
    let mut candidates: Vec<Candidate> = (1..=m).map(|j| score(model, unit(m, j), &objective)).collect();

    let pairs: Vec<(usize, usize)> = (1..=m).flat_map(|i| (i + 1..=m).map(move |j| (i, j))).collect();
    let pair_candidates: Vec<Vec<Candidate>> =
        pairs.par_iter().map(|&(i, j)| stationary_pairs(model, i, j, b_l, b_h, &objective)).collect();
    candidates.extend(pair_candidates.into_iter().flatten());

    let triples: Vec<(usize, usize, usize)> = (1..=m)
        .flat_map(|i| (i + 1..=m).flat_map(move |j| (j + 1..=m).map(move |k| (i, j, k))))
        .collect();
    let triple_candidates: Vec<Vec<Candidate>> =
        triples.par_iter().map(|&t| triple_candidates(model, t, b_l, b_h, &objective)).collect();
    candidates.extend(triple_candidates.into_iter().flatten());

    Ok(finish_linear(model, "rank-linear", candidates, b_l, b_h))
}

/// Local maxima of the objective along the edge `t e_i + (1 − t) e_j`, found
/// as sign changes of the envelope derivative
/// `(G_i − G_j)(V_H(t)) − (G_i − G_j)(V_L(t))`.
fn stationary_pairs(
    model: &RankModel,
    i: usize,
    j: usize,
    b_l: f64,
    b_h: f64,
    objective: &ThresholdObjective,
) -> Vec<Candidate> {
    let m = model.n - 1;
    let mix = |t: f64| {
        let mut a = vec![0.0; m];
        a[i - 1] = t;
        a[j - 1] = 1.0 - t;
        a
    };
    let slope = |t: f64| {
        let a = mix(t);
        let Some(v_l) = model.inverse(&a, b_l) else {
            return 0.0;
        };
        let v_h = model.inverse(&a, b_h).unwrap_or(1.0);
        integral_gap(model, i, j, v_h).0 - integral_gap(model, i, j, v_l).0
    };
    let grid = grid_points();
    let values: Vec<f64> = grid.iter().map(|&t| slope(t)).collect();
    let mut out = Vec::new();
    for k in 0..grid.len() - 1 {
        if values[k] > 0.0 && values[k + 1] <= 0.0 {
            let t = bisect_predicate(grid[k], grid[k + 1], |t| slope(t) <= 0.0, ROOT_TOL);
            if t > 0.0 && t < 1.0 {
                out.push(score(model, mix(t), objective));
            }
        }
    }
    out
}

/// Ability where `β_i − β_j` turns from non-positive to positive (`i < j`).
/// Returns 1 when `β_i ≤ β_j` on the whole support.
pub fn crossing_point(model: &RankModel, i: usize, j: usize) -> Result<f64> {
    let m = model.n - 1;
    if i >= j {
        return Err(Error::Constraint(format!("crossing point needs i < j, got i = {i}, j = {j}")));
    }
    if i == 0 || j > m {
        return Err(Error::Index { j: if i == 0 { i } else { j }, n: model.n });
    }
    let diff = |v: f64| model.simple(i).beta(v) - model.simple(j).beta(v);
    let grid = grid_points();
    let Some(k) = (0..grid.len()).rev().find(|&k| diff(grid[k]) <= 0.0) else {
        return Ok(0.0);
    };
    if k + 1 == grid.len() {
        return Ok(1.0);
    }
    Ok(bisect_predicate(grid[k], grid[k + 1], |v| diff(v) > 0.0, ROOT_TOL))
}

fn triple_candidates(
    model: &RankModel,
    (i, j, k): (usize, usize, usize),
    b_l: f64,
    b_h: f64,
    objective: &ThresholdObjective,
) -> Vec<Candidate> {
    let Ok(c_ij) = crossing_point(model, i, j) else {
        return Vec::new();
    };
    if c_ij >= 1.0 {
        return Vec::new();
    }
    let hi = equal_integral_point(model, i, j).unwrap_or(1.0);
    let d_ij = |v: f64| integral_gap(model, i, j, v).0;
    let d_jk = |v: f64| integral_gap(model, j, k, v).0;
    // D_ij falls on [0, c_ij], so each level it reaches there has one preimage.
    let lower = |v_h: f64| {
        let target = d_ij(v_h);
        bisect_predicate(0.0, c_ij, |x| d_ij(x) <= target, ROOT_TOL)
    };
    let gap = |v_h: f64| d_jk(v_h) - d_jk(lower(v_h));

    let steps = ((hi - c_ij) / BRACKET_STEP).ceil().max(1.0) as usize;
    let grid: Vec<f64> = (1..=steps).map(|s| c_ij + (hi - c_ij) * s as f64 / steps as f64).collect();
    let values: Vec<f64> = grid.iter().map(|&v| gap(v)).collect();
    let mut out = Vec::new();
    for s in 0..grid.len().saturating_sub(1) {
        let (g0, g1) = (values[s], values[s + 1]);
        if g0 == 0.0 || g0.signum() == g1.signum() {
            continue;
        }
        let negative_first = g0 < 0.0;
        let v_h = bisect_predicate(grid[s], grid[s + 1], |v| (gap(v) >= 0.0) == negative_first, ROOT_TOL);
        let v_l = lower(v_h);
        let rows = [
            [model.simple(i).beta(v_l), model.simple(j).beta(v_l), model.simple(k).beta(v_l), b_l],
            [model.simple(i).beta(v_h), model.simple(j).beta(v_h), model.simple(k).beta(v_h), b_h],
            [1.0, 1.0, 1.0, 1.0],
        ];
        let Some(w) = solve3(rows) else { continue };
        if w.iter().any(|&x| x < -SIMPLEX_SLACK) {
            continue;
        }
        let clipped: Vec<f64> = w.iter().map(|x| x.max(0.0)).collect();
        let total: f64 = clipped.iter().sum();
        let mut alpha = vec![0.0; model.n - 1];
        alpha[i - 1] = clipped[0] / total;
        alpha[j - 1] = clipped[1] / total;
        alpha[k - 1] = clipped[2] / total;
        out.push(score(model, alpha, objective));
    }
    out
}

/// Gaussian elimination with partial pivoting on an augmented 3×4 system.
fn solve3(mut a: [[f64; 4]; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&r, &s| a[r][col].abs().partial_cmp(&a[s][col].abs()).unwrap())?;
        if a[pivot][col].abs() < 1e-14 {
            return None;
        }
        a.swap(col, pivot);
        for r in 0..3 {
            if r != col {
                let factor = a[r][col] / a[col][col];
                let pivot_row = a[col];
                for (x, p) in a[r][col..].iter_mut().zip(&pivot_row[col..]) {
                    *x -= factor * p;
                }
            }
        }
    }
    Some([a[0][3] / a[0][0], a[1][3] / a[1][1], a[2][3] / a[2][2]])
}

/// Optimal objective over the best simple contest's objective.
pub fn simple_vs_optimal(model: &RankModel, b_l: f64, b_h: f64) -> Result<f64> {
    let objective = ThresholdObjective::linear(b_l, b_h)?;
    let optimal = optimize_linear_full(model, b_l, b_h)?.objective;
    let m = model.n - 1;
    let simple = (1..=m).map(|j| model.objective(&unit(m, j), &objective)).fold(f64::NEG_INFINITY, f64::max);
    Ok(optimal / simple)
}

const FD_STEP: f64 = 1e-6;
const ASCENT_STOP: f64 = 1e-9;
const ASCENT_MAX_ITERS: usize = 2000;
const SHAPE_SEGMENTS: usize = 8;

/// Convex transforms: best simple contest (winner-take-all under unit-sum).
/// Concave transforms: projected-gradient ascent over the simplex.
pub fn optimize_transformed(model: &RankModel, transform: Transform, shape: Shape) -> Result<SolveReport> {
    let objective = ThresholdObjective::Transformed { transform, shape };
    objective.validate()?;
    let m = model.n - 1;
    let eval = |a: &[f64]| model.objective(a, &objective);

    let best = match shape {
        Shape::Convex => match model.regime {
            Regime::UnitSum => score(model, unit(m, 1), &objective),
            Regime::UnitRange => pick_best((1..=m).map(|j| score(model, unit(m, j), &objective)).collect()).0,
        },
        Shape::Concave => {
            let mut starts: Vec<Vec<f64>> = (1..=m).map(|j| unit(m, j)).collect();
            if m > 1 {
                starts.push(vec![1.0 / m as f64; m]);
            }
            let results: Vec<Candidate> = starts
                .into_par_iter()
                .map(|a| {
                    let (alpha, objective) = ascend(&eval, a);
                    Candidate { alpha, objective }
                })
                .collect();
            pick_best(results).0
        }
    };
    let mut r = report(model, "rank-transformed", best.alpha, best.objective);
    if r.support.len() == 1 {
        r.j_star = Some(r.support[0]);
    }
    if let Some(w) = shape_mismatch(&eval, m, shape) {
        r.diagnostics.push(w);
    }
    Ok(r)
}

fn gradient(eval: &impl Fn(&[f64]) -> f64, alpha: &[f64], at: f64) -> Vec<f64> {
    (0..alpha.len())
        .map(|j| {
            let mut up = alpha.to_vec();
            up[j] += FD_STEP;
            if alpha[j] >= FD_STEP {
                let mut down = alpha.to_vec();
                down[j] -= FD_STEP;
                (eval(&up) - eval(&down)) / (2.0 * FD_STEP)
            } else {
                (eval(&up) - at) / FD_STEP
            }
        })
        .collect()
}

fn ascend(eval: &impl Fn(&[f64]) -> f64, start: Vec<f64>) -> (Vec<f64>, f64) {
    let mut alpha = start;
    let mut value = eval(&alpha);
    for _ in 0..ASCENT_MAX_ITERS {
        let g = gradient(eval, &alpha, value);
        let mut step = 0.5;
        let mut moved = None;
        while step > 1e-12 {
            let trial: Vec<f64> = alpha.iter().zip(&g).map(|(a, d)| a + step * d).collect();
            let trial = project_simplex(&trial);
            let tv = eval(&trial);
            if tv > value {
                moved = Some((trial, tv));
                break;
            }
            step *= 0.5;
        }
        let Some((next, next_value)) = moved else { break };
        let gain = next_value - value;
        alpha = next;
        value = next_value;
        if gain < ASCENT_STOP {
            break;
        }
    }
    (alpha, value)
}

fn random_simplex_point(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..m).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|x| x / s).collect()
}

/// Midpoint test along random simplex chords; returns a warning when the
/// declared shape is contradicted.
fn shape_mismatch(eval: &impl Fn(&[f64]) -> f64, m: usize, shape: Shape) -> Option<String> {
    if m < 2 {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..SHAPE_SEGMENTS {
        let a = random_simplex_point(&mut rng, m);
        let b = random_simplex_point(&mut rng, m);
        let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
        let bend = eval(&mid) - 0.5 * (eval(&a) + eval(&b));
        let contradicts = match shape {
            Shape::Convex => bend > 1e-7,
            Shape::Concave => bend < -1e-7,
        };
        if contradicts {
            return Some(format!(
                "shape mismatch: objective is not {} along a sampled segment (midpoint bend {bend:e})",
                match shape {
                    Shape::Convex => "convex",
                    Shape::Concave => "concave",
                }
            ));
        }
    }
    None
}
