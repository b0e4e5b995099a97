//! Property tests for the invariants of each module.

use proptest::prelude::*;

use contest_core::dist::convex_minorant;
use contest_core::general::{
    allocation_rule, eta, matthews_bound, matthews_feasible, optimize_binary_general, optimize_linear_irregular,
    optimize_linear_regular,
};
use contest_core::numeric::integrate;
use contest_core::orderstats::{beta_simple, equal_split_binomial, expected_equal_split, rank_prob};
use contest_core::rank::{optimize_binary, optimize_linear_full, prizes_from_alpha, simple_vs_optimal};
use contest_core::{AbilityDistribution, RankContest, RankModel, Regime, ThresholdObjective};

fn piecewise() -> impl Strategy<Value = AbilityDistribution> {
    (prop::collection::vec(0.05f64..1.0, 2..5), prop::collection::vec(0.05f64..1.0, 2..5)).prop_map(|(dx, dy)| {
        let k = dx.len().min(dy.len());
        let (sx, sy): (f64, f64) = (dx[..k].iter().sum(), dy[..k].iter().sum());
        let mut points = vec![(0.0, 0.0)];
        let (mut x, mut y) = (0.0, 0.0);
        for i in 0..k - 1 {
            x += dx[i] / sx;
            y += dy[i] / sy;
            points.push((x, y));
        }
        points.push((1.0, 1.0));
        AbilityDistribution::piecewise(&points).unwrap()
    })
}

fn any_dist() -> impl Strategy<Value = AbilityDistribution> {
    prop_oneof![
        Just(AbilityDistribution::Uniform),
        (0.5f64..4.0).prop_map(|k| AbilityDistribution::power(k).unwrap()),
        piecewise(),
        (0.1f64..0.9, 1.0f64..4.0).prop_map(|(w, k)| {
            AbilityDistribution::mixture(vec![
                (w, AbilityDistribution::Uniform),
                (1.0 - w, AbilityDistribution::power(k).unwrap()),
            ])
            .unwrap()
        }),
    ]
}

fn regular_dist() -> impl Strategy<Value = AbilityDistribution> {
    prop_oneof![Just(AbilityDistribution::Uniform), (1.0f64..4.0).prop_map(|k| AbilityDistribution::power(k).unwrap())]
}

fn regime() -> impl Strategy<Value = Regime> {
    prop_oneof![Just(Regime::UnitSum), Just(Regime::UnitRange)]
}

fn simplex(m: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, m).prop_map(|w| {
        let s: f64 = w.iter().sum();
        if s > 0.0 {
            w.iter().map(|x| x / s).collect()
        } else {
            let mut e = vec![0.0; w.len()];
            e[0] = 1.0;
            e
        }
    })
}

fn grid(count: usize) -> impl Iterator<Item = f64> {
    (0..=count).map(move |k| k as f64 / count as f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn cdf_is_a_distribution(d in any_dist()) {
        prop_assert_eq!(d.cdf(0.0), 0.0);
        prop_assert!((d.cdf(1.0) - 1.0).abs() < 1e-15);
        let mut last = 0.0;
        for v in grid(1000) {
            let f = d.cdf(v);
            prop_assert!(f >= last - 1e-15);
            prop_assert!(d.pdf(v) >= 0.0);
            last = f;
        }
        let mass = integrate(|v| d.pdf(v), 0.0, 1.0, &d.breakpoints());
        prop_assert!((mass - 1.0).abs() <= 1e-8, "mass {}", mass);
    }

    #[test]
    fn quantile_inverts_cdf(d in any_dist()) {
        for v in grid(1000) {
            if d.pdf(v) > 1e-6 {
                prop_assert!((d.quantile(d.cdf(v)) - v).abs() <= 1e-8, "v {}", v);
            }
        }
    }

    #[test]
    fn ironing_is_a_convex_minorant(d in any_dist(), a in 0.0f64..0.5, w in 0.1f64..0.5) {
        let iv = d.iron(a, a + w, 512).unwrap();
        let last = iv.knots.len() - 1;
        prop_assert!((iv.cum_bar[0] - iv.cum[0]).abs() <= 1e-10);
        prop_assert!((iv.cum_bar[last] - iv.cum[last]).abs() <= 1e-10);
        for (b, h) in iv.cum_bar.iter().zip(&iv.cum) {
            prop_assert!(b <= &(h + 1e-12));
        }
        for s in iv.slope_bar.windows(2) {
            prop_assert!(s[1] >= s[0] - 1e-9);
        }
        // Ironing the ironed function changes nothing.
        let again = convex_minorant(&iv.knots, &iv.cum_bar);
        for (x, y) in again.iter().zip(&iv.cum_bar) {
            prop_assert!((x - y).abs() <= 1e-8);
        }
        for f in &iv.flats {
            let level = iv.psi_bar(f.l);
            for t in [0.25, 0.5, 0.75] {
                prop_assert!((iv.psi_bar(f.l + t * (f.r - f.l)) - level).abs() <= 1e-8);
            }
            prop_assert!((iv.psi_bar(f.r) - level).abs() <= 1e-8);
            let mid = 0.5 * (f.l + f.r);
            prop_assert!(iv.l(mid) <= mid && mid <= iv.r(mid));
        }
    }

    #[test]
    fn rank_probabilities_sum_to_one(d in any_dist(), n in 1usize..9, v in 0.0f64..=1.0) {
        let total: f64 = (1..=n).map(|j| rank_prob(&d, n, j, v).unwrap()).sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn equal_split_matches_binomial_sum(n in 1usize..11, fa in 0.0f64..1.0, w in 1e-6f64..1.0) {
        let fb = (fa + w).min(1.0);
        prop_assume!(fb > fa);
        let d = AbilityDistribution::Uniform;
        let closed = expected_equal_split(&d, n, fa, fb).unwrap();
        prop_assert!((closed - equal_split_binomial(n, fa, fb)).abs() <= 1e-12);
    }

    #[test]
    fn unit_range_output_is_scaled_unit_sum(d in any_dist(), n in 2usize..9, v in 0.0f64..=1.0) {
        for j in 1..n {
            let s = beta_simple(&d, n, j, Regime::UnitSum, v).unwrap();
            let r = beta_simple(&d, n, j, Regime::UnitRange, v).unwrap();
            prop_assert!((r - j as f64 * s).abs() <= 1e-10);
        }
    }

    #[test]
    fn mixture_output_is_monotone(d in any_dist(), reg in regime(), alpha in (2usize..6).prop_flat_map(simplex)) {
        let model = RankModel::new(&d, alpha.len() + 1, reg).unwrap();
        prop_assert_eq!(model.output(&alpha, 0.0), 0.0);
        let mut last = 0.0;
        for v in grid(500) {
            let b = model.output(&alpha, v);
            prop_assert!(b >= last - 1e-12);
            last = b;
        }
    }

    #[test]
    fn prizes_round_trip(reg in regime(), alpha in (1usize..6).prop_flat_map(simplex)) {
        let n = alpha.len() + 1;
        let w = prizes_from_alpha(reg, &alpha);
        let c = RankContest::from_prizes(n, reg, &w).unwrap();
        for (a, b) in c.alpha.iter().zip(&alpha) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn binary_objective_is_mass_above_inverse(d in any_dist(), reg in regime(), b in 0.01f64..0.4,
                                              alpha in (1usize..5).prop_flat_map(simplex)) {
        let model = RankModel::new(&d, alpha.len() + 1, reg).unwrap();
        let value = model.objective(&alpha, &ThresholdObjective::binary(b).unwrap());
        let expect = model.inverse(&alpha, b).map_or(0.0, |v| 1.0 - d.cdf(v));
        prop_assert!((value - expect).abs() <= 1e-12);
    }

    #[test]
    fn binary_winner_is_smallest_inverse(d in any_dist(), reg in regime(), n in 2usize..7, b in 0.01f64..0.4) {
        let model = RankModel::new(&d, n, reg).unwrap();
        let report = optimize_binary(&model, b).unwrap();
        let m = n - 1;
        let inverses: Vec<Option<f64>> = (1..=m)
            .map(|j| {
                let mut e = vec![0.0; m];
                e[j - 1] = 1.0;
                model.inverse(&e, b)
            })
            .collect();
        match inverses.iter().flatten().cloned().fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.min(v)))) {
            None => prop_assert!(report.infeasible),
            Some(best) => {
                let j = report.j_star.unwrap();
                prop_assert!((inverses[j - 1].unwrap() - best).abs() <= 1e-9);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn linear_optimum_dominates_simple_contests(d in any_dist(), reg in regime(), n in 2usize..6,
                                                b_h in 0.02f64..0.5, t in 0.0f64..0.5) {
        let b_l = t * b_h;
        let model = RankModel::new(&d, n, reg).unwrap();
        let report = optimize_linear_full(&model, b_l, b_h).unwrap();
        let objective = ThresholdObjective::linear(b_l, b_h).unwrap();
        for j in 1..n {
            let mut e = vec![0.0; n - 1];
            e[j - 1] = 1.0;
            prop_assert!(report.objective >= model.objective(&e, &objective) - 1e-12);
        }
        prop_assert!(report.support.len() <= 3);
        let ratio = simple_vs_optimal(&model, b_l, b_h).unwrap();
        prop_assert!((1.0 - 1e-9..=2.0 + 1e-6).contains(&ratio));
    }

    #[test]
    fn general_binary_identity(d in any_dist(), n in 1usize..7, b in 0.01f64..0.9) {
        let c = optimize_binary_general(&d, n, Regime::UnitSum, b).unwrap();
        let v = c.v_l().unwrap();
        prop_assert!((b - v * eta(d.cdf(v), n)).abs() <= 1e-10);
        prop_assert!(matthews_feasible(&c.xi, &d, 1001).feasible);
    }

    #[test]
    fn regular_solutions_are_capped_and_feasible(d in regular_dist(), n in 2usize..6, b_h in 0.03f64..1.0, t in 0.0f64..0.6) {
        let b_l = t * b_h;
        let c = optimize_linear_regular(&d, n, Regime::UnitSum, b_l, b_h).unwrap();
        let view = c.xi.view(&d);
        prop_assert!(view.max_output() <= b_h + 1e-8);
        prop_assert!(matthews_feasible(&c.xi, &d, 1001).feasible);
        // Myerson monotonicity of the output.
        let mut last = 0.0;
        for v in grid(1000) {
            let out = view.output(v);
            prop_assert!(out >= last - 1e-9);
            last = out;
        }
        // Matthews is tight on [V_L, V_H): everything there is packed right.
        let (lo, hi) = (c.v_l().unwrap_or(1.0), c.v_h().unwrap_or(1.0));
        for v in grid(200).filter(|&v| v >= lo && v < hi) {
            let slack = matthews_bound(d.cdf(v), n) - c.xi.mass_above(&d, v);
            prop_assert!(slack.abs() <= 1e-6, "slack {} at {}", slack, v);
        }
    }

    #[test]
    fn irregular_solutions_are_capped_and_feasible(d in any_dist(), n in 2usize..5, b_h in 0.05f64..0.8, t in 0.0f64..0.5) {
        let b_l = t * b_h;
        let c = optimize_linear_irregular(&d, n, Regime::UnitSum, b_l, b_h, 1.0 / 64.0).unwrap();
        prop_assert!(c.xi.view(&d).max_output() <= b_h + 1e-8);
        prop_assert!(matthews_feasible(&c.xi, &d, 1001).feasible);
        prop_assert!(c.diagnostics.is_empty(), "{:?}", c.diagnostics);
    }

    #[test]
    fn allocation_rule_is_symmetric_and_budgeted(d in regular_dist(), b_h in 0.05f64..1.0,
                                                 profile in prop::collection::vec(0.0f64..=1.0, 3)) {
        let c = optimize_linear_regular(&d, 3, Regime::UnitSum, 0.0, b_h).unwrap();
        let shares = allocation_rule(&c, &d, &profile).unwrap();
        prop_assert!(shares.iter().sum::<f64>() <= 1.0 + 1e-12);
        let swapped = [profile[2], profile[0], profile[1]];
        let moved = allocation_rule(&c, &d, &swapped).unwrap();
        prop_assert!((moved[0] - shares[2]).abs() <= 1e-12);
        prop_assert!((moved[1] - shares[0]).abs() <= 1e-12);
        prop_assert!((moved[2] - shares[1]).abs() <= 1e-12);
    }
}
