//! Monte-Carlo estimate of the designer objective.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::regret::MIN_SAMPLES;
use super::{ContestRef, Outputs};
use crate::dist::AbilityDistribution;
use crate::error::{Error, Result};
use crate::numeric::Neumaier;
use crate::rank::ThresholdObjective;
use crate::report::OracleReport;

/// Samples per chunk; chunk `c` draws from stream `c` of the seeded generator.
pub const CHUNK: u64 = 4096;

fn utility(objective: &ThresholdObjective, beta: f64) -> f64 {
    match objective {
        ThresholdObjective::Binary { b } => f64::from(u8::from(beta >= *b)),
        ThresholdObjective::Linear { b_l, b_h } => beta.clamp(*b_l, *b_h),
        ThresholdObjective::TotalOutput => beta,
        ThresholdObjective::Transformed { transform, .. } => transform.apply(beta),
    }
}

/// `solver_objective` is the quadrature value of the same contest.
pub fn mc_objective(
    dist: &AbilityDistribution,
    contest: ContestRef<'_>,
    objective: &ThresholdObjective,
    samples: u64,
    seed: u64,
) -> Result<OracleReport> {
    dist.validate()?;
    objective.validate()?;
    if samples < MIN_SAMPLES {
        return Err(Error::Constraint(format!("Monte-Carlo needs at least {MIN_SAMPLES} samples, got {samples}")));
    }
    let outputs = Outputs::new(dist, contest);
    let chunks = samples.div_ceil(CHUNK);
    let sums: Vec<(Neumaier, Neumaier)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let count = CHUNK.min(samples - c * CHUNK);
            let (mut s, mut s2) = (Neumaier::default(), Neumaier::default());
            for _ in 0..count {
                let u = utility(objective, outputs.output(dist.quantile(rng.random::<f64>())));
                s.add(u);
                s2.add(u * u);
            }
            (s, s2)
        })
        .collect();
    let (mut s, mut s2) = (Neumaier::default(), Neumaier::default());
    for (a, b) in sums {
        s.add(a.value());
        s2.add(b.value());
    }
    let m = samples as f64;
    let mean = s.value() / m;
    let var = ((s2.value() / m - mean * mean) * m / (m - 1.0)).max(0.0);
    let quadrature = match contest {
        ContestRef::Rank { model, contest } => model.eval_objective(contest, objective),
        ContestRef::General(g) => g.xi.view(dist).objective(objective),
    };
    let mut r = OracleReport::named("mc_objective");
    r.oracle_objective = mean;
    r.samples = samples;
    r.seed = seed;
    r.standard_error = Some((var / m).sqrt());
    Ok(r.against(quadrature))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orderstats::Regime;
    use crate::rank::RankModel;

    const B_H: f64 = 0.160_493_827_160_493_8;

    #[test]
    fn example_mixture() {
        let u = AbilityDistribution::Uniform;
        let model = RankModel::new(&u, 3, Regime::UnitSum).unwrap();
        let contest = model.contest(&[0.5, 0.5]).unwrap();
        let obj = ThresholdObjective::linear(0.0, B_H).unwrap();
        let r = mc_objective(&u, ContestRef::Rank { model: &model, contest: &contest }, &obj, 100_000, 7).unwrap();
        let se = r.standard_error.unwrap();
        assert!((r.oracle_objective - 0.0864).abs() <= 3.0 * se + 1e-4, "{} ± {se}", r.oracle_objective);
        assert!(r.gap.abs() <= 3.0 * se);
    }

    #[test]
    fn binary_is_a_fraction_and_reruns_match() {
        let u = AbilityDistribution::Uniform;
        let model = RankModel::new(&u, 3, Regime::UnitSum).unwrap();
        let contest = model.contest(&[1.0, 0.0]).unwrap();
        let obj = ThresholdObjective::binary(0.1).unwrap();
        let run = || mc_objective(&u, ContestRef::Rank { model: &model, contest: &contest }, &obj, 5000, 1).unwrap();
        let (a, b) = (run(), run());
        assert_eq!(a.oracle_objective.to_bits(), b.oracle_objective.to_bits());
        let hits = a.oracle_objective * 5000.0;
        assert!((hits - hits.round()).abs() < 1e-6);
    }
}
