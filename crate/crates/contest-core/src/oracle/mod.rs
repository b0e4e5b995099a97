//! Independent checks of the solvers: brute-force optima, Monte-Carlo
//! objectives and best-response regret.
//!
//! Sampling is reproducible: chunk `c` of a run with seed `s` draws from
//! `ChaCha8Rng::seed_from_u64(s)` on stream `c`, and chunk sums are combined
//! in chunk order.

mod alpha;
mod mc;
mod regret;
mod xi;

pub use alpha::{grid_optimal_alpha, grid_optimal_alpha_model, lattice_size, MAX_LATTICE_POINTS};
pub use mc::{mc_objective, CHUNK};
pub use regret::{best_response_regret, best_response_regret_shifted};
pub use xi::{cell_boundaries, grid_optimal_xi, optimize_step_xi, step_outputs, XiOptimum, MAX_CELLS};

use crate::general::{AllocationView, GeneralContest};
use crate::rank::{RankContest, RankModel};

/// A contest whose equilibrium the oracles can evaluate.
#[derive(Debug, Clone, Copy)]
pub enum ContestRef<'a> {
    Rank { model: &'a RankModel, contest: &'a RankContest },
    General(&'a GeneralContest),
}

/// Equilibrium output as a function of ability, shared by the oracles.
pub(crate) enum Outputs<'a> {
    Rank { model: &'a RankModel, alpha: &'a [f64] },
    General(AllocationView<'a>),
}

impl<'a> Outputs<'a> {
    pub(crate) fn new(dist: &'a crate::dist::AbilityDistribution, contest: ContestRef<'a>) -> Self {
        match contest {
            ContestRef::Rank { model, contest } => Outputs::Rank { model, alpha: &contest.alpha },
            ContestRef::General(g) => Outputs::General(g.xi.view(dist)),
        }
    }

    pub(crate) fn output(&self, v: f64) -> f64 {
        match self {
            Outputs::Rank { model, alpha } => model.output(alpha, v),
            Outputs::General(view) => view.output(v),
        }
    }
}
