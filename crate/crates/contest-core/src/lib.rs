// Negated comparisons are how NaN inputs get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dist;
pub mod error;
pub mod general;
pub mod numeric;
pub mod oracle;
pub mod orderstats;
pub mod rank;
pub mod report;
pub mod table;

pub use dist::AbilityDistribution;
pub use error::{Error, Result};
pub use orderstats::Regime;
pub use rank::{RankContest, RankModel, Shape, ThresholdObjective, Transform};
pub use report::{OracleReport, SolveReport};
