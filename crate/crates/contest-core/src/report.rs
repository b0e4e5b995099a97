//! Serializable solver and oracle outputs.

use serde::{Deserialize, Serialize};

use crate::orderstats::Regime;

/// Output of every rank-order optimizer. Indices in `support` and `j_star`
/// are 1-based, matching the simple-contest numbering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveReport {
    pub solver: String,
    pub n: usize,
    pub regime: Regime,
    pub objective: f64,
    pub alpha: Vec<f64>,
    pub prizes: Vec<f64>,
    pub support: Vec<usize>,
    #[serde(rename = "V_L", default, skip_serializing_if = "Option::is_none")]
    pub v_l: Option<f64>,
    #[serde(rename = "V_H", default, skip_serializing_if = "Option::is_none")]
    pub v_h: Option<f64>,
    /// Ability at which output first reaches a binary threshold.
    #[serde(rename = "V_B", default, skip_serializing_if = "Option::is_none")]
    pub v_b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j_star: Option<usize>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub infeasible: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_gap: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

impl SolveReport {
    pub(crate) fn new(solver: &str, n: usize, regime: Regime, alpha: Vec<f64>, prizes: Vec<f64>, objective: f64) -> Self {
        let support = alpha.iter().enumerate().filter(|(_, &a)| a > 0.0).map(|(j, _)| j + 1).collect();
        SolveReport {
            solver: solver.to_string(),
            n,
            regime,
            objective,
            alpha,
            prizes,
            support,
            v_l: None,
            v_h: None,
            v_b: None,
            j_star: None,
            infeasible: false,
            oracle_gap: None,
            diagnostics: Vec::new(),
        }
    }
}

/// Result of a brute-force, Monte-Carlo or regret check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleReport {
    pub oracle: String,
    pub oracle_objective: f64,
    pub solver_objective: f64,
    /// `solver_objective − oracle_objective`.
    pub gap: f64,
    pub resolution: f64,
    pub samples: u64,
    pub regret: f64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub standard_error: Option<f64>,
    /// Maximizer found by the oracle (α for rank-order, cell ξ for general).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub argmax: Vec<f64>,
}

impl OracleReport {
    pub(crate) fn named(oracle: &str) -> Self {
        OracleReport {
            oracle: oracle.to_string(),
            oracle_objective: 0.0,
            solver_objective: 0.0,
            gap: 0.0,
            resolution: 0.0,
            samples: 0,
            regret: 0.0,
            seed: 0,
            standard_error: None,
            argmax: Vec::new(),
        }
    }

    /// Fills in the solver side and the signed gap.
    pub fn against(mut self, solver_objective: f64) -> Self {
        self.solver_objective = solver_objective;
        self.gap = solver_objective - self.oracle_objective;
        self
    }
}
