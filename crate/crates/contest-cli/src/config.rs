//! Run configuration: strict JSON, optionally with `//` and `/* */` comments.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use contest_core::{AbilityDistribution, Regime, ThresholdObjective};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum Solver {
    #[serde(rename = "rank-binary")]
    RankBinary,
    #[serde(rename = "rank-linear")]
    RankLinear,
    #[serde(rename = "rank-total")]
    RankTotal,
    #[serde(rename = "rank-transformed")]
    RankTransformed,
    #[serde(rename = "general-binary")]
    GeneralBinary,
    #[serde(rename = "general-linear")]
    GeneralLinear,
    #[serde(rename = "general-irregular")]
    GeneralIrregular,
}

impl Solver {
    pub fn is_rank(self) -> bool {
        matches!(self, Solver::RankBinary | Solver::RankLinear | Solver::RankTotal | Solver::RankTransformed)
    }

    fn accepts(self, objective: &ThresholdObjective) -> bool {
        use ThresholdObjective as O;
        matches!(
            (self, objective),
            (Solver::RankBinary | Solver::GeneralBinary, O::Binary { .. })
                | (Solver::RankLinear | Solver::GeneralLinear | Solver::GeneralIrregular, O::Linear { .. })
                | (Solver::RankTotal, O::TotalOutput)
                | (Solver::RankTransformed, O::Transformed { .. })
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum OracleKind {
    #[serde(rename = "grid-alpha")]
    GridAlpha,
    #[serde(rename = "grid-xi")]
    GridXi,
    #[serde(rename = "monte-carlo")]
    MonteCarlo,
    #[serde(rename = "regret")]
    Regret,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub kind: OracleKind,
    /// Lattice step for `grid-alpha`.
    pub resolution: Option<f64>,
    /// Cell count for `grid-xi`.
    pub cells: Option<usize>,
    pub samples: Option<u64>,
    pub seed: Option<u64>,
    pub deviation_grid: Option<usize>,
    /// Overrides the default certification tolerance.
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub distribution: AbilityDistribution,
    pub n: usize,
    pub regime: Regime,
    pub objective: ThresholdObjective,
    pub solver: Solver,
    pub oracle: Option<OracleConfig>,
    #[serde(default)]
    pub output: OutputConfig,
    /// Grid step of the irregular search.
    pub search_resolution: Option<f64>,
}

/// A configuration problem, anchored to a line of the source when possible.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, "{}:{l}:{c}: {}", self.path, self.message),
            (Some(l), None) => write!(f, "{}:{l}: {}", self.path, self.message),
            _ => write!(f, "{}: {}", self.path, self.message),
        }
    }
}

/// Blanks out comments, keeping newlines so positions still match the file.
pub fn strip_comments(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars().peekable();
    let mut in_string = false;
    while let Some(c) = chars.next() {
        if in_string {
            out.push(c);
            if c == '\\' {
                if let Some(next) = chars.next() {
                    out.push(next);
                }
            } else if c == '"' {
                in_string = false;
            }
            continue;
        }
        match (c, chars.peek()) {
            ('"', _) => {
                in_string = true;
                out.push(c);
            }
            ('/', Some('/')) => {
                while let Some(&next) = chars.peek() {
                    if next == '\n' {
                        break;
                    }
                    chars.next();
                    out.push(' ');
                }
                out.push(' ');
            }
            ('/', Some('*')) => {
                chars.next();
                out.push_str("  ");
                let mut prev = ' ';
                for next in chars.by_ref() {
                    out.push(if next == '\n' { '\n' } else { ' ' });
                    if prev == '*' && next == '/' {
                        break;
                    }
                    prev = next;
                }
            }
            _ => out.push(c),
        }
    }
    out
}

/// Line of the first occurrence of `"key"`, 1-based.
fn line_of(text: &str, key: &str) -> Option<usize> {
    let needle = format!("\"{key}\"");
    text.lines().position(|l| l.contains(&needle)).map(|i| i + 1)
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let name = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            path: name.clone(),
            line: None,
            column: None,
            message: format!("cannot read config: {e}"),
        })?;
        Self::parse(&name, &text)
    }

    pub fn parse(name: &str, text: &str) -> Result<Self, ConfigError> {
        let clean = strip_comments(text);
        let config: RunConfig = serde_json::from_str(&clean).map_err(|e| ConfigError {
            path: name.to_string(),
            line: Some(e.line()),
            column: Some(e.column()),
            message: strip_position(&e.to_string()),
        })?;
        config.check().map_err(|(key, message)| ConfigError {
            path: name.to_string(),
            line: line_of(&clean, key),
            column: None,
            message,
        })?;
        Ok(config)
    }

    /// Semantic checks; the error names the offending key.
    fn check(&self) -> Result<(), (&'static str, String)> {
        self.distribution.validate().map_err(|e| ("distribution", e.to_string()))?;
        self.objective.validate().map_err(|e| ("objective", e.to_string()))?;
        let min = if self.solver.is_rank() { 2 } else { 1 };
        if self.n < min {
            return Err(("n", format!("solver needs n >= {min}, got {}", self.n)));
        }
        if !self.solver.accepts(&self.objective) {
            return Err(("solver", format!("solver {:?} does not accept objective {:?}", self.solver, self.objective)));
        }
        if let Some(r) = self.search_resolution {
            if self.solver != Solver::GeneralIrregular {
                return Err(("search_resolution", "search_resolution only applies to general-irregular".into()));
            }
            if !(r > 0.0 && r <= 0.25) {
                return Err(("search_resolution", format!("search_resolution must lie in (0, 0.25], got {r}")));
            }
        }
        if let Some(o) = &self.oracle {
            match o.kind {
                OracleKind::GridAlpha if !self.solver.is_rank() => {
                    return Err(("oracle", "grid-alpha certifies rank-order solvers only".into()))
                }
                OracleKind::GridXi if self.solver.is_rank() || self.regime != Regime::UnitSum => {
                    return Err(("oracle", "grid-xi certifies unit-sum general solvers only".into()))
                }
                _ => {}
            }
            if let Some(t) = o.tolerance {
                if !(t.is_finite() && t >= 0.0) {
                    return Err(("tolerance", format!("tolerance must be >= 0, got {t}")));
                }
            }
        }
        Ok(())
    }
}

/// serde_json appends " at line L column C"; the prefix carries it instead.
fn strip_position(message: &str) -> String {
    match message.rfind(" at line ") {
        Some(i) => message[..i].to_string(),
        None => message.to_string(),
    }
}
