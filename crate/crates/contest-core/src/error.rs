use std::fmt;

/// Everything that can go wrong in the library. Solvers prefer returning a
/// flagged report over an error when the designer objective is still defined.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An ability or probability argument fell outside [0, 1].
    Domain { what: &'static str, value: f64 },
    /// Virtual ability requested where the density is numerically zero.
    SingularDensity { v: f64, density: f64 },
    /// Arguments given in the wrong order, e.g. interval virtual with v > u.
    Order { lo: f64, hi: f64 },
    /// Rank index outside its admissible range.
    Index { j: usize, n: usize },
    /// Player count not supported by the operation.
    Players { n: usize, min: usize },
    /// A structural constraint on a contest, objective or allocation failed.
    Constraint(String),
    /// Interval with zero probability mass where a ratio over it is needed.
    DegenerateInterval { a: f64, b: f64 },
    /// No contest can meet the requested threshold.
    Infeasible(String),
    /// The solver requires a regular distribution.
    Irregular { at: f64 },
    /// Brute-force search would exceed its point budget.
    Budget { points: u128, limit: u128 },
    /// Distribution description failed validation.
    Distribution(String),
    /// Cached interpolation table disagrees with direct quadrature.
    Interpolation { v: f64, error: f64 },
    /// The linear-programming backend gave up.
    Solver(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain { what, value } => write!(f, "{what} = {value} is outside [0, 1]"),
            Error::SingularDensity { v, density } => {
                write!(f, "density {density:e} at v = {v} is below the floor; virtual ability undefined")
            }
            Error::Order { lo, hi } => write!(f, "expected {lo} <= {hi}"),
            Error::Index { j, n } => write!(f, "rank index {j} is outside the admissible range for n = {n}"),
            Error::Players { n, min } => write!(f, "n = {n} players given, at least {min} required"),
            Error::Constraint(msg) => write!(f, "constraint violated: {msg}"),
            Error::DegenerateInterval { a, b } => write!(f, "interval [{a}, {b}] carries no probability mass"),
            Error::Infeasible(msg) => write!(f, "infeasible: {msg}"),
            Error::Irregular { at } => write!(f, "distribution is not regular (virtual ability decreases near v = {at})"),
            Error::Budget { points, limit } => write!(f, "search needs {points} points, budget is {limit}"),
            Error::Distribution(msg) => write!(f, "invalid distribution: {msg}"),
            Error::Interpolation { v, error } => {
                write!(f, "output table error {error:e} at v = {v} exceeds the interpolation budget")
            }
            Error::Solver(msg) => write!(f, "lp backend: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_unit(what: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::Domain { what, value })
    }
}
