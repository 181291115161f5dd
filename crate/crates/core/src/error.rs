use thiserror::Error;

/// Unified error type for the whole library.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed graph input: non-{0,1} adjacency entry, self-loop, label/shape mismatch.
    #[error("structural input error: {0}")]
    Structure(String),

    /// Graphs cannot be compared (different variable count or label order).
    #[error("graph comparison error: {0}")]
    Comparison(String),

    /// Pairwise classification called on a graph with k != 2.
    #[error("pairwise operation requires k=2, got k={0}")]
    Arity(usize),

    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Simulation hit a non-evaluable state (e.g. fractional power of a
    /// non-positive latent value); carries the unit and time where it happened.
    #[error("simulation domain error: {msg} (unit {unit}, t={time})")]
    SimulationDomain { msg: String, unit: usize, time: f64 },

    #[error("input error: {0}")]
    Input(String),

    /// Degenerate data such as a zero-variance column.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Numerical failure (singular regression, non-finite values).
    #[error("numerical error: {0}")]
    Numerical(String),

    /// A statistical test cannot be run with the available sample size.
    #[error("test infeasible: {0}")]
    TestInfeasible(String),

    #[error("convergence failure: {0}")]
    Convergence(String),

    #[error("metric error: {0}")]
    Metric(String),

    #[error("config error: {0}")]
    Config(String),

    /// Text-format parse failure with a 1-based line number.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("window error: {0}")]
    Window(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
