use alloc::string::String;

/// Errors raised by the numerical core.
///
/// Variants are grouped by pipeline stage so that front ends can map
/// them onto stage-specific exit statuses (see [`Error::stage`]).
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Input data violates a structural precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// A deflator table does not cover a panel year.
    #[error("no deflator for year {year}")]
    Coverage { year: i32 },
    /// A level series has a non-positive entry.
    #[error("non-positive level {value} in period {period}; log return undefined")]
    Domain { period: i32, value: f64 },
    /// Missing-cell imputation cannot proceed.
    #[error("imputation failed: {0}")]
    Imputation(String),
    /// An iterative procedure hit its iteration cap.
    #[error("no convergence after {iterations} iterations (last residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },
    /// Distribution parameters outside their valid region.
    #[error("invalid parameters: {0}")]
    Parameter(String),
    /// Likelihood optimisation failed; carries the best point found.
    #[error("estimation failed: {reason}")]
    Estimation {
        reason: String,
        best: Option<[f64; 4]>,
    },
    /// A requested window or index range lies outside the data.
    #[error("range error: {0}")]
    Range(String),
    /// Lengths of paired inputs disagree.
    #[error("length mismatch: expected {expected}, got {found}")]
    LengthMismatch { expected: usize, found: usize },
    /// The mean-correcting martingale measure does not exist.
    #[error("martingale measure does not exist: need alpha >= |beta + 1|, got alpha = {alpha}, |beta + 1| = {bound}")]
    Martingale { alpha: f64, bound: f64 },
    /// The Carr-Madan dampening exponent makes `E[S^(1+a)]` infinite.
    #[error("dampening a = {a} infeasible; need a < {max}, use a smaller dampening")]
    Dampening { a: f64, max: f64 },
    /// A pricing output violates a no-arbitrage bound.
    #[error("pricing error: {0}")]
    Pricing(String),
    /// No implied volatility reproduces the price.
    #[error("no implied volatility: {0}")]
    NoSolution(String),
    /// Portfolio or sample has no variability to allocate.
    #[error("degenerate input: {0}")]
    Degenerate(String),
    /// Too few observations to resolve a tail measure.
    #[error("sample too small: need at least {required}, have {available}")]
    SampleSize { required: usize, available: usize },
}

/// Pipeline stage an error belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Data,
    Estimation,
    Pricing,
    Risk,
}

impl Error {
    pub fn stage(&self) -> Stage {
        match self {
            Error::InvalidInput(_)
            | Error::Coverage { .. }
            | Error::Domain { .. }
            | Error::Imputation(_)
            | Error::LengthMismatch { .. }
            | Error::Range(_) => Stage::Data,
            Error::Convergence { .. } | Error::Parameter(_) | Error::Estimation { .. } => {
                Stage::Estimation
            }
            Error::Martingale { .. }
            | Error::Dampening { .. }
            | Error::Pricing(_)
            | Error::NoSolution(_) => Stage::Pricing,
            Error::Degenerate(_) | Error::SampleSize { .. } => Stage::Risk,
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;
