use thiserror::Error;

/// Errors produced by the library and the CLI front end.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain an operation is defined on.
    #[error("domain error: {0}")]
    Domain(String),

    /// Reflected-ray integrals require p strictly below the minimum slowness.
    #[error("ray not transmitted: p = {p} >= minimum slowness {p_min}")]
    NotTransmitted { p: f64, p_min: f64 },

    /// No turning point exists for the requested horizontal slowness.
    #[error("diving ray does not exist for p = {p}")]
    NoDivingRay { p: f64 },

    /// Traveltime branch with non-monotone slowness; must be split by the caller.
    #[error("branch must be subdivided: p(x) not strictly monotone at index {index}")]
    BranchNotMonotone { index: usize },

    /// Input samples violate the monotonicity the operation relies on.
    #[error("data inconsistent with monotone profile: {0}")]
    NonMonotoneData(String),

    /// Small-p expansion requested outside its disc of convergence.
    #[error("expansion invalid: p * max(c) = {p_cmax} >= 1")]
    ExpansionInvalid { p_cmax: f64 },

    /// Working precision cannot resolve the requested quantity.
    #[error("precision exhausted: largest trustworthy size is {last_valid}")]
    PrecisionExhausted { last_valid: usize },

    /// An iteration failed to converge.
    #[error("did not converge: {0}")]
    NonConvergence(String),

    /// A matrix is numerically singular at the working precision.
    #[error("numerically singular: {0}")]
    Singular(String),

    /// Invalid run configuration.
    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI: 2 config, 3 input I/O, 4 numerical
    /// failure, 5 invariant/domain violation.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Io(_) | Error::Json(_) => 3,
            Error::PrecisionExhausted { .. } | Error::NonConvergence(_) | Error::Singular(_) => 4,
            _ => 5,
        }
    }

    /// Short machine-readable kind tag used in CLI error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::NotTransmitted { .. } => "not-transmitted",
            Error::NoDivingRay { .. } => "no-diving-ray",
            Error::BranchNotMonotone { .. } => "branch-not-monotone",
            Error::NonMonotoneData(_) => "non-monotone-data",
            Error::ExpansionInvalid { .. } => "expansion-invalid",
            Error::PrecisionExhausted { .. } => "precision-exhausted",
            Error::NonConvergence(_) => "non-convergence",
            Error::Singular(_) => "singular",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
