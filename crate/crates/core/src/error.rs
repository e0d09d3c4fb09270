use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input violated a documented invariant. `field` names the offending
    /// component, optionally suffixed with an index such as `eta[2][1]`.
    #[error("invalid {field}: {reason}")]
    Invalid { field: String, reason: String },

    /// A size cap would be exceeded.
    #[error("capacity exceeded: {cap} allows {limit}, got {actual} ({dimension})")]
    Capacity {
        cap: &'static str,
        limit: usize,
        actual: usize,
        dimension: String,
    },

    /// The linear programming backend failed (infeasible, unbounded, or cycling).
    #[error("solver failure: {0}")]
    Solver(String),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn capacity(
        cap: &'static str,
        limit: usize,
        actual: usize,
        dimension: impl Into<String>,
    ) -> Self {
        Error::Capacity {
            cap,
            limit,
            actual,
            dimension: dimension.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
