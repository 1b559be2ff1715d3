use thiserror::Error;

/// Errors raised by the detection and analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A configuration value violates its documented range.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Two arrays that must agree in length do not.
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    /// A detector prefactor denominator became non-positive.
    ///
    /// For the improved detector this means `Q` exceeds the received power
    /// divided by the load, which is inconsistent with the observed signal.
    #[error("degenerate statistics: prefactor denominator {denominator} is not positive")]
    DegenerateStatistics { denominator: f64 },

    /// A density-evolution update hit a non-positive denominator.
    #[error("degenerate parameters: {0}")]
    DegenerateParameters(String),

    /// A function was evaluated outside its domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Exhaustive enumeration was asked for more users than supported.
    #[error("capacity exceeded: {users} users, enumeration supports at most {max}")]
    Capacity { users: usize, max: usize },

    /// An entry that must be +1 or -1 was something else.
    #[error("entry {index} is {value}, expected +1 or -1")]
    NotAntipodal { index: usize, value: i64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn ensure_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::Dimension { expected, actual })
    }
}
