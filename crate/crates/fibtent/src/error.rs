use std::fmt;

/// Everything that can go wrong in the laboratory.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("precision ceiling of {bits} bits reached{}", AtIndex(*index))]
    PrecisionCeiling { bits: u32, index: Option<usize> },

    #[error("bisection bracket lost monotonicity: {0}")]
    BracketLoss(String),

    #[error("kneading map violates Q(k) < k at k = {k} (Q(k) = {q})")]
    InvalidKneadingMap { k: u32, q: u32 },

    #[error("cut time S({0}) does not fit in 64 bits")]
    CutTimeOverflow(u32),

    #[error("cannot certify that {0} and {1} are disjoint")]
    DisjointnessUnresolved(String, String),

    #[error("orbit cache ends at index {have}, index {need} is required")]
    CacheTooShort { have: usize, need: usize },

    #[error("unresolved: {0}")]
    Unresolved(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

struct AtIndex(Option<usize>);

impl fmt::Display for AtIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(i) => write!(f, " at orbit index {i}"),
            None => Ok(()),
        }
    }
}
