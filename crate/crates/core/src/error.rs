use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MulabError {
    #[error("invalid range [{start}, {end}): start must be >= 1 and below end")]
    InvalidRange { start: u64, end: u64 },
    #[error("range end {end} exceeds the memory budget of {budget} entries")]
    RangeTooLarge { end: u64, budget: u64 },
    #[error("character index {index} out of range for modulus {modulus} (phi = {phi})")]
    BadCharacterIndex { modulus: u64, index: u64, phi: u64 },
    #[error("value at prime {prime} has modulus {modulus}, expected 1")]
    NonunitPrimeValue { prime: u64, modulus: f64 },
    #[error("interval ({lo}, {hi}] is not contained in block [{start}, {end})")]
    IntervalOutOfBlock { lo: u64, hi: u64, start: u64, end: u64 },
    #[error("block [{start}, {end}) does not cover index {needed}")]
    CoverageGap { needed: u64, start: u64, end: u64 },
    #[error("block contains non-sign values (index {index})")]
    NonsignValues { index: u64 },
    #[error("pattern length {ell} exceeds the cap of {cap}")]
    PatternLengthCap { ell: usize, cap: usize },
    #[error("fewer than two primes below K = {k}")]
    InsufficientPrimes { k: u64 },
    #[error("method {method} is only defined for s = 2 (got s = {s})")]
    MethodMismatch { method: &'static str, s: usize },
    #[error("estimated work {work:.3e} exceeds the budget {budget:.3e}")]
    WorkBudgetExceeded { work: f64, budget: f64 },
    #[error("cost guard exceeded: {what}")]
    CostGuardExceeded { what: String },
    #[error("window R = {r} exceeds M = {m}")]
    BadWindow { r: usize, m: usize },
    #[error("empty t-grid")]
    EmptyGrid,
    #[error("measures come from different sources: {0}")]
    MismatchedSources(String),
    #[error("zero frequency vector in Weyl test")]
    ZeroFrequency,
    #[error("polynomial degree {degree} exceeds the cap of {cap}")]
    DegreeCap { degree: usize, cap: usize },
    #[error("invalid interval scheme: {0}")]
    InvalidScheme(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("cache file: {0}")]
    Cache(String),
}

impl MulabError {
    /// Coverage and budget failures, as opposed to malformed input.
    pub fn is_budget(&self) -> bool {
        matches!(
            self,
            MulabError::RangeTooLarge { .. }
                | MulabError::IntervalOutOfBlock { .. }
                | MulabError::CoverageGap { .. }
                | MulabError::WorkBudgetExceeded { .. }
                | MulabError::CostGuardExceeded { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, MulabError>;
