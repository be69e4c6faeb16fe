use thiserror::Error;

/// Errors raised by market evaluation, bound checking, reductions, search and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("stock {stock} has a zero initial price")]
    ZeroInitialPrice { stock: usize },
    #[error("subset is empty")]
    EmptySubset,
    #[error("stock index {index} out of range for a market of {m} stocks")]
    StockOutOfRange { index: usize, m: usize },
    #[error("time {t} out of range [{lo}, {hi}]")]
    TimeOutOfRange { t: usize, lo: usize, hi: usize },
    #[error("index value at time 0 is zero")]
    ZeroDenominator,
    #[error("index value is not positive at time {t}")]
    NonpositiveIndex { t: usize },
    #[error("market index ratio is zero at time {t}")]
    ZeroMarketRatio { t: usize },
    #[error("index kind {0} is not supported by this operation")]
    UnsupportedKind(u8),
    #[error("problem variant mismatch: expected {expected}")]
    WrongVariant { expected: &'static str },
    #[error("portfolio has {size} members but the limit is {limit}")]
    PortfolioTooLarge { size: usize, limit: usize },
    #[error("invalid market: {0}")]
    InvalidMarket(String),
    #[error("invalid portfolio: {0}")]
    InvalidPortfolio(String),
    #[error("invalid set cover instance: {0}")]
    InvalidInstance(String),
    #[error("epsilon {0} outside the allowed range")]
    BadEpsilon(String),
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("time-0 prices are not uniform")]
    NonUniformInitialColumn,
    #[error("lcm of column sums needs {bits} bits, cap is {cap}")]
    HugeLcm { bits: u64, cap: u64 },
    #[error("instance too large: {0}")]
    TooLarge(String),
    #[error("the subsets do not cover the universe")]
    Uncoverable,
    #[error("search needs {needed} candidates, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },
    #[error("instance provenance does not match: {0}")]
    WrongProvenance(String),
    #[error("parse error at line {line}, column {column}: {reason}")]
    Parse { line: usize, column: usize, reason: String },
    #[error("negative price at line {line}, column {column}")]
    NegativePrice { line: usize, column: usize },
    #[error("row at line {line} has {found} fields, expected {expected}")]
    RaggedRow { line: usize, found: usize, expected: usize },
    #[error("self-check failed: {0}")]
    SelfCheck(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
