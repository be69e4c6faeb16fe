//! Index proxies: evaluating small stock portfolios against a market index,
//! exact search for proxies meeting tracking, outperformance and
//! return-for-volatility bounds, and generation of hard instances from set
//! cover with audits and equivalence certification.

pub mod bounds;
pub mod cli;
pub mod error;
pub mod io;
pub mod market;
pub mod reductions;
pub mod scalar;
pub mod setcover;
pub mod solver;
pub mod verify;

pub use bounds::{Criterion, LogBound, LogMode, LogProblem, ProxyProblem, Verdict};
pub use error::{Error, Result};
pub use market::{IndexKind, LogMarket, Market, Portfolio};
pub use reductions::ReducedInstance;
pub use scalar::Scalar;
pub use setcover::SetCoverInstance;
