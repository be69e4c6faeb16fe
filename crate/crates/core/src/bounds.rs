//! Decision checks for the three proxy criteria.
//!
//! Ratio bounds are compared exactly. The volatility bound of the
//! return-for-volatility criterion is evaluated in doubles and compared
//! in squared form, `Δₖ² ≤ β²·Δ_M²`, with a relative tolerance.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{IndexKind, LogMarket, Market, Portfolio};
use crate::scalar::Scalar;

/// Default relative tolerance on the squared volatility comparison.
pub const VOLATILITY_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Criterion {
    /// |ratioₖ − ratio_M| ≤ ε·ratio_M at every t.
    Track { eps: Scalar },
    /// ratioₖ ≥ (1+ε)·ratio_M at every t.
    Outperform { eps: Scalar },
    /// Performance bound ratioₖ ≥ α·ratio_M and volatility bound Δₖ ≤ β·Δ_M.
    Srlv { alpha: Scalar, beta: Scalar },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProxyProblem {
    pub kind: IndexKind,
    pub k: usize,
    pub criterion: Criterion,
}

impl ProxyProblem {
    pub fn track(kind: IndexKind, k: usize, eps: Scalar) -> Result<Self> {
        if !eps.is_positive() {
            return Err(Error::BadEpsilon(eps.to_string()));
        }
        ProxyProblem::checked(kind, k, Criterion::Track { eps })
    }

    pub fn outperform(kind: IndexKind, k: usize, eps: Scalar) -> Result<Self> {
        if eps.is_negative() {
            return Err(Error::BadEpsilon(eps.to_string()));
        }
        ProxyProblem::checked(kind, k, Criterion::Outperform { eps })
    }

    pub fn srlv(kind: IndexKind, k: usize, alpha: Scalar, beta: Scalar) -> Result<Self> {
        if !alpha.is_positive() || !beta.is_positive() {
            return Err(Error::BadParams(format!("alpha={alpha} and beta={beta} must be positive")));
        }
        ProxyProblem::checked(kind, k, Criterion::Srlv { alpha, beta })
    }

    fn checked(kind: IndexKind, k: usize, criterion: Criterion) -> Result<Self> {
        if k == 0 {
            return Err(Error::BadParams("k must be positive".into()));
        }
        Ok(ProxyProblem { kind, k, criterion })
    }

    pub fn with_kind(&self, kind: IndexKind) -> ProxyProblem {
        ProxyProblem { kind, ..self.clone() }
    }

    pub fn variant_name(&self) -> &'static str {
        match self.criterion {
            Criterion::Track { .. } => "track",
            Criterion::Outperform { .. } => "outperform",
            Criterion::Srlv { .. } => "srlv",
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemJson {
    variant: String,
    kind: IndexKind,
    k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    eps: Option<Scalar>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha: Option<Scalar>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    beta: Option<Scalar>,
}

impl Serialize for ProxyProblem {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let (eps, alpha, beta) = match &self.criterion {
            Criterion::Track { eps } | Criterion::Outperform { eps } => (Some(eps.clone()), None, None),
            Criterion::Srlv { alpha, beta } => (None, Some(alpha.clone()), Some(beta.clone())),
        };
        ProblemJson { variant: self.variant_name().into(), kind: self.kind, k: self.k, eps, alpha, beta }
            .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ProxyProblem {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = ProblemJson::deserialize(deserializer)?;
        let built = match (raw.variant.as_str(), raw.eps, raw.alpha, raw.beta) {
            ("track", Some(eps), None, None) => ProxyProblem::track(raw.kind, raw.k, eps),
            ("outperform", Some(eps), None, None) => ProxyProblem::outperform(raw.kind, raw.k, eps),
            ("srlv", None, Some(alpha), Some(beta)) => ProxyProblem::srlv(raw.kind, raw.k, alpha, beta),
            (v @ ("track" | "outperform"), ..) => {
                return Err(D::Error::custom(format!("variant `{v}` takes exactly `eps`")))
            }
            ("srlv", ..) => return Err(D::Error::custom("variant `srlv` takes exactly `alpha` and `beta`")),
            (other, ..) => return Err(D::Error::custom(format!("unknown variant `{other}`"))),
        };
        built.map_err(D::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Upper,
    Lower,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FailReason {
    Track(Side),
    Outperform,
    Performance,
    Volatility,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    /// First violating time and the bound that broke there.
    Fail { t: usize, reason: FailReason },
}

impl Verdict {
    pub fn is_pass(&self) -> bool {
        matches!(self, Verdict::Pass)
    }

    fn fail(t: usize, reason: FailReason) -> Verdict {
        Verdict::Fail { t, reason }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Pass => write!(f, "Pass"),
            Verdict::Fail { t, reason } => match reason {
                FailReason::Track(Side::Upper) => write!(f, "Fail({t}, upper)"),
                FailReason::Track(Side::Lower) => write!(f, "Fail({t}, lower)"),
                FailReason::Outperform => write!(f, "Fail({t})"),
                FailReason::Performance => write!(f, "FailPerf({t})"),
                FailReason::Volatility => write!(f, "FailVol({t})"),
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Arithmetic {
    #[default]
    Exact,
    Float,
}

/// Precomputed market side of a problem, reused across many portfolios.
pub struct Evaluator<'a> {
    market: &'a Market,
    problem: &'a ProxyProblem,
    market_ratios: Vec<Scalar>,
    market_ratios_f64: Vec<f64>,
    market_vol: Vec<f64>,
    tolerance: f64,
    arithmetic: Arithmetic,
    float_prices: Vec<Vec<f64>>,
}

impl<'a> Evaluator<'a> {
    pub fn new(market: &'a Market, problem: &'a ProxyProblem) -> Result<Self> {
        if !problem.kind.is_linear() {
            return Err(Error::UnsupportedKind(problem.kind.number()));
        }
        let all = market.all();
        let market_ratios = (0..=market.f())
            .map(|t| market.exact_ratio(&all, problem.kind, t))
            .collect::<Result<Vec<_>>>()?;
        if let Criterion::Track { .. } = problem.criterion {
            if let Some(t) = (1..=market.f()).find(|&t| market_ratios[t].is_zero()) {
                return Err(Error::ZeroMarketRatio { t });
            }
        }
        let market_vol = match problem.criterion {
            Criterion::Srlv { .. } => market.volatility_series(&all, problem.kind)?,
            _ => Vec::new(),
        };
        Ok(Evaluator {
            market,
            problem,
            market_ratios_f64: market_ratios.iter().map(Scalar::to_f64).collect(),
            market_ratios,
            market_vol,
            tolerance: VOLATILITY_TOLERANCE,
            arithmetic: Arithmetic::Exact,
            float_prices: Vec::new(),
        })
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_arithmetic(mut self, arithmetic: Arithmetic) -> Self {
        if arithmetic == Arithmetic::Float && self.float_prices.is_empty() {
            self.float_prices = self
                .market
                .prices()
                .iter()
                .map(|row| row.iter().map(Scalar::to_f64).collect())
                .collect();
        }
        self.arithmetic = arithmetic;
        self
    }

    pub fn market(&self) -> &Market {
        self.market
    }

    pub fn problem(&self) -> &ProxyProblem {
        self.problem
    }

    pub fn market_ratio(&self, t: usize) -> &Scalar {
        &self.market_ratios[t]
    }

    /// Δ_M(s) for `s in 2..=f`, empty unless the criterion needs it.
    pub fn market_volatility(&self) -> &[f64] {
        &self.market_vol
    }

    fn validate(&self, members: &[usize]) -> Result<()> {
        self.market.validate_subset(members)?;
        if members.len() > self.problem.k {
            return Err(Error::PortfolioTooLarge { size: members.len(), limit: self.problem.k });
        }
        Ok(())
    }

    fn ratio(&self, members: &[usize], t: usize) -> Result<Scalar> {
        self.market.exact_ratio(members, self.problem.kind, t)
    }

    /// Full verdict for the problem's criterion.
    pub fn check(&self, members: &[usize]) -> Result<Verdict> {
        self.validate(members)?;
        if self.arithmetic == Arithmetic::Float {
            return self.check_float(members);
        }
        let f = self.market.f();
        match &self.problem.criterion {
            Criterion::Track { eps } => {
                let lo = Scalar::one() - eps;
                let hi = Scalar::one() + eps;
                for t in 1..=f {
                    let rk = self.ratio(members, t)?;
                    let rm = &self.market_ratios[t];
                    if rk > &hi * rm {
                        return Ok(Verdict::fail(t, FailReason::Track(Side::Upper)));
                    }
                    if rk < &lo * rm {
                        return Ok(Verdict::fail(t, FailReason::Track(Side::Lower)));
                    }
                }
                Ok(Verdict::Pass)
            }
            Criterion::Outperform { eps } => {
                let factor = Scalar::one() + eps;
                for t in 1..=f {
                    if self.ratio(members, t)? < &factor * &self.market_ratios[t] {
                        return Ok(Verdict::fail(t, FailReason::Outperform));
                    }
                }
                Ok(Verdict::Pass)
            }
            Criterion::Srlv { alpha, beta } => {
                for t in 1..=f {
                    if self.ratio(members, t)? < alpha * &self.market_ratios[t] {
                        return Ok(Verdict::fail(t, FailReason::Performance));
                    }
                }
                self.check_volatility(members, beta.to_f64())
            }
        }
    }

    fn check_volatility(&self, members: &[usize], beta: f64) -> Result<Verdict> {
        if self.market.f() < 2 {
            return Ok(Verdict::Pass);
        }
        let vol = self.market.volatility_series(members, self.problem.kind)?;
        for (idx, (vk, vm)) in vol.iter().zip(&self.market_vol).enumerate() {
            let lhs = vk * vk;
            let rhs = beta * beta * vm * vm;
            if lhs > rhs + self.tolerance * lhs.max(rhs) {
                return Ok(Verdict::fail(idx + 2, FailReason::Volatility));
            }
        }
        Ok(Verdict::Pass)
    }

    /// Lower half of the tracking bound only: ratioₖ ≥ (1−ε)·ratio_M.
    pub fn check_tracking_lower(&self, members: &[usize]) -> Result<Verdict> {
        self.validate(members)?;
        let Criterion::Track { eps } = &self.problem.criterion else {
            return Err(Error::WrongVariant { expected: "track" });
        };
        let lo = Scalar::one() - eps;
        for t in 1..=self.market.f() {
            if self.ratio(members, t)? < &lo * &self.market_ratios[t] {
                return Ok(Verdict::fail(t, FailReason::Track(Side::Lower)));
            }
        }
        Ok(Verdict::Pass)
    }

    fn float_ratio(&self, members: &[usize], t: usize) -> Result<f64> {
        let p = &self.float_prices;
        let w = |i: usize| self.market.shares()[i].to_f64();
        let (num, den) = match self.problem.kind {
            IndexKind::PriceWeighted => (
                members.iter().map(|&i| p[i][t]).sum::<f64>(),
                members.iter().map(|&i| p[i][0]).sum::<f64>(),
            ),
            IndexKind::ValueWeighted => (
                members.iter().map(|&i| w(i) * p[i][t]).sum::<f64>(),
                members.iter().map(|&i| w(i) * p[i][0]).sum::<f64>(),
            ),
            IndexKind::EqualWeighted => (
                members.iter().map(|&i| p[i][t] / p[i][0]).sum::<f64>(),
                members.len() as f64,
            ),
            IndexKind::PriceRelative => unreachable!("rejected at construction"),
        };
        if den == 0.0 {
            return Err(Error::ZeroDenominator);
        }
        Ok(num / den)
    }

    fn check_float(&self, members: &[usize]) -> Result<Verdict> {
        let f = self.market.f();
        match &self.problem.criterion {
            Criterion::Track { eps } => {
                let eps = eps.to_f64();
                for t in 1..=f {
                    let (rk, rm) = (self.float_ratio(members, t)?, self.market_ratios_f64[t]);
                    if rk > (1.0 + eps) * rm {
                        return Ok(Verdict::fail(t, FailReason::Track(Side::Upper)));
                    }
                    if rk < (1.0 - eps) * rm {
                        return Ok(Verdict::fail(t, FailReason::Track(Side::Lower)));
                    }
                }
                Ok(Verdict::Pass)
            }
            Criterion::Outperform { eps } => {
                let eps = eps.to_f64();
                for t in 1..=f {
                    if self.float_ratio(members, t)? < (1.0 + eps) * self.market_ratios_f64[t] {
                        return Ok(Verdict::fail(t, FailReason::Outperform));
                    }
                }
                Ok(Verdict::Pass)
            }
            Criterion::Srlv { alpha, beta } => {
                let alpha = alpha.to_f64();
                for t in 1..=f {
                    if self.float_ratio(members, t)? < alpha * self.market_ratios_f64[t] {
                        return Ok(Verdict::fail(t, FailReason::Performance));
                    }
                }
                self.check_volatility(members, beta.to_f64())
            }
        }
    }

    /// Worst and total relative violation over all bounds; zero when the
    /// portfolio passes. Used to rank candidates in greedy search.
    pub fn violation(&self, members: &[usize]) -> Result<(f64, f64)> {
        self.validate(members)?;
        let f = self.market.f();
        let mut worst = 0.0f64;
        let mut total = 0.0f64;
        let mut add = |v: f64| {
            if v > 0.0 {
                worst = worst.max(v);
                total += v;
            }
        };
        let relative = |gap: Scalar, rm: &Scalar| -> f64 {
            if rm.is_zero() {
                gap.to_f64()
            } else {
                (gap / rm).to_f64()
            }
        };
        for t in 1..=f {
            let rk = match self.ratio(members, t) {
                Ok(v) => v,
                Err(Error::ZeroDenominator) => return Ok((f64::INFINITY, f64::INFINITY)),
                Err(e) => return Err(e),
            };
            let rm = &self.market_ratios[t];
            match &self.problem.criterion {
                Criterion::Track { eps } => {
                    add(relative((Scalar::one() - eps) * rm - &rk, rm));
                    add(relative(&rk - (Scalar::one() + eps) * rm, rm));
                }
                Criterion::Outperform { eps } => add(relative((Scalar::one() + eps) * rm - &rk, rm)),
                Criterion::Srlv { alpha, .. } => add(relative(alpha * rm - &rk, rm)),
            }
        }
        if let Criterion::Srlv { beta, .. } = &self.problem.criterion {
            if f >= 2 {
                if let Ok(vol) = self.market.volatility_series(members, self.problem.kind) {
                    let beta = beta.to_f64();
                    for (vk, vm) in vol.iter().zip(&self.market_vol) {
                        let rhs = beta * vm;
                        if *vk > rhs {
                            add(if rhs > 0.0 { (vk - rhs) / rhs } else { *vk });
                        }
                    }
                }
            }
        }
        Ok((worst, total))
    }
}

fn require_variant(problem: &ProxyProblem, expected: &'static str) -> Result<()> {
    if problem.variant_name() != expected {
        return Err(Error::WrongVariant { expected });
    }
    Ok(())
}

/// Any criterion, dispatched on the problem variant.
pub fn check(market: &Market, portfolio: &Portfolio, problem: &ProxyProblem) -> Result<Verdict> {
    Evaluator::new(market, problem)?.check(portfolio.members())
}

pub fn check_tracking(market: &Market, portfolio: &Portfolio, problem: &ProxyProblem) -> Result<Verdict> {
    require_variant(problem, "track")?;
    check(market, portfolio, problem)
}

pub fn check_outperform(market: &Market, portfolio: &Portfolio, problem: &ProxyProblem) -> Result<Verdict> {
    require_variant(problem, "outperform")?;
    check(market, portfolio, problem)
}

pub fn check_srlv(market: &Market, portfolio: &Portfolio, problem: &ProxyProblem) -> Result<Verdict> {
    require_variant(problem, "srlv")?;
    check(market, portfolio, problem)
}

pub fn check_tracking_lower(market: &Market, portfolio: &Portfolio, problem: &ProxyProblem) -> Result<Verdict> {
    Evaluator::new(market, problem)?.check_tracking_lower(portfolio.members())
}

/// A bound in the log₂ domain of the price-relative index.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogBound {
    pub lambda: Scalar,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogMode {
    /// mean exponent of the proxy ≥ market mean exponent + λ, with λ ≤ 0.
    TrackLower,
    /// same inequality with λ ≥ 0.
    Outperform,
}

/// Lower tracking bound (or outperformance bound) on a log-domain market.
pub fn check_log_tracking(
    market: &LogMarket,
    portfolio: &Portfolio,
    bound: &LogBound,
    mode: LogMode,
) -> Result<Verdict> {
    check_log_members(market, portfolio.members(), bound, mode)
}

pub(crate) fn check_log_members(
    market: &LogMarket,
    members: &[usize],
    bound: &LogBound,
    mode: LogMode,
) -> Result<Verdict> {
    let reason = match mode {
        LogMode::TrackLower if bound.lambda.is_positive() => {
            return Err(Error::BadParams("tracking lower bound needs lambda <= 0".into()))
        }
        LogMode::Outperform if bound.lambda.is_negative() => {
            return Err(Error::BadParams("outperform bound needs lambda >= 0".into()))
        }
        LogMode::TrackLower => FailReason::Track(Side::Lower),
        LogMode::Outperform => FailReason::Outperform,
    };
    let all = market.all();
    for t in 1..=market.f() {
        let threshold = market.log2_index(&all, t)? + &bound.lambda;
        if market.log2_index(members, t)? < threshold {
            return Ok(Verdict::fail(t, reason));
        }
    }
    Ok(Verdict::Pass)
}

/// Upper tracking bound on a log-domain market whose lower bound is
/// `λ = log₂(1−ε)`; the upper bound is then `log₂(1+ε) = log₂(2 − 2^λ)`.
///
/// With `d` the proxy's mean exponent minus the market's, the bound reads
/// `2^d + 2^λ ≤ 2`. It is decided exactly when `d ≤ 0` (always met) or
/// `d ≥ 1` (never met), and in doubles for `0 < d < 1`.
pub fn check_log_tracking_upper(market: &LogMarket, portfolio: &Portfolio, lower: &LogBound) -> Result<Verdict> {
    check_log_upper_members(market, portfolio.members(), lower)
}

pub(crate) fn check_log_upper_members(market: &LogMarket, members: &[usize], lower: &LogBound) -> Result<Verdict> {
    if lower.lambda.is_positive() {
        return Err(Error::BadParams("tracking lower bound needs lambda <= 0".into()));
    }
    let all = market.all();
    let one = Scalar::one();
    for t in 1..=market.f() {
        let d = market.log2_index(members, t)? - market.log2_index(&all, t)?;
        let within = if !d.is_positive() {
            true
        } else if d >= one {
            false
        } else {
            d.to_f64().exp2() + lower.lambda.to_f64().exp2() <= 2.0
        };
        if !within {
            return Ok(Verdict::fail(t, FailReason::Track(Side::Upper)));
        }
    }
    Ok(Verdict::Pass)
}

/// A proxy problem over a log-domain market.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogProblem {
    pub k: usize,
    pub bound: LogBound,
    pub mode: LogMode,
}

impl LogProblem {
    /// Full verdict: the lower (or outperformance) bound, plus the upper
    /// bound for tracking.
    pub fn check(&self, market: &LogMarket, members: &[usize]) -> Result<Verdict> {
        if members.len() > self.k {
            return Err(Error::PortfolioTooLarge { size: members.len(), limit: self.k });
        }
        let lower = check_log_members(market, members, &self.bound, self.mode)?;
        if !lower.is_pass() || self.mode == LogMode::Outperform {
            return Ok(lower);
        }
        check_log_upper_members(market, members, &self.bound)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(rows: &[Vec<i64>]) -> Market {
        Market::from_ints(rows).unwrap()
    }

    fn pf(members: &[usize], k: usize, m: usize) -> Portfolio {
        Portfolio::new(members.iter().copied(), k, m).unwrap()
    }

    #[test]
    fn identical_stocks_track() {
        let mk = ints(&[vec![1, 3, 2], vec![1, 3, 2]]);
        let p = ProxyProblem::track(IndexKind::PriceWeighted, 1, Scalar::ratio(1, 100)).unwrap();
        assert_eq!(check_tracking(&mk, &pf(&[0], 1, 2), &p).unwrap(), Verdict::Pass);
    }

    #[test]
    fn tracking_reports_first_violation_and_side() {
        let mk = ints(&[vec![1, 1, 4], vec![1, 3, 0]]);
        // market ratios: 2, 2; stock 0: 1, 4
        let p = ProxyProblem::track(IndexKind::PriceWeighted, 1, Scalar::ratio(1, 4)).unwrap();
        assert_eq!(
            check_tracking(&mk, &pf(&[0], 1, 2), &p).unwrap(),
            Verdict::Fail { t: 1, reason: FailReason::Track(Side::Lower) }
        );
        assert_eq!(
            check_tracking(&mk, &pf(&[1], 1, 2), &p).unwrap(),
            Verdict::Fail { t: 1, reason: FailReason::Track(Side::Upper) }
        );
    }

    #[test]
    fn tracking_zero_market_ratio_is_an_error() {
        let mk = ints(&[vec![1, 0], vec![1, 0]]);
        let p = ProxyProblem::track(IndexKind::PriceWeighted, 1, Scalar::ratio(1, 2)).unwrap();
        assert!(matches!(check(&mk, &pf(&[0], 1, 2), &p), Err(Error::ZeroMarketRatio { t: 1 })));
    }

    #[test]
    fn single_stock_outperforms_itself_at_zero() {
        let mk = ints(&[vec![2, 5, 1]]);
        let p = ProxyProblem::outperform(IndexKind::PriceWeighted, 1, Scalar::zero()).unwrap();
        assert_eq!(check_outperform(&mk, &pf(&[0], 1, 1), &p).unwrap(), Verdict::Pass);
        let strict = ProxyProblem::outperform(IndexKind::PriceWeighted, 1, Scalar::ratio(1, 10)).unwrap();
        assert_eq!(
            check_outperform(&mk, &pf(&[0], 1, 1), &strict).unwrap(),
            Verdict::Fail { t: 1, reason: FailReason::Outperform }
        );
    }

    #[test]
    fn whole_market_meets_unit_srlv() {
        let mk = ints(&[vec![1, 2, 3, 1], vec![2, 1, 5, 2], vec![3, 3, 1, 4]]);
        for kind in [IndexKind::PriceWeighted, IndexKind::ValueWeighted, IndexKind::EqualWeighted] {
            let p = ProxyProblem::srlv(kind, 3, Scalar::one(), Scalar::one()).unwrap();
            assert_eq!(check_srlv(&mk, &Portfolio::whole_market(3).unwrap(), &p).unwrap(), Verdict::Pass);
        }
    }

    #[test]
    fn srlv_volatility_failure() {
        // Stock 1 is much more volatile than the market but beats it on return.
        let mk = ints(&[vec![10, 10, 10, 10], vec![1, 4, 1, 4]]);
        let p = ProxyProblem::srlv(IndexKind::PriceWeighted, 1, Scalar::ratio(1, 2), Scalar::one()).unwrap();
        assert_eq!(
            check_srlv(&mk, &pf(&[1], 1, 2), &p).unwrap(),
            Verdict::Fail { t: 2, reason: FailReason::Volatility }
        );
    }

    #[test]
    fn variant_and_kind_guards() {
        let mk = ints(&[vec![1, 2]]);
        let track = ProxyProblem::track(IndexKind::PriceWeighted, 1, Scalar::ratio(1, 2)).unwrap();
        assert!(matches!(check_outperform(&mk, &pf(&[0], 1, 1), &track), Err(Error::WrongVariant { .. })));
        let pr = track.with_kind(IndexKind::PriceRelative);
        assert!(matches!(check(&mk, &pf(&[0], 1, 1), &pr), Err(Error::UnsupportedKind(4))));
        let mk2 = ints(&[vec![1, 2], vec![1, 2]]);
        assert!(matches!(
            check(&mk2, &pf(&[0, 1], 2, 2), &track),
            Err(Error::PortfolioTooLarge { .. })
        ));
    }

    #[test]
    fn float_mode_agrees_on_clear_cases() {
        let mk = ints(&[vec![1, 1, 4], vec![1, 3, 0], vec![1, 2, 2]]);
        let p = ProxyProblem::track(IndexKind::PriceWeighted, 2, Scalar::ratio(1, 3)).unwrap();
        let exact = Evaluator::new(&mk, &p).unwrap();
        let float = Evaluator::new(&mk, &p).unwrap().with_arithmetic(Arithmetic::Float);
        for members in [vec![0], vec![1], vec![2], vec![0, 1], vec![0, 2], vec![1, 2]] {
            assert_eq!(exact.check(&members).unwrap(), float.check(&members).unwrap());
        }
    }

    #[test]
    fn problem_json_shape() {
        let p = ProxyProblem::srlv(IndexKind::PriceWeighted, 2, Scalar::one(), Scalar::from_int(4)).unwrap();
        let text = serde_json::to_string(&p).unwrap();
        assert_eq!(text, r#"{"variant":"srlv","kind":1,"k":2,"alpha":"1","beta":"4"}"#);
        assert_eq!(serde_json::from_str::<ProxyProblem>(&text).unwrap(), p);
        let t: ProxyProblem = serde_json::from_str(r#"{"variant":"track","kind":2,"k":3,"eps":"1/4"}"#).unwrap();
        assert_eq!(t.criterion, Criterion::Track { eps: Scalar::ratio(1, 4) });
        for bad in [
            r#"{"variant":"track","kind":1,"k":1,"eps":"1/2","alpha":"1"}"#,
            r#"{"variant":"srlv","kind":1,"k":1,"alpha":"1"}"#,
            r#"{"variant":"track","kind":5,"k":1,"eps":"1/2"}"#,
            r#"{"variant":"track","kind":1,"k":1,"eps":"0"}"#,
            r#"{"variant":"fly","kind":1,"k":1,"eps":"1/2"}"#,
            r#"{"variant":"track","kind":1,"k":1,"eps":"1/2","extra":1}"#,
        ] {
            assert!(serde_json::from_str::<ProxyProblem>(bad).is_err(), "{bad}");
        }
    }

    fn log_market() -> LogMarket {
        LogMarket::new(vec![
            vec![Scalar::zero(), Scalar::from_int(2), Scalar::from_int(1)],
            vec![Scalar::zero(), Scalar::from_int(4), Scalar::from_int(3)],
        ])
        .unwrap()
    }

    #[test]
    fn log_tracking_examples() {
        let lm = log_market();
        let whole = Portfolio::whole_market(2).unwrap();
        let zero = LogBound { lambda: Scalar::zero() };
        assert_eq!(check_log_tracking(&lm, &whole, &zero, LogMode::TrackLower).unwrap(), Verdict::Pass);
        // Market mean exponent at t=1 is 3; stock 0 sits 1 below.
        let half = LogBound { lambda: Scalar::from_int(-1) };
        let p0 = Portfolio::new([0], 1, 2).unwrap();
        assert_eq!(check_log_tracking(&lm, &p0, &half, LogMode::TrackLower).unwrap(), Verdict::Pass);
        let tight = LogBound { lambda: Scalar::ratio(-1, 2) };
        assert_eq!(
            check_log_tracking(&lm, &p0, &tight, LogMode::TrackLower).unwrap(),
            Verdict::Fail { t: 1, reason: FailReason::Track(Side::Lower) }
        );
        assert!(check_log_tracking(&lm, &p0, &LogBound { lambda: Scalar::one() }, LogMode::TrackLower).is_err());
    }

    #[test]
    fn log_upper_bound_decisions() {
        let lm = log_market();
        let lower = LogBound { lambda: Scalar::from_int(-1) };
        // Stock 1 sits exactly 1 above the market mean: 2^1 + 2^-1 > 2.
        let p1 = Portfolio::new([1], 1, 2).unwrap();
        assert_eq!(
            check_log_tracking_upper(&lm, &p1, &lower).unwrap(),
            Verdict::Fail { t: 1, reason: FailReason::Track(Side::Upper) }
        );
        let p0 = Portfolio::new([0], 1, 2).unwrap();
        assert_eq!(check_log_tracking_upper(&lm, &p0, &lower).unwrap(), Verdict::Pass);
        // d = 1/2 with λ = -4: 2^0.5 + 2^-4 ≈ 1.477 ≤ 2.
        let lm2 = LogMarket::new(vec![
            vec![Scalar::zero(), Scalar::from_int(1)],
            vec![Scalar::zero(), Scalar::zero()],
        ])
        .unwrap();
        let p = Portfolio::new([0], 1, 2).unwrap();
        assert_eq!(
            check_log_tracking_upper(&lm2, &p, &LogBound { lambda: Scalar::from_int(-4) }).unwrap(),
            Verdict::Pass
        );
    }

    #[test]
    fn outperform_monotone_in_eps() {
        let mk = ints(&[vec![1, 2, 3], vec![1, 1, 1], vec![1, 4, 2]]);
        let eps_grid = [Scalar::zero(), Scalar::ratio(1, 10), Scalar::ratio(1, 4), Scalar::ratio(1, 2)];
        for members in [vec![0], vec![1], vec![2], vec![0, 2]] {
            let passes: Vec<bool> = eps_grid
                .iter()
                .map(|e| {
                    let p = ProxyProblem::outperform(IndexKind::PriceWeighted, 2, e.clone()).unwrap();
                    Evaluator::new(&mk, &p).unwrap().check(&members).unwrap().is_pass()
                })
                .collect();
            for w in passes.windows(2) {
                assert!(w[0] || !w[1], "pass at larger eps but not smaller: {members:?}");
            }
        }
    }
}
