//! Market data and index evaluation.
//!
//! A [`Market`] is a stocks × times price matrix with outstanding share
//! counts. The four index formulas are evaluated exactly where the formula
//! is rational (price-, value- and equal-weighted); the price-relative
//! index is exact in the log₂ domain when every price ratio is a power of
//! two and falls back to doubles otherwise. Returns and volatility are
//! always doubles, computed from exact index ratios.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum IndexKind {
    PriceWeighted = 1,
    ValueWeighted = 2,
    EqualWeighted = 3,
    PriceRelative = 4,
}

impl IndexKind {
    pub const ALL: [IndexKind; 4] = [
        IndexKind::PriceWeighted,
        IndexKind::ValueWeighted,
        IndexKind::EqualWeighted,
        IndexKind::PriceRelative,
    ];

    pub fn number(self) -> u8 {
        self as u8
    }

    /// True for the three kinds whose ratios are rational in the prices.
    pub fn is_linear(self) -> bool {
        self != IndexKind::PriceRelative
    }
}

impl TryFrom<u8> for IndexKind {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            1 => Ok(IndexKind::PriceWeighted),
            2 => Ok(IndexKind::ValueWeighted),
            3 => Ok(IndexKind::EqualWeighted),
            4 => Ok(IndexKind::PriceRelative),
            other => Err(Error::UnsupportedKind(other)),
        }
    }
}

impl From<IndexKind> for u8 {
    fn from(k: IndexKind) -> u8 {
        k.number()
    }
}

impl fmt::Display for IndexKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

/// Value of an index at one time step.
#[derive(Clone, Debug, PartialEq)]
pub enum IndexValue {
    /// Exact value.
    Exact(Scalar),
    /// Exact base-2 logarithm of the value.
    Log2(Scalar),
    /// Double approximation, used when no exact form exists.
    Float(f64),
}

impl IndexValue {
    pub fn to_f64(&self) -> f64 {
        match self {
            IndexValue::Exact(v) => v.to_f64(),
            IndexValue::Log2(e) => e.to_f64().exp2(),
            IndexValue::Float(v) => *v,
        }
    }

    pub fn exact(&self) -> Option<&Scalar> {
        match self {
            IndexValue::Exact(v) => Some(v),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Market {
    names: Vec<String>,
    shares: Vec<Scalar>,
    prices: Vec<Vec<Scalar>>,
}

impl Market {
    /// Market with default names `s0, s1, …` and unit shares.
    pub fn new(prices: Vec<Vec<Scalar>>) -> Result<Self> {
        let m = prices.len();
        Market::with_shares(
            (0..m).map(|i| format!("s{i}")).collect(),
            vec![Scalar::one(); m],
            prices,
        )
    }

    pub fn from_ints(prices: &[Vec<i64>]) -> Result<Self> {
        Market::new(
            prices
                .iter()
                .map(|row| row.iter().map(|&v| Scalar::from_int(v)).collect())
                .collect(),
        )
    }

    pub fn with_shares(names: Vec<String>, shares: Vec<Scalar>, prices: Vec<Vec<Scalar>>) -> Result<Self> {
        let m = prices.len();
        if m == 0 {
            return Err(Error::InvalidMarket("market has no stocks".into()));
        }
        if names.len() != m || shares.len() != m {
            return Err(Error::InvalidMarket(format!(
                "{m} price rows but {} names and {} share counts",
                names.len(),
                shares.len()
            )));
        }
        let cols = prices[0].len();
        if cols == 0 {
            return Err(Error::InvalidMarket("market has no time steps".into()));
        }
        for (i, row) in prices.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::InvalidMarket(format!(
                    "stock {i} has {} prices, expected {cols}",
                    row.len()
                )));
            }
            if let Some(t) = row.iter().position(Scalar::is_negative) {
                return Err(Error::InvalidMarket(format!("stock {i} has a negative price at t={t}")));
            }
        }
        if let Some(i) = shares.iter().position(|w| !w.is_positive()) {
            return Err(Error::InvalidMarket(format!("stock {i} has non-positive shares")));
        }
        Ok(Market { names, shares, prices })
    }

    /// Number of stocks.
    pub fn m(&self) -> usize {
        self.prices.len()
    }

    /// Last time index; prices exist for `0..=f`.
    pub fn f(&self) -> usize {
        self.prices[0].len() - 1
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn shares(&self) -> &[Scalar] {
        &self.shares
    }

    pub fn prices(&self) -> &[Vec<Scalar>] {
        &self.prices
    }

    pub fn price(&self, stock: usize, t: usize) -> &Scalar {
        &self.prices[stock][t]
    }

    pub fn all(&self) -> Vec<usize> {
        (0..self.m()).collect()
    }

    /// Copy with every share count set to one.
    pub fn with_unit_shares(&self) -> Market {
        Market {
            names: self.names.clone(),
            shares: vec![Scalar::one(); self.m()],
            prices: self.prices.clone(),
        }
    }

    /// Copy with a single price replaced.
    pub fn with_price(&self, stock: usize, t: usize, value: Scalar) -> Result<Market> {
        let mut prices = self.prices.clone();
        prices[stock][t] = value;
        Market::with_shares(self.names.clone(), self.shares.clone(), prices)
    }

    /// Rows reordered so that new row `r` is old row `order[r]`.
    pub fn permuted(&self, order: &[usize]) -> Result<Market> {
        let mut seen = vec![false; self.m()];
        if order.len() != self.m() || order.iter().any(|&i| i >= self.m() || std::mem::replace(&mut seen[i], true)) {
            return Err(Error::InvalidMarket("not a permutation of the stocks".into()));
        }
        Ok(Market {
            names: order.iter().map(|&i| self.names[i].clone()).collect(),
            shares: order.iter().map(|&i| self.shares[i].clone()).collect(),
            prices: order.iter().map(|&i| self.prices[i].clone()).collect(),
        })
    }

    /// The common time-0 price, if every stock starts at the same price.
    pub fn uniform_initial_price(&self) -> Option<&Scalar> {
        let first = &self.prices[0][0];
        self.prices.iter().all(|row| &row[0] == first).then_some(first)
    }

    pub(crate) fn validate_subset(&self, subset: &[usize]) -> Result<()> {
        if subset.is_empty() {
            return Err(Error::EmptySubset);
        }
        if let Some(&index) = subset.iter().find(|&&i| i >= self.m()) {
            return Err(Error::StockOutOfRange { index, m: self.m() });
        }
        Ok(())
    }

    fn validate_time(&self, t: usize, lo: usize) -> Result<()> {
        if t < lo || t > self.f() {
            return Err(Error::TimeOutOfRange { t, lo, hi: self.f() });
        }
        Ok(())
    }

    fn require_positive_start(&self, subset: &[usize]) -> Result<()> {
        match subset.iter().find(|&&i| self.prices[i][0].is_zero()) {
            Some(&stock) => Err(Error::ZeroInitialPrice { stock }),
            None => Ok(()),
        }
    }

    /// Φⱼ of `subset` at time `t`.
    pub fn index_value(&self, subset: &[usize], kind: IndexKind, t: usize) -> Result<IndexValue> {
        self.validate_subset(subset)?;
        self.validate_time(t, 0)?;
        if kind != IndexKind::PriceWeighted {
            self.require_positive_start(subset)?;
        }
        let b = Scalar::from(subset.len());
        Ok(match kind {
            IndexKind::PriceWeighted => {
                IndexValue::Exact(subset.iter().map(|&i| &self.prices[i][t]).sum::<Scalar>() / b)
            }
            IndexKind::ValueWeighted => {
                let now: Scalar = subset.iter().map(|&i| &self.shares[i] * &self.prices[i][t]).sum();
                let start: Scalar = subset.iter().map(|&i| &self.shares[i] * &self.prices[i][0]).sum();
                IndexValue::Exact(now / start)
            }
            IndexKind::EqualWeighted => IndexValue::Exact(
                subset
                    .iter()
                    .map(|&i| &self.prices[i][t] / &self.prices[i][0])
                    .sum(),
            ),
            IndexKind::PriceRelative => self.price_relative(subset, t),
        })
    }

    fn price_relative(&self, subset: &[usize], t: usize) -> IndexValue {
        if subset.iter().any(|&i| self.prices[i][t].is_zero()) {
            return IndexValue::Exact(Scalar::zero());
        }
        let ratios: Vec<Scalar> = subset
            .iter()
            .map(|&i| &self.prices[i][t] / &self.prices[i][0])
            .collect();
        let b = subset.len() as f64;
        match ratios.iter().map(Scalar::exact_log2).collect::<Option<Vec<i64>>>() {
            Some(exps) => {
                let total: i64 = exps.iter().sum();
                IndexValue::Log2(Scalar::ratio(total, subset.len() as i64))
            }
            None => {
                let mean_ln: f64 = ratios.iter().map(|r| r.ln().unwrap_or(f64::NAN)).sum::<f64>() / b;
                IndexValue::Float(mean_ln.exp())
            }
        }
    }

    /// Φⱼ(·, t) / Φⱼ(·, 0).
    pub fn index_ratio(&self, subset: &[usize], kind: IndexKind, t: usize) -> Result<IndexValue> {
        let now = self.index_value(subset, kind, t)?;
        if kind == IndexKind::PriceRelative {
            // Φ₄ is identically 1 at time 0.
            return Ok(now);
        }
        let start = self.index_value(subset, kind, 0)?;
        let (now, start) = (now.exact().unwrap(), start.exact().unwrap());
        if start.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        Ok(IndexValue::Exact(now / start))
    }

    /// Exact ratio for the three rational kinds.
    pub fn exact_ratio(&self, subset: &[usize], kind: IndexKind, t: usize) -> Result<Scalar> {
        if !kind.is_linear() {
            return Err(Error::UnsupportedKind(kind.number()));
        }
        match self.index_ratio(subset, kind, t)? {
            IndexValue::Exact(v) => Ok(v),
            _ => unreachable!("linear kinds evaluate exactly"),
        }
    }

    /// Rⱼ(·, t) = ln(Φⱼ(t) / Φⱼ(t−1)).
    pub fn one_period_return(&self, subset: &[usize], kind: IndexKind, t: usize) -> Result<f64> {
        self.validate_subset(subset)?;
        self.validate_time(t, 1)?;
        if kind == IndexKind::PriceRelative {
            self.require_positive_start(subset)?;
            let mut total = 0.0;
            for &i in subset {
                let ratio = &self.prices[i][t] / &self.prices[i][0];
                let prev = &self.prices[i][t - 1] / &self.prices[i][0];
                if ratio.is_zero() {
                    return Err(Error::NonpositiveIndex { t });
                }
                if prev.is_zero() {
                    return Err(Error::NonpositiveIndex { t: t - 1 });
                }
                total += (ratio / prev).ln().expect("positive");
            }
            return Ok(total / subset.len() as f64);
        }
        let now = self.index_value(subset, kind, t)?.exact().cloned().expect("linear kind");
        let prev = self.index_value(subset, kind, t - 1)?.exact().cloned().expect("linear kind");
        if !prev.is_positive() {
            return Err(Error::NonpositiveIndex { t: t - 1 });
        }
        if !now.is_positive() {
            return Err(Error::NonpositiveIndex { t });
        }
        Ok((now / prev).ln().expect("positive"))
    }

    /// One-period returns R(1..=t).
    pub fn returns(&self, subset: &[usize], kind: IndexKind, t: usize) -> Result<Vec<f64>> {
        self.validate_time(t, 1)?;
        (1..=t).map(|s| self.one_period_return(subset, kind, s)).collect()
    }

    /// R̄ⱼ(·, t): mean of the first `t` one-period returns.
    pub fn average_return(&self, subset: &[usize], kind: IndexKind, t: usize) -> Result<f64> {
        let r = self.returns(subset, kind, t)?;
        Ok(r.iter().sum::<f64>() / t as f64)
    }

    /// Δⱼ(·, t): sample standard deviation of the first `t` returns.
    pub fn volatility(&self, subset: &[usize], kind: IndexKind, t: usize) -> Result<f64> {
        self.validate_time(t, 2)?;
        let r = self.returns(subset, kind, t)?;
        Ok(sample_std(&r))
    }

    /// Δⱼ(·, s) for every s in `2..=f`; entry `s - 2` holds Δ(s).
    pub fn volatility_series(&self, subset: &[usize], kind: IndexKind) -> Result<Vec<f64>> {
        if self.f() < 2 {
            return Ok(Vec::new());
        }
        let r = self.returns(subset, kind, self.f())?;
        Ok((2..=self.f()).map(|s| sample_std(&r[..s])).collect())
    }
}

/// Sample standard deviation with an (n−1) denominator.
pub fn sample_std(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let ss: f64 = values.iter().map(|r| (r - mean) * (r - mean)).sum();
    (ss / (n - 1) as f64).sqrt()
}

/// A proxy: distinct stock indices, sorted, with a size limit.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Portfolio {
    members: Vec<usize>,
    k_limit: usize,
}

impl Portfolio {
    pub fn new(members: impl IntoIterator<Item = usize>, k_limit: usize, m: usize) -> Result<Self> {
        let mut members: Vec<usize> = members.into_iter().collect();
        members.sort_unstable();
        members.dedup();
        if members.is_empty() {
            return Err(Error::EmptySubset);
        }
        if let Some(&index) = members.iter().find(|&&i| i >= m) {
            return Err(Error::StockOutOfRange { index, m });
        }
        if k_limit > m {
            return Err(Error::InvalidPortfolio(format!("limit {k_limit} exceeds market size {m}")));
        }
        if members.len() > k_limit {
            return Err(Error::PortfolioTooLarge { size: members.len(), limit: k_limit });
        }
        Ok(Portfolio { members, k_limit })
    }

    pub fn whole_market(m: usize) -> Result<Self> {
        Portfolio::new(0..m, m, m)
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn k_limit(&self) -> usize {
        self.k_limit
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

impl fmt::Display for Portfolio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (n, i) in self.members.iter().enumerate() {
            if n > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

/// Market held as base-2 exponents: the price of stock `i` at `t ≥ 1` is
/// `2^E[i][t]`, and every price is exactly 1 at `t = 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LogMarket {
    exponents: Vec<Vec<Scalar>>,
}

impl LogMarket {
    pub fn new(exponents: Vec<Vec<Scalar>>) -> Result<Self> {
        if exponents.is_empty() || exponents[0].is_empty() {
            return Err(Error::InvalidMarket("log market has no stocks or no time steps".into()));
        }
        let cols = exponents[0].len();
        for (i, row) in exponents.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::InvalidMarket(format!("stock {i} has {} exponents, expected {cols}", row.len())));
            }
            if !row[0].is_zero() {
                return Err(Error::InvalidMarket(format!("stock {i} has a non-unit time-0 price")));
            }
        }
        Ok(LogMarket { exponents })
    }

    pub fn m(&self) -> usize {
        self.exponents.len()
    }

    pub fn f(&self) -> usize {
        self.exponents[0].len() - 1
    }

    pub fn exponents(&self) -> &[Vec<Scalar>] {
        &self.exponents
    }

    pub fn exponent(&self, stock: usize, t: usize) -> &Scalar {
        &self.exponents[stock][t]
    }

    pub fn all(&self) -> Vec<usize> {
        (0..self.m()).collect()
    }

    /// log₂ Φ₄(subset, t) = mean exponent of the subset.
    pub fn log2_index(&self, subset: &[usize], t: usize) -> Result<Scalar> {
        if subset.is_empty() {
            return Err(Error::EmptySubset);
        }
        if let Some(&index) = subset.iter().find(|&&i| i >= self.m()) {
            return Err(Error::StockOutOfRange { index, m: self.m() });
        }
        if t > self.f() {
            return Err(Error::TimeOutOfRange { t, lo: 0, hi: self.f() });
        }
        let total: Scalar = subset.iter().map(|&i| &self.exponents[i][t]).sum();
        Ok(total / Scalar::from(subset.len()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn market(rows: &[Vec<i64>]) -> Market {
        Market::from_ints(rows).unwrap()
    }

    #[test]
    fn price_weighted_is_arithmetic_mean() {
        let mk = market(&[vec![1, 2], vec![1, 4], vec![1, 6]]);
        assert_eq!(
            mk.index_value(&mk.all(), IndexKind::PriceWeighted, 1).unwrap(),
            IndexValue::Exact(Scalar::from_int(4))
        );
    }

    #[test]
    fn equal_weighted_sums_ratios() {
        let mk = market(&[vec![1, 2], vec![2, 4]]);
        assert_eq!(
            mk.index_value(&mk.all(), IndexKind::EqualWeighted, 1).unwrap(),
            IndexValue::Exact(Scalar::from_int(4))
        );
    }

    #[test]
    fn value_weighted_uses_shares() {
        let mk = Market::with_shares(
            vec!["a".into(), "b".into()],
            vec![Scalar::from_int(1), Scalar::from_int(3)],
            vec![
                vec![Scalar::from_int(2), Scalar::from_int(4)],
                vec![Scalar::from_int(1), Scalar::from_int(1)],
            ],
        )
        .unwrap();
        // (1·4 + 3·1) / (1·2 + 3·1) = 7/5
        assert_eq!(
            mk.index_value(&mk.all(), IndexKind::ValueWeighted, 1).unwrap(),
            IndexValue::Exact(Scalar::ratio(7, 5))
        );
    }

    #[test]
    fn price_relative_geometric_mean_in_log_domain() {
        let mk = market(&[vec![1, 4], vec![3, 3]]);
        let v = mk.index_value(&mk.all(), IndexKind::PriceRelative, 1).unwrap();
        assert_eq!(v, IndexValue::Log2(Scalar::one()));
        assert_eq!(v.to_f64(), 2.0);
    }

    #[test]
    fn price_relative_falls_back_to_float() {
        let mk = market(&[vec![1, 3], vec![1, 3]]);
        match mk.index_value(&mk.all(), IndexKind::PriceRelative, 1).unwrap() {
            IndexValue::Float(v) => assert!((v - 3.0).abs() < 1e-12),
            other => panic!("expected float, got {other:?}"),
        }
    }

    #[test]
    fn price_relative_zero_price_gives_zero() {
        let mk = market(&[vec![1, 0], vec![1, 4]]);
        assert_eq!(
            mk.index_value(&mk.all(), IndexKind::PriceRelative, 1).unwrap(),
            IndexValue::Exact(Scalar::zero())
        );
    }

    #[test]
    fn zero_initial_price_rejected_for_ratio_kinds() {
        let mk = market(&[vec![0, 1], vec![1, 1]]);
        for kind in [IndexKind::ValueWeighted, IndexKind::EqualWeighted, IndexKind::PriceRelative] {
            assert!(matches!(
                mk.index_value(&mk.all(), kind, 1),
                Err(Error::ZeroInitialPrice { stock: 0 })
            ));
        }
        assert!(mk.index_value(&mk.all(), IndexKind::PriceWeighted, 1).is_ok());
        assert!(matches!(
            mk.index_ratio(&[0], IndexKind::PriceWeighted, 1),
            Err(Error::ZeroDenominator)
        ));
    }

    #[test]
    fn empty_subset_rejected() {
        let mk = market(&[vec![1, 1]]);
        assert!(matches!(mk.index_value(&[], IndexKind::PriceWeighted, 0), Err(Error::EmptySubset)));
    }

    #[test]
    fn ratio_examples() {
        let mk = market(&[vec![1, 3], vec![1, 5]]);
        assert_eq!(mk.exact_ratio(&mk.all(), IndexKind::PriceWeighted, 1).unwrap(), Scalar::from_int(4));
        for kind in IndexKind::ALL {
            assert_eq!(mk.index_ratio(&mk.all(), kind, 0).unwrap().to_f64(), 1.0);
        }
    }

    #[test]
    fn return_examples() {
        // Φ(0) = 1, Φ(1) = e (as closely as a rational allows), Φ(2) = e².
        let e = Scalar::from_f64_exact(std::f64::consts::E).unwrap();
        let e2 = Scalar::from_f64_exact(std::f64::consts::E * std::f64::consts::E).unwrap();
        let mk = Market::new(vec![vec![Scalar::one(), e, e2]]).unwrap();
        let r1 = mk.one_period_return(&[0], IndexKind::PriceWeighted, 1).unwrap();
        assert!((r1 - 1.0).abs() < 1e-15);
        let avg = mk.average_return(&[0], IndexKind::PriceWeighted, 2).unwrap();
        assert!((avg - 1.0).abs() < 1e-15);

        let flat = market(&[vec![5, 5, 5, 5]]);
        for kind in IndexKind::ALL {
            assert_eq!(flat.one_period_return(&[0], kind, 2).unwrap(), 0.0);
            assert_eq!(flat.average_return(&[0], kind, 3).unwrap(), 0.0);
            assert_eq!(flat.volatility(&[0], kind, 3).unwrap(), 0.0);
        }
    }

    #[test]
    fn volatility_of_symmetric_returns() {
        // Returns +ln 2, −ln 2: mean 0, Δ = √(2x²) = x√2.
        let mk = market(&[vec![1, 2, 1]]);
        let x = std::f64::consts::LN_2;
        let v = mk.volatility(&[0], IndexKind::PriceWeighted, 2).unwrap();
        assert!((v - x * 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn nonpositive_index_rejected_in_returns() {
        let mk = market(&[vec![1, 0, 1]]);
        assert!(matches!(
            mk.one_period_return(&[0], IndexKind::PriceWeighted, 1),
            Err(Error::NonpositiveIndex { t: 1 })
        ));
        assert!(matches!(
            mk.one_period_return(&[0], IndexKind::PriceWeighted, 2),
            Err(Error::NonpositiveIndex { t: 1 })
        ));
    }

    #[test]
    fn time_bounds_enforced() {
        let mk = market(&[vec![1, 2]]);
        assert!(mk.index_value(&[0], IndexKind::PriceWeighted, 2).is_err());
        assert!(mk.one_period_return(&[0], IndexKind::PriceWeighted, 0).is_err());
        assert!(mk.volatility(&[0], IndexKind::PriceWeighted, 1).is_err());
    }

    #[test]
    fn log_market_index_is_mean_exponent() {
        let lm = LogMarket::new(vec![
            vec![Scalar::zero(), Scalar::from_int(1)],
            vec![Scalar::zero(), Scalar::from_int(2)],
        ])
        .unwrap();
        assert_eq!(lm.log2_index(&[0, 1], 1).unwrap(), Scalar::ratio(3, 2));
        assert!(LogMarket::new(vec![vec![Scalar::one()]]).is_err());
    }

    #[test]
    fn portfolio_invariants() {
        let p = Portfolio::new([3, 1, 3], 2, 4).unwrap();
        assert_eq!(p.members(), &[1, 3]);
        assert!(Portfolio::new([0, 1, 2], 2, 4).is_err());
        assert!(Portfolio::new([4], 1, 4).is_err());
        assert!(Portfolio::new([], 1, 4).is_err());
        assert!(Portfolio::new([0], 5, 4).is_err());
    }

    #[test]
    fn market_validation() {
        assert!(Market::from_ints(&[vec![1, -1]]).is_err());
        assert!(Market::from_ints(&[vec![1, 1], vec![1]]).is_err());
        assert!(Market::from_ints(&[]).is_err());
    }

    fn random_market() -> impl Strategy<Value = Market> {
        (1usize..6, 1usize..6).prop_flat_map(|(m, f)| {
            proptest::collection::vec(proptest::collection::vec((1i64..=1024, 1i64..=8), f + 1), m).prop_map(
                |rows| {
                    Market::new(
                        rows.into_iter()
                            .map(|row| row.into_iter().map(|(n, d)| Scalar::ratio(n, d)).collect())
                            .collect(),
                    )
                    .unwrap()
                },
            )
        })
    }

    fn subset_of(m: usize, mask: u32) -> Vec<usize> {
        let s: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
        if s.is_empty() {
            vec![0]
        } else {
            s
        }
    }

    proptest! {
        #[test]
        fn ratio_at_zero_is_one(mk in random_market(), mask in any::<u32>()) {
            let subset = subset_of(mk.m(), mask);
            for kind in IndexKind::ALL {
                prop_assert_eq!(mk.index_ratio(&subset, kind, 0).unwrap().to_f64(), 1.0);
            }
        }

        #[test]
        fn average_return_telescopes(mk in random_market(), mask in any::<u32>()) {
            let subset = subset_of(mk.m(), mask);
            for kind in [IndexKind::PriceWeighted, IndexKind::ValueWeighted, IndexKind::EqualWeighted] {
                for t in 1..=mk.f() {
                    let avg = mk.average_return(&subset, kind, t).unwrap();
                    let direct = mk.exact_ratio(&subset, kind, t).unwrap().ln().unwrap() / t as f64;
                    prop_assert!((avg - direct).abs() <= 1e-9);
                }
            }
        }

        #[test]
        fn constant_prices_have_zero_volatility(m in 1usize..5, f in 2usize..6, level in 1i64..100, mask in any::<u32>()) {
            let mk = Market::from_ints(&vec![vec![level; f + 1]; m]).unwrap();
            let subset = subset_of(m, mask);
            for kind in IndexKind::ALL {
                prop_assert!(mk.volatility(&subset, kind, f).unwrap().abs() <= 1e-12);
            }
        }

        #[test]
        fn unit_start_makes_linear_ratios_coincide(
            rows in proptest::collection::vec(proptest::collection::vec(0i64..50, 1..5), 1..5),
            mask in any::<u32>(),
        ) {
            let f = rows.iter().map(Vec::len).min().unwrap();
            let prices: Vec<Vec<i64>> = rows.iter().map(|r| {
                let mut v = vec![1];
                v.extend_from_slice(&r[..f]);
                v
            }).collect();
            let mk = Market::from_ints(&prices).unwrap();
            let subset = subset_of(mk.m(), mask);
            for t in 0..=mk.f() {
                let r1 = mk.exact_ratio(&subset, IndexKind::PriceWeighted, t).unwrap();
                prop_assert_eq!(&mk.exact_ratio(&subset, IndexKind::ValueWeighted, t).unwrap(), &r1);
                prop_assert_eq!(&mk.exact_ratio(&subset, IndexKind::EqualWeighted, t).unwrap(), &r1);
            }
        }

        #[test]
        fn log_market_index_is_exact_mean(
            rows in proptest::collection::vec(proptest::collection::vec((-20i64..20, 1i64..5), 3), 1..5),
            mask in any::<u32>(),
        ) {
            let exps: Vec<Vec<Scalar>> = rows.iter().map(|r| {
                let mut v = vec![Scalar::zero()];
                v.extend(r.iter().map(|&(n, d)| Scalar::ratio(n, d)));
                v
            }).collect();
            let lm = LogMarket::new(exps.clone()).unwrap();
            let subset = subset_of(lm.m(), mask);
            let picked: Vec<&Vec<Scalar>> = subset.iter().map(|&i| &exps[i]).collect();
            for t in 0..=lm.f() {
                let expected: Scalar = picked.iter().map(|row| &row[t]).sum::<Scalar>() / Scalar::from(subset.len());
                prop_assert_eq!(lm.log2_index(&subset, t).unwrap(), expected);
            }
        }
    }
}
