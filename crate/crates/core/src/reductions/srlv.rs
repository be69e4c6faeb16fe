use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use super::{check_source, ColRole, Constants, ReducedInstance, RowRole};
use crate::bounds::ProxyProblem;
use crate::error::{Error, Result};
use crate::market::{IndexKind, Market};
use crate::scalar::Scalar;
use crate::setcover::SetCoverInstance;

/// Row count above which construction is refused.
pub const MAX_SRLV_ROWS: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SrlvConstants {
    pub alpha: Scalar,
    pub beta: Scalar,
    /// Index of the last padding column.
    pub p: usize,
    pub q: u32,
    /// Rows per source subset.
    pub b: Scalar,
    pub v1: Scalar,
    pub v2: Scalar,
    /// Empty subsets appended to the source so that enough distinct rows
    /// carry adjustment values.
    pub padded_subsets: usize,
    /// Zero count per coding column.
    pub zeros: Vec<usize>,
    /// `(row, column, value)` for every adjustment value.
    pub adjustments: Vec<(usize, usize, Scalar)>,
}

impl SrlvConstants {
    /// `⌊B/α⌋`.
    pub fn b_over_alpha(&self) -> Scalar {
        Scalar::from_bigint((&self.b / &self.alpha).floor())
    }

    /// Closed-form market average of column `t`.
    pub fn market_average(&self, t: usize) -> Scalar {
        let scale = (&self.b - Scalar::one()) / &self.b;
        if t == 0 {
            self.v1.clone()
        } else if t <= self.p && t % 2 == 1 {
            scale
        } else {
            scale * self.b_over_alpha()
        }
    }

    /// Distinct rows holding an adjustment value.
    pub fn adjustment_rows(&self) -> Vec<usize> {
        let mut rows: Vec<usize> = self.adjustments.iter().map(|a| a.0).collect();
        rows.sort_unstable();
        rows.dedup();
        rows
    }
}

/// Least `q ≥ ⌈1 + 4/β⌉` with `α·k^q ≥ 2`.
fn exponent(alpha: &Scalar, beta: &Scalar, k: usize) -> Result<u32> {
    let floor_q = (Scalar::one() + Scalar::from_int(4) / beta).ceil();
    let mut q = floor_q
        .to_u32()
        .filter(|&q| q <= 4096)
        .ok_or_else(|| Error::TooLarge(format!("exponent q = {floor_q} for beta = {beta}")))?;
    let k = Scalar::from(k);
    let mut power = k.pow(q as i32);
    while alpha * &power < 2 {
        q += 1;
        power = &power * &k;
    }
    Ok(q)
}

/// Return-for-volatility instance for a price-weighted index.
///
/// Columns are `0..=P` padding (0 initial, odd type-2, even type-1) then one
/// coding column per element; rows are `B` per source subset, the subsets
/// first. The source is padded with empty subsets until at least `k+1`
/// padding rows exist to hold type-1 adjustments.
pub fn reduce_srlv(sc: &SetCoverInstance, alpha: &Scalar, beta: &Scalar) -> Result<ReducedInstance> {
    check_source(sc)?;
    if !alpha.is_positive() || !beta.is_positive() {
        return Err(Error::BadParams(format!("alpha={alpha} and beta={beta} must be positive")));
    }
    let k = sc.budget();
    if k < 2 {
        return Err(Error::BadParams("the return-for-volatility reduction needs k >= 2".into()));
    }
    let universe = sc.universe();
    let p = (2 * (k + 1)).max(2 * universe);
    let q = exponent(alpha, beta, k)?;
    let b_big: BigInt = (alpha * Scalar::from(k).pow(q as i32)).ceil();
    let b = b_big
        .to_usize()
        .filter(|&b| b <= MAX_SRLV_ROWS)
        .ok_or_else(|| Error::TooLarge(format!("B = {b_big} rows per subset")))?;

    let needed = (k + 1).div_ceil(b - 1);
    let padded_subsets = needed.saturating_sub(sc.n());
    let source = sc.padded(padded_subsets);
    let n = source.n();
    let m = n
        .checked_mul(b)
        .filter(|&m| m <= MAX_SRLV_ROWS)
        .ok_or_else(|| Error::TooLarge(format!("{n}·{b} rows")))?;

    let bs = Scalar::from(b);
    let v1 = &bs - Scalar::one();
    let v2 = Scalar::from(k) * &v1;
    let b_over_alpha = Scalar::from_bigint((&bs / alpha).floor());
    let spare = Scalar::from(m - n);
    let type1_adjust = &spare * (&b_over_alpha - Scalar::one());

    let f = p + universe;
    let mut prices = vec![vec![Scalar::zero(); f + 1]; m];
    for (i, row) in prices.iter_mut().enumerate() {
        row[0] = v1.clone();
        if i < n {
            for cell in row.iter_mut().take(p + 1).skip(1) {
                *cell = v1.clone();
            }
            for e in 0..universe {
                if source.contains(i, e) {
                    row[p + 1 + e] = v2.clone();
                }
            }
        }
    }

    let mut adjustments = Vec::new();
    for t in (2..=p).step_by(2) {
        let row = (n - 1 + t / 2).min(m - 1);
        adjustments.push((row, t, type1_adjust.clone()));
    }
    let zeros: Vec<usize> = (0..universe)
        .map(|e| (0..n).filter(|&i| !source.contains(i, e)).count())
        .collect();
    for (e, &z) in zeros.iter().enumerate() {
        let value = &spare * (&b_over_alpha - Scalar::from(k)) + Scalar::from(z) * &v2;
        adjustments.push((m - 1, p + 1 + e, value));
    }
    for (row, col, value) in &adjustments {
        prices[*row][*col] = &prices[*row][*col] + value;
    }

    let mut row_roles = vec![RowRole::CodingRow; n];
    row_roles.extend(std::iter::repeat_n(RowRole::PaddingRow, m - n));
    let mut col_roles = vec![ColRole::InitialColumn];
    col_roles.extend((1..=p).map(|t| if t % 2 == 1 { ColRole::Type2Padding } else { ColRole::Type1Padding }));
    col_roles.extend(std::iter::repeat_n(ColRole::CodingColumn, universe));

    Ok(ReducedInstance {
        market: Market::new(prices)?,
        problem: ProxyProblem::srlv(IndexKind::PriceWeighted, k, alpha.clone(), beta.clone())?,
        row_roles,
        col_roles,
        constants: Constants::Srlv(SrlvConstants {
            alpha: alpha.clone(),
            beta: beta.clone(),
            p,
            q,
            b: bs,
            v1,
            v2,
            padded_subsets,
            zeros,
            adjustments,
        }),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::{Evaluator, FailReason, Verdict};

    fn sc3() -> SetCoverInstance {
        SetCoverInstance::new(3, vec![vec![0, 1], vec![2], vec![1]], 2).unwrap()
    }

    #[test]
    fn closed_forms() {
        let inst = reduce_srlv(&sc3(), &Scalar::one(), &Scalar::from_int(4)).unwrap();
        let c = inst.srlv().unwrap();
        assert_eq!((c.q, c.p), (2, 6));
        assert_eq!([&c.b, &c.v1, &c.v2], [&Scalar::from_int(4), &Scalar::from_int(3), &Scalar::from_int(6)]);
        assert_eq!(inst.market.m(), 12);
        assert_eq!(inst.market.f(), 9);
        assert_eq!(c.padded_subsets, 0);
    }

    #[test]
    fn exponent_follows_alpha() {
        // α = 1/2, k = 2: α·2² = 2 already, q stays at ⌈1 + 4/4⌉ = 2.
        assert_eq!(exponent(&Scalar::ratio(1, 2), &Scalar::from_int(4), 2).unwrap(), 2);
        // α = 1/8: needs 2^q ≥ 16.
        assert_eq!(exponent(&Scalar::ratio(1, 8), &Scalar::from_int(4), 2).unwrap(), 4);
        // small β drives q up
        assert_eq!(exponent(&Scalar::one(), &Scalar::ratio(1, 2), 3).unwrap(), 9);
    }

    #[test]
    fn market_averages_match_table() {
        for (alpha, k) in [(Scalar::ratio(1, 2), 2), (Scalar::one(), 2), (Scalar::from_int(2), 3), (Scalar::ratio(3, 2), 2)] {
            let sc = sc3().with_budget(k).unwrap();
            let inst = reduce_srlv(&sc, &alpha, &Scalar::from_int(4)).unwrap();
            let c = inst.srlv().unwrap();
            let all = inst.market.all();
            for t in 0..=inst.market.f() {
                let avg = inst.market.index_value(&all, IndexKind::PriceWeighted, t).unwrap();
                assert_eq!(avg.exact().unwrap(), &c.market_average(t), "alpha={alpha} t={t}");
            }
            assert!(c.adjustment_rows().len() > k);
            assert!(c.adjustments.iter().all(|a| !a.2.is_negative()));
        }
    }

    #[test]
    fn small_source_gets_padded() {
        // α = 1/2, k = 2 gives B = 2, so one subset leaves a single spare row.
        let sc = SetCoverInstance::new(1, vec![vec![0], vec![0]], 2).unwrap();
        let inst = reduce_srlv(&sc, &Scalar::ratio(1, 2), &Scalar::from_int(4)).unwrap();
        let c = inst.srlv().unwrap();
        assert_eq!(c.b, Scalar::from_int(2));
        assert_eq!(c.padded_subsets, 1);
        assert_eq!(inst.source.n(), 3);
        assert!(c.adjustment_rows().len() >= 3);
    }

    #[test]
    fn cover_passes_and_padding_row_fails() {
        let inst = reduce_srlv(&sc3(), &Scalar::one(), &Scalar::from_int(4)).unwrap();
        let ev = Evaluator::new(&inst.market, &inst.problem).unwrap();
        assert_eq!(ev.check(&inst.portfolio_for_cover(&[0, 1])).unwrap(), Verdict::Pass);
        match ev.check(&[0, 5]).unwrap() {
            Verdict::Fail { t, reason: FailReason::Performance } => {
                assert_eq!(inst.col_roles[t], ColRole::Type1Padding)
            }
            other => panic!("expected a performance failure, got {other}"),
        }
    }

    #[test]
    fn rejects_k_one_and_bad_params() {
        let sc = SetCoverInstance::new(1, vec![vec![0]], 1).unwrap();
        assert!(matches!(reduce_srlv(&sc, &Scalar::one(), &Scalar::one()), Err(Error::BadParams(_))));
        let sc2 = sc3();
        assert!(reduce_srlv(&sc2, &Scalar::zero(), &Scalar::one()).is_err());
        assert!(reduce_srlv(&sc2, &Scalar::one(), &Scalar::ratio(-1, 1)).is_err());
    }
}
