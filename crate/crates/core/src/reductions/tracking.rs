use serde::{Deserialize, Serialize};

use super::{check_source, ColRole, Constants, ReducedInstance, RowRole};
use crate::bounds::ProxyProblem;
use crate::error::{Error, Result};
use crate::market::{IndexKind, Market};
use crate::scalar::Scalar;
use crate::setcover::SetCoverInstance;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrackingConstants {
    pub eps: Scalar,
    /// Control column value outside the adjustment row.
    pub c0: Scalar,
    /// Control column value in the adjustment row.
    pub c1: Scalar,
    pub v0: Scalar,
    pub gap: Scalar,
    pub v1: Scalar,
    /// Number of `v1` entries per data column.
    pub v1_counts: Vec<usize>,
    /// Adjustment row value per data column.
    pub adjustments: Vec<Scalar>,
}

/// Tracking instance for a price-weighted index: `3n` rows (subsets, then
/// `2n−1` all-`v0` padding rows, then the adjustment row) and columns
/// `[ones, control, one per element]`.
pub fn reduce_tracking(sc: &SetCoverInstance, eps: &Scalar) -> Result<ReducedInstance> {
    check_source(sc)?;
    if !eps.is_positive() || *eps >= 1 {
        return Err(Error::BadEpsilon(format!("{eps} is not in (0, 1)")));
    }
    let n = sc.n();
    let k = Scalar::from(sc.budget());
    let m = 3 * n;
    let one = Scalar::one();
    let rest = &one - eps;

    let c0 = Scalar::from_bigint((&rest / eps).ceil());
    let c1 = &c0 + Scalar::from(m);
    let v0 = Scalar::from_bigint((&k * &rest / eps).ceil());
    let gap = &k + Scalar::from_bigint((eps / &rest).ceil());
    let v1 = &v0 + &gap;

    let universe = sc.universe();
    let v1_counts: Vec<usize> = (0..universe)
        .map(|e| (0..n).filter(|&i| sc.contains(i, e)).count())
        .collect();
    let adjustments: Vec<Scalar> = v1_counts
        .iter()
        .map(|&count| &v0 + Scalar::from(m - count) * &gap)
        .collect();

    let mut prices = Vec::with_capacity(m);
    for i in 0..m {
        let mut row = vec![one.clone(), if i == m - 1 { c1.clone() } else { c0.clone() }];
        for (e, adjustment) in adjustments.iter().enumerate() {
            row.push(if i == m - 1 {
                adjustment.clone()
            } else if i < n && sc.contains(i, e) {
                v1.clone()
            } else {
                v0.clone()
            });
        }
        prices.push(row);
    }

    let mut row_roles = vec![RowRole::CodingRow; n];
    row_roles.extend(std::iter::repeat_n(RowRole::PaddingRow, 2 * n - 1));
    row_roles.push(RowRole::AdjustmentRow);
    let mut col_roles = vec![ColRole::InitialColumn, ColRole::ControlColumn];
    col_roles.extend(std::iter::repeat_n(ColRole::DataColumn, universe));

    Ok(ReducedInstance {
        market: Market::new(prices)?,
        problem: ProxyProblem::track(IndexKind::PriceWeighted, sc.budget(), eps.clone())?,
        row_roles,
        col_roles,
        constants: Constants::Tracking(TrackingConstants { eps: eps.clone(), c0, c1, v0, gap, v1, v1_counts, adjustments }),
        source: sc.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::{Evaluator, FailReason, Side, Verdict};

    #[test]
    fn closed_forms_at_half() {
        let sc = SetCoverInstance::new(2, vec![vec![0], vec![1]], 2).unwrap();
        let inst = reduce_tracking(&sc, &Scalar::ratio(1, 2)).unwrap();
        let c = inst.tracking().unwrap();
        assert_eq!(inst.market.m(), 6);
        assert_eq!(inst.market.f(), 3);
        assert_eq!(
            [&c.c0, &c.c1, &c.v0, &c.gap, &c.v1],
            [&Scalar::from_int(1), &Scalar::from_int(7), &Scalar::from_int(2), &Scalar::from_int(3), &Scalar::from_int(5)]
        );
        // one v1 per column: A = 2 + 5·3
        assert_eq!(c.adjustments, vec![Scalar::from_int(17); 2]);
    }

    #[test]
    fn column_averages() {
        let sc = SetCoverInstance::new(3, vec![vec![0, 1], vec![2], vec![]], 2).unwrap();
        for eps in [Scalar::ratio(1, 4), Scalar::ratio(1, 2), Scalar::ratio(3, 4), Scalar::ratio(1, 7)] {
            let inst = reduce_tracking(&sc, &eps).unwrap();
            let c = inst.tracking().unwrap();
            let all = inst.market.all();
            assert_eq!(inst.market.index_value(&all, IndexKind::PriceWeighted, 1).unwrap().exact().unwrap(), &(&c.c0 + Scalar::one()));
            for t in inst.cols_with(ColRole::DataColumn) {
                assert_eq!(inst.market.index_value(&all, IndexKind::PriceWeighted, t).unwrap().exact().unwrap(), &c.v1);
            }
        }
    }

    #[test]
    fn single_element_example() {
        let sc = SetCoverInstance::new(1, vec![vec![0], vec![]], 1).unwrap();
        let inst = reduce_tracking(&sc, &Scalar::ratio(1, 2)).unwrap();
        let ev = Evaluator::new(&inst.market, &inst.problem).unwrap();
        let passing: Vec<usize> = (0..6).filter(|&i| ev.check(&[i]).unwrap().is_pass()).collect();
        assert_eq!(passing, vec![0]);
        assert_eq!(ev.check(&[5]).unwrap(), Verdict::Fail { t: 1, reason: FailReason::Track(Side::Upper) });
    }

    #[test]
    fn rejects_eps_outside_unit_interval() {
        let sc = SetCoverInstance::new(1, vec![vec![0]], 1).unwrap();
        for eps in [Scalar::zero(), Scalar::one(), Scalar::ratio(3, 2), Scalar::ratio(-1, 2)] {
            assert!(matches!(reduce_tracking(&sc, &eps), Err(Error::BadEpsilon(_))));
        }
    }
}
