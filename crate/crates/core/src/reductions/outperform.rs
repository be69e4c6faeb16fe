use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use super::{check_source, ColRole, Constants, ReducedInstance, RowRole};
use crate::bounds::ProxyProblem;
use crate::error::{Error, Result};
use crate::market::{IndexKind, Market};
use crate::scalar::Scalar;
use crate::setcover::SetCoverInstance;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutperformConstants {
    pub eps: Scalar,
    /// Rows with a one in the control column (`k·n`); the adjustment row follows them.
    pub control_ones: usize,
    /// Indicator count per data column.
    pub ones: Vec<usize>,
    /// Adjustment row value per data column, `n − ones`.
    pub adjustments: Vec<usize>,
}

/// Outperformance instance for a price-weighted index with
/// `⌈(1+ε)kn⌉` rows: subset indicator rows, control-only padding up to `kn`,
/// the adjustment row, then zero rows. Columns are `[ones, control, one per
/// element]`; every data column sums to `n`.
pub fn reduce_outperform(sc: &SetCoverInstance, eps: &Scalar) -> Result<ReducedInstance> {
    check_source(sc)?;
    if !eps.is_positive() {
        return Err(Error::BadEpsilon(format!("{eps} must be positive")));
    }
    let n = sc.n();
    let k = sc.budget();
    let kn = k * n;
    let m_big = ((Scalar::one() + eps) * Scalar::from(kn)).ceil();
    let m = m_big
        .to_usize()
        .filter(|&m| m <= 10_000_000)
        .ok_or_else(|| Error::TooLarge(format!("{m_big} rows")))?;

    let universe = sc.universe();
    let ones: Vec<usize> = (0..universe).map(|e| (0..n).filter(|&i| sc.contains(i, e)).count()).collect();
    let adjustments: Vec<usize> = ones.iter().map(|&c| n - c).collect();

    let int = |v: usize| Scalar::from(v);
    let prices: Vec<Vec<Scalar>> = (0..m)
        .map(|i| {
            let mut row = vec![Scalar::one(), int(usize::from(i < kn))];
            row.extend((0..universe).map(|e| {
                if i < n {
                    int(usize::from(sc.contains(i, e)))
                } else if i == kn {
                    int(adjustments[e])
                } else {
                    Scalar::zero()
                }
            }));
            row
        })
        .collect();

    let row_roles = (0..m)
        .map(|i| match i {
            _ if i < n => RowRole::CodingRow,
            _ if i == kn => RowRole::AdjustmentRow,
            _ => RowRole::PaddingRow,
        })
        .collect();
    let mut col_roles = vec![ColRole::InitialColumn, ColRole::ControlColumn];
    col_roles.extend(std::iter::repeat_n(ColRole::DataColumn, universe));

    Ok(ReducedInstance {
        market: Market::new(prices)?,
        problem: ProxyProblem::outperform(IndexKind::PriceWeighted, k, eps.clone())?,
        row_roles,
        col_roles,
        constants: Constants::Outperform(OutperformConstants { eps: eps.clone(), control_ones: kn, ones, adjustments }),
        source: sc.clone(),
    })
}
