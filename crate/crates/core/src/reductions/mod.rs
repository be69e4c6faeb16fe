//! Hard proxy-selection instances built from set cover, and the transforms
//! that carry them to the other index kinds.

mod outperform;
mod price_relative;
mod srlv;
mod tracking;

use serde::{Deserialize, Serialize};

pub use outperform::{reduce_outperform, OutperformConstants};
pub use price_relative::{transform_price_relative, transform_price_relative_capped, PrTransform, DEFAULT_LCM_CAP_BITS};
pub use srlv::{reduce_srlv, SrlvConstants, MAX_SRLV_ROWS};
pub use tracking::{reduce_tracking, TrackingConstants};

use crate::bounds::ProxyProblem;
use crate::error::{Error, Result};
use crate::market::{IndexKind, Market};
use crate::setcover::SetCoverInstance;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowRole {
    /// One row per source subset.
    CodingRow,
    PaddingRow,
    AdjustmentRow,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColRole {
    InitialColumn,
    ControlColumn,
    /// One column per universe element (tracking and outperform layouts).
    DataColumn,
    Type1Padding,
    Type2Padding,
    /// One column per universe element (return-for-volatility layout).
    CodingColumn,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Constants {
    Tracking(TrackingConstants),
    Srlv(SrlvConstants),
    Outperform(OutperformConstants),
}

impl Constants {
    pub fn family_name(&self) -> &'static str {
        match self {
            Constants::Tracking(_) => "tracking",
            Constants::Srlv(_) => "srlv",
            Constants::Outperform(_) => "outperform",
        }
    }
}

/// A constructed instance together with the tags needed to audit it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReducedInstance {
    pub market: Market,
    pub problem: ProxyProblem,
    pub row_roles: Vec<RowRole>,
    pub col_roles: Vec<ColRole>,
    pub constants: Constants,
    /// The set cover instance the market encodes, after any padding.
    pub source: SetCoverInstance,
}

impl ReducedInstance {
    pub fn rows_with(&self, role: RowRole) -> Vec<usize> {
        (0..self.row_roles.len()).filter(|&i| self.row_roles[i] == role).collect()
    }

    pub fn cols_with(&self, role: ColRole) -> Vec<usize> {
        (0..self.col_roles.len()).filter(|&t| self.col_roles[t] == role).collect()
    }

    /// Column index of a universe element.
    pub fn element_column(&self, element: usize) -> usize {
        let data = self.cols_with(ColRole::DataColumn);
        let cols = if data.is_empty() { self.cols_with(ColRole::CodingColumn) } else { data };
        cols[element]
    }

    pub fn tracking(&self) -> Result<&TrackingConstants> {
        match &self.constants {
            Constants::Tracking(c) => Ok(c),
            other => Err(Error::WrongProvenance(format!("expected a tracking instance, got {}", other.family_name()))),
        }
    }

    pub fn srlv(&self) -> Result<&SrlvConstants> {
        match &self.constants {
            Constants::Srlv(c) => Ok(c),
            other => Err(Error::WrongProvenance(format!("expected an srlv instance, got {}", other.family_name()))),
        }
    }

    pub fn outperform(&self) -> Result<&OutperformConstants> {
        match &self.constants {
            Constants::Outperform(c) => Ok(c),
            other => Err(Error::WrongProvenance(format!(
                "expected an outperform instance, got {}",
                other.family_name()
            ))),
        }
    }

    /// Portfolio of the coding rows for a selection of source subsets.
    pub fn portfolio_for_cover(&self, selection: &[usize]) -> Vec<usize> {
        let coding = self.rows_with(RowRole::CodingRow);
        let mut rows: Vec<usize> = selection.iter().map(|&i| coding[i]).collect();
        rows.sort_unstable();
        rows.dedup();
        rows
    }
}

/// Same prices and roles with unit shares and the problem moved to a
/// value-weighted or equal-weighted index.
pub fn adapt_index(instance: &ReducedInstance, kind: IndexKind) -> Result<ReducedInstance> {
    if !matches!(kind, IndexKind::ValueWeighted | IndexKind::EqualWeighted) {
        return Err(Error::UnsupportedKind(kind.number()));
    }
    if instance.market.uniform_initial_price().is_none() {
        return Err(Error::NonUniformInitialColumn);
    }
    Ok(ReducedInstance {
        market: instance.market.with_unit_shares(),
        problem: instance.problem.with_kind(kind),
        ..instance.clone()
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeReport {
    pub rows: usize,
    pub columns: usize,
    pub max_value_bits: u64,
    pub total_bits: u64,
}

/// Bit size of the price matrix, numerators and denominators together.
pub fn size_report(market: &Market) -> SizeReport {
    let mut max_value_bits = 0;
    let mut total_bits = 0;
    for row in market.prices() {
        for p in row {
            let bits = p.numer().bits() + p.denom().bits();
            max_value_bits = max_value_bits.max(bits);
            total_bits += bits;
        }
    }
    SizeReport { rows: market.m(), columns: market.f() + 1, max_value_bits, total_bits }
}

pub(crate) fn check_source(sc: &SetCoverInstance) -> Result<()> {
    if sc.universe() == 0 {
        return Err(Error::InvalidInstance("reductions need a non-empty universe".into()));
    }
    Ok(())
}
