use serde::{Deserialize, Serialize};

use super::{Constants, ReducedInstance};
use crate::bounds::{LogBound, LogMode, LogProblem};
use crate::error::{Error, Result};
use crate::market::LogMarket;
use crate::scalar::{lcm_all, Scalar};

pub const DEFAULT_LCM_CAP_BITS: u64 = 4096;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrTransform {
    pub mode: LogMode,
    /// Column sums for `t = 1..=f`.
    pub column_sums: Vec<Scalar>,
    pub lcm: Scalar,
    /// `lcm / column_sum` per column.
    pub scale: Vec<Scalar>,
    /// Bound of the source instance.
    pub eps_prime: Scalar,
    pub lambda: LogBound,
}

impl PrTransform {
    pub fn log_problem(&self, k: usize) -> LogProblem {
        LogProblem { k, bound: self.lambda.clone(), mode: self.mode }
    }
}

pub fn transform_price_relative(instance: &ReducedInstance, mode: LogMode) -> Result<(LogMarket, PrTransform)> {
    transform_price_relative_capped(instance, mode, DEFAULT_LCM_CAP_BITS)
}

/// Scales every column `t ≥ 1` so that all column sums equal their lcm `c`
/// and reads the scaled prices as base-2 exponents. The mean exponent of a
/// portfolio then sits at least `λ` above the market's exactly when the
/// source portfolio meets its lower tracking bound (`λ = −ε·c/m`) or its
/// outperformance bound (`λ = ε·c/m`).
pub fn transform_price_relative_capped(
    instance: &ReducedInstance,
    mode: LogMode,
    cap_bits: u64,
) -> Result<(LogMarket, PrTransform)> {
    let eps = match (&instance.constants, mode) {
        (Constants::Tracking(c), LogMode::TrackLower) => c.eps.clone(),
        (Constants::Outperform(c), LogMode::Outperform) => c.eps.clone(),
        (other, _) => {
            return Err(Error::WrongProvenance(format!(
                "{} instance cannot be transformed in {mode:?} mode",
                other.family_name()
            )))
        }
    };
    let market = &instance.market;
    if market.uniform_initial_price().is_none() {
        return Err(Error::NonUniformInitialColumn);
    }
    let (m, f) = (market.m(), market.f());
    let column_sums: Vec<Scalar> = (1..=f)
        .map(|t| (0..m).map(|i| market.price(i, t)).sum::<Scalar>())
        .collect();
    if let Some(t) = column_sums.iter().position(|c| !c.is_positive() || !c.is_integer()) {
        return Err(Error::BadParams(format!("column {} sum {} is not a positive integer", t + 1, column_sums[t])));
    }
    let lcm = lcm_all(column_sums.iter().map(Scalar::numer));
    if lcm.bits() > cap_bits {
        return Err(Error::HugeLcm { bits: lcm.bits(), cap: cap_bits });
    }
    let lcm = Scalar::from_bigint(lcm);
    let scale: Vec<Scalar> = column_sums.iter().map(|c| &lcm / c).collect();

    let exponents: Vec<Vec<Scalar>> = (0..m)
        .map(|i| {
            let mut row = vec![Scalar::zero()];
            row.extend((1..=f).map(|t| &scale[t - 1] * market.price(i, t)));
            row
        })
        .collect();
    for t in 1..=f {
        let sum: Scalar = exponents.iter().map(|row| &row[t]).sum();
        if sum != lcm {
            return Err(Error::SelfCheck(format!("scaled column {t} sums to {sum}, expected {lcm}")));
        }
    }

    let magnitude = &eps * &lcm / Scalar::from(m);
    let lambda = match mode {
        LogMode::TrackLower => -magnitude,
        LogMode::Outperform => magnitude,
    };
    Ok((
        LogMarket::new(exponents)?,
        PrTransform { mode, column_sums, lcm, scale, eps_prime: eps, lambda: LogBound { lambda } },
    ))
}
