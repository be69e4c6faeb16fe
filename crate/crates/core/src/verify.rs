//! Structural audits of constructed instances and end-to-end certification
//! against the set cover oracle.

use std::fmt;
use std::str::FromStr;

use itertools::Itertools;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{check_log_members, Evaluator, FailReason, LogMode, Side, Verdict};
use crate::error::{Error, Result};
use crate::market::{IndexKind, LogMarket};
use crate::reductions::{
    adapt_index, reduce_outperform, reduce_srlv, reduce_tracking, transform_price_relative, ColRole, Constants,
    PrTransform, ReducedInstance, RowRole,
};
use crate::scalar::Scalar;
use crate::setcover::{brute_force_min_cover, CoverResult, SetCoverInstance};
use crate::solver::{binomial, solve_exact, solve_exact_log, SolveOptions};

/// Exhaustive portfolio sampling up to this many subsets, random beyond.
pub const EXHAUSTIVE_SAMPLE_LIMIT: u128 = 10_000;
pub const RANDOM_SAMPLES: usize = 1_000;
pub const AUDIT_SEED: u64 = 0x5eed;
/// Least relative slack the volatility margins must show.
pub const VOLATILITY_MARGIN: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditCheck {
    pub name: String,
    pub passed: bool,
    pub details: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub checks: Vec<AuditCheck>,
    pub overall: bool,
}

impl AuditReport {
    fn new() -> Self {
        AuditReport { checks: Vec::new(), overall: true }
    }

    fn push(&mut self, name: &str, passed: bool, details: impl Into<String>) {
        self.overall &= passed;
        self.checks.push(AuditCheck { name: name.into(), passed, details: details.into() });
    }

    pub fn check(&self, name: &str) -> Option<&AuditCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for AuditReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "[{}] {}: {}", if c.passed { "ok" } else { "FAIL" }, c.name, c.details)?;
        }
        write!(f, "overall: {}", if self.overall { "pass" } else { "fail" })
    }
}

/// Size-`k` subsets of `0..m` that contain `pin` (if given): all of them
/// when few enough, else a fixed-seed random sample.
pub fn sample_portfolios(m: usize, k: usize, pin: Option<usize>, seed: u64) -> Vec<Vec<usize>> {
    let k = k.min(m);
    let pool: Vec<usize> = (0..m).filter(|&i| Some(i) != pin).collect();
    let pick = k - usize::from(pin.is_some());
    let with_pin = |mut s: Vec<usize>| {
        s.extend(pin);
        s.sort_unstable();
        s
    };
    if binomial(pool.len(), pick) <= EXHAUSTIVE_SAMPLE_LIMIT {
        return pool.iter().copied().combinations(pick).map(with_pin).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..RANDOM_SAMPLES)
        .map(|_| with_pin(sample(&mut rng, pool.len(), pick).into_iter().map(|j| pool[j]).collect()))
        .collect()
}

fn average(inst: &ReducedInstance, t: usize) -> Result<Scalar> {
    let all = inst.market.all();
    Ok(inst.market.index_value(&all, IndexKind::PriceWeighted, t)?.exact().cloned().unwrap_or_default())
}

fn all_nonnegative_integers(inst: &ReducedInstance) -> bool {
    inst.market.prices().iter().flatten().all(|p| p.is_integer() && !p.is_negative())
}

pub fn audit_tracking_instance(inst: &ReducedInstance) -> Result<AuditReport> {
    let c = inst.tracking()?;
    let mut report = AuditReport::new();
    let one = Scalar::one();
    let eps = &c.eps;

    let control = inst.cols_with(ColRole::ControlColumn);
    let control_avg = match control.as_slice() {
        [t] => Some(average(inst, *t)?),
        _ => None,
    };
    let share = (&c.c0 + &one).recip();
    let sandwich = eps / (&one + eps) < share && share <= *eps;
    report.push(
        "control_column",
        control_avg.as_ref() == Some(&(&c.c0 + &one)) && sandwich,
        format!(
            "average {} (expected {}), eps/(1+eps) < 1/(c0+1) = {share} <= eps: {sandwich}",
            control_avg.map_or("missing".into(), |a| a.to_string()),
            &c.c0 + &one
        ),
    );

    let mut bad = Vec::new();
    for t in inst.cols_with(ColRole::DataColumn) {
        let avg = average(inst, t)?;
        if avg != c.v1 {
            bad.push(format!("t={t}: {avg}"));
        }
    }
    report.push(
        "data_column_averages",
        bad.is_empty(),
        if bad.is_empty() { format!("all equal v1 = {}", c.v1) } else { bad.join(", ") },
    );

    let adjustment = inst.rows_with(RowRole::AdjustmentRow);
    let ev = Evaluator::new(&inst.market, &inst.problem)?;
    let mut adjust_failures = 0;
    let mut sampled = 0;
    if let (Some(&row), [t]) = (adjustment.first(), control.as_slice()) {
        for s in sample_portfolios(inst.market.m(), inst.problem.k, Some(row), AUDIT_SEED) {
            sampled += 1;
            if ev.check(&s)? != (Verdict::Fail { t: *t, reason: FailReason::Track(Side::Upper) }) {
                adjust_failures += 1;
            }
        }
    }
    report.push(
        "adjustment_row_excluded",
        adjustment.len() == 1 && sampled > 0 && adjust_failures == 0,
        format!("{sampled} portfolios with the adjustment row, {adjust_failures} escaped the control column"),
    );

    let low = &c.v0 / &c.v1;
    let below = low < &one - eps;
    report.push(
        "uncovered_column_fails",
        below,
        format!("all-v0 ratio v0/v1 = {low} {} 1-eps = {}", if below { "<" } else { ">=" }, &one - eps),
    );

    report.push("integer_prices", all_nonnegative_integers(inst), "prices are non-negative integers");
    Ok(report)
}

/// Relative slack of the two volatility margins on a return-for-volatility
/// instance: market volatility above `(2/β)·ln k` and cover-derived
/// portfolio volatility below `2·ln k`, at every `t > P`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SrlvMargins {
    pub market_slack: f64,
    /// `None` when the source has no cover.
    pub portfolio_slack: Option<f64>,
    pub portfolio: Option<Vec<usize>>,
}

pub fn srlv_margins(inst: &ReducedInstance) -> Result<SrlvMargins> {
    let c = inst.srlv()?;
    let k = inst.problem.k;
    let ln_k = (k as f64).ln();
    let beta = c.beta.to_f64();
    let all = inst.market.all();
    let market_vol = inst.market.volatility_series(&all, IndexKind::PriceWeighted)?;
    let f = inst.market.f();
    // series index s-2 holds Δ at time s
    let floor = 2.0 / beta * ln_k;
    let market_slack = (c.p + 1..=f)
        .map(|t| market_vol[t - 2] / floor - 1.0)
        .fold(f64::INFINITY, f64::min);

    let portfolio = match brute_force_min_cover(&inst.source)? {
        CoverResult::Cover(sel) => {
            let mut rows = inst.portfolio_for_cover(&sel);
            for r in inst.rows_with(RowRole::CodingRow) {
                if rows.len() >= k {
                    break;
                }
                if !rows.contains(&r) {
                    rows.push(r);
                }
            }
            rows.sort_unstable();
            Some(rows)
        }
        CoverResult::Infeasible => None,
    };
    let portfolio_slack = match &portfolio {
        Some(rows) => {
            let vol = inst.market.volatility_series(rows, IndexKind::PriceWeighted)?;
            let cap = 2.0 * ln_k;
            Some((c.p + 1..=f).map(|t| 1.0 - vol[t - 2] / cap).fold(f64::INFINITY, f64::min))
        }
        None => None,
    };
    Ok(SrlvMargins { market_slack, portfolio_slack, portfolio })
}

pub fn audit_srlv_instance(inst: &ReducedInstance) -> Result<AuditReport> {
    let c = inst.srlv()?;
    let mut report = AuditReport::new();

    let mut bad = Vec::new();
    for t in 0..=inst.market.f() {
        let (avg, expected) = (average(inst, t)?, c.market_average(t));
        if avg != expected {
            bad.push(format!("t={t}: {avg} != {expected}"));
        }
    }
    report.push(
        "market_averages",
        bad.is_empty(),
        if bad.is_empty() { "every column matches the closed form".to_string() } else { bad.join(", ") },
    );

    let margins = srlv_margins(inst)?;
    report.push(
        "market_volatility_floor",
        margins.market_slack >= VOLATILITY_MARGIN,
        format!("least relative slack {:.3e}", margins.market_slack),
    );
    match margins.portfolio_slack {
        Some(slack) => report.push(
            "portfolio_volatility_cap",
            slack >= VOLATILITY_MARGIN,
            format!("portfolio {:?}, least relative slack {slack:.3e}", margins.portfolio.unwrap_or_default()),
        ),
        None => report.push("portfolio_volatility_cap", true, "source has no cover; nothing to bound"),
    }

    let rows = c.adjustment_rows();
    let padding_rows = rows.iter().filter(|&&r| inst.row_roles[r] == RowRole::PaddingRow).count();
    report.push(
        "distinct_adjustment_rows",
        padding_rows > inst.problem.k,
        format!("{padding_rows} padding rows hold adjustments, need more than k = {}", inst.problem.k),
    );
    let negative = c.adjustments.iter().filter(|a| a.2.is_negative()).count();
    report.push("adjustments_nonnegative", negative == 0, format!("{negative} negative adjustment values"));
    report.push("integer_prices", all_nonnegative_integers(inst), "prices are non-negative integers");
    Ok(report)
}

pub fn audit_outperform_instance(inst: &ReducedInstance) -> Result<AuditReport> {
    let c = inst.outperform()?;
    let mut report = AuditReport::new();
    let n = inst.source.n();
    let m = inst.market.m();

    let expected_m = ((Scalar::one() + &c.eps) * Scalar::from(c.control_ones)).ceil();
    report.push("row_count", expected_m == m.into(), format!("m = {m}, ceil((1+eps)kn) = {expected_m}"));

    let mut bad = Vec::new();
    for t in inst.cols_with(ColRole::DataColumn) {
        let sum: Scalar = (0..m).map(|i| inst.market.price(i, t)).sum();
        if sum != Scalar::from(n) {
            bad.push(format!("t={t}: {sum}"));
        }
    }
    report.push(
        "data_column_sums",
        bad.is_empty(),
        if bad.is_empty() { format!("all equal n = {n}") } else { bad.join(", ") },
    );

    let adjust = inst.rows_with(RowRole::AdjustmentRow);
    let in_range = adjust.len() == 1
        && inst
            .cols_with(ColRole::DataColumn)
            .iter()
            .all(|&t| *inst.market.price(adjust[0], t) <= n as i64);
    report.push("adjustments_in_range", in_range, format!("adjustment entries within [0, {n}]"));

    let control = inst.cols_with(ColRole::ControlColumn);
    let ok = match control.as_slice() {
        [t] => average(inst, *t)? == Scalar::ratio(c.control_ones as i64, m as i64),
        _ => false,
    };
    report.push("control_average", ok, format!("control average kn/m = {}/{m}", c.control_ones));
    report.push("integer_prices", all_nonnegative_integers(inst), "prices are non-negative integers");
    Ok(report)
}

/// Audit by provenance.
pub fn audit(inst: &ReducedInstance) -> Result<AuditReport> {
    match inst.constants {
        Constants::Tracking(_) => audit_tracking_instance(inst),
        Constants::Srlv(_) => audit_srlv_instance(inst),
        Constants::Outperform(_) => audit_outperform_instance(inst),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Track,
    Srlv,
    Outperform,
    TrackPr,
    OutperformPr,
    /// The three base reductions read through a value-weighted index.
    Kind2,
    /// The three base reductions read through an equal-weighted index.
    Kind3,
}

impl Family {
    pub const ALL: [Family; 7] = [
        Family::Track,
        Family::Srlv,
        Family::Outperform,
        Family::TrackPr,
        Family::OutperformPr,
        Family::Kind2,
        Family::Kind3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Track => "track",
            Family::Srlv => "srlv",
            Family::Outperform => "outperform",
            Family::TrackPr => "track-pr",
            Family::OutperformPr => "outperform-pr",
            Family::Kind2 => "kind2",
            Family::Kind3 => "kind3",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::BadParams(format!("unknown family `{s}`")))
    }
}

/// Reduction parameters; each family reads the ones it needs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyParams {
    /// Tracking bound.
    pub eps: Scalar,
    /// Outperformance bound.
    pub eps2: Scalar,
    pub alpha: Scalar,
    pub beta: Scalar,
}

impl Default for FamilyParams {
    fn default() -> Self {
        FamilyParams {
            eps: Scalar::ratio(1, 2),
            eps2: Scalar::ratio(1, 2),
            alpha: Scalar::one(),
            beta: Scalar::from_int(4),
        }
    }
}

/// Instances a family builds from one source.
#[allow(clippy::large_enum_variant)]
pub enum Built {
    Linear(ReducedInstance),
    Log { instance: ReducedInstance, market: LogMarket, transform: PrTransform },
}

impl Built {
    pub fn instance(&self) -> &ReducedInstance {
        match self {
            Built::Linear(i) | Built::Log { instance: i, .. } => i,
        }
    }
}

/// The return-for-volatility reduction needs `K ≥ 2`; composite families
/// skip it for `K = 1`, the plain family refuses.
pub fn build(sc: &SetCoverInstance, family: Family, params: &FamilyParams) -> Result<Vec<Built>> {
    let log = |instance: ReducedInstance, mode| -> Result<Built> {
        let (market, transform) = transform_price_relative(&instance, mode)?;
        Ok(Built::Log { instance, market, transform })
    };
    Ok(match family {
        Family::Track => vec![Built::Linear(reduce_tracking(sc, &params.eps)?)],
        Family::Srlv => vec![Built::Linear(reduce_srlv(sc, &params.alpha, &params.beta)?)],
        Family::Outperform => vec![Built::Linear(reduce_outperform(sc, &params.eps2)?)],
        Family::TrackPr => vec![log(reduce_tracking(sc, &params.eps)?, LogMode::TrackLower)?],
        Family::OutperformPr => vec![log(reduce_outperform(sc, &params.eps2)?, LogMode::Outperform)?],
        Family::Kind2 | Family::Kind3 => {
            let kind = if family == Family::Kind2 { IndexKind::ValueWeighted } else { IndexKind::EqualWeighted };
            let mut bases = vec![reduce_tracking(sc, &params.eps)?, reduce_outperform(sc, &params.eps2)?];
            if sc.budget() >= 2 {
                bases.push(reduce_srlv(sc, &params.alpha, &params.beta)?);
            }
            bases.iter().map(|b| adapt_index(b, kind).map(Built::Linear)).collect::<Result<_>>()?
        }
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Certificate {
    Equivalent,
    CounterexampleFound(String),
}

impl Certificate {
    pub fn is_equivalent(&self) -> bool {
        matches!(self, Certificate::Equivalent)
    }
}

pub const CERTIFY_MAX_N: usize = 5;
pub const CERTIFY_MAX_UNIVERSE: usize = 4;
pub const CERTIFY_MAX_K: usize = 3;

/// Builds the family's instance, solves it exactly and compares with the
/// set cover oracle. Log-domain families also compare every portfolio's
/// verdict with the lower bound check on the source instance.
pub fn certify_equivalence(sc: &SetCoverInstance, family: Family, params: &FamilyParams) -> Result<Certificate> {
    if sc.n() > CERTIFY_MAX_N || sc.universe() > CERTIFY_MAX_UNIVERSE || sc.budget() > CERTIFY_MAX_K {
        return Err(Error::TooLarge(format!(
            "certification needs n <= {CERTIFY_MAX_N}, |S| <= {CERTIFY_MAX_UNIVERSE}, K <= {CERTIFY_MAX_K}"
        )));
    }
    let covered = brute_force_min_cover(sc)?.is_cover();
    let options = SolveOptions::default();
    for built in build(sc, family, params)? {
        let inst = built.instance();
        let feasible = match &built {
            Built::Linear(inst) => solve_exact(&inst.market, &inst.problem, &options)?,
            Built::Log { market, transform, .. } => solve_exact_log(market, &transform.log_problem(inst.problem.k), &options)?,
        };
        if feasible.is_feasible() != covered {
            return Ok(Certificate::CounterexampleFound(format!(
                "{family} ({} kind {}): solver says {}, oracle says {}",
                inst.constants.family_name(),
                inst.problem.kind,
                if feasible.is_feasible() { "feasible" } else { "infeasible" },
                if covered { "cover" } else { "no cover" },
            )));
        }
        if let Built::Log { instance, market, transform } = &built {
            if let Some(sel) = log_mismatch(instance, market, transform)? {
                return Ok(Certificate::CounterexampleFound(format!(
                    "{family}: portfolio {sel:?} has different log-domain and source verdicts"
                )));
            }
        }
    }
    Ok(Certificate::Equivalent)
}

/// First portfolio of at most `k` rows whose log-domain verdict differs from
/// the source's lower bound (tracking) or outperformance verdict.
pub fn log_mismatch(instance: &ReducedInstance, market: &LogMarket, transform: &PrTransform) -> Result<Option<Vec<usize>>> {
    let ev = Evaluator::new(&instance.market, &instance.problem)?;
    let m = instance.market.m();
    for size in 1..=instance.problem.k.min(m) {
        for sel in (0..m).combinations(size) {
            let source = match transform.mode {
                LogMode::TrackLower => ev.check_tracking_lower(&sel)?,
                LogMode::Outperform => ev.check(&sel)?,
            };
            let log = check_log_members(market, &sel, &transform.lambda, transform.mode)?;
            if source.is_pass() != log.is_pass() {
                return Ok(Some(sel));
            }
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepOutcome {
    pub index: usize,
    pub source: SetCoverInstance,
    pub certificate: Certificate,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepReport {
    pub family: Family,
    pub instances: usize,
    pub equivalent: usize,
    pub counterexamples: Vec<SweepOutcome>,
}

impl SweepReport {
    pub fn all_equivalent(&self) -> bool {
        self.counterexamples.is_empty()
    }
}

/// Certifies every instance in parallel; the report lists counterexamples in
/// input order whatever the schedule.
pub fn sweep(instances: &[SetCoverInstance], family: Family, params: &FamilyParams) -> Result<SweepReport> {
    let results: Vec<Result<Certificate>> =
        instances.par_iter().map(|sc| certify_equivalence(sc, family, params)).collect();
    let mut counterexamples = Vec::new();
    for (index, r) in results.into_iter().enumerate() {
        let certificate = r?;
        if !certificate.is_equivalent() {
            counterexamples.push(SweepOutcome { index, source: instances[index].clone(), certificate });
        }
    }
    Ok(SweepReport {
        family,
        instances: instances.len(),
        equivalent: instances.len() - counterexamples.len(),
        counterexamples,
    })
}
