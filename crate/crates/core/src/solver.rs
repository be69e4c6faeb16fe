//! Exhaustive k-proxy search and a greedy baseline.
//!
//! Every ratio bound of the linear index kinds is linear in the selection:
//! `Σ a_i(t) / Σ d_i ≥ θ` holds iff `Σ (a_i(t) − θ·d_i) ≥ 0`. The search
//! compiles those rows to integers and prunes a branch as soon as even the
//! best remaining stocks cannot bring some row back to non-negative. Anything
//! nonlinear (volatility, the log-domain upper bound) is checked on the
//! candidates that survive.

use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::bounds::{self, Arithmetic, Criterion, Evaluator, FailReason, LogProblem, ProxyProblem, Verdict};
use crate::error::{Error, Result};
use crate::market::{IndexKind, LogMarket, Market, Portfolio};
use crate::scalar::{lcm_all, Scalar};

pub const DEFAULT_BUDGET: u128 = 10_000_000;
pub const ENUMERATE_BUDGET: u128 = 1_000_000;

/// Pruning tables larger than this many entries are not built.
const MAX_TABLE: usize = 4_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct SolveOptions {
    /// Most candidate subsets the search may face.
    pub budget: u128,
    pub tolerance: f64,
    pub arithmetic: Arithmetic,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { budget: DEFAULT_BUDGET, tolerance: bounds::VOLATILITY_TOLERANCE, arithmetic: Arithmetic::Exact }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveVerdict {
    Feasible(Portfolio),
    Infeasible,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveReport {
    pub verdict: SolveVerdict,
    pub portfolios_examined: u64,
    pub pruned: u64,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl SolveReport {
    pub fn is_feasible(&self) -> bool {
        matches!(self.verdict, SolveVerdict::Feasible(_))
    }

    pub fn portfolio(&self) -> Option<&Portfolio> {
        match &self.verdict {
            SolveVerdict::Feasible(p) => Some(p),
            SolveVerdict::Infeasible => None,
        }
    }
}

/// `C(n, k)`, saturating.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let mut term: u128 = 1;
    for s in 1..=k.min(n - k) {
        term = term.saturating_mul((n + 1 - s) as u128) / s as u128;
    }
    term
}

/// `Σ_{s=1..k} C(m, s)`, saturating.
pub fn candidate_count(m: usize, k: usize) -> u128 {
    (1..=k.min(m)).fold(0u128, |acc, s| acc.saturating_add(binomial(m, s)))
}

fn check_budget(m: usize, k: usize, budget: u128) -> Result<()> {
    let needed = candidate_count(m, k);
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    Ok(())
}

/// Constraint rows scaled to integers.
enum Rows {
    Small(Vec<Vec<i128>>),
    Big(Vec<Vec<BigInt>>),
}

fn compile(rows: Vec<Vec<Scalar>>) -> Rows {
    let scaled: Vec<Vec<BigInt>> = rows
        .into_iter()
        .map(|row| {
            let lcm = Scalar::from_bigint(lcm_all(row.iter().map(Scalar::denom)));
            row.iter().map(|v| (v * &lcm).numer().clone()).collect()
        })
        .collect();
    let fits = scaled.iter().flatten().all(|v| v.to_i64().is_some());
    if fits {
        Rows::Small(scaled.iter().map(|r| r.iter().map(|v| v.to_i128().unwrap()).collect()).collect())
    } else {
        Rows::Big(scaled)
    }
}

/// Leaf decision for a candidate that met every linear row.
enum Leaf {
    Accept,
    Reject,
}

struct Search<'a, F> {
    m: usize,
    k: usize,
    /// Stocks whose denominator weight is positive; a selection needs one.
    positive: &'a [bool],
    on_leaf: F,
    examined: u64,
    pruned: u64,
    stop_at_first: bool,
    found: Vec<Vec<usize>>,
}

impl<'a, F: FnMut(&[usize]) -> Result<Leaf>> Search<'a, F> {
    fn run<T>(&mut self, rows: &[Vec<T>]) -> Result<()>
    where
        T: Clone + Ord + Zero + for<'x> std::ops::Add<&'x T, Output = T>,
    {
        let (m, k) = (self.m, self.k.min(self.m));
        let table_size = rows.len().saturating_mul(m + 1).saturating_mul(k + 1);
        let best = (table_size <= MAX_TABLE).then(|| best_table(rows, m, k));
        let mut chosen = Vec::with_capacity(k);
        let mut sums = vec![T::zero(); rows.len()];
        for size in 1..=k {
            if self.dfs(rows, best.as_deref(), size, 0, &mut sums, &mut chosen, 0)? {
                break;
            }
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn dfs<T>(
        &mut self,
        rows: &[Vec<T>],
        best: Option<&[Option<T>]>,
        size: usize,
        from: usize,
        sums: &mut Vec<T>,
        chosen: &mut Vec<usize>,
        positives: usize,
    ) -> Result<bool>
    where
        T: Clone + Ord + Zero + for<'x> std::ops::Add<&'x T, Output = T>,
    {
        let left = size - chosen.len();
        if left == 0 {
            self.examined += 1;
            if positives == 0 || sums.iter().any(|s| *s < T::zero()) {
                return Ok(false);
            }
            return match (self.on_leaf)(chosen)? {
                Leaf::Accept => {
                    self.found.push(chosen.clone());
                    Ok(self.stop_at_first)
                }
                Leaf::Reject => Ok(false),
            };
        }
        let (m, width) = (self.m, self.k.min(self.m) + 1);
        for i in from..=m - left {
            let saved = sums.clone();
            for (c, row) in rows.iter().enumerate() {
                sums[c] = sums[c].clone() + &row[i];
            }
            let hopeless = best.is_some_and(|table| {
                (0..rows.len()).any(|c| match &table[(c * (m + 1) + i + 1) * width + left - 1] {
                    Some(b) => sums[c].clone() + b < T::zero(),
                    None => true,
                })
            });
            if hopeless {
                self.pruned += 1;
            } else {
                chosen.push(i);
                let stop = self.dfs(rows, best, size, i + 1, sums, chosen, positives + usize::from(self.positive[i]))?;
                chosen.pop();
                if stop {
                    return Ok(true);
                }
            }
            *sums = saved;
        }
        Ok(false)
    }
}

/// `table[(c·(m+1) + j)·(k+1) + r]` = largest sum of `r` coefficients of row
/// `c` among stocks `j..m`, `None` when fewer than `r` remain.
fn best_table<T>(rows: &[Vec<T>], m: usize, k: usize) -> Vec<Option<T>>
where
    T: Clone + Ord + Zero + for<'x> std::ops::Add<&'x T, Output = T>,
{
    let width = k + 1;
    let mut table = vec![None; rows.len() * (m + 1) * width];
    for (c, row) in rows.iter().enumerate() {
        let at = |j: usize, r: usize| (c * (m + 1) + j) * width + r;
        table[at(m, 0)] = Some(T::zero());
        for j in (0..m).rev() {
            table[at(j, 0)] = Some(T::zero());
            for r in 1..width {
                let skip = table[at(j + 1, r)].clone();
                let take = table[at(j + 1, r - 1)].clone().map(|b| b + &row[j]);
                table[at(j, r)] = match (skip, take) {
                    (Some(a), Some(b)) => Some(a.max(b)),
                    (a, b) => a.or(b),
                };
            }
        }
    }
    table
}

/// Numerator and denominator weights `(a_i(t), d_i)` of the linear form.
/// Zero initial prices for kinds 2 and 3 are rejected when the market side
/// is evaluated.
fn linear_weights(market: &Market, kind: IndexKind) -> Result<(Vec<Vec<Scalar>>, Vec<Scalar>)> {
    let mut numer = Vec::with_capacity(market.m());
    let mut denom = Vec::with_capacity(market.m());
    for (i, row) in market.prices().iter().enumerate() {
        let (w, d) = match kind {
            IndexKind::PriceWeighted => (Scalar::one(), row[0].clone()),
            IndexKind::ValueWeighted => (market.shares()[i].clone(), &market.shares()[i] * &row[0]),
            IndexKind::EqualWeighted => (row[0].recip(), Scalar::one()),
            IndexKind::PriceRelative => return Err(Error::UnsupportedKind(4)),
        };
        numer.push(row.iter().map(|p| &w * p).collect());
        denom.push(d);
    }
    Ok((numer, denom))
}

fn linear_rows(ev: &Evaluator<'_>) -> Result<(Vec<Vec<Scalar>>, Vec<bool>)> {
    let market = ev.market();
    let problem = ev.problem();
    let (numer, denom) = linear_weights(market, problem.kind)?;
    let (m, f) = (market.m(), market.f());
    let one = Scalar::one();
    let mut rows = Vec::new();
    let mut push = |factor: Scalar, t: usize, flip: bool| {
        let theta = factor * ev.market_ratio(t);
        rows.push(
            (0..m)
                .map(|i| {
                    let v = &numer[i][t] - &theta * &denom[i];
                    if flip {
                        -v
                    } else {
                        v
                    }
                })
                .collect(),
        );
    };
    for t in 1..=f {
        match &problem.criterion {
            Criterion::Track { eps } => {
                push(&one - eps, t, false);
                push(&one + eps, t, true);
            }
            Criterion::Outperform { eps } => push(&one + eps, t, false),
            Criterion::Srlv { alpha, .. } => push(alpha.clone(), t, false),
        }
    }
    Ok((rows, denom.iter().map(Scalar::is_positive).collect()))
}

fn run_search<F: FnMut(&[usize]) -> Result<Leaf>>(
    rows: Vec<Vec<Scalar>>,
    positive: &[bool],
    k: usize,
    stop_at_first: bool,
    on_leaf: F,
) -> Result<(Vec<Vec<usize>>, u64, u64)> {
    let mut search = Search {
        m: positive.len(),
        k,
        positive,
        on_leaf,
        examined: 0,
        pruned: 0,
        stop_at_first,
        found: Vec::new(),
    };
    match compile(rows) {
        Rows::Small(r) => search.run(&r)?,
        Rows::Big(r) => search.run(&r)?,
    }
    Ok((search.found, search.examined, search.pruned))
}

/// Verdict of a screened candidate; ratio failures here mean the screen and
/// the checker disagree.
fn post_filter(ev: &Evaluator<'_>, members: &[usize], screened: bool) -> Result<Leaf> {
    match ev.check(members) {
        Ok(Verdict::Pass) => Ok(Leaf::Accept),
        Ok(Verdict::Fail { reason: FailReason::Volatility, .. }) => Ok(Leaf::Reject),
        Ok(v) if screened => Err(Error::SelfCheck(format!("screen passed {members:?} but the check says {v}"))),
        Ok(_) => Ok(Leaf::Reject),
        Err(Error::ZeroDenominator | Error::NonpositiveIndex { .. }) => Ok(Leaf::Reject),
        Err(e) => Err(e),
    }
}

fn feasible_search(
    market: &Market,
    problem: &ProxyProblem,
    options: &SolveOptions,
    budget: u128,
    stop_at_first: bool,
) -> Result<(Vec<Vec<usize>>, u64, u64)> {
    check_budget(market.m(), problem.k, budget)?;
    let ev = Evaluator::new(market, problem)?
        .with_tolerance(options.tolerance)
        .with_arithmetic(options.arithmetic);
    let (rows, positive) = linear_rows(&ev)?;
    let screened = options.arithmetic == Arithmetic::Exact;
    let rows = if screened { rows } else { Vec::new() };
    run_search(rows, &positive, problem.k, stop_at_first, |members| post_filter(&ev, members, screened))
}

/// Smallest, then lexicographically least, portfolio of at most `k` stocks
/// meeting the problem, or `Infeasible`.
pub fn solve_exact(market: &Market, problem: &ProxyProblem, options: &SolveOptions) -> Result<SolveReport> {
    let start = Instant::now();
    let (found, examined, pruned) = feasible_search(market, problem, options, options.budget, true)?;
    let verdict = match found.into_iter().next() {
        Some(members) => {
            let portfolio = Portfolio::new(members, problem.k.min(market.m()), market.m())?;
            if options.arithmetic == Arithmetic::Exact {
                let recheck = bounds::check(market, &portfolio, problem)?;
                if !recheck.is_pass() {
                    return Err(Error::SelfCheck(format!("{portfolio} re-verified as {recheck}")));
                }
            }
            SolveVerdict::Feasible(portfolio)
        }
        None => SolveVerdict::Infeasible,
    };
    Ok(SolveReport { verdict, portfolios_examined: examined, pruned, elapsed: start.elapsed() })
}

/// Every passing portfolio of at most `k` stocks, in lexicographic order.
pub fn enumerate_feasible(market: &Market, problem: &ProxyProblem) -> Result<Vec<Portfolio>> {
    let options = SolveOptions::default();
    let (mut found, _, _) = feasible_search(market, problem, &options, ENUMERATE_BUDGET, false)?;
    found.sort();
    found.into_iter().map(|s| Portfolio::new(s, problem.k.min(market.m()), market.m())).collect()
}

fn log_rows(market: &LogMarket, problem: &LogProblem) -> Result<Vec<Vec<Scalar>>> {
    let all = market.all();
    (1..=market.f())
        .map(|t| {
            let threshold = market.log2_index(&all, t)? + &problem.bound.lambda;
            Ok((0..market.m()).map(|i| market.exponent(i, t) - &threshold).collect())
        })
        .collect()
}

fn log_search(
    market: &LogMarket,
    problem: &LogProblem,
    budget: u128,
    stop_at_first: bool,
) -> Result<(Vec<Vec<usize>>, u64, u64)> {
    check_budget(market.m(), problem.k, budget)?;
    // reject a mis-signed bound before searching
    problem.check(market, &[0])?;
    let rows = log_rows(market, problem)?;
    let positive = vec![true; market.m()];
    run_search(rows, &positive, problem.k, stop_at_first, |members| {
        Ok(if problem.check(market, members)?.is_pass() { Leaf::Accept } else { Leaf::Reject })
    })
}

/// [`solve_exact`] for a log-domain market.
pub fn solve_exact_log(market: &LogMarket, problem: &LogProblem, options: &SolveOptions) -> Result<SolveReport> {
    let start = Instant::now();
    let (found, examined, pruned) = log_search(market, problem, options.budget, true)?;
    let verdict = match found.into_iter().next() {
        Some(members) => SolveVerdict::Feasible(Portfolio::new(members, problem.k.min(market.m()), market.m())?),
        None => SolveVerdict::Infeasible,
    };
    Ok(SolveReport { verdict, portfolios_examined: examined, pruned, elapsed: start.elapsed() })
}

pub fn enumerate_feasible_log(market: &LogMarket, problem: &LogProblem) -> Result<Vec<Portfolio>> {
    let (mut found, _, _) = log_search(market, problem, ENUMERATE_BUDGET, false)?;
    found.sort();
    found.into_iter().map(|s| Portfolio::new(s, problem.k.min(market.m()), market.m())).collect()
}

/// Adds, one stock at a time, the stock that most shrinks the worst relative
/// violation (then the total), lowest index on ties. `Infeasible` only means
/// the heuristic got stuck.
pub fn solve_greedy(market: &Market, problem: &ProxyProblem, options: &SolveOptions) -> Result<SolveReport> {
    let start = Instant::now();
    let ev = Evaluator::new(market, problem)?
        .with_tolerance(options.tolerance)
        .with_arithmetic(options.arithmetic);
    let mut chosen: Vec<usize> = Vec::new();
    let mut examined = 0;
    let mut verdict = SolveVerdict::Infeasible;
    while chosen.len() < problem.k.min(market.m()) {
        let mut best: Option<((f64, f64), usize)> = None;
        for i in (0..market.m()).filter(|i| !chosen.contains(i)) {
            let mut trial = chosen.clone();
            trial.push(i);
            trial.sort_unstable();
            examined += 1;
            let score = ev.violation(&trial)?;
            if best.is_none_or(|(b, _)| score.0 < b.0 || (score.0 == b.0 && score.1 < b.1)) {
                best = Some((score, i));
            }
        }
        let Some((_, pick)) = best else { break };
        chosen.push(pick);
        chosen.sort_unstable();
        if matches!(post_filter(&ev, &chosen, false)?, Leaf::Accept) {
            verdict = SolveVerdict::Feasible(Portfolio::new(chosen.clone(), problem.k.min(market.m()), market.m())?);
            break;
        }
    }
    Ok(SolveReport { verdict, portfolios_examined: examined, pruned: 0, elapsed: start.elapsed() })
}
