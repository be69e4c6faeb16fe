//! File formats. Every rational is written as a `p/q` string, so files round
//! trip exactly and identical inputs give byte-identical output.
//!
//! Market CSV: optional header `stock,shares,t0,...,tf`, then one row per
//! stock. An empty shares field means 1; prices are `p/q` or decimal literals.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bounds::ProxyProblem;
use crate::error::{Error, Result};
use crate::market::{LogMarket, Market};
use crate::reductions::{ColRole, Constants, PrTransform, ReducedInstance, RowRole};
use crate::scalar::Scalar;
use crate::setcover::SetCoverInstance;

pub const MARKET_FILE: &str = "market.csv";
pub const PROBLEM_FILE: &str = "problem.json";
pub const ROLES_FILE: &str = "roles.json";
pub const LOG_MARKET_FILE: &str = "log_market.json";
pub const TRANSFORM_FILE: &str = "transform.json";

pub fn parse_market_csv(path: &Path) -> Result<Market> {
    parse_market_str(&fs::read_to_string(path)?)
}

pub fn parse_market_str(text: &str) -> Result<Market> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut names = Vec::new();
    let mut shares = Vec::new();
    let mut prices = Vec::new();
    let mut width = None;
    for (n, record) in reader.records().enumerate() {
        let record = record?;
        let line = record.position().map_or(n + 1, |p| p.line() as usize);
        if n == 0 && record.get(0) == Some("stock") {
            width = Some(record.len());
            continue;
        }
        if record.iter().all(str::is_empty) {
            continue;
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(Error::RaggedRow { line, found: record.len(), expected });
        }
        if record.len() < 3 {
            return Err(Error::Parse { line, column: record.len() + 1, reason: "need a name, shares and at least one price".into() });
        }
        names.push(record[0].to_string());
        shares.push(match &record[1] {
            "" => Scalar::one(),
            s => parse_field(s, line, 2)?,
        });
        let mut row = Vec::with_capacity(record.len() - 2);
        for (j, field) in record.iter().enumerate().skip(2) {
            let value = parse_field(field, line, j + 1)?;
            if value.is_negative() {
                return Err(Error::NegativePrice { line, column: j + 1 });
            }
            row.push(value);
        }
        prices.push(row);
    }
    Market::with_shares(names, shares, prices)
}

fn parse_field(field: &str, line: usize, column: usize) -> Result<Scalar> {
    field.parse().map_err(|e: crate::scalar::ParseScalarError| Error::Parse { line, column, reason: e.0 })
}

pub fn market_to_csv(market: &Market) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["stock".to_string(), "shares".to_string()];
    header.extend((0..=market.f()).map(|t| format!("t{t}")));
    writer.write_record(&header)?;
    for i in 0..market.m() {
        let mut record = vec![market.names()[i].clone(), market.shares()[i].to_string()];
        record.extend(market.prices()[i].iter().map(Scalar::to_string));
        writer.write_record(&record)?;
    }
    let bytes = writer.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LogMarketJson {
    m: usize,
    f: usize,
    exponents: Vec<Vec<Scalar>>,
}

pub fn log_market_to_json(market: &LogMarket) -> Result<String> {
    to_json(&LogMarketJson { m: market.m(), f: market.f(), exponents: market.exponents().to_vec() })
}

pub fn parse_log_market(text: &str) -> Result<LogMarket> {
    let raw: LogMarketJson = serde_json::from_str(text)?;
    let market = LogMarket::new(raw.exponents)?;
    if market.m() != raw.m || market.f() != raw.f {
        return Err(Error::InvalidMarket(format!(
            "declared {}x{} but exponents are {}x{}",
            raw.m,
            raw.f,
            market.m(),
            market.f()
        )));
    }
    Ok(market)
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

pub fn read_problem(path: &Path) -> Result<ProxyProblem> {
    read_json(path)
}

pub fn read_setcover(path: &Path) -> Result<SetCoverInstance> {
    read_json(path)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RolesJson {
    row_roles: Vec<RowRole>,
    col_roles: Vec<ColRole>,
    constants: Constants,
    source: SetCoverInstance,
}

/// The three files of an instance: market CSV, problem JSON and roles JSON.
pub fn instance_files(instance: &ReducedInstance) -> Result<[(&'static str, String); 3]> {
    let roles = RolesJson {
        row_roles: instance.row_roles.clone(),
        col_roles: instance.col_roles.clone(),
        constants: instance.constants.clone(),
        source: instance.source.clone(),
    };
    Ok([
        (MARKET_FILE, market_to_csv(&instance.market)?),
        (PROBLEM_FILE, to_json(&instance.problem)?),
        (ROLES_FILE, to_json(&roles)?),
    ])
}

pub fn write_instance(instance: &ReducedInstance, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (name, text) in instance_files(instance)? {
        fs::write(dir.join(name), text)?;
    }
    Ok(())
}

pub fn parse_instance(market_csv: &str, problem_json: &str, roles_json: &str) -> Result<ReducedInstance> {
    let market = parse_market_str(market_csv)?;
    let problem: ProxyProblem = serde_json::from_str(problem_json)?;
    let roles: RolesJson = serde_json::from_str(roles_json)?;
    if roles.row_roles.len() != market.m() || roles.col_roles.len() != market.f() + 1 {
        return Err(Error::InvalidMarket("role tags do not match the market shape".into()));
    }
    Ok(ReducedInstance {
        market,
        problem,
        row_roles: roles.row_roles,
        col_roles: roles.col_roles,
        constants: roles.constants,
        source: roles.source,
    })
}

pub fn read_instance(dir: &Path) -> Result<ReducedInstance> {
    parse_instance(
        &fs::read_to_string(dir.join(MARKET_FILE))?,
        &fs::read_to_string(dir.join(PROBLEM_FILE))?,
        &fs::read_to_string(dir.join(ROLES_FILE))?,
    )
}

pub fn write_transform(market: &LogMarket, transform: &PrTransform, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(LOG_MARKET_FILE), log_market_to_json(market)?)?;
    fs::write(dir.join(TRANSFORM_FILE), to_json(transform)?)?;
    Ok(())
}
