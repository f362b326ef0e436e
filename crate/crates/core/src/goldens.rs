//! The published dimension tables, embedded at compile time.
//!
//! Each table is a CSV of `fpdim,s,d1..dk` rows in canonical order, with its
//! search parameters in `tables.toml`. `MANIFEST` pins the row count and
//! SHA-256 of every CSV; [`load_goldens`] refuses data that does not match.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dimsearch::{enumerate, sort_canonical, DimSolution, SearchParams};
use crate::exactmath::factorize;
use crate::filters::{fixed_dim_multiplicity_dims, Rule};
use crate::gradings::GradingCase;
use crate::oracle::{compare, Diff};
use crate::Error;

const MANIFEST: &str = include_str!("../goldens/MANIFEST");
const TABLES: &str = include_str!("../goldens/tables.toml");
const GRADING_CASES: &str = include_str!("../goldens/grading_cases.toml");
const CSVS: [(&str, &str); 8] = [
    ("T1", include_str!("../goldens/t1.csv")),
    ("T2", include_str!("../goldens/t2.csv")),
    ("T3", include_str!("../goldens/t3.csv")),
    ("T4", include_str!("../goldens/t4.csv")),
    ("T5", include_str!("../goldens/t5.csv")),
    ("T6", include_str!("../goldens/t6.csv")),
    ("T7", include_str!("../goldens/t7.csv")),
    ("T8", include_str!("../goldens/t8.csv")),
];

/// Identifiers of the embedded tables, in order.
pub const TABLE_IDS: [&str; 8] = ["T1", "T2", "T3", "T4", "T5", "T6", "T7", "T8"];

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableSpec {
    rank: u64,
    caption: String,
    mode: String,
    invertibles: u64,
    adjoint_rank: Option<u64>,
    adjoint_invertibles: Option<u64>,
    min_m1: Option<u64>,
    mi_coprime: Option<u64>,
    min_run: Option<usize>,
    #[serde(default)]
    m1_square: bool,
    #[serde(default)]
    m1_exclude: Vec<u64>,
    fixed_dim_prime: Option<u64>,
    printed_rows: Vec<u32>,
    printed_fpdims: Vec<String>,
}

/// One embedded table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GoldenTable {
    pub id: String,
    pub caption: String,
    pub params: SearchParams,
    /// Rows in canonical order.
    pub rows: Vec<DimSolution>,
    /// Row number as printed, parallel to `rows`.
    pub printed_rows: Vec<u32>,
    /// FP dimension as printed (decimal or a product of prime powers).
    pub printed_fpdims: Vec<String>,
    /// When set, the table lists only search results with every fixed
    /// dimension multiplicity divisible by `2p`.
    pub fixed_dim_prime: Option<u64>,
}

impl GoldenTable {
    /// Applies the table's extra restriction to raw search output.
    pub fn post_filter(&self, found: Vec<DimSolution>) -> Vec<DimSolution> {
        match self.fixed_dim_prime {
            None => found,
            Some(p) => found
                .into_iter()
                .filter(|s| !fixed_dim_multiplicity_dims(&s.dims, p).is_discard())
                .collect(),
        }
    }

    /// The row printed as number `n`.
    pub fn printed_row(&self, n: u32) -> Option<&DimSolution> {
        self.printed_rows.iter().position(|&r| r == n).map(|i| &self.rows[i])
    }

    /// Printed number of the row at canonical index `i`.
    pub fn printed_number(&self, sol: &DimSolution) -> Option<u32> {
        self.rows.iter().position(|r| r == sol).map(|i| self.printed_rows[i])
    }
}

/// Outcome of re-running a table's search.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TableCheck {
    pub id: String,
    pub expected: usize,
    /// Rows from the search before the table's post-filter.
    pub raw: usize,
    pub found: usize,
    pub diff: Diff,
}

impl TableCheck {
    pub fn is_match(&self) -> bool {
        self.diff.is_empty() && self.expected == self.found
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn manifest() -> Result<BTreeMap<String, (usize, String)>, Error> {
    let mut out = BTreeMap::new();
    for line in MANIFEST.lines().filter(|l| !l.trim().is_empty()) {
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [id, rows, hash] = fields[..] else {
            return Err(Error::Integrity(format!("bad manifest line {line:?}")));
        };
        let rows = rows
            .parse()
            .map_err(|_| Error::Integrity(format!("bad row count in {line:?}")))?;
        out.insert(id.to_string(), (rows, hash.to_string()));
    }
    Ok(out)
}

/// Parses CSV text against the manifest entry for `id`.
pub fn parse_table_csv(
    id: &str,
    text: &str,
    expected_rows: usize,
    expected_hash: &str,
) -> Result<Vec<DimSolution>, Error> {
    let hash = sha256_hex(text.as_bytes());
    if hash != expected_hash {
        return Err(Error::Integrity(format!("{id}: sha256 {hash} does not match manifest")));
    }
    let mut reader = csv::ReaderBuilder::new().flexible(false).from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Integrity(format!("{id}: {e}")))?;
        let num = |s: &str| -> Result<u128, Error> {
            s.parse()
                .map_err(|_| Error::Integrity(format!("{id}: bad number {s:?}")))
        };
        let fields: Vec<&str> = record.iter().collect();
        if fields.len() < 3 {
            return Err(Error::Integrity(format!("{id}: short row")));
        }
        let dims = fields[2..]
            .iter()
            .map(|f| num(f).map(|v| v as u64))
            .collect::<Result<Vec<_>, _>>()?;
        let sol = DimSolution::new(num(fields[0])?, num(fields[1])? as u64, dims)
            .map_err(|e| Error::Integrity(format!("{id}: {e}")))?;
        rows.push(sol);
    }
    if rows.len() != expected_rows {
        return Err(Error::Integrity(format!(
            "{id}: {} rows, manifest says {expected_rows}",
            rows.len()
        )));
    }
    Ok(rows)
}

fn params_of(id: &str, spec: &TableSpec) -> Result<SearchParams, Error> {
    let mut params = match spec.mode.as_str() {
        "basic" => SearchParams::basic(spec.rank, spec.invertibles),
        "adjoint" => {
            let missing = || Error::Integrity(format!("{id}: adjoint table without adjoint data"));
            SearchParams::adjoint(
                spec.rank,
                spec.invertibles,
                spec.adjoint_rank.ok_or_else(missing)?,
                spec.adjoint_invertibles.ok_or_else(missing)?,
            )
        }
        other => return Err(Error::Integrity(format!("{id}: unknown mode {other}"))),
    };
    if let Some(m) = spec.min_m1 {
        params = params.with_min_m1(m);
    }
    if let Some(q) = spec.mi_coprime {
        params = params.with_mi_coprime(q);
    }
    if let Some(len) = spec.min_run {
        params = params.with_min_run(len);
    }
    if spec.m1_square {
        params = params.with_m1_square();
    }
    if !spec.m1_exclude.is_empty() {
        params = params.with_m1_exclude(spec.m1_exclude.iter().copied());
    }
    params.validate().map_err(|e| Error::Integrity(format!("{id}: {e}")))?;
    Ok(params)
}

/// Every embedded table, checked against the manifest.
pub fn load_goldens() -> Result<Vec<GoldenTable>, Error> {
    let manifest = manifest()?;
    let specs: BTreeMap<String, TableSpec> =
        toml::from_str(TABLES).map_err(|e| Error::Integrity(format!("tables.toml: {e}")))?;
    if manifest.len() != CSVS.len() || specs.len() != CSVS.len() {
        return Err(Error::Integrity(
            "manifest, parameters and tables disagree on the table set".into(),
        ));
    }
    CSVS.iter()
        .map(|&(id, text)| {
            let (count, hash) = manifest
                .get(id)
                .ok_or_else(|| Error::Integrity(format!("{id} missing from manifest")))?;
            let spec = specs
                .get(id)
                .ok_or_else(|| Error::Integrity(format!("{id} missing from tables.toml")))?;
            let rows = parse_table_csv(id, text, *count, hash)?;
            if spec.printed_rows.len() != rows.len() || spec.printed_fpdims.len() != rows.len() {
                return Err(Error::Integrity(format!(
                    "{id}: row metadata length differs from the table"
                )));
            }
            let mut sorted = rows.clone();
            sort_canonical(&mut sorted);
            if sorted != rows {
                return Err(Error::Integrity(format!("{id}: rows are not in canonical order")));
            }
            Ok(GoldenTable {
                id: id.to_string(),
                caption: spec.caption.clone(),
                params: params_of(id, spec)?,
                rows,
                printed_rows: spec.printed_rows.clone(),
                printed_fpdims: spec.printed_fpdims.clone(),
                fixed_dim_prime: spec.fixed_dim_prime,
            })
        })
        .collect()
}

/// The table with identifier `id` (case-insensitive).
pub fn golden(id: &str) -> Result<GoldenTable, Error> {
    load_goldens()?
        .into_iter()
        .find(|t| t.id.eq_ignore_ascii_case(id))
        .ok_or_else(|| Error::InvalidInput(format!("no table {id}")))
}

/// Evaluates a printed FP dimension: a decimal or a product such as `3^2*5^2*19`.
pub fn parse_fpdim(text: &str) -> Result<u128, Error> {
    let bad = || Error::InvalidInput(format!("cannot parse FP dimension {text:?}"));
    text.split('*').try_fold(1u128, |acc, factor| {
        let (base, exp) = match factor.trim().split_once('^') {
            Some((b, e)) => (b, e.parse::<u32>().map_err(|_| bad())?),
            None => (factor.trim(), 1),
        };
        let base: u128 = base.parse().map_err(|_| bad())?;
        base.checked_pow(exp)
            .and_then(|v| acc.checked_mul(v))
            .ok_or(Error::Overflow("u128"))
    })
}

/// Rows whose printed FP dimension differs from the stored one, as
/// `(printed row, printed, stored)`.
pub fn printed_fpdim_mismatches(table: &GoldenTable) -> Result<Vec<(u32, String, u128)>, Error> {
    let mut out = Vec::new();
    for ((row, printed), sol) in table.printed_rows.iter().zip(&table.printed_fpdims).zip(&table.rows) {
        if parse_fpdim(printed)? != sol.fpdim {
            out.push((*row, printed.clone(), sol.fpdim));
        }
    }
    Ok(out)
}

/// Runs the search for `table`, applies its post-filter and compares.
pub fn verify_table(table: &GoldenTable) -> Result<TableCheck, Error> {
    let raw = enumerate(&table.params)?;
    let raw_len = raw.len();
    let found = table.post_filter(raw);
    let diff = compare(&found, &table.rows, u64::MAX);
    Ok(TableCheck {
        id: table.id.clone(),
        expected: table.rows.len(),
        raw: raw_len,
        found: found.len(),
        diff,
    })
}

/// Fully factored form `p^a*q^b` of `n`, as the tables print it.
pub fn factored(n: u128) -> Result<String, Error> {
    let parts: Vec<String> = factorize(n)?
        .factors()
        .iter()
        .map(|&(p, e)| if e == 1 { p.to_string() } else { format!("{p}^{e}") })
        .collect();
    Ok(parts.join("*"))
}

/// One grading case and how the case analysis treats it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GoldenCase {
    pub case: GradingCase,
    /// The first rule the analysis cites, or `None` when the rank lemmas do
    /// not dispose of the case.
    pub verdict: Option<Rule>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GoldenRank {
    pub rank: u64,
    pub invertible_counts: Vec<u64>,
    pub cases: Vec<GoldenCase>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CaseFile {
    rank: Vec<RankSpec>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RankSpec {
    rank: u64,
    invertible_counts: Vec<u64>,
    cases: Vec<CaseSpec>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CaseSpec {
    ranks: String,
    verdict: String,
}

/// The grading cases listed for each rank, in listing order.
pub fn load_grading_cases() -> Result<Vec<GoldenRank>, Error> {
    let file: CaseFile =
        toml::from_str(GRADING_CASES).map_err(|e| Error::Integrity(format!("grading_cases.toml: {e}")))?;
    file.rank
        .into_iter()
        .map(|spec| {
            let cases = spec
                .cases
                .iter()
                .map(|c| {
                    let case = GradingCase::parse(spec.rank, &c.ranks).map_err(|e| Error::Integrity(e.to_string()))?;
                    let verdict = match c.verdict.as_str() {
                        "survives" => None,
                        code => Some(
                            Rule::from_code(code).ok_or_else(|| Error::Integrity(format!("unknown rule {code}")))?,
                        ),
                    };
                    Ok(GoldenCase { case, verdict })
                })
                .collect::<Result<_, Error>>()?;
            Ok(GoldenRank {
                rank: spec.rank,
                invertible_counts: spec.invertible_counts,
                cases,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loads_all_tables() {
        let tables = load_goldens().unwrap();
        let counts: Vec<usize> = tables.iter().map(|t| t.rows.len()).collect();
        assert_eq!(counts, [35, 3, 15, 13, 22, 2, 11, 21]);
    }

    #[test]
    fn tampered_csv_is_rejected() {
        let (count, hash) = manifest().unwrap()["T2"].clone();
        let good = CSVS[1].1;
        assert!(parse_table_csv("T2", good, count, &hash).is_ok());
        let bad = good.replace("4275", "4277");
        assert!(matches!(
            parse_table_csv("T2", &bad, count, &hash),
            Err(Error::Integrity(_))
        ));
        assert!(matches!(
            parse_table_csv("T2", good, count + 1, &hash),
            Err(Error::Integrity(_))
        ));
    }

    #[test]
    fn printed_fpdims_agree() {
        for table in load_goldens().unwrap() {
            assert!(printed_fpdim_mismatches(&table).unwrap().is_empty(), "{}", table.id);
        }
    }

    #[test]
    fn parse_fpdim_forms() {
        assert_eq!(parse_fpdim("441").unwrap(), 441);
        assert_eq!(parse_fpdim("3^2*5^2*19").unwrap(), 4275);
        assert!(parse_fpdim("3^").is_err());
        assert_eq!(factored(4275).unwrap(), "3^2*5^2*19");
    }

    #[test]
    fn printed_row_lookup() {
        let t1 = golden("t1").unwrap();
        let row = t1.printed_row(34).unwrap();
        assert_eq!(row.fpdim, 441);
        assert_eq!(t1.printed_number(row), Some(34));
        assert!(golden("T9").is_err());
    }

    #[test]
    fn grading_cases_parse() {
        let ranks = load_grading_cases().unwrap();
        assert_eq!(ranks.first().unwrap().rank, 25);
        assert_eq!(ranks.last().unwrap().rank, 49);
        assert_eq!(ranks[0].cases[0].verdict, Some(Rule::RankMoreThanOne));
    }
}
