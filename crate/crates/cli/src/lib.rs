//! Command-line front end. [`run`] parses arguments, dispatches to the
//! library and writes the report; `main` only forwards the exit code.
//!
//! Exit codes: 0 success, 1 verification mismatch, 2 input error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use oddmtc::dimsearch::{enumerate, enumerate_bounded, DimSolution, SearchParams};
use oddmtc::exactmath::factorize;
use oddmtc::filters::{fixed_dim_multiplicity_dims, Outcome};
use oddmtc::goldens::{load_goldens, verify_table, TABLE_IDS};
use oddmtc::gradings::{apply_grading_filters, enumerate_cases, invertible_count_candidates};
use oddmtc::oracle::{compare, oracle_enumerate};
use oddmtc::pipeline::{classify, render, Format as ReportFormat};
use oddmtc::Error;

pub const EXIT_OK: u8 = 0;
pub const EXIT_MISMATCH: u8 = 1;
pub const EXIT_INPUT: u8 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "oddmtc",
    version,
    about = "Dimension arrays of odd-dimensional modular tensor categories"
)]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Md)]
    format: Format,
    /// Worker threads for the searches (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Md,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> ReportFormat {
        match f {
            Format::Json => ReportFormat::Json,
            Format::Csv => ReportFormat::Csv,
            Format::Md => ReportFormat::Markdown,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Search dimension arrays over every simple of the category.
    Dims {
        #[arg(long)]
        rank: u64,
        #[arg(long)]
        invertibles: u64,
        /// Only report arrays with FPdim at most this bound.
        #[arg(long)]
        fpdim_bound: Option<u64>,
        #[command(flatten)]
        restrict: Restrictions,
    },
    /// Search dimension arrays of the adjoint subcategory.
    AdjointDims {
        #[command(flatten)]
        layer: AdjointLayer,
        #[arg(long)]
        fpdim_bound: Option<u64>,
        #[command(flatten)]
        restrict: Restrictions,
    },
    /// List grading cases, optionally with the grading filters applied.
    Gradings {
        #[arg(long)]
        rank: u64,
        /// Restrict to one invertible count.
        #[arg(long)]
        invertibles: Option<u64>,
        #[arg(long)]
        apply_filters: bool,
    },
    /// Run the whole classification pipeline for one rank.
    Classify {
        #[arg(long)]
        rank: u64,
    },
    /// Re-run the search for every embedded table and compare.
    VerifyGoldens {
        /// Check a single table, e.g. T3.
        #[arg(long)]
        table: Option<String>,
    },
    /// Compare the search with the brute-force oracle below a bound.
    OracleCheck {
        #[arg(long)]
        rank: u64,
        /// `|G(C)|`; without `--adjoint-rank` this is a whole-category search.
        #[arg(long, alias = "gc")]
        invertibles: u64,
        #[arg(long, requires = "adjoint_invertibles")]
        adjoint_rank: Option<u64>,
        #[arg(long, requires = "adjoint_rank")]
        adjoint_invertibles: Option<u64>,
        #[arg(long, default_value_t = 1_000_000)]
        fpdim_bound: u64,
        #[command(flatten)]
        restrict: Restrictions,
    },
}

#[derive(Args, Debug)]
struct AdjointLayer {
    #[arg(long)]
    rank: u64,
    /// `|G(C)|`, the number of invertibles of the whole category.
    #[arg(long, alias = "invertibles")]
    gc: u64,
    #[arg(long)]
    adjoint_rank: u64,
    /// `|G(C_ad)|`, the invertibles inside the adjoint subcategory.
    #[arg(long)]
    adjoint_invertibles: u64,
}

#[derive(Args, Debug, Default)]
struct Restrictions {
    #[arg(long)]
    min_m1: Option<u64>,
    #[arg(long)]
    m1_square: bool,
    #[arg(long, value_delimiter = ',')]
    m1_exclude: Vec<u64>,
    #[arg(long)]
    mi_coprime: Option<u64>,
    #[arg(long)]
    min_run: Option<usize>,
    /// Keep only arrays passing the fixed-dimension multiplicity rule for p.
    #[arg(long, value_name = "P")]
    fixed_dims: Option<u64>,
}

impl Restrictions {
    fn apply(&self, mut params: SearchParams) -> SearchParams {
        if let Some(m) = self.min_m1 {
            params = params.with_min_m1(m);
        }
        if self.m1_square {
            params = params.with_m1_square();
        }
        if !self.m1_exclude.is_empty() {
            params = params.with_m1_exclude(self.m1_exclude.iter().copied());
        }
        if let Some(q) = self.mi_coprime {
            params = params.with_mi_coprime(q);
        }
        if let Some(len) = self.min_run {
            params = params.with_min_run(len);
        }
        params
    }
}

/// A failure mapped to an exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        let code = match e {
            Error::Integrity(_) => EXIT_MISMATCH,
            _ => EXIT_INPUT,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn input_error(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_INPUT,
        message: message.into(),
    }
}

/// Parses `args` (program name first), runs the subcommand and writes its
/// report to `out`, or to `--out` when given. Diagnostics go to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs.unwrap_or(0))
        .build()
    {
        Ok(pool) => pool,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_INPUT;
        }
    };
    let result = pool.install(|| execute(&cli));
    let (code, body) = match result {
        Ok(outcome) => outcome,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            return f.code;
        }
    };
    match &cli.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &body) {
                let _ = writeln!(err, "error: cannot write {}: {e}", path.display());
                return EXIT_INPUT;
            }
        }
        None => {
            if out.write_all(body.as_bytes()).is_err() {
                return EXIT_INPUT;
            }
        }
    }
    code
}

fn execute(cli: &Cli) -> Result<(u8, String), Failure> {
    match &cli.command {
        Command::Dims {
            rank,
            invertibles,
            fpdim_bound,
            restrict,
        } => {
            let params = restrict.apply(SearchParams::basic(*rank, *invertibles));
            let found = search(&params, *fpdim_bound, restrict)?;
            Ok((EXIT_OK, render_solutions(&found, cli.format)?))
        }
        Command::AdjointDims {
            layer,
            fpdim_bound,
            restrict,
        } => {
            let params = restrict.apply(SearchParams::adjoint(
                layer.rank,
                layer.gc,
                layer.adjoint_rank,
                layer.adjoint_invertibles,
            ));
            let found = search(&params, *fpdim_bound, restrict)?;
            Ok((EXIT_OK, render_solutions(&found, cli.format)?))
        }
        Command::Gradings {
            rank,
            invertibles,
            apply_filters,
        } => gradings(*rank, *invertibles, *apply_filters, cli.format).map(|s| (EXIT_OK, s)),
        Command::Classify { rank } => {
            let report = classify(*rank)?;
            Ok((EXIT_OK, render(&report, cli.format.into())?))
        }
        Command::VerifyGoldens { table } => verify_goldens(table.as_deref(), cli.format),
        Command::OracleCheck {
            rank,
            invertibles,
            adjoint_rank,
            adjoint_invertibles,
            fpdim_bound,
            restrict,
        } => {
            let base = match (adjoint_rank, adjoint_invertibles) {
                (Some(r), Some(g)) => SearchParams::adjoint(*rank, *invertibles, *r, *g),
                _ => SearchParams::basic(*rank, *invertibles),
            };
            oracle_check(&restrict.apply(base), *fpdim_bound, cli.format)
        }
    }
}

fn search(params: &SearchParams, bound: Option<u64>, restrict: &Restrictions) -> Result<Vec<DimSolution>, Failure> {
    let mut found = match bound {
        Some(b) => enumerate_bounded(params, b as u128)?,
        None => enumerate(params)?,
    };
    if let Some(p) = restrict.fixed_dims {
        if p < 3 || p % 2 == 0 {
            return Err(input_error(format!("--fixed-dims needs an odd p >= 3, got {p}")));
        }
        found.retain(|s| !fixed_dim_multiplicity_dims(&s.dims, p).is_discard());
    }
    Ok(found)
}

/// Rows in the golden CSV layout: `fpdim,s,d1..dk`.
pub fn solutions_csv(found: &[DimSolution]) -> Result<String, Error> {
    let width = found.iter().map(|s| s.dims.len()).max().unwrap_or(0);
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
    let fail = |e: csv::Error| Error::InvalidInput(e.to_string());
    let mut header = vec!["fpdim".to_string(), "s".to_string()];
    header.extend((1..=width).map(|i| format!("d{i}")));
    w.write_record(&header).map_err(fail)?;
    for sol in found {
        let mut row = vec![sol.fpdim.to_string(), sol.invertibles.to_string()];
        row.extend(sol.dims.iter().map(u64::to_string));
        w.write_record(&row).map_err(fail)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::InvalidInput(e.to_string()))
}

fn json<T: Serialize>(value: &T) -> Result<String, Failure> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| input_error(e.to_string()))
}

fn render_solutions(found: &[DimSolution], format: Format) -> Result<String, Failure> {
    match format {
        Format::Csv => Ok(solutions_csv(found)?),
        Format::Json => json(&found),
        Format::Md => {
            let mut s = String::from("| # | FPdim(C) | factored | dims |\n|---|---|---|---|\n");
            for (i, sol) in found.iter().enumerate() {
                let dims: Vec<String> = sol.dims.iter().map(u64::to_string).collect();
                let _ = writeln!(
                    s,
                    "| {} | {} | {} | {} |",
                    i + 1,
                    sol.fpdim,
                    factorize(sol.fpdim)?,
                    dims.join(" ")
                );
            }
            let _ = writeln!(s, "\n{} arrays", found.len());
            Ok(s)
        }
    }
}

#[derive(Serialize)]
struct CaseRow {
    rank: u64,
    invertibles: u64,
    case: String,
    status: &'static str,
    rules: Vec<&'static str>,
    reasons: Vec<String>,
}

fn gradings(rank: u64, only: Option<u64>, apply: bool, format: Format) -> Result<String, Failure> {
    if rank.is_multiple_of(2) || rank == 0 {
        return Err(input_error(format!("rank must be odd and positive, got {rank}")));
    }
    let counts = invertible_count_candidates(rank);
    if let Some(s) = only {
        if !counts.contains(&s) {
            return Err(input_error(format!(
                "{s} is not an admissible invertible count for rank {rank}"
            )));
        }
    }
    let mut rows = Vec::new();
    for s in counts.iter().copied().filter(|&s| only.is_none_or(|o| o == s)) {
        if s == 1 || s == rank {
            continue;
        }
        for case in enumerate_cases(rank, s) {
            let verdicts = if apply {
                apply_grading_filters(&case)
            } else {
                Vec::new()
            };
            let discards: Vec<_> = verdicts.iter().filter(|v| v.outcome == Outcome::Discard).collect();
            rows.push(CaseRow {
                rank,
                invertibles: s,
                case: case.to_string(),
                status: match (apply, discards.is_empty()) {
                    (false, _) => "LISTED",
                    (true, true) => "SURVIVES",
                    (true, false) => "DISCARDED",
                },
                rules: discards.iter().filter_map(|v| v.rule).map(|r| r.code()).collect(),
                reasons: discards.iter().map(|v| v.reason.clone()).collect(),
            });
        }
    }
    match format {
        Format::Json => json(&rows),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let fail = |e: csv::Error| input_error(e.to_string());
            w.write_record(["rank", "invertibles", "case", "status", "rules"])
                .map_err(fail)?;
            for r in &rows {
                w.write_record([
                    r.rank.to_string(),
                    r.invertibles.to_string(),
                    r.case.clone(),
                    r.status.to_string(),
                    r.rules.join(" "),
                ])
                .map_err(fail)?;
            }
            let bytes = w.into_inner().map_err(|e| input_error(e.to_string()))?;
            String::from_utf8(bytes).map_err(|e| input_error(e.to_string()))
        }
        Format::Md => {
            let mut s = format!("# Grading cases for rank {rank}\n\n");
            let listed: Vec<String> = counts.iter().map(u64::to_string).collect();
            let _ = writeln!(s, "Admissible invertible counts: {}", listed.join(", "));
            let mut current = None;
            for r in &rows {
                if current != Some(r.invertibles) {
                    let _ = writeln!(s, "\n## |G(C)| = {}\n", r.invertibles);
                    current = Some(r.invertibles);
                }
                let _ = write!(s, "- {}", r.case);
                if apply {
                    let _ = write!(s, ": {}", r.status);
                    for (rule, reason) in r.rules.iter().zip(&r.reasons) {
                        let _ = write!(s, "; [{rule}] {reason}");
                    }
                }
                s.push('\n');
            }
            if apply {
                let survivors: Vec<&str> = rows
                    .iter()
                    .filter(|r| r.status == "SURVIVES")
                    .map(|r| r.case.as_str())
                    .collect();
                let _ = writeln!(
                    s,
                    "\nSurvivors: {}",
                    if survivors.is_empty() {
                        "none".into()
                    } else {
                        survivors.join(" ")
                    }
                );
            }
            Ok(s)
        }
    }
}

fn verify_goldens(only: Option<&str>, format: Format) -> Result<(u8, String), Failure> {
    let tables = load_goldens()?;
    if let Some(id) = only {
        if !TABLE_IDS.iter().any(|t| t.eq_ignore_ascii_case(id)) {
            return Err(input_error(format!(
                "no table {id}; expected one of {}",
                TABLE_IDS.join(", ")
            )));
        }
    }
    let selected: Vec<_> = tables
        .iter()
        .filter(|t| only.is_none_or(|id| t.id.eq_ignore_ascii_case(id)))
        .collect();
    let checks = selected
        .par_iter()
        .map(|t| verify_table(t))
        .collect::<Result<Vec<_>, _>>()?;
    let matched = checks.iter().filter(|c| c.is_match()).count();
    let code = if matched == checks.len() {
        EXIT_OK
    } else {
        EXIT_MISMATCH
    };
    let body = match format {
        Format::Json => json(&checks)?,
        Format::Csv => {
            let mut s = String::from("table,expected,raw,found,missing,extra,match\n");
            for c in &checks {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{}",
                    c.id,
                    c.expected,
                    c.raw,
                    c.found,
                    c.diff.missing.len(),
                    c.diff.extra.len(),
                    c.is_match()
                );
            }
            s
        }
        Format::Md => {
            let mut s = String::new();
            for c in &checks {
                let word = if c.is_match() { "match" } else { "MISMATCH" };
                let _ = write!(s, "{}: {word}, {} of {} rows", c.id, c.found, c.expected);
                if c.raw != c.found {
                    let _ = write!(s, " ({} before the post-filter)", c.raw);
                }
                if !c.diff.is_empty() {
                    let _ = write!(s, ", {} missing, {} extra", c.diff.missing.len(), c.diff.extra.len());
                }
                s.push('\n');
            }
            let _ = writeln!(s, "{matched}/{} tables match", checks.len());
            s
        }
    };
    Ok((code, body))
}

#[derive(Serialize)]
struct OracleSummary {
    bound: u64,
    search: usize,
    oracle: usize,
    missing: Vec<DimSolution>,
    extra: Vec<DimSolution>,
}

fn oracle_check(params: &SearchParams, bound: u64, format: Format) -> Result<(u8, String), Failure> {
    let fast = enumerate_bounded(params, bound as u128)?;
    let slow = oracle_enumerate(params, bound)?;
    let diff = compare(&fast, &slow, bound);
    let code = if diff.is_empty() { EXIT_OK } else { EXIT_MISMATCH };
    let summary = OracleSummary {
        bound,
        search: fast.len(),
        oracle: slow.len(),
        missing: diff.missing,
        extra: diff.extra,
    };
    let body = match format {
        Format::Json => json(&summary)?,
        Format::Csv => format!(
            "bound,search,oracle,missing,extra\n{},{},{},{},{}\n",
            bound,
            summary.search,
            summary.oracle,
            summary.missing.len(),
            summary.extra.len()
        ),
        Format::Md => {
            let word = if code == EXIT_OK { "agree" } else { "DISAGREE" };
            format!(
                "search and oracle {word} below {bound}: {} and {} arrays, {} missing, {} extra\n",
                summary.search,
                summary.oracle,
                summary.missing.len(),
                summary.extra.len()
            )
        }
    };
    Ok((code, body))
}
