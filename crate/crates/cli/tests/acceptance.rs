//! One line per acceptance criterion. Criteria listed in `KNOWN_RED` are
//! expected to fail as stated; the test checks that they still do, so a
//! change in behaviour shows up either way.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use oddmtc::dimsearch::{enumerate, DimSolution, SearchParams};
use oddmtc::exactmath::{factorize, is_squarefree, isqrt_exact, squarefree_split};
use oddmtc::goldens::golden;
use oddmtc::gradings::invertible_count_candidates;
use oddmtc_cli::{run, EXIT_INPUT, EXIT_OK};

/// The literal T8 run gives 121 arrays; the 21 listed ones are
/// what survives the fixed-dimension rule with p = 5.
const KNOWN_RED: [u32; 1] = [6];

type Verdict = Result<String, String>;

fn call(args: &[&str]) -> (u8, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(
        std::iter::once("oddmtc").chain(args.iter().copied()),
        &mut out,
        &mut err,
    );
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

/// Runs a search subcommand in CSV mode and parses `fpdim,s,d1..dk`.
fn rows(args: &[&str]) -> Result<Vec<(u128, u64, Vec<u64>)>, String> {
    let mut full = args.to_vec();
    full.extend(["--format", "csv"]);
    let (code, out, err) = call(&full);
    if code != EXIT_OK {
        return Err(format!("exit {code}: {err}"));
    }
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(out.as_bytes());
    reader
        .records()
        .map(|r| {
            let r = r.map_err(|e| e.to_string())?;
            let nums: Vec<u128> = r
                .iter()
                .map(|f| f.parse().map_err(|_| format!("bad field {f}")))
                .collect::<Result<_, _>>()?;
            Ok((nums[0], nums[1] as u64, nums[2..].iter().map(|&d| d as u64).collect()))
        })
        .collect()
}

fn as_rows(sols: &[DimSolution]) -> Vec<(u128, u64, Vec<u64>)> {
    sols.iter().map(|s| (s.fpdim, s.invertibles, s.dims.clone())).collect()
}

/// Compares a CLI run with an embedded table, row for row.
fn matches_table(args: &[&str], id: &str) -> Verdict {
    let got = rows(args)?;
    let want = as_rows(&golden(id).map_err(|e| e.to_string())?.rows);
    if got == want {
        Ok(format!("{id} {} rows", got.len()))
    } else {
        Err(format!("{id}: {} rows, expected {}", got.len(), want.len()))
    }
}

fn criterion_1() -> Verdict {
    matches_table(&["dims", "--rank", "25", "--invertibles", "3"], "T1")
}

fn criterion_2() -> Verdict {
    for rank in ["17", "19", "21", "23"] {
        let found = rows(&["dims", "--rank", rank, "--invertibles", "1"])?;
        if !found.is_empty() {
            return Err(format!("rank {rank}: {} rows", found.len()));
        }
    }
    Ok("ranks 17..23 perfect: 0 rows".into())
}

fn criterion_3() -> Verdict {
    let found = rows(&["dims", "--rank", "27", "--invertibles", "3", "--min-m1", "5"])?;
    let want = vec![(2475, 3, vec![15, 15, 15, 15, 15, 5, 5, 5, 3, 3, 3, 3])];
    if found == want {
        Ok("1 row, 2475".into())
    } else {
        Err(format!("{found:?}"))
    }
}

fn criterion_4() -> Verdict {
    let found = rows(&["dims", "--rank", "47", "--invertibles", "15"])?;
    if found.is_empty() {
        Ok("0 rows".into())
    } else {
        Err(format!("{} rows", found.len()))
    }
}

fn adjoint(rank: &'static str, gc: &'static str, ad: &'static str, g: &'static str) -> Vec<&'static str> {
    vec![
        "adjoint-dims",
        "--rank",
        rank,
        "--gc",
        gc,
        "--adjoint-rank",
        ad,
        "--adjoint-invertibles",
        g,
    ]
}

fn criterion_5() -> Verdict {
    let mut notes = Vec::new();
    for (args, id) in [
        (adjoint("35", "3", "17", "3"), "T2"),
        (adjoint("43", "9", "19", "9"), "T4"),
        (adjoint("45", "3", "15", "3"), "T6"),
    ] {
        notes.push(matches_table(&args, id)?);
    }
    let mut t5 = adjoint("43", "3", "25", "3");
    t5.extend(["--fixed-dims", "3"]);
    notes.push(matches_table(&t5, "T5")?);
    Ok(notes.join(", "))
}

fn criterion_6() -> Verdict {
    let t3 = matches_table(
        &[
            "dims",
            "--rank",
            "41",
            "--invertibles",
            "5",
            "--min-m1",
            "25",
            "--m1-square",
        ],
        "T3",
    )?;
    let mut t7 = adjoint("49", "5", "29", "5");
    t7.extend([
        "--mi-coprime",
        "5",
        "--m1-square",
        "--m1-exclude",
        "49",
        "--min-m1",
        "27",
    ]);
    let t7 = matches_table(&t7, "T7")?;
    let mut t8 = adjoint("49", "5", "29", "5");
    t8.extend(["--min-run", "5", "--m1-square", "--min-m1", "25"]);
    let raw = rows(&t8)?;
    let listed = as_rows(&golden("T8").map_err(|e| e.to_string())?.rows);
    let contained = listed.iter().all(|r| raw.contains(r));
    if raw == listed {
        Ok(format!("{t3}, {t7}, T8 21 rows"))
    } else {
        Err(format!(
            "{t3}, {t7}, T8 {} rows, expected 21 (all listed rows present: {contained}; \
             `--fixed-dims 5` leaves {})",
            raw.len(),
            {
                t8.extend(["--fixed-dims", "5"]);
                rows(&t8)?.len()
            }
        ))
    }
}

fn criterion_7() -> Verdict {
    let (code, out, _) = call(&["gradings", "--rank", "29", "--invertibles", "5"]);
    let count = out.lines().filter(|l| l.starts_with("- ")).count();
    if code != EXIT_OK || count != 3 {
        return Err(format!("rank 29, 5 invertibles: {count} cases"));
    }
    let (_, out, _) = call(&["gradings", "--rank", "33", "--invertibles", "3"]);
    let count = out.lines().filter(|l| l.starts_with("- ")).count();
    if count != 3 {
        return Err(format!("rank 33, 3 invertibles: {count} cases"));
    }
    let (_, out, _) = call(&["gradings", "--rank", "49", "--invertibles", "7"]);
    if !out.lines().any(|l| l == "- {7x7}") {
        return Err("rank 49 lacks {7x7}".into());
    }
    let (_, out, _) = call(&["gradings", "--rank", "33", "--invertibles", "3", "--apply-filters"]);
    if !out.contains("Survivors: {27,3,3}\n") {
        return Err(format!("rank 33 survivors: {out}"));
    }
    let mut discards = 0;
    for rank in (17..=49).step_by(2) {
        let r = rank.to_string();
        let (code, out, err) = call(&["gradings", "--rank", &r, "--apply-filters", "--format", "csv"]);
        if code != EXIT_OK {
            return Err(format!("rank {rank}: {err}"));
        }
        let mut reader = csv::Reader::from_reader(out.as_bytes());
        for rec in reader.records() {
            let rec = rec.map_err(|e| e.to_string())?;
            if &rec[3] == "DISCARDED" {
                discards += 1;
                if rec[4].is_empty() {
                    return Err(format!("rank {rank} {} discarded without a rule", &rec[2]));
                }
            }
        }
    }
    Ok(format!("spot checks hold, {discards} cited discards over ranks 17..49"))
}

fn criterion_8() -> Verdict {
    let (code, out, err) = call(&["classify", "--rank", "25", "--format", "csv"]);
    if code != EXIT_OK {
        return Err(err);
    }
    let t1 = golden("T1").map_err(|e| e.to_string())?;
    let mut stopped: BTreeMap<String, BTreeSet<u32>> = BTreeMap::new();
    let mut survivors = BTreeSet::new();
    let mut reader = csv::Reader::from_reader(out.as_bytes());
    for rec in reader.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        if &rec[2] != "{19,3,3}" {
            continue;
        }
        let fpdim: u128 = rec[4].parse().map_err(|_| "fpdim")?;
        let dims: Vec<u64> = rec[5].split(' ').map(|d| d.parse().unwrap()).collect();
        let n = t1
            .rows
            .iter()
            .find(|r| r.fpdim == fpdim && r.dims == dims)
            .and_then(|r| t1.printed_number(r))
            .ok_or(format!("{fpdim} is not a table row"))?;
        if &rec[6] == "DISCARDED" {
            stopped.entry(rec[7].to_string()).or_default().insert(n);
        } else {
            survivors.insert(n);
        }
    }
    let at = |f: &str| stopped.get(f).cloned().unwrap_or_default();
    let fixed: BTreeSet<u32> = (1..=34).filter(|n| !at("fixed-dims").contains(n)).collect();
    let checks = [
        (
            at("same-dim-outside") == BTreeSet::from([35]),
            "same-dim-outside removes 35",
        ),
        (
            fixed == BTreeSet::from([9, 26, 27, 28, 29, 31, 32, 33, 34]),
            "fixed-dims leaves 9 rows",
        ),
        (
            at("deequiv") == BTreeSet::from([26, 27, 29, 31, 33]),
            "deequiv removes 5",
        ),
        (at("dual-product") == BTreeSet::from([9]), "dual-product removes 9"),
        (
            survivors.contains(&34) && survivors.is_subset(&BTreeSet::from([28, 32, 34])),
            "34 survives",
        ),
    ];
    match checks.iter().find(|(ok, _)| !ok) {
        None => Ok(format!("chain order holds, survivors {survivors:?}")),
        Some((_, what)) => Err(format!("{what} fails: {stopped:?}")),
    }
}

fn criterion_9() -> Verdict {
    let mut runs = 0;
    for rank in (17..=49).step_by(2) {
        for s in invertible_count_candidates(rank) {
            if s == rank {
                continue;
            }
            let (r, s_text) = (rank.to_string(), s.to_string());
            let (code, out, err) = call(&[
                "oracle-check",
                "--rank",
                &r,
                "--invertibles",
                &s_text,
                "--fpdim-bound",
                "1000000",
            ]);
            if code != EXIT_OK {
                return Err(format!("rank {rank}, {s} invertibles: {out}{err}"));
            }
            runs += 1;
        }
    }
    Ok(format!("{runs} rank/count pairs agree below 1e6"))
}

fn criterion_10() -> Verdict {
    let mut rng = StdRng::seed_from_u64(0x0dd3c);
    let pool: Vec<(SearchParams, DimSolution)> = [
        SearchParams::basic(25, 3),
        SearchParams::adjoint(35, 3, 17, 3),
        SearchParams::adjoint(43, 9, 19, 9),
        SearchParams::basic(41, 5).with_min_m1(25).with_m1_square(),
    ]
    .into_iter()
    .flat_map(|p| {
        let found = enumerate(&p).unwrap();
        found.into_iter().map(move |s| (p.clone(), s))
    })
    .collect();
    for _ in 0..10_000 {
        let (params, sol) = &pool[rng.gen_range(0..pool.len())];
        sol.check_invariants(params)
            .map_err(|e| format!("{}: {e}", sol.fpdim))?;
    }
    for _ in 0..100_000 {
        let n: u128 = rng.gen_range(1..1u128 << 40);
        let (r, exact) = isqrt_exact(n);
        if r * r > n || (r + 1) * (r + 1) <= n || exact != (r * r == n) {
            return Err(format!("isqrt({n})"));
        }
        let (u, w) = squarefree_split(n).map_err(|e| e.to_string())?;
        if u * u * w != n || !is_squarefree(w) || factorize(n).map_err(|e| e.to_string())?.value() != Some(n) {
            return Err(format!("squarefree split of {n}"));
        }
    }
    Ok("1e4 re-validations, 1e5 round trips".into())
}

#[test]
fn acceptance() {
    let criteria: [(u32, fn() -> Verdict); 10] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
        (10, criterion_10),
    ];
    let results: Vec<(u32, Verdict)> = std::thread::scope(|scope| {
        let handles: Vec<_> = criteria.iter().map(|&(n, f)| (n, scope.spawn(f))).collect();
        handles.into_iter().map(|(n, h)| (n, h.join().unwrap())).collect()
    });
    // written to the handle directly so the lines survive output capture
    let mut stdout = std::io::stdout().lock();
    let mut unexpected = Vec::new();
    for (n, verdict) in &results {
        let red = KNOWN_RED.contains(n);
        match verdict {
            Ok(note) => writeln!(stdout, "criterion {n}: PASS {note}"),
            Err(why) if red => writeln!(stdout, "criterion {n}: FAIL (known red) {why}"),
            Err(why) => writeln!(stdout, "criterion {n}: FAIL {why}"),
        }
        .unwrap();
        if verdict.is_ok() == red {
            unexpected.push(*n);
        }
    }
    assert!(
        unexpected.is_empty(),
        "criteria with an unexpected outcome: {unexpected:?}"
    );
}

#[test]
fn unknown_flags_exit_two_with_usage() {
    let (code, _, err) = call(&["adjoint-dims", "--rank", "35", "--frobnicate"]);
    assert_eq!(code, EXIT_INPUT);
    assert!(err.contains("Usage"));
    assert_eq!(call(&["frobnicate"]).0, EXIT_INPUT);
}
