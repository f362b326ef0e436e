use std::collections::BTreeSet;

use oddmtc::goldens::golden;
use oddmtc::gradings::GradingCase;
use oddmtc::pipeline::{classify, filter_chain, Status};

/// Printed row numbers of T1 whose first failing step is `filter`.
fn rows_stopped_at(filter: &str) -> BTreeSet<u32> {
    let t1 = golden("T1").unwrap();
    let case = GradingCase::parse(25, "19,3,3").unwrap();
    t1.rows
        .iter()
        .zip(&t1.printed_rows)
        .filter(|(sol, _)| {
            filter_chain(&case, 3, &t1.params, sol)
                .discarded_by()
                .is_some_and(|s| s.filter == filter)
        })
        .map(|(_, &n)| n)
        .collect()
}

#[test]
fn table_one_chain_order() {
    assert_eq!(rows_stopped_at("same-dim-outside"), BTreeSet::from([35]));
    let after_fixed: BTreeSet<u32> = (1..=34)
        .filter(|n| !rows_stopped_at("fixed-dims").contains(n))
        .collect();
    assert_eq!(after_fixed, BTreeSet::from([9, 26, 27, 28, 29, 31, 32, 33, 34]));
    assert_eq!(rows_stopped_at("deequiv"), BTreeSet::from([26, 27, 29, 31, 33]));
    assert_eq!(rows_stopped_at("dual-product"), BTreeSet::from([9]));

    let t1 = golden("T1").unwrap();
    let case = GradingCase::parse(25, "19,3,3").unwrap();
    let row = filter_chain(&case, 3, &t1.params, t1.printed_row(34).unwrap());
    assert_eq!(row.status, Status::Realized);
    assert!(row.steps.iter().all(|s| !s.verdict.is_discard()));
}

#[test]
fn rank_25_leaves_only_row_34() {
    let report = classify(25).unwrap();
    let t1 = golden("T1").unwrap();
    let survivors: BTreeSet<u32> = report
        .arrays()
        .into_iter()
        .filter(|a| a.solution.status != Status::Discarded)
        .filter_map(|a| {
            let sol = t1
                .rows
                .iter()
                .find(|r| r.fpdim == a.solution.fpdim && r.dims == a.solution.dims)?;
            t1.printed_number(sol)
        })
        .collect();
    assert!(survivors.contains(&34));
    assert!(survivors.is_subset(&BTreeSet::from([28, 32, 34])));
    let counts: Vec<u64> = report.surviving_counts().into_iter().map(|(s, _)| s).collect();
    assert_eq!(counts, [25, 3, 1]);
}

#[test]
fn rank_23_pointed_or_perfect_with_empty_search() {
    let report = classify(23).unwrap();
    let left: Vec<(u64, Status)> = report.surviving_counts();
    assert_eq!(left, [(23, Status::Pointed)]);
    let perfect = report.counts.last().unwrap();
    assert_eq!(perfect.invertibles, 1);
    assert_eq!(perfect.status, Status::Discarded);
}

#[test]
fn every_discard_carries_a_citation() {
    for rank in [25, 33, 35, 45] {
        let report = classify(rank).unwrap();
        for count in &report.counts {
            if count.status == Status::Discarded && count.cases.is_empty() {
                assert!(count.verdicts.iter().any(|v| v.is_discard() && v.rule.is_some()));
            }
            for case in &count.cases {
                if case.status != Status::Discarded {
                    continue;
                }
                let cited = case.verdicts.iter().any(|v| v.is_discard() && v.rule.is_some())
                    || case.hypotheses.iter().all(|h| {
                        h.verdicts.iter().any(|v| v.is_discard() && v.rule.is_some())
                            || h.searches
                                .iter()
                                .flat_map(|s| &s.solutions)
                                .all(|s| s.discarded_by().is_some_and(|step| step.verdict.rule.is_some()))
                    });
                assert!(cited, "rank {rank} case {}", case.case);
            }
        }
    }
}
