use std::collections::{BTreeMap, BTreeSet};

use oddmtc::dimsearch::enumerate;
use oddmtc::goldens::{load_goldens, load_grading_cases, verify_table};
use oddmtc::gradings::{discarding_rules, enumerate_cases, invertible_count_candidates, GradingCase};

#[test]
fn every_table_reproduces() {
    for table in load_goldens().unwrap() {
        let check = verify_table(&table).unwrap();
        assert!(check.is_match(), "{}: {:?}", table.id, check.diff);
    }
}

#[test]
fn post_filters_matter_only_where_declared() {
    let tables = load_goldens().unwrap();
    let raw: BTreeMap<&str, usize> = tables
        .iter()
        .map(|t| (t.id.as_str(), enumerate(&t.params).unwrap().len()))
        .collect();
    for table in &tables {
        if table.fixed_dim_prime.is_none() {
            assert_eq!(raw[table.id.as_str()], table.rows.len(), "{}", table.id);
        }
    }
    assert_eq!(raw["T8"], 121);
    assert!(raw["T5"] > 22);
}

/// Cases the printed lists leave out. Each is a valid grading that the
/// pipeline still has to dispose of.
const UNLISTED: [(u64, &str); 2] = [(39, "9,9,9,1x12"), (41, "9x4,1x5")];

/// Invertible counts the printed lists leave out, as `(rank, count)`.
const UNLISTED_COUNTS: [(u64, u64); 3] = [(43, 27), (45, 29), (47, 7)];

#[test]
fn grading_lists_match_the_case_analysis() {
    let mut unlisted = BTreeSet::new();
    let mut unlisted_counts = BTreeSet::new();
    for golden in load_grading_cases().unwrap() {
        let rank = golden.rank;
        let candidates = invertible_count_candidates(rank);
        assert!(
            golden.invertible_counts.iter().all(|s| candidates.contains(s)),
            "rank {rank}"
        );
        for s in candidates.iter().filter(|s| !golden.invertible_counts.contains(s)) {
            unlisted_counts.insert((rank, *s));
        }
        let listed: BTreeSet<_> = golden.cases.iter().map(|c| c.case.clone()).collect();
        let generated: BTreeSet<_> = candidates
            .iter()
            .filter(|&&s| s != 1 && s != rank)
            .flat_map(|&s| enumerate_cases(rank, s))
            .collect();
        assert!(
            listed.is_subset(&generated),
            "rank {rank}: {:?}",
            listed.difference(&generated).collect::<Vec<_>>()
        );
        for extra in generated.difference(&listed) {
            unlisted.insert((rank, extra.to_string()));
        }
        for c in &golden.cases {
            let rules = discarding_rules(&c.case);
            match c.verdict {
                Some(rule) => assert!(rules.contains(&rule), "{} at rank {rank}: {rules:?}", c.case),
                None => assert!(rules.is_empty(), "{} at rank {rank}: {rules:?}", c.case),
            }
        }
    }
    let expected: BTreeSet<(u64, String)> = UNLISTED
        .iter()
        .map(|&(rank, text)| (rank, GradingCase::parse(rank, text).unwrap().to_string()))
        .collect();
    assert_eq!(unlisted, expected);
    assert_eq!(unlisted_counts, BTreeSet::from(UNLISTED_COUNTS));
}

#[test]
fn spot_checks() {
    assert_eq!(enumerate_cases(29, 5).len(), 3);
    assert_eq!(enumerate_cases(33, 3).len(), 3);
    assert!(enumerate_cases(49, 7).iter().any(|c| c.component_ranks == [7; 7]));
}
