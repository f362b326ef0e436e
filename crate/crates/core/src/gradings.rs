//! Rank decompositions along the universal grading.
//!
//! An odd-dimensional modular category of rank `r` with `s` invertibles is
//! graded by its group of invertibles. Every component has the same rank
//! modulo 8, so a candidate grading is a multiset of `s` component ranks,
//! all congruent to one odd residue, summing to `r`. The filters below
//! discard multisets that contradict known structure of such gradings.

use std::fmt;

use serde::Serialize;

use crate::exactmath::{factorize, is_prime};
use crate::filters::{FilterVerdict, Rule};
use crate::Error;

/// A multiset of component ranks, stored in descending order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct GradingCase {
    pub rank: u64,
    /// `|G(C)|`, the number of components.
    pub invertibles: u64,
    pub component_ranks: Vec<u64>,
}

impl GradingCase {
    /// Sorts `component_ranks` descending and checks the case is well formed:
    /// odd positive parts, one common residue modulo 8, summing to `rank`.
    pub fn new(rank: u64, mut component_ranks: Vec<u64>) -> Result<GradingCase, Error> {
        component_ranks.sort_unstable_by(|a, b| b.cmp(a));
        let case = GradingCase {
            rank,
            invertibles: component_ranks.len() as u64,
            component_ranks,
        };
        case.validate()?;
        Ok(case)
    }

    /// Parses the compact form, braces optional: `9,1x16` or `{19,3,3}`.
    pub fn parse(rank: u64, text: &str) -> Result<GradingCase, Error> {
        let bad = || Error::InvalidInput(format!("cannot parse grading case {text:?}"));
        let inner = text.trim().trim_start_matches('{').trim_end_matches('}');
        let mut parts = Vec::new();
        for item in inner.split(',') {
            let item = item.trim();
            let (r, n) = match item.split_once('x') {
                Some((r, n)) => (r, n.parse::<usize>().map_err(|_| bad())?),
                None => (item, 1),
            };
            let r: u64 = r.parse().map_err(|_| bad())?;
            parts.extend(std::iter::repeat_n(r, n));
        }
        GradingCase::new(rank, parts)
    }

    pub fn validate(&self) -> Result<(), Error> {
        let parts = &self.component_ranks;
        if parts.is_empty() || self.invertibles != parts.len() as u64 {
            return Err(Error::InvalidInput("a grading needs one rank per component".into()));
        }
        if parts.iter().any(|&x| x % 2 == 0) {
            return Err(Error::InvalidInput(format!("component ranks {parts:?} must be odd")));
        }
        if parts.iter().any(|&x| x % 8 != parts[0] % 8) {
            return Err(Error::InvalidInput(format!(
                "component ranks {parts:?} differ modulo 8"
            )));
        }
        if parts.iter().sum::<u64>() != self.rank {
            return Err(Error::InvalidInput(format!(
                "component ranks {parts:?} do not sum to {}",
                self.rank
            )));
        }
        if parts.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidInput("component ranks must be sorted descending".into()));
        }
        Ok(())
    }

    /// Rank values paired with how many components have that rank, descending.
    pub fn multiplicities(&self) -> Vec<(u64, usize)> {
        let mut out: Vec<(u64, usize)> = Vec::new();
        for &r in &self.component_ranks {
            match out.last_mut() {
                Some((v, n)) if *v == r => *n += 1,
                _ => out.push((r, 1)),
            }
        }
        out
    }

    /// The unique rank occurring an odd number of times, if there is exactly one.
    /// `C_ad` is self-dual while other components pair off with their duals,
    /// so this is the adjoint rank whenever it is determined.
    pub fn adjoint_rank(&self) -> Option<u64> {
        let mut odd = self.multiplicities().into_iter().filter(|&(_, n)| n % 2 == 1);
        match (odd.next(), odd.next()) {
            (Some((r, _)), None) => Some(r),
            _ => None,
        }
    }
}

impl fmt::Display for GradingCase {
    /// Compact form such as `{19,3,3}` or `{9,1x16}`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .multiplicities()
            .into_iter()
            .flat_map(|(r, n)| {
                if n >= 4 {
                    vec![format!("{r}x{n}")]
                } else {
                    vec![r.to_string(); n]
                }
            })
            .collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

/// Every odd `s` with `rank = s m + 8 j` for some `m >= 1`, `j >= 0`,
/// descending. Since `m` is odd, `s m <= rank` and `s m = rank (mod 8)`.
pub fn invertible_count_candidates(rank: u64) -> Vec<u64> {
    (1..=rank)
        .rev()
        .filter(|&s| s % 2 == 1)
        .filter(|&s| (1..=rank / s).any(|m| (rank - s * m).is_multiple_of(8)))
        .collect()
}

/// All grading cases with `s` components summing to `rank`, in descending
/// lexicographic order of the sorted rank vectors.
pub fn enumerate_cases(rank: u64, s: u64) -> Vec<GradingCase> {
    if s == 0 || s > rank {
        return Vec::new();
    }
    let mut out = Vec::new();
    for residue in [7u64, 5, 3, 1] {
        let base = s * residue;
        if base > rank || !(rank - base).is_multiple_of(8) {
            continue;
        }
        // each component is residue + 8 a_i; the a_i form a partition
        let units = (rank - base) / 8;
        let mut parts = Vec::new();
        partitions(units, s as usize, units, &mut parts, &mut |p| {
            let mut ranks: Vec<u64> = p.iter().map(|&a| residue + 8 * a).collect();
            ranks.resize(s as usize, residue);
            out.push(GradingCase {
                rank,
                invertibles: s,
                component_ranks: ranks,
            });
        });
    }
    out.sort_by(|a, b| b.component_ranks.cmp(&a.component_ranks));
    out
}

/// Partitions of `n` into at most `slots` parts, each at most `cap`.
fn partitions(n: u64, slots: usize, cap: u64, parts: &mut Vec<u64>, emit: &mut impl FnMut(&[u64])) {
    if n == 0 {
        emit(parts);
        return;
    }
    if slots == 0 {
        return;
    }
    for first in (1..=cap.min(n)).rev() {
        if first * (slots as u64) < n {
            break;
        }
        parts.push(first);
        partitions(n - first, slots - 1, first, parts, emit);
        parts.pop();
    }
}

/// At least three components have rank at least `p`, for some prime `p`
/// dividing `s`. Holds whenever `(C_ad)_pt` is non-trivial.
pub fn filter_min_three_components(case: &GradingCase) -> FilterVerdict {
    let s = case.invertibles;
    if s == 1 {
        return FilterVerdict::not_applicable("trivial grading");
    }
    let primes: Vec<u64> = factorize(s as u128)
        .map(|f| f.primes().map(|p| p as u64).collect())
        .unwrap_or_default();
    for &p in &primes {
        let big = case.component_ranks.iter().filter(|&&r| r >= p).count();
        if big >= 3 {
            return FilterVerdict::pass(format!("{big} components have rank >= {p}")).checking(Rule::RankMoreThanOne);
        }
    }
    FilterVerdict::discard(
        Rule::RankMoreThanOne,
        format!("fewer than three components of rank >= p for every prime p | {s}"),
    )
}

/// For `s = p` prime, at most one component has rank prime to `p`, and if
/// one does, it is the adjoint component.
pub fn filter_divisibility(case: &GradingCase) -> FilterVerdict {
    let p = case.invertibles;
    if !is_prime(p as u128) {
        return FilterVerdict::not_applicable(format!("|G| = {p} is not prime"));
    }
    let coprime: Vec<u64> = case.component_ranks.iter().copied().filter(|r| r % p != 0).collect();
    match coprime.as_slice() {
        [] => FilterVerdict::pass(format!("every rank divisible by {p}")).checking(Rule::RankNotDivisible),
        [r] if case.adjoint_rank() == Some(*r) => {
            FilterVerdict::pass(format!("only the adjoint rank {r} is prime to {p}")).checking(Rule::RankNotDivisible)
        }
        [r] => FilterVerdict::discard(
            Rule::RankNotDivisible,
            format!("rank {r} is prime to {p} but is not the adjoint rank"),
        ),
        _ => FilterVerdict::discard(
            Rule::RankNotDivisible,
            format!("{} components have rank prime to {p}", coprime.len()),
        ),
    }
}

/// Exactly one rank occurs an odd number of times, and it is not 1.
pub fn filter_odd_multiplicity(case: &GradingCase) -> FilterVerdict {
    if case.invertibles == 1 {
        return FilterVerdict::not_applicable("trivial grading");
    }
    let odd: Vec<u64> = case
        .multiplicities()
        .into_iter()
        .filter(|&(_, n)| n % 2 == 1)
        .map(|(r, _)| r)
        .collect();
    match odd.as_slice() {
        [r] if *r > 1 => FilterVerdict::pass(format!("adjoint rank {r}")).checking(Rule::OddMultiplicity),
        [_] => FilterVerdict::discard(Rule::OddMultiplicity, "the only odd-multiplicity rank is 1"),
        _ => FilterVerdict::discard(
            Rule::OddMultiplicity,
            format!("{} ranks occur an odd number of times", odd.len()),
        ),
    }
}

/// Under the hypothesis `|G(C_ad)| = assumed_gad`: if that is a proper
/// divisor of `s`, at least three components share the adjoint rank.
pub fn filter_equal_rank_components(case: &GradingCase, assumed_gad: u64) -> Result<FilterVerdict, Error> {
    let s = case.invertibles;
    if assumed_gad == 0 || !s.is_multiple_of(assumed_gad) {
        return Err(Error::InvalidInput(format!("{assumed_gad} does not divide {s}")));
    }
    if assumed_gad == s {
        return Ok(FilterVerdict::pass("G(C_ad) = G(C)").checking(Rule::ThreeComponentsRankAdjoint));
    }
    let Some(adjoint) = case.adjoint_rank() else {
        return Ok(FilterVerdict::not_applicable("adjoint rank undetermined"));
    };
    let same = case.component_ranks.iter().filter(|&&r| r == adjoint).count();
    Ok(if same >= 3 {
        FilterVerdict::pass(format!("{same} components of rank {adjoint}")).checking(Rule::ThreeComponentsRankAdjoint)
    } else {
        FilterVerdict::discard(
            Rule::ThreeComponentsRankAdjoint,
            format!("only {same} components of adjoint rank {adjoint}"),
        )
    })
}

/// The three grading filters that need no hypothesis on `G(C_ad)`, in order.
pub fn apply_grading_filters(case: &GradingCase) -> Vec<FilterVerdict> {
    vec![
        filter_min_three_components(case),
        filter_divisibility(case),
        filter_odd_multiplicity(case),
    ]
}

/// Rules cited by the discarding filters; empty when the case survives.
pub fn discarding_rules(case: &GradingCase) -> Vec<Rule> {
    apply_grading_filters(case)
        .into_iter()
        .filter(FilterVerdict::is_discard)
        .filter_map(|v| v.rule)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filters::Outcome;

    fn case(rank: u64, parts: &[u64]) -> GradingCase {
        GradingCase::new(rank, parts.to_vec()).unwrap()
    }

    #[test]
    fn candidates_match_examples() {
        assert_eq!(invertible_count_candidates(25), [25, 17, 9, 5, 3, 1]);
        assert_eq!(invertible_count_candidates(33), [33, 25, 17, 11, 9, 5, 3, 1]);
        assert_eq!(invertible_count_candidates(49), [49, 41, 33, 25, 17, 11, 9, 7, 5, 3, 1]);
    }

    #[test]
    fn cases_rank_33_three() {
        let got: Vec<Vec<u64>> = enumerate_cases(33, 3).into_iter().map(|c| c.component_ranks).collect();
        assert_eq!(got, [vec![27, 3, 3], vec![19, 11, 3], vec![11, 11, 11]]);
    }

    #[test]
    fn cases_include_all_ones_residue() {
        let got = enumerate_cases(25, 17);
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].component_ranks[0], 9);
        assert_eq!(got[0].to_string(), "{9,1x16}");
        assert!(enumerate_cases(25, 7).is_empty());
        assert_eq!(enumerate_cases(25, 25).len(), 1);
    }

    #[test]
    fn rank_33_verdicts() {
        let c = case(33, &[11, 11, 11]);
        assert_eq!(filter_min_three_components(&c).outcome, Outcome::Pass);
        assert!(filter_divisibility(&c).is_discard());
        assert_eq!(
            discarding_rules(&case(33, &[3; 11])),
            [Rule::RankMoreThanOne, Rule::RankNotDivisible]
        );
        assert!(discarding_rules(&case(33, &[27, 3, 3])).is_empty());
        assert_eq!(
            discarding_rules(&case(33, &[19, 11, 3])),
            [Rule::RankNotDivisible, Rule::OddMultiplicity]
        );
    }

    #[test]
    fn odd_multiplicity_examples() {
        let mut ranks = vec![9, 9, 9, 9];
        ranks.extend([1; 11]);
        assert!(filter_odd_multiplicity(&case(47, &ranks)).is_discard());
        assert_eq!(filter_odd_multiplicity(&case(25, &[19, 3, 3])).outcome, Outcome::Pass);
        assert_eq!(
            filter_odd_multiplicity(&case(25, &[25])).outcome,
            Outcome::NotApplicable
        );
    }

    #[test]
    fn equal_rank_examples() {
        let mut ranks = vec![19];
        ranks.extend([3; 8]);
        let c = case(43, &ranks);
        assert!(filter_equal_rank_components(&c, 3).unwrap().is_discard());
        assert_eq!(filter_equal_rank_components(&c, 9).unwrap().outcome, Outcome::Pass);
        assert!(filter_equal_rank_components(&c, 5).is_err());
        let mut ranks = vec![9, 9, 9];
        ranks.extend([1; 6]);
        assert_eq!(
            filter_equal_rank_components(&case(33, &ranks), 3).unwrap().outcome,
            Outcome::Pass
        );
    }

    #[test]
    fn rejects_malformed() {
        assert!(GradingCase::new(25, vec![19, 3, 2]).is_err());
        assert!(GradingCase::new(25, vec![17, 5, 3]).is_err());
        assert!(GradingCase::new(26, vec![19, 3, 3]).is_err());
        assert_eq!(case(25, &[3, 19, 3]).component_ranks, [19, 3, 3]);
    }

    #[test]
    fn parse_round_trips() {
        let c = GradingCase::parse(25, "9,1x16").unwrap();
        assert_eq!(c.invertibles, 17);
        assert_eq!(c.to_string(), "{9,1x16}");
        assert_eq!(GradingCase::parse(25, "{19,3,3}").unwrap(), case(25, &[19, 3, 3]));
        assert!(GradingCase::parse(25, "19,3,x").is_err());
        assert!(GradingCase::parse(25, "19,3").is_err());
    }
}
