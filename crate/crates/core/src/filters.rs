//! Discard tests on dimension arrays.
//!
//! Each test returns a [`FilterVerdict`]. A discard always names the [`Rule`]
//! it rests on, so reports can say why a candidate disappeared. Tests that
//! need hypotheses the arguments do not carry (which layer is perfect, which
//! grading case is in force) leave that to the caller and document it.
//!
//! Dimension arrays list one entry per dual pair. Where a count of simple
//! objects matters, each entry stands for two objects.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::Serialize;

use crate::dimsearch::DimSolution;
use crate::exactmath::{exact_sqrt, factorize, gcd, is_prime};
use crate::gradings::{apply_grading_filters, enumerate_cases, invertible_count_candidates, GradingCase};
use crate::Error;

/// Outcome of a single test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Outcome {
    Pass,
    Discard,
    NotApplicable,
}

/// The mathematical fact a verdict rests on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(into = "&'static str")]
pub enum Rule {
    /// `rank = |G| m + 8 j` with `m >= 1`, `j >= 0`.
    RankLinearCombination,
    /// At least three grading components of rank at least `p`.
    RankMoreThanOne,
    /// For `|G| = p` prime, only the adjoint component may have rank prime to `p`.
    RankNotDivisible,
    /// Exactly one rank occurs an odd number of times, and it exceeds 1.
    OddMultiplicity,
    /// If `G(C_ad)` is proper in `G(C)`, three components share the adjoint rank.
    ThreeComponentsRankAdjoint,
    /// For `|G| = p` prime and non-adjoint components of rank `p`, every
    /// simple outside `C_ad` has the same dimension.
    SameDimOutsideAdjoint,
    /// In the same setting, each dimension not divisible by `p` occurs a
    /// multiple of `2p` times.
    FixedDims,
    /// The invertible count of a modular category divides its dimension.
    InvertiblesDivide,
    /// `d^2` divides the dimension of a modular category for each simple `d`.
    DimSquareDivides,
    /// Grading components have equal dimension and prescribed ranks.
    ComponentPacking,
    /// `d^2 = 1 + 2 sum N_e e` for a non-fixed simple of dimension `d`.
    DualProduct,
    /// A modular category of dimension `m p^k` (`m` squarefree, `k <= 4`) is pointed.
    ForcedPointed,
    /// A solvable modular category has a non-trivial invertible.
    SolvableInvertible,
    /// `FPdim = p^2 q^a` with `|G| = p` forces `p | q - 1` or `q | p - 1`.
    Semidirect,
    /// Components share one dimension; a component holding no invertible
    /// consists of simples of dimension at least 3.
    ComponentDimension,
    /// With every invertible in `C_ad`, no simple outside `C_ad` is fixed
    /// by `G(C)`, so outside ranks are sums of non-trivial orbit sizes.
    FreeOrbits,
    /// Odd-dimensional modular categories of rank at most 23 are pointed.
    SmallRank,
    /// The dimension search returns nothing for the case.
    EmptySearch,
}

impl Rule {
    pub const ALL: [Rule; 18] = [
        Rule::RankLinearCombination,
        Rule::RankMoreThanOne,
        Rule::RankNotDivisible,
        Rule::OddMultiplicity,
        Rule::ThreeComponentsRankAdjoint,
        Rule::SameDimOutsideAdjoint,
        Rule::FixedDims,
        Rule::InvertiblesDivide,
        Rule::DimSquareDivides,
        Rule::ComponentPacking,
        Rule::DualProduct,
        Rule::ForcedPointed,
        Rule::SolvableInvertible,
        Rule::Semidirect,
        Rule::ComponentDimension,
        Rule::FreeOrbits,
        Rule::SmallRank,
        Rule::EmptySearch,
    ];

    /// Inverse of [`Rule::code`].
    pub fn from_code(code: &str) -> Option<Rule> {
        Rule::ALL.into_iter().find(|r| r.code() == code)
    }

    /// Stable identifier used in every output format.
    pub fn code(self) -> &'static str {
        match self {
            Rule::RankLinearCombination => "rank-linear-combination",
            Rule::RankMoreThanOne => "rank-more-than-1",
            Rule::RankNotDivisible => "rank-not-divisible-by-p",
            Rule::OddMultiplicity => "odd-number-of-components-of-rank",
            Rule::ThreeComponentsRankAdjoint => "three-components-rank-cad",
            Rule::SameDimOutsideAdjoint => "same-dim-outside-cad",
            Rule::FixedDims => "fixed-dims",
            Rule::InvertiblesDivide => "deequiv-invertibles-divide",
            Rule::DimSquareDivides => "dim-square-divides",
            Rule::ComponentPacking => "component-packing",
            Rule::DualProduct => "dual-product",
            Rule::ForcedPointed => "forced-pointed",
            Rule::SolvableInvertible => "solvable-has-invertible",
            Rule::Semidirect => "semidirect-product",
            Rule::ComponentDimension => "component-dimension",
            Rule::FreeOrbits => "fixed-simple-outside-cad",
            Rule::SmallRank => "small-rank-pointed",
            Rule::EmptySearch => "empty-search",
        }
    }

    /// One-line statement of the rule for human-readable reports.
    pub fn statement(self) -> &'static str {
        match self {
            Rule::RankLinearCombination => {
                "rank(C) is a nonnegative integral combination of |G(C)| and 8"
            }
            Rule::RankMoreThanOne => {
                "with (C_ad)_pt non-trivial, at least three grading components have rank >= p for a prime p dividing |G(C_ad)|"
            }
            Rule::RankNotDivisible => {
                "if |G(C)| = p is prime, at most one component has rank prime to p, and it is C_ad"
            }
            Rule::OddMultiplicity => {
                "exactly one rank value occurs an odd number of times; it is rank(C_ad) > 1"
            }
            Rule::ThreeComponentsRankAdjoint => {
                "if G(C_ad) is a proper subgroup of G(C), at least three components have rank equal to rank(C_ad)"
            }
            Rule::SameDimOutsideAdjoint => {
                "if |G(C)| = p and every non-adjoint component has rank p, all simples outside C_ad share one dimension"
            }
            Rule::FixedDims => {
                "in the same setting each non-invertible dimension occurs 2pk times or is divisible by p"
            }
            Rule::InvertiblesDivide => {
                "the invertible count of the de-equivariantization divides its dimension"
            }
            Rule::DimSquareDivides => "FPdim(X)^2 divides FPdim of a modular category for every simple X",
            Rule::ComponentPacking => {
                "grading components share the dimension FPdim(C)/|G(C)| and have the prescribed ranks"
            }
            Rule::DualProduct => {
                "a simple X not fixed by the invertibles has FPdim(X)^2 = 1 + 2 sum N_e e over dimensions e of its component"
            }
            Rule::ForcedPointed => {
                "a modular category of dimension m p^k with m squarefree and k <= 4 is pointed"
            }
            Rule::SolvableInvertible => {
                "a solvable modular category, such as one of dimension m p^a q^b with m squarefree, has a non-trivial invertible"
            }
            Rule::Semidirect => "FPdim(C) = p^2 q^a with |G(C)| = p and a <= 4 forces p | q-1 or q | p-1",
            Rule::ComponentDimension => {
                "components have dimension FPdim(C)/|G(C)|; those holding an invertible look like C_ad, the others hold only simples of dimension >= 3"
            }
            Rule::FreeOrbits => {
                "if C_pt lies in C_ad, a simple fixed by G(C) lies in C_ad"
            }
            Rule::SmallRank => {
                "odd-dimensional modular categories of rank at most 23 are pointed or perfect, and the perfect searches there are empty"
            }
            Rule::EmptySearch => "the dimension search produces no candidate arrays",
        }
    }
}

impl From<Rule> for &'static str {
    fn from(rule: Rule) -> &'static str {
        rule.code()
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// Result of one test: outcome, a short machine-readable reason, and the
/// rule a discard rests on.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct FilterVerdict {
    pub outcome: Outcome,
    pub reason: String,
    pub rule: Option<Rule>,
}

impl FilterVerdict {
    pub fn pass(reason: impl Into<String>) -> FilterVerdict {
        FilterVerdict {
            outcome: Outcome::Pass,
            reason: reason.into(),
            rule: None,
        }
    }

    pub fn discard(rule: Rule, reason: impl Into<String>) -> FilterVerdict {
        FilterVerdict {
            outcome: Outcome::Discard,
            reason: reason.into(),
            rule: Some(rule),
        }
    }

    pub fn not_applicable(reason: impl Into<String>) -> FilterVerdict {
        FilterVerdict {
            outcome: Outcome::NotApplicable,
            reason: reason.into(),
            rule: None,
        }
    }

    /// Attaches the rule a pass or not-applicable verdict was checked against.
    pub fn checking(mut self, rule: Rule) -> FilterVerdict {
        self.rule = Some(rule);
        self
    }

    pub fn is_discard(&self) -> bool {
        self.outcome == Outcome::Discard
    }
}

impl fmt::Display for FilterVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let word = match self.outcome {
            Outcome::Pass => "PASS",
            Outcome::Discard => "DISCARD",
            Outcome::NotApplicable => "N/A",
        };
        match self.rule {
            Some(rule) => write!(f, "{word} [{rule}] {}", self.reason),
            None => write!(f, "{word} {}", self.reason),
        }
    }
}

/// Object counts per dimension, each dual pair counted twice.
pub fn object_counts(dims: &[u64]) -> BTreeMap<u64, usize> {
    let mut counts = BTreeMap::new();
    for &d in dims {
        *counts.entry(d).or_insert(0) += 2;
    }
    counts
}

/// Each non-invertible dimension occurs a multiple of `2p` times or is
/// divisible by `p`. Assumes `|G(C)| = p`, non-trivial `(C_ad)_pt` and
/// non-adjoint components of rank `p`; for adjoint-layer arrays it is the
/// same orbit count restricted to `C_ad`.
///
/// `p` may also be a composite `|G(C_ad)|`: a simple whose dimension is
/// prime to it has trivial stabilizer, so its orbit has full size.
pub fn fixed_dim_multiplicity(solution: &DimSolution, p: u64) -> FilterVerdict {
    fixed_dim_multiplicity_dims(&solution.dims, p)
}

/// [`fixed_dim_multiplicity`] on a bare dual-pair list.
pub fn fixed_dim_multiplicity_dims(dims: &[u64], p: u64) -> FilterVerdict {
    for (d, count) in object_counts(dims) {
        if gcd(d as u128, p as u128) == 1 && !(count as u64).is_multiple_of(2 * p) {
            return FilterVerdict::discard(
                Rule::FixedDims,
                format!(
                    "dim {d} occurs {count} times, not a multiple of {} and prime to {p}",
                    2 * p
                ),
            );
        }
    }
    FilterVerdict::pass("every dimension is divisible by p or occurs 2pk times").checking(Rule::FixedDims)
}

/// `fpdim / p^2` must be a square `d^2` with at least `p(p-1)` simples of
/// dimension `d`. Applies only when `|G(C)| = p` is prime and every
/// non-adjoint component of `case` has rank `p`.
pub fn outside_dim_uniformity(solution: &DimSolution, case: &GradingCase) -> FilterVerdict {
    let Some(p) = uniform_prime(case) else {
        return FilterVerdict::not_applicable("needs prime |G| with non-adjoint components of rank |G|");
    };
    let p2 = (p as u128).pow(2);
    let outside = solution
        .fpdim
        .is_multiple_of(p2)
        .then(|| exact_sqrt(solution.fpdim / p2))
        .flatten();
    let Some(d) = outside else {
        return FilterVerdict::discard(
            Rule::SameDimOutsideAdjoint,
            format!("fpdim {}/{p}^2 is not a perfect square", solution.fpdim),
        );
    };
    let needed = (p * (p - 1)) as usize;
    let have = solution.dims.iter().filter(|&&x| x as u128 == d).count() * 2;
    if have < needed {
        return FilterVerdict::discard(
            Rule::SameDimOutsideAdjoint,
            format!("outside dim {d} needs {needed} objects, only {have} present"),
        );
    }
    FilterVerdict::pass(format!("outside dim {d} with {have} objects")).checking(Rule::SameDimOutsideAdjoint)
}

/// `Some(p)` when `case` has `|G| = p` prime and every component other than
/// the adjoint one has rank `p`.
pub fn uniform_prime(case: &GradingCase) -> Option<u64> {
    let p = case.invertibles;
    if !is_prime(p as u128) {
        return None;
    }
    let adjoint = case.adjoint_rank()?;
    let mut rest = case.component_ranks.clone();
    let at = rest.iter().position(|&r| r == adjoint)?;
    rest.remove(at);
    rest.iter().all(|&r| r == p).then_some(p)
}

/// Splits a whole-category array into the common outside dimension and the
/// dual-pair list of `C_ad`, removing `p(p-1)/2` pairs of the outside dim.
pub fn split_outside(solution: &DimSolution, p: u64) -> Option<(u64, Vec<u64>)> {
    let p2 = (p as u128).pow(2);
    if !solution.fpdim.is_multiple_of(p2) {
        return None;
    }
    let d = u64::try_from(exact_sqrt(solution.fpdim / p2)?).ok()?;
    let mut remove = (p * (p - 1) / 2) as usize;
    let mut adjoint = Vec::with_capacity(solution.dims.len());
    for &x in &solution.dims {
        if x == d && remove > 0 {
            remove -= 1;
        } else {
            adjoint.push(x);
        }
    }
    (remove == 0).then_some((d, adjoint))
}

/// One way the simples of `C_ad` can sit under the action of
/// `G(C_ad) = Z_p`, and the resulting de-equivariantization.
///
/// Every multiset counts simple objects, duals included.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct DeequivProfile {
    pub prime: u64,
    /// Fixed non-invertible simples; each dimension is divisible by `prime`.
    pub fixed_dims: Vec<u64>,
    /// One entry per orbit of size `prime` of non-fixed simples.
    pub nonfixed_orbit_dims: Vec<u64>,
    pub invertible_count: u64,
    pub deequiv_fpdim: u128,
    /// All simple dimensions of the de-equivariantization, descending.
    pub result_dims: Vec<u64>,
    pub result_rank: usize,
}

impl DeequivProfile {
    fn build(p: u64, fixed_dims: Vec<u64>, nonfixed_orbit_dims: Vec<u64>, deequiv_fpdim: u128) -> DeequivProfile {
        let mut result_dims = vec![1u64];
        for &d in &fixed_dims {
            result_dims.extend(std::iter::repeat_n(d / p, p as usize));
        }
        result_dims.extend(nonfixed_orbit_dims.iter().copied());
        result_dims.sort_unstable_by(|a, b| b.cmp(a));
        let invertible_count = result_dims.iter().filter(|&&d| d == 1).count() as u64;
        DeequivProfile {
            prime: p,
            result_rank: result_dims.len(),
            fixed_dims,
            nonfixed_orbit_dims,
            invertible_count,
            deequiv_fpdim,
            result_dims,
        }
    }

    /// Simples of `C_ad` not fixed by the action.
    pub fn nonfixed_count(&self) -> usize {
        self.nonfixed_orbit_dims.len() * self.prime as usize
    }

    /// Number of result simples of dimension greater than one.
    pub fn non_invertible_count(&self) -> usize {
        self.result_rank - self.invertible_count as usize
    }
}

/// Every assignment of the simples of `C_ad` to fixed and non-fixed.
///
/// `adjoint_dims` lists the non-invertible dual pairs of `C_ad`, whose
/// invertibles are assumed to be exactly `G(C_ad) = Z_p`. Dimensions not
/// divisible by `p` are never fixed; non-fixed simples of one dimension come
/// in orbit pairs of `2p`. Profiles are ordered by dimension, descending,
/// then by non-fixed count, ascending.
pub fn deequiv_profiles(adjoint_dims: &[u64], p: u64, adjoint_fpdim: u128) -> Result<Vec<DeequivProfile>, Error> {
    if p < 3 || !is_prime(p as u128) {
        return Err(Error::InvalidInput(format!("{p} is not an odd prime")));
    }
    if !adjoint_fpdim.is_multiple_of(p as u128) {
        return Err(Error::InvalidInput(format!("{p} does not divide {adjoint_fpdim}")));
    }
    let fp = adjoint_fpdim / p as u128;
    // per dimension: the admissible non-fixed object counts
    let mut choices: Vec<(u64, usize, Vec<usize>)> = Vec::new();
    for (d, count) in object_counts(adjoint_dims).into_iter().rev() {
        let orbit_pair = 2 * p as usize;
        let options: Vec<usize> = if d % p != 0 {
            if count % orbit_pair != 0 {
                return Ok(Vec::new());
            }
            vec![count]
        } else {
            (0..=count).step_by(orbit_pair).collect()
        };
        choices.push((d, count, options));
    }
    let mut out = Vec::new();
    let mut pick = vec![0usize; choices.len()];
    loop {
        let mut fixed = Vec::new();
        let mut orbits = Vec::new();
        for (i, (d, count, options)) in choices.iter().enumerate() {
            let nonfixed = options[pick[i]];
            fixed.extend(std::iter::repeat_n(*d, count - nonfixed));
            orbits.extend(std::iter::repeat_n(*d, nonfixed / p as usize));
        }
        out.push(DeequivProfile::build(p, fixed, orbits, fp));
        // odometer over the option lists, last dimension fastest
        let mut i = choices.len();
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            pick[i] += 1;
            if pick[i] < choices[i].2.len() {
                break;
            }
            pick[i] = 0;
        }
    }
}

/// The invertible count must divide the dimension, and so must every
/// squared simple dimension.
pub fn deequiv_consistency(profile: &DeequivProfile) -> FilterVerdict {
    let fp = profile.deequiv_fpdim;
    if !fp.is_multiple_of(profile.invertible_count as u128) {
        return FilterVerdict::discard(
            Rule::InvertiblesDivide,
            format!("{} invertibles do not divide {fp}", profile.invertible_count),
        );
    }
    let mut seen = profile.result_dims.clone();
    seen.dedup();
    if let Some(d) = seen.into_iter().find(|&d| !fp.is_multiple_of((d as u128).pow(2))) {
        return FilterVerdict::discard(Rule::DimSquareDivides, format!("{d}^2 does not divide {fp}"));
    }
    FilterVerdict::pass(format!(
        "{} invertibles and every dim^2 divide {fp}",
        profile.invertible_count
    ))
    .checking(Rule::InvertiblesDivide)
}

/// Discards `adjoint_dims` when every de-equivariantization profile fails
/// [`deequiv_consistency`] (or none exists).
pub fn deequiv_filter(adjoint_dims: &[u64], p: u64, adjoint_fpdim: u128) -> Result<FilterVerdict, Error> {
    let profiles = deequiv_profiles(adjoint_dims, p, adjoint_fpdim)?;
    if profiles.is_empty() {
        return Ok(FilterVerdict::discard(
            Rule::FixedDims,
            "no assignment of fixed and non-fixed simples exists",
        ));
    }
    let verdicts: Vec<FilterVerdict> = profiles.iter().map(deequiv_consistency).collect();
    if let Some(ok) = verdicts.iter().position(|v| !v.is_discard()) {
        let survivor = &profiles[ok];
        return Ok(FilterVerdict::pass(format!(
            "profile with {} non-fixed simples is consistent",
            survivor.nonfixed_count()
        ))
        .checking(Rule::InvertiblesDivide));
    }
    let rule = verdicts[0].rule.unwrap_or(Rule::InvertiblesDivide);
    let reasons: Vec<String> = verdicts.iter().map(|v| v.reason.clone()).collect();
    Ok(FilterVerdict::discard(
        rule,
        format!("all {} profiles fail: {}", profiles.len(), reasons.join("; ")),
    ))
}

/// Whether the whole simple-object multiset (invertibles as dimension 1)
/// can be split into grading components with the ranks of `case` and equal
/// dimension `fpdim / |G|`. Meaningful for whole-category arrays only.
pub fn component_packing_feasible(solution: &DimSolution, case: &GradingCase) -> FilterVerdict {
    let g = case.invertibles as u128;
    if !solution.fpdim.is_multiple_of(g) {
        return FilterVerdict::discard(
            Rule::ComponentPacking,
            format!("{g} does not divide fpdim {}", solution.fpdim),
        );
    }
    let target = solution.fpdim / g;
    let mut counts = object_counts(&solution.dims);
    *counts.entry(1).or_insert(0) += solution.invertibles as usize;
    let values: Vec<(u128, usize)> = counts
        .into_iter()
        .rev()
        .map(|(d, c)| (d as u128 * d as u128, c))
        .collect();
    let total: usize = values.iter().map(|v| v.1).sum();
    let bins: Vec<usize> = case.component_ranks.iter().map(|&r| r as usize).collect();
    if bins.iter().sum::<usize>() != total {
        return FilterVerdict::discard(
            Rule::ComponentPacking,
            format!(
                "{total} simples cannot fill components of total rank {}",
                bins.iter().sum::<usize>()
            ),
        );
    }
    let mut packer = Packer {
        squares: values.iter().map(|v| v.0).collect(),
        bins,
        target,
        dead: HashSet::new(),
    };
    let mut left: Vec<usize> = values.iter().map(|v| v.1).collect();
    if packer.place_bin(0, &mut left) {
        FilterVerdict::pass(format!("simples pack into components of dimension {target}"))
            .checking(Rule::ComponentPacking)
    } else {
        FilterVerdict::discard(
            Rule::ComponentPacking,
            format!("no packing into components of ranks {} with dimension {target}", case),
        )
    }
}

struct Packer {
    squares: Vec<u128>,
    bins: Vec<usize>,
    target: u128,
    /// Failed states at bin boundaries.
    dead: HashSet<(usize, Vec<usize>)>,
}

impl Packer {
    fn place_bin(&mut self, bin: usize, left: &mut Vec<usize>) -> bool {
        if bin == self.bins.len() {
            return left.iter().all(|&c| c == 0);
        }
        if self.dead.contains(&(bin, left.clone())) {
            return false;
        }
        let ok = self.fill(bin, 0, self.bins[bin], self.target, left);
        if !ok {
            self.dead.insert((bin, left.clone()));
        }
        ok
    }

    fn fill(&mut self, bin: usize, from: usize, slots: usize, sum: u128, left: &mut Vec<usize>) -> bool {
        if slots == 0 {
            return sum == 0 && self.place_bin(bin + 1, left);
        }
        if from == self.squares.len() {
            return false;
        }
        let sq = self.squares[from];
        let smallest = *self.squares[from..].last().unwrap_or(&sq);
        // remaining slots filled with the largest or smallest available value
        if sq * (slots as u128) < sum || smallest * (slots as u128) > sum {
            return false;
        }
        let most = left[from].min(slots).min((sum / sq) as usize);
        for take in (0..=most).rev() {
            left[from] -= take;
            let ok = self.fill(bin, from + 1, slots - take, sum - sq * take as u128, left);
            left[from] += take;
            if ok {
                return true;
            }
        }
        false
    }
}

/// When `g = |G(C)|`, `C_pt` sits inside `C_ad` and `G(C)` acts on each
/// other component without fixed points. Every orbit then has size a
/// divisor of `g` greater than 1, and each non-adjoint rank must be a sum
/// of such sizes.
pub fn free_orbit_ranks(case: &GradingCase, g: u64) -> FilterVerdict {
    if g != case.invertibles {
        return FilterVerdict::not_applicable(format!("|G(C_ad)| = {g} is smaller than |G(C)|"));
    }
    let Some(adjoint) = case.adjoint_rank() else {
        return FilterVerdict::not_applicable("adjoint rank undetermined");
    };
    let sizes: Vec<u64> = (2..=g).filter(|d| g.is_multiple_of(*d)).collect();
    let mut outside = case.component_ranks.clone();
    if let Some(i) = outside.iter().position(|&r| r == adjoint) {
        outside.remove(i);
    }
    let max = outside.iter().copied().max().unwrap_or(0) as usize;
    let mut reachable = vec![false; max + 1];
    reachable[0] = true;
    for n in 1..=max {
        reachable[n] = sizes.iter().any(|&d| d as usize <= n && reachable[n - d as usize]);
    }
    match outside.iter().find(|&&r| !reachable[r as usize]) {
        Some(r) => FilterVerdict::discard(
            Rule::FreeOrbits,
            format!("rank {r} is not a sum of orbit sizes from {sizes:?}"),
        ),
        None => FilterVerdict::pass(format!("outside ranks are sums of orbit sizes from {sizes:?}"))
            .checking(Rule::FreeOrbits),
    }
}

/// Shape of the grading under `|G(C_ad)| = g`: the `s / g` components
/// holding invertibles are translates of `C_ad`, so they have the adjoint
/// rank; every other component must be filled by `rank` simples of
/// dimension at least 3 with squares summing to `component_fpdim`.
///
/// `square_divides` restricts the candidate dimensions to those with
/// `d^2 | square_divides`; pass `None` when only `d >= 3` odd is known.
pub fn component_dimension_feasible(
    case: &GradingCase,
    g: u64,
    component_fpdim: u128,
    square_divides: Option<u128>,
) -> FilterVerdict {
    let Some(adjoint) = case.adjoint_rank() else {
        return FilterVerdict::not_applicable("adjoint rank undetermined");
    };
    let s = case.invertibles;
    if g == 0 || !s.is_multiple_of(g) {
        return FilterVerdict::not_applicable(format!("{g} does not divide {s}"));
    }
    let cosets = (s / g) as usize;
    let mut rest = case.component_ranks.clone();
    for _ in 0..cosets {
        match rest.iter().position(|&r| r == adjoint) {
            Some(at) => {
                rest.remove(at);
            }
            None => {
                return FilterVerdict::discard(
                    Rule::ComponentDimension,
                    format!("{cosets} components must have the adjoint rank {adjoint}"),
                )
            }
        }
    }
    if rest.is_empty() && g == adjoint {
        return FilterVerdict::discard(Rule::ComponentDimension, "every component is pointed, so C is pointed");
    }
    let top = component_fpdim.isqrt();
    let mut cands: Vec<u128> = (3..=top)
        .rev()
        .filter(|d| d % 2 == 1)
        .filter(|d| square_divides.is_none_or(|f| f % (d * d) == 0))
        .collect();
    cands.dedup();
    let mut seen: Vec<u64> = rest.clone();
    seen.dedup();
    for r in seen {
        if !sum_of_squares(&cands, r as usize, component_fpdim) {
            return FilterVerdict::discard(
                Rule::ComponentDimension,
                format!("a component of rank {r} without invertibles cannot have dimension {component_fpdim}"),
            );
        }
    }
    FilterVerdict::pass(format!("components fit dimension {component_fpdim}")).checking(Rule::ComponentDimension)
}

/// Whether `target` is a sum of exactly `count` squares of entries of
/// `cands` (descending), with repetition.
fn sum_of_squares(cands: &[u128], count: usize, target: u128) -> bool {
    fn go(cands: &[u128], from: usize, left: usize, target: u128, dead: &mut HashSet<(usize, usize, u128)>) -> bool {
        if left == 0 {
            return target == 0;
        }
        let Some(&smallest) = cands.last() else { return false };
        if smallest * smallest * left as u128 > target || dead.contains(&(from, left, target)) {
            return false;
        }
        for (i, &d) in cands.iter().enumerate().skip(from) {
            let sq = d * d;
            if sq * (left as u128) < target {
                break;
            }
            if sq <= target && go(cands, i, left - 1, target - sq, dead) {
                return true;
            }
        }
        dead.insert((from, left, target));
        false
    }
    go(cands, 0, count, target, &mut HashSet::new())
}

/// Checks that the de-equivariantization described by `profile` could be
/// an odd-dimensional modular category that is not pointed only when it has
/// a simple of dimension above 1: forced pointedness, small-rank
/// pointedness, solvability, and the grading lemmas applied to it.
pub fn deequiv_layer_check(profile: &DeequivProfile) -> FilterVerdict {
    let fp = profile.deequiv_fpdim;
    let rank = profile.result_rank as u64;
    let inv = profile.invertible_count;
    if profile.non_invertible_count() == 0 {
        return FilterVerdict::pass(format!("pointed layer of rank {rank}"));
    }
    if forced_pointed(fp) {
        return FilterVerdict::discard(
            Rule::ForcedPointed,
            format!(
                "layer of dimension {fp} must be pointed but has a simple of dimension {}",
                profile.result_dims[0]
            ),
        );
    }
    if rank <= 23 {
        return FilterVerdict::discard(Rule::SmallRank, format!("non-pointed layer of rank {rank}"));
    }
    let solvable = solvable_needs_invertible(fp, &profile.result_dims);
    if solvable.is_discard() {
        return solvable;
    }
    let products = layer_dual_product(&profile.result_dims, inv);
    if products.is_discard() {
        return products;
    }
    if inv > 1 && rank <= 73 {
        if !invertible_count_candidates(rank).contains(&inv) {
            return FilterVerdict::discard(
                Rule::RankLinearCombination,
                format!("rank {rank} with {inv} invertibles is not {inv} m + 8 j"),
            );
        }
        let cases = enumerate_cases(rank, inv);
        let mut rules = Vec::new();
        for case in &cases {
            let discards: Vec<Rule> = apply_grading_filters(case)
                .into_iter()
                .filter(FilterVerdict::is_discard)
                .filter_map(|v| v.rule)
                .collect();
            match discards.first() {
                Some(&rule) => rules.push(rule),
                None => {
                    return FilterVerdict::pass(format!("layer grading {case} survives"))
                        .checking(Rule::RankMoreThanOne)
                }
            }
        }
        let rule = rules.first().copied().unwrap_or(Rule::RankLinearCombination);
        return FilterVerdict::discard(
            rule,
            format!("every grading of the rank {rank} layer with {inv} invertibles is excluded"),
        );
    }
    FilterVerdict::pass(format!("layer of rank {rank} with {inv} invertibles"))
}

/// Discards when no profile passes both [`deequiv_consistency`] and
/// [`deequiv_layer_check`].
pub fn deequiv_layer_filter(adjoint_dims: &[u64], p: u64, adjoint_fpdim: u128) -> Result<FilterVerdict, Error> {
    let profiles = deequiv_profiles(adjoint_dims, p, adjoint_fpdim)?;
    let mut failures = Vec::new();
    for profile in &profiles {
        let verdict = match deequiv_consistency(profile) {
            v if v.is_discard() => v,
            _ => deequiv_layer_check(profile),
        };
        if !verdict.is_discard() {
            return Ok(FilterVerdict::pass(format!(
                "layer with {} invertibles and rank {}: {}",
                profile.invertible_count, profile.result_rank, verdict.reason
            )));
        }
        failures.push(verdict);
    }
    let Some(first) = failures.first() else {
        return Ok(FilterVerdict::discard(
            Rule::FixedDims,
            "no assignment of fixed and non-fixed simples exists",
        ));
    };
    let reasons: Vec<String> = failures.iter().map(|v| v.to_string()).collect();
    Ok(FilterVerdict::discard(
        first.rule.unwrap_or(Rule::InvertiblesDivide),
        format!("every layer fails: {}", reasons.join("; ")),
    ))
}

/// Whether `d^2 = 1 + 2 * sum N_e * e` has a nonnegative solution over the
/// dimensions `e` in `available_dims` with `e <= (d^2 - 1) / 2`.
pub fn dual_product_feasible(available_dims: &[u64], d: u64) -> FilterVerdict {
    let target = ((d as u128).pow(2) - 1) / 2;
    let mut coins: Vec<u128> = available_dims
        .iter()
        .map(|&e| e as u128)
        .filter(|&e| e >= 1 && e <= target)
        .collect();
    coins.sort_unstable();
    coins.dedup();
    if representable(&coins, target) {
        FilterVerdict::pass(format!("{}^2 = 1 + 2 sum N_e e is solvable", d)).checking(Rule::DualProduct)
    } else {
        FilterVerdict::discard(
            Rule::DualProduct,
            format!("{}^2 = 1 + 2 sum N_e e has no solution over {:?}", d, coins),
        )
    }
}

/// Dual products inside a layer with `invertibles` invertibles and
/// non-invertible dimensions `dims`: for each simple `X` of dimension `d`,
/// `X X* = sum over the stabilizer H of X plus 2 sum N_e e`, where `|H|`
/// divides the invertible count and `e` ranges over the non-invertible
/// dimensions.
pub fn layer_dual_product(dims: &[u64], invertibles: u64) -> FilterVerdict {
    let mut distinct: Vec<u64> = dims.iter().copied().filter(|&d| d > 1).collect();
    distinct.sort_unstable();
    distinct.dedup();
    let orders: Vec<u128> = (1..=invertibles as u128)
        .filter(|h| (invertibles as u128).is_multiple_of(*h))
        .collect();
    for &d in &distinct {
        let square = (d as u128).pow(2);
        let solvable = orders.iter().filter(|&&h| h <= square).any(|&h| {
            let target = (square - h) / 2;
            let coins: Vec<u128> = distinct.iter().map(|&e| e as u128).filter(|&e| e <= target).collect();
            representable(&coins, target)
        });
        if !solvable {
            return FilterVerdict::discard(
                Rule::DualProduct,
                format!("{d}^2 = |H| + 2 sum N_e e has no solution with |H| | {invertibles} over {distinct:?}"),
            );
        }
    }
    FilterVerdict::pass("every dual product decomposes").checking(Rule::DualProduct)
}

/// Coin-problem membership: shortest representable value in each residue
/// class modulo the smallest coin, by round-robin relaxation.
fn representable(coins: &[u128], target: u128) -> bool {
    if target == 0 {
        return true;
    }
    let Some(&base) = coins.first() else { return false };
    let g = coins.iter().fold(0, |acc, &c| gcd(acc, c));
    if !target.is_multiple_of(g) {
        return false;
    }
    let modulus = base as usize;
    let mut best = vec![u128::MAX; modulus];
    best[0] = 0;
    for &coin in &coins[1..] {
        let step = (coin % base) as usize;
        let cycles = gcd(base, coin % base).max(1) as usize;
        let cycles = if step == 0 { modulus } else { cycles };
        for start in 0..cycles {
            if step == 0 {
                break;
            }
            // walk each cycle twice so the minimum propagates all the way round
            let len = modulus / cycles;
            let mut r = start;
            for _ in 0..2 * len {
                let next = (r + step) % modulus;
                if best[r] != u128::MAX {
                    let cand = best[r] + coin;
                    if cand < best[next] {
                        best[next] = cand;
                    }
                }
                r = next;
            }
        }
    }
    best[(target % base) as usize] <= target
}

/// Whether a modular category of dimension `fpdim` is forced to be pointed:
/// `fpdim = m p^k` with `m` squarefree, `p` prime to `m` and `k <= 4`.
pub fn forced_pointed(fpdim: u128) -> bool {
    let Ok(f) = factorize(fpdim) else { return false };
    let heavy: Vec<u32> = f.factors().iter().map(|&(_, e)| e).filter(|&e| e >= 2).collect();
    match heavy.as_slice() {
        [] => true,
        [e] => *e <= 4,
        _ => false,
    }
}

/// Applies when `fpdim = m p^a q^b` with `m` squarefree: such a category is
/// solvable and so needs a non-trivial invertible among `dims` (dimension 1
/// entries, the unit included). `dims` lists every simple object.
pub fn solvable_needs_invertible(fpdim: u128, dims: &[u64]) -> FilterVerdict {
    let Ok(f) = factorize(fpdim) else {
        return FilterVerdict::not_applicable("fpdim must be positive");
    };
    let heavy = f.factors().iter().filter(|&&(_, e)| e >= 2).count();
    if heavy > 2 {
        return FilterVerdict::not_applicable(format!("{f} has more than two squared primes"));
    }
    let invertibles = dims.iter().filter(|&&d| d == 1).count();
    if invertibles >= 2 {
        FilterVerdict::pass(format!("{invertibles} invertibles")).checking(Rule::SolvableInvertible)
    } else {
        FilterVerdict::discard(
            Rule::SolvableInvertible,
            format!("dimension {f} is solvable but only the unit is invertible"),
        )
    }
}

/// `p | q - 1` or `q | p - 1`, for distinct odd primes and `1 <= a <= 4`.
pub fn semidirect_condition(p: u64, q: u64, a: u32) -> Result<bool, Error> {
    if p == q || p < 3 || q < 3 || !is_prime(p as u128) || !is_prime(q as u128) {
        return Err(Error::InvalidInput(format!("{p} and {q} must be distinct odd primes")));
    }
    if !(1..=4).contains(&a) {
        return Err(Error::InvalidInput(format!("exponent {a} outside 1..=4")));
    }
    Ok((q - 1).is_multiple_of(p) || (p - 1).is_multiple_of(q))
}

/// [`semidirect_condition`] applied to a category with `|G(C)| = p`.
/// Not applicable unless `fpdim = p^2 q^a` with `1 <= a <= 4`.
pub fn semidirect_filter(fpdim: u128, p: u64) -> FilterVerdict {
    let Ok(f) = factorize(fpdim) else {
        return FilterVerdict::not_applicable("fpdim must be positive");
    };
    let shape = match *f.factors() {
        [(x, 2), (q, a)] if x == p as u128 => Some((q, a)),
        [(q, a), (x, 2)] if x == p as u128 => Some((q, a)),
        _ => None,
    };
    let Some((q, a)) = shape.filter(|&(_, a)| (1..=4).contains(&a)) else {
        return FilterVerdict::not_applicable(format!("{f} is not {p}^2 q^a with a <= 4"));
    };
    match semidirect_condition(p, q as u64, a) {
        Ok(true) => FilterVerdict::pass(format!("{p} and {q} satisfy the divisibility")).checking(Rule::Semidirect),
        Ok(false) => FilterVerdict::discard(Rule::Semidirect, format!("neither {p} | {q}-1 nor {q} | {p}-1")),
        Err(_) => FilterVerdict::not_applicable(format!("{p} is not an odd prime")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sol(fpdim: u128, s: u64, dims: &[u64]) -> DimSolution {
        DimSolution::new(fpdim, s, dims.to_vec()).unwrap()
    }

    fn case(rank: u64, parts: &[u64]) -> GradingCase {
        GradingCase::new(rank, parts.to_vec()).unwrap()
    }

    #[test]
    fn fixed_dims_examples() {
        let row1 = sol(18275625, 3, &[1425, 1425, 1425, 1425, 855, 475, 225, 75, 45, 19, 5]);
        assert!(fixed_dim_multiplicity(&row1, 3).is_discard());
        let row34 = sol(441, 3, &[7, 7, 7, 3, 3, 3, 3, 3, 3, 3, 3]);
        assert_eq!(fixed_dim_multiplicity(&row34, 3).outcome, Outcome::Pass);
        assert!(!fixed_dim_multiplicity_dims(&[15, 9, 3], 3).is_discard());
    }

    #[test]
    fn row_34_profiles() {
        let profiles = deequiv_profiles(&[3; 8], 3, 147).unwrap();
        let counts: Vec<u64> = profiles.iter().map(|p| p.invertible_count).collect();
        let nonfixed: Vec<usize> = profiles.iter().map(DeequivProfile::nonfixed_count).collect();
        assert_eq!(nonfixed, [0, 6, 12]);
        assert_eq!(counts, [49, 31, 13]);
        assert_eq!(profiles[0].deequiv_fpdim, 49);
        assert_eq!(profiles[0].result_rank, 49);
        assert!(!deequiv_consistency(&profiles[0]).is_discard());
    }

    #[test]
    fn profiles_force_nonfixed_and_handle_empty() {
        for prof in deequiv_profiles(&[15, 5, 5, 5], 3, 3 + 2 * (225 + 75)).unwrap() {
            assert!(prof.nonfixed_orbit_dims.iter().filter(|&&d| d == 5).count() == 2);
            assert!(prof.fixed_dims.iter().all(|d| d % 3 == 0));
        }
        let empty = deequiv_profiles(&[], 3, 3).unwrap();
        assert_eq!(empty.len(), 1);
        assert_eq!(empty[0].invertible_count, 1);
        assert!(deequiv_profiles(&[3], 3, 10).is_err());
        // two objects of dim 5 cannot form an orbit pair
        assert!(deequiv_profiles(&[5], 3, 51).unwrap().is_empty());
    }

    #[test]
    fn deequiv_discards_row_26() {
        let v = deequiv_filter(&[33, 11, 11, 11, 9, 9, 3, 3], 3, 9801 / 3).unwrap();
        assert!(v.is_discard());
        assert_eq!(v.rule, Some(Rule::InvertiblesDivide));
    }

    #[test]
    fn deequiv_discards_row_29() {
        let v = deequiv_filter(&[39, 39, 39, 39, 15, 3, 3, 3], 3, 38025 / 3).unwrap();
        assert!(v.is_discard());
    }

    #[test]
    fn uniformity_examples() {
        let c = case(25, &[19, 3, 3]);
        let row35 = sol(2025, 3, &[15, 15, 9, 9, 9, 9, 9, 9, 5, 5, 5]);
        assert!(outside_dim_uniformity(&row35, &c).is_discard());
        let row34 = sol(441, 3, &[7, 7, 7, 3, 3, 3, 3, 3, 3, 3, 3]);
        assert_eq!(outside_dim_uniformity(&row34, &c).outcome, Outcome::Pass);
        let odd = sol(2025 * 3, 3, &[15]);
        assert!(outside_dim_uniformity(&odd, &c).is_discard());
        let other = case(27, &[9, 9, 9]);
        assert_eq!(outside_dim_uniformity(&row34, &other).outcome, Outcome::NotApplicable);
    }

    #[test]
    fn split_outside_row_34() {
        let row34 = sol(441, 3, &[7, 7, 7, 3, 3, 3, 3, 3, 3, 3, 3]);
        assert_eq!(split_outside(&row34, 3), Some((7, vec![3; 8])));
    }

    #[test]
    fn packing_examples() {
        let r27 = sol(2475, 3, &[15, 15, 15, 15, 15, 5, 5, 5, 3, 3, 3, 3]);
        assert!(component_packing_feasible(&r27, &case(27, &[9, 9, 9])).is_discard());
        let row34 = sol(441, 3, &[7, 7, 7, 3, 3, 3, 3, 3, 3, 3, 3]);
        assert_eq!(
            component_packing_feasible(&row34, &case(25, &[19, 3, 3])).outcome,
            Outcome::Pass
        );
        // the rank 3 component takes the three 7s, leaving 9a + b = 147 over 11 slots
        assert!(component_packing_feasible(&row34, &case(25, &[11, 11, 3])).is_discard());
    }

    #[test]
    fn dual_product_examples() {
        assert!(dual_product_feasible(&[5, 5, 5, 5, 5, 15, 45, 81, 135], 5).is_discard());
        assert!(dual_product_feasible(&[7, 21, 33], 7).is_discard());
        assert!(dual_product_feasible(&[3], 3).is_discard());
        assert!(!dual_product_feasible(&[5, 3], 5).is_discard());
        assert!(dual_product_feasible(&[629, 111, 51], 51).is_discard());
    }

    #[test]
    fn forced_pointed_examples() {
        assert!(forced_pointed(387));
        assert!(forced_pointed(603));
        assert!(!forced_pointed(9 * 25 * 49));
        assert!(forced_pointed(625));
        assert!(!forced_pointed(3u128.pow(5) * 7));
        assert!(forced_pointed(3 * 5 * 7));
    }

    #[test]
    fn solvable_examples() {
        assert!(solvable_needs_invertible(81 * 25 * 19, &[1, 9, 9, 9]).is_discard());
        assert_eq!(
            solvable_needs_invertible(9 * 25 * 49, &[1]).outcome,
            Outcome::NotApplicable
        );
        assert_eq!(solvable_needs_invertible(49, &[1; 49]).outcome, Outcome::Pass);
    }

    #[test]
    fn semidirect_examples() {
        assert!(semidirect_condition(3, 7, 2).unwrap());
        assert!(semidirect_condition(5, 11, 2).unwrap());
        assert!(!semidirect_condition(3, 5, 1).unwrap());
        assert!(semidirect_condition(3, 3, 1).is_err());
        assert!(semidirect_condition(3, 7, 5).is_err());
        assert!(semidirect_filter(81 * 25, 5).is_discard());
        assert_eq!(semidirect_filter(441, 3).outcome, Outcome::Pass);
        assert_eq!(semidirect_filter(9 * 25 * 49, 3).outcome, Outcome::NotApplicable);
    }

    fn gcase(rank: u64, text: &str) -> GradingCase {
        GradingCase::parse(rank, text).unwrap()
    }

    #[test]
    fn component_dimension_examples() {
        // C_ad pointed of rank 5: the other components hold no invertibles
        assert!(component_dimension_feasible(&gcase(25, "5x5"), 5, 5, None).is_discard());
        // {21,21,5} with FPdim(C_ad) = 63: rank 21 components cannot reach 63
        assert!(component_dimension_feasible(&gcase(47, "21,21,5"), 3, 63, Some(189)).is_discard());
        // {19,3,3}: the rank-3 components can have dimension 147 = 3 * 7^2
        assert!(!component_dimension_feasible(&gcase(25, "19,3,3"), 3, 147, Some(441)).is_discard());
    }

    #[test]
    fn free_orbit_examples() {
        let c = gcase(49, "25,9,9,1x6");
        assert!(free_orbit_ranks(&c, 9).is_discard());
        assert_eq!(free_orbit_ranks(&c, 3).outcome, Outcome::NotApplicable);
        assert_eq!(free_orbit_ranks(&gcase(25, "19,3,3"), 3).outcome, Outcome::Pass);
    }

    #[test]
    fn layer_dual_product_examples() {
        assert!(layer_dual_product(&[629, 111, 51], 1).is_discard());
        assert!(layer_dual_product(&[11, 9, 3], 11).is_discard());
        // 3^2 = 3 + 2 * 3 with a stabilizer of order 3
        assert!(!layer_dual_product(&[3], 3).is_discard());
        assert!(!layer_dual_product(&[1, 1, 1], 3).is_discard());
    }

    #[test]
    fn layer_checks_rows_of_rank_25() {
        // FPdim 2025, dims [15 15 15 15 5 5 5 3 3 3 3]: C_ad dims [5 5 5 3 3 3 3]
        let v = deequiv_layer_filter(&[5, 5, 5, 3, 3, 3, 3], 3, 675).unwrap();
        assert!(v.is_discard(), "{v}");
        // FPdim 441: the pointed layer passes
        assert!(!deequiv_layer_filter(&[3; 8], 3, 147).unwrap().is_discard());
    }
}
