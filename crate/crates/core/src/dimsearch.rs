//! Recursive search for dimension arrays.
//!
//! A category of rank `n = 2k + s` with `s` invertible simples has `k` dual
//! pairs of non-invertible simples with odd dimensions `d_1 >= ... >= d_k`.
//! Each `m_i = FPdim / d_i^2` is an odd integer, and writing
//! `m_i = w * u_i^2` with `w` squarefree turns the search into a walk over
//! odd integers `u_1 <= u_2 <= ...` driven by the rational slack
//!
//! ```text
//! c_i * d_i^2 = s + 2 d_{i+1}^2 + ... + 2 d_k^2
//! ```
//!
//! which starts at `c_1 = m_1 - 2` and updates as
//! `c_{i+1} = c_i * u_{i+1}^2 / u_i^2 - 2`. At the bottom, `s / c_k` must be
//! the square of `d_k`, and the remaining dimensions follow from the `u_i`.
//!
//! The adjoint mode runs the same walk over the non-invertible simples of the
//! adjoint subcategory only, with `c_1 = m_1 / |G| - 2`.
//!
//! All arithmetic is exact. Each branch first runs on checked `i128` and is
//! replayed on [`BigInt`] if any intermediate overflows.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_integer::{Integer, Roots};
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::exactmath::{gcd, is_prime, is_prime_power, squarefree_split};
use crate::Error;

/// Which simples the search ranges over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Mode {
    /// Every simple object of the category.
    Basic,
    /// Only the simples of the adjoint subcategory.
    Adjoint {
        adjoint_rank: u64,
        adjoint_invertibles: u64,
    },
}

/// Optional restrictions layered on top of the recursion.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Predicates {
    /// `m_1` must be a perfect square.
    #[serde(default)]
    pub m1_square: bool,
    /// Every `m_i` must be coprime to this prime.
    #[serde(default)]
    pub mi_coprime: Option<u64>,
    /// Some run of at least this many consecutive entries of `dims` is constant.
    #[serde(default)]
    pub min_run: Option<usize>,
    /// Values of `m_1` to skip.
    #[serde(default)]
    pub m1_exclude: BTreeSet<u64>,
}

impl Predicates {
    pub fn is_empty(&self) -> bool {
        *self == Predicates::default()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SearchParams {
    /// Rank of the whole category.
    pub rank: u64,
    /// Number of invertible simples of the whole category.
    pub invertibles: u64,
    #[serde(flatten)]
    pub mode: Mode,
    pub min_m1: u64,
    #[serde(default)]
    pub predicates: Predicates,
}

impl SearchParams {
    pub fn basic(rank: u64, invertibles: u64) -> SearchParams {
        SearchParams {
            rank,
            invertibles,
            mode: Mode::Basic,
            min_m1: 1,
            predicates: Predicates::default(),
        }
    }

    /// `grading_order` is `|G(C)|`; the adjoint layer has `adjoint_rank` simples,
    /// `adjoint_invertibles` of them invertible.
    pub fn adjoint(rank: u64, grading_order: u64, adjoint_rank: u64, adjoint_invertibles: u64) -> SearchParams {
        SearchParams {
            rank,
            invertibles: grading_order,
            mode: Mode::Adjoint {
                adjoint_rank,
                adjoint_invertibles,
            },
            min_m1: 1,
            predicates: Predicates::default(),
        }
    }

    pub fn with_min_m1(mut self, min_m1: u64) -> SearchParams {
        self.min_m1 = min_m1;
        self
    }

    pub fn with_m1_square(mut self) -> SearchParams {
        self.predicates.m1_square = true;
        self
    }

    pub fn with_mi_coprime(mut self, p: u64) -> SearchParams {
        self.predicates.mi_coprime = Some(p);
        self
    }

    pub fn with_min_run(mut self, len: usize) -> SearchParams {
        self.predicates.min_run = Some(len);
        self
    }

    pub fn with_m1_exclude(mut self, values: impl IntoIterator<Item = u64>) -> SearchParams {
        self.predicates.m1_exclude.extend(values);
        self
    }

    /// Rank of the layer being searched.
    pub fn layer_rank(&self) -> u64 {
        match self.mode {
            Mode::Basic => self.rank,
            Mode::Adjoint { adjoint_rank, .. } => adjoint_rank,
        }
    }

    /// Invertible count `s` of the layer being searched.
    pub fn layer_invertibles(&self) -> u64 {
        match self.mode {
            Mode::Basic => self.invertibles,
            Mode::Adjoint {
                adjoint_invertibles, ..
            } => adjoint_invertibles,
        }
    }

    /// Number of dual pairs `k` in the searched layer.
    pub fn pairs(&self) -> usize {
        ((self.layer_rank().saturating_sub(self.layer_invertibles())) / 2) as usize
    }

    /// `FPdim(C) / FPdim(layer)`: 1 in basic mode, `|G(C)|` in adjoint mode.
    pub fn scale(&self) -> u64 {
        match self.mode {
            Mode::Basic => 1,
            Mode::Adjoint { .. } => self.invertibles,
        }
    }

    /// A single invertible object: dims avoid prime powers and are at least 15.
    pub fn is_perfect(&self) -> bool {
        self.invertibles == 1
    }

    /// Lower bound on `d_i^2`.
    fn min_dim_square(&self) -> u64 {
        if self.is_perfect() {
            225
        } else {
            9
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        let bad = |msg: String| Err(Error::InvalidInput(msg));
        let (n, s) = (self.layer_rank(), self.layer_invertibles());
        if self.rank.is_multiple_of(2) || self.invertibles.is_multiple_of(2) {
            return bad(format!(
                "rank {} and invertible count {} must both be odd",
                self.rank, self.invertibles
            ));
        }
        if n % 2 == 0 || s % 2 == 0 {
            return bad(format!("layer rank {n} and layer invertibles {s} must both be odd"));
        }
        if n <= s {
            return bad(format!("layer rank {n} must exceed its invertible count {s}"));
        }
        if let Mode::Adjoint { adjoint_rank, .. } = self.mode {
            if adjoint_rank > self.rank {
                return bad(format!("adjoint rank {adjoint_rank} exceeds rank {}", self.rank));
            }
        } else if self.invertibles == 0 {
            return bad("invertible count must be positive".into());
        }
        if self.min_m1 == 0 {
            return bad("min_m1 must be positive".into());
        }
        if let Some(p) = self.predicates.mi_coprime {
            if !is_prime(p as u128) {
                return bad(format!("coprimality modulus {p} is not prime"));
            }
        }
        if self.predicates.min_run == Some(0) {
            return bad("minimum run length must be positive".into());
        }
        Ok(())
    }
}

/// One candidate dimension array.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DimSolution {
    /// `FPdim(C)` of the whole category, in both modes.
    pub fpdim: u128,
    /// Invertible count of the searched layer.
    pub invertibles: u64,
    /// One entry per dual pair, non-increasing.
    pub dims: Vec<u64>,
    /// `m_i = fpdim / d_i^2`, non-decreasing.
    pub quotients: Vec<u128>,
}

impl DimSolution {
    /// Builds a solution and its quotients. Fails if some `d_i^2` does not
    /// divide `fpdim`.
    pub fn new(fpdim: u128, invertibles: u64, dims: Vec<u64>) -> Result<DimSolution, Error> {
        let quotients = dims
            .iter()
            .map(|&d| {
                let sq = (d as u128).checked_mul(d as u128).ok_or(Error::Overflow("u128"))?;
                if sq == 0 || !fpdim.is_multiple_of(sq) {
                    return Err(Error::InvalidInput(format!("{d}^2 does not divide {fpdim}")));
                }
                Ok(fpdim / sq)
            })
            .collect::<Result<_, _>>()?;
        Ok(DimSolution {
            fpdim,
            invertibles,
            dims,
            quotients,
        })
    }

    pub fn m1(&self) -> Option<u128> {
        self.quotients.first().copied()
    }

    /// Sum of `s + 2 * sum d_i^2`, the FP dimension of the searched layer.
    pub fn layer_fpdim(&self) -> u128 {
        self.invertibles as u128 + 2 * self.dims.iter().map(|&d| (d as u128).pow(2)).sum::<u128>()
    }

    /// Checks every structural invariant against `params`. The checks are
    /// written directly from the definitions and do not reuse the search.
    pub fn check_invariants(&self, params: &SearchParams) -> Result<(), String> {
        let k = params.pairs();
        if self.invertibles != params.layer_invertibles() {
            return Err(format!(
                "invertible count {} differs from layer's {}",
                self.invertibles,
                params.layer_invertibles()
            ));
        }
        if self.dims.len() != k || self.quotients.len() != k {
            return Err(format!("expected {k} dual pairs, found {}", self.dims.len()));
        }
        if self.dims.windows(2).any(|w| w[0] < w[1]) {
            return Err("dims are not non-increasing".into());
        }
        for (&d, &m) in self.dims.iter().zip(&self.quotients) {
            if d < 3 || d % 2 == 0 {
                return Err(format!("dim {d} is not an odd integer >= 3"));
            }
            let sq = d as u128 * d as u128;
            if !self.fpdim.is_multiple_of(sq) || self.fpdim / sq != m {
                return Err(format!("quotient for dim {d} is not fpdim / d^2"));
            }
            if m % 2 == 0 {
                return Err(format!("quotient {m} is even"));
            }
        }
        let sum_sq: u128 = self.dims.iter().map(|&d| d as u128 * d as u128).sum();
        let layer = self.invertibles as u128 + 2 * sum_sq;
        if self.fpdim != params.scale() as u128 * layer {
            return Err(format!(
                "fpdim {} differs from {} * (s + 2 sum d^2) = {}",
                self.fpdim,
                params.scale(),
                params.scale() as u128 * layer
            ));
        }
        if self.fpdim % 8 != (params.rank % 8) as u128 {
            return Err(format!("fpdim {} is not congruent to the rank mod 8", self.fpdim));
        }
        Ok(())
    }

    /// True when the solution respects `min_m1`, the `m_1 >= |G|` bound, the
    /// perfect-case dimension rules and every predicate.
    pub fn satisfies(&self, params: &SearchParams) -> bool {
        let Some(m1) = self.m1() else { return false };
        if m1 < params.invertibles.max(params.min_m1) as u128 {
            return false;
        }
        if params.is_perfect()
            && self
                .dims
                .iter()
                .any(|&d| d < 15 || is_prime_power(d as u128).unwrap_or(true))
        {
            return false;
        }
        let p = &params.predicates;
        if p.m1_square && m1.isqrt().pow(2) != m1 {
            return false;
        }
        if let Ok(m1) = u64::try_from(m1) {
            if p.m1_exclude.contains(&m1) {
                return false;
            }
        }
        if let Some(q) = p.mi_coprime {
            if self.quotients.iter().any(|&m| m % q as u128 == 0) {
                return false;
            }
        }
        if let Some(len) = p.min_run {
            if longest_run(&self.dims) < len {
                return false;
            }
        }
        true
    }
}

/// Canonical order: descending fpdim, then lexicographically descending dims.
pub fn canonical_cmp(a: &DimSolution, b: &DimSolution) -> Ordering {
    b.fpdim
        .cmp(&a.fpdim)
        .then_with(|| b.dims.cmp(&a.dims))
        .then_with(|| b.invertibles.cmp(&a.invertibles))
}

pub fn sort_canonical(solutions: &mut Vec<DimSolution>) {
    solutions.sort_by(canonical_cmp);
    solutions.dedup();
}

fn longest_run(dims: &[u64]) -> usize {
    dims.chunk_by(|a, b| a == b).map(<[u64]>::len).max().unwrap_or(0)
}

/// Admissible `m_1` values, ascending.
pub fn m1_candidates(params: &SearchParams) -> Vec<u64> {
    let k = params.pairs() as u64;
    let s = params.layer_invertibles();
    let g = params.scale();
    // m1 <= g * (2k + s/9), compared exactly as 9 m1 <= g (18k + s)
    let upper = g * (18 * k + s) / 9;
    let lower = params.invertibles.max(params.min_m1);
    let residue = params.rank % 8;
    let first = lower + (residue + 8 - lower % 8) % 8;
    let p = &params.predicates;
    (first..=upper)
        .step_by(8)
        .filter(|m| !p.m1_exclude.contains(m))
        .filter(|&m| !p.m1_square || m.isqrt().pow(2) == m)
        .collect()
}

/// Children of one recursion node: every odd `u` that can follow `u_prev`
/// with `remaining = k - i` pairs still to place, paired with the next slack.
pub fn next_level(
    c_prev: &BigRational,
    u_prev: u64,
    remaining: usize,
    params: &SearchParams,
) -> Vec<(u64, BigRational)> {
    if !c_prev.is_positive() || remaining == 0 {
        return Vec::new();
    }
    let ctx = Ctx::<BigInt>::new(params, None);
    let (a, b) = (c_prev.numer().clone(), c_prev.denom().clone());
    let children = ctx
        .children(&BigInt::from(u_prev), &a, &b, remaining)
        .expect("big integers never overflow");
    children
        .into_iter()
        .map(|(u, a, b)| (u.to_u64().expect("u fits in u64"), BigRational::new(a, b)))
        .collect()
}

/// All solutions for `params`, in canonical order.
pub fn enumerate(params: &SearchParams) -> Result<Vec<DimSolution>, Error> {
    run(params, None)
}

/// All solutions with `fpdim <= bound`, in canonical order. Uses extra
/// pruning that is only sound under the bound, so the search terminates on
/// layers where the unbounded tree is too large to walk.
pub fn enumerate_bounded(params: &SearchParams, bound: u128) -> Result<Vec<DimSolution>, Error> {
    run(params, Some(bound))
}

fn run(params: &SearchParams, bound: Option<u128>) -> Result<Vec<DimSolution>, Error> {
    params.validate()?;
    let tasks = seed_tasks(params, bound);
    let raw: Vec<Vec<Raw>> = tasks
        .par_iter()
        .map(|task| match run_task::<i128>(params, bound, task) {
            Ok(found) => Ok(found),
            Err(Overflow) => {
                run_task::<BigInt>(params, bound, task).map_err(|_| Error::Overflow("arbitrary precision"))
            }
        })
        .collect::<Result<_, _>>()?;
    let mut out = Vec::new();
    for r in raw.into_iter().flatten() {
        if let Some(sol) = r.into_solution(params)? {
            if bound.is_none_or(|b| sol.fpdim <= b) && sol.satisfies(params) {
                out.push(sol);
            }
        }
    }
    let before = out.len();
    sort_canonical(&mut out);
    debug_assert_eq!(before, out.len(), "search produced a duplicate array");
    Ok(out)
}

/// Unit of parallel work: an `m_1` seed, optionally pinned to one `u_2`.
#[derive(Debug, Clone)]
struct Task {
    m1: u64,
    u2: Option<u64>,
}

fn seed_tasks(params: &SearchParams, bound: Option<u128>) -> Vec<Task> {
    let ctx = Ctx::<BigInt>::new(params, bound);
    let mut tasks = Vec::new();
    for m1 in m1_candidates(params) {
        let Some(seed) = ctx.seed(m1).expect("big integers never overflow") else {
            continue;
        };
        if ctx.k == 1 {
            tasks.push(Task { m1, u2: None });
            continue;
        }
        let children = ctx
            .children(&seed.u1, &seed.a, &seed.b, ctx.k - 1)
            .expect("big integers never overflow");
        for (u, _, _) in children {
            tasks.push(Task {
                m1,
                u2: Some(u.to_u64().expect("u fits in u64")),
            });
        }
    }
    tasks
}

fn run_task<T: Int>(params: &SearchParams, bound: Option<u128>, task: &Task) -> Result<Vec<Raw>, Overflow> {
    let ctx = Ctx::<T>::new(params, bound);
    let Some(seed) = ctx.seed(task.m1)? else {
        return Ok(Vec::new());
    };
    let mut walk = Walk {
        ctx: &ctx,
        w: seed.w.clone(),
        us: vec![seed.u1.clone()],
        out: Vec::new(),
    };
    match task.u2 {
        None => walk.terminal(&seed.a, &seed.b)?,
        Some(u2) => {
            let u2 = T::from_u128(u2 as u128)?;
            let children = ctx.children(&seed.u1, &seed.a, &seed.b, ctx.k - 1)?;
            if let Some((u, a, b)) = children.into_iter().find(|(u, _, _)| *u == u2) {
                let lcm = lcm(&seed.u1, &u)?;
                walk.enter(2, u, a, b, lcm)?;
            }
        }
    }
    Ok(walk.out)
}

/// Signals that a checked `i128` step overflowed.
#[derive(Debug, Clone, Copy)]
struct Overflow;

/// Exact non-negative integer arithmetic, checked where the width is finite.
trait Int: Clone + Ord + Send + Sync + Sized {
    fn from_u128(v: u128) -> Result<Self, Overflow>;
    fn mul(&self, o: &Self) -> Result<Self, Overflow>;
    fn add(&self, o: &Self) -> Result<Self, Overflow>;
    fn sub(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn rem(&self, o: &Self) -> Self;
    fn sqrt(&self) -> Self;
    fn gcd(&self, o: &Self) -> Self;
    fn is_positive(&self) -> bool;
    fn is_zero(&self) -> bool;
    fn is_even(&self) -> bool;
    fn to_big(&self) -> BigInt;
}

impl Int for i128 {
    fn from_u128(v: u128) -> Result<Self, Overflow> {
        i128::try_from(v).map_err(|_| Overflow)
    }
    fn mul(&self, o: &Self) -> Result<Self, Overflow> {
        self.checked_mul(*o).ok_or(Overflow)
    }
    fn add(&self, o: &Self) -> Result<Self, Overflow> {
        self.checked_add(*o).ok_or(Overflow)
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn rem(&self, o: &Self) -> Self {
        self % o
    }
    fn sqrt(&self) -> Self {
        self.isqrt()
    }
    fn gcd(&self, o: &Self) -> Self {
        gcd(*self as u128, *o as u128) as i128
    }
    fn is_positive(&self) -> bool {
        *self > 0
    }
    fn is_zero(&self) -> bool {
        *self == 0
    }
    fn is_even(&self) -> bool {
        self % 2 == 0
    }
    fn to_big(&self) -> BigInt {
        BigInt::from(*self)
    }
}

impl Int for BigInt {
    fn from_u128(v: u128) -> Result<Self, Overflow> {
        Ok(BigInt::from(v))
    }
    fn mul(&self, o: &Self) -> Result<Self, Overflow> {
        Ok(self * o)
    }
    fn add(&self, o: &Self) -> Result<Self, Overflow> {
        Ok(self + o)
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn rem(&self, o: &Self) -> Self {
        self % o
    }
    fn sqrt(&self) -> Self {
        Roots::sqrt(self)
    }
    fn gcd(&self, o: &Self) -> Self {
        Integer::gcd(self, o)
    }
    fn is_positive(&self) -> bool {
        Signed::is_positive(self)
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn is_even(&self) -> bool {
        Integer::is_even(self)
    }
    fn to_big(&self) -> BigInt {
        self.clone()
    }
}

fn lcm<T: Int>(a: &T, b: &T) -> Result<T, Overflow> {
    a.div(&a.gcd(b)).mul(b)
}

/// Search constants lifted into `T`.
struct Ctx<T> {
    k: usize,
    s: T,
    t: T,
    two: T,
    scale: T,
    coprime: Option<T>,
    min_run: Option<usize>,
    bound: Option<T>,
    m1_floor: u64,
}

struct ChildRange<T> {
    lo: T,
    hi: T,
    offset: T,
    denom: T,
}

struct Seed<T> {
    w: T,
    u1: T,
    a: T,
    b: T,
}

impl<T: Int> Ctx<T> {
    fn new(params: &SearchParams, bound: Option<u128>) -> Ctx<T> {
        let lift = |v: u64| T::from_u128(v as u128).unwrap_or_else(|_| unreachable!());
        Ctx {
            k: params.pairs(),
            s: lift(params.layer_invertibles()),
            t: lift(params.min_dim_square()),
            two: lift(2),
            scale: lift(params.scale()),
            coprime: params.predicates.mi_coprime.map(lift),
            min_run: params.predicates.min_run,
            // a bound too wide for T cannot prune anything
            bound: bound.and_then(|b| T::from_u128(b).ok()),
            m1_floor: params.invertibles.max(params.min_m1),
        }
    }

    /// `c_1 = m_1 / scale - 2` as a reduced fraction, with `m_1 = u_1^2 w`.
    fn seed(&self, m1: u64) -> Result<Option<Seed<T>>, Overflow> {
        if m1 < self.m1_floor {
            return Ok(None);
        }
        let m = T::from_u128(m1 as u128)?;
        if let Some(p) = &self.coprime {
            if m.rem(p).is_zero() {
                return Ok(None);
            }
        }
        let (u1, w) = squarefree_split(m1 as u128).map_err(|_| Overflow)?;
        let a = m.sub(&self.scale.mul(&self.two)?);
        if !a.is_positive() {
            return Ok(None);
        }
        let b = self.scale.clone();
        let g = a.gcd(&b);
        let seed = Seed {
            w: T::from_u128(w)?,
            u1: T::from_u128(u1)?,
            a: a.div(&g),
            b: b.div(&g),
        };
        if !self.within_bound(&seed.w, &seed.u1, &seed.u1, &seed.a, &seed.b, self.k - 1)? {
            return Ok(None);
        }
        Ok(Some(seed))
    }

    /// Odd `u` with `u_prev^2 <= u^2 <= u_prev^2 (s + 2rt) / (t c)` and
    /// `c u^2 / u_prev^2 - 2 > 0`, where `c = a / b` and `r = remaining`.
    fn child_range(&self, u_prev: &T, a: &T, b: &T, remaining: usize) -> Result<ChildRange<T>, Overflow> {
        let up2 = u_prev.mul(u_prev)?;
        let r = T::from_u128(remaining as u128)?;
        let one = T::from_u128(1)?;
        // smallest u with a u^2 > 2 b up2
        let offset = self.two.mul(b)?.mul(&up2)?;
        let mut lo = offset.div(a).sqrt().add(&one)?;
        if lo < *u_prev {
            lo = u_prev.clone();
        }
        if lo.is_even() {
            lo = lo.add(&one)?;
        }
        let cap = self.s.add(&self.two.mul(&r)?.mul(&self.t)?)?;
        let hi = up2.mul(b)?.mul(&cap)?.div(&self.t.mul(a)?).sqrt();
        Ok(ChildRange {
            lo,
            hi,
            offset,
            denom: b.mul(&up2)?,
        })
    }

    /// Reduced slack `c u^2 / u_prev^2 - 2` for a `u` inside `range`.
    fn child(&self, range: &ChildRange<T>, u: &T, a: &T) -> Result<(T, T), Overflow> {
        let num = a.mul(&u.mul(u)?)?.sub(&range.offset);
        let g = num.gcd(&range.denom);
        Ok((num.div(&g), range.denom.div(&g)))
    }

    #[allow(clippy::type_complexity)]
    fn children(&self, u_prev: &T, a: &T, b: &T, remaining: usize) -> Result<Vec<(T, T, T)>, Overflow> {
        let range = self.child_range(u_prev, a, b, remaining)?;
        let mut out = Vec::new();
        let mut u = range.lo.clone();
        while u <= range.hi {
            let (na, nb) = self.child(&range, &u, a)?;
            out.push((u.clone(), na, nb));
            u = u.add(&self.two)?;
        }
        Ok(out)
    }

    /// Bounded-mode pruning at a node with slack `a / b` at `u`:
    /// the final `D` is a multiple of `lcm`, so `fpdim >= w lcm^2`; and
    /// `d_i^2 >= (s + 2 r t) b / a`, so `fpdim >= w u^2 (s + 2 r t) b / a`.
    fn within_bound(&self, w: &T, lcm: &T, u: &T, a: &T, b: &T, remaining: usize) -> Result<bool, Overflow> {
        let Some(bound) = &self.bound else {
            return Ok(true);
        };
        if w.mul(lcm)?.mul(lcm)? > *bound {
            return Ok(false);
        }
        let r = T::from_u128(remaining as u128)?;
        let cap = self.s.add(&self.two.mul(&r)?.mul(&self.t)?)?;
        let lhs = w.mul(u)?.mul(u)?.mul(&cap)?.mul(b)?;
        Ok(lhs <= bound.mul(a)?)
    }
}

/// A terminal hit before conversion to fixed-width storage.
struct Raw {
    fpdim: BigInt,
    dims: Vec<BigInt>,
}

impl Raw {
    fn into_solution(self, params: &SearchParams) -> Result<Option<DimSolution>, Error> {
        let fpdim = ToPrimitive::to_u128(&self.fpdim).ok_or(Error::Overflow("u128"))?;
        let mut dims = Vec::with_capacity(self.dims.len());
        for d in &self.dims {
            let d = d.to_u64().ok_or(Error::Overflow("u64"))?;
            if d < 3 || d % 2 == 0 {
                return Ok(None);
            }
            dims.push(d);
        }
        DimSolution::new(fpdim, params.layer_invertibles(), dims).map(Some)
    }
}

struct Walk<'a, T> {
    ctx: &'a Ctx<T>,
    w: T,
    us: Vec<T>,
    out: Vec<Raw>,
}

impl<T: Int> Walk<'_, T> {
    /// Pushes `u_level = u` with slack `a / b` and recurses.
    fn enter(&mut self, level: usize, u: T, a: T, b: T, span: T) -> Result<(), Overflow> {
        let remaining = self.ctx.k - level;
        if let Some(p) = &self.ctx.coprime {
            if u.rem(p).is_zero() {
                return Ok(());
            }
        }
        if !self.ctx.within_bound(&self.w, &span, &u, &a, &b, remaining)? {
            return Ok(());
        }
        self.us.push(u.clone());
        if !self.run_still_possible(remaining) {
            self.us.pop();
            return Ok(());
        }
        if remaining == 0 {
            self.terminal(&a, &b)?;
        } else {
            let range = self.ctx.child_range(&u, &a, &b, remaining)?;
            if self.next_must_repeat(remaining) {
                if range.lo <= u && u <= range.hi {
                    let (na, nb) = self.ctx.child(&range, &u, &a)?;
                    self.enter(level + 1, u.clone(), na, nb, span.clone())?;
                }
            } else {
                let mut v = range.lo.clone();
                while v <= range.hi {
                    let (na, nb) = self.ctx.child(&range, &v, &a)?;
                    let l = lcm(&span, &v)?;
                    self.enter(level + 1, v.clone(), na, nb, l)?;
                    v = v.add(&self.ctx.two)?;
                }
            }
        }
        self.us.pop();
        Ok(())
    }

    /// Longest and trailing runs of equal `u` so far.
    fn runs(&self) -> (usize, usize) {
        let mut best = 0;
        let mut trailing = 0;
        for (i, u) in self.us.iter().enumerate() {
            trailing = if i > 0 && *u == self.us[i - 1] { trailing + 1 } else { 1 };
            best = best.max(trailing);
        }
        (best, trailing)
    }

    /// Equal dims are equal `u`s, so a run of the required length must
    /// already exist or fit in the trailing run plus the levels left.
    fn run_still_possible(&self, remaining: usize) -> bool {
        let Some(len) = self.ctx.min_run else {
            return true;
        };
        let (best, trailing) = self.runs();
        best >= len || trailing + remaining >= len
    }

    /// Too few levels remain to start a fresh run, so the current one must grow.
    fn next_must_repeat(&self, remaining: usize) -> bool {
        match self.ctx.min_run {
            Some(len) => remaining < len && self.runs().0 < len,
            None => false,
        }
    }

    /// Bottom of the walk: `d_k^2 = s / c_k = s b / a` must be a square, and
    /// every `u_i` must divide `D = d_k u_k`.
    fn terminal(&mut self, a: &T, b: &T) -> Result<(), Overflow> {
        let sb = self.ctx.s.mul(b)?;
        if !sb.rem(a).is_zero() {
            return Ok(());
        }
        let dk2 = sb.div(a);
        let dk = dk2.sqrt();
        if dk.mul(&dk)? != dk2 {
            return Ok(());
        }
        let big = self.us.last().expect("at least one level").mul(&dk)?;
        let mut dims = Vec::with_capacity(self.us.len());
        for u in &self.us {
            if !big.rem(u).is_zero() {
                return Ok(());
            }
            dims.push(big.div(u));
        }
        let fpdim = self.w.mul(&big)?.mul(&big)?;
        self.out.push(Raw {
            fpdim: fpdim.to_big(),
            dims: dims.iter().map(Int::to_big).collect(),
        });
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ratio(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn m1_candidates_examples() {
        assert_eq!(m1_candidates(&SearchParams::basic(25, 3)), [9, 17]);
        assert!(m1_candidates(&SearchParams::basic(3, 1)).is_empty());
        assert_eq!(
            m1_candidates(&SearchParams::adjoint(35, 3, 17, 3)),
            [3, 11, 19, 27, 35, 43]
        );
        let sq = SearchParams::basic(41, 5).with_min_m1(25).with_m1_square();
        assert_eq!(m1_candidates(&sq), [25]);
        let t7 = SearchParams::adjoint(49, 5, 29, 5)
            .with_m1_square()
            .with_m1_exclude([49])
            .with_min_m1(27);
        assert_eq!(m1_candidates(&t7), [81, 121]);
    }

    #[test]
    fn next_level_examples() {
        let p = SearchParams::basic(25, 3);
        let got = next_level(&ratio(7, 1), 3, 10, &p);
        assert_eq!(got, vec![(3, ratio(5, 1)), (5, ratio(157, 9))]);
        assert!(next_level(&ratio(7, 1), 1, 1, &p).is_empty());
        assert!(next_level(&ratio(-1, 1), 1, 3, &p).is_empty());
        // tiny slack pushes the window up: 2000 < u^2 <= 2333
        let far = next_level(&ratio(1, 1000), 1, 1, &p);
        assert_eq!(far.iter().map(|c| c.0).collect::<Vec<_>>(), [45, 47]);
    }

    #[test]
    fn k_equals_one_is_handled() {
        // a single pair in basic mode needs s <= m_1 <= 2 + s/9: impossible
        assert!(enumerate(&SearchParams::basic(5, 3)).unwrap().is_empty());
        assert!(enumerate(&SearchParams::basic(11, 9)).unwrap().is_empty());
        // adjoint layer 3 + 2 * 3^2 = 21, times |G| = 3 gives 63 = 7 * 9
        let got = enumerate(&SearchParams::adjoint(15, 3, 5, 3)).unwrap();
        assert_eq!(got.len(), 1);
        assert_eq!((got[0].fpdim, got[0].dims.as_slice()), (63, &[3u64][..]));
    }

    #[test]
    fn rank_27_with_min_m1() {
        let got = enumerate(&SearchParams::basic(27, 3).with_min_m1(5)).unwrap();
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].fpdim, 2475);
        assert_eq!(got[0].dims, [15, 15, 15, 15, 15, 5, 5, 5, 3, 3, 3, 3]);
    }

    #[test]
    fn rank_45_adjoint() {
        let got = enumerate(&SearchParams::adjoint(45, 3, 15, 3)).unwrap();
        let pairs: Vec<_> = got.iter().map(|s| (s.fpdim, s.dims.clone())).collect();
        assert_eq!(
            pairs,
            vec![
                (9 * 25 * 13, vec![15, 15, 3, 3, 3, 3]),
                (9 * 37, vec![3, 3, 3, 3, 3, 3]),
            ]
        );
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(enumerate(&SearchParams::basic(25, 25)).is_err());
        assert!(enumerate(&SearchParams::basic(24, 3)).is_err());
        assert!(enumerate(&SearchParams::basic(25, 3).with_mi_coprime(9)).is_err());
    }

    #[test]
    fn canonical_order_and_runs() {
        assert_eq!(longest_run(&[5, 5, 5, 3, 3]), 3);
        assert_eq!(longest_run(&[]), 0);
        let a = DimSolution::new(441, 3, vec![7, 7, 7, 3]).unwrap();
        let b = DimSolution::new(2025, 3, vec![15, 3]).unwrap();
        let mut v = vec![a.clone(), b.clone(), a.clone()];
        sort_canonical(&mut v);
        assert_eq!(v, vec![b, a]);
    }
}
