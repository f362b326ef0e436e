//! Brute-force enumeration used to certify [`crate::dimsearch`].
//!
//! Iterates over every admissible FP dimension up to a bound, collects the
//! odd `d` with `d^2 | fpdim`, and looks for a non-increasing choice of `k`
//! of them satisfying the layer equation directly. Nothing here touches the
//! `u`/`c` recursion, so agreement between the two is meaningful.

use rayon::prelude::*;
use serde::Serialize;

use crate::dimsearch::{canonical_cmp, DimSolution, SearchParams};
use crate::exactmath::is_prime_power;
use crate::Error;

/// Largest bound accepted. The divisor table is materialised in memory.
pub const MAX_BOUND: u64 = 100_000_000;

/// Every solution with `fpdim <= fpdim_bound`, in canonical order.
pub fn oracle_enumerate(params: &SearchParams, fpdim_bound: u64) -> Result<Vec<DimSolution>, Error> {
    params.validate()?;
    if fpdim_bound > MAX_BOUND {
        return Err(Error::InvalidInput(format!(
            "oracle bound {fpdim_bound} exceeds {MAX_BOUND}"
        )));
    }
    let k = params.pairs();
    let s = params.layer_invertibles();
    let g = params.scale();
    let perfect = params.invertibles == 1;
    let table = SquareDivisors::build(fpdim_bound);
    let residue = params.rank % 8;
    let first = if residue == 0 { 8 } else { residue };

    let count = if fpdim_bound < first {
        0
    } else {
        (fpdim_bound - first) / 8 + 1
    };
    let mut found: Vec<DimSolution> = (0..count)
        .into_par_iter()
        .map(|i| first + 8 * i)
        .filter(|&f| f % g == 0 && f / g > s && (f / g - s).is_multiple_of(2))
        .flat_map_iter(|f| {
            let target = (f / g - s) / 2;
            let cands: Vec<u64> = table
                .roots(f)
                .iter()
                .rev()
                .map(|&d| d as u64)
                .filter(|&d| d >= 3 && (!perfect || (d >= 15 && !is_prime_power(d as u128).unwrap_or(true))))
                .collect();
            let mut out = Vec::new();
            let mut picked = Vec::with_capacity(k);
            pick(&cands, 0, k, target, &mut picked, &mut |dims| {
                if let Some(sol) = accept(params, f, dims) {
                    out.push(sol);
                }
            });
            out
        })
        .collect();
    found.sort_by(canonical_cmp);
    Ok(found)
}

/// Depth-first choice of `left` values from `cands[from..]` (descending),
/// with repetition, whose squares sum to `target`.
fn pick(cands: &[u64], from: usize, left: usize, target: u64, picked: &mut Vec<u64>, emit: &mut impl FnMut(&[u64])) {
    if left == 0 {
        if target == 0 {
            emit(picked);
        }
        return;
    }
    let Some(&smallest) = cands.last() else { return };
    let floor = (left as u64 - 1) * smallest * smallest;
    for (i, &d) in cands.iter().enumerate().skip(from) {
        let sq = d * d;
        if sq * (left as u64) < target {
            break;
        }
        if sq + floor > target {
            continue;
        }
        picked.push(d);
        pick(cands, i, left - 1, target - sq, picked, emit);
        picked.pop();
    }
}

fn accept(params: &SearchParams, fpdim: u64, dims: &[u64]) -> Option<DimSolution> {
    let f = fpdim as u128;
    let quotients: Vec<u128> = dims.iter().map(|&d| f / (d as u128 * d as u128)).collect();
    let m1 = quotients[0];
    if m1 < params.invertibles.max(params.min_m1) as u128 {
        return None;
    }
    let p = &params.predicates;
    if p.m1_square && m1.isqrt() * m1.isqrt() != m1 {
        return None;
    }
    if p.m1_exclude.iter().any(|&x| x as u128 == m1) {
        return None;
    }
    if let Some(q) = p.mi_coprime {
        if quotients.iter().any(|m| m % q as u128 == 0) {
            return None;
        }
    }
    if let Some(len) = p.min_run {
        let mut best = 0;
        let mut i = 0;
        while i < dims.len() {
            let j = dims[i..].iter().take_while(|&&x| x == dims[i]).count();
            best = best.max(j);
            i += j;
        }
        if best < len {
            return None;
        }
    }
    Some(DimSolution {
        fpdim: f,
        invertibles: params.layer_invertibles(),
        dims: dims.to_vec(),
        quotients,
    })
}

/// For each odd `n <= bound`, the odd `d >= 3` with `d^2 | n`, ascending.
/// Stored compressed: `offsets[n / 2] .. offsets[n / 2 + 1]` indexes `roots`.
struct SquareDivisors {
    offsets: Vec<u32>,
    roots: Vec<u32>,
}

impl SquareDivisors {
    fn build(bound: u64) -> SquareDivisors {
        let slots = (bound / 2 + 1) as usize;
        let mut counts = vec![0u32; slots + 1];
        let mut d = 3u64;
        while d * d <= bound {
            let mut n = d * d;
            while n <= bound {
                counts[(n / 2) as usize + 1] += 1;
                n += 2 * d * d;
            }
            d += 2;
        }
        for i in 1..counts.len() {
            counts[i] += counts[i - 1];
        }
        let offsets = counts;
        let mut fill = offsets.clone();
        let mut roots = vec![0u32; *offsets.last().unwrap() as usize];
        let mut d = 3u64;
        while d * d <= bound {
            let mut n = d * d;
            while n <= bound {
                let slot = (n / 2) as usize;
                roots[fill[slot] as usize] = d as u32;
                fill[slot] += 1;
                n += 2 * d * d;
            }
            d += 2;
        }
        SquareDivisors { offsets, roots }
    }

    fn roots(&self, n: u64) -> &[u32] {
        let slot = (n / 2) as usize;
        &self.roots[self.offsets[slot] as usize..self.offsets[slot + 1] as usize]
    }
}

/// Differences between a search run and the oracle below a bound.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Diff {
    /// Found by the oracle, absent from the search.
    pub missing: Vec<DimSolution>,
    /// Emitted by the search, unknown to the oracle.
    pub extra: Vec<DimSolution>,
}

impl Diff {
    pub fn is_empty(&self) -> bool {
        self.missing.is_empty() && self.extra.is_empty()
    }

    pub fn len(&self) -> usize {
        self.missing.len() + self.extra.len()
    }
}

/// Compares the part of `search_out` with `fpdim <= fpdim_bound` against
/// `oracle_out`. Both inputs are expected in canonical order.
pub fn compare(search_out: &[DimSolution], oracle_out: &[DimSolution], fpdim_bound: u64) -> Diff {
    let restricted: Vec<&DimSolution> = search_out.iter().filter(|s| s.fpdim <= fpdim_bound as u128).collect();
    let missing = oracle_out.iter().filter(|o| !restricted.contains(o)).cloned().collect();
    let extra = restricted
        .into_iter()
        .filter(|s| !oracle_out.contains(s))
        .cloned()
        .collect();
    Diff { missing, extra }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_divisor_table() {
        let t = SquareDivisors::build(2025);
        assert_eq!(t.roots(2025), &[3, 5, 9, 15, 45]);
        assert_eq!(t.roots(441), &[3, 7, 21]);
        assert!(t.roots(17).is_empty());
        assert!(t.roots(1).is_empty());
    }

    #[test]
    fn rank_25_small_bound() {
        let got = oracle_enumerate(&SearchParams::basic(25, 3), 10_000).unwrap();
        let fpdims: Vec<u128> = got.iter().map(|s| s.fpdim).collect();
        // seven table rows have fpdim at most 10^4
        assert_eq!(got.len(), 7);
        assert_eq!(fpdims[0], 9801);
        assert!(fpdims.contains(&441));
        assert!(fpdims.contains(&2025));
        assert!(got.iter().any(|s| s.dims == [7, 7, 7, 3, 3, 3, 3, 3, 3, 3, 3]));
    }

    #[test]
    fn perfect_rank_17_is_empty() {
        assert!(oracle_enumerate(&SearchParams::basic(17, 1), 1_000_000)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn tiny_bound_is_empty() {
        assert!(oracle_enumerate(&SearchParams::basic(25, 3), 25).unwrap().is_empty());
    }

    #[test]
    fn compare_flags_missing() {
        let a = DimSolution::new(441, 3, vec![7, 7, 7, 3, 3, 3, 3, 3, 3, 3, 3]).unwrap();
        let b = DimSolution::new(2025, 3, vec![15, 15, 9, 5, 3, 3, 3, 3, 3, 3, 3]).unwrap();
        assert!(compare(&[b.clone(), a.clone()], &[b.clone(), a.clone()], 10_000).is_empty());
        let both = [b, a.clone()];
        let diff = compare(&both[..1], &both, 10_000);
        assert_eq!(diff.missing, vec![a]);
        assert_eq!(diff.len(), 1);
    }
}
