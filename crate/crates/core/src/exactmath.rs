//! Exact integer primitives: square roots, squarefree parts, trial-division
//! factorization.
//!
//! Nothing in here touches floating point. Every dimension check in the crate
//! bottoms out in these functions.

use std::fmt;
use std::sync::OnceLock;

use crate::Error;

/// Primes below this bound are sieved once and reused by every factorization.
const SMALL_PRIME_BOUND: u64 = 1 << 16;

fn small_primes() -> &'static [u64] {
    static PRIMES: OnceLock<Vec<u64>> = OnceLock::new();
    PRIMES.get_or_init(|| {
        let n = SMALL_PRIME_BOUND as usize;
        let mut composite = vec![false; n];
        let mut primes = Vec::new();
        for i in 2..n {
            if !composite[i] {
                primes.push(i as u64);
                let mut j = i * i;
                while j < n {
                    composite[j] = true;
                    j += i;
                }
            }
        }
        primes
    })
}

/// Floor square root together with a perfect-square flag.
pub fn isqrt_exact(n: u128) -> (u128, bool) {
    let root = n.isqrt();
    (root, root * root == n)
}

/// Returns `Some(root)` when `n` is a perfect square.
pub fn exact_sqrt(n: u128) -> Option<u128> {
    match isqrt_exact(n) {
        (root, true) => Some(root),
        _ => None,
    }
}

/// Prime factorization, primes strictly increasing, exponents at least one.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Factorization {
    factors: Vec<(u128, u32)>,
}

impl Factorization {
    /// Builds a factorization from `(prime, exponent)` pairs, merging repeats
    /// and dropping zero exponents. Primality of the bases is not checked.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (u128, u32)>) -> Factorization {
        let mut factors: Vec<(u128, u32)> = pairs.into_iter().filter(|&(_, e)| e > 0).collect();
        factors.sort_unstable();
        let mut merged: Vec<(u128, u32)> = Vec::with_capacity(factors.len());
        for (p, e) in factors {
            match merged.last_mut() {
                Some((q, f)) if *q == p => *f += e,
                _ => merged.push((p, e)),
            }
        }
        Factorization { factors: merged }
    }

    pub fn factors(&self) -> &[(u128, u32)] {
        &self.factors
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    /// Distinct prime divisors, ascending.
    pub fn primes(&self) -> impl Iterator<Item = u128> + '_ {
        self.factors.iter().map(|&(p, _)| p)
    }

    pub fn exponent_of(&self, p: u128) -> u32 {
        self.factors.iter().find(|&&(q, _)| q == p).map_or(0, |&(_, e)| e)
    }

    /// Multiplies the factorization back out. `None` on u128 overflow.
    pub fn value(&self) -> Option<u128> {
        self.factors.iter().try_fold(1u128, |acc, &(p, e)| {
            let pe = p.checked_pow(e)?;
            acc.checked_mul(pe)
        })
    }
}

impl fmt::Display for Factorization {
    /// Renders as `3^2*5^2*19`, or `1` for the empty product.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return f.write_str("1");
        }
        for (i, &(p, e)) in self.factors.iter().enumerate() {
            if i > 0 {
                f.write_str("*")?;
            }
            if e == 1 {
                write!(f, "{p}")?;
            } else {
                write!(f, "{p}^{e}")?;
            }
        }
        Ok(())
    }
}

/// Trial-division factorization.
pub fn factorize(n: u128) -> Result<Factorization, Error> {
    if n == 0 {
        return Err(Error::ZeroInput("factorize"));
    }
    let mut rest = n;
    let mut factors = Vec::new();
    let mut push = |rest: &mut u128, p: u128| {
        let mut e = 0;
        while (*rest).is_multiple_of(p) {
            *rest /= p;
            e += 1;
        }
        if e > 0 {
            factors.push((p, e));
        }
    };
    for &p in small_primes() {
        let p = p as u128;
        if p * p > rest {
            break;
        }
        push(&mut rest, p);
    }
    // Past the sieve: odd trial divisors. Only reached for inputs with two
    // prime factors above 2^16, which never occurs in the dimension tables.
    let mut d = SMALL_PRIME_BOUND as u128 + 1;
    while d * d <= rest {
        push(&mut rest, d);
        d += 2;
    }
    if rest > 1 {
        factors.push((rest, 1));
    }
    Ok(Factorization { factors })
}

/// Writes `n = u²·w` with `w` squarefree and `u` maximal.
pub fn squarefree_split(n: u128) -> Result<(u128, u128), Error> {
    if n == 0 {
        return Err(Error::ZeroInput("squarefree_split"));
    }
    let mut u = 1u128;
    let mut w = 1u128;
    for &(p, e) in factorize(n)?.factors() {
        u *= p.pow(e / 2);
        if e % 2 == 1 {
            w *= p;
        }
    }
    Ok((u, w))
}

/// True iff `n = p^k` for a single prime `p` and `k >= 1`.
pub fn is_prime_power(n: u128) -> Result<bool, Error> {
    if n == 0 {
        return Err(Error::ZeroInput("is_prime_power"));
    }
    Ok(factorize(n)?.factors().len() == 1)
}

pub fn is_prime(n: u128) -> bool {
    n >= 2 && matches!(factorize(n).map(|f| f.factors), Ok(ref v) if v.len() == 1 && v[0].1 == 1)
}

pub fn is_squarefree(n: u128) -> bool {
    n != 0 && factorize(n).is_ok_and(|f| f.factors().iter().all(|&(_, e)| e == 1))
}

pub fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn isqrt_examples() {
        assert_eq!(isqrt_exact(441), (21, true));
        assert_eq!(isqrt_exact(0), (0, true));
        // 49² = 2401 <= 2475 < 2500 = 50²
        assert_eq!(isqrt_exact(2475), (49, false));
        assert_eq!(isqrt_exact(u128::MAX).0, u64::MAX as u128);
    }

    #[test]
    fn squarefree_examples() {
        assert_eq!(squarefree_split(9).unwrap(), (3, 1));
        assert_eq!(squarefree_split(2475).unwrap(), (15, 11));
        assert_eq!(squarefree_split(17).unwrap(), (1, 17));
        assert!(matches!(squarefree_split(0), Err(Error::ZeroInput(_))));
    }

    #[test]
    fn factorize_examples() {
        assert_eq!(factorize(441).unwrap().factors(), &[(3, 2), (7, 2)]);
        assert!(factorize(1).unwrap().is_empty());
        assert_eq!(factorize(1089).unwrap().factors(), &[(3, 2), (11, 2)]);
        assert!(factorize(0).is_err());
        assert_eq!(factorize(4275).unwrap().to_string(), "3^2*5^2*19");
        // two primes above the sieve bound
        let big = 65537u128 * 65539;
        assert_eq!(factorize(big).unwrap().factors(), &[(65537, 1), (65539, 1)]);
    }

    #[test]
    fn prime_power_examples() {
        assert!(is_prime_power(9).unwrap());
        assert!(!is_prime_power(15).unwrap());
        assert!(!is_prime_power(1).unwrap());
        assert!(is_prime_power(0).is_err());
        assert!(is_prime(43));
        assert!(!is_prime(1));
        assert!(!is_prime(9));
    }

    #[test]
    fn from_pairs_merges() {
        let f = Factorization::from_pairs([(5, 1), (3, 2), (5, 1), (7, 0)]);
        assert_eq!(f.factors(), &[(3, 2), (5, 2)]);
        assert_eq!(f.value(), Some(225));
    }
}
