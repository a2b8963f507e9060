//! Exact integer arithmetic shared by every other module.
//!
//! Moduli stay below 2^31, so products of two residues fit in `u64` and the
//! occasional 128-bit intermediate only appears in [`mul_mod`].

use crate::error::{Error, Result};

/// Prime factorization as an ascending list of `(prime, exponent)` pairs.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Factorization {
    pub prime_powers: Vec<(u64, u32)>,
}

impl Factorization {
    pub fn is_empty(&self) -> bool {
        self.prime_powers.is_empty()
    }

    /// Multiplies the factors back together.
    pub fn value(&self) -> u64 {
        self.prime_powers
            .iter()
            .map(|&(p, e)| p.pow(e))
            .product()
    }

    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.prime_powers.iter().map(|&(p, _)| p)
    }

    pub fn is_squarefree(&self) -> bool {
        self.prime_powers.iter().all(|&(_, e)| e == 1)
    }
}

pub fn gcd(a: i64, b: i64) -> u64 {
    gcd_u64(a.unsigned_abs(), b.unsigned_abs())
}

pub fn gcd_u64(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// `a` reduced into `[0, c)`.
#[inline]
pub fn reduce(a: i64, c: u64) -> u64 {
    a.rem_euclid(c as i64) as u64
}

#[inline]
pub fn mul_mod(a: u64, b: u64, c: u64) -> u64 {
    ((a as u128 * b as u128) % c as u128) as u64
}

/// Inverse of `a` modulo `c`, in `[0, c)`.
///
/// The unit group modulo 1 is trivial and its single element is written 0.
pub fn mod_inverse(a: i64, c: u64) -> Result<u64> {
    assert!(c >= 1, "modulus must be positive");
    if c == 1 {
        return Ok(0);
    }
    let a_red = reduce(a, c) as i64;
    let (mut r0, mut r1) = (c as i64, a_red);
    let (mut t0, mut t1) = (0i64, 1i64);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    if r0 != 1 {
        return Err(Error::NotInvertible { a, modulus: c });
    }
    Ok(reduce(t0, c))
}

/// Trial-division factorization; fine for the moduli used here (c ≤ ~10^7).
pub fn factorize(c: u64) -> Factorization {
    assert!(c >= 1, "factorize needs a positive integer");
    let mut n = c;
    let mut prime_powers = Vec::new();
    let mut push = |p: u64, n: &mut u64| {
        let mut e = 0;
        while *n % p == 0 {
            *n /= p;
            e += 1;
        }
        if e > 0 {
            prime_powers.push((p, e));
        }
    };
    push(2, &mut n);
    let mut p = 3;
    while p * p <= n {
        push(p, &mut n);
        p += 2;
    }
    if n > 1 {
        prime_powers.push((n, 1));
    }
    Factorization { prime_powers }
}

/// τ(c), the number of positive divisors.
pub fn divisor_count(c: u64) -> u64 {
    factorize(c)
        .prime_powers
        .iter()
        .map(|&(_, e)| e as u64 + 1)
        .product()
}

/// Positive divisors in increasing order.
pub fn divisors(c: u64) -> Vec<u64> {
    let mut out = vec![1u64];
    for (p, e) in factorize(c).prime_powers {
        let len = out.len();
        let mut pk = 1;
        for _ in 0..e {
            pk *= p;
            for i in 0..len {
                out.push(out[i] * pk);
            }
        }
    }
    out.sort_unstable();
    out
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut p = 3;
    while p * p <= n {
        if n % p == 0 {
            return false;
        }
        p += 2;
    }
    true
}

/// τ(k) for every k in `0..=limit` (entry 0 unused).
pub fn divisor_count_sieve(limit: usize) -> Vec<u32> {
    let mut tau = vec![0u32; limit + 1];
    for d in 1..=limit {
        let mut m = d;
        while m <= limit {
            tau[m] += 1;
            m += d;
        }
    }
    tau
}

/// Kronecker symbol (a|n), extending the Jacobi symbol to every integer `n`.
///
/// Conventions: (a|0) = 1 iff a = ±1, (a|−1) = sign of a, and (a|2) follows
/// a mod 8 (0 for even a, 1 for ±1, −1 for ±3).
pub fn kronecker(a: i64, n: i64) -> i8 {
    if n == 0 {
        return if a == 1 || a == -1 { 1 } else { 0 };
    }
    let mut sign: i8 = 1;
    let mut n_abs = n.unsigned_abs();
    if n < 0 && a < 0 {
        sign = -sign;
    }
    let twos = n_abs.trailing_zeros();
    if twos > 0 {
        if a % 2 == 0 {
            return 0;
        }
        n_abs >>= twos;
        if twos % 2 == 1 {
            match a.rem_euclid(8) {
                3 | 5 => sign = -sign,
                _ => {}
            }
        }
    }
    sign * jacobi(reduce(a, n_abs), n_abs)
}

/// Jacobi symbol (a|n) for odd positive n.
fn jacobi(mut a: u64, mut n: u64) -> i8 {
    debug_assert!(n % 2 == 1);
    let mut result: i8 = 1;
    a %= n;
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            if matches!(n % 8, 3 | 5) {
                result = -result;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            result = -result;
        }
        a %= n;
    }
    if n == 1 {
        result
    } else {
        0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn gcd_examples() {
        assert_eq!(gcd(0, 7), 7);
        assert_eq!(gcd(12, 18), 6);
        assert_eq!(gcd(35, 64), 1);
        assert_eq!(gcd(0, 0), 0);
        assert_eq!(gcd(-12, 18), 6);
    }

    #[test]
    fn mod_inverse_examples() {
        assert_eq!(mod_inverse(2, 5), Ok(3));
        assert_eq!(mod_inverse(1, 1), Ok(0));
        assert_eq!(mod_inverse(7, 40), Ok(23));
        assert_eq!(mod_inverse(-2, 5), Ok(2));
        assert_eq!(
            mod_inverse(6, 9),
            Err(Error::NotInvertible { a: 6, modulus: 9 })
        );
    }

    #[test]
    fn mod_inverse_random_pairs() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        let mut checked = 0;
        while checked < 10_000 {
            let c: u64 = rng.gen_range(2..1 << 31);
            let a: i64 = rng.gen_range(-(1 << 40)..(1 << 40));
            if gcd(a, c as i64) != 1 {
                continue;
            }
            let b = mod_inverse(a, c).unwrap();
            assert!(b < c);
            assert_eq!(mul_mod(reduce(a, c), b, c), 1);
            checked += 1;
        }
    }

    #[test]
    fn factorize_examples() {
        assert!(factorize(1).is_empty());
        assert_eq!(factorize(12).prime_powers, vec![(2, 2), (3, 1)]);
        assert_eq!(factorize(578).prime_powers, vec![(2, 1), (17, 2)]);
        for c in 1..2000 {
            assert_eq!(factorize(c).value(), c);
        }
    }

    #[test]
    fn divisor_count_matches_enumeration() {
        assert_eq!(divisor_count(1), 1);
        assert_eq!(divisor_count(12), 6);
        assert_eq!(divisor_count(49), 3);
        let sieve = divisor_count_sieve(10_000);
        for c in 1..=10_000u64 {
            let brute = (1..=c).filter(|d| c % d == 0).count() as u64;
            assert_eq!(divisor_count(c), brute);
            assert_eq!(sieve[c as usize] as u64, brute);
        }
        assert_eq!(divisors(12), vec![1, 2, 3, 4, 6, 12]);
    }

    /// Legendre symbol by listing the nonzero squares modulo an odd prime.
    fn legendre_by_squares(a: i64, p: u64) -> i8 {
        let r = reduce(a, p);
        if r == 0 {
            return 0;
        }
        if (1..p).any(|x| x * x % p == r) {
            1
        } else {
            -1
        }
    }

    #[test]
    fn kronecker_examples() {
        for n in [-9, -2, -1, 1, 2, 3, 8, 15, 100] {
            assert_eq!(kronecker(1, n), 1);
        }
        assert_eq!(kronecker(2, 5), -1);
        assert_eq!(kronecker(8, 3), -1);
        assert_eq!(kronecker(5, 0), 0);
        assert_eq!(kronecker(-1, 0), 1);
        assert_eq!(kronecker(-3, -1), -1);
        assert_eq!(kronecker(4, 2), 0);
    }

    #[test]
    fn kronecker_agrees_with_residue_enumeration() {
        for p in [3u64, 5, 7, 11, 13, 17, 19, 23, 29, 31] {
            for a in -60..60 {
                assert_eq!(kronecker(a, p as i64), legendre_by_squares(a, p), "({a}|{p})");
            }
        }
    }

    proptest! {
        #[test]
        fn kronecker_multiplicative_in_top(a in -500i64..500, b in -500i64..500, k in 0i64..500) {
            let n = 2 * k + 1;
            prop_assert_eq!(kronecker(a * b, n), kronecker(a, n) * kronecker(b, n));
        }

        #[test]
        fn kronecker_multiplicative_in_bottom(a in -500i64..500, m in 1i64..500, n in 1i64..500) {
            prop_assert_eq!(kronecker(a, m * n), kronecker(a, m) * kronecker(a, n));
        }
    }
}
