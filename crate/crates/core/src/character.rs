//! Real Dirichlet characters χ_D attached to fundamental discriminants.

use crate::arith::{factorize, kronecker};
use crate::error::{Error, Result};

/// χ_D(n) = (D|n) for a fundamental discriminant D, or the trivial character
/// when D = 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QuadraticCharacter {
    discriminant: i64,
}

pub fn is_fundamental_discriminant(d: i64) -> bool {
    if d == 1 {
        return true;
    }
    if d == 0 {
        return false;
    }
    let squarefree = |k: i64| k != 0 && factorize(k.unsigned_abs()).is_squarefree();
    match d.rem_euclid(4) {
        1 => squarefree(d),
        0 => {
            let k = d / 4;
            matches!(k.rem_euclid(4), 2 | 3) && squarefree(k)
        }
        _ => false,
    }
}

pub fn make_character(d: i64) -> Result<QuadraticCharacter> {
    if is_fundamental_discriminant(d) {
        Ok(QuadraticCharacter { discriminant: d })
    } else {
        Err(Error::NotFundamental(d))
    }
}

impl QuadraticCharacter {
    pub fn trivial() -> Self {
        QuadraticCharacter { discriminant: 1 }
    }

    pub fn discriminant(&self) -> i64 {
        self.discriminant
    }

    /// |D|, which is both the conductor and a period.
    pub fn conductor(&self) -> u64 {
        self.discriminant.unsigned_abs()
    }

    pub fn is_trivial(&self) -> bool {
        self.discriminant == 1
    }

    /// χ(−1).
    pub fn parity(&self) -> i8 {
        if self.discriminant > 0 {
            1
        } else {
            -1
        }
    }

    pub fn eval(&self, n: i64) -> i8 {
        if self.discriminant == 1 {
            return 1;
        }
        kronecker(self.discriminant, n)
    }

    /// Values χ(0), …, χ(|D|−1) over one period.
    pub fn period_table(&self) -> Vec<i8> {
        (0..self.conductor() as i64).map(|n| self.eval(n)).collect()
    }
}

pub fn char_eval(chi: &QuadraticCharacter, n: i64) -> i8 {
    chi.eval(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::gcd;
    use proptest::prelude::*;

    const FUNDAMENTAL: [i64; 18] = [
        1, 5, 8, 12, 13, 17, 21, 24, 28, 29, 33, 37, 40, 41, 44, -3, -4, -7,
    ];

    #[test]
    fn make_character_validates() {
        assert!(make_character(1).unwrap().is_trivial());
        assert!(make_character(5).is_ok());
        assert!(make_character(12).is_ok());
        assert_eq!(make_character(20), Err(Error::NotFundamental(20)));
        assert_eq!(make_character(10), Err(Error::NotFundamental(10)));
        assert_eq!(make_character(9), Err(Error::NotFundamental(9)));
        assert_eq!(make_character(0), Err(Error::NotFundamental(0)));
        for d in FUNDAMENTAL {
            assert!(is_fundamental_discriminant(d), "{d}");
        }
    }

    #[test]
    fn eval_examples() {
        let trivial = QuadraticCharacter::trivial();
        assert_eq!(trivial.eval(17), 1);
        assert_eq!(make_character(5).unwrap().eval(2), -1);
        assert_eq!(make_character(8).unwrap().eval(3), -1);
        assert_eq!(make_character(5).unwrap().eval(10), 0);
    }

    #[test]
    fn periodic_and_zero_exactly_off_units() {
        for d in (-50i64..=50).filter(|&d| is_fundamental_discriminant(d)) {
            let chi = make_character(d).unwrap();
            let period = chi.conductor() as i64;
            for n in 1..=1000i64 {
                assert_eq!(chi.eval(n), chi.eval(n % period), "D={d} n={n}");
                assert_eq!(chi.eval(n) == 0, gcd(n, d) > 1, "D={d} n={n}");
            }
            assert_eq!(chi.eval(-1), chi.parity());
        }
    }

    #[test]
    fn nontrivial_characters_sum_to_zero() {
        for d in (-50i64..=50).filter(|&d| d != 1 && is_fundamental_discriminant(d)) {
            let chi = make_character(d).unwrap();
            let s: i64 = chi.period_table().iter().map(|&v| v as i64).sum();
            assert_eq!(s, 0, "D={d}");
        }
    }

    proptest! {
        #[test]
        fn completely_multiplicative(idx in 0usize..FUNDAMENTAL.len(), m in -3000i64..3000, n in -3000i64..3000) {
            let chi = make_character(FUNDAMENTAL[idx]).unwrap();
            prop_assert_eq!(chi.eval(m * n), chi.eval(m) * chi.eval(n));
        }
    }
}
