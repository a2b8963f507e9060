//! Central values L(f⊗χ, 1) from the approximate functional equation, for
//! the weight-2 newforms that are eta quotients.

use std::f64::consts::PI;

use crate::arith::{gcd, gcd_u64};
use crate::character::QuadraticCharacter;
use crate::error::{Error, Result};
use crate::sum::CompensatedSum;

/// Eigenvalue of the Fricke involution w_N on the form: f|w_N = ε·f.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AtkinLehnerSign {
    Plus,
    Minus,
    Unknown,
}

impl AtkinLehnerSign {
    pub fn from_i8(e: i8) -> Self {
        match e {
            1 => AtkinLehnerSign::Plus,
            -1 => AtkinLehnerSign::Minus,
            _ => AtkinLehnerSign::Unknown,
        }
    }

    pub fn value(self) -> Option<i8> {
        match self {
            AtkinLehnerSign::Plus => Some(1),
            AtkinLehnerSign::Minus => Some(-1),
            AtkinLehnerSign::Unknown => None,
        }
    }
}

/// Fourier coefficients a_1, …, a_{n_max} of a newform of weight 2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoefficientSource {
    pub level: u64,
    coefficients: Vec<i64>,
    pub atkin_lehner_sign: AtkinLehnerSign,
}

impl CoefficientSource {
    /// Wraps raw coefficients (index 0 holds a_1) without validating them.
    pub fn new(level: u64, coefficients: Vec<i64>, atkin_lehner_sign: AtkinLehnerSign) -> Self {
        CoefficientSource {
            level,
            coefficients,
            atkin_lehner_sign,
        }
    }

    pub fn with_sign(&self, sign: AtkinLehnerSign) -> Self {
        CoefficientSource {
            atkin_lehner_sign: sign,
            ..self.clone()
        }
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// a_n for 1 ≤ n ≤ len().
    pub fn get(&self, n: usize) -> i64 {
        self.coefficients[n - 1]
    }

    pub fn coefficients(&self) -> &[i64] {
        &self.coefficients
    }

    /// a_{mn} = a_m·a_n for every coprime pair with mn in range.
    pub fn is_hecke_multiplicative(&self) -> bool {
        let n_max = self.len();
        (1..=n_max).all(|m| {
            (1..=n_max / m)
                .filter(|&n| gcd(m as i64, n as i64) == 1)
                .all(|n| self.get(m * n) == self.get(m) * self.get(n))
        })
    }

    /// |a_p| ≤ 2√p at primes not dividing the level.
    pub fn satisfies_deligne_bound(&self) -> bool {
        (2..=self.len())
            .filter(|&p| crate::arith::is_prime(p as u64) && self.level % p as u64 != 0)
            .all(|p| (self.get(p) as f64).abs() <= 2.0 * (p as f64).sqrt())
    }

    /// Two-column CSV (`n,a_n`) with a header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,a_n\n");
        for (i, a) in self.coefficients.iter().enumerate() {
            out.push_str(&format!("{},{}\n", i + 1, a));
        }
        out
    }
}

/// Levels whose newform space is one-dimensional and spanned by an eta
/// quotient Π η(δz)^{r_δ}.
pub const ETA_LEVELS: [u64; 7] = [11, 14, 15, 20, 27, 32, 36];

fn eta_exponents(level: u64) -> Option<&'static [(u64, u32)]> {
    Some(match level {
        11 => &[(1, 2), (11, 2)],
        14 => &[(1, 1), (2, 1), (7, 1), (14, 1)],
        15 => &[(1, 1), (3, 1), (5, 1), (15, 1)],
        20 => &[(2, 2), (10, 2)],
        27 => &[(3, 2), (9, 2)],
        32 => &[(4, 2), (8, 2)],
        36 => &[(6, 4)],
        _ => return None,
    })
}

/// Nonzero coefficients of Π_{k≥1}(1 − q^k) up to q^{limit}, from Euler's
/// pentagonal number theorem: Σ_j (−1)^j q^{j(3j−1)/2} over all integers j.
fn euler_function_sparse(limit: usize) -> Vec<(usize, i64)> {
    let mut terms = vec![(0usize, 1i64)];
    let mut j = 1usize;
    loop {
        let sign = if j % 2 == 0 { 1 } else { -1 };
        let lower = j * (3 * j - 1) / 2;
        let upper = j * (3 * j + 1) / 2;
        if lower > limit {
            break;
        }
        terms.push((lower, sign));
        if upper <= limit {
            terms.push((upper, sign));
        }
        j += 1;
    }
    terms
}

/// Coefficients of the newform of the given level, with the sign ε = −1.
///
/// Each listed curve has analytic rank 0, so the functional equation has
/// sign +1, which in the convention f|w_N = ε·f means ε = −1.
pub fn eta_product_coeffs(level: u64, n_max: usize) -> Result<CoefficientSource> {
    let exponents = eta_exponents(level).ok_or_else(|| {
        Error::InvalidQuery(format!("no eta-quotient newform shipped for level {level}"))
    })?;
    if n_max == 0 {
        return Err(Error::InvalidQuery("n_max must be at least 1".into()));
    }
    // f = q · Π_δ Π_k (1 − q^{δk})^{r_δ}; the product is needed to degree n_max − 1.
    let degree = n_max - 1;
    let mut series = vec![0i64; degree + 1];
    series[0] = 1;
    for &(delta, power) in exponents {
        let factor: Vec<(usize, i64)> = euler_function_sparse(degree / delta as usize)
            .into_iter()
            .map(|(e, c)| (e * delta as usize, c))
            .collect();
        for _ in 0..power {
            let mut next = vec![0i64; degree + 1];
            for (i, &s) in series.iter().enumerate().filter(|(_, &s)| s != 0) {
                for &(e, c) in factor.iter().take_while(|&&(e, _)| i + e <= degree) {
                    next[i + e] += s * c;
                }
            }
            series = next;
        }
    }
    Ok(CoefficientSource::new(level, series, AtkinLehnerSign::Minus))
}

/// D√N, where the two exponential sums of the functional equation are
/// weighted identically.
pub fn afe_default_x(level: u64, chi: &QuadraticCharacter) -> f64 {
    chi.conductor() as f64 * (level as f64).sqrt()
}

/// Number of terms after which both exponential weights are below 10⁻¹⁵·n.
pub fn afe_terms_needed(level: u64, chi: &QuadraticCharacter, x: f64) -> usize {
    let d = chi.conductor() as f64;
    let slowest = (2.0 * PI / x).min(2.0 * PI * x / (d * d * level as f64));
    let mut n = 1usize;
    while (-slowest * n as f64).exp() >= 1e-15 * n as f64 {
        n += 1;
    }
    n
}

/// L(f⊗χ, 1) = Σ χ(n)a_n/n·e^{−2πn/x} − χ(−N)·ε Σ χ(n)a_n/n·e^{−2πnx/(D²N)}.
pub fn afe_central_value(src: &CoefficientSource, chi: &QuadraticCharacter, x: f64) -> Result<f64> {
    if gcd_u64(chi.conductor(), src.level) != 1 {
        return Err(Error::CoprimalityViolation {
            disc: chi.discriminant(),
            level: src.level,
        });
    }
    let epsilon = src.atkin_lehner_sign.value().ok_or_else(|| {
        Error::InvalidQuery("the Atkin-Lehner sign of the form is unknown".into())
    })?;
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::InvalidQuery(format!("x = {x} must be positive and finite")));
    }
    let needed = afe_terms_needed(src.level, chi, x);
    if src.len() < needed {
        return Err(Error::InsufficientCoefficients {
            needed,
            available: src.len(),
        });
    }
    let d = chi.conductor() as f64;
    let dual_rate = 2.0 * PI * x / (d * d * src.level as f64);
    let dual_sign = -(chi.eval(-(src.level as i64)) as f64) * epsilon as f64;
    let mut acc = CompensatedSum::new();
    for n in 1..=needed {
        let chi_n = chi.eval(n as i64);
        if chi_n == 0 {
            continue;
        }
        let base = (chi_n as i64 * src.get(n)) as f64 / n as f64;
        acc.add(base * (-2.0 * PI * n as f64 / x).exp());
        acc.add(dual_sign * base * (-dual_rate * n as f64).exp());
    }
    Ok(acc.value())
}

/// Finds ε by requiring the central value to be independent of x over
/// x ∈ {√N/2, √N, 2√N}. The rejected sign must miss by ten times the
/// tolerance.
pub fn estimate_atkin_lehner_sign(src: &CoefficientSource, tolerance: f64) -> Result<i8> {
    let chi = QuadraticCharacter::trivial();
    let root = (src.level as f64).sqrt();
    let spread = |sign: i8| -> Result<f64> {
        let trial = src.with_sign(AtkinLehnerSign::from_i8(sign));
        let values = [root / 2.0, root, 2.0 * root]
            .iter()
            .map(|&x| afe_central_value(&trial, &chi, x))
            .collect::<Result<Vec<f64>>>()?;
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        Ok(max - min)
    };
    let plus = spread(1)?;
    let minus = spread(-1)?;
    match (plus < tolerance, minus < tolerance) {
        (true, false) if minus >= 10.0 * tolerance => Ok(1),
        (false, true) if plus >= 10.0 * tolerance => Ok(-1),
        _ => Err(Error::Undecidable(format!(
            "x-spread {plus:e} for +1 and {minus:e} for -1 at tolerance {tolerance:e}"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::is_prime;
    use crate::character::make_character;

    /// Dense expansion of q·Π_{k≤n}(1 − q^k)²(1 − q^{11k})², factor by factor.
    fn level_11_by_hand(n_max: usize) -> Vec<i64> {
        let mut poly = vec![0i64; n_max];
        poly[0] = 1;
        for k in 1..n_max {
            for step in [k, k, 11 * k, 11 * k] {
                if step >= n_max {
                    continue;
                }
                for i in (step..n_max).rev() {
                    poly[i] -= poly[i - step];
                }
            }
        }
        poly
    }

    /// p minus the number of affine points on y² + a1·xy + a3·y = x³ + a2·x² + a4·x + a6.
    fn a_p_by_point_count(p: i64, [a1, a2, a3, a4, a6]: [i64; 5]) -> i64 {
        let mut affine = 0;
        for x in 0..p {
            for y in 0..p {
                let lhs = y * y + a1 * x * y + a3 * y;
                let rhs = x * x * x + a2 * x * x + a4 * x + a6;
                if (lhs - rhs).rem_euclid(p) == 0 {
                    affine += 1;
                }
            }
        }
        p - affine
    }

    #[test]
    fn level_11_examples() {
        assert_eq!(eta_product_coeffs(11, 5).unwrap().coefficients(), &[1, -2, -1, 2, 1]);
        assert_eq!(eta_product_coeffs(11, 300).unwrap().coefficients(), &level_11_by_hand(300)[..]);
        for level in ETA_LEVELS {
            assert_eq!(eta_product_coeffs(level, 1).unwrap().coefficients(), &[1]);
        }
        assert!(eta_product_coeffs(13, 10).is_err());
    }

    #[test]
    fn coefficients_match_point_counts() {
        let curves: [(u64, [i64; 5]); 7] = [
            (11, [0, -1, 1, -10, -20]),
            (14, [1, 0, 1, 4, -6]),
            (15, [1, 1, 1, -10, -10]),
            (20, [0, 1, 0, 4, 4]),
            (27, [0, 0, 1, 0, -7]),
            (32, [0, 0, 0, 4, 0]),
            (36, [0, 0, 0, 0, 1]),
        ];
        for (level, curve) in curves {
            let src = eta_product_coeffs(level, 60).unwrap();
            for p in (2..=50).filter(|&p| is_prime(p as u64)) {
                assert_eq!(src.get(p as usize), a_p_by_point_count(p, curve), "level {level}, p = {p}");
            }
        }
    }

    #[test]
    fn hecke_structure_of_shipped_forms() {
        for level in ETA_LEVELS {
            let src = eta_product_coeffs(level, 400).unwrap();
            assert!(src.is_hecke_multiplicative(), "level {level}");
            assert!(src.satisfies_deligne_bound(), "level {level}");
            // a_{p^{k+1}} = a_p a_{p^k} − p a_{p^{k−1}} at good primes.
            for p in [2usize, 3, 5, 7] {
                if level % p as u64 == 0 {
                    assert_eq!(src.get(p * p), src.get(p) * src.get(p));
                } else {
                    assert_eq!(src.get(p * p), src.get(p) * src.get(p) - p as i64);
                }
            }
        }
    }

    #[test]
    fn csv_dump() {
        let csv = eta_product_coeffs(11, 3).unwrap().to_csv();
        assert_eq!(csv, "n,a_n\n1,1\n2,-2\n3,-1\n");
    }

    #[test]
    fn central_value_independent_of_x() {
        for level in ETA_LEVELS {
            for d in [1, 5, 8, 13] {
                if gcd(d, level as i64) != 1 {
                    continue;
                }
                let chi = make_character(d).unwrap();
                let root = afe_default_x(level, &chi);
                let src = eta_product_coeffs(level, afe_terms_needed(level, &chi, 2.0 * root)).unwrap();
                let v: Vec<f64> = [root / 2.0, root, 2.0 * root]
                    .iter()
                    .map(|&x| afe_central_value(&src, &chi, x).unwrap())
                    .collect();
                for w in &v {
                    assert!((w - v[1]).abs() < 1e-8, "level {level} D {d}: {v:?}");
                }
            }
        }
    }

    #[test]
    fn forced_vanishing_when_sign_matches_character() {
        let mut cases = Vec::new();
        for level in ETA_LEVELS {
            for d in [1, 5, 8, 13] {
                let chi = make_character(d).unwrap();
                // Every shipped form has ε = −1, so the lemma applies exactly
                // when χ(−N) = −1.
                if gcd(d, level as i64) != 1 || chi.eval(-(level as i64)) != -1 {
                    continue;
                }
                let root = afe_default_x(level, &chi);
                let src = eta_product_coeffs(level, afe_terms_needed(level, &chi, 2.0 * root)).unwrap();
                for x in [root / 2.0, root, 2.0 * root] {
                    let v = afe_central_value(&src, &chi, x).unwrap();
                    assert!(v.abs() < 1e-10, "level {level} D {d} x {x}: {v:e}");
                }
                cases.push((level, d));
            }
        }
        assert!(cases.len() >= 5, "{cases:?}");
    }

    /// Σ a_n/n·e^{−n/T}: the Mellin shift picks up residues at the trivial
    /// zeros of L(f, s) only, so the error decays faster than any power of 1/T.
    fn smoothed_sum(src: &CoefficientSource, t: f64) -> f64 {
        (1..=src.len())
            .map(|n| src.get(n) as f64 / n as f64 * (-(n as f64) / t).exp())
            .sum()
    }

    #[test]
    fn level_11_value_matches_smoothed_dirichlet_series() {
        let src = eta_product_coeffs(11, 48_000).unwrap();
        let s1 = smoothed_sum(&src, 300.0);
        let s2 = smoothed_sum(&src, 600.0);
        let s3 = smoothed_sum(&src, 1200.0);
        assert!((s3 - s2).abs() < (s2 - s1).abs() || (s3 - s2).abs() < 1e-9);
        let afe = afe_central_value(&src, &QuadraticCharacter::trivial(), 11f64.sqrt()).unwrap();
        assert!(afe > 0.0);
        assert!((afe - s3).abs() < 1e-6, "afe {afe} smoothed {s3}");
    }

    #[test]
    fn preconditions() {
        let src = eta_product_coeffs(15, 500).unwrap();
        let chi5 = make_character(5).unwrap();
        assert!(matches!(
            afe_central_value(&src, &chi5, 3.0),
            Err(Error::CoprimalityViolation { disc: 5, level: 15 })
        ));
        let short = eta_product_coeffs(11, 10).unwrap();
        assert!(matches!(
            afe_central_value(&short, &QuadraticCharacter::trivial(), 3.3),
            Err(Error::InsufficientCoefficients { available: 10, .. })
        ));
        let unknown = src.with_sign(AtkinLehnerSign::Unknown);
        assert!(afe_central_value(&unknown, &QuadraticCharacter::trivial(), 3.0).is_err());
    }

    #[test]
    fn sign_estimation() {
        for level in ETA_LEVELS {
            let src = eta_product_coeffs(level, 400).unwrap().with_sign(AtkinLehnerSign::Unknown);
            for tolerance in [1e-6, 1e-8, 1e-10] {
                assert_eq!(estimate_atkin_lehner_sign(&src, tolerance), Ok(-1), "level {level}");
            }
        }
        let zero = CoefficientSource::new(11, vec![0; 400], AtkinLehnerSign::Unknown);
        assert!(matches!(estimate_atkin_lehner_sign(&zero, 1e-8), Err(Error::Undecidable(_))));
    }
}
