//! Right-hand sides of the Petersson trace formula restricted to prescribed
//! Atkin–Lehner eigenvalues, with rigorous truncation bounds.
//!
//! Every series here has the shape
//!
//! ```text
//!     prefactor · Σ_{c valid} S(m, r_c; c)/c · J₁(κ/c)
//! ```
//!
//! where "valid" means `step | c` and `gcd(c, avoid) = 1`. The Weil bound and
//! |J₁(z)| ≤ z/2 bound each term by `prefactor·κ/2 · √g·τ(c)·c^{-3/2}`, and the
//! tail of that majorant is the exact Euler-product total minus the partial
//! sum actually accumulated.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::arith::{divisor_count_sieve, factorize, gcd, gcd_u64, is_prime, mod_inverse, mul_mod};
use crate::bessel::j1;
use crate::error::{Error, Result};
use crate::kloosterman::kloosterman_fast;
use crate::sum::CompensatedSum;

/// ζ(3/2).
const ZETA_THREE_HALVES: f64 = 2.612_375_348_685_488_3;

/// Relative allowance for floating-point error in accumulated terms, charged
/// against the Weil majorant of the partial sum.
const ROUNDING_ALLOWANCE: f64 = 1e-13;

/// A real number together with a rigorous bound on what truncation left out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertifiedValue {
    pub value: f64,
    pub tail_bound: f64,
    pub terms_used: u64,
}

impl CertifiedValue {
    pub fn exact(value: f64) -> Self {
        CertifiedValue {
            value,
            tail_bound: 0.0,
            terms_used: 0,
        }
    }

    pub fn scaled(self, factor: f64) -> Self {
        CertifiedValue {
            value: factor * self.value,
            tail_bound: factor.abs() * self.tail_bound,
            terms_used: self.terms_used,
        }
    }

    /// Sum of two certified values; bounds add.
    pub fn plus(self, other: Self) -> Self {
        CertifiedValue {
            value: self.value + other.value,
            tail_bound: self.tail_bound + other.tail_bound,
            terms_used: self.terms_used + other.terms_used,
        }
    }

    pub fn minus(self, other: Self) -> Self {
        self.plus(other.scaled(-1.0))
    }

    /// Whether `[value − tail_bound, value + tail_bound]` contains `x`.
    pub fn encloses(&self, x: f64) -> bool {
        (self.value - x).abs() <= self.tail_bound
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationBudget {
    pub c_max: u64,
    pub target_tail: f64,
}

impl TruncationBudget {
    pub fn new(c_max: u64, target_tail: f64) -> Self {
        assert!(target_tail > 0.0, "target tail must be positive");
        TruncationBudget { c_max, target_tail }
    }

    /// Truncate at `c_max` and report whatever tail results.
    pub fn unbounded(c_max: u64) -> Self {
        Self::new(c_max, f64::INFINITY)
    }

    pub(crate) fn check(&self, v: CertifiedValue) -> Result<CertifiedValue> {
        if self.c_max == 0 || !(v.tail_bound <= self.target_tail) {
            Err(Error::BudgetExceeded {
                tail: v.tail_bound,
                target: self.target_tail,
                c_max: self.c_max,
            })
        } else {
            Ok(v)
        }
    }
}

/// Q ∘ Q′ = QQ′/gcd(Q, Q′)², the product of Atkin–Lehner involutions.
pub fn atkin_lehner_product(q1: u64, q2: u64) -> u64 {
    let g = gcd_u64(q1, q2);
    (q1 / g) * (q2 / g)
}

/// A subgroup H of Atkin–Lehner involutions at level N with a character
/// E: H → {±1}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EigenvalueSpec {
    level: u64,
    signs: Vec<(u64, i8)>,
}

impl EigenvalueSpec {
    pub fn new(level: u64, mut signs: Vec<(u64, i8)>) -> Result<Self> {
        let invalid = |msg: String| Err(Error::InvalidSpec(msg));
        if level == 0 {
            return invalid("level must be positive".into());
        }
        signs.sort_unstable();
        signs.dedup();
        for w in signs.windows(2) {
            if w[0].0 == w[1].0 {
                return invalid(format!("two signs given for Q = {}", w[0].0));
            }
        }
        let sign_of = |q: u64| signs.iter().find(|&&(h, _)| h == q).map(|&(_, e)| e);
        if sign_of(1) != Some(1) {
            return invalid("H must contain 1 with E(1) = +1".into());
        }
        for &(q, e) in &signs {
            if level % q != 0 || gcd_u64(q, level / q) != 1 {
                return invalid(format!("{q} is not an exact divisor of {level}"));
            }
            if e != 1 && e != -1 {
                return invalid(format!("E({q}) = {e} is not ±1"));
            }
        }
        for &(q1, e1) in &signs {
            for &(q2, e2) in &signs {
                match sign_of(atkin_lehner_product(q1, q2)) {
                    None => return invalid(format!("H is not closed: {q1} ∘ {q2} missing")),
                    Some(e) if e != e1 * e2 => {
                        return invalid(format!("E is not multiplicative on {q1}, {q2}"))
                    }
                    _ => {}
                }
            }
        }
        Ok(EigenvalueSpec { level, signs })
    }

    /// H = {1}: the classical trace formula.
    pub fn classical(level: u64) -> Self {
        EigenvalueSpec {
            level,
            signs: vec![(1, 1)],
        }
    }

    /// H = {1, Q} with E(Q) = ε.
    pub fn single(level: u64, q: u64, epsilon: i8) -> Result<Self> {
        Self::new(level, vec![(1, 1), (q, epsilon)])
    }

    pub fn level(&self) -> u64 {
        self.level
    }

    /// Pairs (Q, E(Q)) in increasing Q.
    pub fn signs(&self) -> &[(u64, i8)] {
        &self.signs
    }
}

/// Second argument of the Kloosterman sum: a fixed integer, or n·Q̄ with the
/// inverse taken modulo each c.
#[derive(Debug, Clone, Copy)]
pub(crate) enum SecondArg {
    Plain(i64),
    Twisted { n: i64, q: u64 },
}

/// prefactor · Σ_{step | c, (c, avoid) = 1} S(m, r_c; c)/c · J₁(κ/c).
#[derive(Debug, Clone, Copy)]
pub(crate) struct KloostermanBesselSeries {
    pub m: i64,
    pub second: SecondArg,
    pub step: u64,
    pub avoid: u64,
    pub kappa: f64,
    pub prefactor: f64,
}

impl KloostermanBesselSeries {
    /// gcd(m, r_c) is the same for every valid c up to the factor c, so the
    /// Weil gcd is bounded by gcd(g0, c).
    fn g0(&self) -> u64 {
        match self.second {
            SecondArg::Plain(b) => gcd(self.m, b),
            SecondArg::Twisted { n, .. } => gcd(self.m, n),
        }
    }

    fn is_valid(&self, c: u64) -> bool {
        c % self.step == 0 && gcd_u64(c, self.avoid) == 1
    }

    pub fn moduli(&self, c_max: u64) -> Vec<u64> {
        if gcd_u64(self.step, self.avoid) != 1 {
            return Vec::new();
        }
        (1..=c_max / self.step)
            .map(|k| k * self.step)
            .filter(|&c| gcd_u64(c, self.avoid) == 1)
            .collect()
    }

    pub fn term(&self, c: u64) -> f64 {
        debug_assert!(self.is_valid(c));
        let r = match self.second {
            SecondArg::Plain(b) => b,
            SecondArg::Twisted { n, q } => {
                let q_inv = mod_inverse(q as i64, c).expect("Q is a unit mod c");
                mul_mod(n.rem_euclid(c as i64) as u64, q_inv, c) as i64
            }
        };
        kloosterman_fast(self.m, r, c) / c as f64 * j1(self.kappa / c as f64)
    }

    /// Sum over valid c ≤ c_max; terms are computed in parallel and reduced
    /// sequentially in increasing c so the result does not depend on the
    /// number of worker threads.
    pub fn evaluate(&self, c_max: u64) -> CertifiedValue {
        let moduli = self.moduli(c_max);
        let terms: Vec<f64> = moduli.par_iter().map(|&c| self.term(c)).collect();
        let sum: CompensatedSum = terms.into_iter().collect();
        let majorant = WeilMajorant::new(self.g0(), self.step, self.avoid);
        let scale = self.prefactor.abs() * self.kappa / 2.0;
        let partial = majorant.partial(c_max);
        CertifiedValue {
            value: self.prefactor * sum.value(),
            tail_bound: scale * (majorant.tail_after(partial) + ROUNDING_ALLOWANCE * partial),
            terms_used: moduli.len() as u64,
        }
    }
}

/// Σ √gcd(g0, c)·τ(c)·c^{-3/2} over c with `step | c` and `gcd(c, avoid) = 1`.
///
/// The summand is multiplicative in c, so the full sum is ζ(3/2)² with the
/// Euler factors at primes dividing g0·step·avoid replaced.
#[derive(Debug, Clone, Copy)]
pub(crate) struct WeilMajorant {
    g0: u64,
    step: u64,
    avoid: u64,
    total: f64,
}

impl WeilMajorant {
    pub fn new(g0: u64, step: u64, avoid: u64) -> Self {
        let total = if gcd_u64(step, avoid) != 1 {
            0.0
        } else {
            euler_total(g0, step, avoid)
        };
        WeilMajorant {
            g0,
            step,
            avoid,
            total,
        }
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn weight(&self, c: u64, tau: u32) -> f64 {
        (gcd_u64(self.g0, c) as f64).sqrt() * tau as f64 / (c as f64).powf(1.5)
    }

    /// The majorant summed over valid c ≤ c_max, in increasing c.
    pub fn partial(&self, c_max: u64) -> f64 {
        if self.total == 0.0 || c_max < self.step {
            return 0.0;
        }
        let tau = divisor_count_sieve(c_max as usize);
        let mut acc = CompensatedSum::new();
        let mut c = self.step;
        while c <= c_max {
            if gcd_u64(c, self.avoid) == 1 {
                acc.add(self.weight(c, tau[c as usize]));
            }
            c += self.step;
        }
        acc.value()
    }

    /// Upper bound for the majorant summed over valid c beyond the range that
    /// produced `partial`. The slack absorbs rounding in both sums.
    pub fn tail_after(&self, partial: f64) -> f64 {
        (self.total - partial).max(0.0) + 1e-12 * self.total
    }
}

fn valuation(mut n: u64, p: u64) -> u32 {
    let mut v = 0;
    while n != 0 && n % p == 0 {
        n /= p;
        v += 1;
    }
    v
}

fn euler_total(g0: u64, step: u64, avoid: u64) -> f64 {
    let mut special: Vec<u64> = Vec::new();
    for x in [g0, step, avoid] {
        if x > 1 {
            special.extend(factorize(x).primes());
        }
    }
    special.sort_unstable();
    special.dedup();
    let mut total = ZETA_THREE_HALVES * ZETA_THREE_HALVES;
    for p in special {
        let pf = p as f64;
        let generic = (1.0 - pf.powf(-1.5)).powi(-2);
        let local = if avoid % p == 0 {
            1.0
        } else {
            let (a, v) = (valuation(step, p), valuation(g0, p));
            let mut sum = 0.0;
            let mut e = a;
            loop {
                let term = pf.powf(e.min(v) as f64 / 2.0) * (e + 1) as f64 * pf.powf(-1.5 * e as f64);
                sum += term;
                if e > v && term < 1e-20 * sum {
                    // Later terms shrink by at most (e+2)/(e+1)·p^{-3/2} ≤ 0.71.
                    sum += term * 0.71 / 0.29;
                    break;
                }
                e += 1;
            }
            sum
        };
        total *= local / generic;
    }
    total * (1.0 + 1e-14)
}

fn kronecker_delta(a: i64, b: i64) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}

fn require_positive(m: i64, n: i64) -> Result<()> {
    if m < 1 || n < 1 {
        return Err(Error::InvalidQuery(format!("m = {m}, n = {n} must be positive")));
    }
    Ok(())
}

fn require_exact_divisor(level: u64, q: u64) -> Result<()> {
    if level == 0 || q == 0 || level % q != 0 || gcd_u64(q, level / q) != 1 {
        return Err(Error::InvalidQuery(format!(
            "Q = {q} is not an exact divisor of N = {level}"
        )));
    }
    Ok(())
}

/// The S_Q series of the restricted trace formula, uncertified.
fn s_q_series(m: i64, n: i64, level: u64, q: u64) -> KloostermanBesselSeries {
    let sqrt_q = (q as f64).sqrt();
    KloostermanBesselSeries {
        m,
        second: SecondArg::Twisted { n, q },
        step: level / q,
        avoid: q,
        kappa: 4.0 * PI * ((m * n) as f64).sqrt() / sqrt_q,
        prefactor: 2.0 * PI / sqrt_q,
    }
}

/// S_Q = 2π Σ_{(N/Q)|c, (c,Q)=1} S(m, nQ̄; c)/(c√Q) · J₁(4π√(mn)/(c√Q)).
pub fn s_q_term(m: i64, n: i64, level: u64, q: u64, budget: TruncationBudget) -> Result<CertifiedValue> {
    require_positive(m, n)?;
    require_exact_divisor(level, q)?;
    budget.check(s_q_series(m, n, level, q).evaluate(budget.c_max))
}

/// δ_mn − Σ_{Q ∈ H} E(Q)·S_Q, which is (|H|/4π√(mn))·(a_m, a_n)_N^E.
pub fn restricted_trace_rhs(
    m: i64,
    n: i64,
    spec: &EigenvalueSpec,
    budget: TruncationBudget,
) -> Result<CertifiedValue> {
    require_positive(m, n)?;
    let mut total = CertifiedValue::exact(kronecker_delta(m, n));
    for &(q, e) in spec.signs() {
        let s_q = s_q_series(m, n, spec.level(), q).evaluate(budget.c_max);
        total = total.minus(s_q.scaled(e as f64));
    }
    budget.check(total)
}

/// δ_mn − 2π Σ_{N|c} S(m,n;c)/c·J₁(4π√(mn)/c) − ε·S_Q: the trace formula on
/// the ε-eigenspace of a single involution w_Q.
pub fn single_sign_trace_rhs(
    m: i64,
    n: i64,
    level: u64,
    q: u64,
    epsilon: i8,
    budget: TruncationBudget,
) -> Result<CertifiedValue> {
    if q <= 1 {
        return Err(Error::InvalidQuery("single-sign formula needs Q > 1".into()));
    }
    require_exact_divisor(level, q)?;
    let spec = EigenvalueSpec::single(level, q, epsilon)?;
    restricted_trace_rhs(m, n, &spec, budget)
}

/// δ_{m,nq} − 2π Σ_{q²|c} S(m, nq; c)/c · J₁(4π√(mnq)/c), which vanishes
/// because (a_m, a_{nq}) = 0 at level q² for these q.
pub fn identity_delta_series(m: i64, n: i64, q: u64, budget: TruncationBudget) -> Result<CertifiedValue> {
    require_positive(m, n)?;
    if ![2, 3, 5, 7].contains(&q) {
        return Err(Error::InvalidQuery(format!(
            "the level-q² identity is only checked for q in {{2, 3, 5, 7}}, got {q}"
        )));
    }
    let nq = n * q as i64;
    let series = KloostermanBesselSeries {
        m,
        second: SecondArg::Plain(nq),
        step: q * q,
        avoid: 1,
        kappa: 4.0 * PI * ((m * nq) as f64).sqrt(),
        prefactor: 2.0 * PI,
    };
    let total = CertifiedValue::exact(kronecker_delta(m, nq)).minus(series.evaluate(budget.c_max));
    budget.check(total)
}

/// The prime-level formula in the form
///
/// δ_mn − ε√q·δ_{m,nq} − 2π Σ_{q|c} S(m,n;c)/c·J₁(4π√(mn)/c)
///     + 2πε√q Σ_{q|c} S(m,nq;c)/c·J₁(4π√(mnq)/c).
pub fn ik_form_rhs(m: i64, n: i64, q: u64, epsilon: i8, budget: TruncationBudget) -> Result<CertifiedValue> {
    require_positive(m, n)?;
    if !is_prime(q) {
        return Err(Error::InvalidQuery(format!("{q} is not prime")));
    }
    if epsilon != 1 && epsilon != -1 {
        return Err(Error::InvalidQuery(format!("epsilon = {epsilon} is not ±1")));
    }
    let eps = epsilon as f64;
    let sqrt_q = (q as f64).sqrt();
    let nq = n * q as i64;
    let classical = KloostermanBesselSeries {
        m,
        second: SecondArg::Plain(n),
        step: q,
        avoid: 1,
        kappa: 4.0 * PI * ((m * n) as f64).sqrt(),
        prefactor: 2.0 * PI,
    };
    let shifted = KloostermanBesselSeries {
        m,
        second: SecondArg::Plain(nq),
        step: q,
        avoid: 1,
        kappa: 4.0 * PI * ((m * nq) as f64).sqrt(),
        prefactor: 2.0 * PI * eps * sqrt_q,
    };
    let deltas = kronecker_delta(m, n) - eps * sqrt_q * kronecker_delta(m, nq);
    let total = CertifiedValue::exact(deltas)
        .minus(classical.evaluate(budget.c_max))
        .plus(shifted.evaluate(budget.c_max));
    budget.check(total)
}
