//! The first moment Σ a₁(f)·L(f⊗χ, 1) over newforms of level dp² that are
//! invariant under w_{p²}, assembled from the double series A_{N,Q}, B_{N,Q}.
//!
//! A_{N,Q}(x) = 2π Σ_n χ(n) n^{-1/2} e^{−2πn/x}
//!                  Σ_{(N/Q)|c, (c,Q)=1} S(1, nQ̄; c)/(c√Q) · J₁(4π√n/(c√Q))
//!
//! and B_{N,Q}(x) is the same series with e^{−2πnx/(D²N)}.
//!
//! All series of a computation share one sweep over the moduli c ≤ c_max.
//! Kloosterman sums are assembled from per-prime-power tables via the twisted
//! multiplicativity S(1, r; c) = Π_i S(1, (c/q_i)^{-2}·r; q_i), so the only
//! Fourier transforms are those of prime-power length.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rayon::prelude::*;

use crate::arith::{gcd_u64, is_prime, mod_inverse, mul_mod};
use crate::bessel::j1;
use crate::character::{make_character, QuadraticCharacter};
use crate::error::{Error, Result};
use crate::kloosterman::{crt_twists, kloosterman_batch};
use crate::sum::CompensatedSum;
use crate::trace::{CertifiedValue, TruncationBudget, WeilMajorant};

/// Levels d admitted by the moment formula.
pub const ALLOWED_D: [u64; 5] = [2, 3, 5, 7, 13];

/// The n-series is cut once its geometric tail bound falls below this (or
/// below half the requested target, whichever is smaller).
const N_TAIL_FLOOR: f64 = 1e-12;

const ROUNDING_ALLOWANCE: f64 = 1e-13;

/// How the splitting parameter x of the functional equation is chosen for a
/// level N.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum XChoice {
    /// x = D²N·log(D²N).
    Auto,
    /// x = D√N, where the A- and B-series carry the same exponential weight.
    SelfDual,
    Fixed(f64),
}

impl XChoice {
    pub fn resolve(&self, level: u64, chi: &QuadraticCharacter) -> f64 {
        let conductor = chi.conductor() as f64;
        let d2n = conductor * conductor * level as f64;
        match *self {
            XChoice::Auto => d2n * d2n.ln(),
            XChoice::SelfDual => d2n.sqrt(),
            XChoice::Fixed(x) => x,
        }
    }

    pub fn label(&self) -> String {
        match self {
            XChoice::Auto => "auto".into(),
            XChoice::SelfDual => "selfdual".into(),
            XChoice::Fixed(x) => format!("{x}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentQuery {
    pub d: u64,
    pub p: u64,
    pub disc: i64,
    pub x: XChoice,
}

impl MomentQuery {
    pub fn new(d: u64, p: u64, disc: i64, x: XChoice) -> Self {
        MomentQuery { d, p, disc, x }
    }

    /// Checks every precondition and returns the character.
    pub fn validate(&self) -> Result<QuadraticCharacter> {
        let invalid = |msg: String| Err(Error::InvalidQuery(msg));
        if !ALLOWED_D.contains(&self.d) {
            return invalid(format!("d = {} is not one of {ALLOWED_D:?}", self.d));
        }
        if !is_prime(self.p) {
            return invalid(format!("p = {} is not prime", self.p));
        }
        if self.disc <= 0 {
            return invalid(format!("D = {} must be positive (χ even)", self.disc));
        }
        let chi = make_character(self.disc)?;
        let disc = self.disc as u64;
        if (self.d * disc) % self.p == 0 {
            return invalid(format!("p = {} divides dD = {}", self.p, self.d * disc));
        }
        if gcd_u64(disc, self.d) != 1 {
            return invalid(format!("D = {disc} is not prime to d = {}", self.d));
        }
        if let XChoice::Fixed(x) = self.x {
            if !(x > 0.0 && x.is_finite()) {
                return invalid(format!("x = {x} must be positive and finite"));
            }
        }
        Ok(chi)
    }
}

/// Which of the two exponential weights a double series carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SeriesKind {
    A,
    B,
}

/// One A_{N,Q}(x) or B_{N,Q}(x).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleSeries {
    pub kind: SeriesKind,
    pub level: u64,
    pub q: u64,
    pub x: f64,
}

impl DoubleSeries {
    /// Rate α of the weight e^{−αn}.
    fn decay(&self, chi: &QuadraticCharacter) -> f64 {
        match self.kind {
            SeriesKind::A => 2.0 * PI / self.x,
            SeriesKind::B => {
                let conductor = chi.conductor() as f64;
                2.0 * PI * self.x / (conductor * conductor * self.level as f64)
            }
        }
    }

    fn step(&self) -> u64 {
        self.level / self.q
    }

    #[cfg(test)]
    fn accepts(&self, c: u64) -> bool {
        c % self.step() == 0 && gcd_u64(c, self.q) == 1
    }
}

fn check_series(series: &DoubleSeries, chi: &QuadraticCharacter) -> Result<()> {
    let (n, q) = (series.level, series.q);
    if n == 0 || q == 0 || n % q != 0 || gcd_u64(q, n / q) != 1 {
        return Err(Error::InvalidQuery(format!("Q = {q} is not an exact divisor of N = {n}")));
    }
    if gcd_u64(chi.conductor(), n) != 1 {
        return Err(Error::CoprimalityViolation {
            disc: chi.discriminant(),
            level: n,
        });
    }
    if !(series.x > 0.0 && series.x.is_finite()) {
        return Err(Error::InvalidQuery(format!("x = {} must be positive and finite", series.x)));
    }
    Ok(())
}

/// A series with its n-range fixed and weights tabulated.
struct Prepared {
    q: u64,
    step: u64,
    /// χ(n)·n^{-1/2}·e^{−αn} for n = 1..=n_max (index n − 1).
    weights: Vec<f64>,
    /// Σ_{n ≤ n_max} e^{−αn}.
    weight_mass: f64,
    n_tail: f64,
    majorant: WeilMajorant,
}

impl Prepared {
    fn new(series: &DoubleSeries, chi: &QuadraticCharacter, target: f64) -> Self {
        let alpha = series.decay(chi);
        let majorant = WeilMajorant::new(1, series.step(), series.q);
        // |term(n, c)| ≤ 2π e^{−αn}·τ(c)c^{-3/2}/Q after the 2π prefactor of
        // the series, so everything past n_max is at most
        // (4π²/Q)·W·r^{n_max+1}/(1 − r) with r = e^{−α}.
        let scale = 4.0 * PI * PI / series.q as f64 * majorant.total();
        let ratio = (-alpha).exp();
        let goal = (target / 2.0).min(N_TAIL_FLOOR);
        let tail_from = |n_max: u64| scale * (-alpha * (n_max + 1) as f64).exp() / (1.0 - ratio);
        let mut n_max = 0u64;
        if ratio > 0.0 {
            if ratio >= 1.0 {
                n_max = u64::MAX;
            } else {
                // Solve tail_from(n) ≤ goal, then nudge for rounding.
                let guess = ((scale / ((1.0 - ratio) * goal)).ln() / alpha - 1.0).ceil().max(0.0);
                n_max = guess as u64;
                while n_max > 0 && tail_from(n_max - 1) <= goal {
                    n_max -= 1;
                }
                while tail_from(n_max) > goal {
                    n_max += 1;
                }
            }
        }
        assert!(n_max < 100_000_000, "x too large for the n-series (n_max = {n_max})");
        let weights: Vec<f64> = (1..=n_max)
            .map(|n| chi.eval(n as i64) as f64 * (-alpha * n as f64).exp() / (n as f64).sqrt())
            .collect();
        let weight_mass = (1..=n_max).map(|n| (-alpha * n as f64).exp()).collect::<CompensatedSum>().value();
        Prepared {
            q: series.q,
            step: series.step(),
            weights,
            weight_mass,
            n_tail: if ratio > 0.0 { tail_from(n_max) } else { 0.0 },
            majorant,
        }
    }

    fn accepts(&self, c: u64) -> bool {
        c % self.step == 0 && gcd_u64(c, self.q) == 1
    }

    /// Σ_n weight_n · S(1, nQ̄; c)/(c√Q) · J₁(4π√n/(c√Q)).
    fn inner(&self, c: u64, factors: &[(u64, u64, &[f64])]) -> f64 {
        // Position of nQ̄·(c/q_i)^{-2} modulo each q_i advances by a fixed
        // stride as n increases.
        let strides: Vec<(u64, u64)> = factors
            .iter()
            .map(|&(q, twist, _)| {
                let q_inv = if q == 1 { 0 } else { mod_inverse(self.q as i64, q).expect("unit") };
                (q, mul_mod(twist, q_inv, q))
            })
            .collect();
        let mut index: Vec<u64> = vec![0; factors.len()];
        let scale = (c as f64) * (self.q as f64).sqrt();
        let kappa = 4.0 * PI / scale;
        let mut acc = CompensatedSum::new();
        for (i, &w) in self.weights.iter().enumerate() {
            for (slot, &(q, stride)) in index.iter_mut().zip(&strides) {
                *slot += stride;
                if *slot >= q {
                    *slot -= q;
                }
            }
            if w == 0.0 {
                continue;
            }
            let mut s = 1.0;
            for (slot, &(_, _, table)) in index.iter().zip(factors) {
                s *= table[*slot as usize];
            }
            let n = (i + 1) as f64;
            acc.add(w * s * j1(kappa * n.sqrt()));
        }
        acc.value() / scale
    }
}

/// Smallest prime factor for every integer up to `limit`.
fn smallest_prime_factors(limit: u64) -> Vec<u32> {
    let mut spf = vec![0u32; limit as usize + 1];
    for i in 2..=limit as usize {
        if spf[i] == 0 {
            let mut j = i;
            while j <= limit as usize {
                if spf[j] == 0 {
                    spf[j] = i as u32;
                }
                j += i;
            }
        }
    }
    spf
}

fn prime_power_parts(mut c: u64, spf: &[u32]) -> Vec<u64> {
    let mut parts = Vec::new();
    while c > 1 {
        let p = spf[c as usize] as u64;
        let mut q = 1;
        while c % p == 0 {
            c /= p;
            q *= p;
        }
        parts.push(q);
    }
    parts
}

/// Evaluates every series at once, sweeping c ≤ c_max a single time.
///
/// The result does not depend on the number of worker threads: each per-c
/// contribution is computed by one thread, and contributions are reduced in
/// increasing c afterwards.
pub fn evaluate_series(
    series: &[DoubleSeries],
    chi: &QuadraticCharacter,
    budget: TruncationBudget,
) -> Result<Vec<CertifiedValue>> {
    for s in series {
        check_series(s, chi)?;
    }
    let prepared: Vec<Prepared> = series
        .iter()
        .map(|s| Prepared::new(s, chi, budget.target_tail))
        .collect();
    let c_max = budget.c_max;
    let width = prepared.len();
    let contributions = sweep_moduli(&prepared, c_max);

    let results = prepared
        .iter()
        .enumerate()
        .map(|(j, prep)| {
            let mut acc = CompensatedSum::new();
            let mut terms = 0u64;
            for c in 1..=c_max {
                if prep.accepts(c) {
                    acc.add(contributions[(c as usize - 1) * width + j]);
                    terms += 1;
                }
            }
            let partial = prep.majorant.partial(c_max);
            let c_scale = 4.0 * PI * PI / prep.q as f64 * prep.weight_mass;
            let c_tail = c_scale * (prep.majorant.tail_after(partial) + ROUNDING_ALLOWANCE * partial);
            CertifiedValue {
                value: 2.0 * PI * acc.value(),
                tail_bound: c_tail + prep.n_tail,
                terms_used: terms,
            }
        })
        .collect();
    Ok(results)
}

/// Contributions of every modulus to every series, laid out c-major.
fn sweep_moduli(prepared: &[Prepared], c_max: u64) -> Vec<f64> {
    let width = prepared.len();
    let mut out = vec![0.0; c_max as usize * width];
    if c_max == 0 || width == 0 {
        return out;
    }
    let spf = smallest_prime_factors(c_max);
    let needed: Vec<u64> = (1..=c_max)
        .filter(|&c| prepared.iter().any(|p| p.accepts(c)))
        .collect();

    // Prime powers up to √c_max get cached tables. Any c whose largest
    // prime-power part exceeds √c_max has a cofactor below √c_max, so those
    // c are grouped by that part and its table is built once per group.
    let root = (c_max as f64).sqrt() as u64;
    let mut small: Vec<u64> = (2..=root)
        .filter(|&q| {
            let parts = prime_power_parts(q, &spf);
            parts.len() == 1
        })
        .collect();
    small.sort_unstable();
    let cache: BTreeMap<u64, Vec<f64>> = small
        .par_iter()
        .map(|&q| (q, kloosterman_batch(1, q).values))
        .collect();

    let mut smooth = Vec::new();
    let mut groups: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
    for &c in &needed {
        let largest = prime_power_parts(c, &spf).into_iter().max().unwrap_or(1);
        if largest > root {
            groups.entry(largest).or_default().push(c);
        } else {
            smooth.push(c);
        }
    }

    let evaluate = |c: u64, big: Option<(u64, &[f64])>| -> Vec<f64> {
        let twists = if c == 1 { Vec::new() } else { crt_twists(c) };
        let factors: Vec<(u64, u64, &[f64])> = twists
            .iter()
            .map(|&(q, twist)| {
                let table: &[f64] = match big {
                    Some((b, t)) if b == q => t,
                    _ => &cache[&q],
                };
                (q, twist, table)
            })
            .collect();
        prepared
            .iter()
            .map(|p| if p.accepts(c) { p.inner(c, &factors) } else { 0.0 })
            .collect()
    };

    let mut rows: Vec<(u64, Vec<f64>)> = smooth.par_iter().map(|&c| (c, evaluate(c, None))).collect();
    let grouped: Vec<Vec<(u64, Vec<f64>)>> = groups
        .into_par_iter()
        .map(|(q, moduli)| {
            let table = kloosterman_batch(1, q).values;
            moduli
                .into_iter()
                .map(|c| (c, evaluate(c, Some((q, &table)))))
                .collect()
        })
        .collect();
    rows.extend(grouped.into_iter().flatten());
    for (c, row) in rows {
        let start = (c as usize - 1) * width;
        out[start..start + width].copy_from_slice(&row);
    }
    out
}

pub fn a_sum(
    level: u64,
    q: u64,
    x: f64,
    chi: &QuadraticCharacter,
    budget: TruncationBudget,
) -> Result<CertifiedValue> {
    let s = DoubleSeries { kind: SeriesKind::A, level, q, x };
    budget.check(evaluate_series(&[s], chi, budget)?[0])
}

pub fn b_sum(
    level: u64,
    q: u64,
    x: f64,
    chi: &QuadraticCharacter,
    budget: TruncationBudget,
) -> Result<CertifiedValue> {
    let s = DoubleSeries { kind: SeriesKind::B, level, q, x };
    budget.check(evaluate_series(&[s], chi, budget)?[0])
}

/// The eight series a query needs, in a fixed order: for N = dp² then
/// N = dp, the A-series at Q = 1 and Q = p^k, then the B-series at Q = N
/// and Q = d.
fn series_for(query: &MomentQuery, chi: &QuadraticCharacter) -> [DoubleSeries; 8] {
    let (d, p) = (query.d, query.p);
    let mut out = [DoubleSeries { kind: SeriesKind::A, level: 1, q: 1, x: 1.0 }; 8];
    for (block, (level, pk)) in [(d * p * p, p * p), (d * p, p)].into_iter().enumerate() {
        let x = query.x.resolve(level, chi);
        let make = |kind, q| DoubleSeries { kind, level, q, x };
        out[4 * block] = make(SeriesKind::A, 1);
        out[4 * block + 1] = make(SeriesKind::A, pk);
        out[4 * block + 2] = make(SeriesKind::B, level);
        out[4 * block + 3] = make(SeriesKind::B, d);
    }
    out
}

/// 2π e^{−2π/x} − 2π(A_{N,1} + ε_p A_{N,p^k}) + 2π χ(d)(B_{N,d} + ε_p B_{N,N}),
/// the moment over forms with w_{p^k}-eigenvalue ε_p at level N = dp^k.
fn assemble(values: &[CertifiedValue], x: f64, eps_p: f64, chi_d: f64) -> CertifiedValue {
    let (a1, ap, bn, bd) = (values[0], values[1], values[2], values[3]);
    let main = CertifiedValue::exact(2.0 * PI * (-2.0 * PI / x).exp());
    main.minus(a1.plus(ap.scaled(eps_p)).scaled(2.0 * PI))
        .plus(bd.plus(bn.scaled(eps_p)).scaled(2.0 * PI * chi_d))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Certificate {
    Certified,
    NotCertified,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentReport {
    pub query: MomentQuery,
    pub x_dp2: f64,
    pub x_dp: f64,
    /// Keyed by (N, Q).
    pub a_sums: BTreeMap<(u64, u64), CertifiedValue>,
    pub b_sums: BTreeMap<(u64, u64), CertifiedValue>,
    pub moment_dp2: CertifiedValue,
    pub moment_dp: CertifiedValue,
    pub newform_moment: CertifiedValue,
    pub envelope: f64,
    pub certificate: Certificate,
}

/// (a₁, L_χ) on the w_{p²} = +1 part of level dp².
pub fn moment_plus_dp2(query: &MomentQuery, budget: TruncationBudget) -> Result<CertifiedValue> {
    let chi = query.validate()?;
    let series = series_for(query, &chi);
    let values = evaluate_series(&series[..4], &chi, budget)?;
    budget.check(assemble(&values, series[0].x, 1.0, chi.eval(query.d as i64) as f64))
}

/// (a₁, L_χ) on the w_p = χ(p) part of level dp.
pub fn moment_dp(query: &MomentQuery, budget: TruncationBudget) -> Result<CertifiedValue> {
    let chi = query.validate()?;
    let series = series_for(query, &chi);
    let values = evaluate_series(&series[4..], &chi, budget)?;
    let chi_p = chi.eval(query.p as i64) as f64;
    budget.check(assemble(&values, series[4].x, chi_p, chi.eval(query.d as i64) as f64))
}

/// Full reports for several queries from one shared sweep over c. Invalid
/// queries yield their error in place; the tail target is not enforced.
pub fn compute_moment_reports(queries: &[MomentQuery], c_max: u64) -> Vec<Result<MomentReport>> {
    let budget = TruncationBudget::unbounded(c_max);
    let validated: Vec<Result<QuadraticCharacter>> = queries.iter().map(|q| q.validate()).collect();
    // Series are grouped per character because the character enters the weights.
    let mut by_character: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (i, v) in validated.iter().enumerate() {
        if let Ok(chi) = v {
            by_character.entry(chi.discriminant()).or_default().push(i);
        }
    }
    let mut values: Vec<Option<Result<Vec<CertifiedValue>>>> = vec![None; queries.len()];
    for (disc, members) in by_character {
        let chi = make_character(disc).expect("validated");
        let all: Vec<DoubleSeries> = members
            .iter()
            .flat_map(|&i| series_for(&queries[i], &chi))
            .collect();
        match evaluate_series(&all, &chi, budget) {
            Ok(v) => {
                for (k, &i) in members.iter().enumerate() {
                    values[i] = Some(Ok(v[8 * k..8 * k + 8].to_vec()));
                }
            }
            Err(e) => {
                for &i in &members {
                    values[i] = Some(Err(e.clone()));
                }
            }
        }
    }
    queries
        .iter()
        .zip(validated)
        .zip(values)
        .map(|((query, chi), vals)| {
            let chi = chi?;
            let vals = vals.expect("every valid query was evaluated")?;
            Ok(build_report(query, &chi, &vals))
        })
        .collect()
}

fn build_report(query: &MomentQuery, chi: &QuadraticCharacter, values: &[CertifiedValue]) -> MomentReport {
    let series = series_for(query, chi);
    let chi_d = chi.eval(query.d as i64) as f64;
    let chi_p = chi.eval(query.p as i64) as f64;
    let moment_dp2 = assemble(&values[..4], series[0].x, 1.0, chi_d);
    let moment_dp = assemble(&values[4..], series[4].x, chi_p, chi_d);
    let newform_moment = moment_dp2.minus(moment_dp.scaled(1.0 / (query.p - 1) as f64));
    let mut a_sums = BTreeMap::new();
    let mut b_sums = BTreeMap::new();
    for (s, v) in series.iter().zip(values) {
        let map = match s.kind {
            SeriesKind::A => &mut a_sums,
            SeriesKind::B => &mut b_sums,
        };
        map.insert((s.level, s.q), *v);
    }
    let certificate = if newform_moment.value.abs() > newform_moment.tail_bound {
        Certificate::Certified
    } else {
        Certificate::NotCertified
    };
    MomentReport {
        query: *query,
        x_dp2: series[0].x,
        x_dp: series[4].x,
        a_sums,
        b_sums,
        moment_dp2,
        moment_dp,
        newform_moment,
        envelope: error_envelope(query, 1.0),
        certificate,
    }
}

/// Moment of the w_{p²}-invariant newforms at level dp², with the target
/// tail enforced.
pub fn newform_moment(query: &MomentQuery, budget: TruncationBudget) -> Result<MomentReport> {
    if budget.c_max == 0 {
        return Err(Error::BudgetExceeded {
            tail: f64::INFINITY,
            target: budget.target_tail,
            c_max: 0,
        });
    }
    let report = compute_moment_reports(std::slice::from_ref(query), budget.c_max)
        .pop()
        .expect("one report per query")?;
    budget.check(report.newform_moment)?;
    Ok(report)
}

/// C·√D·(log D + 1)³·log(p)²/p², the shape of the error term in the
/// asymptotic for the moment.
pub fn error_envelope(query: &MomentQuery, constant: f64) -> f64 {
    let disc = query.disc.max(1) as f64;
    let p = query.p as f64;
    constant * disc.sqrt() * (disc.ln() + 1.0).powi(3) * p.ln().powi(2) / (p * p)
}

/// |Σ_{n ≤ n_max} χ(n) S(1, nQ̄; c)| / Σ_{n ≤ n_max} |S(1, nQ̄; c)|: how much
/// the character sum cancels at one modulus. Values near 1 mean none.
pub fn cancellation_ratio(chi: &QuadraticCharacter, q: u64, c: u64, n_max: u64) -> Result<f64> {
    if gcd_u64(c, q) != 1 {
        return Err(Error::NotInvertible { a: q as i64, modulus: c });
    }
    let table = kloosterman_batch(1, c);
    let q_inv = mod_inverse(q as i64, c)? as i64;
    let mut signed = CompensatedSum::new();
    let mut absolute = CompensatedSum::new();
    for n in 1..=n_max as i64 {
        let s = table.get(n * q_inv);
        signed.add(chi.eval(n) as f64 * s);
        absolute.add(s.abs());
    }
    Ok(if absolute.value() == 0.0 {
        0.0
    } else {
        signed.value().abs() / absolute.value()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::gcd;
    use crate::kloosterman::kloosterman_bruteforce;

    /// Straight double loop with brute-force Kloosterman sums.
    fn slow_series(s: &DoubleSeries, chi: &QuadraticCharacter, n_max: u64, c_max: u64) -> f64 {
        let alpha = s.decay(chi);
        let mut total = 0.0;
        for n in 1..=n_max {
            let mut inner = 0.0;
            for c in 1..=c_max {
                if !s.accepts(c) {
                    continue;
                }
                let r = if c == 1 { 0 } else { n as i64 * mod_inverse(s.q as i64, c).unwrap() as i64 };
                let sc = c as f64 * (s.q as f64).sqrt();
                inner += kloosterman_bruteforce(1, r, c) / sc * j1(4.0 * PI * (n as f64).sqrt() / sc);
            }
            total += chi.eval(n as i64) as f64 / (n as f64).sqrt() * (-alpha * n as f64).exp() * inner;
        }
        2.0 * PI * total
    }

    #[test]
    fn engine_matches_double_loop() {
        let chi = make_character(5).unwrap();
        let trivial = QuadraticCharacter::trivial();
        let cases = [
            (DoubleSeries { kind: SeriesKind::A, level: 18, q: 9, x: 6.0 }, chi),
            (DoubleSeries { kind: SeriesKind::B, level: 18, q: 2, x: 30.0 }, chi),
            (DoubleSeries { kind: SeriesKind::A, level: 50, q: 1, x: 9.0 }, trivial),
            (DoubleSeries { kind: SeriesKind::A, level: 50, q: 25, x: 9.0 }, trivial),
        ];
        for (s, chi) in cases {
            let c_max = 400;
            let v = evaluate_series(&[s], &chi, TruncationBudget::unbounded(c_max)).unwrap()[0];
            // The double loop reaches the same n-range, far past the point
            // where the exponential weight underflows the comparison.
            let slow = slow_series(&s, &chi, 400, c_max);
            assert!((v.value - slow).abs() < 1e-10, "{s:?}: {} vs {slow}", v.value);
        }
    }

    #[test]
    fn duality_between_a_and_b() {
        let chi = make_character(5).unwrap();
        let b = TruncationBudget::unbounded(2000);
        let lhs = b_sum(18, 9, 100.0, &chi, b).unwrap();
        let rhs = a_sum(18, 9, 25.0 * 18.0 / 100.0, &chi, b).unwrap();
        assert!((lhs.value - rhs.value).abs() <= lhs.tail_bound + rhs.tail_bound);
        // x ↦ D²N/x fixes x = D√N, where both are the same double series.
        let fixed = 5.0 * 18f64.sqrt();
        let a = a_sum(18, 2, fixed, &chi, b).unwrap();
        let bb = b_sum(18, 2, fixed, &chi, b).unwrap();
        assert!((a.value - bb.value).abs() < 1e-12 * a.value.abs().max(1.0));
    }

    #[test]
    fn vanishing_x_empties_the_n_sum() {
        let v = a_sum(50, 1, 1e-3, &QuadraticCharacter::trivial(), TruncationBudget::unbounded(100)).unwrap();
        assert_eq!(v.value, 0.0);
    }

    #[test]
    fn a_sum_preconditions() {
        let chi5 = make_character(5).unwrap();
        let b = TruncationBudget::unbounded(10);
        assert!(matches!(a_sum(10, 10, 5.0, &chi5, b), Err(Error::CoprimalityViolation { disc: 5, level: 10 })));
        assert!(matches!(a_sum(12, 2, 5.0, &QuadraticCharacter::trivial(), b), Err(Error::InvalidQuery(_))));
    }

    #[test]
    fn query_validation() {
        let ok = MomentQuery::new(2, 5, 1, XChoice::Auto);
        assert!(ok.validate().is_ok());
        assert_eq!(
            MomentQuery::new(2, 5, 10, XChoice::Auto).validate(),
            Err(Error::NotFundamental(10))
        );
        for bad in [
            MomentQuery::new(4, 5, 1, XChoice::Auto),
            MomentQuery::new(2, 9, 1, XChoice::Auto),
            MomentQuery::new(2, 5, 5, XChoice::Auto),
            MomentQuery::new(3, 7, 12, XChoice::Auto),
            MomentQuery::new(2, 5, -3, XChoice::Auto),
            MomentQuery::new(2, 2, 1, XChoice::Auto),
        ] {
            assert!(matches!(newform_moment(&bad, TruncationBudget::unbounded(10)), Err(Error::InvalidQuery(_))), "{bad:?}");
        }
    }

    #[test]
    fn auto_x_is_d2n_log_d2n() {
        let chi = make_character(5).unwrap();
        let x = XChoice::Auto.resolve(18, &chi);
        assert!((x - 450.0 * 450f64.ln()).abs() < 1e-9);
        assert!((XChoice::SelfDual.resolve(18, &chi) - 450f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn envelope_examples() {
        let q = MomentQuery::new(2, 5, 1, XChoice::Auto);
        assert!((error_envelope(&q, 1.0) - 5f64.ln().powi(2) / 25.0).abs() < 1e-15);
        assert!((error_envelope(&q, 1.0) - 0.1036).abs() < 1e-4);
        let q = MomentQuery::new(2, 7, 5, XChoice::Auto);
        let expected = 5f64.sqrt() * (5f64.ln() + 1.0).powi(3) * 7f64.ln().powi(2) / 49.0;
        assert!((error_envelope(&q, 1.0) - expected).abs() < 1e-15);
        let far = MomentQuery::new(2, 1_000_003, 1, XChoice::Auto);
        assert!(error_envelope(&far, 1.0) < 1e-9);
    }

    #[test]
    fn report_arithmetic_and_shared_sweep() {
        let queries = [
            MomentQuery::new(2, 5, 1, XChoice::SelfDual),
            MomentQuery::new(3, 5, 1, XChoice::SelfDual),
            MomentQuery::new(2, 5, 10, XChoice::SelfDual),
        ];
        let reports = compute_moment_reports(&queries, 600);
        assert!(reports[2].is_err());
        for (query, report) in queries.iter().zip(&reports).take(2) {
            let r = report.as_ref().unwrap();
            let expected = r.moment_dp2.value - r.moment_dp.value / (query.p - 1) as f64;
            assert_eq!(r.newform_moment.value, expected);
            let alone = compute_moment_reports(std::slice::from_ref(query), 600).pop().unwrap().unwrap();
            assert_eq!(&alone, r);
            assert_eq!(r.a_sums.len(), 4);
            assert_eq!(r.b_sums.len(), 4);
        }
    }

    #[test]
    fn cancellation_diagnostic_in_unit_interval() {
        let chi = make_character(5).unwrap();
        for c in [7u64, 30, 101] {
            let r = cancellation_ratio(&chi, 1, c, 200).unwrap();
            assert!((0.0..=1.0).contains(&r));
        }
        assert!(cancellation_ratio(&chi, 2, 4, 10).is_err());
        assert_eq!(gcd(4, 2), 2);
    }
}
