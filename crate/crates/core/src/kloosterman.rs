//! Kloosterman sums S(m, n; c) = Σ_{k ∈ (Z/cZ)^*} e((m k + n k̄)/c).
//!
//! The brute-force evaluator is the semantic definition. The CRT evaluator
//! and the Fourier batch table are faster routes that are checked against it.

use std::f64::consts::TAU;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::arith::{divisor_count, factorize, gcd, gcd_u64, mod_inverse, mul_mod, reduce};
use crate::sum::CompensatedSum;

/// (cos, sin) of 2π r / c with exact symmetry under r ↦ c − r.
#[inline]
fn unit_phase(r: u64, c: u64) -> (f64, f64) {
    debug_assert!(r < c);
    if r == 0 {
        return (1.0, 0.0);
    }
    if 2 * r == c {
        return (-1.0, 0.0);
    }
    if 2 * r > c {
        let (cos, sin) = unit_phase(c - r, c);
        return (cos, -sin);
    }
    let (sin, cos) = (TAU * r as f64 / c as f64).sin_cos();
    (cos, sin)
}

/// Direct evaluation over the unit group. S(m, n; 1) = 1.
pub fn kloosterman_bruteforce(m: i64, n: i64, c: u64) -> f64 {
    assert!(c >= 1, "modulus must be positive");
    if c == 1 {
        return 1.0;
    }
    let (m, n) = (reduce(m, c), reduce(n, c));
    let mut re = CompensatedSum::new();
    let mut im = CompensatedSum::new();
    for k in 1..c {
        if gcd_u64(k, c) != 1 {
            continue;
        }
        let k_inv = mod_inverse(k as i64, c).expect("unit");
        let phase = (mul_mod(m, k, c) + mul_mod(n, k_inv, c)) % c;
        let (cos, sin) = unit_phase(phase, c);
        re.add(cos);
        im.add(sin);
    }
    assert!(
        im.value().abs() < 1e-12,
        "S({m},{n};{c}) has imaginary residue {:e}",
        im.value()
    );
    re.value()
}

/// CRT evaluation: S(m, n; c) = Π_i S(m · (c/q_i)^{-2}, n; q_i) over the
/// prime-power factors q_i of c, each factor summed over its unit group.
pub fn kloosterman_fast(m: i64, n: i64, c: u64) -> f64 {
    assert!(c >= 1, "modulus must be positive");
    if c == 1 {
        return 1.0;
    }
    crt_twists(c)
        .into_iter()
        .map(|(q, twist)| prime_power_sum(mul_mod(reduce(m, q), twist, q), reduce(n, q), q))
        .product()
}

/// For each prime-power factor q of c, the pair (q, (c/q)^{-2} mod q).
pub(crate) fn crt_twists(c: u64) -> Vec<(u64, u64)> {
    let factors = factorize(c);
    factors
        .prime_powers
        .iter()
        .map(|&(p, e)| {
            let q = p.pow(e);
            let cofactor_inv = mod_inverse((c / q) as i64, q).expect("coprime cofactor");
            (q, mul_mod(cofactor_inv, cofactor_inv, q))
        })
        .collect()
}

/// S(m, n; q) from a sieved unit list with batch-inverted units.
fn prime_power_sum(m: u64, n: u64, q: u64) -> f64 {
    if q == 1 {
        return 1.0;
    }
    let (units, inverses) = units_with_inverses(q);
    units
        .iter()
        .zip(&inverses)
        .map(|(&k, &k_inv)| unit_phase((mul_mod(m, k, q) + mul_mod(n, k_inv, q)) % q, q).0)
        .collect::<CompensatedSum>()
        .value()
}

/// gcd(m, n, c)^{1/2} · τ(c) · √c.
pub fn weil_bound(m: i64, n: i64, c: u64) -> f64 {
    let g = gcd(gcd(m, n) as i64, c as i64) as f64;
    g.sqrt() * divisor_count(c) as f64 * (c as f64).sqrt()
}

/// All values S(m₀, k; c) for k = 0, …, c − 1.
#[derive(Debug, Clone, PartialEq)]
pub struct KloostermanTable {
    pub modulus: u64,
    pub m: i64,
    pub values: Vec<f64>,
}

impl KloostermanTable {
    /// S(m₀, n; c) for any integer n.
    #[inline]
    pub fn get(&self, n: i64) -> f64 {
        self.values[reduce(n, self.modulus) as usize]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatchStrategy {
    /// One pass over the units into frequency buckets, then a length-c DFT.
    Fourier,
    /// Per-entry evaluation; O(c²).
    Direct,
}

pub fn kloosterman_batch(m: i64, c: u64) -> KloostermanTable {
    kloosterman_batch_with(m, c, BatchStrategy::Fourier)
}

pub fn kloosterman_batch_with(m: i64, c: u64, strategy: BatchStrategy) -> KloostermanTable {
    assert!(c >= 1, "modulus must be positive");
    let values = match strategy {
        _ if c == 1 => vec![1.0],
        BatchStrategy::Fourier => fourier_table(m, c),
        BatchStrategy::Direct => direct_table(m, c),
    };
    KloostermanTable {
        modulus: c,
        m,
        values,
    }
}

/// Units modulo c in increasing order, with their inverses.
pub(crate) fn units_with_inverses(c: u64) -> (Vec<u64>, Vec<u64>) {
    let mut is_unit = vec![true; c as usize];
    is_unit[0] = c == 1;
    for p in factorize(c).primes() {
        let mut k = 0;
        while k < c {
            is_unit[k as usize] = false;
            k += p;
        }
    }
    let units: Vec<u64> = (0..c).filter(|&k| is_unit[k as usize]).collect();
    // Montgomery batch inversion: one extended Euclid for the whole group.
    let mut prefix = Vec::with_capacity(units.len());
    let mut acc = 1 % c;
    for &u in &units {
        acc = acc * u % c;
        prefix.push(acc);
    }
    let mut inverses = vec![0u64; units.len()];
    let mut inv_acc = mod_inverse(acc as i64, c).expect("product of units");
    for i in (0..units.len()).rev() {
        let before = if i == 0 { 1 % c } else { prefix[i - 1] };
        inverses[i] = inv_acc * before % c;
        inv_acc = inv_acc * units[i] % c;
    }
    (units, inverses)
}

/// e(r/c) for r in 0..c from two short tables, one sincos per √c entries.
pub(crate) fn roots_of_unity(c: u64) -> Vec<Complex64> {
    let n = c as usize;
    let block = ((n as f64).sqrt().ceil() as usize).max(1);
    let angle = |r: usize| {
        let (cos, sin) = unit_phase(r as u64 % c, c);
        Complex64::new(cos, sin)
    };
    let fine: Vec<Complex64> = (0..block).map(angle).collect();
    let mut roots = Vec::with_capacity(n);
    let mut start = 0;
    while start < n {
        let coarse = angle(start);
        for f in fine.iter().take(n - start) {
            roots.push(coarse * f);
        }
        start += block;
    }
    roots
}

fn fourier_table(m: i64, c: u64) -> Vec<f64> {
    let n = c as usize;
    let m = reduce(m, c);
    let roots = roots_of_unity(c);
    let (units, inverses) = units_with_inverses(c);
    // Bucket v = k̄ receives e(m k / c); the table entry for n is then the
    // unnormalized inverse DFT Σ_v bucket[v] · e(n v / c).
    let mut buckets = vec![Complex64::new(0.0, 0.0); n];
    for (&k, &k_inv) in units.iter().zip(&inverses) {
        buckets[k_inv as usize] = roots[mul_mod(m, k, c) as usize];
    }
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_inverse(n);
    fft.process(&mut buckets);
    buckets.into_iter().map(|z| z.re).collect()
}

fn direct_table(m: i64, c: u64) -> Vec<f64> {
    let m = reduce(m, c);
    let (units, inverses) = units_with_inverses(c);
    (0..c)
        .map(|k| {
            units
                .iter()
                .zip(&inverses)
                .map(|(&u, &u_inv)| unit_phase((mul_mod(m, u, c) + mul_mod(k, u_inv, c)) % c, c).0)
                .collect::<CompensatedSum>()
                .value()
        })
        .collect()
}
