//! The Bessel function J₁ on the nonnegative real axis.
//!
//! Three regimes: the power series in plain doubles for small arguments, the
//! same series in double-double arithmetic up to the crossover (the terms grow
//! to ~10⁶ before cancelling), and Hankel's asymptotic expansion beyond it.
//! An independent evaluation from the contour-integral representation serves
//! as the oracle for all three.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::sync::OnceLock;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};

/// Below this argument the series is summed in ordinary doubles.
const PLAIN_SERIES_LIMIT: f64 = 4.0;

/// Series/asymptotic dispatch for J₁.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselEvaluator {
    pub series_cutoff: f64,
    pub series_terms: usize,
}

impl Default for BesselEvaluator {
    fn default() -> Self {
        Self::with_cutoff(18.0)
    }
}

impl BesselEvaluator {
    /// Picks the number of series terms so that the first omitted term at
    /// the cutoff is below 10⁻¹⁷.
    pub fn with_cutoff(series_cutoff: f64) -> Self {
        assert!(series_cutoff > 0.0, "cutoff must be positive");
        let h2 = (series_cutoff / 2.0).powi(2);
        let mut term = series_cutoff / 2.0;
        let mut k = 0usize;
        while term >= 1e-17 || (k as f64) < series_cutoff / 2.0 {
            term *= h2 / ((k + 1) * (k + 2)) as f64;
            k += 1;
        }
        BesselEvaluator {
            series_cutoff,
            series_terms: k,
        }
    }

    /// Magnitude of the first term the truncated series leaves out at `z`.
    pub fn first_omitted_term(&self, z: f64) -> f64 {
        let h = z / 2.0;
        let mut term = h;
        for k in 0..self.series_terms {
            term *= h * h / ((k + 1) * (k + 2)) as f64;
        }
        term
    }

    pub fn eval(&self, z: f64) -> f64 {
        assert!(z >= 0.0, "J1 is evaluated on z >= 0 only");
        if z <= PLAIN_SERIES_LIMIT {
            series_f64(z)
        } else if z <= self.series_cutoff {
            series_dd(z, self.series_terms)
        } else {
            hankel(z).0
        }
    }
}

pub fn j1(z: f64) -> f64 {
    static DEFAULT: OnceLock<BesselEvaluator> = OnceLock::new();
    DEFAULT.get_or_init(BesselEvaluator::default).eval(z)
}

/// min(z/2, 0.8): |J₁(z)| ≤ z/2 for every z ≥ 0 and max |J₁| ≈ 0.5819.
pub fn j1_magnitude_bound(z: f64) -> f64 {
    (z / 2.0).min(0.8)
}

fn series_f64(z: f64) -> f64 {
    let h = z / 2.0;
    let h2 = h * h;
    let mut term = h;
    let mut sum = h;
    let mut k = 0;
    while term.abs() > 1e-18 * sum.abs().max(1e-300) {
        term *= -h2 / ((k + 1) * (k + 2)) as f64;
        sum += term;
        k += 1;
        if k > 40 {
            break;
        }
    }
    sum
}

/// Unevaluated sum hi + lo with |lo| ≤ ulp(hi)/2.
#[derive(Debug, Clone, Copy)]
struct DoubleDouble {
    hi: f64,
    lo: f64,
}

impl DoubleDouble {
    fn from_f64(x: f64) -> Self {
        DoubleDouble { hi: x, lo: 0.0 }
    }

    fn normalized(hi: f64, lo: f64) -> Self {
        let s = hi + lo;
        DoubleDouble {
            hi: s,
            lo: lo - (s - hi),
        }
    }

    fn add(self, other: Self) -> Self {
        let s = self.hi + other.hi;
        let bb = s - self.hi;
        let err = (self.hi - (s - bb)) + (other.hi - bb);
        Self::normalized(s, err + self.lo + other.lo)
    }

    fn mul(self, other: Self) -> Self {
        let p = self.hi * other.hi;
        let err = self.hi.mul_add(other.hi, -p);
        Self::normalized(p, err + self.hi * other.lo + self.lo * other.hi)
    }

    fn div_f64(self, d: f64) -> Self {
        let q1 = self.hi / d;
        let p = q1 * d;
        let p_err = q1.mul_add(d, -p);
        let r = ((self.hi - p) - p_err) + self.lo;
        Self::normalized(q1, r / d)
    }

    fn neg(self) -> Self {
        DoubleDouble {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

fn series_dd(z: f64, terms: usize) -> f64 {
    let h = DoubleDouble::from_f64(z / 2.0);
    let h2 = h.mul(h);
    let mut term = h;
    let mut sum = h;
    for k in 0..terms {
        term = term.mul(h2).div_f64(((k + 1) * (k + 2)) as f64).neg();
        sum = sum.add(term);
    }
    sum.hi + sum.lo
}

/// Hankel expansion; returns (value, bound on the truncation error).
///
/// For real z and order 1 the remainders of P and Q are bounded by their
/// first omitted terms.
fn hankel(z: f64) -> (f64, f64) {
    let mu = 4.0;
    let mut p = 0.0;
    let mut q = 0.0;
    let mut a: f64 = 1.0; // a_k / z^k with the alternating sign folded in
    let mut k = 0usize;
    let mut previous = f64::INFINITY;
    let omitted = loop {
        let magnitude = a.abs();
        if magnitude >= previous || magnitude < 1e-18 {
            break magnitude;
        }
        // Even k feed P with sign (−1)^{k/2}, odd k feed Q with sign (−1)^{(k−1)/2}.
        match k % 4 {
            0 => p += a,
            1 => q += a,
            2 => p -= a,
            _ => q -= a,
        }
        previous = magnitude;
        k += 1;
        let odd = (2 * k - 1) as f64;
        a *= (mu - odd * odd) / (8.0 * k as f64 * z);
    };
    let (sin, cos) = z.sin_cos();
    let amplitude = (2.0 / (PI * z)).sqrt();
    let value = amplitude * FRAC_1_SQRT_2 * (p * (sin - cos) + q * (sin + cos));
    (value, amplitude * 2.0 * omitted)
}

/// Gauss–Kronrod 7/15 abscissae on [0, 1] (symmetric half) and weights.
const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const KRONROD_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const GAUSS_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = f(center);
    let mut kronrod = KRONROD_WEIGHTS[7] * f_center;
    let mut gauss = GAUSS_WEIGHTS[3] * f_center;
    for i in 0..7 {
        let dx = half * GK_NODES[i];
        let pair = f(center - dx) + f(center + dx);
        kronrod += KRONROD_WEIGHTS[i] * pair;
        if i % 2 == 1 {
            gauss += GAUSS_WEIGHTS[i / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> (f64, f64) {
    let (value, err) = gauss_kronrod(f, a, b);
    if err <= tol || depth == 0 {
        return (value, err);
    }
    let mid = 0.5 * (a + b);
    let (left, left_err) = adaptive(f, a, mid, tol / 2.0, depth - 1);
    let (right, right_err) = adaptive(f, mid, b, tol / 2.0, depth - 1);
    (left + right, left_err + right_err)
}

/// J₁(z) from z/(4πi) ∫ e^{w − z²/(4w)} w⁻² dw along Re w = x0.
///
/// The integrand at x0 − it is the conjugate of its value at x0 + it, so the
/// line integral is twice the real part over t ≥ 0. The range t > T is
/// handled by repeated integration by parts, which turns the oscillatory
/// tail into an asymptotic series in 1/T.
pub fn j1_integral_oracle(z: f64, x0: f64) -> Result<f64> {
    assert!(z > 0.0 && x0 > 0.0, "oracle needs z > 0 and x0 > 0");
    let a = z * z / 4.0;
    let integrand = |t: f64| {
        let w = Complex64::new(x0, t);
        ((w - a / w).exp() / (w * w)).re
    };
    let cutoff = 400.0_f64.max(4.0 * a);
    let pieces = cutoff.ceil() as usize;
    let width = cutoff / pieces as f64;
    let tolerance = 1e-13;
    let mut body = 0.0;
    let mut body_err = 0.0;
    for i in 0..pieces {
        let (value, err) = adaptive(
            &integrand,
            i as f64 * width,
            (i + 1) as f64 * width,
            tolerance / pieces as f64,
            30,
        );
        body += value;
        body_err += err;
    }

    // ∫_T^∞ e^w h(w) dt with h = e^{−a/w}/w² and dw = i dt equals
    // i e^{w_T} (h − h′ + h″ − …)(w_T).
    let w = Complex64::new(x0, cutoff);
    let h = (-a / w).exp() / (w * w);
    let g1 = -2.0 / w + a / (w * w);
    let g1_prime = 2.0 / (w * w) - 2.0 * a / (w * w * w);
    let h1 = h * g1;
    let h2 = h * (g1 * g1 + g1_prime);
    let i = Complex64::new(0.0, 1.0);
    let tail = (i * w.exp() * (h - h1 + h2)).re;
    // The next term behaves like 24 e^{x0} / T⁵ up to factors near 1.
    let tail_err = 48.0 * x0.exp() / cutoff.powi(5) * (1.0 + a / cutoff).powi(3);

    let scale = z / (2.0 * PI);
    let estimate = scale * (body_err + tail_err);
    if !(estimate <= 1e-9) {
        return Err(Error::QuadratureFailure { estimate });
    }
    Ok(scale * (body + tail))
}
