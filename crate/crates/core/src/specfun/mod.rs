//! Special functions and quadrature used by the analytic evaluators.
//!
//! Everything here is self-contained: the gamma family, the complementary
//! error function and an adaptive Gauss-Kronrod integrator with the domain
//! transforms needed for the BER and rate integrals.

mod quad;

pub use quad::{integrate, integrate_semi_infinite, Integral, QuadratureSpec, Transform};

use crate::error::{domain, Result};
use crate::num::Real;

const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

fn lanczos_sum<T: Real>(x: T) -> T {
    // x is the shifted argument (z - 1)
    let mut acc = T::of(LANCZOS[0]);
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc = acc + T::of(*c) / (x + T::of(i as f64));
    }
    acc
}

/// ln Γ(x) for x > 0.
pub fn ln_gamma<T: Real>(x: T) -> T {
    if x < T::of(0.5) {
        // Γ(x) = Γ(x + 1) / x keeps the Lanczos argument in its accurate range.
        return ln_gamma(x + T::one()) - x.ln();
    }
    let z = x - T::one();
    let t = z + T::of(LANCZOS_G + 0.5);
    T::of(0.5) * (T::TAU()).ln() + (z + T::of(0.5)) * t.ln() - t + lanczos_sum(z).ln()
}

/// Gamma function Γ(x), x > 0.
pub fn gamma_fn<T: Real>(x: T) -> Result<T> {
    if !(x > T::zero()) {
        return domain("x", x.as_f64(), "x > 0");
    }
    if x < T::of(0.5) {
        return Ok(gamma_fn(x + T::one())? / x);
    }
    // Exact factorials keep small integer arguments bit-exact.
    if x <= T::of(20.0) && x.fract() == T::zero() {
        let n = x.to_usize().unwrap_or(1);
        let f = (1..n).fold(1.0_f64, |acc, k| acc * k as f64);
        return Ok(T::of(f));
    }
    let z = x - T::one();
    let t = z + T::of(LANCZOS_G + 0.5);
    Ok((T::TAU()).sqrt() * t.powf(z + T::of(0.5)) * (-t).exp() * lanczos_sum(z))
}

const MAX_ITER: usize = 10_000;

/// Σ_n x^n / (a (a+1) ... (a+n)), the series part of 𝕃(a, x) e^x x^-a.
fn lower_series<T: Real>(a: T, x: T) -> T {
    let mut term = T::one() / a;
    let mut sum = term;
    let mut ap = a;
    for _ in 0..MAX_ITER {
        ap = ap + T::one();
        term = term * x / ap;
        sum = sum + term;
        if term.abs() <= sum.abs() * T::epsilon() {
            break;
        }
    }
    sum
}

/// Continued fraction for Γ(a, x) e^x x^-a (modified Lentz), valid for x > a + 1.
fn upper_fraction<T: Real>(a: T, x: T) -> T {
    let tiny = T::min_positive_value() / T::epsilon();
    let mut b = x + T::one() - a;
    let mut c = T::one() / tiny;
    let mut d = T::one() / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let i = T::of(i as f64);
        let an = -i * (i - a);
        b = b + T::of(2.0);
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = d.recip();
        let del = d * c;
        h = h * del;
        if (del - T::one()).abs() <= T::epsilon() {
            break;
        }
    }
    h
}

/// Lower incomplete gamma function 𝕃(a, x) = ∫₀ˣ t^(a-1) e^(-t) dt.
pub fn lower_inc_gamma<T: Real>(a: T, x: T) -> Result<T> {
    if !(a > T::zero()) {
        return domain("a", a.as_f64(), "a > 0");
    }
    if !(x >= T::zero()) {
        return domain("x", x.as_f64(), "x >= 0");
    }
    if x == T::zero() {
        return Ok(T::zero());
    }
    let prefactor = (a * x.ln() - x).exp();
    if x < a + T::one() {
        Ok(prefactor * lower_series(a, x))
    } else {
        Ok(gamma_fn(a)? - prefactor * upper_fraction(a, x))
    }
}

/// 𝕃(a, x) / x^a, i.e. ∫₀¹ u^(a-1) e^(-x u) du, for a > 0 and any real x.
///
/// Stays finite where 𝕃 itself overflows (large `a`) and is defined for
/// negative `x`, where it is the analytic continuation of the ratio.
pub fn lower_inc_gamma_scaled<T: Real>(a: T, x: T) -> T {
    debug_assert!(a > T::zero());
    if x == T::zero() {
        a.recip()
    } else if x < T::zero() {
        // Σ (-x)^n / (n! (a + n)), all terms positive.
        let y = -x;
        let mut pow = T::one();
        let mut sum = a.recip();
        for n in 1..MAX_ITER {
            pow = pow * y / T::of(n as f64);
            let term = pow / (a + T::of(n as f64));
            sum = sum + term;
            if term <= sum * T::epsilon() {
                break;
            }
        }
        sum
    } else if x < a + T::one() {
        (-x).exp() * lower_series(a, x)
    } else {
        (ln_gamma(a) - a * x.ln()).exp() - (-x).exp() * upper_fraction(a, x)
    }
}

/// Complementary error function.
pub fn erfc<T: Real>(x: T) -> T {
    if x < T::zero() {
        return T::of(2.0) - erfc(-x);
    }
    if x < T::of(2.0) {
        return T::one() - erf_series(x);
    }
    // erfc(x) = e^{-x²}/√π · 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
    let tiny = T::min_positive_value() / T::epsilon();
    let mut f = x;
    let mut c = f;
    let mut d = T::zero();
    for n in 1..MAX_ITER {
        let an = T::of(n as f64 * 0.5);
        d = x + an * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = x + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = d.recip();
        let del = c * d;
        f = f * del;
        if (del - T::one()).abs() <= T::epsilon() {
            break;
        }
    }
    (-x * x).exp() / (T::PI().sqrt() * f)
}

pub fn erf<T: Real>(x: T) -> T {
    if x.abs() < T::of(2.0) {
        erf_series(x)
    } else {
        T::one() - erfc(x)
    }
}

/// erf(x) = 2/√π e^{-x²} Σ (2x²)^n x / (2n+1)!!, positive terms only.
fn erf_series<T: Real>(x: T) -> T {
    let two_x2 = T::of(2.0) * x * x;
    let mut term = x;
    let mut sum = x;
    for n in 1..MAX_ITER {
        term = term * two_x2 / T::of((2 * n + 1) as f64);
        sum = sum + term;
        if term.abs() <= sum.abs() * T::epsilon() {
            break;
        }
    }
    T::of(2.0) / T::PI().sqrt() * (-x * x).exp() * sum
}
