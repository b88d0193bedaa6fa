//! Protocol outage, sum BER and ergodic sum rate from the analytic SINR distribution.

use std::cell::RefCell;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Real;
use crate::scenario::{InterfererSpec, NodeId, Scenario};
use crate::sinrcdf::{AnalyticValue, CdfContext, Diagnostics, Method, SeriesControl};
use crate::specfun::{gamma_fn, integrate, QuadratureSpec};

/// Conditional bit error probability a·erfc(√(bγ)).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulationConstants<T> {
    pub a: T,
    pub b: T,
}

impl<T: Real> ModulationConstants<T> {
    pub fn bpsk() -> Self {
        Self {
            a: T::of(0.5),
            b: T::one(),
        }
    }

    pub fn qpsk() -> Self {
        Self {
            a: T::of(0.5),
            b: T::of(0.5),
        }
    }

    pub fn new(a: T, b: T) -> Result<Self> {
        if !(a > T::zero() && a <= T::one()) {
            return Err(Error::Domain {
                name: "a",
                value: a.as_f64(),
                expected: "0 < a <= 1",
            });
        }
        if !(b > T::zero()) {
            return Err(Error::Domain {
                name: "b",
                value: b.as_f64(),
                expected: "b > 0",
            });
        }
        Ok(Self { a, b })
    }
}

/// Interference-moment coefficients of the high-SNR outage:
/// B_i = Γ″_{T_i} + 2Γ′_{T_i} + 1 and C_i = (Γ′_R + 1)(Γ′_{T_i} + 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimCoefficients<T> {
    pub b1: T,
    pub b2: T,
    pub c1: T,
    pub c2: T,
}

fn moments<T: Real>(spec: &InterfererSpec<T>) -> (T, T) {
    let xi = spec.xi();
    let sum: T = xi.iter().copied().sum();
    let sum_sq: T = xi.iter().map(|&x| x * x).sum();
    (sum, sum * sum + sum_sq)
}

impl<T: Real> OptimCoefficients<T> {
    pub fn from_scenario(s: &Scenario<T>) -> Self {
        let one = T::one();
        let (t1, t1_sq) = moments(&s.interferers.t1);
        let (t2, t2_sq) = moments(&s.interferers.t2);
        let (r, _) = moments(&s.interferers.r);
        Self {
            b1: t1_sq + T::of(2.0) * t1 + one,
            b2: t2_sq + T::of(2.0) * t2 + one,
            c1: (r + one) * (t1 + one),
            c2: (r + one) * (t2 + one),
        }
    }

    pub fn interference_free() -> Self {
        Self {
            b1: T::one(),
            b2: T::one(),
            c1: T::one(),
            c2: T::one(),
        }
    }

    /// Exchanges the roles of the two terminals.
    pub fn swapped(&self) -> Self {
        Self {
            b1: self.b2,
            b2: self.b1,
            c1: self.c2,
            c2: self.c1,
        }
    }
}

fn merge(into: &mut Diagnostics, other: &Diagnostics) {
    into.terms = into.terms.max(other.terms);
    into.fell_back |= other.fell_back;
    into.quad_err += other.quad_err;
    into.quad_converged &= other.quad_converged;
    into.outside_asymptotic_regime |= other.outside_asymptotic_regime;
    into.asymptotic_self_check = into.asymptotic_self_check.max(other.asymptotic_self_check);
    into.clamped |= other.clamped;
    into.ill_conditioned |= other.ill_conditioned;
}

fn contexts<T: Real>(s: &Scenario<T>) -> Result<[CdfContext<T>; 2]> {
    Ok([
        CdfContext::for_terminal(s, NodeId::T1)?,
        CdfContext::for_terminal(s, NodeId::T2)?,
    ])
}

/// F₁ + F₂ - F₁F₂ with F_i the terminal CDFs at `gamma_th`.
pub fn protocol_outage<T: Real>(
    s: &Scenario<T>,
    gamma_th: T,
    method: Method,
) -> Result<AnalyticValue<T>> {
    protocol_outage_with(s, gamma_th, method, &SeriesControl::default())
}

pub fn protocol_outage_with<T: Real>(
    s: &Scenario<T>,
    gamma_th: T,
    method: Method,
    ctl: &SeriesControl<T>,
) -> Result<AnalyticValue<T>> {
    if method == Method::Asymptotic {
        return Ok(protocol_outage_asymptotic(s, gamma_th));
    }
    let [c1, c2] = contexts(s)?;
    let f1 = c1.evaluate(gamma_th, method, ctl)?;
    let f2 = c2.evaluate(gamma_th, method, ctl)?;
    let mut diagnostics = f1.diagnostics;
    merge(&mut diagnostics, &f2.diagnostics);
    Ok(AnalyticValue {
        value: f1.value + f2.value - f1.value * f2.value,
        method,
        diagnostics,
    })
}

/// High-SNR protocol outage, Σ_i (γ²/2γ̄₀)[(ω_iB_i + C_i)/(ω_jγ̄_j) + B_i/γ̄_i].
pub fn protocol_outage_asymptotic<T: Real>(s: &Scenario<T>, gamma_th: T) -> AnalyticValue<T> {
    let k = OptimCoefficients::from_scenario(s);
    let (g0, g1, g2) = s.mean_snrs();
    let (w1, w2) = (s.omega1(), s.omega2());
    let t1 = (w1 * k.b1 + k.c1) / (w2 * g2) + k.b1 / g1;
    let t2 = (w2 * k.b2 + k.c2) / (w1 * g1) + k.b2 / g2;
    let value = gamma_th * gamma_th / (T::of(2.0) * g0) * (t1 + t2);
    AnalyticValue {
        value,
        method: Method::Asymptotic,
        diagnostics: Diagnostics {
            quad_converged: true,
            outside_asymptotic_regime: value > T::of(0.1),
            ..Default::default()
        },
    }
}

/// Runs `f` on each terminal context, turning any error raised inside a
/// quadrature integrand into the function's result.
fn per_terminal_integral<T: Real>(
    s: &Scenario<T>,
    method: Method,
    ctl: &SeriesControl<T>,
    integral: impl Fn(&dyn Fn(T) -> T) -> (T, T, bool),
) -> Result<AnalyticValue<T>> {
    let mut total = T::zero();
    let mut diagnostics = Diagnostics {
        quad_converged: true,
        ..Default::default()
    };
    for ctx in contexts(s)? {
        let failure: RefCell<Option<Error>> = RefCell::new(None);
        let seen = RefCell::new(Diagnostics {
            quad_converged: true,
            ..Default::default()
        });
        let cdf = |g: T| -> T {
            if failure.borrow().is_some() {
                return T::nan();
            }
            match ctx.evaluate(g, method, ctl) {
                Ok(v) => {
                    merge(&mut seen.borrow_mut(), &v.diagnostics);
                    v.value
                }
                Err(e) => {
                    *failure.borrow_mut() = Some(e);
                    T::nan()
                }
            }
        };
        let (value, err, converged) = integral(&cdf);
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        let seen = seen.into_inner();
        merge(
            &mut diagnostics,
            &Diagnostics {
                quad_err: 0.0,
                ..seen
            },
        );
        diagnostics.quad_err += err.as_f64();
        diagnostics.quad_converged &= converged;
        total = total + value;
    }
    Ok(AnalyticValue {
        value: total,
        method,
        diagnostics,
    })
}

fn ber_quadrature() -> QuadratureSpec {
    QuadratureSpec {
        abs_tol: 1e-12,
        rel_tol: 1e-8,
        ..QuadratureSpec::default()
    }
}

/// Σ_terminals a√(b/π) ∫₀^∞ F(γ) e^{-bγ} γ^{-1/2} dγ, integrated in u = √γ up to
/// the point where e^{-bu²} < 1e-16.
///
/// The integral needs F over the whole range, so where the series form does
/// not settle the quadrature reference stands in (`diagnostics.fell_back`).
pub fn sum_ber<T: Real>(
    s: &Scenario<T>,
    modulation: &ModulationConstants<T>,
    method: Method,
) -> Result<AnalyticValue<T>> {
    sum_ber_with(
        s,
        modulation,
        method,
        &SeriesControl::default().with_fallback(),
    )
}

pub fn sum_ber_with<T: Real>(
    s: &Scenario<T>,
    modulation: &ModulationConstants<T>,
    method: Method,
    ctl: &SeriesControl<T>,
) -> Result<AnalyticValue<T>> {
    let (a, b) = (modulation.a, modulation.b);
    let u_max = (T::of(1e16).ln() / b).sqrt();
    let weight = a * (b / T::PI()).sqrt();
    per_terminal_integral(s, method, ctl, |cdf| {
        let r = integrate(
            |u: T| T::of(2.0) * cdf(u * u) * (-b * u * u).exp(),
            T::zero(),
            u_max,
            &ber_quadrature(),
        );
        (weight * r.value, weight * r.err, r.converged)
    })
}

/// High-SNR sum BER: a·Γ(5/2)/(√π b² γ_th²) times the
/// asymptotic protocol outage at γ_th. The result does not depend on `gamma_th`.
pub fn sum_ber_asymptotic<T: Real>(
    s: &Scenario<T>,
    modulation: &ModulationConstants<T>,
    gamma_th: T,
) -> AnalyticValue<T> {
    let outage = protocol_outage_asymptotic(s, gamma_th);
    let mut v = outage;
    v.value = ber_outage_ratio(modulation, gamma_th) * outage.value;
    v
}

/// a·Γ(5/2)/(√π b² γ_th²), the constant linking asymptotic sum BER to asymptotic protocol outage.
pub fn ber_outage_ratio<T: Real>(modulation: &ModulationConstants<T>, gamma_th: T) -> T {
    let g = gamma_fn(T::of(2.5)).expect("Γ(5/2) is finite");
    modulation.a * g / (T::PI().sqrt() * modulation.b * modulation.b * gamma_th * gamma_th)
}

/// Ergodic sum rate Σ_terminals (1/(3 ln 2)) ∫₀^∞ (1 - F(γ))/(1 + γ) dγ with F from the
/// series-free approximation.
pub fn ergodic_sum_rate<T: Real>(s: &Scenario<T>) -> Result<AnalyticValue<T>> {
    ergodic_sum_rate_with(s, Method::Approx, &SeriesControl::default())
}

/// Ergodic sum rate with the CDF taken from any of the analytic methods.
pub fn ergodic_sum_rate_with<T: Real>(
    s: &Scenario<T>,
    method: Method,
    ctl: &SeriesControl<T>,
) -> Result<AnalyticValue<T>> {
    let (g0, g1, g2) = s.mean_snrs();
    let start = g0.max(g1).max(g2);
    let pre = (T::of(3.0) * T::LN_2()).recip();
    let spec = QuadratureSpec {
        abs_tol: 1e-10,
        rel_tol: 1e-9,
        ..QuadratureSpec::default()
    };
    per_terminal_integral(s, method, ctl, |cdf| {
        let survival = |g: T| (T::one() - cdf(g)).max(T::zero());
        // tail cutoff where the survival function drops below 1e-12
        let mut upper = start;
        let mut found = false;
        for _ in 0..40 {
            let tail = survival(upper);
            if tail.is_nan() {
                return (T::nan(), T::nan(), false);
            }
            if tail < T::of(1e-12) {
                found = true;
                break;
            }
            upper = upper * T::of(2.0);
        }
        // γ = e^x - 1 turns dγ/(1+γ) into dx
        let r = integrate(|x: T| survival(x.exp_m1()), T::zero(), upper.ln_1p(), &spec);
        (pre * r.value, pre * r.err, r.converged && found)
    })
}
