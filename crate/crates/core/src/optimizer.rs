//! Relay power split and relay location minimizing the high-SNR protocol outage.
//!
//! The objective L(ω, D) is the bracket of the asymptotic protocol outage,
//! P_out ≈ γ_th²/(2γ̄₀)·L(ω, D), with γ̄₁ = P(1-D)^{-v} and γ̄₂ = PD^{-v}.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::OptimCoefficients;
use crate::num::Real;
use crate::parallel;
use crate::scenario::Scenario;

const EDGE: f64 = 1e-4;

fn clamp_open<T: Real>(x: T) -> T {
    x.max(T::of(EDGE)).min(T::of(1.0 - EDGE))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Objective<T> {
    pub coeffs: OptimCoefficients<T>,
    pub power: T,
    pub path_loss: T,
}

impl<T: Real> Objective<T> {
    pub fn new(coeffs: OptimCoefficients<T>, power: T, path_loss: T) -> Self {
        Self {
            coeffs,
            power,
            path_loss,
        }
    }

    pub fn from_scenario(s: &Scenario<T>) -> Self {
        Self::new(OptimCoefficients::from_scenario(s), s.power, s.path_loss)
    }

    /// (γ̄₁, γ̄₂) at relay position `d`.
    pub fn mean_snrs(&self, d: T) -> (T, T) {
        (
            self.power * (T::one() - d).powf(-self.path_loss),
            self.power * d.powf(-self.path_loss),
        )
    }

    /// L(ω, D) = (B₂-B₁)/γ̄₂ + (B₁+C₁)/(ωγ̄₂) + (B₁-B₂)/γ̄₁ + (B₂+C₂)/((1-ω)γ̄₁).
    pub fn eval(&self, omega: T, d: T) -> T {
        let k = &self.coeffs;
        let (g1, g2) = self.mean_snrs(d);
        (k.b2 - k.b1) / g2
            + (k.b1 + k.c1) / (omega * g2)
            + (k.b1 - k.b2) / g1
            + (k.b2 + k.c2) / ((T::one() - omega) * g1)
    }
}

/// Minimizer of L over ω at fixed (γ̄₁, γ̄₂).
pub fn omega_opt<T: Real>(coeffs: &OptimCoefficients<T>, gbar1: T, gbar2: T) -> T {
    let first = ((coeffs.b1 + coeffs.c1) * gbar1).sqrt();
    let second = ((coeffs.b2 + coeffs.c2) * gbar2).sqrt();
    first / (first + second)
}

/// Minimizer of L over D at fixed ω; the transmit power cancels.
pub fn d_opt<T: Real>(coeffs: &OptimCoefficients<T>, omega: T, path_loss: T) -> Result<T> {
    let k = coeffs;
    let w = omega;
    let w_bar = T::one() - omega;
    let numerator = w * w_bar * (k.b2 - k.b1) + w_bar * (k.b1 + k.c1);
    let denominator = w * w_bar * (k.b1 - k.b2) + w * (k.b2 + k.c2);
    if !(denominator > T::zero() && numerator > T::zero()) {
        return Err(Error::DegenerateRatio {
            numerator: numerator.as_f64(),
            denominator: denominator.as_f64(),
        });
    }
    let ratio = numerator / denominator;
    Ok((ratio.powf((path_loss - T::one()).recip()) + T::one()).recip())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry<T> {
    pub iteration: usize,
    pub omega: T,
    pub d: T,
    /// L after the ω update of this iteration, before D moves.
    pub objective_after_omega: T,
    pub objective: T,
    /// The closed-form location was degenerate and a 1-D search was used.
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptResult<T> {
    pub omega_opt: T,
    pub d_opt: T,
    pub objective: T,
    pub iterations: usize,
    pub trace: Vec<TraceEntry<T>>,
}

/// Golden-section refinement after a coarse scan; for the 1-D fallback half-steps.
fn minimize_1d<T: Real>(f: impl Fn(T) -> T) -> T {
    let n = 200;
    let lo = T::of(EDGE);
    let hi = T::of(1.0 - EDGE);
    let step = (hi - lo) / T::of(n as f64);
    let mut best = 0_usize;
    let mut best_val = T::infinity();
    for i in 0..=n {
        let v = f(lo + step * T::of(i as f64));
        if v < best_val {
            best_val = v;
            best = i;
        }
    }
    let mut a = lo + step * T::of(best.saturating_sub(1) as f64);
    let mut b = (lo + step * T::of((best + 1) as f64)).min(hi);
    let g = T::of((5f64.sqrt() - 1.0) / 2.0);
    for _ in 0..100 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    T::of(0.5) * (a + b)
}

pub(crate) type OmegaFn<T> = fn(&OptimCoefficients<T>, T, T) -> T;

fn result_from<T: Real>(trace: Vec<TraceEntry<T>>) -> OptResult<T> {
    let last = *trace.last().expect("trace holds the initial point");
    OptResult {
        omega_opt: last.omega,
        d_opt: last.d,
        objective: last.objective,
        iterations: trace.len() - 1,
        trace,
    }
}

/// Best ω with the relay position held at the scenario's D.
pub fn optimize_omega<T: Real>(s: &Scenario<T>) -> OptResult<T> {
    let obj = Objective::from_scenario(s);
    let d = s.relay_position;
    let (g1, g2) = obj.mean_snrs(d);
    let w = clamp_open(omega_opt(&obj.coeffs, g1, g2));
    let l = obj.eval(w, d);
    result_from(vec![
        initial(&obj, s.omega, d),
        TraceEntry {
            iteration: 1,
            omega: w,
            d,
            objective_after_omega: l,
            objective: l,
            fallback: false,
        },
    ])
}

/// Best relay position with ω held at the scenario's value.
pub fn optimize_location<T: Real>(s: &Scenario<T>) -> Result<OptResult<T>> {
    let obj = Objective::from_scenario(s);
    let w = s.omega;
    let (d, fallback) = location_step(&obj, w)?;
    let entry = TraceEntry {
        iteration: 1,
        omega: w,
        d,
        objective_after_omega: obj.eval(w, s.relay_position),
        objective: obj.eval(w, d),
        fallback,
    };
    Ok(result_from(vec![initial(&obj, w, s.relay_position), entry]))
}

fn initial<T: Real>(obj: &Objective<T>, omega: T, d: T) -> TraceEntry<T> {
    let l = obj.eval(omega, d);
    TraceEntry {
        iteration: 0,
        omega,
        d,
        objective_after_omega: l,
        objective: l,
        fallback: false,
    }
}

fn location_step<T: Real>(obj: &Objective<T>, omega: T) -> Result<(T, bool)> {
    match d_opt(&obj.coeffs, omega, obj.path_loss) {
        Ok(d) => Ok((clamp_open(d), false)),
        Err(e @ Error::DegenerateRatio { .. }) => {
            let d = minimize_1d(|d| obj.eval(omega, d));
            if obj.eval(omega, d).is_finite() {
                Ok((d, true))
            } else {
                Err(e)
            }
        }
        Err(e) => Err(e),
    }
}

/// Alternates the closed-form ω and D updates from D = 0.5 for exactly `max_iter` rounds.
pub fn joint_optimize<T: Real>(s: &Scenario<T>, max_iter: usize) -> Result<OptResult<T>> {
    joint_optimize_with(s, max_iter, omega_opt)
}

pub(crate) fn joint_optimize_with<T: Real>(
    s: &Scenario<T>,
    max_iter: usize,
    omega_fn: OmegaFn<T>,
) -> Result<OptResult<T>> {
    if max_iter == 0 {
        return Err(Error::Domain {
            name: "max_iter",
            value: 0.0,
            expected: "max_iter >= 1",
        });
    }
    let obj = Objective::from_scenario(s);
    let mut d = T::of(0.5);
    let mut trace = vec![initial(&obj, s.omega, d)];
    for iteration in 1..=max_iter {
        let (g1, g2) = obj.mean_snrs(d);
        let omega = clamp_open(omega_fn(&obj.coeffs, g1, g2));
        let objective_after_omega = obj.eval(omega, d);
        let (next_d, fallback) = location_step(&obj, omega)?;
        d = next_d;
        trace.push(TraceEntry {
            iteration,
            omega,
            d,
            objective_after_omega,
            objective: obj.eval(omega, d),
            fallback,
        });
    }
    Ok(result_from(trace))
}

/// Exhaustive search over the interior grid points (i/n, j/n), 0 < i, j < n.
/// Ties resolve to the lexicographically smallest (ω, D).
pub fn grid_search<T: Real>(s: &Scenario<T>, resolution: usize) -> Result<OptResult<T>> {
    if resolution < 10 {
        return Err(Error::Domain {
            name: "resolution",
            value: resolution as f64,
            expected: "resolution >= 10",
        });
    }
    let obj = Objective::from_scenario(s);
    let n = T::of(resolution as f64);
    let at = |i: usize| clamp_open(T::of(i as f64) / n);
    let rows: Vec<(T, usize, usize)> = parallel::install(|| {
        (1..resolution)
            .into_par_iter()
            .map(|i| {
                let w = at(i);
                let mut best = (T::infinity(), i, 1);
                for j in 1..resolution {
                    let v = obj.eval(w, at(j));
                    if v < best.0 {
                        best = (v, i, j);
                    }
                }
                best
            })
            .collect()
    });
    let (value, i, j) = rows.into_iter().fold((T::infinity(), 0, 0), |best, row| {
        if row.0 < best.0 {
            row
        } else {
            best
        }
    });
    let entry = TraceEntry {
        iteration: 1,
        omega: at(i),
        d: at(j),
        objective_after_omega: value,
        objective: value,
        fallback: false,
    };
    Ok(result_from(vec![
        initial(&obj, s.omega, s.relay_position),
        entry,
    ]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_examples() {
        let k = OptimCoefficients::<f64>::interference_free();
        assert!((omega_opt(&k, 80.0, 80.0) - 0.5).abs() < 1e-15);
        let w = omega_opt(&k, 8.0, 1.0);
        assert!((w - 8f64.sqrt() / (8f64.sqrt() + 1.0)).abs() < 1e-15);
        assert!((w - 0.7388).abs() < 1e-4);
        assert!((d_opt(&k, 0.5, 3.0).unwrap() - 0.5).abs() < 1e-15);
        let d = d_opt(&k, 0.8, 3.0).unwrap();
        assert!((d - 0.8f64.sqrt() / (0.2f64.sqrt() + 0.8f64.sqrt())).abs() < 1e-14);
        assert!((d - 0.6667).abs() < 1e-4);
    }

    #[test]
    fn degenerate_ratio_reported() {
        let k = OptimCoefficients {
            b1: -5.0,
            b2: 1.0,
            c1: 1.0,
            c2: 1.0,
        };
        assert!(matches!(
            d_opt(&k, 0.5, 3.0),
            Err(Error::DegenerateRatio { .. })
        ));
    }

    #[test]
    fn fallback_search_finds_interior_minimum() {
        let x = minimize_1d(|x: f64| (x - 0.3141).powi(2));
        assert!((x - 0.3141).abs() < 1e-8);
    }

    #[test]
    fn zero_iterations_rejected() {
        let s = Scenario::uniform(100.0, 3.0, 0.5, 0.5, 5, 100.0).unwrap();
        assert!(joint_optimize(&s, 0).is_err());
        assert!(grid_search(&s, 5).is_err());
    }
}
