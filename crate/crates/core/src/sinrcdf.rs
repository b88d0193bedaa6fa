//! Distribution of the per-terminal SINR upper bound.
//!
//! For T1 the bound is Υ = γ₀/(Γ_T+1) + min(γ₁/(Γ_T+1), ω₂γ₂/(Γ_R+ω₁Γ_T+ω₁+1)).
//! Four evaluators are provided: the truncated series form, its
//! series-free approximation, the small-γ asymptote, and a
//! one-dimensional quadrature of the defining integral that serves as the
//! reference. T2 is handled by evaluating T1 in the role-swapped scenario.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Real;
use crate::scenario::{NodeId, NodeProfile, Scenario};
use crate::specfun::{integrate, lower_inc_gamma_scaled, QuadratureSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    LowerBound,
    Approx,
    Asymptotic,
    QuadOracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesControl<T> {
    /// Stop once |term| ≤ tail_tol·|partial sum| for three consecutive terms.
    pub tail_tol: T,
    pub max_terms: usize,
    /// Substitute the quadrature reference instead of failing when the series does not settle.
    pub fallback_to_oracle: bool,
}

impl<T: Real> Default for SeriesControl<T> {
    fn default() -> Self {
        Self {
            tail_tol: T::of(1e-10),
            max_terms: 200,
            fallback_to_oracle: false,
        }
    }
}

impl<T: Real> SeriesControl<T> {
    pub fn with_fallback(mut self) -> Self {
        self.fallback_to_oracle = true;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Largest number of series terms used by any pair.
    pub terms: usize,
    /// The series did not settle and the quadrature reference was substituted.
    pub fell_back: bool,
    pub quad_err: f64,
    pub quad_converged: bool,
    /// Asymptotic value above 0.1, i.e. outside the small-γ regime.
    pub outside_asymptotic_regime: bool,
    /// Relative disagreement between the two algebraic forms of the asymptote.
    pub asymptotic_self_check: f64,
    /// A raw value left [0, 1] by more than rounding and was clamped.
    pub clamped: bool,
    pub ill_conditioned: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticValue<T> {
    pub value: T,
    pub method: Method,
    pub diagnostics: Diagnostics,
}

impl<T: Real> AnalyticValue<T> {
    fn new(value: T, method: Method) -> Self {
        Self {
            value,
            method,
            diagnostics: Diagnostics {
                quad_converged: true,
                ..Default::default()
            },
        }
    }
}

/// Everything the T1 CDF depends on.
#[derive(Debug, Clone, PartialEq)]
pub struct CdfContext<T> {
    pub gbar0: T,
    pub gbar1: T,
    pub gbar2: T,
    pub omega1: T,
    pub omega2: T,
    pub terminal: NodeProfile<T>,
    pub relay: NodeProfile<T>,
    /// Φ₁ = 1/γ̄₀ - 1/γ̄₁ - ω₁/(ω₂γ̄₂)
    pub phi1: T,
    /// Φ₂ = Φ₁ - 1/(ω₂γ̄₂)
    pub phi2: T,
    /// λ₁ = 1/γ̄₁ + ω₁/(ω₂γ̄₂)
    pub lambda1: T,
    /// λ₂ = λ₁ + 1/(ω₂γ̄₂)
    pub lambda2: T,
}

impl<T: Real> CdfContext<T> {
    pub fn new(
        gbar0: T,
        gbar1: T,
        gbar2: T,
        omega2: T,
        terminal: NodeProfile<T>,
        relay: NodeProfile<T>,
    ) -> Self {
        let omega1 = T::one() - omega2;
        let relay_step = (omega2 * gbar2).recip();
        let lambda1 = gbar1.recip() + omega1 * relay_step;
        let phi1 = gbar0.recip() - lambda1;
        Self {
            gbar0,
            gbar1,
            gbar2,
            omega1,
            omega2,
            terminal,
            relay,
            phi1,
            phi2: phi1 - relay_step,
            lambda1,
            lambda2: lambda1 + relay_step,
        }
    }

    /// Context for `terminal`'s SINR; T2 is T1 of the role-swapped scenario.
    pub fn for_terminal(s: &Scenario<T>, terminal: NodeId) -> Result<Self> {
        let view = match terminal {
            NodeId::T1 => s.clone(),
            NodeId::T2 => s.swap_roles(),
            NodeId::R => {
                return Err(Error::InvalidScenario(
                    "the SINR CDF is defined at the terminals only".into(),
                ));
            }
        };
        let profile = view.profile()?;
        let (g0, g1, g2) = view.mean_snrs();
        Ok(Self::new(g0, g1, g2, view.omega2(), profile.t1, profile.r))
    }

    /// β_{j,k} = ω₂γ̄₂Φ₁/ξ_{R,k} + 1/ξ_{T,j}.
    pub fn beta(&self, j: usize, k: usize) -> T {
        self.omega2 * self.gbar2 * self.phi1 / self.relay.xi[k] + self.terminal.xi[j].recip()
    }

    fn ill_conditioned(&self) -> bool {
        self.terminal.ill_conditioned || self.relay.ill_conditioned
    }

    /// Direct-link term e^{-γ/γ̄₀} Σ_j φ_j γ̄₀/(γ + γ̄₀/ξ_j).
    fn direct_term(&self, gamma: T) -> T {
        let g0 = self.gbar0;
        let sum: T = self
            .terminal
            .xi
            .iter()
            .zip(&self.terminal.phi)
            .map(|(&x, &p)| p * g0 / (gamma + g0 / x))
            .sum();
        (-gamma / g0).exp() * sum
    }

    /// Λ(ρ₁, ρ₂) = γ̄₂/K · 1/(ρ₁γ + 1/ξ_j) · e^{-ρ₂γ}
    fn lambda_term(&self, gamma: T, k_val: T, xi_t: T, rho1: T, rho2: T) -> T {
        self.gbar2 / k_val / (rho1 * gamma + xi_t.recip()) * (-rho2 * gamma).exp()
    }

    pub fn evaluate(
        &self,
        gamma: T,
        method: Method,
        ctl: &SeriesControl<T>,
    ) -> Result<AnalyticValue<T>> {
        match method {
            Method::LowerBound => cdf_lower_bound(self, gamma, ctl),
            Method::Approx => Ok(cdf_approx(self, gamma)),
            Method::Asymptotic => Ok(cdf_asymptotic(self, gamma)),
            Method::QuadOracle => Ok(cdf_quad_oracle(self, gamma)),
        }
    }
}

/// Density of the aggregate interference power, Σ_k φ_k e^{-t/ξ_k}.
pub fn interference_pdf<T: Real>(profile: &NodeProfile<T>, t: T) -> T {
    profile.pdf(t)
}

fn clamp_unit<T: Real>(mut v: AnalyticValue<T>) -> AnalyticValue<T> {
    if !v.value.is_finite() {
        return v;
    }
    let tol = T::of(1e-12);
    if v.value < -tol || v.value > T::one() + tol {
        v.diagnostics.clamped = true;
    }
    v.value = v.value.max(T::zero()).min(T::one());
    v
}

/// Ψ(ρ₃, ρ₄, ρ₅) = ∫₀^γ e^{-Φ₂z}/(ρ₃z + ρ₄γ + ρ₅) dz
///              = Σ_l (γ/w)(-ρ₃γ/w)^l ∫₀¹ u^l e^{-Φ₂γu} du,  w = ρ₄γ + ρ₅.
/// Returns `None` when the terms do not settle within the budget.
fn psi_series<T: Real>(
    gamma: T,
    rho3: T,
    rho4: T,
    rho5: T,
    moments: &mut Vec<T>,
    x: T,
    ctl: &SeriesControl<T>,
) -> (Option<T>, usize) {
    let w = rho4 * gamma + rho5;
    let ratio = -rho3 * gamma / w;
    let mut scale = gamma / w;
    let mut sum = T::zero();
    let mut quiet = 0;
    for l in 0..ctl.max_terms {
        if moments.len() <= l {
            moments.push(lower_inc_gamma_scaled(T::of((l + 1) as f64), x));
        }
        let term = scale * moments[l];
        sum = sum + term;
        if term.abs() <= ctl.tail_tol * sum.abs() {
            quiet += 1;
            if quiet == 3 {
                return (Some(sum), l + 1);
            }
        } else {
            quiet = 0;
        }
        scale = scale * ratio;
        if scale == T::zero() {
            return (Some(sum), l + 1);
        }
    }
    (None, ctl.max_terms)
}

/// Series form of the CDF, built from four M terms and two Λ terms per (j, k) pair.
pub fn cdf_lower_bound<T: Real>(
    ctx: &CdfContext<T>,
    gamma: T,
    ctl: &SeriesControl<T>,
) -> Result<AnalyticValue<T>> {
    if gamma <= T::zero() {
        return Ok(AnalyticValue::new(T::zero(), Method::LowerBound));
    }
    match lower_bound_series(ctx, gamma, ctl) {
        Ok((value, terms)) => {
            let mut v = AnalyticValue::new(value, Method::LowerBound);
            v.diagnostics.terms = terms;
            v.diagnostics.ill_conditioned = ctx.ill_conditioned();
            Ok(clamp_unit(v))
        }
        Err(e) if ctl.fallback_to_oracle => {
            let mut v = cdf_quad_oracle(ctx, gamma);
            v.method = Method::LowerBound;
            v.diagnostics.fell_back = true;
            v.diagnostics.terms = match e {
                Error::SeriesDivergence { terms, .. } => terms,
                _ => 0,
            };
            Ok(v)
        }
        Err(e) => Err(e),
    }
}

fn lower_bound_series<T: Real>(
    ctx: &CdfContext<T>,
    gamma: T,
    ctl: &SeriesControl<T>,
) -> Result<(T, usize)> {
    let diverged = |terms| Error::SeriesDivergence {
        gamma: gamma.as_f64(),
        terms,
    };
    let (t, r) = (&ctx.terminal, &ctx.relay);
    let x = ctx.phi2 * gamma;
    let mut moments = Vec::new();
    let mut terms = 0;
    // the first two M calls share (ρ₃, ρ₄, ρ₅) = (-1/γ̄₂, 1/γ̄₂, ω₂/ξ_{R,k}); the last two (Φ₁, λ₁, 1/ξ_{T,j})
    let mut psi_relay = Vec::with_capacity(r.len());
    for &xr in &r.xi {
        let (v, n) = psi_series(
            gamma,
            -ctx.gbar2.recip(),
            ctx.gbar2.recip(),
            ctx.omega2 / xr,
            &mut moments,
            x,
            ctl,
        );
        terms = terms.max(n);
        psi_relay.push(v.ok_or_else(|| diverged(n))?);
    }
    let mut psi_term = Vec::with_capacity(t.len());
    for &xt in &t.xi {
        let (v, n) = psi_series(
            gamma,
            ctx.phi1,
            ctx.lambda1,
            xt.recip(),
            &mut moments,
            x,
            ctl,
        );
        terms = terms.max(n);
        psi_term.push(v.ok_or_else(|| diverged(n))?);
    }
    let e2 = (-ctx.lambda2 * gamma).exp();
    let mut f2 = T::zero();
    for (j, (&xt, &pt)) in t.xi.iter().zip(&t.phi).enumerate() {
        for (k, &pr) in r.phi.iter().enumerate() {
            let beta = ctx.beta(j, k);
            let kv = gamma / ctx.gbar0 + beta;
            // K = 0 is a removable singularity of the pair sum that the series form cannot evaluate
            if !(kv.abs() > T::of(1e-8) * (gamma / ctx.gbar0).max(beta.abs())) {
                return Err(diverged(terms));
            }
            let (k1, k2) = (kv.recip(), kv.powi(-2));
            let m = e2
                * (psi_relay[k] * (k1 + k2)
                    + psi_term[j] * (k1 / ctx.omega2 + ctx.phi1 * ctx.gbar2 * k2));
            let lam = ctx.lambda_term(gamma, kv, xt, ctx.lambda1, ctx.lambda2)
                - ctx.lambda_term(gamma, kv, xt, ctx.gbar0.recip(), ctx.gbar0.recip());
            f2 = f2 + pt * pr * (m + lam);
        }
    }
    let value = T::one() - ctx.direct_term(gamma) - ctx.omega2 / ctx.gbar0 * f2;
    if !value.is_finite() {
        return Err(diverged(terms));
    }
    Ok((value, terms))
}

/// (1 - e^{-Φ₂γ})/Φ₂ with the removable singularity at Φ₂ = 0 handled by its Taylor series.
fn decay_integral<T: Real>(phi2: T, gamma: T) -> T {
    let x = phi2 * gamma;
    if x.abs() < T::of(1e-6) {
        gamma * (T::one() - x / T::of(2.0) + x * x / T::of(6.0))
    } else {
        -(-x).exp_m1() / phi2
    }
}

/// Series-free approximation: each Ψ is replaced by (1 - e^{-Φ₂γ})/Φ₂ / ((ρ₃+ρ₄)γ + ρ₅).
pub fn cdf_approx<T: Real>(ctx: &CdfContext<T>, gamma: T) -> AnalyticValue<T> {
    if gamma <= T::zero() {
        return AnalyticValue::new(T::zero(), Method::Approx);
    }
    let (t, r) = (&ctx.terminal, &ctx.relay);
    let decay = decay_integral(ctx.phi2, gamma);
    let e2 = (-ctx.lambda2 * gamma).exp();
    let mut f2 = T::zero();
    for (j, (&xt, &pt)) in t.xi.iter().zip(&t.phi).enumerate() {
        // (ρ₃+ρ₄)γ + ρ₅ with ρ₃+ρ₄ = Φ₁+λ₁ = 1/γ̄₀
        let psi_term = decay / (gamma / ctx.gbar0 + xt.recip());
        for (k, (&xr, &pr)) in r.xi.iter().zip(&r.phi).enumerate() {
            let psi_relay = decay / (ctx.omega2 / xr);
            let kv = gamma / ctx.gbar0 + ctx.beta(j, k);
            let (k1, k2) = (kv.recip(), kv.powi(-2));
            let m = e2
                * (psi_relay * (k1 + k2)
                    + psi_term * (k1 / ctx.omega2 + ctx.phi1 * ctx.gbar2 * k2));
            let lam = ctx.lambda_term(gamma, kv, xt, ctx.lambda1, ctx.lambda2)
                - ctx.lambda_term(gamma, kv, xt, ctx.gbar0.recip(), ctx.gbar0.recip());
            f2 = f2 + pt * pr * (m + lam);
        }
    }
    let value = T::one() - ctx.direct_term(gamma) - ctx.omega2 / ctx.gbar0 * f2;
    let mut v = AnalyticValue::new(value, Method::Approx);
    v.diagnostics.ill_conditioned = ctx.ill_conditioned();
    clamp_unit(v)
}

/// Raw partial-fraction form of the small-γ asymptote.
pub fn asymptotic_raw<T: Real>(ctx: &CdfContext<T>, gamma: T) -> T {
    let (t, r) = (&ctx.terminal, &ctx.relay);
    let w2g2 = ctx.omega2 * ctx.gbar2;
    let mut pairs = T::zero();
    for (&xt, &pt) in t.xi.iter().zip(&t.phi) {
        for (&xr, &pr) in r.xi.iter().zip(&r.phi) {
            pairs = pairs + pt * pr * xr * xr / w2g2 * (xt + xt * xt);
        }
    }
    let (l1, l2) = (ctx.lambda1, ctx.lambda2);
    let singles: T =
        t.xi.iter()
            .zip(&t.phi)
            .map(|(&x, &p)| p * (l2 * x + (l1 + l2) * x * x + T::of(2.0) * l1 * x * x * x))
            .sum();
    gamma * gamma / (T::of(2.0) * ctx.gbar0) * (pairs + singles)
}

/// Moment form of the small-γ asymptote, (γ²/2γ̄₀)[(ω₁B + C)/(ω₂γ̄₂) + B/γ̄₁].
pub fn asymptotic_moment<T: Real>(ctx: &CdfContext<T>, gamma: T) -> T {
    let g1 = ctx.terminal.gamma1;
    let b = ctx.terminal.gamma2 + T::of(2.0) * g1 + T::one();
    let c = (ctx.relay.gamma1 + T::one()) * (g1 + T::one());
    gamma * gamma / (T::of(2.0) * ctx.gbar0)
        * ((ctx.omega1 * b + c) / (ctx.omega2 * ctx.gbar2) + b / ctx.gbar1)
}

/// Small-γ asymptote. Not clamped; values above 0.1 are flagged as outside its regime.
pub fn cdf_asymptotic<T: Real>(ctx: &CdfContext<T>, gamma: T) -> AnalyticValue<T> {
    let raw = asymptotic_raw(ctx, gamma);
    let moment = asymptotic_moment(ctx, gamma);
    let mut v = AnalyticValue::new(moment, Method::Asymptotic);
    v.diagnostics.asymptotic_self_check = if moment != T::zero() {
        ((raw - moment) / moment).abs().as_f64()
    } else {
        raw.abs().as_f64()
    };
    v.diagnostics.outside_asymptotic_regime = moment > T::of(0.1);
    v.diagnostics.ill_conditioned = ctx.ill_conditioned();
    v
}

pub(crate) fn oracle_quadrature() -> QuadratureSpec {
    QuadratureSpec {
        abs_tol: 1e-13,
        rel_tol: 1e-11,
        ..QuadratureSpec::default()
    }
}

/// Reference CDF by one-dimensional quadrature.
///
/// With the interference averaged in closed form through its Laplace
/// transform, the relayed-path term is
/// ∫₀^γ (1/γ̄₀) e^{-λ₂γ-Φ₂z} [M_T(a) + M_T(a) Σ_j ξ_j/(1+ξ_j a)] M_R((γ-z)/(ω₂γ̄₂)) dz,
/// a = z/γ̄₀ + (γ-z)λ₁, where M_N(a) = E[e^{-aΓ_N}] is taken in product
/// form and so never touches the partial-fraction weights.
pub fn cdf_quad_oracle<T: Real>(ctx: &CdfContext<T>, gamma: T) -> AnalyticValue<T> {
    if gamma <= T::zero() {
        return AnalyticValue::new(T::zero(), Method::QuadOracle);
    }
    let (t, r) = (&ctx.terminal, &ctx.relay);
    let direct = (-gamma / ctx.gbar0).exp() * t.laplace(gamma / ctx.gbar0);
    let w2g2 = ctx.omega2 * ctx.gbar2;
    let integrand = |z: T| {
        let a = z / ctx.gbar0 + (gamma - z) * ctx.lambda1;
        let mt = t.laplace(a);
        let tilt: T = t.xi.iter().map(|&x| x / (T::one() + x * a)).sum();
        let mr = r.laplace((gamma - z) / w2g2);
        (-ctx.lambda2 * gamma - ctx.phi2 * z).exp() / ctx.gbar0 * mt * (T::one() + tilt) * mr
    };
    let relayed = integrate(integrand, T::zero(), gamma, &oracle_quadrature());
    let mut v = AnalyticValue::new(T::one() - direct - relayed.value, Method::QuadOracle);
    v.diagnostics.quad_err = relayed.err.as_f64();
    v.diagnostics.quad_converged = relayed.converged;
    clamp_unit(v)
}

/// CDF of `terminal`'s SINR upper bound at `gamma`.
pub fn cdf_for_terminal<T: Real>(
    s: &Scenario<T>,
    terminal: NodeId,
    gamma: T,
    method: Method,
) -> Result<AnalyticValue<T>> {
    CdfContext::for_terminal(s, terminal)?.evaluate(gamma, method, &SeriesControl::default())
}
