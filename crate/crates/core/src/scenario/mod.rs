//! Experiment parameterization, geometry, and the hyper-exponential
//! description of the aggregate interference power at each node.

mod file;

pub use file::{InterfererFile, InterferersFile, ScenarioFile};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::num::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NodeId {
    T1,
    T2,
    R,
}

impl NodeId {
    pub const ALL: [NodeId; 3] = [NodeId::T1, NodeId::T2, NodeId::R];
    pub const TERMINALS: [NodeId; 2] = [NodeId::T1, NodeId::T2];

    /// The other terminal; the relay maps to itself.
    pub fn partner(self) -> NodeId {
        match self {
            NodeId::T1 => NodeId::T2,
            NodeId::T2 => NodeId::T1,
            NodeId::R => NodeId::R,
        }
    }
}

/// One value per node.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PerNode<X> {
    #[serde(rename = "T1")]
    pub t1: X,
    #[serde(rename = "T2")]
    pub t2: X,
    #[serde(rename = "R")]
    pub r: X,
}

impl<X> PerNode<X> {
    pub fn new(t1: X, t2: X, r: X) -> Self {
        Self { t1, t2, r }
    }

    pub fn get(&self, node: NodeId) -> &X {
        match node {
            NodeId::T1 => &self.t1,
            NodeId::T2 => &self.t2,
            NodeId::R => &self.r,
        }
    }

    pub fn get_mut(&mut self, node: NodeId) -> &mut X {
        match node {
            NodeId::T1 => &mut self.t1,
            NodeId::T2 => &mut self.t2,
            NodeId::R => &mut self.r,
        }
    }

    pub fn map<Y>(&self, mut f: impl FnMut(NodeId, &X) -> Y) -> PerNode<Y> {
        PerNode {
            t1: f(NodeId::T1, &self.t1),
            t2: f(NodeId::T2, &self.t2),
            r: f(NodeId::R, &self.r),
        }
    }

    pub fn try_map<Y>(&self, mut f: impl FnMut(NodeId, &X) -> Result<Y>) -> Result<PerNode<Y>> {
        Ok(PerNode {
            t1: f(NodeId::T1, &self.t1)?,
            t2: f(NodeId::T2, &self.t2)?,
            r: f(NodeId::R, &self.r)?,
        })
    }

    pub fn swap_terminals(self) -> Self {
        Self {
            t1: self.t2,
            t2: self.t1,
            r: self.r,
        }
    }
}

/// Interferers seen by one node: `count()` independent Rayleigh-faded
/// sources with received means `power * variances[k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterfererSpec<T> {
    /// Linear interferer power relative to unit noise. Zero means no
    /// interference, which only the Monte Carlo simulator accepts.
    pub power: T,
    pub variances: Vec<T>,
}

impl<T: Real> InterfererSpec<T> {
    pub fn new(power: T, variances: Vec<T>) -> Result<Self> {
        let spec = Self { power, variances };
        spec.validate()?;
        Ok(spec)
    }

    /// `count` interferers with the evenly spread default variances.
    pub fn with_default_variances(count: usize, power: T) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidScenario(
                "interferer count must be at least 1".into(),
            ));
        }
        Self::new(power, default_interferer_variances(count))
    }

    pub fn none() -> Self {
        Self {
            power: T::zero(),
            variances: vec![T::one()],
        }
    }

    pub fn count(&self) -> usize {
        self.variances.len()
    }

    /// Mean received power of each interferer, ξ_k = P_I Ω_k.
    pub fn xi(&self) -> Vec<T> {
        self.variances.iter().map(|&o| self.power * o).collect()
    }

    pub fn is_active(&self) -> bool {
        self.power > T::zero()
    }

    pub fn validate(&self) -> Result<()> {
        if self.variances.is_empty() {
            return Err(Error::InvalidScenario(
                "interferer count must be at least 1".into(),
            ));
        }
        if !(self.power >= T::zero()) || !self.power.is_finite() {
            return Err(Error::InvalidScenario(format!(
                "interferer power must be finite and nonnegative, got {}",
                self.power
            )));
        }
        if let Some(o) = self
            .variances
            .iter()
            .find(|o| !(**o > T::zero()) || !o.is_finite())
        {
            return Err(Error::InvalidScenario(format!(
                "interferer variances must be positive and finite, got {o}"
            )));
        }
        Ok(())
    }
}

/// Handling of exactly coincident interferer means.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TiePolicy {
    #[default]
    Reject,
    /// Multiply the j-th repeat of a value by (1 + j·1e-9).
    Perturb,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario<T> {
    /// Common transmit power of T1, T2 and R (linear, unit noise).
    pub power: T,
    pub path_loss: T,
    /// Normalized T2-R distance D; T1-R is 1 - D and T1-T2 is 1.
    pub relay_position: T,
    /// Share ω of the relay power spent forwarding T1's signal (ω₂); 1 - ω goes to T2.
    pub omega: T,
    pub interferers: PerNode<InterfererSpec<T>>,
    #[serde(default)]
    pub tie_policy: TiePolicy,
}

impl<T: Real> Scenario<T> {
    pub fn new(
        power: T,
        path_loss: T,
        relay_position: T,
        omega: T,
        interferers: PerNode<InterfererSpec<T>>,
    ) -> Result<Self> {
        let s = Self {
            power,
            path_loss,
            relay_position,
            omega,
            interferers,
            tie_policy: TiePolicy::Reject,
        };
        s.validate()?;
        Ok(s)
    }

    /// All three nodes see `count` interferers at power `power / sir`.
    pub fn uniform(
        power: T,
        path_loss: T,
        relay_position: T,
        omega: T,
        count: usize,
        sir: T,
    ) -> Result<Self> {
        let spec = InterfererSpec::with_default_variances(count, power / sir)?;
        Self::new(
            power,
            path_loss,
            relay_position,
            omega,
            PerNode::new(spec.clone(), spec.clone(), spec),
        )
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: T| Err(Error::InvalidScenario(format!("{what} = {v}")));
        if !(self.power > T::zero()) || !self.power.is_finite() {
            return bad("power must be positive; got P", self.power);
        }
        if !(self.path_loss >= T::of(2.0)) || !self.path_loss.is_finite() {
            return bad(
                "path-loss exponent must be at least 2; got v",
                self.path_loss,
            );
        }
        if !(self.relay_position > T::zero() && self.relay_position < T::one()) {
            return bad(
                "relay position must lie in (0, 1); got D",
                self.relay_position,
            );
        }
        if !(self.omega > T::zero() && self.omega < T::one()) {
            return bad("power split must lie in (0, 1); got omega", self.omega);
        }
        for node in NodeId::ALL {
            self.interferers.get(node).validate()?;
        }
        Ok(())
    }

    /// ω₁ = 1 - ω, the relay share for T2's signal.
    pub fn omega1(&self) -> T {
        T::one() - self.omega
    }

    /// ω₂ = ω.
    pub fn omega2(&self) -> T {
        self.omega
    }

    /// Mean desired-link SNRs (γ̄₀, γ̄₁, γ̄₂) for T1-T2, T1-R and T2-R.
    pub fn mean_snrs(&self) -> (T, T, T) {
        let (o0, o1, o2) = variances_unchecked(self.relay_position, self.path_loss);
        (self.power * o0, self.power * o1, self.power * o2)
    }

    /// The same system seen from T2: D → 1 - D, ω → 1 - ω, terminal interferers exchanged.
    pub fn swap_roles(&self) -> Self {
        Self {
            power: self.power,
            path_loss: self.path_loss,
            relay_position: T::one() - self.relay_position,
            omega: T::one() - self.omega,
            interferers: self.interferers.clone().swap_terminals(),
            tie_policy: self.tie_policy,
        }
    }

    /// True when every node has nonzero interference, as the analytic results require.
    pub fn fully_interfered(&self) -> bool {
        NodeId::ALL
            .iter()
            .all(|&n| self.interferers.get(n).is_active())
    }

    pub fn profile(&self) -> Result<InterferenceProfile<T>> {
        self.interferers
            .try_map(|node, spec| build_profile(node, spec, self.tie_policy))
    }
}

fn variances_unchecked<T: Real>(d: T, v: T) -> (T, T, T) {
    (T::one(), (T::one() - d).powf(-v), d.powf(-v))
}

/// Large-scale variances (Ω₀, Ω₁, Ω₂) of the T1-T2, T1-R and T2-R links.
pub fn channel_variances<T: Real>(d: T, v: T) -> Result<(T, T, T)> {
    if !(d > T::zero() && d < T::one()) {
        return domain("D", d.as_f64(), "0 < D < 1");
    }
    if !(v >= T::of(2.0)) {
        return domain("v", v.as_f64(), "v >= 2");
    }
    Ok(variances_unchecked(d, v))
}

/// Interferer variances evenly spread over [0.1, 1]; a single interferer gets 1.
pub fn default_interferer_variances<T: Real>(count: usize) -> Vec<T> {
    if count <= 1 {
        return vec![T::one(); count];
    }
    let step = 0.9 / (count - 1) as f64;
    (0..count).map(|k| T::of(0.1 + step * k as f64)).collect()
}

/// Hyper-exponential law of one node's total interference power:
/// f(t) = Σ_k φ_k e^{-t/ξ_k}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeProfile<T> {
    pub xi: Vec<T>,
    pub phi: Vec<T>,
    /// E[Γ]
    pub gamma1: T,
    /// E[Γ²]
    pub gamma2: T,
    /// Relative spacing of the means is below 1e-3, so φ suffers heavy cancellation.
    pub ill_conditioned: bool,
}

impl<T: Real> NodeProfile<T> {
    pub fn pdf(&self, t: T) -> T {
        if t < T::zero() {
            return T::zero();
        }
        self.xi
            .iter()
            .zip(&self.phi)
            .map(|(&x, &p)| p * (-t / x).exp())
            .sum()
    }

    /// E[e^{-aΓ}] in product form, Π_k 1/(1 + ξ_k a).
    pub fn laplace(&self, a: T) -> T {
        self.xi
            .iter()
            .fold(T::one(), |acc, &x| acc / (T::one() + x * a))
    }

    /// Σ_k φ_k ξ_k^p, the partial-fraction form of E[Γ^(p-1)]/(p-1)!.
    pub fn phi_moment(&self, p: i32) -> T {
        self.xi
            .iter()
            .zip(&self.phi)
            .map(|(&x, &f)| f * x.powi(p))
            .sum()
    }

    pub fn len(&self) -> usize {
        self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }
}

pub type InterferenceProfile<T> = PerNode<NodeProfile<T>>;

/// Builds ξ, φ and the first two moments of the aggregate interference at `node`.
pub fn build_profile<T: Real>(
    node: NodeId,
    spec: &InterfererSpec<T>,
    tie: TiePolicy,
) -> Result<NodeProfile<T>> {
    spec.validate()?;
    if !spec.is_active() {
        return domain("P_I", 0.0, "analytic evaluation needs P_I > 0");
    }
    let mut xi = spec.xi();
    for k in 1..xi.len() {
        let repeats = xi[..k].iter().filter(|&&x| x == xi[k]).count();
        if repeats > 0 {
            match tie {
                TiePolicy::Reject => {
                    return Err(Error::Tie {
                        node,
                        value: xi[k].as_f64(),
                    });
                }
                TiePolicy::Perturb => {
                    xi[k] = xi[k] * (T::one() + T::of(1e-9 * repeats as f64));
                }
            }
        }
    }
    // φ_k = ξ_k^(L-2) / Π_{i≠k}(ξ_k - ξ_i), written as a product of O(1) ratios.
    let phi: Vec<T> = xi
        .iter()
        .enumerate()
        .map(|(k, &xk)| {
            xi.iter()
                .enumerate()
                .filter(|&(i, _)| i != k)
                .fold(xk.recip(), |acc, (_, &xi_i)| acc * xk / (xk - xi_i))
        })
        .collect();
    let sum: T = xi.iter().copied().sum();
    let sum_sq: T = xi.iter().map(|&x| x * x).sum();
    let max = xi.iter().copied().fold(T::zero(), T::max);
    let mut min_gap = T::infinity();
    for i in 0..xi.len() {
        for j in i + 1..xi.len() {
            min_gap = min_gap.min((xi[i] - xi[j]).abs());
        }
    }
    let profile = NodeProfile {
        xi,
        phi,
        gamma1: sum,
        gamma2: sum * sum + sum_sq,
        ill_conditioned: min_gap / max < T::of(1e-3),
    };
    let norm = profile.phi_moment(1);
    if !((norm - T::one()).abs() <= T::of(1e-6)) {
        return Err(Error::Normalization {
            node,
            normalization: norm.as_f64(),
        });
    }
    Ok(profile)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::{integrate, QuadratureSpec};
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    // 1 - (1 - x) is not always x in binary floating point
    fn same_up_to_rounding(a: &Scenario<f64>, b: &Scenario<f64>) -> bool {
        close(a.relay_position, b.relay_position, 1e-15)
            && close(a.omega, b.omega, 1e-15)
            && a.power == b.power
            && a.path_loss == b.path_loss
            && a.interferers == b.interferers
    }

    #[test]
    fn variances_from_geometry() {
        assert_eq!(channel_variances(0.5, 3.0).unwrap(), (1.0, 8.0, 8.0));
        assert_eq!(channel_variances(0.5, 2.0).unwrap(), (1.0, 4.0, 4.0));
        let (o0, o1, o2) = channel_variances(0.8_f64, 4.0).unwrap();
        assert_eq!(o0, 1.0);
        assert!(close(o1, 625.0, 1e-12));
        assert!(close(o2, 2.441_406_25, 1e-12));
        assert!(channel_variances(1.0, 3.0).is_err());
        assert!(channel_variances(0.0, 3.0).is_err());
        assert!(channel_variances(0.5, 1.5).is_err());
    }

    #[test]
    fn default_variance_schedule() {
        assert_eq!(default_interferer_variances::<f64>(1), vec![1.0]);
        assert_eq!(default_interferer_variances::<f64>(2), vec![0.1, 1.0]);
        let five = default_interferer_variances::<f64>(5);
        for (a, b) in five.iter().zip([0.1, 0.325, 0.55, 0.775, 1.0]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn profile_examples() {
        let one = build_profile(
            NodeId::T1,
            &InterfererSpec::new(1.0, vec![1.0]).unwrap(),
            TiePolicy::Reject,
        )
        .unwrap();
        assert_eq!(one.xi, vec![1.0]);
        assert_eq!(one.phi, vec![1.0]);
        assert_eq!((one.gamma1, one.gamma2), (1.0, 2.0));

        let two = build_profile(
            NodeId::T1,
            &InterfererSpec::new(1.0, vec![1.0, 2.0]).unwrap(),
            TiePolicy::Reject,
        )
        .unwrap();
        assert_eq!(two.phi, vec![-1.0, 1.0]);
        assert_eq!((two.gamma1, two.gamma2), (3.0, 14.0));

        let small = build_profile(
            NodeId::R,
            &InterfererSpec::new(0.1, vec![0.1, 1.0]).unwrap(),
            TiePolicy::Reject,
        )
        .unwrap();
        assert!(close(small.xi[0], 0.01, 1e-15) && close(small.xi[1], 0.1, 1e-15));
        assert!(close(small.phi[0], -1.0 / 0.09, 1e-12));
        assert!(close(small.phi[1], 1.0 / 0.09, 1e-12));
        assert!(close(small.gamma1, 0.11, 1e-12));
    }

    #[test]
    fn ties_rejected_or_perturbed() {
        let spec = InterfererSpec::new(1.0, vec![0.5, 0.5, 1.0]).unwrap();
        assert!(matches!(
            build_profile(NodeId::T2, &spec, TiePolicy::Reject),
            Err(Error::Tie {
                node: NodeId::T2,
                ..
            })
        ));
        let p = build_profile(NodeId::T2, &spec, TiePolicy::Perturb).unwrap();
        assert!(p.ill_conditioned);
        assert!(p.xi[1] > p.xi[0]);
    }

    #[test]
    fn zero_power_is_not_analytic() {
        assert!(
            build_profile(NodeId::R, &InterfererSpec::<f64>::none(), TiePolicy::Reject).is_err()
        );
    }

    #[test]
    fn swap_roles_examples() {
        let sym = Scenario::uniform(100.0, 3.0, 0.5, 0.5, 2, 100.0).unwrap();
        assert_eq!(sym.swap_roles(), sym);
        let mut s = sym.clone();
        s.relay_position = 0.3;
        s.omega = 0.6;
        s.interferers.t1.power = 3.0;
        let w = s.swap_roles();
        assert!(close(w.relay_position, 0.7, 1e-15) && close(w.omega, 0.4, 1e-15));
        assert_eq!(w.interferers.t2.power, 3.0);
        assert!(same_up_to_rounding(&w.swap_roles(), &s));
    }

    #[test]
    fn scenario_validation() {
        assert!(Scenario::uniform(0.0, 3.0, 0.5, 0.5, 2, 10.0).is_err());
        assert!(Scenario::uniform(1.0, 1.0, 0.5, 0.5, 2, 10.0).is_err());
        assert!(Scenario::uniform(1.0, 3.0, 1.0, 0.5, 2, 10.0).is_err());
        assert!(Scenario::uniform(1.0, 3.0, 0.5, 0.0, 2, 10.0).is_err());
        assert!(Scenario::uniform(1.0, 3.0, 0.5, 0.5, 0, 10.0).is_err());
        let s = Scenario::uniform(10.0, 3.0, 0.5, 0.5, 2, 10.0).unwrap();
        assert_eq!(s.mean_snrs(), (10.0, 80.0, 80.0));
    }

    #[test]
    fn pdf_integrates_to_one() {
        let spec = InterfererSpec::with_default_variances(5, 0.7).unwrap();
        let p = build_profile(NodeId::T1, &spec, TiePolicy::Reject).unwrap();
        let q = QuadratureSpec {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            ..QuadratureSpec::default()
        };
        let r = integrate(|t: f64| p.pdf(t), 0.0, 50.0 * p.gamma1, &q);
        assert!((r.value - 1.0).abs() < 1e-6);
    }

    #[test]
    fn single_precision_profile() {
        let spec = InterfererSpec::<f32>::with_default_variances(3, 1.0).unwrap();
        let p = build_profile(NodeId::R, &spec, TiePolicy::Reject).unwrap();
        assert!((p.phi_moment(1) - 1.0).abs() < 1e-4);
    }

    fn random_spec() -> impl Strategy<Value = InterfererSpec<f64>> {
        (1usize..=6, -2.0_f64..1.5).prop_flat_map(|(l, log_p)| {
            prop::collection::vec(0.05_f64..1.0, l).prop_map(move |mut v| {
                v.sort_by(f64::total_cmp);
                for k in 1..v.len() {
                    if v[k] < v[k - 1] * 1.05 {
                        v[k] = v[k - 1] * 1.05;
                    }
                }
                InterfererSpec::new(10f64.powf(log_p), v).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn phi_moment_identities(spec in random_spec()) {
            let p = build_profile(NodeId::T1, &spec, TiePolicy::Reject).unwrap();
            let sum: f64 = p.xi.iter().sum();
            let sum_sq: f64 = p.xi.iter().map(|x| x * x).sum();
            prop_assert!(close(p.phi_moment(1), 1.0, 1e-9));
            prop_assert!(close(p.phi_moment(2), sum, 1e-9));
            // ∫ t² Σφ e^{-t/ξ} dt = 2 Σφ ξ³
            prop_assert!(close(2.0 * p.phi_moment(3), sum * sum + sum_sq, 1e-9));
        }

        #[test]
        fn pdf_nonnegative(spec in random_spec(), frac in 0.0_f64..30.0) {
            let p = build_profile(NodeId::R, &spec, TiePolicy::Reject).unwrap();
            prop_assert!(p.pdf(frac * p.gamma1) >= -1e-12 * p.phi.iter().map(|f| f.abs()).fold(0.0, f64::max));
        }

        #[test]
        fn laplace_matches_partial_fractions(spec in random_spec(), a in 0.0_f64..5.0) {
            // ∫ e^{-at} Σφ e^{-t/ξ} dt = Σ φ ξ / (1 + aξ)
            let p = build_profile(NodeId::T2, &spec, TiePolicy::Reject).unwrap();
            let pf: f64 = p.xi.iter().zip(&p.phi).map(|(x, f)| f * x / (1.0 + a * x)).sum();
            prop_assert!(close(pf, p.laplace(a), 1e-9));
        }

        #[test]
        fn swap_is_involution(d in 0.01_f64..0.99, w in 0.01_f64..0.99, p1 in 0.01_f64..10.0) {
            let mut s = Scenario::uniform(100.0, 3.0, d, w, 3, 100.0).unwrap();
            s.interferers.t1.power = p1;
            prop_assert!(same_up_to_rounding(&s.swap_roles().swap_roles(), &s));
        }
    }
}
