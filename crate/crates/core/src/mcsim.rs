//! Seeded Monte Carlo simulation of the three-phase protocol.
//!
//! Draw `j` of a run is a pure function of `(seed, j)`: the ChaCha stream is
//! positioned at a fixed word offset per draw, so estimates are
//! bit-identical for any worker count.

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::metrics::ModulationConstants;
use crate::num::Real;
use crate::parallel;
use crate::scenario::{NodeId, Scenario};
use crate::specfun::erfc;

/// One fading realization: desired-link powers and total interference power per node.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ChannelDraw<T> {
    pub gamma0: T,
    pub gamma1: T,
    pub gamma2: T,
    pub gamma_t1: T,
    pub gamma_t2: T,
    pub gamma_r: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SinrKind {
    /// MRC output SINR including the relay-noise correction term.
    Exact,
    /// Harmonic-mean approximation of the relayed link.
    Harmonic,
    /// Relayed link bounded by the weaker hop.
    #[default]
    MinBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SinrTriple<T> {
    pub exact: T,
    pub harmonic: T,
    pub min_bound: T,
}

impl<T: Copy> SinrTriple<T> {
    pub fn get(&self, kind: SinrKind) -> T {
        match kind {
            SinrKind::Exact => self.exact,
            SinrKind::Harmonic => self.harmonic,
            SinrKind::MinBound => self.min_bound,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricEstimate<T> {
    pub mean: T,
    pub stderr: T,
    pub n: u64,
    pub seed: u64,
}

impl<T: Real> MetricEstimate<T> {
    /// |mean - value| in units of the standard error.
    pub fn z_score(&self, value: T) -> T {
        let d = (self.mean - value).abs();
        if self.stderr > T::zero() {
            d / self.stderr
        } else if d == T::zero() {
            T::zero()
        } else {
            T::infinity()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    pub n: u64,
    pub seed: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            n: 1_000_000,
            seed: 1,
        }
    }
}

impl McConfig {
    pub fn new(n: u64, seed: u64) -> Self {
        Self { n, seed }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutageKind {
    /// Pr(either terminal below threshold).
    System,
    /// p₁ + p₂ - p₁p₂ from the per-terminal outage estimates.
    Protocol,
    Terminal(NodeId),
}

/// Counter-positioned random stream; every draw consumes the same number of words.
pub struct DrawStream {
    rng: ChaCha8Rng,
    words_per_draw: u128,
}

impl DrawStream {
    pub fn new<T: Real>(seed: u64, s: &Scenario<T>) -> Self {
        let exponentials = 3 + NodeId::ALL
            .iter()
            .map(|&n| s.interferers.get(n).count())
            .sum::<usize>();
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            words_per_draw: 2 * exponentials as u128,
        }
    }

    /// Positions the stream at the start of draw `index`.
    pub fn seek(&mut self, index: u64) {
        self.rng.set_word_pos(index as u128 * self.words_per_draw);
    }

    fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    fn exponential(&mut self, mean: f64) -> f64 {
        -mean * (-self.uniform()).ln_1p()
    }
}

struct Sampler {
    means: [f64; 3],
    xi: [Vec<f64>; 3],
}

impl Sampler {
    fn new<T: Real>(s: &Scenario<T>) -> Self {
        let (g0, g1, g2) = s.mean_snrs();
        let xi = |n: NodeId| {
            s.interferers
                .get(n)
                .xi()
                .into_iter()
                .map(T::as_f64)
                .collect()
        };
        Self {
            means: [g0.as_f64(), g1.as_f64(), g2.as_f64()],
            xi: [xi(NodeId::T1), xi(NodeId::T2), xi(NodeId::R)],
        }
    }

    fn draw<T: Real>(&self, stream: &mut DrawStream) -> ChannelDraw<T> {
        let g = self.means.map(|m| stream.exponential(m));
        let mut total = [0.0; 3];
        for (t, xi) in total.iter_mut().zip(&self.xi) {
            for &x in xi {
                *t += stream.exponential(x);
            }
        }
        ChannelDraw {
            gamma0: T::of(g[0]),
            gamma1: T::of(g[1]),
            gamma2: T::of(g[2]),
            gamma_t1: T::of(total[0]),
            gamma_t2: T::of(total[1]),
            gamma_r: T::of(total[2]),
        }
    }
}

/// Draws the next realization from `stream`.
pub fn sample_draw<T: Real>(s: &Scenario<T>, stream: &mut DrawStream) -> ChannelDraw<T> {
    Sampler::new(s).draw(stream)
}

pub(crate) type SinrFn<T> = fn(&ChannelDraw<T>, &Scenario<T>, NodeId) -> SinrTriple<T>;

/// Per-terminal SINR of one realization in its exact, harmonic and min-bound forms.
///
/// T2's SINR follows from T1's by exchanging the two uplinks, the
/// terminal interference, and the relay power shares.
pub fn sinr<T: Real>(d: &ChannelDraw<T>, s: &Scenario<T>, terminal: NodeId) -> SinrTriple<T> {
    sinr_parts(d, s, terminal, true)
}

pub(crate) fn sinr_parts<T: Real>(
    d: &ChannelDraw<T>,
    s: &Scenario<T>,
    terminal: NodeId,
    relay_sees_terminal_interference: bool,
) -> SinrTriple<T> {
    let one = T::one();
    // (first hop gain, second hop gain, own interference, forward share, other share)
    let (g_up, g_down, own, w_fwd, w_other) = match terminal {
        NodeId::T2 => (d.gamma2, d.gamma1, d.gamma_t2, s.omega1(), s.omega2()),
        _ => (d.gamma1, d.gamma2, d.gamma_t1, s.omega2(), s.omega1()),
    };
    let direct = d.gamma0 / (own + one);
    let up = g_up / (own + one);
    let leak = if relay_sees_terminal_interference {
        w_other * own
    } else {
        T::zero()
    };
    let relay_den = d.gamma_r + leak + w_other + one;
    let down = w_fwd * g_down / relay_den;
    let (harmonic, exact) = if up + down > T::zero() {
        let correction = (d.gamma_r + one) / relay_den;
        (
            up * down / (up + down),
            up * down / (up + down + correction),
        )
    } else {
        (T::zero(), T::zero())
    };
    SinrTriple {
        exact: direct + exact,
        harmonic: direct + harmonic,
        min_bound: direct + up.min(down),
    }
}

const CHUNK: u64 = 16_384;

/// Sums `width` per-draw statistics over draws `0..cfg.n`, chunked and merged in index order.
fn accumulate<T, F>(s: &Scenario<T>, cfg: McConfig, width: usize, per_draw: F) -> Vec<f64>
where
    T: Real,
    F: Fn(&ChannelDraw<T>, &mut [f64]) + Sync,
{
    let sampler = Sampler::new(s);
    let chunks = cfg.n.div_ceil(CHUNK);
    let partials: Vec<Vec<f64>> = parallel::install(|| {
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let start = c * CHUNK;
                let end = (start + CHUNK).min(cfg.n);
                let mut stream = DrawStream::new(cfg.seed, s);
                stream.seek(start);
                let mut acc = vec![0.0; width];
                for _ in start..end {
                    let d = sampler.draw::<T>(&mut stream);
                    per_draw(&d, &mut acc);
                }
                acc
            })
            .collect()
    });
    partials.into_iter().fold(vec![0.0; width], |mut total, p| {
        for (t, v) in total.iter_mut().zip(p) {
            *t += v;
        }
        total
    })
}

fn estimate<T: Real>(sum: f64, sum_sq: f64, cfg: McConfig) -> MetricEstimate<T> {
    let n = cfg.n as f64;
    let mean = sum / n;
    let stderr = if cfg.n > 1 {
        ((sum_sq - n * mean * mean).max(0.0) / (n - 1.0) / n).sqrt()
    } else {
        0.0
    };
    MetricEstimate {
        mean: T::of(mean),
        stderr: T::of(stderr),
        n: cfg.n,
        seed: cfg.seed,
    }
}

fn indicator<T: Real>(count: f64, cfg: McConfig) -> MetricEstimate<T> {
    // for a 0/1 statistic the sum of squares equals the sum
    estimate(count, count, cfg)
}

/// Outage probability at threshold `gamma_th`.
pub fn estimate_outage<T: Real>(
    s: &Scenario<T>,
    gamma_th: T,
    cfg: McConfig,
    kind: OutageKind,
    sinr_kind: SinrKind,
) -> MetricEstimate<T> {
    estimate_outage_with(s, gamma_th, cfg, kind, sinr_kind, sinr)
}

pub(crate) fn estimate_outage_with<T: Real>(
    s: &Scenario<T>,
    gamma_th: T,
    cfg: McConfig,
    kind: OutageKind,
    sinr_kind: SinrKind,
    sinr_fn: SinrFn<T>,
) -> MetricEstimate<T> {
    assert!(
        kind != OutageKind::Terminal(NodeId::R),
        "outage is defined at the terminals only"
    );
    // [T1 out, T2 out, both out, either out]
    let acc = accumulate(s, cfg, 4, |d, acc| {
        let o1 = sinr_fn(d, s, NodeId::T1).get(sinr_kind) < gamma_th;
        let o2 = sinr_fn(d, s, NodeId::T2).get(sinr_kind) < gamma_th;
        acc[0] += o1 as u8 as f64;
        acc[1] += o2 as u8 as f64;
        acc[2] += (o1 && o2) as u8 as f64;
        acc[3] += (o1 || o2) as u8 as f64;
    });
    match kind {
        OutageKind::Terminal(NodeId::T2) => indicator(acc[1], cfg),
        OutageKind::Terminal(_) => indicator(acc[0], cfg),
        OutageKind::System => indicator(acc[3], cfg),
        OutageKind::Protocol => {
            let n = cfg.n as f64;
            let (p1, p2, p12) = (acc[0] / n, acc[1] / n, acc[2] / n);
            let mean = p1 + p2 - p1 * p2;
            // delta method on (p1, p2) with their sample covariance
            let (g1, g2) = (1.0 - p2, 1.0 - p1);
            let var = g1 * g1 * p1 * (1.0 - p1)
                + g2 * g2 * p2 * (1.0 - p2)
                + 2.0 * g1 * g2 * (p12 - p1 * p2);
            let stderr = if cfg.n > 1 {
                (var.max(0.0) / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            MetricEstimate {
                mean: T::of(mean),
                stderr: T::of(stderr),
                n: cfg.n,
                seed: cfg.seed,
            }
        }
    }
}

/// Empirical per-terminal CDF Pr(Υ < γ) at every threshold, from one shared set of draws.
pub fn empirical_cdf<T: Real>(
    s: &Scenario<T>,
    terminal: NodeId,
    thresholds: &[T],
    cfg: McConfig,
    sinr_kind: SinrKind,
) -> Vec<MetricEstimate<T>> {
    empirical_cdf_with(s, terminal, thresholds, cfg, sinr_kind, sinr)
}

pub(crate) fn empirical_cdf_with<T: Real>(
    s: &Scenario<T>,
    terminal: NodeId,
    thresholds: &[T],
    cfg: McConfig,
    sinr_kind: SinrKind,
    sinr_fn: SinrFn<T>,
) -> Vec<MetricEstimate<T>> {
    let acc = accumulate(s, cfg, thresholds.len(), |d, acc| {
        let y = sinr_fn(d, s, terminal).get(sinr_kind);
        for (a, &g) in acc.iter_mut().zip(thresholds) {
            if y < g {
                *a += 1.0;
            }
        }
    });
    acc.into_iter().map(|c| indicator(c, cfg)).collect()
}

fn ber_kernel<T: Real>(m: &ModulationConstants<T>, y: T) -> f64 {
    (m.a * erfc((m.b * y).sqrt())).as_f64()
}

fn rate_kernel<T: Real>(y: T) -> f64 {
    y.as_f64().ln_1p() / std::f64::consts::LN_2 / 3.0
}

/// Sum over both terminals of the conditional bit error probability a·erfc(√(bΥ)).
pub fn estimate_sum_ber<T: Real>(
    s: &Scenario<T>,
    modulation: &ModulationConstants<T>,
    cfg: McConfig,
    sinr_kind: SinrKind,
) -> MetricEstimate<T> {
    estimate_sum_ber_with(s, modulation, cfg, sinr_kind, sinr)
}

pub(crate) fn estimate_sum_ber_with<T: Real>(
    s: &Scenario<T>,
    modulation: &ModulationConstants<T>,
    cfg: McConfig,
    sinr_kind: SinrKind,
    sinr_fn: SinrFn<T>,
) -> MetricEstimate<T> {
    let acc = accumulate(s, cfg, 2, |d, acc| {
        let v = ber_kernel(modulation, sinr_fn(d, s, NodeId::T1).get(sinr_kind))
            + ber_kernel(modulation, sinr_fn(d, s, NodeId::T2).get(sinr_kind));
        acc[0] += v;
        acc[1] += v * v;
    });
    estimate(acc[0], acc[1], cfg)
}

/// Sum over both terminals of (1/3)·log₂(1 + Υ).
pub fn estimate_sum_rate<T: Real>(
    s: &Scenario<T>,
    cfg: McConfig,
    sinr_kind: SinrKind,
) -> MetricEstimate<T> {
    estimate_sum_rate_with(s, cfg, sinr_kind, sinr)
}

pub(crate) fn estimate_sum_rate_with<T: Real>(
    s: &Scenario<T>,
    cfg: McConfig,
    sinr_kind: SinrKind,
    sinr_fn: SinrFn<T>,
) -> MetricEstimate<T> {
    let acc = accumulate(s, cfg, 2, |d, acc| {
        let v = rate_kernel(sinr_fn(d, s, NodeId::T1).get(sinr_kind))
            + rate_kernel(sinr_fn(d, s, NodeId::T2).get(sinr_kind));
        acc[0] += v;
        acc[1] += v * v;
    });
    estimate(acc[0], acc[1], cfg)
}
