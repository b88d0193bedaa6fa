use proptest::prelude::*;
use twr_core::mcsim::{
    empirical_cdf, estimate_outage, estimate_sum_ber, estimate_sum_rate, sample_draw, sinr,
    DrawStream, McConfig, OutageKind, SinrKind,
};
use twr_core::metrics;
use twr_core::scenario::ScenarioFile;
use twr_core::sinrcdf::Method;
use twr_core::{ChannelDraw, InterfererSpec, ModulationConstants, NodeId, PerNode, Scenario};

const MILLION: McConfig = McConfig {
    n: 1_000_000,
    seed: 1,
};

fn close(actual: f64, expected: f64, rel: f64) -> bool {
    ((actual - expected) / expected).abs() <= rel
}

#[test]
fn anchor_two_interferer_outage() {
    let s = ScenarioFile::uniform(20.0, 3.0, 0.5, 0.5, 2, 20.0)
        .to_scenario()
        .unwrap();
    let e = estimate_outage(&s, 7.0, MILLION, OutageKind::Protocol, SinrKind::MinBound);
    assert!(close(e.mean, 0.010711163109, 1e-9), "{e:?}");
    assert!(close(e.stderr, 1.2225725394526476e-4, 1e-6), "{e:?}");
    let lb = metrics::protocol_outage(&s, 7.0, Method::LowerBound)
        .unwrap()
        .value;
    assert!(e.z_score(lb) < 3.0, "analytic {lb} vs {e:?}");
}

#[test]
fn anchor_five_interferer_ber() {
    let s = ScenarioFile::uniform(25.0, 3.0, 0.5, 0.5, 5, 20.0)
        .to_scenario()
        .unwrap();
    let bpsk = ModulationConstants::bpsk();
    let e = estimate_sum_ber(&s, &bpsk, MILLION, SinrKind::MinBound);
    assert!(close(e.mean, 1.8107548794469138e-4, 1e-9), "{e:?}");
    let lb = metrics::sum_ber(&s, &bpsk, Method::LowerBound)
        .unwrap()
        .value;
    assert!(e.z_score(lb) < 3.0, "analytic {lb} vs {e:?}");
}

#[test]
fn anchor_relay_heavy_rate() {
    let s = ScenarioFile::with_sirs(20.0, 3.0, 0.5, 0.5, 5, [30.0, 30.0, 10.0])
        .to_scenario()
        .unwrap();
    let e = estimate_sum_rate(&s, MILLION, SinrKind::MinBound);
    assert!(close(e.mean, 4.060142546301415, 1e-9), "{e:?}");
}

#[test]
fn sample_moments_match_profile() {
    let s = ScenarioFile::uniform(10.0, 3.0, 0.4, 0.5, 3, 10.0)
        .to_scenario()
        .unwrap();
    let (g0, g1, g2) = s.mean_snrs();
    let profile = s.profile().unwrap();
    let n = 1_000_000;
    let mut stream = DrawStream::new(7, &s);
    let mut sums = [0.0_f64; 4];
    let mut squares = [0.0_f64; 4];
    let mut fourth = 0.0;
    for _ in 0..n {
        let d = sample_draw(&s, &mut stream);
        for (i, x) in [d.gamma0, d.gamma1, d.gamma2, d.gamma_r]
            .into_iter()
            .enumerate()
        {
            sums[i] += x;
            squares[i] += x * x;
        }
        fourth += d.gamma_r.powi(4);
    }
    let nf = n as f64;
    let raw_second: f64 = {
        let xi = &profile.r.xi;
        let sum: f64 = xi.iter().sum();
        sum * sum + xi.iter().map(|x| x * x).sum::<f64>()
    };
    for (i, expected) in [g0, g1, g2, profile.r.gamma1].into_iter().enumerate() {
        let mean = sums[i] / nf;
        let se = ((squares[i] / nf - mean * mean) / nf).sqrt();
        assert!(
            (mean - expected).abs() < 4.0 * se,
            "moment {i}: {mean} vs {expected}"
        );
    }
    let second = squares[3] / nf;
    let se = ((fourth / nf - second * second) / nf).sqrt();
    assert!(
        (second - raw_second).abs() < 4.0 * se,
        "{second} vs {raw_second}"
    );
    assert!((profile.r.gamma2 - raw_second).abs() < 1e-12 * raw_second);
}

#[test]
fn interference_free_cdf_matches_closed_form() {
    let none = InterfererSpec::none();
    let s = Scenario::new(
        5.0,
        3.0,
        0.5,
        0.5,
        PerNode::new(none.clone(), none.clone(), none),
    )
    .unwrap();
    let (g0, g1, g2) = s.mean_snrs();
    // direct link plus the weaker hop: a sum of two independent exponentials
    let a = 1.0 / g0;
    let b = 1.0 / g1 + (1.0 + s.omega1()) / (s.omega2() * g2);
    let grid = [0.5, 1.0, 3.0, 7.0, 15.0];
    let est = empirical_cdf(&s, NodeId::T1, &grid, MILLION, SinrKind::MinBound);
    for (e, &g) in est.iter().zip(&grid) {
        let exact = 1.0 - (b * (-a * g).exp() - a * (-b * g).exp()) / (b - a);
        assert!(e.z_score(exact) < 3.5, "g={g}: {} vs {exact}", e.mean);
    }
}

#[test]
fn outage_limits() {
    let s = ScenarioFile::uniform(10.0, 3.0, 0.5, 0.5, 2, 10.0)
        .to_scenario()
        .unwrap();
    let cfg = McConfig::new(20_000, 3);
    for kind in [
        OutageKind::System,
        OutageKind::Protocol,
        OutageKind::Terminal(NodeId::T2),
    ] {
        assert_eq!(
            estimate_outage(&s, 1e-12, cfg, kind, SinrKind::Exact).mean,
            0.0
        );
        assert_eq!(
            estimate_outage(&s, 1e9, cfg, kind, SinrKind::Exact).mean,
            1.0
        );
    }
}

#[test]
fn seeds_reproduce_and_differ() {
    let s = ScenarioFile::uniform(15.0, 3.0, 0.5, 0.5, 2, 15.0)
        .to_scenario()
        .unwrap();
    let a = estimate_outage(
        &s,
        7.0,
        McConfig::new(50_000, 11),
        OutageKind::System,
        SinrKind::Exact,
    );
    let b = estimate_outage(
        &s,
        7.0,
        McConfig::new(50_000, 11),
        OutageKind::System,
        SinrKind::Exact,
    );
    let c = estimate_outage(
        &s,
        7.0,
        McConfig::new(50_000, 12),
        OutageKind::System,
        SinrKind::Exact,
    );
    assert_eq!(a, b);
    assert_ne!(a.mean, c.mean);
}

#[test]
fn protocol_tracks_system_at_high_power() {
    let gap = |p_db| {
        let s = ScenarioFile::uniform(p_db, 3.0, 0.5, 0.5, 2, 30.0)
            .to_scenario()
            .unwrap();
        let cfg = McConfig::new(400_000, 5);
        let sys = estimate_outage(&s, 7.0, cfg, OutageKind::System, SinrKind::Exact).mean;
        let pro = estimate_outage(&s, 7.0, cfg, OutageKind::Protocol, SinrKind::Exact).mean;
        (pro - sys).abs()
    };
    assert!(gap(25.0) < gap(10.0));
}

#[test]
fn rate_of_silent_links_is_zero() {
    let none = InterfererSpec::none();
    let s = Scenario::new(
        1e-300,
        3.0,
        0.5,
        0.5,
        PerNode::new(none.clone(), none.clone(), none),
    )
    .unwrap();
    assert!(estimate_sum_rate(&s, McConfig::new(1000, 1), SinrKind::Exact).mean < 1e-290);
}

fn draw() -> impl Strategy<Value = ChannelDraw> {
    (
        0.0_f64..50.0,
        0.0_f64..50.0,
        0.0_f64..50.0,
        0.0_f64..5.0,
        0.0_f64..5.0,
        0.0_f64..5.0,
    )
        .prop_map(|(a, b, c, d, e, f)| ChannelDraw {
            gamma0: a,
            gamma1: b,
            gamma2: c,
            gamma_t1: d,
            gamma_t2: e,
            gamma_r: f,
        })
}

proptest! {
    #[test]
    fn sinr_forms_ordered(d in draw(), w in 0.05_f64..0.95) {
        let none = InterfererSpec::none();
        let s = Scenario::new(10.0, 3.0, 0.5, w, PerNode::new(none.clone(), none.clone(), none)).unwrap();
        for t in NodeId::TERMINALS {
            let x = sinr(&d, &s, t);
            prop_assert!(x.exact <= x.harmonic * (1.0 + 1e-15));
            prop_assert!(x.harmonic <= x.min_bound * (1.0 + 1e-15));
            prop_assert!(x.exact >= 0.0);
        }
    }
}
