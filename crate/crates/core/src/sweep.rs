//! Parameter sweeps producing one CSV row per point.

use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mcsim::{self, McConfig, OutageKind, SinrKind};
use crate::metrics::{self, ModulationConstants};
use crate::optimizer;
use crate::parallel;
use crate::scenario::ScenarioFile;
use crate::sinrcdf::{AnalyticValue, Method};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepVariable {
    #[serde(rename = "P_dB")]
    PowerDb,
    #[serde(rename = "gamma_th")]
    GammaTh,
    #[serde(rename = "omega")]
    Omega,
    #[serde(rename = "D")]
    RelayPosition,
    #[serde(rename = "iterations")]
    Iterations,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::PowerDb => "P_dB",
            SweepVariable::GammaTh => "gamma_th",
            SweepVariable::Omega => "omega",
            SweepVariable::RelayPosition => "D",
            SweepVariable::Iterations => "iterations",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricName {
    OutageSysMc,
    OutageProMc,
    OutageLb,
    OutageApp,
    OutageAsy,
    BerMc,
    BerLb,
    BerApp,
    BerAsy,
    RateMc,
    RateApp,
}

impl MetricName {
    pub fn name(self) -> &'static str {
        match self {
            MetricName::OutageSysMc => "outage_sys_mc",
            MetricName::OutageProMc => "outage_pro_mc",
            MetricName::OutageLb => "outage_lb",
            MetricName::OutageApp => "outage_app",
            MetricName::OutageAsy => "outage_asy",
            MetricName::BerMc => "ber_mc",
            MetricName::BerLb => "ber_lb",
            MetricName::BerApp => "ber_app",
            MetricName::BerAsy => "ber_asy",
            MetricName::RateMc => "rate_mc",
            MetricName::RateApp => "rate_app",
        }
    }

    pub fn is_monte_carlo(self) -> bool {
        matches!(
            self,
            MetricName::OutageSysMc
                | MetricName::OutageProMc
                | MetricName::BerMc
                | MetricName::RateMc
        )
    }

    /// Needs the interference profile at every node, hence nonzero interference.
    pub fn needs_profile(self) -> bool {
        matches!(
            self,
            MetricName::OutageLb
                | MetricName::OutageApp
                | MetricName::BerLb
                | MetricName::BerApp
                | MetricName::RateApp
        )
    }
}

impl fmt::Display for MetricName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRange {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl SweepRange {
    pub fn points(&self) -> Vec<f64> {
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| {
                if i + 1 == self.steps {
                    self.stop
                } else {
                    self.start + (self.stop - self.start) * i as f64 / last
                }
            })
            .collect()
    }
}

/// Run the alternating optimizer at every point and evaluate the metrics at its (ω, D).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeStep {
    pub iterations: usize,
}

fn default_gamma_th() -> f64 {
    7.0
}

fn default_modulation() -> ModulationConstants<f64> {
    ModulationConstants::bpsk()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub range: SweepRange,
    pub metrics: Vec<MetricName>,
    #[serde(default)]
    pub mc: McConfig,
    #[serde(default)]
    pub sinr_kind: SinrKind,
    #[serde(default = "default_gamma_th")]
    pub gamma_th: f64,
    #[serde(default = "default_modulation")]
    pub modulation: ModulationConstants<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimize: Option<OptimizeStep>,
}

impl SweepSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSweep(m));
        if self.range.steps < 2 {
            return bad(format!(
                "range needs at least 2 steps, got {}",
                self.range.steps
            ));
        }
        if !self.range.start.is_finite() || !self.range.stop.is_finite() {
            return bad("range bounds must be finite".into());
        }
        if self.metrics.is_empty() {
            return bad("no metrics requested".into());
        }
        if self.mc.n == 0 && self.metrics.iter().any(|m| m.is_monte_carlo()) {
            return bad("Monte Carlo sample count must be at least 1".into());
        }
        if !(self.gamma_th > 0.0) {
            return bad(format!("gamma_th must be positive, got {}", self.gamma_th));
        }
        ModulationConstants::new(self.modulation.a, self.modulation.b)?;
        if self.variable == SweepVariable::Iterations {
            if self.optimize.is_none() {
                return bad("sweeping iterations requires an optimize step".into());
            }
            if self.range.points().iter().any(|&p| p.round() < 1.0) {
                return bad("iteration counts must be at least 1".into());
            }
        }
        if let Some(step) = self.optimize {
            if step.iterations == 0 {
                return bad("optimize.iterations must be at least 1".into());
            }
        }
        Ok(())
    }

    pub fn header(&self) -> Vec<String> {
        let mut h = vec![self.variable.name().to_string()];
        for m in &self.metrics {
            h.push(m.name().to_string());
            if m.is_monte_carlo() {
                h.push(format!("{}_se", m.name()));
            }
        }
        h
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub variable: SweepVariable,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// One message per analytic cell left as NaN.
    pub failures: Vec<String>,
}

struct Point {
    scenario: crate::Scenario,
    gamma_th: f64,
}

fn prepare(file: &ScenarioFile, spec: &SweepSpec, x: f64) -> Result<Point> {
    let mut f = file.clone();
    let mut gamma_th = spec.gamma_th;
    let mut iterations = spec.optimize.map(|o| o.iterations);
    match spec.variable {
        SweepVariable::PowerDb => f.p_db = x,
        SweepVariable::GammaTh => gamma_th = x,
        SweepVariable::Omega => f.omega = x,
        SweepVariable::RelayPosition => f.d = x,
        SweepVariable::Iterations => iterations = Some(x.round() as usize),
    }
    if !(gamma_th > 0.0) {
        return Err(Error::InvalidSweep(format!(
            "gamma_th must be positive, got {gamma_th}"
        )));
    }
    let mut scenario = f.to_scenario()?;
    if !scenario.fully_interfered() {
        if let Some(m) = spec.metrics.iter().find(|m| m.needs_profile()) {
            return Err(Error::InvalidScenario(format!(
                "{m} needs nonzero interference at every node"
            )));
        }
    }
    if let Some(iters) = iterations {
        let r = optimizer::joint_optimize(&scenario, iters)?;
        scenario.omega = r.omega_opt;
        scenario.relay_position = r.d_opt;
    }
    Ok(Point { scenario, gamma_th })
}

fn analytic(
    name: MetricName,
    x: f64,
    r: Result<AnalyticValue<f64>>,
    failures: &mut Vec<String>,
) -> f64 {
    match r {
        Ok(v) if v.diagnostics.quad_converged && v.value.is_finite() => v.value,
        Ok(v) => {
            failures.push(format!(
                "{name} at {x}: quadrature did not converge (error estimate {:e})",
                v.diagnostics.quad_err
            ));
            f64::NAN
        }
        Err(e) => {
            failures.push(format!("{name} at {x}: {e}"));
            f64::NAN
        }
    }
}

fn evaluate_point(spec: &SweepSpec, x: f64, p: &Point) -> (Vec<f64>, Vec<String>) {
    let s = &p.scenario;
    let g = p.gamma_th;
    let m = &spec.modulation;
    let mut row = vec![x];
    let mut failures = Vec::new();
    for &name in &spec.metrics {
        match name {
            MetricName::OutageSysMc
            | MetricName::OutageProMc
            | MetricName::BerMc
            | MetricName::RateMc => {
                let e = match name {
                    MetricName::OutageSysMc => {
                        mcsim::estimate_outage(s, g, spec.mc, OutageKind::System, spec.sinr_kind)
                    }
                    MetricName::OutageProMc => {
                        mcsim::estimate_outage(s, g, spec.mc, OutageKind::Protocol, spec.sinr_kind)
                    }
                    MetricName::BerMc => mcsim::estimate_sum_ber(s, m, spec.mc, spec.sinr_kind),
                    _ => mcsim::estimate_sum_rate(s, spec.mc, spec.sinr_kind),
                };
                row.push(e.mean);
                row.push(e.stderr);
            }
            MetricName::OutageLb => row.push(analytic(
                name,
                x,
                metrics::protocol_outage(s, g, Method::LowerBound),
                &mut failures,
            )),
            MetricName::OutageApp => row.push(analytic(
                name,
                x,
                metrics::protocol_outage(s, g, Method::Approx),
                &mut failures,
            )),
            MetricName::OutageAsy => row.push(metrics::protocol_outage_asymptotic(s, g).value),
            MetricName::BerLb => row.push(analytic(
                name,
                x,
                metrics::sum_ber(s, m, Method::LowerBound),
                &mut failures,
            )),
            MetricName::BerApp => row.push(analytic(
                name,
                x,
                metrics::sum_ber(s, m, Method::Approx),
                &mut failures,
            )),
            MetricName::BerAsy => row.push(metrics::sum_ber_asymptotic(s, m, g).value),
            MetricName::RateApp => row.push(analytic(
                name,
                x,
                metrics::ergodic_sum_rate(s),
                &mut failures,
            )),
        }
    }
    (row, failures)
}

/// Runs every sweep point. Scenario and sweep errors abort before any point
/// is evaluated; analytic failures become NaN cells listed in `failures`.
pub fn run_sweep(file: &ScenarioFile, spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let points = spec.range.points();
    let prepared = points
        .iter()
        .map(|&x| prepare(file, spec, x))
        .collect::<Result<Vec<_>>>()?;
    let evaluated: Vec<(Vec<f64>, Vec<String>)> = parallel::install(|| {
        points
            .par_iter()
            .zip(prepared.par_iter())
            .map(|(&x, p)| evaluate_point(spec, x, p))
            .collect()
    });
    let mut rows = Vec::with_capacity(points.len());
    let mut failures = Vec::new();
    for (row, f) in evaluated {
        rows.push(row);
        failures.extend(f);
    }
    Ok(SweepResult {
        variable: spec.variable,
        header: spec.header(),
        rows,
        failures,
    })
}

/// Nine significant digits in scientific notation.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else {
        format!("{x:.8e}")
    }
}

impl SweepResult {
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", self.header.join(","))?;
        for row in &self.rows {
            let mut cells = Vec::with_capacity(row.len());
            for (i, &v) in row.iter().enumerate() {
                if i == 0 && self.variable == SweepVariable::Iterations {
                    cells.push(format!("{}", v.round() as i64));
                } else {
                    cells.push(format_float(v));
                }
            }
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("CSV is ASCII")
    }
}
