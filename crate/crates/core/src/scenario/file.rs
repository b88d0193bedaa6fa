use serde::{Deserialize, Serialize};

use super::{default_interferer_variances, InterfererSpec, PerNode, Scenario, TiePolicy};
use crate::error::{Error, Result};
use crate::num::db_to_linear;

/// Interferers at one node as written in a scenario file.
///
/// The interferer power is given either absolutely (`P_I_dB`) or as a
/// signal-to-interference ratio `SIR_dB = P_dB - P_I_dB`, which keeps the
/// ratio fixed when a sweep varies `P_dB`. Omitting both means no
/// interference at that node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterfererFile {
    #[serde(rename = "L")]
    pub count: usize,
    #[serde(rename = "P_I_dB", default, skip_serializing_if = "Option::is_none")]
    pub power_db: Option<f64>,
    #[serde(rename = "SIR_dB", default, skip_serializing_if = "Option::is_none")]
    pub sir_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variances: Option<Vec<f64>>,
}

impl InterfererFile {
    pub fn with_sir(count: usize, sir_db: f64) -> Self {
        Self {
            count,
            power_db: None,
            sir_db: Some(sir_db),
            variances: None,
        }
    }

    fn to_spec(&self, p_db: f64, node: &str) -> Result<InterfererSpec<f64>> {
        let invalid = |msg: String| Err(Error::InvalidScenario(format!("{node}: {msg}")));
        if self.count == 0 {
            return invalid("L must be at least 1".into());
        }
        let variances = match &self.variances {
            Some(v) if v.len() != self.count => {
                return invalid(format!(
                    "{} variances given for L = {}",
                    v.len(),
                    self.count
                ));
            }
            Some(v) => v.clone(),
            None => default_interferer_variances(self.count),
        };
        let power = match (self.power_db, self.sir_db) {
            (Some(_), Some(_)) => return invalid("give either P_I_dB or SIR_dB, not both".into()),
            (Some(db), None) => db_to_linear(db),
            (None, Some(sir)) => db_to_linear(p_db - sir),
            (None, None) => 0.0,
        };
        InterfererSpec::new(power, variances).map_err(|e| match e {
            Error::InvalidScenario(m) => Error::InvalidScenario(format!("{node}: {m}")),
            other => other,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterferersFile {
    #[serde(rename = "T1")]
    pub t1: InterfererFile,
    #[serde(rename = "T2")]
    pub t2: InterfererFile,
    #[serde(rename = "R")]
    pub r: InterfererFile,
}

/// JSON form of a [`Scenario`]; all dB quantities are converted in
/// [`ScenarioFile::to_scenario`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(rename = "P_dB")]
    pub p_db: f64,
    pub v: f64,
    #[serde(rename = "D")]
    pub d: f64,
    pub omega: f64,
    pub interferers: InterferersFile,
    #[serde(default)]
    pub tie_policy: TiePolicy,
}

impl ScenarioFile {
    /// Same interferer count and SIR at all three nodes.
    pub fn uniform(p_db: f64, v: f64, d: f64, omega: f64, count: usize, sir_db: f64) -> Self {
        Self::with_sirs(p_db, v, d, omega, count, [sir_db, sir_db, sir_db])
    }

    /// SIRs given in (T1, T2, R) order.
    pub fn with_sirs(
        p_db: f64,
        v: f64,
        d: f64,
        omega: f64,
        count: usize,
        sir_db: [f64; 3],
    ) -> Self {
        Self {
            p_db,
            v,
            d,
            omega,
            interferers: InterferersFile {
                t1: InterfererFile::with_sir(count, sir_db[0]),
                t2: InterfererFile::with_sir(count, sir_db[1]),
                r: InterfererFile::with_sir(count, sir_db[2]),
            },
            tie_policy: TiePolicy::Reject,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn to_scenario(&self) -> Result<Scenario<f64>> {
        let p_db = self.p_db;
        if !p_db.is_finite() {
            return Err(Error::InvalidScenario(format!(
                "P_dB must be finite, got {p_db}"
            )));
        }
        let interferers = PerNode::new(
            self.interferers.t1.to_spec(p_db, "T1")?,
            self.interferers.t2.to_spec(p_db, "T2")?,
            self.interferers.r.to_spec(p_db, "R")?,
        );
        let mut s = Scenario::new(db_to_linear(p_db), self.v, self.d, self.omega, interferers)?;
        s.tie_policy = self.tie_policy;
        Ok(s)
    }
}
