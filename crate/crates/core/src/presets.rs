//! Named scenario + sweep bundles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::ScenarioFile;
use crate::sweep::SweepSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Preset {
    pub name: String,
    pub version: u32,
    pub description: String,
    pub scenario: ScenarioFile,
    pub sweep: SweepSpec,
}

const SOURCES: [(&str, &str); 7] = [
    ("fig2", include_str!("../presets/fig2.json")),
    ("fig3", include_str!("../presets/fig3.json")),
    ("fig4", include_str!("../presets/fig4.json")),
    ("fig5", include_str!("../presets/fig5.json")),
    ("fig6", include_str!("../presets/fig6.json")),
    ("fig7", include_str!("../presets/fig7.json")),
    ("fig8", include_str!("../presets/fig8.json")),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    SOURCES.iter().map(|(n, _)| *n)
}

pub fn get(name: &str) -> Result<Preset> {
    let (_, text) = SOURCES
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::Parse(format!("unknown preset {name}")))?;
    let preset: Preset =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("preset {name}: {e}")))?;
    preset.sweep.validate()?;
    Ok(preset)
}
