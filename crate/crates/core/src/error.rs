use thiserror::Error;

use crate::scenario::NodeId;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{name} = {value} is outside its domain ({expected})")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("interferer means at {node:?} coincide (xi = {value}); distinct means are required")]
    Tie { node: NodeId, value: f64 },

    #[error(
        "interference profile at {node:?} is numerically unusable: sum(phi*xi) = {normalization}"
    )]
    Normalization { node: NodeId, normalization: f64 },

    #[error("quadrature did not converge: value {value}, error estimate {error}")]
    NonConvergence { value: f64, error: f64 },

    #[error("CDF series did not converge at gamma = {gamma} within {terms} terms")]
    SeriesDivergence { gamma: f64, terms: usize },

    #[error(
        "relay-location ratio is degenerate (numerator {numerator}, denominator {denominator})"
    )]
    DegenerateRatio { numerator: f64, denominator: f64 },

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("invalid sweep: {0}")]
    InvalidSweep(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(name: &'static str, value: f64, expected: &'static str) -> Result<T> {
    Err(Error::Domain {
        name,
        value,
        expected,
    })
}
