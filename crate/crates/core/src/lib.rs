//! Performance analysis of interference-limited three-phase two-way
//! amplify-and-forward relaying with a direct terminal-to-terminal link.
//!
//! The crate pairs a seeded Monte Carlo protocol simulator ([`mcsim`]) with
//! analytic evaluators for the per-terminal SINR distribution ([`sinrcdf`]),
//! protocol outage, sum BER and ergodic sum rate ([`metrics`]), and the relay
//! power-split / relay-location optimizers ([`optimizer`]).
//!
//! Every numerical type is generic over the scalar ([`Real`]); the aliases
//! exported at the crate root fix it to `f64`, which is what the CLI and the
//! validation battery use.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod mcsim;
pub mod metrics;
pub mod num;
pub mod optimizer;
pub mod parallel;
pub mod presets;
pub mod scenario;
pub mod sinrcdf;
pub mod specfun;
pub mod sweep;
pub mod validate;

pub use error::{Error, Result};
pub use num::Real;
pub use scenario::{NodeId, PerNode, TiePolicy};
pub use specfun::QuadratureSpec;

pub type Scenario = scenario::Scenario<f64>;
pub type InterfererSpec = scenario::InterfererSpec<f64>;
pub type NodeProfile = scenario::NodeProfile<f64>;
pub type InterferenceProfile = scenario::InterferenceProfile<f64>;
pub type ChannelDraw = mcsim::ChannelDraw<f64>;
pub type SinrTriple = mcsim::SinrTriple<f64>;
pub type CdfContext = sinrcdf::CdfContext<f64>;
pub type SeriesControl = sinrcdf::SeriesControl<f64>;
pub type AnalyticValue = sinrcdf::AnalyticValue<f64>;
pub type ModulationConstants = metrics::ModulationConstants<f64>;
pub type OptimCoefficients = metrics::OptimCoefficients<f64>;
pub type Objective = optimizer::Objective<f64>;
pub type OptResult = optimizer::OptResult<f64>;
