//! Oligopoly pricing under simultaneous consumer search with production-cost
//! uncertainty.
//!
//! A fixed number of identical firms sell a homogeneous good to unit-demand
//! consumers. Each consumer commits in advance to sampling one or two prices
//! (simultaneous, fixed-sample-size search); the second quote costs `s`. The
//! firms' common marginal cost is drawn from a known distribution, and the
//! market can operate in two information regimes: consumers either observe
//! the realized cost before choosing how many prices to sample, or they do
//! not. In every active-search equilibrium firms mix over prices, consumers
//! mix over sampling once or twice, and the model admits closed forms for
//! the price law, the gain from a second quote, and consumer surplus.
//!
//! The crate solves for all equilibria of both regimes (including the
//! monopoly-pricing outcome where nobody compares prices), evaluates and
//! compares welfare across regimes, simulates the market with a seeded
//! deterministic Monte Carlo engine, and traces the unraveling argument for
//! voluntary cost disclosure.

pub mod factors;
pub mod model;
pub mod oracle;
pub mod price_law;
pub mod quad;
pub mod sim;
pub mod solver;
pub mod welfare;

use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A scalar argument fell outside its mathematical domain.
    #[error("{name} must lie in {range}, got {value}")]
    Domain {
        name: &'static str,
        range: &'static str,
        value: f64,
    },
    /// Market parameters or options violate a structural invariant.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    /// The operation is defined for discrete cost distributions only.
    #[error("operation requires a discrete cost distribution")]
    ContinuousUnsupported,
    /// Too few samples to estimate a standard error.
    #[error("too few samples to estimate a standard error")]
    DegenerateStandardError,
}

pub type Result<T> = std::result::Result<T, Error>;

pub use model::{CostDistribution, MarketParams, SearchCostMode, SearchIntensity};
pub use price_law::PriceLaw;
pub use sim::{SimulationConfig, SimulationResult};
pub use solver::{EquilibriumSet, SolverOptions, Thresholds};
pub use welfare::WelfareReport;
