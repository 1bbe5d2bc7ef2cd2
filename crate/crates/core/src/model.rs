//! Market primitives: cost distributions, search-cost accounting, and the
//! validated parameter bundle every solver entry point consumes.

use serde::Serialize;

use crate::quad::GaussLegendre;
use crate::{Error, Result};

/// Probabilities must sum to one within this tolerance; they are then
/// renormalized so downstream expectations use exact weights.
const PROB_SUM_TOL: f64 = 1e-9;

/// How the first price quote is charged.
///
/// Under `FirstFree` the first quote is free and only the second costs `s`;
/// under `AllCostly` every quote costs `s`, which shifts surplus accounting
/// and turns the monopoly-pricing outcome into no trade.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SearchCostMode {
    FirstFree,
    AllCostly,
}

/// Quantile function of an atomless cost law on `[lower, upper]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Quantile {
    /// Uniform law: `Q(u) = lower + u * (upper - lower)`.
    Uniform,
    /// Piecewise-linear interpolation through `(levels, values)` knots.
    /// Levels must start at 0, end at 1, and increase strictly; values must
    /// be nondecreasing and span `[lower, upper]`.
    Table { levels: Vec<f64>, values: Vec<f64> },
}

/// Distribution of the firms' common marginal cost.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum CostDistribution {
    /// Finitely many cost states `costs[k]` with probabilities `probs[k]`.
    Discrete { costs: Vec<f64>, probs: Vec<f64> },
    /// Atomless law on `[lower, upper]` described by its quantile function.
    Continuous {
        lower: f64,
        upper: f64,
        quantile: Quantile,
    },
}

impl CostDistribution {
    /// Discrete law with the given states and probabilities.
    pub fn discrete(costs: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        let dist = CostDistribution::Discrete { costs, probs };
        dist.validate()?;
        Ok(dist.normalized())
    }

    /// Uniform law on `[lower, upper]`.
    pub fn uniform(lower: f64, upper: f64) -> Result<Self> {
        let dist = CostDistribution::Continuous {
            lower,
            upper,
            quantile: Quantile::Uniform,
        };
        dist.validate()?;
        Ok(dist)
    }

    /// Atomless law given by a piecewise-linear quantile table.
    pub fn quantile_table(levels: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let (lower, upper) = match (values.first(), values.last()) {
            (Some(&lo), Some(&hi)) => (lo, hi),
            _ => {
                return Err(Error::InvalidParams(
                    "quantile table needs at least two knots".into(),
                ))
            }
        };
        let dist = CostDistribution::Continuous {
            lower,
            upper,
            quantile: Quantile::Table { levels, values },
        };
        dist.validate()?;
        Ok(dist)
    }

    fn validate(&self) -> Result<()> {
        match self {
            CostDistribution::Discrete { costs, probs } => {
                if costs.is_empty() {
                    return Err(Error::InvalidParams("cost support is empty".into()));
                }
                if costs.len() != probs.len() {
                    return Err(Error::InvalidParams(
                        "costs and probs differ in length".into(),
                    ));
                }
                if costs.iter().any(|c| !c.is_finite() || *c < 0.0) {
                    return Err(Error::InvalidParams(
                        "costs must be finite and nonnegative".into(),
                    ));
                }
                if costs.windows(2).any(|w| w[0] > w[1]) {
                    return Err(Error::InvalidParams("costs must be nondecreasing".into()));
                }
                if probs.iter().any(|p| !p.is_finite() || *p <= 0.0) {
                    return Err(Error::InvalidParams(
                        "probabilities must be strictly positive".into(),
                    ));
                }
                let sum: f64 = probs.iter().sum();
                if (sum - 1.0).abs() > PROB_SUM_TOL {
                    return Err(Error::InvalidParams(format!(
                        "probabilities sum to {sum}, expected 1"
                    )));
                }
            }
            CostDistribution::Continuous {
                lower,
                upper,
                quantile,
            } => {
                if !lower.is_finite() || !upper.is_finite() || *lower < 0.0 || upper <= lower {
                    return Err(Error::InvalidParams(
                        "continuous support needs 0 <= lower < upper".into(),
                    ));
                }
                if let Quantile::Table { levels, values } = quantile {
                    if levels.len() < 2 || levels.len() != values.len() {
                        return Err(Error::InvalidParams(
                            "quantile table needs matching levels and values, length >= 2".into(),
                        ));
                    }
                    if levels[0] != 0.0 || *levels.last().unwrap() != 1.0 {
                        return Err(Error::InvalidParams(
                            "quantile levels must start at 0 and end at 1".into(),
                        ));
                    }
                    if levels.windows(2).any(|w| w[0] >= w[1]) {
                        return Err(Error::InvalidParams(
                            "quantile levels must increase strictly".into(),
                        ));
                    }
                    if values.windows(2).any(|w| w[0] > w[1]) {
                        return Err(Error::InvalidParams(
                            "quantile values must be nondecreasing".into(),
                        ));
                    }
                    if values[0] != *lower || *values.last().unwrap() != *upper {
                        return Err(Error::InvalidParams(
                            "quantile values must span [lower, upper]".into(),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// Rescales discrete probabilities to sum to exactly one.
    fn normalized(self) -> Self {
        match self {
            CostDistribution::Discrete { costs, probs } => {
                let sum: f64 = probs.iter().sum();
                let probs = probs.into_iter().map(|p| p / sum).collect();
                CostDistribution::Discrete { costs, probs }
            }
            other => other,
        }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, CostDistribution::Discrete { .. })
    }

    /// Largest cost in the support.
    pub fn max_cost(&self) -> f64 {
        match self {
            CostDistribution::Discrete { costs, .. } => *costs.last().unwrap(),
            CostDistribution::Continuous { upper, .. } => *upper,
        }
    }

    /// Cost at quantile level `u` in `[0, 1]` (continuous laws only).
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::Domain {
                name: "u",
                range: "[0, 1]",
                value: u,
            });
        }
        match self {
            CostDistribution::Discrete { .. } => Err(Error::ContinuousUnsupported),
            CostDistribution::Continuous {
                lower,
                upper,
                quantile,
            } => Ok(match quantile {
                Quantile::Uniform => lower + u * (upper - lower),
                Quantile::Table { levels, values } => {
                    let i = match levels.iter().position(|&l| l >= u) {
                        Some(0) => return Ok(values[0]),
                        Some(i) => i,
                        None => return Ok(*values.last().unwrap()),
                    };
                    let t = (u - levels[i - 1]) / (levels[i] - levels[i - 1]);
                    values[i - 1] + t * (values[i] - values[i - 1])
                }
            }),
        }
    }

    /// Mean cost. Continuous laws integrate the quantile function with the
    /// supplied Gauss-Legendre rule so every expectation in the crate shares
    /// one discretization.
    pub fn mean(&self, rule: &GaussLegendre) -> f64 {
        match self {
            CostDistribution::Discrete { costs, probs } => costs
                .iter()
                .zip(probs)
                .map(|(c, p)| c * p)
                .sum(),
            CostDistribution::Continuous { .. } => rule.integrate(0.0, 1.0, |u| {
                self.quantile(u).expect("u within [0, 1]")
            }),
        }
    }

    /// State grid used by per-state solves and expectations: the discrete
    /// states with their probabilities, or the Gauss-Legendre nodes of the
    /// quantile transform with their weights.
    pub fn state_grid(&self, rule: &GaussLegendre) -> Vec<(f64, f64)> {
        match self {
            CostDistribution::Discrete { costs, probs } => {
                costs.iter().copied().zip(probs.iter().copied()).collect()
            }
            CostDistribution::Continuous { .. } => rule
                .nodes_on(0.0, 1.0)
                .map(|(u, w)| (self.quantile(u).expect("node within [0, 1]"), w))
                .collect(),
        }
    }
}

/// Validated primitives of one market.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarketParams {
    /// Number of identical firms, at least 2.
    pub n_firms: u32,
    /// Consumers' common valuation; strictly above every cost in the support.
    pub valuation: f64,
    /// Cost of the priced price quote(s).
    pub search_cost: f64,
    /// Law of the firms' common marginal cost.
    pub cost_dist: CostDistribution,
    /// Share of consumers who observe two quotes for free.
    pub shopper_share: f64,
    /// Whether the first quote is free or every quote is priced.
    pub search_cost_mode: SearchCostMode,
}

impl MarketParams {
    /// Builds and validates a parameter bundle with no shoppers and a free
    /// first quote.
    pub fn new(
        n_firms: u32,
        valuation: f64,
        search_cost: f64,
        cost_dist: CostDistribution,
    ) -> Result<Self> {
        Self::with_options(
            n_firms,
            valuation,
            search_cost,
            cost_dist,
            0.0,
            SearchCostMode::FirstFree,
        )
    }

    pub fn with_options(
        n_firms: u32,
        valuation: f64,
        search_cost: f64,
        cost_dist: CostDistribution,
        shopper_share: f64,
        search_cost_mode: SearchCostMode,
    ) -> Result<Self> {
        if n_firms < 2 {
            return Err(Error::InvalidParams(format!(
                "need at least 2 firms, got {n_firms}"
            )));
        }
        if !valuation.is_finite() || valuation <= 0.0 {
            return Err(Error::InvalidParams(
                "valuation must be finite and positive".into(),
            ));
        }
        if !search_cost.is_finite() || search_cost < 0.0 {
            return Err(Error::InvalidParams(
                "search cost must be finite and nonnegative".into(),
            ));
        }
        if !(0.0..1.0).contains(&shopper_share) {
            return Err(Error::InvalidParams(format!(
                "shopper share must lie in [0, 1), got {shopper_share}"
            )));
        }
        cost_dist.validate()?;
        let cost_dist = cost_dist.normalized();
        if valuation <= cost_dist.max_cost() {
            return Err(Error::InvalidParams(
                "valuation must strictly exceed every cost in the support".into(),
            ));
        }
        Ok(MarketParams {
            n_firms,
            valuation,
            search_cost,
            cost_dist,
            shopper_share,
            search_cost_mode,
        })
    }
}

/// Probability in `[0, 1]` that a consumer samples two prices.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct SearchIntensity(f64);

impl SearchIntensity {
    pub fn new(q: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::Domain {
                name: "q",
                range: "[0, 1]",
                value: q,
            });
        }
        Ok(SearchIntensity(q))
    }

    pub fn get(self) -> f64 {
        self.0
    }

    /// True on the open interval where active-search equilibria live.
    pub fn is_active(self) -> bool {
        self.0 > 0.0 && self.0 < 1.0
    }
}
