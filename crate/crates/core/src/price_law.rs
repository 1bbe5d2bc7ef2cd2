//! The mixed-strategy price law of an active-search equilibrium.
//!
//! With captive-demand weight `mu`, each firm draws its price from the
//! atomless law on `[support_low, valuation]` whose decumulative
//! distribution equates profit across the support:
//!
//! `ccdf(p) = mu * ((valuation - cost) / (p - cost) - 1)`.

use serde::Serialize;

use crate::factors::shopper_weight;
use crate::{Error, Result};

/// Slack for the ccdf domain check, relative to the surplus scale; prices a
/// few ulps outside the support from round-tripping still evaluate.
const EDGE_SLACK: f64 = 1e-9;

/// Equal-profit price law of one cost state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PriceLaw {
    /// Marginal cost in this state.
    pub cost: f64,
    /// Captive-demand weight `mu`; see [`crate::factors::shopper_weight`].
    pub weight: f64,
    /// Lower support endpoint `cost + weight * (valuation - cost) / (weight + 1)`.
    pub support_low: f64,
    /// Upper support endpoint, the consumers' valuation.
    pub support_high: f64,
}

impl PriceLaw {
    /// Law with an explicit weight.
    pub fn new(cost: f64, weight: f64, valuation: f64) -> Result<Self> {
        if !(weight > 0.0) || !weight.is_finite() {
            return Err(Error::Domain {
                name: "weight",
                range: "(0, inf)",
                value: weight,
            });
        }
        if !(valuation > cost) {
            return Err(Error::InvalidParams(
                "valuation must exceed cost".into(),
            ));
        }
        Ok(PriceLaw {
            cost,
            weight,
            support_low: cost + weight * (valuation - cost) / (weight + 1.0),
            support_high: valuation,
        })
    }

    /// Law induced by sampling intensity `q` and shopper share `lambda`.
    pub fn from_intensity(cost: f64, q: f64, lambda: f64, valuation: f64) -> Result<Self> {
        Self::new(cost, shopper_weight(q, lambda)?, valuation)
    }

    /// Price at decumulative level `x` in `[0, 1]`:
    /// `p(x) = weight * (valuation - cost) / (weight + x) + cost`.
    /// `x = 0` gives the valuation, `x = 1` the lower support endpoint.
    pub fn quantile(&self, x: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain {
                name: "x",
                range: "[0, 1]",
                value: x,
            });
        }
        Ok(self.weight * (self.support_high - self.cost) / (self.weight + x) + self.cost)
    }

    /// Probability a price draw strictly exceeds `p`, for `p` in the support.
    pub fn ccdf(&self, p: f64) -> Result<f64> {
        let scale = self.support_high - self.cost;
        if !(p >= self.support_low - EDGE_SLACK * scale)
            || !(p <= self.support_high + EDGE_SLACK * scale)
        {
            return Err(Error::Domain {
                name: "p",
                range: "[support_low, valuation]",
                value: p,
            });
        }
        let x = self.weight * (scale / (p - self.cost) - 1.0);
        Ok(x.clamp(0.0, 1.0))
    }

    /// Mean of the law: `weight * (valuation - cost) * ln(1 + 1/weight) + cost`.
    pub fn mean(&self) -> f64 {
        self.weight * (self.support_high - self.cost) * (1.0 / self.weight).ln_1p() + self.cost
    }

    /// Mean of the minimum of two independent draws.
    /// `E[min] = cost + 2 weight (v - cost) [1 - weight ln(1 + 1/weight)]`
    /// follows from integrating the squared ccdf over the support.
    pub fn mean_min_of_two(&self) -> f64 {
        let w = self.weight;
        let surplus = self.support_high - self.cost;
        self.cost + 2.0 * w * surplus * (1.0 - w * (1.0 / w).ln_1p())
    }
}
