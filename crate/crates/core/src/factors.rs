//! Closed-form factors of the search equilibrium: the expected gain from a
//! second price quote, the consumer-surplus share of match surplus, and
//! their generalizations to markets with a share of free price comparers
//! ("shoppers"). All are scale-free in surplus: multiply by `v - c` to get
//! money units.
//!
//! Near `q -> 0` the closed forms subtract nearly equal terms, so each
//! factor switches to its power series below `SERIES_CUTOFF`; the truncation
//! error there is below 1e-22, far under f64 resolution.

use crate::{Error, Result};

/// Below this intensity the log-based closed forms lose precision and the
/// series expansions take over.
const SERIES_CUTOFF: f64 = 1e-3;

/// Above this weight the shopper gain factor switches to its asymptotic
/// expansion in `1/weight` to avoid cancellation against the constant 2.
const LARGE_WEIGHT_CUTOFF: f64 = 1e3;

fn check_open_unit(name: &'static str, x: f64) -> Result<()> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::Domain {
            name,
            range: "(0, 1)",
            value: x,
        });
    }
    Ok(())
}

/// `ln((1 + q) / (1 - q))`, accurate across the whole open interval.
fn log_ratio(q: f64) -> f64 {
    (2.0 * q / (1.0 - q)).ln_1p()
}

/// Odd series `q/3 + q^3/5 + q^5/7 + q^7/9`, the tail of `ln((1+q)/(1-q))/2 - q`
/// divided by `q^2`.
fn odd_tail(q: f64) -> f64 {
    let q2 = q * q;
    q * (1.0 / 3.0 + q2 * (1.0 / 5.0 + q2 * (1.0 / 7.0 + q2 / 9.0)))
}

/// Expected gain from a second price quote, per unit of match surplus, when
/// everyone else samples twice with probability `q`:
///
/// `A(q) = [ln((1+q)/(1-q)) - 2q] * (1-q) / (2 q^2)`.
///
/// Positive on `(0, 1)`, vanishing in the limit at both ends, strictly
/// concave with a single interior maximum.
pub fn benefit_factor(q: f64) -> Result<f64> {
    check_open_unit("q", q)?;
    Ok(benefit_factor_unchecked(q))
}

pub(crate) fn benefit_factor_unchecked(q: f64) -> f64 {
    if q < SERIES_CUTOFF {
        // A(q) = (1 - q) * (q/3 + q^3/5 + q^5/7 + ...)
        (1.0 - q) * odd_tail(q)
    } else {
        (log_ratio(q) - 2.0 * q) * (1.0 - q) / (2.0 * q * q)
    }
}

/// Derivative of [`benefit_factor`] in `q`:
///
/// `A'(q) = [2q(2 + q) - (2 + q - q^2) ln((1+q)/(1-q))] / (2 q^3 (1 + q))`.
///
/// Positive near 0 (limit 1/3), negative near 1, with a single zero at the
/// peak intensity.
pub fn benefit_factor_deriv(q: f64) -> Result<f64> {
    check_open_unit("q", q)?;
    Ok(benefit_factor_deriv_unchecked(q))
}

pub(crate) fn benefit_factor_deriv_unchecked(q: f64) -> f64 {
    if q < SERIES_CUTOFF {
        // d/dq [(1 - q) S(q)] = (1 - q) S'(q) - S(q) with S the odd tail.
        let q2 = q * q;
        let s = odd_tail(q);
        let ds = 1.0 / 3.0 + q2 * (3.0 / 5.0 + q2 * (5.0 / 7.0 + q2 * (7.0 / 9.0)));
        (1.0 - q) * ds - s
    } else {
        let l = log_ratio(q);
        (2.0 * q * (2.0 + q) - (2.0 + q - q * q) * l) / (2.0 * q * q * q * (1.0 + q))
    }
}

/// Consumer surplus per unit of match surplus in an active-search
/// equilibrium, before search costs under costly-first-quote accounting:
///
/// `B(q) = 1 - ((1 - q) / (2q)) ln((1+q)/(1-q))`.
///
/// Strictly increasing from 0 to 1 on `(0, 1)`.
pub fn cs_factor(q: f64) -> Result<f64> {
    check_open_unit("q", q)?;
    if q < SERIES_CUTOFF {
        // B(q) = q - (1 - q) * q * (q/3 + q^3/5 + ...)
        Ok(q - (1.0 - q) * q * odd_tail(q))
    } else {
        Ok(1.0 - (1.0 - q) / (2.0 * q) * log_ratio(q))
    }
}

/// Relative weight of captive demand in the price law, generalized to a
/// share `lambda` of shoppers who always compare two quotes:
///
/// `mu(q, lambda) = (1 - lambda)(1 - q) / (2 [(1 - lambda) q + lambda])`.
///
/// At `lambda = 0` this is the familiar `(1 - q) / (2q)`. Smaller weight
/// means fiercer competition and a price law concentrated near cost.
pub fn shopper_weight(q: f64, lambda: f64) -> Result<f64> {
    check_open_unit("q", q)?;
    check_shopper_share(lambda)?;
    Ok((1.0 - lambda) * (1.0 - q) / (2.0 * ((1.0 - lambda) * q + lambda)))
}

fn check_shopper_share(lambda: f64) -> Result<()> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::Domain {
            name: "lambda",
            range: "[0, 1)",
            value: lambda,
        });
    }
    Ok(())
}

/// Inverts [`shopper_weight`]: the sampling intensity that produces weight
/// `mu` when the shopper share is `lambda`.
pub fn search_intensity_from_weight(mu: f64, lambda: f64) -> Result<f64> {
    if !(mu > 0.0) {
        return Err(Error::Domain {
            name: "mu",
            range: "(0, inf)",
            value: mu,
        });
    }
    check_shopper_share(lambda)?;
    let d = 1.0 - lambda;
    let q = (d - 2.0 * mu * lambda) / (d * (1.0 + 2.0 * mu));
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Domain {
            name: "mu",
            range: "(0, (1 - lambda) / (2 lambda))",
            value: mu,
        });
    }
    Ok(q)
}

/// Expected gain from a second quote, per unit of match surplus, as a
/// function of the price-law weight alone:
///
/// `G(mu) = mu [(1 + 2 mu) ln(1 + 1/mu) - 2]`.
///
/// Composing with the zero-shopper weight recovers [`benefit_factor`]:
/// `G(mu(q, 0)) = A(q)`.
pub fn shopper_benefit_factor(mu: f64) -> Result<f64> {
    if !(mu > 0.0) {
        return Err(Error::Domain {
            name: "mu",
            range: "(0, inf)",
            value: mu,
        });
    }
    if mu > LARGE_WEIGHT_CUTOFF {
        // G = t/6 - t^2/6 + 3t^3/20 - 2t^4/15 + 5t^5/42 + O(t^6), t = 1/mu.
        let t = 1.0 / mu;
        Ok(t * (1.0 / 6.0
            + t * (-1.0 / 6.0 + t * (3.0 / 20.0 + t * (-2.0 / 15.0 + t * (5.0 / 42.0))))))
    } else {
        Ok(mu * ((1.0 + 2.0 * mu) * (1.0 / mu).ln_1p() - 2.0))
    }
}
