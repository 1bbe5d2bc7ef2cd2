//! Welfare accounting per cost state and the cross-regime comparison
//! report: consumer surplus, per-firm profit, total surplus, market power,
//! and the four orderings between the unobserved-cost and observed-cost
//! regimes.

use serde::Serialize;

use crate::factors::cs_factor;
use crate::model::{MarketParams, SearchCostMode};
use crate::solver::{self, SolverOptions};
use crate::{Error, Result};

/// What the market settles on in one cost state: the no-comparison outcome
/// or an active-search equilibrium at intensity `q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Outcome {
    Diamond,
    Active { q: f64 },
}

fn check_surplus(cost: f64, valuation: f64) -> Result<f64> {
    if !(valuation > cost) {
        return Err(Error::InvalidParams(
            "valuation must exceed cost".into(),
        ));
    }
    Ok(valuation - cost)
}

fn check_active_q(q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Domain {
            name: "q",
            range: "(0, 1)",
            value: q,
        });
    }
    Ok(q)
}

/// Expected consumer surplus per consumer, net of search spending.
///
/// Active search: `B(q) (v - c)`, minus one quote's cost when every quote
/// is priced (the indifference between one and two quotes nets the second
/// quote out already). No-comparison outcome: zero either way, because
/// pricing at the valuation extracts everything and all-costly quoting
/// shuts trade down entirely.
pub fn consumer_surplus(
    outcome: Outcome,
    cost: f64,
    valuation: f64,
    search_cost: f64,
    mode: SearchCostMode,
) -> Result<f64> {
    let surplus = check_surplus(cost, valuation)?;
    Ok(match outcome {
        Outcome::Diamond => 0.0,
        Outcome::Active { q } => {
            let gross = cs_factor(check_active_q(q)?)? * surplus;
            match mode {
                SearchCostMode::FirstFree => gross,
                SearchCostMode::AllCostly => gross - search_cost,
            }
        }
    })
}

/// Expected profit per firm. Active search: `(1 - q)(v - c) / n`; each firm
/// serves its captive one-quote demand at the equal-profit level. The
/// no-comparison outcome splits the whole surplus with a free first quote
/// and earns nothing when quoting is all-costly (no trade).
pub fn firm_profit(
    outcome: Outcome,
    cost: f64,
    valuation: f64,
    n_firms: u32,
    mode: SearchCostMode,
) -> Result<f64> {
    let surplus = check_surplus(cost, valuation)?;
    if n_firms < 2 {
        return Err(Error::InvalidParams("need at least 2 firms".into()));
    }
    let n = f64::from(n_firms);
    Ok(match outcome {
        Outcome::Diamond => match mode {
            SearchCostMode::FirstFree => surplus / n,
            SearchCostMode::AllCostly => 0.0,
        },
        Outcome::Active { q } => (1.0 - check_active_q(q)?) * surplus / n,
    })
}

/// Total surplus: match surplus minus resources burned on search.
/// Active search burns `q s` extra quotes (plus everyone's first quote
/// under all-costly accounting); the no-comparison outcome burns nothing
/// and trades only when the first quote is free.
pub fn total_surplus(
    outcome: Outcome,
    cost: f64,
    valuation: f64,
    search_cost: f64,
    mode: SearchCostMode,
) -> Result<f64> {
    let surplus = check_surplus(cost, valuation)?;
    if !(search_cost >= 0.0) {
        return Err(Error::Domain {
            name: "search_cost",
            range: "[0, inf)",
            value: search_cost,
        });
    }
    Ok(match (outcome, mode) {
        (Outcome::Diamond, SearchCostMode::FirstFree) => surplus,
        (Outcome::Diamond, SearchCostMode::AllCostly) => 0.0,
        (Outcome::Active { q }, SearchCostMode::FirstFree) => {
            surplus - check_active_q(q)? * search_cost
        }
        (Outcome::Active { q }, SearchCostMode::AllCostly) => {
            surplus - (1.0 + check_active_q(q)?) * search_cost
        }
    })
}

/// Lerner-style markup index of the price law: mean margin over marginal
/// cost per unit surplus, `(1 - q) / (2q)`. Falls in `q` from unbounded
/// monopoly power toward marginal-cost pricing.
pub fn market_power(q: f64) -> Result<f64> {
    let q = check_active_q(q)?;
    Ok((1.0 - q) / (2.0 * q))
}

/// Welfare of one regime (or one observed state).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OutcomeRecord {
    /// Whether search is active; `q` is zero otherwise.
    pub active: bool,
    pub q: f64,
    pub consumer_surplus: f64,
    pub firm_profit: f64,
    pub total_surplus: f64,
    /// Markup index, absent in the no-comparison outcome.
    pub market_power: Option<f64>,
}

/// Welfare of one observed cost state with its probability weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StateWelfare {
    pub state: usize,
    pub cost: f64,
    pub weight: f64,
    pub record: OutcomeRecord,
}

/// Probability-weighted means across observed states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpectedRecord {
    pub q: f64,
    pub consumer_surplus: f64,
    pub firm_profit: f64,
    pub total_surplus: f64,
}

/// One cross-regime comparison: the unobserved-regime value, the expected
/// observed-regime value, their signed gap (`unobserved - observed_mean`),
/// and whether the pooling ordering holds. Pooling concentrates search
/// on the average state, so when every state is active it raises search
/// and consumer surplus (positive gap) and depresses profit and total
/// surplus (negative gap).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrderingCheck {
    pub unobserved: f64,
    pub observed_mean: f64,
    pub gap: f64,
    pub holds: bool,
}

impl OrderingCheck {
    fn new(unobserved: f64, observed_mean: f64, pooling_raises: bool) -> Self {
        let gap = unobserved - observed_mean;
        OrderingCheck {
            unobserved,
            observed_mean,
            gap,
            holds: if pooling_raises { gap > 0.0 } else { gap < 0.0 },
        }
    }
}

/// How the two regimes compare in kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum InformationClass {
    /// Active search in the unobserved regime and in every observed state.
    BothActive,
    /// Active search in the unobserved regime, but some observed states
    /// have fallen back to the no-comparison outcome.
    MixedObservedActive,
    /// Only observed states support active search; pooled search is dead.
    AsymmetryDiamondOnly,
    /// No active search anywhere.
    NoActiveAnywhere,
}

/// Side-by-side welfare of the two information regimes at their stable
/// equilibria.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WelfareReport {
    pub unobserved: OutcomeRecord,
    pub per_state: Vec<StateWelfare>,
    pub observed_mean: ExpectedRecord,
    pub search: OrderingCheck,
    pub consumer_surplus: OrderingCheck,
    pub firm_profit: OrderingCheck,
    pub total_surplus: OrderingCheck,
    pub classification: InformationClass,
}

fn record_for(
    outcome: Outcome,
    cost: f64,
    params: &MarketParams,
) -> Result<OutcomeRecord> {
    let (v, s, n, mode) = (
        params.valuation,
        params.search_cost,
        params.n_firms,
        params.search_cost_mode,
    );
    Ok(OutcomeRecord {
        active: matches!(outcome, Outcome::Active { .. }),
        q: match outcome {
            Outcome::Diamond => 0.0,
            Outcome::Active { q } => q,
        },
        consumer_surplus: consumer_surplus(outcome, cost, v, s, mode)?,
        firm_profit: firm_profit(outcome, cost, v, n, mode)?,
        total_surplus: total_surplus(outcome, cost, v, s, mode)?,
        market_power: match outcome {
            Outcome::Diamond => None,
            Outcome::Active { q } => Some(market_power(q)?),
        },
    })
}

/// Solves both regimes at their stable equilibria and assembles the
/// comparison. Requires a zero shopper share; the orderings are statements
/// about the pure search model.
pub fn welfare_report(params: &MarketParams, opts: &SolverOptions) -> Result<WelfareReport> {
    if params.shopper_share != 0.0 {
        return Err(Error::InvalidParams(
            "welfare comparison requires shopper_share = 0".into(),
        ));
    }
    let rule = opts.rule();
    let mean_cost = params.cost_dist.mean(&rule);

    let unobs_set = solver::solve_unobserved(params, opts)?;
    let unobs_outcome = match unobs_set.stable_active() {
        Some(eq) => Outcome::Active { q: eq.q.get() },
        None => Outcome::Diamond,
    };
    // One intensity prices every state, and all the welfare forms are
    // linear in cost, so the expectation collapses onto the mean cost.
    let unobserved = record_for(unobs_outcome, mean_cost, params)?;

    let obs_sets = solver::solve_observed(params, opts)?;
    let grid = params.cost_dist.state_grid(&rule);
    let mut per_state = Vec::with_capacity(grid.len());
    for (set, (cost, weight)) in obs_sets.iter().zip(grid) {
        let outcome = match set.stable_active() {
            Some(eq) => Outcome::Active { q: eq.q.get() },
            None => Outcome::Diamond,
        };
        let state = match set.regime {
            solver::Regime::Observed { state } => state,
            solver::Regime::Unobserved => unreachable!("observed solve returns observed sets"),
        };
        per_state.push(StateWelfare {
            state,
            cost,
            weight,
            record: record_for(outcome, cost, params)?,
        });
    }
    let mean = |f: &dyn Fn(&OutcomeRecord) -> f64| -> f64 {
        per_state.iter().map(|s| s.weight * f(&s.record)).sum()
    };
    let observed_mean = ExpectedRecord {
        q: mean(&|r| r.q),
        consumer_surplus: mean(&|r| r.consumer_surplus),
        firm_profit: mean(&|r| r.firm_profit),
        total_surplus: mean(&|r| r.total_surplus),
    };

    let n_active = per_state.iter().filter(|s| s.record.active).count();
    let classification = match (unobserved.active, n_active) {
        (true, k) if k == per_state.len() => InformationClass::BothActive,
        (true, _) => InformationClass::MixedObservedActive,
        (false, k) if k > 0 => InformationClass::AsymmetryDiamondOnly,
        (false, _) => InformationClass::NoActiveAnywhere,
    };

    Ok(WelfareReport {
        search: OrderingCheck::new(unobserved.q, observed_mean.q, true),
        consumer_surplus: OrderingCheck::new(
            unobserved.consumer_surplus,
            observed_mean.consumer_surplus,
            true,
        ),
        firm_profit: OrderingCheck::new(unobserved.firm_profit, observed_mean.firm_profit, false),
        total_surplus: OrderingCheck::new(
            unobserved.total_surplus,
            observed_mean.total_surplus,
            false,
        ),
        unobserved,
        per_state,
        observed_mean,
        classification,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CostDistribution;

    fn benchmark(s: f64) -> MarketParams {
        MarketParams::new(
            2,
            1.0,
            s,
            CostDistribution::discrete(vec![0.0, 0.4], vec![0.5, 0.5]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn point_values_of_the_ops() {
        // Monopoly-pricing outcome with a free first quote: firms split the
        // surplus, consumers get nothing.
        let pi = firm_profit(Outcome::Diamond, 0.4, 1.0, 2, SearchCostMode::FirstFree).unwrap();
        assert!((pi - 0.3).abs() < 1e-15);
        assert_eq!(
            consumer_surplus(Outcome::Diamond, 0.4, 1.0, 0.05, SearchCostMode::FirstFree).unwrap(),
            0.0
        );
        assert_eq!(
            total_surplus(Outcome::Diamond, 0.4, 1.0, 0.05, SearchCostMode::AllCostly).unwrap(),
            0.0
        );
        // Markup index at q = 1/2 is 1/2.
        assert!((market_power(0.5).unwrap() - 0.5).abs() < 1e-15);
        assert!(market_power(1.0).is_err());
        // Active consumer surplus at the benchmark's pooled stable root.
        let q_u = 0.9217897183290575;
        let cs = consumer_surplus(
            Outcome::Active { q: q_u },
            0.4,
            1.0,
            0.05,
            SearchCostMode::FirstFree,
        )
        .unwrap();
        assert!((cs - 0.86417786093349143 * 0.6).abs() < 1e-12);
    }

    #[test]
    fn accounting_identity_on_equilibrium_tuples() {
        // Along equilibrium pairs (q, s = A(q) (v - c)) total surplus equals
        // consumer surplus plus industry profit, in both cost modes.
        let mut rng_state = 88172645463325252u64;
        let mut next = move || {
            // xorshift64 is plenty for a deterministic parameter sweep
            rng_state ^= rng_state << 13;
            rng_state ^= rng_state >> 7;
            rng_state ^= rng_state << 17;
            (rng_state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..200 {
            let q = 0.02 + 0.96 * next();
            let c = 2.0 * next();
            let v = c + 0.1 + 3.0 * next();
            let n = 2 + (next() * 6.0) as u32;
            let s = crate::factors::benefit_factor(q).unwrap() * (v - c);
            for mode in [SearchCostMode::FirstFree, SearchCostMode::AllCostly] {
                let outcome = Outcome::Active { q };
                let cs = consumer_surplus(outcome, c, v, s, mode).unwrap();
                let pi = firm_profit(outcome, c, v, n, mode).unwrap();
                let ts = total_surplus(outcome, c, v, s, mode).unwrap();
                let lhs = cs + f64::from(n) * pi;
                assert!(
                    (lhs - ts).abs() < 1e-12 * ts.abs().max(1.0),
                    "q={q} c={c} v={v} n={n} {mode:?}: {lhs} vs {ts}"
                );
                // And in the no-comparison outcome the identity is immediate.
                let cs0 = consumer_surplus(Outcome::Diamond, c, v, s, mode).unwrap();
                let pi0 = firm_profit(Outcome::Diamond, c, v, n, mode).unwrap();
                let ts0 = total_surplus(Outcome::Diamond, c, v, s, mode).unwrap();
                assert!((cs0 + f64::from(n) * pi0 - ts0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn report_reproduces_the_benchmark_orderings() {
        let report = welfare_report(&benchmark(0.05), &SolverOptions::default()).unwrap();
        assert_eq!(report.classification, InformationClass::BothActive);
        // Frozen 30-digit references for the benchmark market.
        assert!((report.unobserved.q - 0.9217897183290575).abs() < 1e-12);
        assert!((report.observed_mean.q - 0.9011816801789014).abs() < 1e-12);
        assert!((report.unobserved.consumer_surplus - 0.6913422887467932).abs() < 1e-12);
        assert!((report.observed_mean.consumer_surplus - 0.6852398552973593).abs() < 1e-12);
        assert!((report.unobserved.firm_profit - 0.031284112668376989).abs() < 1e-12);
        assert!((report.observed_mean.firm_profit - 0.034850530346847823).abs() < 1e-12);
        assert!((report.unobserved.total_surplus - 0.7539105140835471).abs() < 1e-12);
        assert!((report.observed_mean.total_surplus - 0.7549409159910549).abs() < 1e-12);
        // Pooling raises search and consumer surplus, firms and total
        // surplus prefer disclosure.
        assert!(report.search.holds && report.search.gap > 0.0);
        assert!(report.consumer_surplus.holds && report.consumer_surplus.gap > 0.0);
        assert!(report.firm_profit.holds && report.firm_profit.gap < 0.0);
        assert!(report.total_surplus.holds && report.total_surplus.gap < 0.0);
    }

    #[test]
    fn orderings_reverse_when_only_low_states_stay_active() {
        // Between the pooled threshold (0.0831) and the low-cost state's
        // threshold (0.1039): pooled search dies, the low state stays
        // active, and every comparison flips.
        let report = welfare_report(&benchmark(0.09), &SolverOptions::default()).unwrap();
        assert_eq!(report.classification, InformationClass::AsymmetryDiamondOnly);
        assert!(!report.unobserved.active);
        assert!(report.per_state[0].record.active);
        assert!(!report.per_state[1].record.active);
        assert!(!report.search.holds && report.search.gap < 0.0);
        assert!(!report.consumer_surplus.holds && report.consumer_surplus.gap < 0.0);
        assert!(!report.firm_profit.holds && report.firm_profit.gap > 0.0);
        assert!(!report.total_surplus.holds && report.total_surplus.gap > 0.0);
    }

    #[test]
    fn mixed_band_keeps_pooled_search_alive() {
        // Between the high-cost threshold (0.0623) and the pooled threshold
        // (0.0831) the unobserved regime is active while the high-cost
        // observed state is not.
        let report = welfare_report(&benchmark(0.07), &SolverOptions::default()).unwrap();
        assert_eq!(report.classification, InformationClass::MixedObservedActive);
        assert!(report.unobserved.active);
        assert!(report.per_state[0].record.active);
        assert!(!report.per_state[1].record.active);
    }

    #[test]
    fn dead_market_classification() {
        let report = welfare_report(&benchmark(0.2), &SolverOptions::default()).unwrap();
        assert_eq!(report.classification, InformationClass::NoActiveAnywhere);
        assert_eq!(report.unobserved.q, 0.0);
        assert_eq!(report.unobserved.consumer_surplus, 0.0);
        // Free first quote: the dead market still trades at the valuation.
        assert!(report.unobserved.firm_profit > 0.0);
    }

    #[test]
    fn all_costly_diamond_means_no_trade_anywhere() {
        let params = MarketParams::with_options(
            2,
            1.0,
            0.2,
            CostDistribution::discrete(vec![0.0, 0.4], vec![0.5, 0.5]).unwrap(),
            0.0,
            SearchCostMode::AllCostly,
        )
        .unwrap();
        let report = welfare_report(&params, &SolverOptions::default()).unwrap();
        assert_eq!(report.unobserved.firm_profit, 0.0);
        assert_eq!(report.unobserved.total_surplus, 0.0);
        assert_eq!(report.observed_mean.total_surplus, 0.0);
    }

    #[test]
    fn continuous_law_report_uses_the_node_grid() {
        let params = MarketParams::new(
            2,
            1.0,
            0.05,
            CostDistribution::uniform(0.0, 0.4).unwrap(),
        )
        .unwrap();
        let report = welfare_report(&params, &SolverOptions::default()).unwrap();
        assert_eq!(report.per_state.len(), 64);
        assert_eq!(report.classification, InformationClass::BothActive);
        let total_weight: f64 = report.per_state.iter().map(|s| s.weight).sum();
        assert!((total_weight - 1.0).abs() < 1e-12);
        // Same mean cost as the two-point benchmark, same pooled behavior.
        assert!((report.unobserved.q - 0.9217897183290575).abs() < 1e-12);
        assert!(report.search.holds);
    }
}
