//! Equilibrium computation: the peak sampling intensity, activity
//! thresholds, active-search roots for both information regimes, shopper
//! variants, participation, and the voluntary-disclosure unraveling trace.

use std::sync::OnceLock;

use serde::Serialize;

use crate::factors::{
    benefit_factor_deriv_unchecked, benefit_factor_unchecked, search_intensity_from_weight,
    shopper_benefit_factor, shopper_weight,
};
use crate::model::{MarketParams, SearchCostMode, SearchIntensity};
use crate::price_law::PriceLaw;
use crate::quad::GaussLegendre;
use crate::{Error, Result};

/// Endpoint inset for root brackets on the intensity axis.
const Q_EDGE: f64 = 1e-12;

/// Tuning knobs shared by every solver entry point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverOptions {
    /// Bisection stops once the bracket is narrower than this.
    pub root_tol: f64,
    /// Relative tolerance at which a search cost counts as exactly equal to
    /// the activity threshold, producing the single tangency root.
    pub tangency_rtol: f64,
    /// Gauss-Legendre node count for expectations over continuous cost laws.
    pub quad_nodes: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            root_tol: 1e-13,
            tangency_rtol: 1e-9,
            quad_nodes: 64,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.root_tol > 0.0 && self.root_tol <= 1e-3) {
            return Err(Error::Domain {
                name: "root_tol",
                range: "(0, 1e-3]",
                value: self.root_tol,
            });
        }
        if !(self.tangency_rtol > 0.0 && self.tangency_rtol <= 1e-3) {
            return Err(Error::Domain {
                name: "tangency_rtol",
                range: "(0, 1e-3]",
                value: self.tangency_rtol,
            });
        }
        if self.quad_nodes == 0 || self.quad_nodes > 1 << 20 {
            return Err(Error::InvalidParams(format!(
                "quad_nodes must lie in [1, 2^20], got {}",
                self.quad_nodes
            )));
        }
        Ok(())
    }

    pub(crate) fn rule(&self) -> GaussLegendre {
        GaussLegendre::new(self.quad_nodes)
    }
}

/// Dynamic stability of an active-search root under best-reply adjustment
/// of the sampling intensity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Stability {
    /// Gain from the second quote falls through the search cost at the root;
    /// small perturbations decay back.
    Stable,
    /// Gain rises through the search cost; perturbations run away.
    Unstable,
}

/// Information regime of an equilibrium set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    /// Consumers do not observe the cost state when choosing how many
    /// prices to sample.
    Unobserved,
    /// Consumers observe the cost state (index into the state grid) first.
    Observed { state: usize },
}

/// The no-comparison outcome that always accompanies the active roots:
/// every firm prices at the valuation and nobody samples twice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiamondOutcome {
    /// Posted price, or `None` when no trade occurs (all quotes costly).
    pub price: Option<f64>,
    /// With a positive shopper share undercutting the valuation attracts
    /// the comparison shoppers, so the outcome is no longer an equilibrium.
    pub is_equilibrium: bool,
}

/// One root of the activity condition, tagged with its stability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ActiveRoot {
    pub q: SearchIntensity,
    pub stability: Stability,
}

/// A fully assembled active-search equilibrium.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActiveEquilibrium {
    pub q: SearchIntensity,
    pub stability: Stability,
    /// Captive-demand weight of the price laws.
    pub weight: f64,
    /// Price law per cost state on the state grid (a single entry for an
    /// observed-regime set).
    pub price_laws: Vec<PriceLaw>,
}

/// Every equilibrium of one regime: the always-present no-comparison
/// outcome, plus zero, one (tangency), or two active roots sorted by
/// ascending intensity. With two roots the larger is the stable one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumSet {
    pub regime: Regime,
    pub diamond: DiamondOutcome,
    pub active: Vec<ActiveEquilibrium>,
}

impl EquilibriumSet {
    /// The stable active equilibrium, if search is viable.
    pub fn stable_active(&self) -> Option<&ActiveEquilibrium> {
        self.active
            .iter()
            .find(|e| e.stability == Stability::Stable)
    }

    pub fn unstable_active(&self) -> Option<&ActiveEquilibrium> {
        self.active
            .iter()
            .find(|e| e.stability == Stability::Unstable)
    }
}

/// Per-state activity threshold: the largest search cost at which active
/// search survives when the state is common knowledge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StateThreshold {
    pub state: usize,
    pub cost: f64,
    pub s_bar: f64,
}

/// Activity thresholds of a market.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Thresholds {
    /// Intensity maximizing the gain from a second quote.
    pub q_star: f64,
    /// Per-state thresholds `(v - c_k) * A(q*)`, decreasing in cost. For a
    /// continuous law the two entries evaluate the support endpoints and
    /// bound the threshold range.
    pub per_state: Vec<StateThreshold>,
    /// Probability-weighted threshold governing the unobserved regime.
    pub pooled: f64,
}

static Q_STAR: OnceLock<f64> = OnceLock::new();

pub(crate) fn q_star_value() -> f64 {
    *Q_STAR.get_or_init(|| {
        // The gain factor is strictly concave with slope +1/3 at 0 and
        // negative slope at 1, so its derivative crosses zero exactly once.
        let mut lo = 1e-9;
        let mut hi = 1.0 - 1e-9;
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if benefit_factor_deriv_unchecked(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    })
}

/// Sampling intensity that maximizes the gain from a second price quote.
/// Cost- and valuation-free: the gain scales by surplus, so the argmax is a
/// universal constant of the model (~0.6348). Cached after the first call.
pub fn find_q_star() -> SearchIntensity {
    SearchIntensity::new(q_star_value()).expect("peak intensity lies in (0, 1)")
}

/// Activity thresholds for every cost state plus the pooled threshold.
pub fn thresholds(params: &MarketParams, opts: &SolverOptions) -> Result<Thresholds> {
    opts.validate()?;
    let q_star = q_star_value();
    let peak = benefit_factor_unchecked(q_star);
    let rule = opts.rule();
    let entries: Vec<(f64, f64)> = match &params.cost_dist {
        crate::model::CostDistribution::Continuous { lower, upper, .. } => {
            vec![(*lower, f64::NAN), (*upper, f64::NAN)]
        }
        _ => params.cost_dist.state_grid(&rule),
    };
    let per_state: Vec<StateThreshold> = entries
        .iter()
        .enumerate()
        .map(|(state, (cost, _))| StateThreshold {
            state,
            cost: *cost,
            s_bar: (params.valuation - cost) * peak,
        })
        .collect();
    debug_assert!(per_state.windows(2).all(|w| w[0].s_bar >= w[1].s_bar));
    let pooled = (params.valuation - params.cost_dist.mean(&rule)) * peak;
    Ok(Thresholds {
        q_star,
        per_state,
        pooled,
    })
}

fn bisect(g: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let rising = g(lo) < 0.0;
    for _ in 0..200 {
        if hi - lo < tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let gm = g(mid);
        if gm == 0.0 {
            return mid;
        }
        if (gm < 0.0) == rising {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Roots of `A(q) * surplus = search_cost` on `(0, 1)`, the activity
/// condition with no shoppers. Empty above the threshold, the single
/// tangency root at equality (within `tangency_rtol`), otherwise the
/// unstable low root and the stable high root.
pub fn solve_active(surplus: f64, search_cost: f64, opts: &SolverOptions) -> Result<Vec<ActiveRoot>> {
    opts.validate()?;
    if !(surplus > 0.0) || !surplus.is_finite() {
        return Err(Error::Domain {
            name: "surplus",
            range: "(0, inf)",
            value: surplus,
        });
    }
    if !(search_cost > 0.0) || !search_cost.is_finite() {
        return Err(Error::Domain {
            name: "search_cost",
            range: "(0, inf)",
            value: search_cost,
        });
    }
    let a = search_cost / surplus;
    let q_star = q_star_value();
    let peak = benefit_factor_unchecked(q_star);
    if a > peak * (1.0 + opts.tangency_rtol) {
        return Ok(Vec::new());
    }
    if a >= peak * (1.0 - opts.tangency_rtol) {
        return Ok(vec![ActiveRoot {
            q: SearchIntensity::new(q_star)?,
            stability: Stability::Stable,
        }]);
    }
    let hi_edge = 1.0 - Q_EDGE;
    if benefit_factor_unchecked(hi_edge) >= a {
        // The stable root would sit within one part in 1e12 of full
        // sampling; no physical search cost is that small.
        return Err(Error::InvalidParams(
            "search cost too small relative to surplus to resolve the stable root".into(),
        ));
    }
    let g = |q: f64| benefit_factor_unchecked(q) - a;
    // The gain vanishes at q -> 0, so the left bracket can start at the
    // smallest positive normal and still straddle the unstable root.
    let low = bisect(g, f64::MIN_POSITIVE, q_star, opts.root_tol);
    let high = bisect(g, q_star, hi_edge, opts.root_tol);
    Ok(vec![
        ActiveRoot {
            q: SearchIntensity::new(low)?,
            stability: Stability::Unstable,
        },
        ActiveRoot {
            q: SearchIntensity::new(high)?,
            stability: Stability::Stable,
        },
    ])
}

/// Roots of `G(mu(q, lambda)) * surplus = search_cost` for a positive
/// shopper share. Shoppers keep the gain from comparison bounded away from
/// zero at `q -> 0`, so the unstable root can be absorbed by the boundary
/// and only the stable crossing remains.
fn solve_active_shoppers(
    surplus: f64,
    search_cost: f64,
    lambda: f64,
    opts: &SolverOptions,
) -> Result<Vec<ActiveRoot>> {
    debug_assert!(lambda > 0.0 && lambda < 1.0);
    if !(surplus > 0.0) || !surplus.is_finite() {
        return Err(Error::Domain {
            name: "surplus",
            range: "(0, inf)",
            value: surplus,
        });
    }
    if !(search_cost > 0.0) || !search_cost.is_finite() {
        return Err(Error::Domain {
            name: "search_cost",
            range: "(0, inf)",
            value: search_cost,
        });
    }
    let a = search_cost / surplus;
    let gain = |q: f64| -> f64 {
        shopper_benefit_factor(shopper_weight(q, lambda).expect("q in (0, 1)"))
            .expect("weight positive")
    };
    // The gain is single-peaked along the weight axis; the peak weight is
    // the zero-shopper weight at the peak intensity.
    let q_star = q_star_value();
    let mu_peak = (1.0 - q_star) / (2.0 * q_star);
    let mu_at_zero = (1.0 - lambda) / (2.0 * lambda);
    let lo_edge = Q_EDGE;
    let hi_edge = 1.0 - Q_EDGE;
    if mu_at_zero <= mu_peak {
        // Shoppers so numerous the gain decreases over all of (0, 1).
        let boundary = shopper_benefit_factor(mu_at_zero)?;
        if a > boundary {
            return Ok(Vec::new());
        }
        let root = bisect(|q| gain(q) - a, lo_edge, hi_edge, opts.root_tol);
        return Ok(vec![ActiveRoot {
            q: SearchIntensity::new(root)?,
            stability: Stability::Stable,
        }]);
    }
    let q_peak = search_intensity_from_weight(mu_peak, lambda)?;
    let peak = shopper_benefit_factor(mu_peak)?;
    if a > peak * (1.0 + opts.tangency_rtol) {
        return Ok(Vec::new());
    }
    if a >= peak * (1.0 - opts.tangency_rtol) {
        return Ok(vec![ActiveRoot {
            q: SearchIntensity::new(q_peak)?,
            stability: Stability::Stable,
        }]);
    }
    if gain(hi_edge) >= a {
        return Err(Error::InvalidParams(
            "search cost too small relative to surplus to resolve the stable root".into(),
        ));
    }
    let stable = bisect(|q| gain(q) - a, q_peak, hi_edge, opts.root_tol);
    let mut roots = Vec::with_capacity(2);
    if gain(lo_edge) < a {
        let unstable = bisect(|q| gain(q) - a, lo_edge, q_peak, opts.root_tol);
        roots.push(ActiveRoot {
            q: SearchIntensity::new(unstable)?,
            stability: Stability::Unstable,
        });
    }
    roots.push(ActiveRoot {
        q: SearchIntensity::new(stable)?,
        stability: Stability::Stable,
    });
    Ok(roots)
}

fn active_roots(
    surplus: f64,
    search_cost: f64,
    lambda: f64,
    opts: &SolverOptions,
) -> Result<Vec<ActiveRoot>> {
    if lambda == 0.0 {
        solve_active(surplus, search_cost, opts)
    } else {
        solve_active_shoppers(surplus, search_cost, lambda, opts)
    }
}

fn diamond_outcome(params: &MarketParams) -> DiamondOutcome {
    DiamondOutcome {
        price: match params.search_cost_mode {
            SearchCostMode::FirstFree => Some(params.valuation),
            SearchCostMode::AllCostly => None,
        },
        is_equilibrium: params.shopper_share == 0.0,
    }
}

fn assemble(
    params: &MarketParams,
    regime: Regime,
    roots: Vec<ActiveRoot>,
    state_costs: &[f64],
) -> Result<EquilibriumSet> {
    let lambda = params.shopper_share;
    let active = roots
        .into_iter()
        .map(|root| {
            let weight = shopper_weight(root.q.get(), lambda)?;
            let price_laws = state_costs
                .iter()
                .map(|&c| PriceLaw::new(c, weight, params.valuation))
                .collect::<Result<Vec<_>>>()?;
            Ok(ActiveEquilibrium {
                q: root.q,
                stability: root.stability,
                weight,
                price_laws,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EquilibriumSet {
        regime,
        diamond: diamond_outcome(params),
        active,
    })
}

/// Equilibria when consumers choose their sample size knowing only the cost
/// distribution: the activity condition runs on expected surplus
/// `v - E[c]`, and one intensity governs the price law of every state.
/// Requires a zero shopper share; see [`solve_shoppers`] otherwise.
pub fn solve_unobserved(params: &MarketParams, opts: &SolverOptions) -> Result<EquilibriumSet> {
    opts.validate()?;
    if params.shopper_share != 0.0 {
        return Err(Error::InvalidParams(
            "solve_unobserved requires shopper_share = 0; use solve_shoppers".into(),
        ));
    }
    let rule = opts.rule();
    let surplus = params.valuation - params.cost_dist.mean(&rule);
    let roots = solve_active(surplus, params.search_cost, opts)?;
    let costs: Vec<f64> = params
        .cost_dist
        .state_grid(&rule)
        .into_iter()
        .map(|(c, _)| c)
        .collect();
    assemble(params, Regime::Unobserved, roots, &costs)
}

/// Equilibria when consumers observe the cost state before sampling: one
/// set per state (per grid node under a continuous law), each solved on
/// that state's surplus `v - c_k`.
pub fn solve_observed(params: &MarketParams, opts: &SolverOptions) -> Result<Vec<EquilibriumSet>> {
    opts.validate()?;
    let rule = opts.rule();
    params
        .cost_dist
        .state_grid(&rule)
        .into_iter()
        .enumerate()
        .map(|(state, (cost, _))| {
            let roots = active_roots(
                params.valuation - cost,
                params.search_cost,
                params.shopper_share,
                opts,
            )?;
            assemble(params, Regime::Observed { state }, roots, &[cost])
        })
        .collect()
}

/// Unobserved-regime equilibria with a positive share of shoppers who
/// always compare two quotes for free. As the share vanishes the stable
/// root converges to the zero-shopper stable root.
pub fn solve_shoppers(params: &MarketParams, opts: &SolverOptions) -> Result<EquilibriumSet> {
    opts.validate()?;
    if params.shopper_share <= 0.0 {
        return Err(Error::InvalidParams(
            "solve_shoppers requires a positive shopper share".into(),
        ));
    }
    let rule = opts.rule();
    let surplus = params.valuation - params.cost_dist.mean(&rule);
    let roots = solve_active_shoppers(surplus, params.search_cost, params.shopper_share, opts)?;
    let costs: Vec<f64> = params
        .cost_dist
        .state_grid(&rule)
        .into_iter()
        .map(|(c, _)| c)
        .collect();
    assemble(params, Regime::Unobserved, roots, &costs)
}

/// Whether a consumer prefers entering the market to staying out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Participation {
    /// Expected surplus of entering and sampling one quote (net of the
    /// quote's price under all-costly accounting).
    pub net_payoff: f64,
    pub participates: bool,
}

/// Participation check at an active intensity: entering and sampling once
/// yields `B(q) * surplus`, minus the first quote's cost when every quote
/// is priced. With a free first quote participation is unconditional.
pub fn participation_check(
    q: f64,
    surplus: f64,
    search_cost: f64,
    mode: SearchCostMode,
) -> Result<Participation> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Domain {
            name: "q",
            range: "(0, 1)",
            value: q,
        });
    }
    if !(surplus > 0.0) {
        return Err(Error::Domain {
            name: "surplus",
            range: "(0, inf)",
            value: surplus,
        });
    }
    if !(search_cost >= 0.0) {
        return Err(Error::Domain {
            name: "search_cost",
            range: "[0, inf)",
            value: search_cost,
        });
    }
    let gross = crate::factors::cs_factor(q)? * surplus;
    let net_payoff = match mode {
        SearchCostMode::FirstFree => gross,
        SearchCostMode::AllCostly => gross - search_cost,
    };
    Ok(Participation {
        net_payoff,
        participates: match mode {
            SearchCostMode::FirstFree => true,
            SearchCostMode::AllCostly => net_payoff >= 0.0,
        },
    })
}

/// One round of the voluntary-disclosure argument.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UnravelStep {
    /// State under consideration (the highest-cost state still pooled).
    pub state: usize,
    pub cost: f64,
    /// Mean cost consumers impute to the remaining pool.
    pub pool_mean_cost: f64,
    /// Stable intensity if the state is disclosed.
    pub q_disclosed: f64,
    /// Stable intensity consumers adopt against the pool.
    pub q_pooled: f64,
    pub profit_disclosed: f64,
    pub profit_pooled: f64,
    /// Whether disclosure is weakly more profitable, removing the state
    /// from the pool.
    pub disclosed: bool,
}

/// Outcome of iterated voluntary disclosure from the top of the cost
/// support: high-cost states peel off one by one (disclosure softens
/// search), and the pool always unravels down to the lowest state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnravelTrace {
    pub steps: Vec<UnravelStep>,
    /// States still pooled when the argument halts.
    pub undisclosed: Vec<usize>,
}

/// Traces voluntary cost disclosure for a discrete law with every state
/// active (`search_cost` at most the highest-cost state's threshold).
pub fn unravel_disclosure(params: &MarketParams, opts: &SolverOptions) -> Result<UnravelTrace> {
    opts.validate()?;
    let (costs, probs) = match &params.cost_dist {
        crate::model::CostDistribution::Discrete { costs, probs } => (costs, probs),
        _ => return Err(Error::ContinuousUnsupported),
    };
    if params.shopper_share != 0.0 {
        return Err(Error::InvalidParams(
            "disclosure analysis requires shopper_share = 0".into(),
        ));
    }
    let thr = thresholds(params, opts)?;
    let s = params.search_cost;
    let top_threshold = thr.per_state.last().expect("nonempty support").s_bar;
    if s > top_threshold {
        return Err(Error::InvalidParams(format!(
            "search cost {s} exceeds the highest-cost state's activity threshold {top_threshold}; \
             every state must support active search"
        )));
    }
    let n = f64::from(params.n_firms);
    let v = params.valuation;
    let stable_q = |surplus: f64| -> Result<f64> {
        let roots = solve_active(surplus, s, opts)?;
        Ok(roots
            .iter()
            .find(|r| r.stability == Stability::Stable)
            .expect("s at or below threshold yields a stable root")
            .q
            .get())
    };
    let mut pool: Vec<usize> = (0..costs.len()).collect();
    let mut steps = Vec::new();
    while pool.len() >= 2 {
        let state = *pool.last().unwrap();
        let cost = costs[state];
        let mass: f64 = pool.iter().map(|&i| probs[i]).sum();
        let pool_mean_cost = pool.iter().map(|&i| probs[i] * costs[i]).sum::<f64>() / mass;
        let q_disclosed = stable_q(v - cost)?;
        let q_pooled = stable_q(v - pool_mean_cost)?;
        let profit_disclosed = (1.0 - q_disclosed) * (v - cost) / n;
        let profit_pooled = (1.0 - q_pooled) * (v - cost) / n;
        let disclosed = profit_disclosed >= profit_pooled;
        steps.push(UnravelStep {
            state,
            cost,
            pool_mean_cost,
            q_disclosed,
            q_pooled,
            profit_disclosed,
            profit_pooled,
            disclosed,
        });
        if !disclosed {
            break;
        }
        pool.pop();
    }
    Ok(UnravelTrace {
        steps,
        undisclosed: pool,
    })
}
