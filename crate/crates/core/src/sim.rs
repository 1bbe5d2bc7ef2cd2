//! Seeded Monte Carlo simulation of the market and the statistical checks
//! that tie it back to the closed forms.
//!
//! Determinism contract: a (seed, config, equilibrium) triple produces a
//! bit-identical [`SimulationResult`] regardless of thread count. Every
//! round draws from its own counter-keyed stream, rounds are grouped into
//! fixed chunks accumulated sequentially, and chunk accumulators merge
//! pairwise in index order, so no floating-point sum depends on scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::factors::{search_intensity_from_weight, shopper_weight};
use crate::model::{CostDistribution, MarketParams, SearchCostMode};
use crate::price_law::PriceLaw;
use crate::solver::{ActiveEquilibrium, Regime};
use crate::{Error, Result};

const ROUNDS_PER_CHUNK: u64 = 1024;

/// Knobs of one simulation run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SimulationConfig {
    pub seed: u64,
    /// Market rounds; each round draws one cost state and one price per firm.
    pub n_rounds: u64,
    /// Consumers arriving per round.
    pub consumers_per_round: u32,
    /// Keep every posted price per state (for distributional tests).
    pub record_prices: bool,
}

impl SimulationConfig {
    pub fn new(seed: u64, n_rounds: u64, consumers_per_round: u32) -> Result<Self> {
        if n_rounds == 0 {
            return Err(Error::InvalidParams("n_rounds must be positive".into()));
        }
        if consumers_per_round == 0 {
            return Err(Error::InvalidParams(
                "consumers_per_round must be positive".into(),
            ));
        }
        Ok(SimulationConfig {
            seed,
            n_rounds,
            consumers_per_round,
            record_prices: false,
        })
    }

    pub fn with_price_recording(mut self) -> Self {
        self.record_prices = true;
        self
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub count: u64,
}

/// Running sums behind an [`Estimate`].
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    sum: f64,
    sumsq: f64,
    count: u64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.sum += x;
        self.sumsq += x * x;
        self.count += 1;
    }

    fn merge(&mut self, other: &Moments) {
        self.sum += other.sum;
        self.sumsq += other.sumsq;
        self.count += other.count;
    }

    fn estimate(&self) -> Estimate {
        if self.count == 0 {
            return Estimate {
                mean: 0.0,
                std_error: 0.0,
                count: 0,
            };
        }
        let n = self.count as f64;
        let mean = self.sum / n;
        let std_error = if self.count < 2 {
            0.0
        } else {
            let var = ((self.sumsq - n * mean * mean) / (n - 1.0)).max(0.0);
            (var / n).sqrt()
        };
        Estimate {
            mean,
            std_error,
            count: self.count,
        }
    }
}

/// Statistics conditional on one cost state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateStats {
    pub state: usize,
    pub cost: f64,
    pub rounds: u64,
    pub consumers: u64,
    /// Per-round firm-average profit per consumer served.
    pub firm_profit: Estimate,
    /// Prices actually paid in this state.
    pub transaction_price: Estimate,
    /// Every posted price, in draw order (empty unless recording).
    pub posted_prices: Vec<f64>,
}

/// Output of one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationResult {
    pub rounds: u64,
    pub consumers: u64,
    /// Consumers who sampled a single quote.
    pub one_quote: u64,
    /// Consumers who compared two quotes, shoppers included.
    pub two_quote: u64,
    pub shoppers: u64,
    /// Per-firm profit per consumer, one estimate per firm (round-level
    /// samples).
    pub firm_profit: Vec<Estimate>,
    /// Firm-average profit per consumer (round-level samples).
    pub mean_firm_profit: Estimate,
    /// Prices paid (consumer-level samples).
    pub transaction_price: Estimate,
    /// First quote minus the cheaper of the pair, across comparing
    /// consumers: the realized gain from the second quote.
    pub second_quote_gain: Estimate,
    /// Valuation minus price paid minus search spending.
    pub consumer_surplus: Estimate,
    /// Per-state breakdowns (discrete cost states only).
    pub per_state: Vec<StateStats>,
}

#[derive(Debug, Clone)]
struct StateAcc {
    rounds: u64,
    consumers: u64,
    profit: Moments,
    price: Moments,
    posted: Vec<f64>,
}

#[derive(Debug, Clone)]
struct Acc {
    rounds: u64,
    consumers: u64,
    one_quote: u64,
    two_quote: u64,
    shoppers: u64,
    firm_profit: Vec<Moments>,
    mean_firm_profit: Moments,
    price: Moments,
    gain: Moments,
    cs: Moments,
    per_state: Vec<StateAcc>,
}

impl Acc {
    fn new(n_firms: usize, n_states: usize) -> Self {
        Acc {
            rounds: 0,
            consumers: 0,
            one_quote: 0,
            two_quote: 0,
            shoppers: 0,
            firm_profit: vec![Moments::default(); n_firms],
            mean_firm_profit: Moments::default(),
            price: Moments::default(),
            gain: Moments::default(),
            cs: Moments::default(),
            per_state: vec![
                StateAcc {
                    rounds: 0,
                    consumers: 0,
                    profit: Moments::default(),
                    price: Moments::default(),
                    posted: Vec::new(),
                };
                n_states
            ],
        }
    }

    fn merge(mut self, other: Acc) -> Acc {
        self.rounds += other.rounds;
        self.consumers += other.consumers;
        self.one_quote += other.one_quote;
        self.two_quote += other.two_quote;
        self.shoppers += other.shoppers;
        for (a, b) in self.firm_profit.iter_mut().zip(&other.firm_profit) {
            a.merge(b);
        }
        self.mean_firm_profit.merge(&other.mean_firm_profit);
        self.price.merge(&other.price);
        self.gain.merge(&other.gain);
        self.cs.merge(&other.cs);
        for (a, mut b) in self.per_state.iter_mut().zip(other.per_state) {
            a.rounds += b.rounds;
            a.consumers += b.consumers;
            a.profit.merge(&b.profit);
            a.price.merge(&b.price);
            a.posted.append(&mut b.posted);
        }
        self
    }
}

/// Merges chunk accumulators as a balanced binary tree in index order;
/// the reduction order is a pure function of the chunk count.
fn merge_pairwise(mut accs: Vec<Acc>) -> Acc {
    while accs.len() > 1 {
        accs = accs
            .chunks(2)
            .map(|pair| match pair {
                [a] => a.clone(),
                [a, b] => a.clone().merge(b.clone()),
                _ => unreachable!("chunks of 2"),
            })
            .collect();
    }
    accs.pop().expect("at least one chunk")
}

/// How each round resolves its cost state.
enum StateDraw<'a> {
    /// Observed regime: one fixed state.
    Fixed { law: &'a PriceLaw },
    /// Unobserved regime over finitely many states.
    Discrete {
        cumulative: Vec<f64>,
        laws: &'a [PriceLaw],
    },
    /// Unobserved regime over an atomless law; price laws are built per
    /// round from the drawn cost.
    Continuous {
        dist: &'a CostDistribution,
        weight: f64,
        valuation: f64,
    },
}

/// Simulates the market at an active-search equilibrium of the given
/// regime. Consumers sample one quote, or two with probability `q`
/// (shoppers always two); firms post independent draws from the state's
/// price law; everyone buys at the cheapest observed quote.
pub fn simulate_market(
    params: &MarketParams,
    equilibrium: &ActiveEquilibrium,
    regime: Regime,
    config: &SimulationConfig,
) -> Result<SimulationResult> {
    if config.n_rounds == 0 || config.consumers_per_round == 0 {
        return Err(Error::InvalidParams(
            "simulation needs at least one round and one consumer".into(),
        ));
    }
    let q = equilibrium.q.get();
    if !equilibrium.q.is_active() {
        return Err(Error::Domain {
            name: "q",
            range: "(0, 1)",
            value: q,
        });
    }
    let lambda = params.shopper_share;
    let expected_weight = shopper_weight(q, lambda)?;
    if (equilibrium.weight - expected_weight).abs() > 1e-9 * expected_weight.max(1.0) {
        return Err(Error::InvalidParams(
            "equilibrium weight inconsistent with its intensity and the shopper share".into(),
        ));
    }
    if equilibrium.price_laws.is_empty() {
        return Err(Error::InvalidParams("equilibrium carries no price laws".into()));
    }

    // Resolve the state-drawing scheme and the per-state reporting grid.
    let (draw, state_meta): (StateDraw, Vec<(usize, f64)>) = match (regime, &params.cost_dist) {
        (Regime::Observed { state }, _) => {
            let law = equilibrium.price_laws.first().expect("nonempty");
            (StateDraw::Fixed { law }, vec![(state, law.cost)])
        }
        (Regime::Unobserved, CostDistribution::Discrete { costs, probs }) => {
            if equilibrium.price_laws.len() != costs.len() {
                return Err(Error::InvalidParams(format!(
                    "expected one price law per cost state ({}), got {}",
                    costs.len(),
                    equilibrium.price_laws.len()
                )));
            }
            let mut cumulative = Vec::with_capacity(probs.len());
            let mut running = 0.0;
            for p in probs {
                running += p;
                cumulative.push(running);
            }
            *cumulative.last_mut().expect("nonempty") = 1.0;
            (
                StateDraw::Discrete {
                    cumulative,
                    laws: &equilibrium.price_laws,
                },
                costs.iter().copied().enumerate().collect(),
            )
        }
        (Regime::Unobserved, dist @ CostDistribution::Continuous { .. }) => (
            StateDraw::Continuous {
                dist,
                weight: equilibrium.weight,
                valuation: params.valuation,
            },
            Vec::new(),
        ),
    };

    let n_firms = params.n_firms as usize;
    let n_chunks = config.n_rounds.div_ceil(ROUNDS_PER_CHUNK);
    let accs: Vec<Acc> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let start = chunk * ROUNDS_PER_CHUNK;
            let end = (start + ROUNDS_PER_CHUNK).min(config.n_rounds);
            let mut acc = Acc::new(n_firms, state_meta.len());
            let mut prices = vec![0.0f64; n_firms];
            let mut revenue = vec![0.0f64; n_firms];
            for round in start..end {
                let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
                rng.set_stream(round + 1);
                run_round(
                    params, q, lambda, &draw, config, &mut rng, &mut prices, &mut revenue,
                    &mut acc,
                );
            }
            acc
        })
        .collect();
    let acc = merge_pairwise(accs);

    Ok(SimulationResult {
        rounds: acc.rounds,
        consumers: acc.consumers,
        one_quote: acc.one_quote,
        two_quote: acc.two_quote,
        shoppers: acc.shoppers,
        firm_profit: acc.firm_profit.iter().map(Moments::estimate).collect(),
        mean_firm_profit: acc.mean_firm_profit.estimate(),
        transaction_price: acc.price.estimate(),
        second_quote_gain: acc.gain.estimate(),
        consumer_surplus: acc.cs.estimate(),
        per_state: acc
            .per_state
            .iter()
            .zip(&state_meta)
            .map(|(s, (state, cost))| StateStats {
                state: *state,
                cost: *cost,
                rounds: s.rounds,
                consumers: s.consumers,
                firm_profit: s.profit.estimate(),
                transaction_price: s.price.estimate(),
                posted_prices: s.posted.clone(),
            })
            .collect(),
    })
}

#[allow(clippy::too_many_arguments)]
fn run_round(
    params: &MarketParams,
    q: f64,
    lambda: f64,
    draw: &StateDraw,
    config: &SimulationConfig,
    rng: &mut ChaCha8Rng,
    prices: &mut [f64],
    revenue: &mut [f64],
    acc: &mut Acc,
) {
    // Draw order is fixed: cost state, then one price per firm, then each
    // consumer's decisions. Changing it changes every seeded result.
    let owned_law;
    let (state_slot, law): (Option<usize>, &PriceLaw) = match draw {
        StateDraw::Fixed { law } => (Some(0), law),
        StateDraw::Discrete { cumulative, laws } => {
            let u: f64 = rng.gen();
            let idx = cumulative
                .iter()
                .position(|&c| u < c)
                .unwrap_or(laws.len() - 1);
            (Some(idx), &laws[idx])
        }
        StateDraw::Continuous {
            dist,
            weight,
            valuation,
        } => {
            let u: f64 = rng.gen();
            let cost = dist.quantile(u).expect("u in [0, 1]");
            owned_law = PriceLaw::new(cost, *weight, *valuation).expect("valid state law");
            (None, &owned_law)
        }
    };
    let cost = law.cost;
    for p in prices.iter_mut() {
        let u: f64 = rng.gen();
        *p = law.quantile(u).expect("u in [0, 1]");
    }
    revenue.fill(0.0);

    let n = prices.len();
    let s = params.search_cost;
    let v = params.valuation;
    let cpr = config.consumers_per_round;
    // Consumer-level pushes go through a local merged into the state slot
    // after the loop, keeping the accumulator borrows disjoint.
    let mut state_price = Moments::default();
    for _ in 0..cpr {
        let is_shopper = lambda > 0.0 && rng.gen_bool(lambda);
        let two = is_shopper || rng.gen_bool(q);
        let first = rng.gen_range(0..n);
        let (paid, seller) = if two {
            let mut second = rng.gen_range(0..n - 1);
            if second >= first {
                second += 1;
            }
            let (pf, ps) = (prices[first], prices[second]);
            // Ties go to the first-sampled firm.
            let (pmin, jmin) = if ps < pf { (ps, second) } else { (pf, first) };
            acc.gain.push(pf - pmin);
            (pmin, jmin)
        } else {
            (prices[first], first)
        };
        revenue[seller] += paid - cost;
        let spend = if is_shopper {
            0.0
        } else {
            match (params.search_cost_mode, two) {
                (SearchCostMode::FirstFree, false) => 0.0,
                (SearchCostMode::FirstFree, true) => s,
                (SearchCostMode::AllCostly, false) => s,
                (SearchCostMode::AllCostly, true) => 2.0 * s,
            }
        };
        acc.price.push(paid);
        acc.cs.push(v - paid - spend);
        state_price.push(paid);
        if is_shopper {
            acc.shoppers += 1;
        }
        if two {
            acc.two_quote += 1;
        } else {
            acc.one_quote += 1;
        }
    }

    let cpr_f = f64::from(cpr);
    let mut total = 0.0;
    for (j, rev) in revenue.iter().enumerate() {
        acc.firm_profit[j].push(rev / cpr_f);
        total += rev;
    }
    acc.mean_firm_profit.push(total / (n as f64 * cpr_f));
    acc.rounds += 1;
    acc.consumers += u64::from(cpr);

    if let Some(sa) = state_slot.map(|i| &mut acc.per_state[i]) {
        sa.rounds += 1;
        sa.consumers += u64::from(cpr);
        sa.profit.push(total / (n as f64 * cpr_f));
        sa.price.merge(&state_price);
        if config.record_prices {
            sa.posted.extend_from_slice(prices);
        }
    }
}

/// Maximum absolute deviation of analytic expected profit from the
/// equal-profit level across `grid_size` prices spanning the law's support.
/// A correct law keeps this at rounding noise.
pub fn verify_equal_profit(
    params: &MarketParams,
    law: &PriceLaw,
    grid_size: usize,
) -> Result<f64> {
    if grid_size < 2 {
        return Err(Error::InvalidParams("grid needs at least 2 points".into()));
    }
    let lambda = params.shopper_share;
    let q = search_intensity_from_weight(law.weight, lambda)?;
    let n = f64::from(params.n_firms);
    // Demand shares per firm: captive one-quote consumers, plus comparing
    // consumers won by undercutting.
    let one_share = (1.0 - lambda) * (1.0 - q);
    let two_share = (1.0 - lambda) * q + lambda;
    let benchmark = one_share * (law.support_high - law.cost) / n;
    let mut worst = 0.0f64;
    for i in 0..grid_size {
        let t = i as f64 / (grid_size - 1) as f64;
        let p = law.support_low + t * (law.support_high - law.support_low);
        let profit = (p - law.cost) * (one_share + 2.0 * two_share * law.ccdf(p)?) / n;
        worst = worst.max((profit - benchmark).abs());
    }
    Ok(worst)
}

/// Studentized gap between the realized mean gain from a second quote and
/// the search cost: at an equilibrium intensity this is asymptotically
/// standard normal.
pub fn verify_indifference(result: &SimulationResult, search_cost: f64) -> Result<f64> {
    let e = &result.second_quote_gain;
    if e.count < 2 || !(e.std_error > 0.0) {
        return Err(Error::DegenerateStandardError);
    }
    Ok((e.mean - search_cost) / e.std_error)
}

/// One-sample Kolmogorov-Smirnov distance between `samples` and the
/// distribution with cumulative function `cdf`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidParams("no samples".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, x) in sorted.iter().enumerate() {
        let f = cdf(*x);
        d = d.max(f - i as f64 / n);
        d = d.max((i + 1) as f64 / n - f);
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CostDistribution, MarketParams};
    use crate::solver::{solve_unobserved, SolverOptions};

    fn benchmark() -> MarketParams {
        MarketParams::new(
            2,
            1.0,
            0.05,
            CostDistribution::discrete(vec![0.0, 0.4], vec![0.5, 0.5]).unwrap(),
        )
        .unwrap()
    }

    fn stable_eq(params: &MarketParams) -> ActiveEquilibrium {
        solve_unobserved(params, &SolverOptions::default())
            .unwrap()
            .stable_active()
            .unwrap()
            .clone()
    }

    #[test]
    fn same_seed_same_result_different_seed_different_result() {
        let params = benchmark();
        let eq = stable_eq(&params);
        let config = SimulationConfig::new(7, 2_000, 4).unwrap();
        let a = simulate_market(&params, &eq, Regime::Unobserved, &config).unwrap();
        let b = simulate_market(&params, &eq, Regime::Unobserved, &config).unwrap();
        assert_eq!(a, b);
        let other = SimulationConfig::new(8, 2_000, 4).unwrap();
        let c = simulate_market(&params, &eq, Regime::Unobserved, &other).unwrap();
        assert_ne!(a.transaction_price.mean, c.transaction_price.mean);
    }

    #[test]
    fn thread_count_does_not_change_bits() {
        let params = benchmark();
        let eq = stable_eq(&params);
        let config = SimulationConfig::new(42, 10_000, 2).unwrap().with_price_recording();
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| simulate_market(&params, &eq, Regime::Unobserved, &config).unwrap())
        };
        let single = run(1);
        let multi = run(8);
        assert_eq!(single, multi);
    }

    #[test]
    fn counts_and_shares_are_consistent() {
        let params = benchmark();
        let eq = stable_eq(&params);
        let config = SimulationConfig::new(3, 20_000, 1).unwrap();
        let r = simulate_market(&params, &eq, Regime::Unobserved, &config).unwrap();
        assert_eq!(r.one_quote + r.two_quote, r.consumers);
        assert_eq!(r.consumers, 20_000);
        assert_eq!(r.shoppers, 0);
        // Two-quote share tracks q.
        let q = eq.q.get();
        let share = r.two_quote as f64 / r.consumers as f64;
        let se = (q * (1.0 - q) / r.consumers as f64).sqrt();
        assert!((share - q).abs() < 4.0 * se, "share {share} vs q {q}");
        // State rounds split roughly evenly and sum exactly.
        assert_eq!(r.per_state.len(), 2);
        assert_eq!(r.per_state[0].rounds + r.per_state[1].rounds, r.rounds);
    }

    #[test]
    fn moments_match_the_price_law() {
        // Mean transaction price at the stable pooled root, frozen from the
        // law's closed-form means: (1 - q) E[p] + q E[min of two].
        let params = benchmark();
        let eq = stable_eq(&params);
        let q = eq.q.get();
        let analytic: f64 = eq
            .price_laws
            .iter()
            .map(|law| 0.5 * ((1.0 - q) * law.mean() + q * law.mean_min_of_two()))
            .sum();
        assert!((analytic - 0.26256822533675398).abs() < 1e-12);
        let config = SimulationConfig::new(11, 200_000, 1).unwrap();
        let r = simulate_market(&params, &eq, Regime::Unobserved, &config).unwrap();
        let z = (r.transaction_price.mean - analytic) / r.transaction_price.std_error;
        assert!(z.abs() < 4.0, "z = {z}");
    }

    #[test]
    fn observed_regime_pins_the_state() {
        let params = benchmark();
        let sets = crate::solver::solve_observed(&params, &SolverOptions::default()).unwrap();
        let eq = sets[1].stable_active().unwrap().clone();
        let config = SimulationConfig::new(5, 5_000, 2).unwrap();
        let r = simulate_market(&params, &eq, Regime::Observed { state: 1 }, &config).unwrap();
        assert_eq!(r.per_state.len(), 1);
        assert_eq!(r.per_state[0].state, 1);
        assert_eq!(r.per_state[0].cost, 0.4);
        assert_eq!(r.per_state[0].rounds, 5_000);
        // All prices within that state's support.
        assert!(r.transaction_price.mean > eq.price_laws[0].support_low);
        assert!(r.transaction_price.mean < 1.0);
    }

    #[test]
    fn shopper_runs_count_shoppers_and_cost_them_nothing() {
        let params = MarketParams::with_options(
            2,
            1.0,
            0.05,
            CostDistribution::discrete(vec![0.0], vec![1.0]).unwrap(),
            0.3,
            SearchCostMode::FirstFree,
        )
        .unwrap();
        let set = crate::solver::solve_shoppers(&params, &SolverOptions::default()).unwrap();
        let eq = set.stable_active().unwrap().clone();
        let config = SimulationConfig::new(17, 20_000, 1).unwrap();
        let r = simulate_market(&params, &eq, Regime::Unobserved, &config).unwrap();
        let share = r.shoppers as f64 / r.consumers as f64;
        assert!((share - 0.3).abs() < 0.02, "shopper share {share}");
        assert!(r.two_quote >= r.shoppers);
    }

    #[test]
    fn continuous_law_simulates_without_state_table() {
        let params = MarketParams::new(
            2,
            1.0,
            0.05,
            CostDistribution::uniform(0.0, 0.4).unwrap(),
        )
        .unwrap();
        let eq = stable_eq(&params);
        let config = SimulationConfig::new(9, 5_000, 2).unwrap();
        let r = simulate_market(&params, &eq, Regime::Unobserved, &config).unwrap();
        assert!(r.per_state.is_empty());
        assert_eq!(r.consumers, 10_000);
        assert!(r.consumer_surplus.mean > 0.0);
    }

    #[test]
    fn equal_profit_deviation_is_rounding_noise() {
        let params = benchmark();
        let eq = stable_eq(&params);
        for law in &eq.price_laws {
            let dev = verify_equal_profit(&params, law, 1_000).unwrap();
            assert!(dev <= 1e-9 * (params.valuation - law.cost), "dev = {dev}");
        }
        assert!(verify_equal_profit(&params, &eq.price_laws[0], 1).is_err());
    }

    #[test]
    fn indifference_z_is_small_at_equilibrium() {
        let params = benchmark();
        let eq = stable_eq(&params);
        let config = SimulationConfig::new(42, 100_000, 1).unwrap();
        let r = simulate_market(&params, &eq, Regime::Unobserved, &config).unwrap();
        let z = verify_indifference(&r, params.search_cost).unwrap();
        assert!(z.abs() < 4.0, "z = {z}");
    }

    #[test]
    fn mismatched_weight_is_rejected() {
        let params = benchmark();
        let mut eq = stable_eq(&params);
        eq.weight *= 1.5;
        let config = SimulationConfig::new(1, 10, 1).unwrap();
        assert!(matches!(
            simulate_market(&params, &eq, Regime::Unobserved, &config),
            Err(Error::InvalidParams(_))
        ));
    }

    #[test]
    fn ks_statistic_detects_fit_and_misfit() {
        // Uniform samples against the uniform cdf: small distance.
        let n = 4_096;
        let samples: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = ks_statistic(&samples, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!(d < 1.0 / n as f64, "d = {d}");
        // Same samples against a squared cdf: visible distance.
        let d = ks_statistic(&samples, |x| (x * x).clamp(0.0, 1.0)).unwrap();
        assert!(d > 0.2);
        assert!(ks_statistic(&[], |x| x).is_err());
    }

    #[test]
    fn estimates_handle_degenerate_counts() {
        let mut m = Moments::default();
        assert_eq!(m.estimate().mean, 0.0);
        assert_eq!(m.estimate().std_error, 0.0);
        m.push(2.5);
        let e = m.estimate();
        assert_eq!(e.mean, 2.5);
        assert_eq!(e.std_error, 0.0);
        assert_eq!(e.count, 1);
        let r = SimulationResult {
            rounds: 1,
            consumers: 1,
            one_quote: 1,
            two_quote: 0,
            shoppers: 0,
            firm_profit: vec![],
            mean_firm_profit: e,
            transaction_price: e,
            second_quote_gain: Estimate {
                mean: 0.0,
                std_error: 0.0,
                count: 0,
            },
            consumer_surplus: e,
            per_state: vec![],
        };
        assert!(matches!(
            verify_indifference(&r, 0.05),
            Err(Error::DegenerateStandardError)
        ));
    }
}
