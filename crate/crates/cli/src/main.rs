//! `searchmkt`: solve, sweep, compare welfare, simulate, and trace cost
//! disclosure for the costly-search oligopoly model, driven by a single
//! TOML scenario file.
//!
//! Data goes to stdout (or `--out`); diagnostics go to stderr. Exit codes:
//! 0 success, 1 internal failure, 2 invalid configuration, 3 no
//! active-search equilibrium (the no-search outcome is still printed),
//! 4 selected equilibrium does not exist, 5 disclosure analysis on a
//! continuous cost law.

mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use search_market::factors::benefit_factor;
use search_market::quad::GaussLegendre;
use search_market::sim::{simulate_market, verify_indifference, SimulationResult};
use search_market::solver::{
    solve_observed, solve_shoppers, solve_unobserved, thresholds, unravel_disclosure,
    EquilibriumSet, Regime, Stability, Thresholds, UnravelTrace,
};
use search_market::welfare::{welfare_report, InformationClass, WelfareReport};
use search_market::{Error as CoreError, MarketParams, SolverOptions};

use config::{Format, RegimeKey, ScenarioConfig, StabilityKey};
use output::{blank, emit, int, num, opt_num, Table};

#[derive(Parser)]
#[command(name = "searchmkt", version, about = "Equilibrium search-market toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Thresholds, the no-search record, and all equilibria per regime.
    Solve(Common),
    /// Tabulate the second-quote benefit curves over an intensity grid.
    SweepBenefit {
        #[command(flatten)]
        common: Common,
        /// Number of grid intervals between the endpoints.
        #[arg(long, default_value_t = 200)]
        grid: usize,
    },
    /// Welfare comparison between the two information regimes.
    Welfare(Common),
    /// Monte Carlo run at a selected equilibrium.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Override the seed from the scenario file.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Voluntary-disclosure trace for a discrete cost law.
    Unravel(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Write data here instead of stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Output format, overriding the scenario file.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }

    fn internal(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
        }
    }

    fn missing_equilibrium(message: impl Into<String>) -> Self {
        Failure {
            code: 4,
            message: message.into(),
        }
    }
}

fn core_failure(e: CoreError) -> Failure {
    match e {
        CoreError::InvalidParams(_) | CoreError::Domain { .. } => Failure::config(e.to_string()),
        other => Failure::internal(other.to_string()),
    }
}

type CmdResult = Result<ExitCode, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(common) => cmd_solve(common),
        Command::SweepBenefit { common, grid } => cmd_sweep(common, grid),
        Command::Welfare(common) => cmd_welfare(common),
        Command::Simulate { common, seed } => cmd_simulate(common, seed),
        Command::Unravel(common) => cmd_unravel(common),
    };
    match result {
        Ok(code) => code,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

struct Scenario {
    config: ScenarioConfig,
    params: MarketParams,
    opts: SolverOptions,
}

fn load(common: &Common) -> Result<Scenario, Failure> {
    let config = ScenarioConfig::load(&common.config).map_err(Failure::config)?;
    let params = config.to_params().map_err(Failure::config)?;
    let opts = config.solver.to_options().map_err(Failure::config)?;
    Ok(Scenario {
        config,
        params,
        opts,
    })
}

fn resolve_format(common: &Common, config: &ScenarioConfig) -> Format {
    common.format.unwrap_or(config.output.format)
}

fn resolve_out(common: &Common, config: &ScenarioConfig) -> Option<PathBuf> {
    common.out.clone().or_else(|| config.output.path.clone())
}

fn write_data(text: String, out: Option<PathBuf>) -> Result<(), Failure> {
    emit(&text, out.as_ref()).map_err(|e| Failure::internal(format!("cannot write output: {e}")))
}

fn json<T: Serialize>(doc: &T) -> Result<String, Failure> {
    serde_json::to_string_pretty(doc)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| Failure::internal(format!("serialization failed: {e}")))
}

/// Pooled-regime equilibria, dispatching on the shopper share.
fn solve_pooled(params: &MarketParams, opts: &SolverOptions) -> Result<EquilibriumSet, Failure> {
    if params.shopper_share > 0.0 {
        solve_shoppers(params, opts)
    } else {
        solve_unobserved(params, opts)
    }
    .map_err(core_failure)
}

// ---------------------------------------------------------------------
// solve

#[derive(Serialize)]
struct SolveDoc {
    thresholds: Thresholds,
    unobserved: EquilibriumSet,
    observed: Vec<EquilibriumSet>,
}

#[derive(Default)]
struct SolveRow {
    record: String,
    regime: String,
    state: String,
    cost: String,
    stability: String,
    q: String,
    weight: String,
    s_bar: String,
    support_low: String,
    support_high: String,
    price: String,
    is_equilibrium: String,
}

const SOLVE_COLUMNS: [&str; 12] = [
    "record",
    "regime",
    "state",
    "cost",
    "stability",
    "q",
    "weight",
    "s_bar",
    "support_low",
    "support_high",
    "price",
    "is_equilibrium",
];

impl SolveRow {
    fn push(self, table: &mut Table) {
        table.row(vec![
            self.record,
            self.regime,
            self.state,
            self.cost,
            self.stability,
            self.q,
            self.weight,
            self.s_bar,
            self.support_low,
            self.support_high,
            self.price,
            self.is_equilibrium,
        ]);
    }
}

fn stability_label(s: Stability) -> &'static str {
    match s {
        Stability::Stable => "stable",
        Stability::Unstable => "unstable",
    }
}

fn equilibrium_rows(table: &mut Table, set: &EquilibriumSet) {
    let (regime, state) = match set.regime {
        Regime::Unobserved => ("unobserved".to_string(), blank()),
        Regime::Observed { state } => ("observed".to_string(), int(state)),
    };
    SolveRow {
        record: "diamond".into(),
        regime: regime.clone(),
        state: state.clone(),
        price: opt_num(set.diamond.price),
        is_equilibrium: set.diamond.is_equilibrium.to_string(),
        ..SolveRow::default()
    }
    .push(table);
    for eq in &set.active {
        SolveRow {
            record: "active".into(),
            regime: regime.clone(),
            state: state.clone(),
            stability: stability_label(eq.stability).into(),
            q: num(eq.q.get()),
            weight: num(eq.weight),
            ..SolveRow::default()
        }
        .push(table);
        for law in &eq.price_laws {
            SolveRow {
                record: "price_law".into(),
                regime: regime.clone(),
                state: state.clone(),
                cost: num(law.cost),
                stability: stability_label(eq.stability).into(),
                weight: num(law.weight),
                support_low: num(law.support_low),
                support_high: num(law.support_high),
                ..SolveRow::default()
            }
            .push(table);
        }
    }
}

fn solve_csv(doc: &SolveDoc) -> String {
    let mut table = Table::new(SOLVE_COLUMNS.to_vec());
    SolveRow {
        record: "q_star".into(),
        q: num(doc.thresholds.q_star),
        ..SolveRow::default()
    }
    .push(&mut table);
    for st in &doc.thresholds.per_state {
        SolveRow {
            record: "threshold".into(),
            state: int(st.state),
            cost: num(st.cost),
            s_bar: num(st.s_bar),
            ..SolveRow::default()
        }
        .push(&mut table);
    }
    SolveRow {
        record: "threshold_pooled".into(),
        s_bar: num(doc.thresholds.pooled),
        ..SolveRow::default()
    }
    .push(&mut table);
    equilibrium_rows(&mut table, &doc.unobserved);
    for set in &doc.observed {
        equilibrium_rows(&mut table, set);
    }
    table.to_csv()
}

fn cmd_solve(common: Common) -> CmdResult {
    let sc = load(&common)?;
    let doc = SolveDoc {
        thresholds: thresholds(&sc.params, &sc.opts).map_err(core_failure)?,
        unobserved: solve_pooled(&sc.params, &sc.opts)?,
        observed: solve_observed(&sc.params, &sc.opts).map_err(core_failure)?,
    };
    let any_active = !doc.unobserved.active.is_empty()
        || doc.observed.iter().any(|set| !set.active.is_empty());
    let text = match resolve_format(&common, &sc.config) {
        Format::Json => json(&doc)?,
        Format::Csv => solve_csv(&doc),
    };
    write_data(text, resolve_out(&common, &sc.config))?;
    if any_active {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("note: no active-search equilibrium in any regime; only the no-search outcome exists");
        Ok(ExitCode::from(3))
    }
}

// ---------------------------------------------------------------------
// sweep-benefit

#[derive(Serialize)]
struct SweepRow {
    q: f64,
    benefit_pooled: f64,
    benefit_states: Vec<f64>,
    search_cost: f64,
}

fn cmd_sweep(common: Common, grid: usize) -> CmdResult {
    if grid < 2 {
        return Err(Failure::config("--grid must be at least 2"));
    }
    let sc = load(&common)?;
    let rule = GaussLegendre::new(sc.opts.quad_nodes);
    let states = sc.params.cost_dist.state_grid(&rule);
    let v = sc.params.valuation;
    let s = sc.params.search_cost;

    let mut rows = Vec::with_capacity(grid + 1);
    for i in 0..=grid {
        let q = i as f64 / grid as f64;
        // The benefit factor vanishes in both limits; pin the endpoints to
        // exact zeros rather than evaluating outside the open interval.
        let a = if i == 0 || i == grid {
            0.0
        } else {
            benefit_factor(q).map_err(core_failure)?
        };
        let mut pooled = 0.0;
        let mut per = Vec::with_capacity(states.len());
        for &(cost, weight) in &states {
            let b = a * (v - cost);
            pooled += weight * b;
            per.push(b);
        }
        rows.push(SweepRow {
            q,
            benefit_pooled: pooled,
            benefit_states: per,
            search_cost: s,
        });
    }

    let text = match resolve_format(&common, &sc.config) {
        Format::Json => json(&rows)?,
        Format::Csv => {
            let mut columns = vec!["q".to_string(), "benefit_pooled".to_string()];
            for k in 0..states.len() {
                columns.push(format!("benefit_state_{k}"));
            }
            columns.push("search_cost".to_string());
            let mut table = Table::new(columns);
            for row in &rows {
                let mut cells = vec![num(row.q), num(row.benefit_pooled)];
                cells.extend(row.benefit_states.iter().map(|&b| num(b)));
                cells.push(num(row.search_cost));
                table.row(cells);
            }
            table.to_csv()
        }
    };
    write_data(text, resolve_out(&common, &sc.config))?;

    let thr = thresholds(&sc.params, &sc.opts).map_err(core_failure)?;
    let best = thr
        .per_state
        .iter()
        .map(|st| st.s_bar)
        .fold(f64::NEG_INFINITY, f64::max);
    if s > best {
        eprintln!("note: the search cost exceeds every activity threshold; no active-search equilibrium");
        Ok(ExitCode::from(3))
    } else {
        Ok(ExitCode::SUCCESS)
    }
}

// ---------------------------------------------------------------------
// welfare

const WELFARE_COLUMNS: [&str; 15] = [
    "record",
    "label",
    "state",
    "cost",
    "weight",
    "active",
    "q",
    "consumer_surplus",
    "firm_profit",
    "total_surplus",
    "market_power",
    "unobserved_value",
    "observed_value",
    "gap",
    "holds",
];

#[derive(Default)]
struct WelfareRow {
    record: String,
    label: String,
    state: String,
    cost: String,
    weight: String,
    active: String,
    q: String,
    consumer_surplus: String,
    firm_profit: String,
    total_surplus: String,
    market_power: String,
    unobserved_value: String,
    observed_value: String,
    gap: String,
    holds: String,
}

impl WelfareRow {
    fn push(self, table: &mut Table) {
        table.row(vec![
            self.record,
            self.label,
            self.state,
            self.cost,
            self.weight,
            self.active,
            self.q,
            self.consumer_surplus,
            self.firm_profit,
            self.total_surplus,
            self.market_power,
            self.unobserved_value,
            self.observed_value,
            self.gap,
            self.holds,
        ]);
    }
}

fn class_label(class: InformationClass) -> &'static str {
    match class {
        InformationClass::BothActive => "both-active",
        InformationClass::MixedObservedActive => "mixed-observed-active",
        InformationClass::AsymmetryDiamondOnly => "asymmetry-diamond-only",
        InformationClass::NoActiveAnywhere => "no-active-anywhere",
    }
}

fn welfare_csv(report: &WelfareReport) -> String {
    let mut table = Table::new(WELFARE_COLUMNS.to_vec());
    let outcome_row = |label: &str, state: String, cost: String, weight: String,
                       rec: &search_market::welfare::OutcomeRecord| WelfareRow {
        record: "outcome".into(),
        label: label.into(),
        state,
        cost,
        weight,
        active: rec.active.to_string(),
        q: num(rec.q),
        consumer_surplus: num(rec.consumer_surplus),
        firm_profit: num(rec.firm_profit),
        total_surplus: num(rec.total_surplus),
        market_power: opt_num(rec.market_power),
        ..WelfareRow::default()
    };
    outcome_row("unobserved", blank(), blank(), blank(), &report.unobserved).push(&mut table);
    for st in &report.per_state {
        outcome_row(
            "state",
            int(st.state),
            num(st.cost),
            num(st.weight),
            &st.record,
        )
        .push(&mut table);
    }
    WelfareRow {
        record: "mean".into(),
        label: "observed_mean".into(),
        q: num(report.observed_mean.q),
        consumer_surplus: num(report.observed_mean.consumer_surplus),
        firm_profit: num(report.observed_mean.firm_profit),
        total_surplus: num(report.observed_mean.total_surplus),
        ..WelfareRow::default()
    }
    .push(&mut table);
    for (label, check) in [
        ("search", &report.search),
        ("consumer_surplus", &report.consumer_surplus),
        ("firm_profit", &report.firm_profit),
        ("total_surplus", &report.total_surplus),
    ] {
        WelfareRow {
            record: "ordering".into(),
            label: label.into(),
            unobserved_value: num(check.unobserved),
            observed_value: num(check.observed_mean),
            gap: num(check.gap),
            holds: check.holds.to_string(),
            ..WelfareRow::default()
        }
        .push(&mut table);
    }
    WelfareRow {
        record: "classification".into(),
        label: class_label(report.classification).into(),
        ..WelfareRow::default()
    }
    .push(&mut table);
    table.to_csv()
}

fn cmd_welfare(common: Common) -> CmdResult {
    let sc = load(&common)?;
    let report = welfare_report(&sc.params, &sc.opts).map_err(core_failure)?;
    let text = match resolve_format(&common, &sc.config) {
        Format::Json => json(&report)?,
        Format::Csv => welfare_csv(&report),
    };
    write_data(text, resolve_out(&common, &sc.config))?;
    if report.classification == InformationClass::NoActiveAnywhere {
        eprintln!("note: no active-search equilibrium in either regime");
        Ok(ExitCode::from(3))
    } else {
        Ok(ExitCode::SUCCESS)
    }
}

// ---------------------------------------------------------------------
// simulate

const SIMULATE_COLUMNS: [&str; 8] = [
    "record",
    "label",
    "index",
    "cost",
    "count",
    "mean",
    "std_error",
    "value",
];

#[derive(Default)]
struct SimulateRow {
    record: String,
    label: String,
    index: String,
    cost: String,
    count: String,
    mean: String,
    std_error: String,
    value: String,
}

impl SimulateRow {
    fn push(self, table: &mut Table) {
        table.row(vec![
            self.record,
            self.label,
            self.index,
            self.cost,
            self.count,
            self.mean,
            self.std_error,
            self.value,
        ]);
    }
}

#[derive(Serialize)]
struct SimulateDoc<'a> {
    regime: &'a str,
    stability: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    state: Option<usize>,
    q: f64,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    indifference_z: Option<f64>,
    result: &'a SimulationResult,
}

fn simulate_csv(doc: &SimulateDoc) -> String {
    let mut table = Table::new(SIMULATE_COLUMNS.to_vec());
    let run_row = |label: &str, value: String| SimulateRow {
        record: "run".into(),
        label: label.into(),
        value,
        ..SimulateRow::default()
    };
    run_row("regime", doc.regime.into()).push(&mut table);
    run_row("stability", doc.stability.into()).push(&mut table);
    if let Some(state) = doc.state {
        run_row("state", int(state)).push(&mut table);
    }
    run_row("q", num(doc.q)).push(&mut table);
    run_row("seed", int(doc.seed)).push(&mut table);
    let r = doc.result;
    for (label, count) in [
        ("rounds", r.rounds),
        ("consumers", r.consumers),
        ("one_quote", r.one_quote),
        ("two_quote", r.two_quote),
        ("shoppers", r.shoppers),
    ] {
        SimulateRow {
            record: "run".into(),
            label: label.into(),
            count: int(count),
            ..SimulateRow::default()
        }
        .push(&mut table);
    }
    let estimate_row = |label: &str, index: String, cost: String,
                        est: &search_market::sim::Estimate| SimulateRow {
        record: "estimate".into(),
        label: label.into(),
        index,
        cost,
        count: int(est.count),
        mean: num(est.mean),
        std_error: num(est.std_error),
        ..SimulateRow::default()
    };
    for (firm, est) in r.firm_profit.iter().enumerate() {
        estimate_row("firm_profit", int(firm), blank(), est).push(&mut table);
    }
    estimate_row("mean_firm_profit", blank(), blank(), &r.mean_firm_profit).push(&mut table);
    estimate_row("transaction_price", blank(), blank(), &r.transaction_price).push(&mut table);
    estimate_row("second_quote_gain", blank(), blank(), &r.second_quote_gain).push(&mut table);
    estimate_row("consumer_surplus", blank(), blank(), &r.consumer_surplus).push(&mut table);
    if let Some(z) = doc.indifference_z {
        SimulateRow {
            record: "diagnostic".into(),
            label: "indifference_z".into(),
            value: num(z),
            ..SimulateRow::default()
        }
        .push(&mut table);
    }
    for st in &r.per_state {
        SimulateRow {
            record: "state".into(),
            label: "rounds".into(),
            index: int(st.state),
            cost: num(st.cost),
            count: int(st.rounds),
            ..SimulateRow::default()
        }
        .push(&mut table);
        SimulateRow {
            record: "state".into(),
            label: "consumers".into(),
            index: int(st.state),
            cost: num(st.cost),
            count: int(st.consumers),
            ..SimulateRow::default()
        }
        .push(&mut table);
        estimate_row("firm_profit", int(st.state), num(st.cost), &st.firm_profit)
            .push(&mut table);
        estimate_row(
            "transaction_price",
            int(st.state),
            num(st.cost),
            &st.transaction_price,
        )
        .push(&mut table);
    }
    table.to_csv()
}

fn cmd_simulate(common: Common, seed_override: Option<u64>) -> CmdResult {
    let sc = load(&common)?;
    let section = sc
        .config
        .simulation
        .clone()
        .ok_or_else(|| Failure::config("simulate requires a [simulation] section"))?;
    let sim_config = section.to_sim_config(seed_override).map_err(Failure::config)?;

    let (regime, regime_label, set) = match section.regime {
        RegimeKey::Unobserved => {
            if section.state.is_some() {
                return Err(Failure::config(
                    "simulation.state applies only to the observed regime",
                ));
            }
            (
                Regime::Unobserved,
                "unobserved",
                solve_pooled(&sc.params, &sc.opts)?,
            )
        }
        RegimeKey::Observed => {
            let state = section.state.ok_or_else(|| {
                Failure::config("observed-regime simulation requires `simulation.state`")
            })?;
            let mut sets = solve_observed(&sc.params, &sc.opts).map_err(core_failure)?;
            let n_states = sets.len();
            if state >= n_states {
                return Err(Failure::missing_equilibrium(format!(
                    "state {state} out of range: the cost law has {n_states} states"
                )));
            }
            (
                Regime::Observed { state },
                "observed",
                sets.swap_remove(state),
            )
        }
    };
    let stability_key = section.stability;
    let eq = match stability_key {
        StabilityKey::Stable => set.stable_active(),
        StabilityKey::Unstable => set.unstable_active(),
    }
    .ok_or_else(|| {
        Failure::missing_equilibrium(format!(
            "no {} active-search equilibrium exists for the selected regime",
            match stability_key {
                StabilityKey::Stable => "stable",
                StabilityKey::Unstable => "unstable",
            }
        ))
    })?
    .clone();

    let result = simulate_market(&sc.params, &eq, regime, &sim_config).map_err(core_failure)?;
    let doc = SimulateDoc {
        regime: regime_label,
        stability: stability_label(eq.stability),
        state: match regime {
            Regime::Observed { state } => Some(state),
            Regime::Unobserved => None,
        },
        q: eq.q.get(),
        seed: sim_config.seed,
        indifference_z: verify_indifference(&result, sc.params.search_cost).ok(),
        result: &result,
    };
    let text = match resolve_format(&common, &sc.config) {
        Format::Json => json(&doc)?,
        Format::Csv => simulate_csv(&doc),
    };
    write_data(text, resolve_out(&common, &sc.config))?;
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------
// unravel

const UNRAVEL_COLUMNS: [&str; 10] = [
    "record",
    "step",
    "state",
    "cost",
    "pool_mean_cost",
    "q_disclosed",
    "q_pooled",
    "profit_disclosed",
    "profit_pooled",
    "disclosed",
];

fn unravel_csv(trace: &UnravelTrace) -> String {
    let mut table = Table::new(UNRAVEL_COLUMNS.to_vec());
    for (i, step) in trace.steps.iter().enumerate() {
        table.row(vec![
            "step".into(),
            int(i),
            int(step.state),
            num(step.cost),
            num(step.pool_mean_cost),
            num(step.q_disclosed),
            num(step.q_pooled),
            num(step.profit_disclosed),
            num(step.profit_pooled),
            step.disclosed.to_string(),
        ]);
    }
    for &state in &trace.undisclosed {
        table.row(vec![
            "undisclosed".into(),
            blank(),
            int(state),
            blank(),
            blank(),
            blank(),
            blank(),
            blank(),
            blank(),
            blank(),
        ]);
    }
    table.to_csv()
}

fn cmd_unravel(common: Common) -> CmdResult {
    let sc = load(&common)?;
    let trace = unravel_disclosure(&sc.params, &sc.opts).map_err(|e| match e {
        CoreError::ContinuousUnsupported => Failure {
            code: 5,
            message: "disclosure analysis requires a discrete cost law".into(),
        },
        other => core_failure(other),
    })?;
    let text = match resolve_format(&common, &sc.config) {
        Format::Json => json(&trace)?,
        Format::Csv => unravel_csv(&trace),
    };
    write_data(text, resolve_out(&common, &sc.config))?;
    Ok(ExitCode::SUCCESS)
}
