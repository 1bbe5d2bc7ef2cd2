//! End-to-end tests of the `searchmkt` binary: exit codes, output schemas,
//! determinism, and consistency between subcommands.

use std::path::PathBuf;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_searchmkt"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(name: &str, contents: &str) -> PathBuf {
    let path = std::env::temp_dir().join(format!("searchmkt-{}-{name}.toml", std::process::id()));
    std::fs::write(&path, contents).expect("temp config written");
    path
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Two firms, valuation 1, search cost 0.05, costs {0, 0.4} with equal
/// odds: the reference market used throughout the repo.
const REFERENCE: &str = "\
[market]
n_firms = 2
valuation = 1.0
search_cost = 0.05

[market.cost_distribution]
kind = \"discrete\"
costs = [0.0, 0.4]
probs = [0.5, 0.5]
";

struct Csv {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn parse_csv(text: &str) -> Csv {
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .expect("csv header")
        .split(',')
        .map(str::to_string)
        .collect();
    let rows: Vec<Vec<String>> = lines
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    for row in &rows {
        assert_eq!(row.len(), header.len(), "ragged csv row: {row:?}");
    }
    Csv { header, rows }
}

impl Csv {
    fn col(&self, name: &str) -> usize {
        self.header
            .iter()
            .position(|h| h == name)
            .unwrap_or_else(|| panic!("missing column {name} in {:?}", self.header))
    }

    fn select(&self, filters: &[(&str, &str)]) -> Vec<&Vec<String>> {
        let idx: Vec<(usize, &str)> = filters.iter().map(|(c, v)| (self.col(c), *v)).collect();
        self.rows
            .iter()
            .filter(|row| idx.iter().all(|(i, v)| row[*i].as_str() == *v))
            .collect()
    }
}

fn f(cell: &str) -> f64 {
    cell.parse().unwrap_or_else(|_| panic!("not a number: {cell:?}"))
}

#[test]
fn solve_reports_thresholds_and_both_pooled_roots() {
    let config = write_config("solve-ref", REFERENCE);
    let out = run(&["solve", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let csv = parse_csv(&stdout_of(&out));

    assert_eq!(csv.select(&[("record", "q_star")]).len(), 1);
    assert_eq!(csv.select(&[("record", "threshold")]).len(), 2);
    assert_eq!(csv.select(&[("record", "threshold_pooled")]).len(), 1);

    let active = csv.select(&[("record", "active"), ("regime", "unobserved")]);
    assert_eq!(active.len(), 2, "expected an unstable and a stable root");
    let stab = csv.col("stability");
    let q = csv.col("q");
    let stable: Vec<_> = active.iter().filter(|r| r[stab] == "stable").collect();
    assert_eq!(stable.len(), 1);
    assert!((f(&stable[0][q]) - 0.9217897183290575).abs() < 1e-9);

    // Each observed state has its own stable root below/above the pooled one.
    let observed = csv.select(&[("record", "active"), ("regime", "observed")]);
    assert_eq!(observed.len(), 4);
}

#[test]
fn single_state_market_solves_identically_in_both_regimes() {
    let config = write_config(
        "solve-k1",
        "\
[market]
n_firms = 2
valuation = 1.0
search_cost = 0.05

[market.cost_distribution]
kind = \"discrete\"
costs = [0.2]
probs = [1.0]
",
    );
    let out = run(&["solve", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let csv = parse_csv(&stdout_of(&out));
    let pooled = csv.select(&[("record", "active"), ("regime", "unobserved")]);
    let observed = csv.select(&[("record", "active"), ("regime", "observed")]);
    assert_eq!(pooled.len(), 2);
    assert_eq!(observed.len(), 2);
    let (q, stab, w) = (csv.col("q"), csv.col("stability"), csv.col("weight"));
    for (p, o) in pooled.iter().zip(&observed) {
        // Identical decimal strings: both regimes solve the same problem.
        assert_eq!(p[stab], o[stab]);
        assert_eq!(p[q], o[q]);
        assert_eq!(p[w], o[w]);
    }
}

#[test]
fn solve_exits_three_when_search_is_too_costly() {
    let config = write_config("solve-dead", &REFERENCE.replace("0.05", "0.2"));
    let out = run(&["solve", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr_of(&out).contains("no active-search equilibrium"));
    // The no-search outcome is still printed for every regime.
    let csv = parse_csv(&stdout_of(&out));
    assert!(csv.select(&[("record", "active")]).is_empty());
    let diamonds = csv.select(&[("record", "diamond")]);
    assert_eq!(diamonds.len(), 3);
    let is_eq = csv.col("is_equilibrium");
    assert!(diamonds.iter().all(|r| r[is_eq] == "true"));
}

#[test]
fn sweep_pooled_column_is_the_weighted_state_average_with_zero_endpoints() {
    let config = write_config("sweep-ref", REFERENCE);
    let out = run(&[
        "sweep-benefit",
        "--config",
        config.to_str().unwrap(),
        "--grid",
        "50",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let csv = parse_csv(&stdout_of(&out));
    assert_eq!(csv.rows.len(), 51);
    let (qp, b0, b1, sc) = (
        csv.col("benefit_pooled"),
        csv.col("benefit_state_0"),
        csv.col("benefit_state_1"),
        csv.col("search_cost"),
    );
    for col in [qp, b0, b1] {
        assert_eq!(csv.rows.first().unwrap()[col], "0");
        assert_eq!(csv.rows.last().unwrap()[col], "0");
    }
    let mut argmax = [0usize; 3];
    let mut best = [f64::NEG_INFINITY; 3];
    for (i, row) in csv.rows.iter().enumerate() {
        assert_eq!(row[sc], "0.05");
        let pooled = f(&row[qp]);
        let states = [f(&row[b0]), f(&row[b1])];
        assert!(
            (pooled - 0.5 * (states[0] + states[1])).abs() <= 1e-12,
            "row {i}: pooled {pooled} vs state average"
        );
        for (j, value) in [pooled, states[0], states[1]].into_iter().enumerate() {
            if value > best[j] {
                best[j] = value;
                argmax[j] = i;
            }
        }
    }
    assert_eq!(argmax[0], argmax[1], "curves must peak on the same row");
    assert_eq!(argmax[0], argmax[2], "curves must peak on the same row");
}

#[test]
fn sweep_rejects_a_degenerate_grid() {
    let config = write_config("sweep-bad-grid", REFERENCE);
    let out = run(&[
        "sweep-benefit",
        "--config",
        config.to_str().unwrap(),
        "--grid",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn welfare_reference_orderings_all_hold() {
    let config = write_config("welfare-ref", REFERENCE);
    let out = run(&["welfare", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let csv = parse_csv(&stdout_of(&out));
    let orderings = csv.select(&[("record", "ordering")]);
    assert_eq!(orderings.len(), 4);
    let holds = csv.col("holds");
    assert!(orderings.iter().all(|r| r[holds] == "true"));
    assert_eq!(
        csv.select(&[("record", "classification"), ("label", "both-active")]).len(),
        1
    );
}

#[test]
fn welfare_exits_three_when_nothing_is_active() {
    let config = write_config("welfare-dead", &REFERENCE.replace("0.05", "0.2"));
    let out = run(&["welfare", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let csv = parse_csv(&stdout_of(&out));
    assert_eq!(
        csv.select(&[("record", "classification"), ("label", "no-active-anywhere")]).len(),
        1
    );
}

#[test]
fn simulate_is_byte_identical_for_a_repeated_seed_and_moves_with_it() {
    let config = write_config(
        "simulate-seeded",
        &format!(
            "{REFERENCE}
[simulation]
seed = 7
rounds = 2000
consumers_per_round = 2
"
        ),
    );
    let args = ["simulate", "--config", config.to_str().unwrap()];
    let first = run(&args);
    let second = run(&args);
    assert_eq!(first.status.code(), Some(0), "stderr: {}", stderr_of(&first));
    assert_eq!(first.stdout, second.stdout, "same seed must give identical bytes");

    let reseeded = run(&["simulate", "--config", config.to_str().unwrap(), "--seed", "8"]);
    assert_eq!(reseeded.status.code(), Some(0));
    assert_ne!(first.stdout, reseeded.stdout, "--seed must change the draw");

    // The indifference diagnostic sits within sampling error of zero.
    let csv = parse_csv(&stdout_of(&first));
    let z_rows = csv.select(&[("record", "diagnostic"), ("label", "indifference_z")]);
    assert_eq!(z_rows.len(), 1);
    assert!(f(&z_rows[0][csv.col("value")]).abs() < 5.0);
}

#[test]
fn simulate_exits_four_when_the_selection_is_missing() {
    // 0.09 sits between the pooled threshold and the low-cost state's
    // threshold: the pooled regime has no active equilibrium to simulate.
    let config = write_config(
        "simulate-missing",
        &format!(
            "{}
[simulation]
seed = 1
rounds = 100
consumers_per_round = 1
",
            REFERENCE.replace("0.05", "0.09")
        ),
    );
    let out = run(&["simulate", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    assert!(stderr_of(&out).contains("no stable active-search equilibrium"));
}

#[test]
fn simulate_flags_an_unstable_selection() {
    let config = write_config(
        "simulate-unstable",
        &format!(
            "{REFERENCE}
[simulation]
seed = 3
rounds = 500
consumers_per_round = 2
stability = \"unstable\"
"
        ),
    );
    let out = run(&["simulate", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let csv = parse_csv(&stdout_of(&out));
    let rows = csv.select(&[("record", "run"), ("label", "stability")]);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][csv.col("value")], "unstable");
}

#[test]
fn observed_state_simulation_selects_that_state_only() {
    let config = write_config(
        "simulate-observed",
        &format!(
            "{REFERENCE}
[simulation]
seed = 11
rounds = 400
consumers_per_round = 2
regime = \"observed\"
state = 1
"
        ),
    );
    let out = run(&["simulate", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let csv = parse_csv(&stdout_of(&out));
    let state_rounds = csv.select(&[("record", "state"), ("label", "rounds")]);
    assert_eq!(state_rounds.len(), 1, "only the selected state is simulated");
    assert_eq!(state_rounds[0][csv.col("index")], "1");
    assert_eq!(state_rounds[0][csv.col("count")], "400");

    let bad = write_config(
        "simulate-observed-bad",
        &format!(
            "{REFERENCE}
[simulation]
seed = 11
rounds = 400
consumers_per_round = 2
regime = \"observed\"
state = 9
"
        ),
    );
    let out = run(&["simulate", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn unravel_discloses_down_to_the_lowest_state() {
    let config = write_config("unravel-ref", REFERENCE);
    let out = run(&["unravel", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let csv = parse_csv(&stdout_of(&out));
    let steps = csv.select(&[("record", "step")]);
    assert_eq!(steps.len(), 1);
    assert_eq!(steps[0][csv.col("state")], "1");
    assert_eq!(steps[0][csv.col("disclosed")], "true");
    let undisclosed = csv.select(&[("record", "undisclosed")]);
    assert_eq!(undisclosed.len(), 1);
    assert_eq!(undisclosed[0][csv.col("state")], "0");
}

#[test]
fn unravel_exits_five_on_a_continuous_law() {
    let config = write_config(
        "unravel-continuous",
        "\
[market]
n_firms = 2
valuation = 1.0
search_cost = 0.05

[market.cost_distribution]
kind = \"uniform\"
lower = 0.05
upper = 0.35
",
    );
    let out = run(&["unravel", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(5));
    assert!(stderr_of(&out).contains("discrete"));
}

#[test]
fn unknown_configuration_keys_are_rejected() {
    let config = write_config(
        "typo",
        &format!(
            "{REFERENCE}
[solver]
tolerance = 1e-13
typo_nodes = 64
"
        ),
    );
    let out = run(&["solve", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("typo_nodes"));

    let stray = write_config(
        "stray-dist-key",
        "\
[market]
n_firms = 2
valuation = 1.0
search_cost = 0.05

[market.cost_distribution]
kind = \"uniform\"
lower = 0.05
upper = 0.35
costs = [0.2]
",
    );
    let out = run(&["solve", "--config", stray.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("costs"));
}

#[test]
fn json_format_carries_the_same_equilibria() {
    let config = write_config("solve-json", REFERENCE);
    let out = run(&[
        "solve",
        "--config",
        config.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_str(&stdout_of(&out)).expect("valid json");
    assert_eq!(doc["unobserved"]["active"].as_array().unwrap().len(), 2);
    assert_eq!(doc["observed"].as_array().unwrap().len(), 2);
    assert!(doc["thresholds"]["pooled"].is_number());
}

#[test]
fn out_flag_writes_the_same_bytes_as_stdout() {
    let config = write_config("solve-out", REFERENCE);
    let piped = run(&["solve", "--config", config.to_str().unwrap()]);
    let target = std::env::temp_dir().join(format!(
        "searchmkt-{}-solve-out.csv",
        std::process::id()
    ));
    let filed = run(&[
        "solve",
        "--config",
        config.to_str().unwrap(),
        "--out",
        target.to_str().unwrap(),
    ]);
    assert_eq!(filed.status.code(), Some(0));
    assert!(filed.stdout.is_empty(), "data must go to the file, not stdout");
    assert_eq!(std::fs::read(&target).unwrap(), piped.stdout);
}
