//! Scenario configuration: one TOML file with nested sections mirroring
//! the model, solver, simulation, and output settings. Unknown keys are
//! rejected everywhere so typos fail fast instead of silently falling back
//! to defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use search_market::model::{CostDistribution, MarketParams, SearchCostMode};
use search_market::sim::SimulationConfig;
use search_market::solver::SolverOptions;

/// Parsed scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub market: MarketSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationSection>,
    #[serde(default)]
    pub output: OutputSection,
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<ScenarioConfig, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn to_params(&self) -> Result<MarketParams, String> {
        let dist = self.market.cost_distribution.build()?;
        MarketParams::with_options(
            self.market.n_firms,
            self.market.valuation,
            self.market.search_cost,
            dist,
            self.market.shopper_share,
            self.market.search_cost_mode.into(),
        )
        .map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketSection {
    pub n_firms: u32,
    pub valuation: f64,
    pub search_cost: f64,
    #[serde(default)]
    pub shopper_share: f64,
    #[serde(default)]
    pub search_cost_mode: ModeKey,
    pub cost_distribution: DistSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ModeKey {
    #[default]
    FirstFree,
    AllCostly,
}

impl From<ModeKey> for SearchCostMode {
    fn from(key: ModeKey) -> SearchCostMode {
        match key {
            ModeKey::FirstFree => SearchCostMode::FirstFree,
            ModeKey::AllCostly => SearchCostMode::AllCostly,
        }
    }
}

/// Cost-law section: `kind` selects the family, and only that family's
/// keys may appear alongside it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistSection {
    pub kind: DistKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub costs: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probs: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistKind {
    Discrete,
    Uniform,
    QuantileTable,
}

impl DistSection {
    #[cfg(test)]
    pub fn discrete(costs: Vec<f64>, probs: Vec<f64>) -> Self {
        DistSection {
            costs: Some(costs),
            probs: Some(probs),
            ..DistSection::empty(DistKind::Discrete)
        }
    }

    #[cfg(test)]
    pub fn uniform(lower: f64, upper: f64) -> Self {
        DistSection {
            lower: Some(lower),
            upper: Some(upper),
            ..DistSection::empty(DistKind::Uniform)
        }
    }

    #[cfg(test)]
    fn empty(kind: DistKind) -> Self {
        DistSection {
            kind,
            costs: None,
            probs: None,
            lower: None,
            upper: None,
            levels: None,
            values: None,
        }
    }

    fn reject_stray(&self, allowed: &[&str]) -> Result<(), String> {
        let present = [
            ("costs", self.costs.is_some()),
            ("probs", self.probs.is_some()),
            ("lower", self.lower.is_some()),
            ("upper", self.upper.is_some()),
            ("levels", self.levels.is_some()),
            ("values", self.values.is_some()),
        ];
        let stray: Vec<&str> = present
            .into_iter()
            .filter(|(name, is_set)| *is_set && !allowed.contains(name))
            .map(|(name, _)| name)
            .collect();
        if stray.is_empty() {
            Ok(())
        } else {
            Err(format!(
                "cost_distribution keys {stray:?} do not apply to kind {:?}",
                self.kind
            ))
        }
    }

    fn require<T: Clone>(field: &Option<T>, name: &str) -> Result<T, String> {
        field
            .clone()
            .ok_or_else(|| format!("cost_distribution is missing `{name}`"))
    }

    pub fn build(&self) -> Result<CostDistribution, String> {
        match self.kind {
            DistKind::Discrete => {
                self.reject_stray(&["costs", "probs"])?;
                CostDistribution::discrete(
                    Self::require(&self.costs, "costs")?,
                    Self::require(&self.probs, "probs")?,
                )
            }
            DistKind::Uniform => {
                self.reject_stray(&["lower", "upper"])?;
                CostDistribution::uniform(
                    Self::require(&self.lower, "lower")?,
                    Self::require(&self.upper, "upper")?,
                )
            }
            DistKind::QuantileTable => {
                self.reject_stray(&["levels", "values"])?;
                CostDistribution::quantile_table(
                    Self::require(&self.levels, "levels")?,
                    Self::require(&self.values, "values")?,
                )
            }
        }
        .map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub tolerance: f64,
    pub quadrature_nodes: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        let opts = SolverOptions::default();
        SolverSection {
            tolerance: opts.root_tol,
            quadrature_nodes: opts.quad_nodes,
        }
    }
}

impl SolverSection {
    pub fn to_options(&self) -> Result<SolverOptions, String> {
        if !(self.tolerance > 0.0 && self.tolerance <= 1e-3) {
            return Err(format!(
                "solver.tolerance must lie in (0, 1e-3], got {}",
                self.tolerance
            ));
        }
        let opts = SolverOptions {
            root_tol: self.tolerance,
            quad_nodes: self.quadrature_nodes,
            ..SolverOptions::default()
        };
        opts.validate().map_err(|e| e.to_string())?;
        Ok(opts)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub seed: u64,
    pub rounds: u64,
    pub consumers_per_round: u32,
    #[serde(default)]
    pub regime: RegimeKey,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<usize>,
    #[serde(default)]
    pub stability: StabilityKey,
    #[serde(default)]
    pub record_prices: bool,
}

impl SimulationSection {
    pub fn to_sim_config(&self, seed_override: Option<u64>) -> Result<SimulationConfig, String> {
        let config = SimulationConfig::new(
            seed_override.unwrap_or(self.seed),
            self.rounds,
            self.consumers_per_round,
        )
        .map_err(|e| e.to_string())?;
        Ok(if self.record_prices {
            config.with_price_recording()
        } else {
            config
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum RegimeKey {
    #[default]
    Unobserved,
    Observed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum StabilityKey {
    #[default]
    Stable,
    Unstable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub format: Format,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}
