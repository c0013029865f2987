use std::path::Path;

use serde::{Deserialize, Serialize};

use super::gamma::GammaConfig;
use super::HarnessError;
use crate::construction::ConstructionConfig;

fn default_population() -> u64 {
    50
}

fn default_q_steps() -> u64 {
    20
}

/// Grid of `(K, N, n, q)` with `N <= max_population`, `q = j/q_steps`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HypergridConfig {
    #[serde(default = "default_population")]
    pub max_population: u64,
    #[serde(default = "default_q_steps")]
    pub q_steps: u64,
}

impl Default for HypergridConfig {
    fn default() -> Self {
        Self { max_population: default_population(), q_steps: default_q_steps() }
    }
}

fn default_n_max() -> u64 {
    7
}

fn default_trials() -> u64 {
    100
}

fn default_cap() -> u64 {
    crate::halfbound::DEFAULT_MAX_INDEX
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HalfboundConfig {
    #[serde(default = "default_n_max")]
    pub n_max: u64,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
    /// Largest admissible `n_max`.
    #[serde(default = "default_cap")]
    pub cap: u64,
}

impl Default for HalfboundConfig {
    fn default() -> Self {
        Self { n_max: default_n_max(), trials: default_trials(), seed: 0, cap: default_cap() }
    }
}

/// One config file; each command reads its own section.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub construction: Option<ConstructionConfig>,
    pub gamma: Option<GammaConfig>,
    pub hypergrid: Option<HypergridConfig>,
    pub halfbound: Option<HalfboundConfig>,
}

impl ExperimentConfig {
    /// Parses TOML, or JSON when the text starts with `{`.
    pub fn parse(text: &str, origin: &str) -> Result<Self, HarnessError> {
        let config = if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| HarnessError::Config(format!("{origin}: {e}")))?
        } else {
            toml::from_str(text).map_err(|e| HarnessError::Config(format!("{origin}: {e}")))?
        };
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_are_optional() {
        let c = ExperimentConfig::parse("[halfbound]\nn_max = 5\n", "t").unwrap();
        assert_eq!(c.halfbound.unwrap().n_max, 5);
        assert!(c.construction.is_none());
        let j = ExperimentConfig::parse(r#"{"hypergrid": {"max_population": 10}}"#, "t").unwrap();
        assert_eq!(j.hypergrid.unwrap().q_steps, 20);
    }

    #[test]
    fn errors_carry_positions() {
        let text = "[construction]\np = \"1/4\"\nepsilons = [\"3/10\"]\nset_family = [\"0\"]\nreductions = [\"x / 0\"]\nstages = 1\nn_horizon = 5\n";
        let err = ExperimentConfig::parse(text, "bad.toml").unwrap_err().to_string();
        assert!(err.contains("line 5"), "{err}");
        assert!(err.contains("column 5"), "{err}");
        let err = ExperimentConfig::parse("{\"halfbound\": {\"n_max\": \"x\"}}", "bad.json").unwrap_err().to_string();
        assert!(err.contains("line 1"), "{err}");
        let err = ExperimentConfig::parse("[hypergrid]\nmax_populaton = 3\n", "t").unwrap_err().to_string();
        assert!(err.contains("unknown field"), "{err}");
    }
}
