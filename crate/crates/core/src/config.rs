//! Run configuration: a flat key-value TOML file that round-trips exactly.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::harness::FitnessWeights;
use crate::lang::DEFAULT_FUEL;
use crate::search::{RepairParams, SearchConfig};

pub const DEFAULT_TESTGEN_BUDGET: usize = 200;
pub const DEFAULT_MIN_SUPPORT: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bug: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub technique: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    pub seed: u64,
    pub pop_size: usize,
    pub max_generations: u32,
    pub tournament_k: usize,
    pub w_pos: f64,
    pub w_neg: f64,
    pub diversity_weight: f64,
    pub mutation_rate: f64,
    pub testgen_budget: usize,
    pub min_support: usize,
    pub fuel: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let search = SearchConfig::default();
        Self {
            bug: None,
            technique: None,
            out: None,
            seed: search.seed,
            pop_size: search.pop_size,
            max_generations: search.max_generations,
            tournament_k: search.tournament_k,
            w_pos: search.weights.w_pos,
            w_neg: search.weights.w_neg,
            diversity_weight: search.diversity_weight,
            mutation_rate: search.mutation_rate,
            testgen_budget: DEFAULT_TESTGEN_BUDGET,
            min_support: DEFAULT_MIN_SUPPORT,
            fuel: DEFAULT_FUEL,
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("io error on {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Toml(#[from] toml::de::Error),
}

impl RunConfig {
    pub fn search_config(&self) -> SearchConfig {
        SearchConfig {
            pop_size: self.pop_size,
            max_generations: self.max_generations,
            tournament_k: self.tournament_k,
            weights: FitnessWeights {
                w_pos: self.w_pos,
                w_neg: self.w_neg,
            },
            diversity_weight: self.diversity_weight,
            mutation_rate: self.mutation_rate,
            seed: self.seed,
        }
    }

    pub fn repair_params(&self, jobs: usize) -> RepairParams {
        RepairParams {
            fuel: self.fuel,
            min_support: self.min_support,
            jobs,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn save(&self, path: &Path) -> Result<(), ConfigError> {
        std::fs::write(path, self.to_toml()).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}
