//! TOML run configuration.

use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use vqcsim::model::{CatalogSpec, StudyConfig};
use vqcsim::predictor::EvalConfig;
use vqcsim::screening::ScreeningConfig;
use vqcsim::study::StudySpec;
use vqcsim::subject::{CpuSpec, NetworkSpec, PopulationSpec};

/// Knobs of the `aggregate` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AggregateSection {
    pub split_half_reps: usize,
    /// Ratings a video needs within a stratum to enter stratified comparisons.
    pub min_stratum_ratings: usize,
    pub curve_max_n: usize,
    pub curve_step: usize,
}

impl Default for AggregateSection {
    fn default() -> Self {
        AggregateSection { split_half_reps: 100, min_stratum_ratings: 5, curve_max_n: 500, curve_step: 10 }
    }
}

/// Every section is optional. `[network]` and `[cpu]` replace the
/// corresponding population sub-tables.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub study: StudyConfig,
    pub catalog: CatalogSpec,
    pub population: PopulationSpec,
    pub network: NetworkSpec,
    pub cpu: CpuSpec,
    pub screening: ScreeningConfig,
    pub aggregate: AggregateSection,
    pub evaluation: EvalConfig,
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Config> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                toml::from_str::<Config>(&text).with_context(|| format!("parsing {}", p.display()))?
            }
            None => Config::default(),
        };
        cfg.population.network = cfg.network.clone();
        cfg.population.cpu = cfg.cpu.clone();
        Ok(cfg)
    }

    pub fn study_spec(&self) -> StudySpec {
        StudySpec { study: self.study.clone(), catalog: self.catalog.clone(), population: self.population.clone() }
    }

    /// Master seed: the flag wins over `study.rng_seed`.
    pub fn seed(&self, flag: Option<u64>) -> u64 {
        flag.unwrap_or(self.study.rng_seed)
    }
}
