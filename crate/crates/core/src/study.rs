//! One-call study simulation from a master seed.

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::exec::Execution;
use crate::io::SessionRow;
use crate::model::{generate_catalog, Catalog, CatalogSpec, RatingRecord, StudyConfig, SubjectProfile};
use crate::rng::{domain, stream};
use crate::session::{simulate_population, SessionRecord, StudyDesign};
use crate::subject::{spawn_population, PopulationSpec};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct StudySpec {
    pub study: StudyConfig,
    pub catalog: CatalogSpec,
    pub population: PopulationSpec,
}

impl StudySpec {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.study.validate()?;
        self.population.validate()
    }
}

#[derive(Debug, Clone)]
pub struct StudyOutput {
    pub catalog: Catalog,
    pub design: StudyDesign,
    pub subjects: Vec<SubjectProfile>,
    pub sessions: Vec<SessionRecord>,
}

impl StudyOutput {
    pub fn ratings(&self) -> Vec<RatingRecord> {
        self.sessions.iter().flat_map(|s| s.ratings.iter().cloned()).collect()
    }

    pub fn session_rows(&self) -> Vec<SessionRow> {
        self.sessions.iter().map(SessionRow::from).collect()
    }
}

pub fn run_study(spec: &StudySpec, seed: u64, mode: Execution) -> Result<StudyOutput, ConfigError> {
    spec.validate()?;
    let catalog = generate_catalog(&spec.catalog, &mut stream(seed, domain::CATALOG, 0))?;
    run_study_with_catalog(spec, catalog, seed, mode)
}

/// Like [`run_study`] but with a supplied catalog.
pub fn run_study_with_catalog(spec: &StudySpec, catalog: Catalog, seed: u64, mode: Execution) -> Result<StudyOutput, ConfigError> {
    spec.validate()?;
    let design = StudyDesign::new(&catalog, &spec.study, &mut stream(seed, domain::DESIGN, 0))?;
    let subjects = spawn_population(&spec.population, &mut stream(seed, domain::POPULATION, 0))?;
    let sessions = simulate_population(&subjects, &spec.study, &catalog, &design, &spec.population.effects, seed, mode);
    Ok(StudyOutput { catalog, design, subjects, sessions })
}
