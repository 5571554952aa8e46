//! Simulation and analysis toolkit for crowdsourced subjective video-quality studies.
//!
//! The crate covers the whole life of a study:
//!
//! * [`model`] - catalog, subject and record types plus the study configuration.
//! * [`netsim`] - prefetch/retry/halt protocol and CPU-induced playback stalls.
//! * [`subject`] - synthetic rater populations and the opinion-score model.
//! * [`session`] - the per-subject session state machine.
//! * [`screening`] - staged subject rejection (vision, skippers, stalls, BT.500, consistency).
//! * [`aggregate`] - MOS/DMOS, split-half reliability, golden-video validation, stratification.
//! * [`stats`] - correlation, Wilcoxon, logistic mapping, kernel ridge regression.
//! * [`predictor`] - benchmark harness for quality predictors.
//! * [`study`] - end-to-end simulation of a full study from one seed.
//!
//! Every stochastic step draws from an explicit [`rng::SimRng`] stream derived from one
//! master seed, so results do not depend on how work is scheduled across threads.

pub mod aggregate;
pub mod error;
pub mod exec;
pub mod io;
pub mod model;
pub mod netsim;
pub mod predictor;
pub mod rng;
pub mod screening;
pub mod session;
pub mod stats;
pub mod study;
pub mod subject;

pub use error::{ConfigError, DataError};
pub use exec::Execution;
