//! File formats, configuration and the experiment driver around
//! [`adacs_core`].

pub mod config;
pub mod error;
pub mod experiment;
pub mod pgm;
pub mod report;

pub use config::{ExperimentConfig, Mode, Overrides};
pub use error::{Error, Result};
pub use experiment::{run_experiment, ImageOutcome};
