//! Monte Carlo experiments on minimal shadows of randomly rotated cubes:
//! configuration, seeded runners, power-law fits and CSV / JSON-lines output.

pub mod config;
pub mod error;
pub mod experiments;
pub mod fit;
pub mod record;

pub use config::{derive_seed, Experiment, ExperimentConfig, Format, OptimizerSettings};
pub use error::{ExpError, Result};
pub use experiments::{run, RunOutput};
pub use fit::PowerLawFit;
pub use record::{emit, parse, ExperimentRecord, CSV_HEADER};
