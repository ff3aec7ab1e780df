//! Experiment plumbing: configuration, generators, runs, summaries and the
//! verification suites.

pub mod config;
pub mod generate;
pub mod run;
pub mod summary;
pub mod verify;

pub use config::{parse_config, ExperimentSpec, LossKind, MdpKind, Mode};
pub use generate::{generate_losses, generate_mdp};
pub use run::{run_experiment, RunOutcome};
pub use summary::{summarize, CheckEntry, SummaryReport};
pub use verify::{verify, Suite, VerifyOptions, VerifyReport};
