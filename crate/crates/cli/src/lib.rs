//! Command-line front end: spec files, the analysis pipeline and the
//! certificate writers behind the `hkdich` binary.

pub mod analysis;
pub mod error;
pub mod report;
pub mod spec;

pub use analysis::{run_analysis, AnalysisConfig, Certificate, DEFAULT_CONDITIONS};
pub use error::CliError;
pub use spec::{example_spec, Inputs, SpecFile};

/// Exit code for input errors.
pub const EXIT_INPUT: i32 = 2;
