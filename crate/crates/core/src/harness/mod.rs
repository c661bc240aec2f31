//! Scenario configuration, the game runner, persistence, plot data and
//! the bundled suite.

pub mod config;
pub mod persist;
pub mod plot;
pub mod run;
pub mod scenario;
pub mod suite;

use thiserror::Error;

pub use config::ConfigError;
pub use persist::{persist, read_trace, reanalyze, write_trace, TraceHeader, TRACE_SCHEMA};
pub use plot::{emit_plot_data, PlotKind, PLOT_SCHEMA};
pub use run::{analyze, run, Analysis, RunOutput, Summary, SUMMARY_SCHEMA};
pub use scenario::{parse_language, Claim, Scenario, StreamDef, SCENARIO_SCHEMA};
pub use suite::{run_suite, SuiteOptions, SuiteRow, BUNDLED};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Stream(#[from] crate::streams::StreamError),
    #[error(transparent)]
    Gen(#[from] crate::genmeta::GenError),
    #[error(transparent)]
    Lang(#[from] crate::langs::LangError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("trace: {0}")]
    Trace(String),
    #[error("environment: {0}")]
    Env(String),
}

impl From<ConfigError> for HarnessError {
    fn from(e: ConfigError) -> Self {
        Self::Config(e.to_string())
    }
}
