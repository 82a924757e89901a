//! Config-driven experiments behind the command-line tool.

pub mod config;
pub mod experiments;
pub mod library;
pub mod report;
pub mod selftest;
pub mod tail;

pub use config::ExperimentConfig;
pub use experiments::{
    asclt_report, run_asclt, run_bounds, run_corr_dim, run_lambda_survey, run_lyap, run_simulate,
    survey_report, AscltReport, AscltRow, SurveyRow,
};
pub use library::LibrarySystem;
pub use report::{Cell, Format, Report, Table};
pub use selftest::{run_selftest, SelftestOutcome, DEFAULT_SELFTEST_SEED};
pub use tail::{run_tail, TailReport, TailRow, Verdict};
