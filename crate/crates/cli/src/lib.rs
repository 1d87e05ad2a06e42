//! Convergence studies for the DG Helmholtz solver: configuration, the sweep
//! driver and the CSV table.

pub mod config;
pub mod study;
pub mod table;

pub use config::{EstimatorKind, Study, StudyConfig};
pub use study::{any_failed, run_study};
pub use table::{compute_rates, read_csv, summary_table, write_csv, StudyRecord};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] dgppr::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json config: {0}")]
    Json(#[from] serde_json::Error),
}
