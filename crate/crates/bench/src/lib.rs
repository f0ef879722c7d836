//! Campaign driver behind the `hmat-bench` CLI: builds matrices from a
//! [`BenchConfig`], verifies them, times the products and renders
//! [`BenchReport`] rows as CSV or JSON.

pub mod config;
pub mod estimate;
pub mod report;
pub mod run;

pub use config::{BenchConfig, FormatKind, Scheme};
pub use report::{to_json, write_csv, BenchReport, CsvRow, ErrorInfo, MemoryInfo, MvmTiming, StructureInfo};
pub use run::{build, cmd_bench_mvm, cmd_build, cmd_sweep, cmd_verify, Axis, Built, Campaign, DENSE_LIMIT};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Hmat(#[from] hmat::Error),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("report: {0}")]
    Report(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, BenchError>;
