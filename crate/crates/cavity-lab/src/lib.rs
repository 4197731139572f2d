//! Experiment runner, machine-readable output formats, and the exact quantum
//! reference for the `cavity-lattice` model.
//!
//! The library backs the `sim` binary: every subcommand is a thin wrapper
//! around a `run_*` function in [`experiments`] that returns a typed report,
//! so the same code paths drive the CLI, the integration tests, and the
//! acceptance suite.

pub mod config;
pub mod experiments;
pub mod oracle;
pub mod output;

use cavity_lattice::analysis::AnalysisError;
use cavity_lattice::dynamics::DynamicsError;
use cavity_lattice::initcond::InitError;
use cavity_lattice::model::ModelError;
use oracle::OracleError;

/// Top-level error type; [`LabError::exit_code`] maps each class onto the
/// `sim` process exit codes (2 config, 3 numerical alarm, 4 oracle overflow,
/// 1 everything else).
#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("config error: {0}")]
    Config(String),
    #[error("model error: {0}")]
    Model(#[from] ModelError),
    #[error("integration error: {0}")]
    Dynamics(#[from] DynamicsError),
    #[error("analysis error: {0}")]
    Analysis(#[from] AnalysisError),
    #[error("initial-condition error: {0}")]
    Init(#[from] InitError),
    #[error("oracle error: {0}")]
    Oracle(#[from] OracleError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl LabError {
    pub fn exit_code(&self) -> u8 {
        match self {
            LabError::Config(_) | LabError::Model(_) => 2,
            LabError::Dynamics(e) => match e {
                DynamicsError::InvalidConfig(_) | DynamicsError::Model(_) => 2,
                _ => 3,
            },
            LabError::Analysis(_) => 3,
            LabError::Init(e) => match e {
                InitError::HpGuardViolation { .. } => 3,
                _ => 2,
            },
            LabError::Oracle(e) => match e {
                OracleError::DimensionOverflow { .. } => 4,
                OracleError::TruncationWeight { .. }
                | OracleError::CutoffPopulation { .. }
                | OracleError::NormViolation { .. } => 3,
                _ => 2,
            },
            LabError::Io(_) => 1,
        }
    }
}
