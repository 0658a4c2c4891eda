//! Error and terminal-status types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid size {0}: n must be even and >= 8")]
    InvalidGrid(usize),

    #[error("non-finite value encountered in {context}")]
    NonFinite { context: &'static str },

    #[error("fields live on different grids ({0} vs {1})")]
    GridMismatch(usize, usize),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("vacuum breach at t={t}: rho={value} at cell ({i},{j})")]
    VacuumBreach { t: f64, i: usize, j: usize, value: f64 },

    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("snapshot format error: {0}")]
    Snapshot(String),

    #[error("scenario spec error: {0}")]
    Scenario(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// How a time integration ended. Aborts are reportable outcomes, not
/// programmer errors, so they are carried as data rather than `Err`.
#[derive(Debug, Clone, PartialEq)]
pub enum TerminalStatus {
    Completed,
    VacuumBreach { t: f64, i: usize, j: usize, value: f64 },
    NonFinite { t: f64, what: String },
    CflCollapse { t: f64, dt: f64 },
}

impl TerminalStatus {
    pub fn is_completed(&self) -> bool {
        matches!(self, TerminalStatus::Completed)
    }

    pub fn label(&self) -> &'static str {
        match self {
            TerminalStatus::Completed => "completed",
            TerminalStatus::VacuumBreach { .. } => "vacuum-breach",
            TerminalStatus::NonFinite { .. } => "non-finite",
            TerminalStatus::CflCollapse { .. } => "cfl-collapse",
        }
    }
}

impl std::fmt::Display for TerminalStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TerminalStatus::Completed => write!(f, "completed"),
            TerminalStatus::VacuumBreach { t, i, j, value } => {
                write!(f, "vacuum-breach at t={t}: rho={value} at ({i},{j})")
            }
            TerminalStatus::NonFinite { t, what } => write!(f, "non-finite {what} at t={t}"),
            TerminalStatus::CflCollapse { t, dt } => write!(f, "cfl-collapse at t={t}: dt={dt}"),
        }
    }
}
