use thiserror::Error;

use crate::instance::Violation;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {}", format_violations(.0))]
    InvalidInstance(Vec<Violation>),

    #[error("matching is not feasible for this instance")]
    InfeasibleMatching,

    #[error("unknown agent id {0}")]
    UnknownAgent(usize),

    #[error("unknown task id {0}")]
    UnknownTask(usize),

    #[error("task {0} is already matched")]
    TaskAlreadyMatched(usize),

    #[error("agent {0} has no edges to report")]
    IsolatedAgent(usize),

    #[error("report for {side} {id} is not bounded by the true type: {reason}")]
    UnboundedReport {
        side: &'static str,
        id: usize,
        reason: String,
    },

    #[error("profile has {got} reports but the instance has {expected} {side}")]
    ReportCount {
        side: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("randomized mechanism requires a seed")]
    MissingSeed,

    #[error("mechanism {0} is not supported here")]
    UnsupportedMechanism(&'static str),

    #[error("enumeration cap exceeded: {0}")]
    CapExceeded(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
