//! Error types for the scheduling and simulation pipeline.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid time configuration: {0}")]
    InvalidTimeConfig(String),
    #[error("duplicate node id `{0}`")]
    DuplicateNode(String),
    #[error("duplicate link `{0}` -> `{1}`")]
    DuplicateLink(String, String),
    #[error("dangling endpoint: link `{src}` -> `{dst}` references unknown node `{missing}`")]
    DanglingEndpoint {
        src: String,
        dst: String,
        missing: String,
    },
    #[error("link `{src}` -> `{dst}`: {reason}")]
    InvalidLink {
        src: String,
        dst: String,
        reason: String,
    },
    #[error("node `{id}`: epoch {epoch} ns outside [0, {t_hc}) ns")]
    EpochOutOfRange { id: String, epoch: i64, t_hc: i64 },
    #[error("application `{id}`: {reason}")]
    InvalidApplication { id: String, reason: String },
    #[error("unknown node id `{0}`")]
    UnknownNode(String),
    #[error("unknown link `{0}` -> `{1}`")]
    UnknownLink(String, String),
    #[error("scenario parse error: {0}")]
    Scenario(String),
}

#[derive(Debug, Error)]
pub enum MappingError {
    #[error("cycle index {c} outside [0, {n_dip})")]
    CycleOutOfRange { c: i64, n_dip: i64 },
    #[error("cycle shift {r} outside [0, {max}]")]
    ShiftOutOfRange { r: i64, max: i64 },
    #[error("extra delay {phi} outside [0, {t_ct})")]
    ExtraDelayOutOfRange { phi: i64, t_ct: i64 },
    #[error("source offset {phi} outside [0, {max}]")]
    OffsetOutOfRange { phi: i64, max: i64 },
    #[error("route is malformed: {0}")]
    MalformedRoute(String),
    #[error("schedule is missing a decision variable for packet {0}")]
    UnboundVariable(String),
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("search space too large for exhaustive mode: ~{estimate} candidate assignments (limit {limit})")]
    SearchSpaceTooLarge { estimate: u128, limit: u128 },
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Mapping(#[from] MappingError),
}

#[derive(Debug, Error)]
pub enum CompileError {
    #[error("node `{node}`: {reason}")]
    Node { node: String, reason: String },
    #[error(transparent)]
    Mapping(#[from] MappingError),
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("deterministic queue overflow at node `{node}` at {at} ns")]
    DeterministicOverflow { node: String, at: i64 },
    #[error("packet {packet} missed its gate at node `{node}` at {at} ns")]
    MissedGate {
        packet: String,
        node: String,
        at: i64,
    },
    #[error("jitter is undefined for application `{0}`: fewer than 2 completed messages")]
    JitterUndefined(String),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Mapping(#[from] MappingError),
}
