use crate::lattice::Cell;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("empty")]
    Empty,
    #[error("duplicate cell {0}")]
    Duplicate(Cell),
    #[error("cell {0} is off the z=0 plane of a 2D configuration")]
    NonPlanar(Cell),
    #[error("unknown module id {0}")]
    UnknownModule(u32),
    #[error("cell {0} is occupied")]
    Occupied(Cell),
    #[error("stale slide: mover is not at {0}")]
    StaleSlide(Cell),
    #[error("malformed: {0}")]
    Malformed(String),
    #[error("disconnected input")]
    DisconnectedInput,
    #[error("ineligible input: {0}")]
    IneligibleInput(String),
    #[error("routing failed: {0}")]
    RoutingFailed(String),
    #[error("internal invariant breach: {0}")]
    InvariantBreach(String),
    #[error("would disconnect")]
    WouldDisconnect,
    #[error("requires monotone")]
    RequiresMonotone,
    #[error("generation failed: {0}")]
    GenerationFailed(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
