//! Error type shared by every module of the engine.

use thiserror::Error;

/// Result alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point {0} lies outside [0,1)")]
    OutOfDomain(String),
    #[error("digit decision is ambiguous at {prec} bits")]
    Ambiguous { prec: u32 },
    #[error("containment is undecidable at {prec} bits")]
    UnknownContainment { prec: u32 },
    #[error("precision cap of {0} bits reached without a decision")]
    PrecisionCap(u32),
    #[error("orbit reached a terminal point (finite expansion)")]
    TerminalPoint,
    #[error("interval is not contained in the branch domain")]
    DomainViolation,
    #[error("cell {digit} is empty for symbol {symbol}")]
    EmptyCell { symbol: u32, digit: u64 },
    #[error("symbol {0} is not part of this system")]
    UnknownSymbol(u32),
    #[error("invalid system: {0}")]
    InvalidSystem(String),
    #[error("invalid base process: {0}")]
    InvalidBase(String),
    #[error("invalid interval: {0}")]
    InvalidInterval(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("tracker is not active")]
    NotActive,
    #[error("cylinder has zero measure")]
    DegenerateCylinder,
    #[error("symbol prefix exhausted; need at least {needed} symbols")]
    PrefixExhausted { needed: usize },
    #[error("comparison depth cap {0} reached while containment still holds")]
    DepthCapExceeded(usize),
    #[error("all {0} trials were excluded")]
    AllTrialsExcluded(usize),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("enumeration would produce {0} words, above the guard")]
    GuardExceeded(u128),
    #[error("digit does not fit in 64 bits")]
    DigitOverflow,
    #[error("trial {trial}: {inner}")]
    InTrial { trial: u64, inner: Box<Error> },
    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}
