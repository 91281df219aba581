use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),
    #[error("incidence angle {0} rad outside [-pi/2, pi/2]")]
    AngleOutOfRange(f64),
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("array is not critically spaced (d != c/(2 f_c))")]
    NotCriticallySpaced,
    #[error("length mismatch: {0}")]
    LengthMismatch(&'static str),
    #[error("delay {delay_s} s exceeds the block duration {block_s} s")]
    DelayTooLong { delay_s: f64, block_s: f64 },
    #[error("signal has zero energy")]
    ZeroEnergy,
    #[error("segment length {segment} exceeds signal length {signal}")]
    SegmentTooLong { segment: usize, signal: usize },
    #[error("sample rate {got_hz} Hz below required {need_hz} Hz")]
    SampleRateTooLow { got_hz: f64, need_hz: f64 },
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("no estimate: {0}")]
    NoEstimate(&'static str),
    #[error("frequency grid mismatch: {0}")]
    GridMismatch(&'static str),
    #[error("too few symbols: got {got}, need at least {min}")]
    TooFewSymbols { got: usize, min: usize },
}

pub type Result<T> = core::result::Result<T, Error>;
