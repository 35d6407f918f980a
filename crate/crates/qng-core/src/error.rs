//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Two objects defined on different truncated bases were combined.
    #[error("basis mismatch: cutoff {left} vs cutoff {right}")]
    BasisMismatch { left: usize, right: usize },

    /// A constructor parameter lies outside its documented range.
    #[error("parameter out of range: {what} = {value}, allowed {allowed}")]
    ParameterOutOfRange {
        what: &'static str,
        value: f64,
        allowed: String,
    },

    /// An operation produced a state with norm below the zero threshold.
    #[error("operation annihilated the state (norm {norm:.3e})")]
    ZeroState { norm: f64 },

    /// The requested basis cannot hold the state being constructed.
    #[error("cutoff {cutoff} too small: {why}")]
    CutoffTooSmall { cutoff: usize, why: String },

    /// The target state carries too much truncation leakage for a reliable
    /// threshold.
    #[error("target leakage {leakage:.3e} exceeds {max:.3e}; threshold would be unreliable")]
    LeakageTooLarge { leakage: f64, max: f64 },

    /// The analytic overlap path was requested outside its validated range.
    #[error("analytic overlap not derived for this input: {0}")]
    NotDerived(String),

    /// The objective handed to the optimizer returned a non-finite value.
    #[error("objective returned a non-finite value at evaluation {eval}")]
    ObjectiveNonFinite { eval: usize },

    /// A run configuration failed validation.
    #[error("invalid config: {0}")]
    InvalidConfig(String),
}
