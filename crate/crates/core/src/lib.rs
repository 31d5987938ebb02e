//! Boolean function complexity measures, switching-lemma constructions, and
//! random restriction/projection experiments at desk scale.
//!
//! Everything operates on explicit truth tables (`boolfn::PartialFn`), so all
//! quantities are computed exactly: the fractional measures go through an
//! exact rational simplex (`lp`), distribution-completion checks enumerate
//! atoms with rational weights (`projections`), and the Monte Carlo harnesses
//! (`switching`, `projections`) are deterministic under a root seed via a
//! splittable per-trial seed scheme (`seeds`).

pub mod boolfn;
pub mod lp;
pub mod measures;
pub mod polybounds;
pub mod projections;
pub mod report;
pub mod seeds;
pub mod switching;
pub mod verify;

use thiserror::Error;

/// Unified error type for the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("arity mismatch: expected {expected}, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("size cap exceeded: {what} = {got}, cap {cap}")]
    SizeCap {
        what: &'static str,
        got: usize,
        cap: usize,
    },
    #[error("index {index} out of range for arity {n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("LP resource limit: {0}")]
    LpResource(String),
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("shape mismatch at stage {stage}: {msg}")]
    Shape { stage: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
