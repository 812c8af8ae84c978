use thiserror::Error;

/// Errors raised by the correlation analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("expectation value {0} lies outside [-1, 1]")]
    ExpectationOutOfRange(f64),

    #[error("incompatible offset: |A - r| = {deviation} exceeds 1 - |r| = {reach}")]
    IncompatibleOffset { deviation: f64, reach: f64 },

    #[error("square root of negative quantity {0}")]
    NegativeRadicand(f64),

    #[error("invalid Bloch vector: |s| = {0} > 1")]
    InvalidBlochVector(f64),

    #[error("invalid observable: {0}")]
    InvalidObservable(String),

    #[error("invalid record set: {0}")]
    InvalidRecords(String),

    #[error("state set is empty")]
    EmptyStateSet,

    #[error("measurement index {index} out of range ({count} measurements)")]
    MeasurementIndex { index: usize, count: usize },

    #[error("invalid probability distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid correlation table: {0}")]
    InvalidCorrelation(String),

    #[error("signaling correlation: marginal differs by {0} across the other party's settings")]
    Signaling(f64),

    #[error("parameters ({x}, {y}) outside the valid domain of the family")]
    OutOfDomain { x: f64, y: f64 },

    #[error("degenerate marginal {0}: witness undefined")]
    DegenerateMarginal(f64),

    #[error("wrong arity: {0}")]
    Arity(String),

    #[error("measurement axes are collinear and the expectations are inconsistent")]
    CollinearAxes,

    #[error("|t| = {t} exceeds the physical bound {bound}")]
    Unphysical { t: f64, bound: f64 },

    #[error("angle outside the boundary parametrization: {0}")]
    OutsideValidityBranch(String),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("missing measurement parameters for party {0}")]
    MissingParameters(&'static str),

    #[error("schema violation: {0}")]
    Schema(String),

    #[error("{0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
