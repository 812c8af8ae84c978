//! Feasibility criteria, device inference and entanglement certification for
//! correlations produced by independently prepared qubit states and binary
//! qubit measurements.

pub mod criteria;
pub mod entanglement;
pub mod error;
pub mod inference;
pub mod interval;
pub mod io;
pub mod oracle;
pub mod qubit;
pub mod scenarios;
pub mod witnesses;

pub use criteria::{
    binarize, g_povm, g_pvm, pairwise_feasible, povm_feasible, pvm_feasible, FeasibilityReport, GBounds, GridConfig,
    MeasurementClass, PmRecordSet, PmRow, WitnessParams,
};
pub use entanglement::{entanglement_verdict, EntanglementConfig, EntanglementReport, SeparabilityVerdict};
pub use error::{Error, Result};
pub use inference::{infer_r_region, infer_report, InferenceReport, ParamRegion};
pub use interval::Interval;
pub use qubit::{BlochState, QubitObservable};
pub use scenarios::{qbell, qpm, BellCorrelation, Family, Party};

/// Default numerical tolerance.
pub const EPS: f64 = 1e-9;
