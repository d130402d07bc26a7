//! Time-consistency and sensitivity diagnostics for any risk measure spec.

mod consistency;
mod sensitivity;

pub use consistency::{
    check_time_consistency, consistency_report, find_inconsistency, ConsistencyEntry, ConsistencyReport, ConsistencyWitness,
};
pub use sensitivity::{
    check_sensitivity, AtomTest, RaySearch, RayWitness, SensitivityConfig, SensitivityReport, SensitivityVerdict, RAY_DOUBLINGS,
};
