//! End-to-end convergence experiments: fluctuation fields, covariance
//! estimation over ε × t grids and report emission.

mod config;
mod experiment;
mod plot;
mod report;

pub use config::{ConditioningOverrides, ExperimentConfig, KEYS};
pub use experiment::{
    centering_constant, convergence_experiment, covariance_estimate, diagnostics_scan,
    ensemble_seed, fluctuation_field, non_increasing, replica_record, semigroup_seed,
    CovarianceEstimate, CovarianceReport, DiagnosticsReport, DiagnosticsRow, MonotoneCheck,
    ReplicaRecord, ReportRow, SeedRecord, CENTERING_OFFSET, MAX_ABORT_FRACTION,
};
pub use plot::{line_chart, Series};
pub use report::{
    emit_report, load_manifest, load_report, to_csv, Manifest, ReportFormat, CSV_HEADER,
};
