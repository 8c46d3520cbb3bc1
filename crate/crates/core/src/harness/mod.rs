//! Orchestration: configuration, the prepare → simulate → reconstruct
//! pipeline, sweeps and report files.

mod config;
mod pipeline;
mod runs;
mod sweep;

pub use config::{ExperimentConfig, Overrides, StateSpec, SweepKind, SweepSpec, DEFAULT_SWEEP_COUNTS};
pub use pipeline::{
    measurement_record, prepare, reconstruct, run_pipeline, state_from_fit, Preparation, Reconstruction, ReconstructionMode,
    RunOutcome, Setup, SimulationSettings, TomographySettings,
};
pub use runs::{
    analytic_prediction, efficiency_comparison, run_prepare, run_tomography, PrepareArtifacts, TomographyReport, FAR_CSV,
    MANIFEST_JSON, MASK_IMAGE, MASK_SIDECAR, NEAR_CSV, PREDICTION_CSV, RECORD_JSON, REPORT_JSON, RHO_JSON, SLIT_POWERS_CSV,
    STATE_JSON,
};
pub use sweep::{
    aggregate_rows, derive_seed, experimental_mean, read_complete_rows, run_sweep, sweep_states, Aggregate, SweepReport,
    SweepRow, SweepState, AGGREGATES_FILE, EXPERIMENTAL_MEANS, MANIFEST_FILE, ROWS_FILE, TABLE_FILE,
};
