//! Monte-Carlo campaigns: densification and element-budget sweeps.

pub mod snapshot;
pub mod spec;
pub mod svg;
pub mod sweep;

pub use snapshot::{run_snapshot, snapshot_gains, SchemeRecord, SnapshotResult};
pub use spec::{Campaign, ExperimentSpec, ScenarioDefaults, SolverChoice, SweepPoint};
pub use sweep::{
    aggregate_rows, parse_snapshot_csv, run_campaign, run_densification_sweep, run_element_budget_sweep, AggregateRow,
    CampaignReport, PointResult, SnapshotRow,
};
