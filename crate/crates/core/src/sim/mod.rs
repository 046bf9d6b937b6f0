//! Discrete-event simulation of a pipeline of systems with an endurance
//! queue in front of the last one.

mod config;
mod engine;
mod workload;

pub use config::{QueuePolicy, ServiceTime, SimConfig, SystemSpec};
pub use engine::{
    collect_metrics, compare_baseline, run_simulation, run_simulation_observed, Comparison, SimObserver, SimReport,
    Snapshot, StationWindow, TimedSpawnPlan,
};
pub use workload::{generate_workload, WorkloadKind, WorkloadProfile};
