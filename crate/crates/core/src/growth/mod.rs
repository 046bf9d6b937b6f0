//! Queue-growth policy: the Peter-Ackermann function with saturation, its
//! stepwise reduction, and the monitor that turns density observations into
//! depth decisions.

mod ackermann;
mod monitor;

pub use ackermann::{
    ackermann, ackermann_trace, long_run_growth_index, GrowthTrace, Reduction, SaturatingValue, DEFAULT_CAP,
};
pub use monitor::{
    init_monitor, monitor_step, quantize_demand, Decision, GrowthOn, MonitorConfig, MonitorState, Observation,
};
