//! Endurance queues: a buffer between an upstream and a downstream system
//! whose depth grows along Ackermann reduction traces as load changes, placed
//! at the densest boundary of a capacity-ordered partition of the systems.
//!
//! Modules:
//!
//! - [`metrics`]: capacity scores and the disjoint partition
//! - [`heatmap`]: density maps, peak overlay, placement and anchors
//! - [`growth`]: saturating Ackermann values, reduction traces, the monitor
//! - [`product_form`]: closed-network normalizing constants and spawn plans
//! - [`queue`]: the bounded FIFO itself
//! - [`sim`]: workloads and the discrete-event simulator
//! - [`cli`]: the `endurq` command line

pub mod cli;
pub mod error;
pub mod growth;
pub mod heatmap;
pub mod metrics;
pub mod product_form;
pub mod queue;
pub mod sim;
pub mod trace;

pub use error::{Error, Result};
