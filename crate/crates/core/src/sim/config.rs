use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::workload::{WorkloadKind, WorkloadProfile};
use crate::error::{Error, Result};
use crate::growth::{GrowthOn, MonitorConfig, DEFAULT_CAP};
use crate::heatmap::{DEFAULT_PEAK_QUANTILE, DEFAULT_RELEASE_EPSILON};
use crate::product_form::DEFAULT_THETA;
use crate::queue::MigrateDepth;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ServiceTime {
    Deterministic { seconds: f64 },
    Exponential { mean: f64 },
}

impl ServiceTime {
    pub fn mean(&self) -> f64 {
        match *self {
            ServiceTime::Deterministic { seconds } => seconds,
            ServiceTime::Exponential { mean } => mean,
        }
    }
}

fn one() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub system_id: String,
    pub service: ServiceTime,
    /// Degree of multiprogramming: parallel servers at this system.
    #[serde(default = "one")]
    pub d_m: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueuePolicy {
    /// Depth driven by the growth monitor.
    #[default]
    Endurance,
    /// Depth pinned at its initial value of 1.
    Fixed,
}

mod defaults {
    pub fn cap() -> u64 {
        super::DEFAULT_CAP
    }
    pub fn partition_k() -> usize {
        2
    }
    pub fn warmup_fraction() -> f64 {
        0.1
    }
    pub fn demand_levels() -> u32 {
        4
    }
    pub fn demand_scale() -> f64 {
        2.0
    }
    pub fn peak_quantile() -> f64 {
        super::DEFAULT_PEAK_QUANTILE
    }
    pub fn release_epsilon() -> f64 {
        super::DEFAULT_RELEASE_EPSILON
    }
    pub fn theta() -> f64 {
        super::DEFAULT_THETA
    }
}

/// A simulation run.
///
/// Systems form a pipeline in list order: arrivals enter the first system
/// (or the system their trace id names) and each completion feeds the next
/// one. The endurance queue is the input buffer of the last system; every
/// other system buffers without bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub systems: Vec<SystemSpec>,
    pub workload: WorkloadProfile,
    pub bucket_width: f64,
    #[serde(default = "defaults::cap")]
    pub cap: u64,
    #[serde(default = "defaults::partition_k")]
    pub partition_k: usize,
    #[serde(default)]
    pub growth_on: GrowthOn,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub policy: QueuePolicy,
    #[serde(default = "defaults::warmup_fraction")]
    pub warmup_fraction: f64,
    #[serde(default = "defaults::demand_levels")]
    pub demand_levels: u32,
    /// Offered load (busy servers per server) mapped to the top demand level.
    #[serde(default = "defaults::demand_scale")]
    pub demand_scale: f64,
    #[serde(default = "defaults::peak_quantile")]
    pub peak_quantile: f64,
    #[serde(default = "defaults::release_epsilon")]
    pub release_epsilon: f64,
    #[serde(default = "defaults::theta")]
    pub theta: f64,
    #[serde(default)]
    pub migrate_depth: MigrateDepth,
}

impl SimConfig {
    /// A config with every optional field at its default.
    pub fn new(systems: Vec<SystemSpec>, workload: WorkloadProfile, bucket_width: f64) -> Self {
        SimConfig {
            systems,
            workload,
            bucket_width,
            cap: defaults::cap(),
            partition_k: defaults::partition_k(),
            growth_on: GrowthOn::default(),
            seed: 0,
            policy: QueuePolicy::default(),
            warmup_fraction: defaults::warmup_fraction(),
            demand_levels: defaults::demand_levels(),
            demand_scale: defaults::demand_scale(),
            peak_quantile: defaults::peak_quantile(),
            release_epsilon: defaults::release_epsilon(),
            theta: defaults::theta(),
            migrate_depth: MigrateDepth::default(),
        }
    }

    /// Parses and validates a JSON config. A relative replay `path` is
    /// resolved against `base_dir` and loaded.
    pub fn from_json_str(text: &str, base_dir: Option<&Path>) -> Result<Self> {
        let mut cfg: SimConfig = serde_json::from_str(text)?;
        if let WorkloadKind::Replay { events, path } = &mut cfg.workload.kind {
            if let Some(p) = path.take() {
                let p = match base_dir {
                    Some(dir) if p.is_relative() => dir.join(p),
                    _ => p,
                };
                *events = crate::trace::EventTrace::from_csv(std::fs::File::open(p)?)?.events;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        SimConfig::from_json_str(&text, path.parent())
    }

    /// Overrides both the service and the workload seed.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.workload.seed = seed;
        self
    }

    pub fn with_policy(mut self, policy: QueuePolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn monitor_config(&self) -> MonitorConfig {
        MonitorConfig {
            cap: self.cap,
            demand_levels: self.demand_levels,
            demand_scale: self.demand_scale,
            release_epsilon: self.release_epsilon,
            growth_on: self.growth_on,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.systems.len() < 2 {
            return Err(Error::invalid(
                "systems",
                format!("need an upstream and a downstream system, got {}", self.systems.len()),
            ));
        }
        let mut seen = HashSet::new();
        for (i, s) in self.systems.iter().enumerate() {
            if !seen.insert(s.system_id.as_str()) {
                return Err(Error::invalid(
                    format!("systems[{i}].system_id"),
                    format!("duplicate id {:?}", s.system_id),
                ));
            }
            if s.d_m < 1 {
                return Err(Error::invalid(format!("systems[{i}].d_m"), "must be >= 1"));
            }
            let mean = s.service.mean();
            if !(mean.is_finite() && mean > 0.0) {
                return Err(Error::invalid(
                    format!("systems[{i}].service"),
                    format!("{mean} must be > 0"),
                ));
            }
        }
        self.workload.validate()?;
        if !(self.bucket_width.is_finite() && self.bucket_width > 0.0) {
            return Err(Error::invalid(
                "bucket_width",
                format!("{} must be > 0", self.bucket_width),
            ));
        }
        if self.cap < 1 {
            return Err(Error::invalid("cap", "must be >= 1"));
        }
        if self.partition_k < 2 || self.partition_k > self.systems.len() {
            return Err(Error::invalid(
                "partition_k",
                format!("{} must lie in [2, {}]", self.partition_k, self.systems.len()),
            ));
        }
        if !(self.warmup_fraction > 0.0 && self.warmup_fraction < 1.0) {
            return Err(Error::invalid("warmup_fraction", "must lie in (0, 1)"));
        }
        if self.demand_levels < 1 {
            return Err(Error::invalid("demand_levels", "must be >= 1"));
        }
        if !(self.demand_scale.is_finite() && self.demand_scale > 0.0) {
            return Err(Error::invalid("demand_scale", "must be > 0"));
        }
        if !(self.peak_quantile > 0.0 && self.peak_quantile <= 1.0) {
            return Err(Error::invalid("peak_quantile", "must lie in (0, 1]"));
        }
        if !(self.release_epsilon.is_finite() && self.release_epsilon >= 0.0) {
            return Err(Error::invalid("release_epsilon", "must be >= 0"));
        }
        if !(self.theta.is_finite() && self.theta > 1.0) {
            return Err(Error::invalid("theta", "must be > 1"));
        }
        Ok(())
    }
}
