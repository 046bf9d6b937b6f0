//! Monitor state machine deciding when the queue grows, holds, or moves.
//!
//! Each qualifying density observation advances the Ackermann reduction for
//! `(demand level, current depth)` by exactly one resolved step; the pending
//! growth value is that step plus one. With zero demand the depth simply
//! grows by one, `A(0, Q_d) = Q_d + 1`.

use serde::{Deserialize, Serialize};

use super::ackermann::{Reduction, SaturatingValue, DEFAULT_CAP};
use crate::error::{Error, Result};
use crate::heatmap::{check_release, Anchor, DEFAULT_RELEASE_EPSILON};

/// Direction of the density change that advances the growth trace.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthOn {
    /// Advance while the current bucket is denser than the next one.
    #[default]
    DensityDrop,
    /// Advance while the next bucket is denser than the current one.
    DensityRise,
}

impl std::str::FromStr for GrowthOn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "density_drop" => Ok(GrowthOn::DensityDrop),
            "density_rise" => Ok(GrowthOn::DensityRise),
            other => Err(Error::invalid("growth_on", format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonitorConfig {
    pub cap: u64,
    pub demand_levels: u32,
    /// Demand at which the top level is reached.
    pub demand_scale: f64,
    pub release_epsilon: f64,
    pub growth_on: GrowthOn,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        MonitorConfig {
            cap: DEFAULT_CAP,
            demand_levels: 4,
            demand_scale: 2.0,
            release_epsilon: DEFAULT_RELEASE_EPSILON,
            growth_on: GrowthOn::DensityDrop,
        }
    }
}

/// One bucket's worth of input to the monitor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    /// Density of the current bucket, `dt_i`.
    pub density: f64,
    /// Density of the following bucket, `dt_{i+1}`.
    pub next_density: f64,
    /// Service demand `D_s` before quantization.
    pub demand: f64,
    /// Release ratio checked against 1.
    pub ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Decision {
    Grow { to: u64 },
    Hold,
    Migrate,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct ActiveTrace {
    level: u32,
    from_depth: u64,
    reduction: Reduction,
}

/// Position of the monitor. Owned by a single actor; it may move between
/// threads but is only ever advanced through `&mut`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonitorState {
    q_d: u64,
    q_g: SaturatingValue,
    demand_level: u32,
    trace_pos: usize,
    trace: Option<ActiveTrace>,
    anchor: Anchor,
}

/// Fresh monitor: `Q_d = 0` and `Q_g = Q_d + 1`.
pub fn init_monitor() -> MonitorState {
    MonitorState {
        q_d: 0,
        q_g: SaturatingValue {
            value: 1,
            saturated: false,
        },
        demand_level: 0,
        trace_pos: 0,
        trace: None,
        anchor: Anchor::new(0),
    }
}

impl Default for MonitorState {
    fn default() -> Self {
        init_monitor()
    }
}

impl MonitorState {
    pub fn with_anchor(anchor: Anchor) -> Self {
        MonitorState {
            anchor,
            ..init_monitor()
        }
    }

    pub fn depth(&self) -> u64 {
        self.q_d
    }

    pub fn pending_growth(&self) -> SaturatingValue {
        self.q_g
    }

    pub fn demand_level(&self) -> u32 {
        self.demand_level
    }

    pub fn trace_pos(&self) -> usize {
        self.trace_pos
    }

    /// `(m, n)` of the reduction currently being stepped through.
    pub fn trace_args(&self) -> Option<(u32, u64)> {
        self.trace.as_ref().map(|t| (t.level, t.from_depth))
    }

    pub fn anchor(&self) -> Anchor {
        self.anchor
    }

    /// Binds the monitor to the anchor of a new placement.
    pub fn rebind(&mut self, anchor: Anchor) {
        self.anchor = anchor;
    }

    /// Forces the tracked depth, for callers that reset the queue on
    /// migration. Drops any in-progress reduction.
    pub fn reset_depth(&mut self, depth: u64) {
        self.q_d = depth;
        self.q_g = SaturatingValue {
            value: depth.saturating_add(1),
            saturated: false,
        };
        self.trace = None;
        self.trace_pos = 0;
    }

    pub fn step(&mut self, config: &MonitorConfig, obs: &Observation) -> Decision {
        monitor_step(self, config, obs)
    }
}

/// `floor(min(D_s, scale) / scale · levels)`, so demand at or past the scale
/// maps to the top level.
pub fn quantize_demand(demand: f64, levels: u32, scale: f64) -> Result<u32> {
    if levels == 0 {
        return Err(Error::invalid("levels", "must be >= 1"));
    }
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::invalid("d_max", format!("{scale} must be > 0")));
    }
    if demand.is_nan() || demand < 0.0 {
        return Err(Error::invalid("D_s", format!("{demand} must be >= 0")));
    }
    let level = (demand.min(scale) / scale * levels as f64).floor();
    Ok((level as u32).min(levels))
}

/// Advances the monitor by one observation.
///
/// Order of checks: a release of the held anchor yields `Migrate`; otherwise
/// zero demand grows by one; otherwise a qualifying density change advances
/// the reduction one step and grows to the resulting value; anything else,
/// including malformed observations, holds.
pub fn monitor_step(state: &mut MonitorState, config: &MonitorConfig, obs: &Observation) -> Decision {
    let cap = config.cap.max(1);
    let ratio_ok = obs.ratio.is_finite() && obs.ratio >= 0.0;
    if ratio_ok && !state.anchor.released {
        let anchor = check_release(state.anchor, obs.ratio, config.release_epsilon);
        if anchor.released {
            state.anchor = anchor;
            return Decision::Migrate;
        }
    }

    let Ok(level) = quantize_demand(obs.demand, config.demand_levels, config.demand_scale) else {
        return Decision::Hold;
    };
    if level != state.demand_level {
        state.demand_level = level;
        state.trace = None;
        state.trace_pos = 0;
    }

    if level == 0 {
        state.q_g = SaturatingValue::clamp(state.q_d as u128 + 1, cap);
        state.q_d = state.q_d.max(state.q_g.value);
        return Decision::Grow { to: state.q_d };
    }

    if !(obs.density.is_finite() && obs.next_density.is_finite()) {
        return Decision::Hold;
    }
    let triggered = match config.growth_on {
        GrowthOn::DensityDrop => obs.density > obs.next_density,
        GrowthOn::DensityRise => obs.density < obs.next_density,
    };
    if !triggered {
        return Decision::Hold;
    }

    let step = next_trace_step(state, level, cap);
    state.q_g = step.succ(cap);
    state.q_d = state.q_d.max(state.q_g.value);
    Decision::Grow { to: state.q_d }
}

/// Next resolved value of the active reduction, starting a new one for the
/// current depth when none is active or the last one is exhausted.
fn next_trace_step(state: &mut MonitorState, level: u32, cap: u64) -> SaturatingValue {
    if let Some(active) = state.trace.as_mut() {
        if let Some(v) = active.reduction.next() {
            state.trace_pos += 1;
            return v;
        }
    }
    let mut reduction = Reduction::new(level as u64, state.q_d, cap);
    // every reduction resolves at least once
    let v = reduction.next().unwrap_or(SaturatingValue::saturated(cap));
    state.trace = Some(ActiveTrace {
        level,
        from_depth: state.q_d,
        reduction,
    });
    state.trace_pos = 1;
    v
}
