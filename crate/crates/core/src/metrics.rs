//! Per-system and stack-level metrics, capacity scores, and the
//! capacity-ordered partition of systems into disjoint sets.
//!
//! The capacity score of a system is
//!
//! ```text
//! C_i = (p / P) * (u / U) + (dt / D_total) * S
//! ```
//!
//! where lowercase quantities are the system's own observations and uppercase
//! ones are stack totals. The score is a dimensionless ranking quantity: it is
//! only ever compared against other scores.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Half-open observation interval `[start, end)`, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub start: f64,
    pub end: f64,
}

impl Window {
    pub fn new(start: f64, end: f64) -> Result<Self> {
        if !(start.is_finite() && end.is_finite()) || end <= start {
            return Err(Error::invalid(
                "window",
                format!("[{start}, {end}) is empty or not finite"),
            ));
        }
        Ok(Window { start, end })
    }

    pub fn len(&self) -> f64 {
        self.end - self.start
    }
}

/// Observed rates for one system over a window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemMetrics {
    pub system_id: String,
    /// Throughput, items per second.
    #[serde(rename = "p")]
    pub throughput: f64,
    /// Utilization in `[0, 1]`.
    #[serde(rename = "u")]
    pub utilization: f64,
    /// Service demand, seconds per item.
    #[serde(rename = "D")]
    pub service_demand: f64,
    /// Data density, items per bucket window.
    #[serde(rename = "dt")]
    pub data_density: f64,
    /// Mean service time, seconds.
    #[serde(rename = "S")]
    pub service_time: f64,
    pub window: Window,
}

fn non_negative(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("{v} must be finite and >= 0")))
    }
}

impl SystemMetrics {
    pub fn validate(&self) -> Result<()> {
        non_negative("p", self.throughput)?;
        non_negative("D", self.service_demand)?;
        non_negative("dt", self.data_density)?;
        non_negative("S", self.service_time)?;
        if !(0.0..=1.0).contains(&self.utilization) {
            return Err(Error::invalid("u", format!("{} must lie in [0, 1]", self.utilization)));
        }
        Window::new(self.window.start, self.window.end)?;
        Ok(())
    }
}

/// End-to-end totals for the whole stack. All fields are divisors in the
/// capacity score and therefore strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StackTotals {
    #[serde(rename = "P")]
    pub throughput: f64,
    #[serde(rename = "U")]
    pub utilization: f64,
    #[serde(rename = "D_total")]
    pub service_demand: f64,
}

impl StackTotals {
    pub fn new(throughput: f64, utilization: f64, service_demand: f64) -> Result<Self> {
        let totals = StackTotals {
            throughput,
            utilization,
            service_demand,
        };
        totals.validate()?;
        Ok(totals)
    }

    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("P", self.throughput),
            ("U", self.utilization),
            ("D_total", self.service_demand),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(field, format!("{v} must be > 0")));
            }
        }
        if self.utilization > 1.0 {
            return Err(Error::invalid("U", "must not exceed 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityScore {
    pub system_id: String,
    pub c: f64,
}

/// Capacity-ordered grouping of systems.
///
/// `degenerate_boundaries` lists every boundary `i` (between `sets[i]` and
/// `sets[i + 1]`) where the last value of the lower group equals the first
/// value of the upper one, so the strict sup ordering cannot hold there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisjointPartition {
    pub sets: Vec<Vec<CapacityScore>>,
    pub k: usize,
    #[serde(default)]
    pub degenerate_boundaries: Vec<usize>,
}

impl DisjointPartition {
    pub fn is_degenerate(&self) -> bool {
        !self.degenerate_boundaries.is_empty()
    }

    /// Largest score in group `i`.
    pub fn sup(&self, i: usize) -> Option<f64> {
        self.sets.get(i)?.last().map(|s| s.c)
    }

    /// Index of the group holding `system_id`.
    pub fn group_of(&self, system_id: &str) -> Option<usize> {
        self.sets
            .iter()
            .position(|g| g.iter().any(|s| s.system_id == system_id))
    }
}

/// Capacity score of one system against the stack totals.
pub fn compute_capacity(m: &SystemMetrics, t: &StackTotals) -> Result<CapacityScore> {
    t.validate()?;
    m.validate()?;
    let rate_share = (m.throughput / t.throughput) * (m.utilization / t.utilization);
    let density_share = (m.data_density / t.service_demand) * m.service_time;
    Ok(CapacityScore {
        system_id: m.system_id.clone(),
        c: rate_share + density_share,
    })
}

/// Stack totals as the sum of throughputs, the mean utilization and the sum
/// of service demands.
pub fn aggregate_stack(all: &[SystemMetrics]) -> Result<StackTotals> {
    if all.is_empty() {
        return Err(Error::Empty("metrics list"));
    }
    for m in all {
        m.validate()?;
    }
    let throughput: f64 = all.iter().map(|m| m.throughput).sum();
    let mean_u = all.iter().map(|m| m.utilization).sum::<f64>() / all.len() as f64;
    let service_demand: f64 = all.iter().map(|m| m.service_demand).sum();
    StackTotals::new(throughput, mean_u.min(1.0), service_demand)
}

/// Sorts scores ascending (ties by `system_id`) and cuts them into `k`
/// contiguous groups of near-equal size. Earlier groups receive the extra
/// element when the count does not divide evenly.
pub fn partition_systems(scores: &[CapacityScore], k: usize) -> Result<DisjointPartition> {
    let n = scores.len();
    if k == 0 || k > n {
        return Err(Error::invalid("k", format!("{k} groups requested for {n} systems")));
    }
    if let Some(bad) = scores.iter().find(|s| !(s.c.is_finite() && s.c >= 0.0)) {
        return Err(Error::invalid(
            "c",
            format!("score {} for {} must be finite and >= 0", bad.c, bad.system_id),
        ));
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| a.c.total_cmp(&b.c).then_with(|| a.system_id.cmp(&b.system_id)));

    // group i starts at ceil(i * n / k)
    let starts: Vec<usize> = (0..=k).map(|i| (i * n).div_ceil(k)).collect();
    let sets: Vec<Vec<CapacityScore>> = starts.windows(2).map(|w| sorted[w[0]..w[1]].to_vec()).collect();

    let degenerate_boundaries = sets
        .windows(2)
        .enumerate()
        .filter(|(_, pair)| {
            let hi = pair[0].last().map(|s| s.c);
            let lo = pair[1].first().map(|s| s.c);
            hi >= lo
        })
        .map(|(i, _)| i)
        .collect();

    Ok(DisjointPartition {
        sets,
        k,
        degenerate_boundaries,
    })
}

/// Mean utilization of a group relative to the stack utilization. Values above
/// 1 are returned as-is.
pub fn utilization_ratio(group: &[SystemMetrics], t: &StackTotals) -> Result<f64> {
    if group.is_empty() {
        return Err(Error::Empty("group"));
    }
    if t.utilization.is_nan() || t.utilization <= 0.0 {
        return Err(Error::invalid("U", "must be > 0"));
    }
    let mean = group.iter().map(|m| m.utilization).sum::<f64>() / group.len() as f64;
    Ok(mean / t.utilization)
}

/// `C_i / C` where `C` is the sum of every score in the stack.
pub fn capacity_share(scores: &[CapacityScore], system_id: &str) -> Result<f64> {
    let own = scores
        .iter()
        .find(|s| s.system_id == system_id)
        .ok_or_else(|| Error::invalid("system_id", format!("{system_id} not scored")))?;
    let total: f64 = scores.iter().map(|s| s.c).sum();
    if total <= 0.0 {
        return Err(Error::invalid("C", "sum of capacity scores is zero"));
    }
    Ok(own.c / total)
}
