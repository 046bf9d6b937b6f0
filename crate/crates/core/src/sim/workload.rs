use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::{EventTrace, TraceEvent};

fn default_source() -> String {
    "source".to_owned()
}

/// Arrival process shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WorkloadKind {
    /// Exponential inter-arrivals at a fixed rate.
    Poisson { rate: f64 },
    /// Poisson arrivals at `burst_rate` for the first `burst_duration`
    /// seconds of every `period`, at `base_rate` for the rest.
    Bursty {
        base_rate: f64,
        burst_rate: f64,
        burst_duration: f64,
        period: f64,
    },
    /// Deterministic arrivals spaced `1 / rate + gap` apart, starting at 0.
    Sparse { rate: f64, gap: f64 },
    /// A stored trace, inline or read from a CSV file.
    Replay {
        #[serde(default)]
        events: Vec<TraceEvent>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        path: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadProfile {
    #[serde(flatten)]
    pub kind: WorkloadKind,
    pub duration: f64,
    #[serde(default)]
    pub seed: u64,
    /// System id stamped on generated events.
    #[serde(default = "default_source")]
    pub source: String,
}

impl WorkloadProfile {
    pub fn new(kind: WorkloadKind, duration: f64, seed: u64) -> Self {
        WorkloadProfile {
            kind,
            duration,
            seed,
            source: default_source(),
        }
    }

    pub fn replay(trace: EventTrace, duration: f64) -> Self {
        WorkloadProfile::new(
            WorkloadKind::Replay {
                events: trace.events,
                path: None,
            },
            duration,
            0,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |field: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(format!("workload.{field}"), format!("{v} must be > 0")))
            }
        };
        positive("duration", self.duration)?;
        match &self.kind {
            WorkloadKind::Poisson { rate } => positive("rate", *rate),
            WorkloadKind::Bursty {
                base_rate,
                burst_rate,
                burst_duration,
                period,
            } => {
                positive("base_rate", *base_rate)?;
                positive("burst_rate", *burst_rate)?;
                positive("burst_duration", *burst_duration)?;
                positive("period", *period)?;
                if burst_duration > period {
                    return Err(Error::invalid("workload.burst_duration", "must not exceed period"));
                }
                Ok(())
            }
            WorkloadKind::Sparse { rate, gap } => {
                positive("rate", *rate)?;
                if !(gap.is_finite() && *gap >= 0.0) {
                    return Err(Error::invalid("workload.gap", format!("{gap} must be >= 0")));
                }
                Ok(())
            }
            WorkloadKind::Replay { .. } => Ok(()),
        }
    }
}

fn poisson_piecewise(
    rng: &mut ChaCha8Rng,
    duration: f64,
    source: &str,
    rate_at: impl Fn(f64) -> (f64, f64),
) -> Vec<TraceEvent> {
    let mut events = Vec::new();
    let mut t = 0.0;
    while t < duration {
        let (rate, until) = rate_at(t);
        let gap = Exp::new(rate).expect("validated rate").sample(rng);
        // memoryless: redraw from the boundary when the rate changes first
        if t + gap >= until {
            t = until;
            continue;
        }
        t += gap;
        if t < duration {
            events.push(TraceEvent {
                timestamp: t,
                system_id: source.to_owned(),
                item_count: 1,
            });
        }
    }
    events
}

/// Arrival trace for a profile. Deterministic in the profile's seed; replay
/// returns the stored events unchanged.
pub fn generate_workload(profile: &WorkloadProfile) -> Result<EventTrace> {
    profile.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(profile.seed);
    let duration = profile.duration;
    let source = profile.source.as_str();
    let events = match &profile.kind {
        WorkloadKind::Poisson { rate } => poisson_piecewise(&mut rng, duration, source, |_| (*rate, f64::INFINITY)),
        WorkloadKind::Bursty {
            base_rate,
            burst_rate,
            burst_duration,
            period,
        } => poisson_piecewise(&mut rng, duration, source, |t| {
            let mut k = (t / period).floor();
            if t >= (k + 1.0) * period {
                k += 1.0;
            }
            let burst_end = k * period + burst_duration;
            if t < burst_end {
                (*burst_rate, burst_end)
            } else {
                (*base_rate, (k + 1.0) * period)
            }
        }),
        WorkloadKind::Sparse { rate, gap } => {
            let spacing = 1.0 / rate + gap;
            (0..)
                .map(|i| i as f64 * spacing)
                .take_while(|&t| t < duration)
                .map(|t| TraceEvent {
                    timestamp: t,
                    system_id: source.to_owned(),
                    item_count: 1,
                })
                .collect()
        }
        WorkloadKind::Replay { events, path } => {
            return match path {
                Some(p) if events.is_empty() => EventTrace::from_csv(std::fs::File::open(p)?),
                _ => Ok(EventTrace { events: events.clone() }),
            };
        }
    };
    Ok(EventTrace { events })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poisson_count_within_three_sigma() {
        let p = WorkloadProfile::new(WorkloadKind::Poisson { rate: 10.0 }, 100.0, 7);
        let n = generate_workload(&p).unwrap().len() as i64;
        assert!((n - 1000).abs() <= 95, "{n}");
    }

    #[test]
    fn same_seed_same_trace() {
        let p = WorkloadProfile::new(
            WorkloadKind::Bursty {
                base_rate: 1.0,
                burst_rate: 20.0,
                burst_duration: 2.0,
                period: 10.0,
            },
            50.0,
            3,
        );
        assert_eq!(generate_workload(&p).unwrap(), generate_workload(&p).unwrap());
        let other = WorkloadProfile { seed: 4, ..p.clone() };
        assert_ne!(generate_workload(&p).unwrap(), generate_workload(&other).unwrap());
    }

    #[test]
    fn bursts_are_denser() {
        let p = WorkloadProfile::new(
            WorkloadKind::Bursty {
                base_rate: 1.0,
                burst_rate: 50.0,
                burst_duration: 1.0,
                period: 10.0,
            },
            1000.0,
            11,
        );
        let trace = generate_workload(&p).unwrap();
        let in_burst = trace.events.iter().filter(|e| e.timestamp % 10.0 < 1.0).count() as f64;
        let outside = trace.len() as f64 - in_burst;
        // expected 5000 vs 900
        assert!((in_burst - 5000.0).abs() < 300.0, "{in_burst}");
        assert!((outside - 900.0).abs() < 120.0, "{outside}");
    }

    #[test]
    fn sparse_spacing() {
        let p = WorkloadProfile::new(WorkloadKind::Sparse { rate: 2.0, gap: 1.5 }, 10.0, 0);
        let ts: Vec<f64> = generate_workload(&p)
            .unwrap()
            .events
            .iter()
            .map(|e| e.timestamp)
            .collect();
        assert_eq!(ts, [0.0, 2.0, 4.0, 6.0, 8.0]);
    }

    #[test]
    fn replay_is_identity() {
        let trace = EventTrace::new(vec![TraceEvent {
            timestamp: 0.5,
            system_id: "x".into(),
            item_count: 3,
        }])
        .unwrap();
        let p = WorkloadProfile::replay(trace.clone(), 10.0);
        assert_eq!(generate_workload(&p).unwrap(), trace);
    }

    #[test]
    fn malformed_profiles() {
        let bad = WorkloadProfile::new(WorkloadKind::Poisson { rate: 0.0 }, 10.0, 0);
        assert!(generate_workload(&bad).is_err());
        let bad = WorkloadProfile::new(WorkloadKind::Poisson { rate: 1.0 }, -1.0, 0);
        assert!(generate_workload(&bad).is_err());
        let bad = WorkloadProfile::new(
            WorkloadKind::Bursty {
                base_rate: 1.0,
                burst_rate: 2.0,
                burst_duration: 5.0,
                period: 2.0,
            },
            10.0,
            0,
        );
        assert!(generate_workload(&bad).is_err());
    }

    #[test]
    fn json_shape() {
        let p: WorkloadProfile =
            serde_json::from_str(r#"{"kind":"poisson","rate":10,"duration":100,"seed":7}"#).unwrap();
        assert_eq!(p.kind, WorkloadKind::Poisson { rate: 10.0 });
        assert_eq!(p.source, "source");
    }
}
