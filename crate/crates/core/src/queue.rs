//! The endurance queue: a FIFO whose capacity only grows, driven by monitor
//! decisions, with drop-newest overflow and relocation between placement
//! points.
//!
//! All mutation goes through `&mut self`, which serializes the producer,
//! consumer and monitor at every call. When producer and consumer run on
//! different threads, wrap the queue in [`SharedQueue`]; the monitor applies
//! decisions through the same lock, between event-processing steps, so the
//! three parties never mutate at once.

use std::collections::VecDeque;
use std::io::Write;
use std::sync::{Arc, Mutex, MutexGuard};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::growth::Decision;
use crate::heatmap::{Anchor, PlacementPoint};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkItem {
    pub id: u64,
    pub arrival_time: f64,
    pub size: u64,
    pub source_system: String,
}

impl WorkItem {
    pub fn new(id: u64, arrival_time: f64, source_system: impl Into<String>) -> Self {
        WorkItem {
            id,
            arrival_time,
            size: 1,
            source_system: source_system.into(),
        }
    }
}

/// Counters for one queue. `enqueued` counts every offered item, so
/// `enqueued == dequeued + dropped + occupancy` at all times.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QueueStats {
    pub enqueued: u64,
    pub dequeued: u64,
    pub dropped: u64,
    pub migrations: u64,
    pub max_depth_seen: u64,
    #[serde(skip)]
    pub depth_timeline: Vec<(f64, u64)>,
}

impl QueueStats {
    /// The timeline as `time,depth` CSV.
    pub fn write_timeline_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["time", "depth"])?;
        for (t, d) in &self.depth_timeline {
            wtr.write_record([t.to_string(), d.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EnqueueOutcome {
    Accepted,
    Dropped,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MigrateDepth {
    /// Keep the current depth at the new placement.
    #[default]
    Keep,
    /// Start the new placement at the smallest depth that holds the
    /// buffered items (at least 1).
    Reset,
}

#[derive(Debug, Clone)]
pub struct EnduranceQueue {
    items: VecDeque<WorkItem>,
    depth: u64,
    cap: u64,
    placement: PlacementPoint,
    migrate_depth: MigrateDepth,
    stats: QueueStats,
}

impl EnduranceQueue {
    pub fn new(cap: u64, placement: PlacementPoint) -> Result<Self> {
        if cap < 1 {
            return Err(Error::invalid("cap", "must be >= 1"));
        }
        Ok(EnduranceQueue {
            items: VecDeque::new(),
            depth: 1,
            cap,
            placement,
            migrate_depth: MigrateDepth::Keep,
            stats: QueueStats {
                max_depth_seen: 1,
                ..QueueStats::default()
            },
        })
    }

    pub fn with_migrate_depth(mut self, policy: MigrateDepth) -> Self {
        self.migrate_depth = policy;
        self
    }

    pub fn depth(&self) -> u64 {
        self.depth
    }

    pub fn cap(&self) -> u64 {
        self.cap
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn placement(&self) -> PlacementPoint {
        self.placement
    }

    pub fn stats(&self) -> &QueueStats {
        &self.stats
    }

    pub fn items(&self) -> impl Iterator<Item = &WorkItem> {
        self.items.iter()
    }

    /// Accepts the item if there is room under the current depth, otherwise
    /// discards it and counts a drop.
    pub fn enqueue(&mut self, item: WorkItem) -> EnqueueOutcome {
        self.stats.enqueued += 1;
        if (self.items.len() as u64) < self.depth {
            self.items.push_back(item);
            EnqueueOutcome::Accepted
        } else {
            self.stats.dropped += 1;
            EnqueueOutcome::Dropped
        }
    }

    pub fn dequeue(&mut self) -> Option<WorkItem> {
        let item = self.items.pop_front()?;
        self.stats.dequeued += 1;
        Some(item)
    }

    /// Applies a growth decision. Depth never shrinks here and never passes
    /// the cap. `Migrate` carries no placement and is handled by
    /// [`EnduranceQueue::migrate`].
    pub fn apply_growth(&mut self, decision: &Decision) {
        if let Decision::Grow { to } = *decision {
            let target = to.min(self.cap).max(self.items.len() as u64).max(1);
            self.depth = self.depth.max(target);
            self.stats.max_depth_seen = self.stats.max_depth_seen.max(self.depth);
        }
    }

    /// Sets the first real placement, replacing the provisional one given at
    /// construction. Not counted as a migration.
    pub fn install(&mut self, placement: PlacementPoint) {
        self.placement = placement;
    }

    /// Moves the queue to a new placement. Buffered items travel with it.
    pub fn migrate(&mut self, new_placement: PlacementPoint, anchor: &Anchor) -> Result<()> {
        if !anchor.released {
            return Err(Error::AnchorHeld(anchor.group_index));
        }
        self.placement = new_placement;
        self.stats.migrations += 1;
        if self.migrate_depth == MigrateDepth::Reset {
            self.depth = (self.items.len() as u64).max(1);
        }
        Ok(())
    }

    /// Records `(now, depth)` on the timeline and returns a copy of the stats.
    pub fn snapshot(&mut self, now: f64) -> QueueStats {
        self.stats.depth_timeline.push((now, self.depth));
        self.stats.clone()
    }

    pub fn into_shared(self) -> SharedQueue {
        SharedQueue(Arc::new(Mutex::new(self)))
    }
}

/// Cloneable handle for a queue shared between a producer thread, a consumer
/// thread and the monitor. Every operation takes the lock for its duration.
#[derive(Debug, Clone)]
pub struct SharedQueue(Arc<Mutex<EnduranceQueue>>);

impl SharedQueue {
    pub fn lock(&self) -> MutexGuard<'_, EnduranceQueue> {
        self.0.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn enqueue(&self, item: WorkItem) -> EnqueueOutcome {
        self.lock().enqueue(item)
    }

    pub fn dequeue(&self) -> Option<WorkItem> {
        self.lock().dequeue()
    }

    pub fn apply_growth(&self, decision: &Decision) {
        self.lock().apply_growth(decision)
    }
}
