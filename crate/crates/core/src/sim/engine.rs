//! Single-threaded discrete-event loop in virtual time.
//!
//! Bucket ticks drive everything periodic: per-window metrics, the queue
//! snapshot, placement at the end of warm-up, the growth monitor, and the
//! multiprogramming spawn plans. At equal timestamps ticks run first, then
//! completions, then arrivals, so an arrival on a bucket edge lands in the
//! later bucket. The final tick closes the run after everything at the end
//! time.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use log::{debug, info};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use super::config::{QueuePolicy, ServiceTime, SimConfig};
use super::workload::generate_workload;
use crate::error::Result;
use crate::growth::{init_monitor, long_run_growth_index, Decision, MonitorState, Observation, SaturatingValue};
use crate::heatmap::{
    build_heatmap_spanning, next_queue_position, overlay_peak_demand, select_queue_position, Anchor, HeatMap,
    PlacementPoint,
};
use crate::metrics::{
    aggregate_stack, compute_capacity, partition_systems, utilization_ratio, CapacityScore, DisjointPartition,
    SystemMetrics, Window,
};
use crate::product_form::{apply_multiprogram, SpawnPlan};
use crate::queue::{EnduranceQueue, QueueStats, WorkItem};
use crate::trace::{EventTrace, TraceEvent};

/// Raw per-system counters accumulated over one window.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StationWindow {
    pub system_id: String,
    pub servers: u64,
    pub arrivals: u64,
    pub completions: u64,
    /// Server-seconds spent serving.
    pub busy_time: f64,
    /// Sum of service times drawn for services started in the window.
    pub service_sum: f64,
    pub services: u64,
}

impl StationWindow {
    fn fresh(system_id: &str, servers: u64) -> Self {
        StationWindow {
            system_id: system_id.to_owned(),
            servers,
            ..StationWindow::default()
        }
    }

    fn absorb(&mut self, other: &StationWindow) {
        self.arrivals += other.arrivals;
        self.completions += other.completions;
        self.busy_time += other.busy_time;
        self.service_sum += other.service_sum;
        self.services += other.services;
    }
}

/// Rates for each system over `window`: throughput is completions per
/// second, utilization is busy server-time over available server-time,
/// service demand is busy time per completion (0 without completions), data
/// density is the arrival count, and service time is the mean drawn service
/// time.
pub fn collect_metrics(stations: &[StationWindow], window: Window) -> Vec<SystemMetrics> {
    let len = window.len();
    stations
        .iter()
        .map(|s| SystemMetrics {
            system_id: s.system_id.clone(),
            throughput: s.completions as f64 / len,
            utilization: (s.busy_time / (s.servers.max(1) as f64 * len)).clamp(0.0, 1.0),
            service_demand: if s.completions == 0 {
                0.0
            } else {
                s.busy_time / s.completions as f64
            },
            data_density: s.arrivals as f64,
            service_time: if s.services == 0 {
                0.0
            } else {
                s.service_sum / s.services as f64
            },
            window,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimedSpawnPlan {
    pub bucket: usize,
    #[serde(flatten)]
    pub plan: SpawnPlan,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub policy: QueuePolicy,
    /// Metrics over the whole run.
    pub per_system: Vec<SystemMetrics>,
    /// Metrics over the warm-up window, the basis of the capacity scores.
    pub warmup_metrics: Vec<SystemMetrics>,
    pub capacities: Vec<CapacityScore>,
    pub partition: DisjointPartition,
    pub placement: PlacementPoint,
    pub final_placement: PlacementPoint,
    pub heatmap: HeatMap,
    pub queue_stats: QueueStats,
    pub final_depth: u64,
    pub spawn_plans: Vec<TimedSpawnPlan>,
    pub growth_index: SaturatingValue,
    pub offered: u64,
    pub completed: u64,
    pub dropped: u64,
    pub in_flight: u64,
    /// Completions at the last system per second of simulated time.
    pub end_to_end_throughput: f64,
    /// Mean entry-to-exit time of completed items, 0 when none completed.
    pub mean_latency: f64,
    /// Time-averaged number of items anywhere in the pipeline.
    pub mean_in_system: f64,
}

/// What an observer sees at every bucket tick.
#[derive(Debug)]
pub struct Snapshot<'a> {
    pub time: f64,
    pub bucket: usize,
    pub stats: &'a QueueStats,
    pub occupancy: usize,
    pub depth: u64,
    pub cap: u64,
    pub offered: u64,
    pub completed: u64,
    pub in_flight: u64,
}

/// Hooks into a running simulation. All methods default to no-ops.
pub trait SimObserver {
    fn on_snapshot(&mut self, _snapshot: &Snapshot<'_>) {}
    /// An item was accepted into the endurance queue.
    fn on_accept(&mut self, _item: &WorkItem) {}
    /// An item left the endurance queue for service.
    fn on_dequeue(&mut self, _item: &WorkItem) {}
}

struct NoObserver;
impl SimObserver for NoObserver {}

#[derive(Debug)]
enum EventKind {
    Tick(usize),
    Complete(usize, WorkItem),
    Arrival(usize, WorkItem),
}

#[derive(Debug)]
struct Scheduled {
    time: f64,
    class: u8,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Scheduled {}
impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Scheduled {
    // reversed: BinaryHeap pops the earliest event
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then(other.class.cmp(&self.class))
            .then(other.seq.cmp(&self.seq))
    }
}

const CLASS_TICK: u8 = 0;
const CLASS_COMPLETE: u8 = 1;
const CLASS_ARRIVAL: u8 = 2;
const CLASS_FINAL_TICK: u8 = 3;

struct Station {
    id: String,
    servers: u64,
    busy: u64,
    service: ServiceTime,
    rng: ChaCha8Rng,
    buffer: VecDeque<WorkItem>,
    acc: StationWindow,
    last_change: f64,
}

impl Station {
    fn advance(&mut self, now: f64) {
        self.acc.busy_time += self.busy as f64 * (now - self.last_change);
        self.last_change = now;
    }

    fn draw_service(&mut self) -> f64 {
        match self.service {
            ServiceTime::Deterministic { seconds } => seconds,
            ServiceTime::Exponential { mean } => Exp::new(1.0 / mean).expect("validated mean").sample(&mut self.rng),
        }
    }
}

struct Engine<'a> {
    cfg: &'a SimConfig,
    obs: &'a mut dyn SimObserver,
    now: f64,
    seq: u64,
    heap: BinaryHeap<Scheduled>,
    stations: Vec<Station>,
    queue: EnduranceQueue,
    monitor: MonitorState,
    history: Vec<Vec<StationWindow>>,
    arrival_log: Vec<TraceEvent>,
    installed: Option<Installed>,
    spawn_plans: Vec<TimedSpawnPlan>,
    growth_history: Vec<Vec<u64>>,
    offered: u64,
    completed: u64,
    latency_sum: f64,
    in_system: u64,
    in_system_area: f64,
    in_system_since: f64,
}

struct Installed {
    warmup_metrics: Vec<SystemMetrics>,
    capacities: Vec<CapacityScore>,
    partition: DisjointPartition,
    placement: PlacementPoint,
}

impl<'a> Engine<'a> {
    fn last(&self) -> usize {
        self.stations.len() - 1
    }

    fn schedule(&mut self, time: f64, class: u8, kind: EventKind) {
        self.seq += 1;
        self.heap.push(Scheduled {
            time,
            class,
            seq: self.seq,
            kind,
        });
    }

    fn track_in_system(&mut self, delta: i64) {
        self.in_system_area += self.in_system as f64 * (self.now - self.in_system_since);
        self.in_system_since = self.now;
        self.in_system = (self.in_system as i64 + delta) as u64;
    }

    fn arrive(&mut self, s: usize, item: WorkItem) {
        self.stations[s].acc.arrivals += 1;
        self.arrival_log.push(TraceEvent {
            timestamp: self.now,
            system_id: self.stations[s].id.clone(),
            item_count: 1,
        });
        if s == self.last() {
            if self.queue.enqueue(item.clone()) == crate::queue::EnqueueOutcome::Accepted {
                self.obs.on_accept(&item);
            } else {
                self.track_in_system(-1);
            }
        } else {
            self.stations[s].buffer.push_back(item);
        }
        self.dispatch(s);
    }

    fn dispatch(&mut self, s: usize) {
        let last = self.last();
        while self.stations[s].busy < self.stations[s].servers {
            let item = if s == last {
                match self.queue.dequeue() {
                    Some(item) => {
                        self.obs.on_dequeue(&item);
                        item
                    }
                    None => break,
                }
            } else {
                match self.stations[s].buffer.pop_front() {
                    Some(item) => item,
                    None => break,
                }
            };
            let now = self.now;
            let st = &mut self.stations[s];
            st.advance(now);
            st.busy += 1;
            let service = st.draw_service();
            st.acc.service_sum += service;
            st.acc.services += 1;
            self.schedule(now + service, CLASS_COMPLETE, EventKind::Complete(s, item));
        }
    }

    fn complete(&mut self, s: usize, item: WorkItem) {
        let now = self.now;
        let st = &mut self.stations[s];
        st.advance(now);
        st.busy -= 1;
        st.acc.completions += 1;
        if s == self.last() {
            self.completed += 1;
            self.latency_sum += now - item.arrival_time;
            self.track_in_system(-1);
        } else {
            self.arrive(s + 1, item);
        }
        self.dispatch(s);
    }

    fn warmup_buckets(&self, buckets: usize) -> usize {
        let w = (self.cfg.warmup_fraction * self.cfg.workload.duration / self.cfg.bucket_width).ceil() as usize;
        w.clamp(1, buckets)
    }

    fn ids(&self) -> Vec<String> {
        self.stations.iter().map(|s| s.id.clone()).collect()
    }

    fn tick(&mut self, bucket: usize, warmup: usize) -> Result<()> {
        let now = self.now;
        let row: Vec<StationWindow> = self
            .stations
            .iter_mut()
            .map(|st| {
                st.advance(now);
                std::mem::replace(&mut st.acc, StationWindow::fresh(&st.id, st.servers))
            })
            .collect();
        self.history.push(row);

        if bucket + 1 == warmup {
            self.install(bucket)?;
        } else if bucket >= warmup && self.cfg.policy == QueuePolicy::Endurance {
            self.run_monitor(bucket)?;
        }

        if self.stations.iter().any(|s| s.servers > 1) {
            self.multiprogram(bucket)?;
        }

        let stats = self.queue.snapshot(now);
        let in_flight = self.offered - self.completed - stats.dropped;
        self.obs.on_snapshot(&Snapshot {
            time: now,
            bucket,
            stats: &stats,
            occupancy: self.queue.len(),
            depth: self.queue.depth(),
            cap: self.queue.cap(),
            offered: self.offered,
            completed: self.completed,
            in_flight,
        });
        Ok(())
    }

    fn install(&mut self, bucket: usize) -> Result<()> {
        let ids = self.ids();
        let mut warm = self.history[0].clone();
        for row in &self.history[1..] {
            for (acc, w) in warm.iter_mut().zip(row) {
                acc.absorb(w);
            }
        }
        let window = Window::new(0.0, self.now)?;
        let warmup_metrics = collect_metrics(&warm, window);
        let capacities = match aggregate_stack(&warmup_metrics) {
            Ok(totals) => warmup_metrics
                .iter()
                .map(|m| compute_capacity(m, &totals))
                .collect::<Result<Vec<_>>>()?,
            Err(e) => {
                // nothing observable yet: every system ranks equally
                info!("warm-up metrics unusable ({e}); scoring all systems 0");
                ids.iter()
                    .map(|id| CapacityScore {
                        system_id: id.clone(),
                        c: 0.0,
                    })
                    .collect()
            }
        };
        let partition = partition_systems(&capacities, self.cfg.partition_k)?;
        let trace = EventTrace {
            events: self.arrival_log.clone(),
        };
        let hm = build_heatmap_spanning(&trace, self.cfg.bucket_width, &ids, bucket + 1)?;
        let placement = select_queue_position(&hm, &partition)?;
        info!(
            "queue placed at boundary {} (bucket {})",
            placement.boundary_index, placement.bucket_index
        );
        self.queue.install(placement);
        self.monitor = MonitorState::with_anchor(Anchor::for_placement(&placement));
        self.installed = Some(Installed {
            warmup_metrics,
            capacities,
            partition,
            placement,
        });
        Ok(())
    }

    fn boundary_columns(&self) -> Vec<usize> {
        let Some(inst) = &self.installed else {
            return Vec::new();
        };
        let b = self.queue.placement().boundary_index;
        inst.partition.sets[b..=b + 1]
            .iter()
            .flatten()
            .filter_map(|s| self.stations.iter().position(|st| st.id == s.system_id))
            .collect()
    }

    fn run_monitor(&mut self, bucket: usize) -> Result<()> {
        let cols = self.boundary_columns();
        let density_of = |row: &[StationWindow]| cols.iter().map(|&c| row[c].arrivals).sum::<u64>() as f64;
        let density = density_of(&self.history[bucket - 1]);
        let next_density = density_of(&self.history[bucket]);
        // an unchanged, empty heat map gives the monitor nothing to act on
        if density == 0.0 && next_density == 0.0 {
            return Ok(());
        }

        let w = self.cfg.bucket_width;
        let last = self.last();
        let row = &self.history[bucket];
        let demand =
            row[last].arrivals as f64 * self.stations[last].service.mean() / (self.stations[last].servers as f64 * w);

        let metrics = collect_metrics(row, Window::new(bucket as f64 * w, self.now)?);
        let anchor = self.monitor.anchor();
        let group_ids: Vec<&str> = self.installed.as_ref().map_or(Vec::new(), |inst| {
            inst.partition.sets[anchor.group_index]
                .iter()
                .map(|s| s.system_id.as_str())
                .collect()
        });
        let group: Vec<SystemMetrics> = metrics
            .iter()
            .filter(|m| group_ids.contains(&m.system_id.as_str()))
            .cloned()
            .collect();
        let ratio = match aggregate_stack(&metrics) {
            Ok(t) if !group.is_empty() => utilization_ratio(&group, &t).unwrap_or(0.0),
            _ => 0.0,
        };

        let observation = Observation {
            density,
            next_density,
            demand,
            ratio,
        };
        let decision = self.monitor.step(&self.cfg.monitor_config(), &observation);
        debug!("bucket {bucket}: {observation:?} -> {decision:?}");
        match decision {
            Decision::Grow { .. } => {
                self.queue.apply_growth(&decision);
                self.growth_history.push(vec![self.monitor.pending_growth().value]);
            }
            Decision::Migrate => self.migrate(bucket)?,
            Decision::Hold => {}
        }
        Ok(())
    }

    fn migrate(&mut self, bucket: usize) -> Result<()> {
        let Some(inst) = &self.installed else {
            return Ok(());
        };
        let density: Vec<Vec<u64>> = self.history[..=bucket]
            .iter()
            .map(|row| row.iter().map(|w| w.arrivals).collect())
            .collect();
        let hm = HeatMap::from_counts(self.ids(), self.cfg.bucket_width, density)?;
        let next = next_queue_position(&hm, &inst.partition, &self.queue.placement())?;
        self.queue.migrate(next, &self.monitor.anchor())?;
        info!(
            "bucket {bucket}: queue migrated to boundary {} (bucket {})",
            next.boundary_index, next.bucket_index
        );
        self.monitor.rebind(Anchor::for_placement(&next));
        if self.queue.depth() < self.monitor.depth() {
            self.monitor.reset_depth(self.queue.depth());
        }
        Ok(())
    }

    fn multiprogram(&mut self, bucket: usize) -> Result<()> {
        let last = self.last();
        let level = self.stations.iter().map(|s| s.servers).max().unwrap_or(1);
        let occupancy: Vec<u64> = self
            .stations
            .iter()
            .enumerate()
            .map(|(i, s)| s.busy + if i == last { self.queue.len() } else { s.buffer.len() } as u64)
            .collect();
        let demands: Vec<f64> = self.stations.iter().map(|s| s.service.mean()).collect();
        let plans = apply_multiprogram(level, &occupancy, &demands, self.cfg.theta)?;
        self.spawn_plans
            .extend(plans.into_iter().map(|plan| TimedSpawnPlan { bucket, plan }));
        Ok(())
    }
}

pub fn run_simulation(cfg: &SimConfig) -> Result<SimReport> {
    run_simulation_observed(cfg, &mut NoObserver)
}

/// Runs a simulation, calling `observer` at every tick and queue movement.
pub fn run_simulation_observed(cfg: &SimConfig, observer: &mut dyn SimObserver) -> Result<SimReport> {
    cfg.validate()?;
    let trace = generate_workload(&cfg.workload)?;
    let duration = cfg.workload.duration;
    let w = cfg.bucket_width;
    let buckets = ((duration / w).ceil() as usize).max(1);

    let stations: Vec<Station> = cfg
        .systems
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(i as u64 + 1);
            Station {
                id: s.system_id.clone(),
                servers: s.d_m,
                busy: 0,
                service: s.service,
                rng,
                buffer: VecDeque::new(),
                acc: StationWindow::fresh(&s.system_id, s.d_m),
                last_change: 0.0,
            }
        })
        .collect();

    let provisional = PlacementPoint {
        boundary_index: 0,
        bucket_index: 0,
        anchored: false,
    };
    let queue = EnduranceQueue::new(cfg.cap, provisional)?.with_migrate_depth(cfg.migrate_depth);

    let mut engine = Engine {
        cfg,
        obs: observer,
        now: 0.0,
        seq: 0,
        heap: BinaryHeap::new(),
        stations,
        queue,
        monitor: init_monitor(),
        history: Vec::with_capacity(buckets),
        arrival_log: Vec::new(),
        installed: None,
        spawn_plans: Vec::new(),
        growth_history: Vec::new(),
        offered: 0,
        completed: 0,
        latency_sum: 0.0,
        in_system: 0,
        in_system_area: 0.0,
        in_system_since: 0.0,
    };

    let mut next_id = 0u64;
    for e in trace.events.iter().filter(|e| e.timestamp < duration) {
        let entry = engine.stations.iter().position(|s| s.id == e.system_id).unwrap_or(0);
        for _ in 0..e.item_count {
            let item = WorkItem::new(next_id, e.timestamp, e.system_id.clone());
            next_id += 1;
            engine.schedule(e.timestamp, CLASS_ARRIVAL, EventKind::Arrival(entry, item));
        }
    }
    for b in 0..buckets {
        if b + 1 == buckets {
            engine.schedule(duration, CLASS_FINAL_TICK, EventKind::Tick(b));
        } else {
            engine.schedule((b + 1) as f64 * w, CLASS_TICK, EventKind::Tick(b));
        }
    }
    let warmup = engine.warmup_buckets(buckets);

    while let Some(ev) = engine.heap.pop() {
        engine.now = ev.time;
        match ev.kind {
            EventKind::Arrival(s, item) => {
                engine.offered += 1;
                engine.track_in_system(1);
                engine.arrive(s, item);
            }
            EventKind::Complete(s, item) => engine.complete(s, item),
            EventKind::Tick(b) => {
                engine.tick(b, warmup)?;
                if b + 1 == buckets {
                    break;
                }
            }
        }
    }
    engine.track_in_system(0);

    let ids = engine.ids();
    let mut totals: Vec<StationWindow> = ids
        .iter()
        .zip(&engine.stations)
        .map(|(id, s)| StationWindow::fresh(id, s.servers))
        .collect();
    for row in &engine.history {
        for (acc, w) in totals.iter_mut().zip(row) {
            acc.absorb(w);
        }
    }
    let per_system = collect_metrics(&totals, Window::new(0.0, duration)?);

    let trace = EventTrace {
        events: std::mem::take(&mut engine.arrival_log),
    };
    let hm = build_heatmap_spanning(&trace, w, &ids, buckets)?;
    let mut demand: Vec<Vec<f64>> = engine
        .history
        .iter()
        .map(|row| row.iter().map(|s| s.busy_time).collect())
        .collect();
    demand.resize(hm.buckets, vec![0.0; ids.len()]);
    let heatmap = overlay_peak_demand(&hm, &demand, cfg.peak_quantile)?;

    let installed = engine
        .installed
        .take()
        .expect("warm-up ends on or before the final tick");
    let queue_stats = engine.queue.stats().clone();
    let dropped = queue_stats.dropped;
    let completed = engine.completed;
    Ok(SimReport {
        policy: cfg.policy,
        per_system,
        warmup_metrics: installed.warmup_metrics,
        capacities: installed.capacities,
        partition: installed.partition,
        placement: installed.placement,
        final_placement: engine.queue.placement(),
        heatmap,
        final_depth: engine.queue.depth(),
        queue_stats,
        spawn_plans: engine.spawn_plans,
        growth_index: long_run_growth_index(&engine.growth_history, cfg.cap),
        offered: engine.offered,
        completed,
        dropped,
        in_flight: engine.offered - completed - dropped,
        end_to_end_throughput: completed as f64 / duration,
        mean_latency: if completed == 0 {
            0.0
        } else {
            engine.latency_sum / completed as f64
        },
        mean_in_system: engine.in_system_area / duration,
    })
}

/// Both arms of a paired run on the same seeded workload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub endurance: SimReport,
    pub fixed: SimReport,
}

/// Runs the config once with the endurance policy and once with the queue
/// pinned at depth 1.
pub fn compare_baseline(cfg: &SimConfig) -> Result<Comparison> {
    let endurance = run_simulation(&cfg.clone().with_policy(QueuePolicy::Endurance))?;
    let fixed = run_simulation(&cfg.clone().with_policy(QueuePolicy::Fixed))?;
    Ok(Comparison { endurance, fixed })
}
