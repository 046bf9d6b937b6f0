//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use endurq::growth::{ackermann, init_monitor, Decision, MonitorConfig, MonitorState, Observation};
use endurq::heatmap::{build_heatmap, export_heatmap, Anchor, ExportFormat, HeatMap, PlacementPoint};
use endurq::metrics::{compute_capacity, partition_systems, CapacityScore, StackTotals, SystemMetrics, Window};
use endurq::product_form::{enumerate_states, normalizing_constant, state_probability, ProductFormModel};
use endurq::queue::{EnduranceQueue, WorkItem};
use endurq::sim::{
    compare_baseline, run_simulation, run_simulation_observed, ServiceTime, SimConfig, SimObserver, Snapshot,
    SystemSpec, WorkloadKind, WorkloadProfile,
};
use endurq::trace::{EventTrace, TraceEvent};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    check(elapsed < limit, || format!("took {elapsed:?}, limit {limit:?}"))
}

fn naive_ackermann(m: u64, n: u64) -> u64 {
    match (m, n) {
        (0, n) => n + 1,
        (m, 0) => naive_ackermann(m - 1, 1),
        (m, n) => naive_ackermann(m - 1, naive_ackermann(m, n - 1)),
    }
}

fn ackermann_correctness() -> Outcome {
    let start = Instant::now();
    for m in 0..=3 {
        for n in 0..=8 {
            let got = ackermann(m, n, u64::MAX);
            let want = naive_ackermann(m, n);
            check(!got.saturated && got.value == want, || {
                format!("A({m},{n}) = {got}, oracle {want}")
            })?;
        }
    }
    for n in 0..=1_000_000u64 {
        let got = ackermann(0, n, u64::MAX);
        check(got.value == n + 1, || format!("A(0,{n}) = {got}"))?;
    }
    check(ackermann(2, 1, u64::MAX).value == 5, || "A(2,1) != 5".into())?;
    check(ackermann(3, 3, u64::MAX).value == 61, || "A(3,3) != 61".into())?;
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(1))?;
    Ok(format!("36 oracle pairs, 10^6 base cases in {elapsed:?}"))
}

fn saturation() -> Outcome {
    let start = Instant::now();
    let mut caps: Vec<u64> = (0..=30).map(|e| 1u64 << e).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    caps.extend((0..100).map(|_| rng.gen_range(1..=1u64 << 30)));
    for &cap in &caps {
        let v = ackermann(4, 2, cap);
        check(v.saturated && v.value == cap, || format!("A(4,2) cap {cap} gave {v}"))?;
    }
    let out = Command::new(env!("CARGO_BIN_EXE_endurq"))
        .args(["ackermann", "4", "2", "--cap", "1073741824"])
        .output()
        .map_err(|e| e.to_string())?;
    let stdout = String::from_utf8_lossy(&out.stdout);
    check(out.status.success() && stdout.trim_end().ends_with("saturated"), || {
        format!("cli printed {stdout:?}")
    })?;
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(1))?;
    Ok(format!("{} caps saturated in {elapsed:?}", caps.len()))
}

fn monitor_base_cases() -> Outcome {
    let mut state = init_monitor();
    check(state.depth() == 0 && state.pending_growth().value == 1, || {
        format!("init gave Q_d={} Q_g={}", state.depth(), state.pending_growth())
    })?;
    let config = MonitorConfig::default();
    let idle = Observation {
        density: 1.0,
        next_density: 0.0,
        demand: 0.0,
        ratio: 0.0,
    };
    for expected in 1..=5 {
        let d = state.step(&config, &idle);
        check(d == Decision::Grow { to: expected }, || {
            format!("zero demand step gave {d:?}, expected depth {expected}")
        })?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let placement = PlacementPoint {
        boundary_index: 0,
        bucket_index: 0,
        anchored: true,
    };
    let mut queue = EnduranceQueue::new(config.cap, placement).map_err(|e| e.to_string())?;
    let mut state = MonitorState::with_anchor(Anchor::new(0));
    for i in 0..100_000 {
        let obs = Observation {
            density: rng.gen_range(0.0..10.0),
            next_density: rng.gen_range(0.0..10.0),
            demand: rng.gen_range(0.0..3.0),
            ratio: rng.gen_range(0.0..1.02),
        };
        let d = state.step(&config, &obs);
        match d {
            Decision::Migrate => {
                queue.migrate(placement, &state.anchor()).map_err(|e| e.to_string())?;
                state.rebind(Anchor::new(0));
            }
            _ => queue.apply_growth(&d),
        }
        check(queue.depth() >= 1 && queue.depth() <= config.cap, || {
            format!("step {i}: queue depth {}", queue.depth())
        })?;
        check(!matches!(d, Decision::Grow { to: 0 }), || {
            format!("step {i}: grow to 0")
        })?;
    }
    Ok(format!(
        "init (0, 1), +1 on idle demand, 10^5 random steps, final depth {}",
        queue.depth()
    ))
}

fn brute_g(demands: &[f64], n: u64) -> f64 {
    fn go(demands: &[f64], left: u64, acc: f64) -> f64 {
        match demands {
            [] => 0.0,
            [d] => acc * d.powi(left as i32),
            [d, rest @ ..] => (0..=left).map(|k| go(rest, left - k, acc * d.powi(k as i32))).sum(),
        }
    }
    go(demands, n, 1.0)
}

fn convolution_oracle() -> Outcome {
    let start = Instant::now();
    let values = [0.5, 1.0, 2.0];
    let mut vectors = 0;
    for stations in 1..=4u32 {
        for code in 0..3usize.pow(stations) {
            let demands: Vec<f64> = (0..stations).map(|i| values[code / 3usize.pow(i) % 3]).collect();
            let g = normalizing_constant(&demands, 6).map_err(|e| e.to_string())?;
            for n in 0..=6u64 {
                let want = brute_g(&demands, n);
                let rel = (g[n as usize] - want).abs() / want;
                check(rel <= 1e-9, || {
                    format!("G({n}) for {demands:?}: {} vs {want}", g[n as usize])
                })?;

                let model = ProductFormModel::new(demands.clone(), n).map_err(|e| e.to_string())?;
                let total: f64 = enumerate_states(demands.len(), n)
                    .iter()
                    .map(|s| state_probability(&model, s).unwrap())
                    .sum();
                check((total - 1.0).abs() <= 1e-9, || {
                    format!("probabilities for {demands:?}, N={n} sum to {total}")
                })?;
            }
            vectors += 1;
        }
    }
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(10))?;
    Ok(format!("{vectors} demand vectors x N=0..6 in {elapsed:?}"))
}

fn metrics(id: &str, p: f64, u: f64, dt: f64, s: f64) -> SystemMetrics {
    SystemMetrics {
        system_id: id.into(),
        throughput: p,
        utilization: u,
        service_demand: 0.0,
        data_density: dt,
        service_time: s,
        window: Window::new(0.0, 1.0).unwrap(),
    }
}

fn capacity_regression() -> Outcome {
    let totals = StackTotals::new(200.0, 0.8, 100.0).map_err(|e| e.to_string())?;
    let c = compute_capacity(&metrics("a", 50.0, 0.5, 20.0, 0.1), &totals)
        .map_err(|e| e.to_string())?
        .c;
    check((c - 0.17625).abs() <= 1e-12, || format!("worked example gave {c}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for i in 0..100 {
        let (p, pp) = (rng.gen_range(0.0..100.0), rng.gen_range(1.0..500.0));
        let (u, uu) = (rng.gen_range(0.0..1.0), rng.gen_range(0.01..1.0));
        let (dt, dd) = (rng.gen_range(0.0..100.0), rng.gen_range(1.0..500.0));
        let s = rng.gen_range(0.0..2.0);
        let want = p * u / (pp * uu) + dt * s / dd;
        let totals = StackTotals::new(pp, uu, dd).map_err(|e| e.to_string())?;
        let got = compute_capacity(&metrics("r", p, u, dt, s), &totals)
            .map_err(|e| e.to_string())?
            .c;
        check((got - want).abs() <= 1e-12 * want.abs().max(1.0), || {
            format!("input {i}: {got} vs {want}")
        })?;
    }
    Ok("0.17625 and 100 random inputs".into())
}

#[derive(Default)]
struct Auditor {
    accepted: Vec<u64>,
    dequeued: Vec<u64>,
    snapshots: usize,
    failure: Option<String>,
}

impl SimObserver for Auditor {
    fn on_snapshot(&mut self, s: &Snapshot<'_>) {
        self.snapshots += 1;
        let st = s.stats;
        if self.failure.is_none() {
            if st.enqueued != st.dequeued + st.dropped + s.occupancy as u64 {
                self.failure = Some(format!(
                    "t={}: enqueued {} != dequeued {} + dropped {} + residual {}",
                    s.time, st.enqueued, st.dequeued, st.dropped, s.occupancy
                ));
            } else if s.depth < 1 || s.depth > s.cap {
                self.failure = Some(format!("t={}: depth {} outside [1, {}]", s.time, s.depth, s.cap));
            }
        }
    }

    fn on_accept(&mut self, item: &WorkItem) {
        self.accepted.push(item.id);
    }

    fn on_dequeue(&mut self, item: &WorkItem) {
        self.dequeued.push(item.id);
    }
}

fn overload_config(seed: u64) -> SimConfig {
    let systems = vec![
        SystemSpec {
            system_id: "ingest".into(),
            service: ServiceTime::Exponential { mean: 0.01 },
            d_m: 1,
        },
        SystemSpec {
            system_id: "store".into(),
            service: ServiceTime::Exponential { mean: 0.1 },
            d_m: 1,
        },
    ];
    let workload = WorkloadProfile {
        source: "ingest".into(),
        ..WorkloadProfile::new(
            WorkloadKind::Bursty {
                base_rate: 2.0,
                burst_rate: 50.0,
                burst_duration: 2.0,
                period: 10.0,
            },
            200.0,
            seed,
        )
    };
    SimConfig::new(systems, workload, 1.0).with_seed(seed)
}

fn queue_conservation() -> Outcome {
    let mut events = 0;
    for seed in 0..20 {
        let mut cfg = overload_config(seed);
        cfg.cap = 64;
        cfg.workload.kind = WorkloadKind::Bursty {
            base_rate: 8.0,
            burst_rate: 60.0,
            burst_duration: 3.0,
            period: 10.0,
        };
        cfg.workload.duration = 500.0;
        let mut audit = Auditor::default();
        let report = run_simulation_observed(&cfg, &mut audit).map_err(|e| e.to_string())?;
        if let Some(f) = audit.failure {
            return Err(format!("seed {seed}: {f}"));
        }
        check(report.offered >= 10_000, || {
            format!("seed {seed}: only {} events", report.offered)
        })?;
        check(
            audit.dequeued.as_slice() == &audit.accepted[..audit.dequeued.len()],
            || format!("seed {seed}: dequeue order differs from accept order"),
        )?;
        check(report.queue_stats.max_depth_seen <= cfg.cap, || {
            format!("seed {seed}: depth past cap")
        })?;
        events += report.offered;
    }
    Ok(format!("20 seeds, {events} arrivals, conservation and FIFO hold"))
}

fn simulation_determinism() -> Outcome {
    let cfg = overload_config(9);
    let a = serde_json::to_vec(&run_simulation(&cfg).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let b = serde_json::to_vec(&run_simulation(&cfg).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    check(a == b, || "two in-process runs differ".into())?;

    let config = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/bursty.json");
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_endurq"))
            .args(["simulate", config, "--seed", "4"])
            .output()
            .map_err(|e| e.to_string())
    };
    let (p, q) = (run()?, run()?);
    check(p.status.success() && q.status.success(), || {
        format!("simulate failed: {}", String::from_utf8_lossy(&p.stderr))
    })?;
    check(p.stdout == q.stdout && !p.stdout.is_empty(), || {
        "two processes differ".into()
    })?;
    Ok(format!(
        "{} byte report identical in-process; {} bytes across processes",
        a.len(),
        p.stdout.len()
    ))
}

fn throttle_reduction() -> Outcome {
    let mut lines = Vec::new();
    for seed in 0..10 {
        let cmp = compare_baseline(&overload_config(seed)).map_err(|e| e.to_string())?;
        let (e, f) = (cmp.endurance.dropped, cmp.fixed.dropped);
        check(e < f, || format!("seed {seed}: endurance {e} vs fixed {f}"))?;
        lines.push(format!("{e}<{f}"));
    }
    Ok(format!("drops per seed {}", lines.join(" ")))
}

fn heatmap_conservation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let ids: Vec<String> = ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
    for i in 0..50 {
        let n = rng.gen_range(0..200);
        let events = (0..n)
            .map(|_| TraceEvent {
                timestamp: rng.gen_range(0.0..100.0),
                system_id: ids[rng.gen_range(0..ids.len())].clone(),
                item_count: rng.gen_range(1..5),
            })
            .collect();
        let trace = EventTrace::new(events).map_err(|e| e.to_string())?;
        let width = rng.gen_range(0.5..10.0);
        let hm = build_heatmap(&trace, width, &ids).map_err(|e| e.to_string())?;
        check(hm.total() == trace.total_items(), || {
            format!("trace {i}: {} cells vs {} items", hm.total(), trace.total_items())
        })?;
        let csv = export_heatmap(&hm, ExportFormat::Csv);
        let back = HeatMap::from_csv(csv.as_slice(), width).map_err(|e| e.to_string())?;
        check(back.systems == hm.systems && back.density == hm.density, || {
            format!("trace {i}: CSV round trip differs")
        })?;
    }
    Ok("50 traces conserve items and round-trip".into())
}

fn partition_validity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for i in 0..100 {
        let n = rng.gen_range(2..30);
        let k = rng.gen_range(1..=n);
        let mut cs: Vec<f64> = Vec::new();
        while cs.len() < n {
            let c = rng.gen_range(0.0..10.0);
            if !cs.contains(&c) {
                cs.push(c);
            }
        }
        let scores: Vec<CapacityScore> = cs
            .iter()
            .enumerate()
            .map(|(j, &c)| CapacityScore {
                system_id: format!("s{j}"),
                c,
            })
            .collect();
        let part = partition_systems(&scores, k).map_err(|e| e.to_string())?;
        check(part.sets.len() == k && part.sets.iter().all(|g| !g.is_empty()), || {
            format!("vector {i}: bad group shape")
        })?;
        for g in 0..k - 1 {
            let sup = part.sup(g).unwrap();
            let next_min = part.sets[g + 1].iter().map(|s| s.c).fold(f64::INFINITY, f64::min);
            check(sup < next_min, || {
                format!("vector {i}: sup of group {g} = {sup} >= {next_min}")
            })?;
        }
        check(!part.is_degenerate(), || {
            format!("vector {i}: distinct values flagged degenerate")
        })?;
    }

    let ties: Vec<CapacityScore> = (0..6)
        .map(|j| CapacityScore {
            system_id: format!("t{j}"),
            c: if j < 4 { 1.0 } else { 2.0 },
        })
        .collect();
    let part = partition_systems(&ties, 3).map_err(|e| e.to_string())?;
    check(part.is_degenerate(), || "tied input not flagged".into())?;
    let all_equal = vec![
        CapacityScore {
            system_id: "x".into(),
            c: 0.5
        };
        4
    ];
    check(
        partition_systems(&all_equal, 4)
            .map_err(|e| e.to_string())?
            .is_degenerate(),
        || "all-equal input not flagged".into(),
    )?;
    Ok("100 distinct vectors sup-ordered; ties flagged".into())
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("ackermann correctness", ackermann_correctness),
        ("saturation", saturation),
        ("monitor base cases", monitor_base_cases),
        ("convolution oracle equivalence", convolution_oracle),
        ("capacity regression vector", capacity_regression),
        ("queue conservation", queue_conservation),
        ("simulation determinism", simulation_determinism),
        ("throttle reduction", throttle_reduction),
        ("heat-map conservation", heatmap_conservation),
        ("partition validity", partition_validity),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
