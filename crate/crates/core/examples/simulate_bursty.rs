//! Runs the bundled bursty config and prints the report summary, with a
//! per-bucket depth trace from an observer.
//!
//! Run with: cargo run --example simulate_bursty [CONFIG]

use std::path::PathBuf;

use endurq::sim::{run_simulation_observed, SimConfig, SimObserver, Snapshot};

#[derive(Default)]
struct DepthLog {
    rows: Vec<(f64, u64, usize)>,
}

impl SimObserver for DepthLog {
    fn on_snapshot(&mut self, s: &Snapshot<'_>) {
        self.rows.push((s.time, s.depth, s.occupancy));
    }
}

fn main() -> endurq::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/bursty.json")));
    let cfg = SimConfig::from_json_file(&path)?;
    let mut log = DepthLog::default();
    let r = run_simulation_observed(&cfg, &mut log)?;

    println!(
        "offered {}, completed {}, dropped {}, in flight {}",
        r.offered, r.completed, r.dropped, r.in_flight
    );
    println!(
        "throughput {:.3}/s, mean latency {:.3} s, mean in system {:.2}",
        r.end_to_end_throughput, r.mean_latency, r.mean_in_system
    );
    println!(
        "placed at boundary {} bucket {}, now bucket {}; {} migration(s)",
        r.placement.boundary_index, r.placement.bucket_index, r.final_placement.bucket_index, r.queue_stats.migrations
    );
    for m in &r.per_system {
        println!(
            "  {:<8} p {:.2}/s  u {:.2}  D {:.4} s",
            m.system_id, m.throughput, m.utilization, m.service_demand
        );
    }

    println!("\ndepth every 20 s:");
    for (t, depth, occupancy) in log.rows.iter().step_by(20) {
        println!("  t={t:>5.0}  depth {depth:>4}  occupancy {occupancy:>4}");
    }
    println!("final depth {}, growth index {}", r.final_depth, r.growth_index);
    Ok(())
}
